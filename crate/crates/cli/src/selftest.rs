//! Quick checks of degenerate and bookkeeping cases.

use trimul_core::bound_verifier::{estimate_operator_norm, required_smoothness, NormSearch};
use trimul_core::coeff_analysis::{analyze, cube_axes, MultiplierGrid};
use trimul_core::export::{to_stable_json, CsvTable};
use trimul_core::grid::Axis;
use trimul_core::index_partition::{full_partition, WeightedIndexSet};
use trimul_core::trilinear_engine::{apply_direct, make_bump_hat, TestFunctionTriple};
use trimul_core::wavelet_frame::build_wavelet_system;

use crate::report::digest;

pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<String, String>) -> Check {
    match f() {
        Ok(detail) => Check {
            name,
            passed: true,
            detail,
        },
        Err(detail) => Check {
            name,
            passed: false,
            detail,
        },
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

pub fn run_all() -> Vec<Check> {
    vec![
        check("zero multiplier has no coefficients", || {
            let sys = build_wavelet_system(2, 10).map_err(err)?;
            let m = MultiplierGrid::zeros(1, cube_axes(1, -1.0, 1.0, 32).map_err(err)?).map_err(err)?;
            let c = analyze(&m, &sys, 2).map_err(err)?;
            if c.is_empty() {
                Ok("0 records".into())
            } else {
                Err(format!("{} records", c.len()))
            }
        }),
        check("zero multiplier has zero norm estimate", || {
            let m = MultiplierGrid::zeros(1, cube_axes(1, -1.0, 1.0, 8).map_err(err)?).map_err(err)?;
            let search = NormSearch {
                trials: 2,
                ascent_steps: 4,
                seed: 0,
                x_len: 16,
            };
            let e = estimate_operator_norm(&m, &search).map_err(err)?;
            if e.lower_bound == 0.0 {
                Ok("0".into())
            } else {
                Err(format!("{}", e.lower_bound))
            }
        }),
        check("unit multiplier gives the pointwise product", || {
            let ax = Axis::new(-1.0, 1.0, 16).map_err(err)?;
            let m = MultiplierGrid::from_fn(1, vec![ax.clone(); 3], |_| 1.0).map_err(err)?;
            let f = make_bump_hat(0.0, 0.8, &ax).map_err(err)?;
            let fns = TestFunctionTriple::new(vec![ax], [f.clone(), f.clone(), f]).map_err(err)?;
            let x = vec![Axis::new(-4.0, 4.0, 32).map_err(err)?];
            let t = apply_direct(&m, &fns, &x).map_err(err)?;
            let g = fns.inverse_transform(0, &x).map_err(err)?;
            let gap = t
                .samples
                .iter()
                .zip(&g)
                .map(|(a, b)| (a - b * b * b).norm())
                .fold(0.0, f64::max);
            let scale = g.iter().map(|z| z.norm().powi(3)).fold(0.0, f64::max);
            if gap <= 1e-8 * scale.max(1.0) {
                Ok(format!("max gap {gap:.2e}"))
            } else {
                Err(format!("max gap {gap:.2e}"))
            }
        }),
        check("empty index set partitions to a single leaf", || {
            let t = full_partition(&WeightedIndexSet::new(1), 2.0).map_err(err)?;
            let v = t.verify();
            if v.ok() && v.leaves <= 1 {
                Ok(format!("{} nodes", v.nodes))
            } else {
                Err(format!("{v:?}"))
            }
        }),
        check("smoothness table", || {
            let got: Vec<u32> = [1.0, 2.0, 2.9]
                .iter()
                .map(|q| required_smoothness(*q, 1))
                .collect::<Result<_, _>>()
                .map_err(err)?;
            if got == [2, 4, 31] {
                Ok(format!("{got:?}"))
            } else {
                Err(format!("{got:?}"))
            }
        }),
        check("identical results give identical digests", || {
            let v = vec![1.0 / 3.0, std::f64::consts::PI, -0.0];
            let a = digest(to_stable_json(&v).map_err(err)?.as_bytes());
            let b = digest(to_stable_json(&v).map_err(err)?.as_bytes());
            if a == b {
                Ok(a[..12].to_string())
            } else {
                Err(format!("{a} != {b}"))
            }
        }),
        check("csv has one header row", || {
            let mut t = CsvTable::new(&["a", "b"]);
            for i in 0..5 {
                t.push_floats(&[i as f64, 0.5]);
            }
            let lines = t.render().lines().count();
            if lines == 6 {
                Ok("6 lines".into())
            } else {
                Err(format!("{lines} lines"))
            }
        }),
        check("json round-trips exactly", || {
            let v: Vec<f64> = vec![0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5];
            let back: Vec<f64> = serde_json::from_str(&to_stable_json(&v).map_err(err)?).map_err(err)?;
            if back == v {
                Ok("5 values".into())
            } else {
                Err(format!("{back:?}"))
            }
        }),
    ]
}
