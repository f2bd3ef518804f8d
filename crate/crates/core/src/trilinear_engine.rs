//! Discretised trilinear multiplier operator
//! `T_m(f1,f2,f3)(x) = ∫∫∫ m(ξ,η,δ) f̂1(ξ) f̂2(η) f̂3(δ) e^{2πi x·(ξ+η+δ)} dξ dη dδ`.
//!
//! The three transforms live on one shared midpoint frequency lattice and all
//! integrals are Riemann sums over it. Because the lattice is uniform, the sum
//! over triples collapses onto the sum lattice `s = ξ+η+δ` before the inverse
//! transform; the result is the same sum, reordered. Outputs are periodic in
//! `x` with period `1/h` on an axis of step `h`.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::coeff_analysis::{CoeffTensor, MultiplierGrid};
use crate::error::{Error, Result};
use crate::export::CsvTable;
use crate::grid::Axis;
use crate::wavelet_frame::{FrameIndex, Kind, WaveletSystem};

fn expi(t: f64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * t)
}

fn unravel(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for r in (0..shape.len()).rev() {
        idx[r] = flat % shape[r];
        flat /= shape[r];
    }
    idx
}

fn lattice_points(axes: &[Axis]) -> Vec<Vec<f64>> {
    let shape: Vec<usize> = axes.iter().map(|a| a.len).collect();
    (0..shape.iter().product())
        .map(|f| unravel(f, &shape).iter().zip(axes).map(|(i, a)| a.point(*i)).collect())
        .collect()
}

/// Three frequency-side test functions on a shared lattice in `R^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct TestFunctionTriple {
    d: usize,
    freq: Vec<Axis>,
    fhat: [Vec<Complex64>; 3],
    l2: [f64; 3],
}

impl TestFunctionTriple {
    pub fn new(freq: Vec<Axis>, fhat: [Vec<Complex64>; 3]) -> Result<Self> {
        if freq.is_empty() {
            return Err(Error::param("freq", "need at least one axis"));
        }
        let n: usize = freq.iter().map(|a| a.len).product();
        for (i, f) in fhat.iter().enumerate() {
            if f.len() != n {
                return Err(Error::param("fhat", format!("f{} has {} samples, lattice has {n}", i + 1, f.len())));
            }
            if f.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::NonFinite("fhat"));
            }
        }
        let vol: f64 = freq.iter().map(|a| a.step()).product();
        let l2 = std::array::from_fn(|i| (fhat[i].iter().map(|z| z.norm_sqr()).sum::<f64>() * vol).sqrt());
        Ok(TestFunctionTriple {
            d: freq.len(),
            freq,
            fhat,
            l2,
        })
    }

    pub fn from_fn(freq: Vec<Axis>, fs: [&dyn Fn(&[f64]) -> Complex64; 3]) -> Result<Self> {
        let pts = lattice_points(&freq);
        let fhat = std::array::from_fn(|i| pts.iter().map(|p| fs[i](p)).collect());
        Self::new(freq, fhat)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn freq(&self) -> &[Axis] {
        &self.freq
    }

    pub fn fhat(&self, i: usize) -> &[Complex64] {
        &self.fhat[i]
    }

    /// `‖f_i‖_{L²}` by Plancherel from the frequency samples.
    pub fn l2_norm(&self, i: usize) -> f64 {
        self.l2[i]
    }

    pub fn cell_volume(&self) -> f64 {
        self.freq.iter().map(|a| a.step()).product()
    }

    /// Copy with function `i` replaced.
    pub fn with_function(&self, i: usize, fhat: Vec<Complex64>) -> Result<Self> {
        let mut all = self.fhat.clone();
        all[i] = fhat;
        Self::new(self.freq.clone(), all)
    }

    /// Per-axis `[lo, hi]` spanned by the cells where `f̂_i ≠ 0`.
    pub fn support(&self, i: usize) -> Option<Vec<(f64, f64)>> {
        let shape: Vec<usize> = self.freq.iter().map(|a| a.len).collect();
        let mut lo = vec![usize::MAX; self.d];
        let mut hi = vec![0; self.d];
        let mut any = false;
        for (f, z) in self.fhat[i].iter().enumerate() {
            if *z != Complex64::new(0.0, 0.0) {
                any = true;
                for (a, k) in unravel(f, &shape).into_iter().enumerate() {
                    lo[a] = lo[a].min(k);
                    hi[a] = hi[a].max(k);
                }
            }
        }
        any.then(|| {
            (0..self.d)
                .map(|a| {
                    let h = self.freq[a].step();
                    (self.freq[a].lo + lo[a] as f64 * h, self.freq[a].lo + (hi[a] + 1) as f64 * h)
                })
                .collect()
        })
    }

    /// `f_i(x) = Σ_ξ f̂_i(ξ) e^{2πi x·ξ} · cell volume` on the lattice `x_axes`.
    pub fn inverse_transform(&self, i: usize, x_axes: &[Axis]) -> Result<Vec<Complex64>> {
        check_x_axes(self.d, x_axes)?;
        let window = vec![1.0; self.fhat[i].len()];
        Ok(windowed_transform(&self.freq, &self.fhat[i], &window, x_axes))
    }
}

fn check_x_axes(d: usize, x_axes: &[Axis]) -> Result<()> {
    if x_axes.len() != d {
        return Err(Error::IncompatibleGrid(format!("{} spatial axes for d = {d}", x_axes.len())));
    }
    Ok(())
}

/// `Σ_ξ w(ξ) f̂(ξ) e^{2πi x·ξ} · vol` at every lattice point `x`.
fn windowed_transform(freq: &[Axis], fhat: &[Complex64], window: &[f64], x_axes: &[Axis]) -> Vec<Complex64> {
    let vol: f64 = freq.iter().map(|a| a.step()).product();
    let shape: Vec<usize> = freq.iter().map(|a| a.len).collect();
    let active: Vec<(Vec<usize>, Complex64)> = fhat
        .iter()
        .zip(window)
        .enumerate()
        .filter(|(_, (z, w))| **w != 0.0 && **z != Complex64::new(0.0, 0.0))
        .map(|(f, (z, w))| (unravel(f, &shape), z * *w))
        .collect();
    let xshape: Vec<usize> = x_axes.iter().map(|a| a.len).collect();
    // per-axis phase tables e^{2πi x_a ξ_a}
    let phases: Vec<Vec<Complex64>> = (0..freq.len())
        .map(|a| {
            let xs = x_axes[a].points();
            let ks = freq[a].points();
            xs.iter().flat_map(|x| ks.iter().map(move |k| expi(x * k))).collect()
        })
        .collect();
    (0..xshape.iter().product())
        .into_par_iter()
        .map(|xf| {
            let xi = unravel(xf, &xshape);
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, z) in &active {
                let mut e = *z;
                for a in 0..k.len() {
                    e *= phases[a][xi[a] * shape[a] + k[a]];
                }
                acc += e;
            }
            acc * vol
        })
        .collect()
}

/// Samples `T(x)` on a spatial lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputField {
    pub x_axes: Vec<Axis>,
    pub samples: Vec<Complex64>,
    pub cell_volume: f64,
}

impl OutputField {
    pub fn new(x_axes: Vec<Axis>, samples: Vec<Complex64>) -> Result<Self> {
        let n: usize = x_axes.iter().map(|a| a.len).product();
        if samples.len() != n {
            return Err(Error::param("samples", format!("{} samples for a lattice of {n}", samples.len())));
        }
        if samples.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("output field"));
        }
        let cell_volume = x_axes.iter().map(|a| a.step()).product();
        Ok(OutputField {
            x_axes,
            samples,
            cell_volume,
        })
    }

    pub fn zeros(x_axes: Vec<Axis>) -> Self {
        let n: usize = x_axes.iter().map(|a| a.len).product();
        let cell_volume = x_axes.iter().map(|a| a.step()).product();
        OutputField {
            x_axes,
            samples: vec![Complex64::new(0.0, 0.0); n],
            cell_volume,
        }
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        lattice_points(&self.x_axes)
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// `α·self + β·other` on the same lattice.
    pub fn linear_combination(&self, alpha: Complex64, other: &OutputField, beta: Complex64) -> Result<Self> {
        if self.x_axes != other.x_axes {
            return Err(Error::IncompatibleGrid("spatial lattices differ".into()));
        }
        let samples = self.samples.iter().zip(&other.samples).map(|(a, b)| alpha * a + beta * b).collect();
        OutputField::new(self.x_axes.clone(), samples)
    }

    pub fn max_abs_diff(&self, other: &OutputField) -> f64 {
        self.samples
            .iter()
            .zip(&other.samples)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    /// Columns `x_1..x_d, re, im, abs`.
    pub fn to_csv(&self) -> CsvTable {
        let mut header: Vec<String> = (1..=self.x_axes.len()).map(|a| format!("x{a}")).collect();
        header.extend(["re", "im", "abs"].map(String::from));
        let refs: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut t = CsvTable::new(&refs);
        for (p, z) in self.points().into_iter().zip(&self.samples) {
            let mut row = p;
            row.extend([z.re, z.im, z.norm()]);
            t.push_floats(&row);
        }
        t
    }
}

/// `(Σ |T(x)|^p · cell volume)^{1/p}`; a quasi-norm for `p < 1`.
pub fn quasi_norm(field: &OutputField, p: f64) -> Result<f64> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::ExponentOutOfRange { q: p, range: "(0, ∞)" });
    }
    let s: f64 = field.samples.iter().map(|z| z.norm().powf(p)).sum();
    Ok((s * field.cell_volume).powf(1.0 / p))
}

/// Symmetric spatial lattice `[-half_width, half_width]^d` with `len` cells per axis.
pub fn spatial_axes(d: usize, half_width: f64, len: usize) -> Result<Vec<Axis>> {
    (0..d).map(|_| Axis::new(-half_width, half_width, len)).collect()
}

/// `exp(1 - 1/(1-t²))` at `t = (ξ - center)/width`, zero for `|t| ≥ 1`; peak value 1.
pub fn bump_profile(xi: f64, center: f64, width: f64) -> f64 {
    let t = (xi - center) / width;
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

pub fn make_bump_hat(center: f64, width: f64, axis: &Axis) -> Result<Vec<Complex64>> {
    if !(width > 0.0 && width.is_finite() && center.is_finite()) {
        return Err(Error::param("width", format!("need a finite positive width, got {width}")));
    }
    Ok(axis
        .points()
        .into_iter()
        .map(|x| Complex64::new(bump_profile(x, center, width), 0.0))
        .collect())
}

/// `m` sampled once on the triple frequency lattice, reusable across inputs.
#[derive(Clone, Debug)]
pub struct DirectOperator {
    d: usize,
    freq: Vec<Axis>,
    m_box: Vec<(f64, f64)>,
    /// `m(ξ,η,δ)` at flat index `(ξ·N + η)·N + δ`, `N` lattice points per function.
    samples: Vec<f64>,
}

impl DirectOperator {
    pub fn new(m: &MultiplierGrid, freq: Vec<Axis>) -> Result<Self> {
        let d = m.d();
        if freq.len() != d {
            return Err(Error::IncompatibleGrid(format!("{} frequency axes for d = {d}", freq.len())));
        }
        let aligned = (0..3).all(|i| (0..d).all(|a| m.axes()[i * d + a] == freq[a]));
        let samples = if aligned {
            m.values().to_vec()
        } else {
            let pts = lattice_points(&freq);
            let n = pts.len();
            (0..n * n * n)
                .into_par_iter()
                .map(|f| {
                    let (x, y, z) = (f / (n * n), f / n % n, f % n);
                    let p: Vec<f64> = pts[x].iter().chain(&pts[y]).chain(&pts[z]).copied().collect();
                    m.value_at(&p)
                })
                .collect()
        };
        let m_box = m.axes().iter().map(|a| (a.lo, a.hi)).collect();
        Ok(DirectOperator { d, freq, m_box, samples })
    }

    pub fn freq(&self) -> &[Axis] {
        &self.freq
    }

    fn check_support(&self, fns: &TestFunctionTriple) -> Result<()> {
        if fns.freq != self.freq {
            return Err(Error::IncompatibleGrid("test functions use a different frequency lattice".into()));
        }
        let tol = 1e-12 * self.freq.iter().map(|a| a.hi - a.lo).fold(1.0, f64::max);
        for i in 0..3 {
            let Some(sup) = fns.support(i) else { continue };
            for (a, (lo, hi)) in sup.into_iter().enumerate() {
                let (blo, bhi) = self.m_box[i * self.d + a];
                if lo < blo - tol || hi > bhi + tol {
                    return Err(Error::FrequencySupportExceeds {
                        function: i + 1,
                        lo,
                        hi,
                        box_lo: blo,
                        box_hi: bhi,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn apply(&self, fns: &TestFunctionTriple, x_axes: &[Axis]) -> Result<OutputField> {
        self.check_support(fns)?;
        check_x_axes(self.d, x_axes)?;
        let shape: Vec<usize> = self.freq.iter().map(|a| a.len).collect();
        let n: usize = shape.iter().product();
        let sshape: Vec<usize> = shape.iter().map(|m| 3 * m - 2).collect();
        let sn: usize = sshape.iter().product();
        let sflat = |x: usize, y: usize, z: usize| {
            let (a, b, c) = (unravel(x, &shape), unravel(y, &shape), unravel(z, &shape));
            (0..shape.len()).fold(0, |acc, r| acc * sshape[r] + a[r] + b[r] + c[r])
        };
        let active = |i: usize| -> Vec<usize> {
            (0..n).filter(|&f| fns.fhat[i][f] != Complex64::new(0.0, 0.0)).collect()
        };
        let (a1, a2, a3) = (active(0), active(1), active(2));
        let zero = Complex64::new(0.0, 0.0);
        let c: Vec<Complex64> = a1
            .par_iter()
            .fold(
                || vec![zero; sn],
                |mut acc, &x| {
                    let fx = fns.fhat[0][x];
                    for &y in &a2 {
                        let fxy = fx * fns.fhat[1][y];
                        let row = (x * n + y) * n;
                        for &z in &a3 {
                            let m = self.samples[row + z];
                            if m != 0.0 {
                                acc[sflat(x, y, z)] += fxy * fns.fhat[2][z] * m;
                            }
                        }
                    }
                    acc
                },
            )
            .reduce(
                || vec![zero; sn],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(u, v)| *u += v);
                    a
                },
            );
        let vol3 = fns.cell_volume().powi(3);
        let sum_axes: Vec<Axis> = self
            .freq
            .iter()
            .map(|a| {
                let h = a.step();
                // midpoints of the sum lattice are 3·point(0) + t·h
                let lo = 3.0 * a.point(0) - 0.5 * h;
                Axis::new(lo, lo + (3 * a.len - 2) as f64 * h, 3 * a.len - 2)
            })
            .collect::<Result<_>>()?;
        let window = vec![1.0; sn];
        let mut samples = windowed_transform(&sum_axes, &c, &window, x_axes);
        let sum_vol: f64 = sum_axes.iter().map(|a| a.step()).product();
        for z in &mut samples {
            *z *= vol3 / sum_vol;
        }
        OutputField::new(x_axes.to_vec(), samples)
    }
}

/// Riemann-sum evaluation of `T_m(f1,f2,f3)` on `x_axes`.
pub fn apply_direct(m: &MultiplierGrid, fns: &TestFunctionTriple, x_axes: &[Axis]) -> Result<OutputField> {
    DirectOperator::new(m, fns.freq.clone())?.apply(fns, x_axes)
}

/// Per-block window `ω_{i,k}(ξ) = ∏_a 2^{j/2} φ_{G_a}(2^j ξ_a − k_a)` on the lattice.
pub fn block_window(sys: &WaveletSystem, freq: &[Axis], j: u32, kinds: &[Kind], k: &[i64]) -> Vec<f64> {
    let shape: Vec<usize> = freq.iter().map(|a| a.len).collect();
    let per_axis: Vec<Vec<f64>> = (0..freq.len())
        .map(|a| freq[a].points().into_iter().map(|x| sys.eval_1d(kinds[a], j, k[a], x)).collect())
        .collect();
    (0..shape.iter().product())
        .map(|f| unravel(f, &shape).iter().enumerate().map(|(a, &i)| per_axis[a][i]).product())
        .collect()
}

/// `Σ_{n ∈ family} b_n ∏_i F^{-1}(ω_{i,k_i} f̂_i)(x)`; `None` sums over all of `c`.
pub fn apply_wavelet_form(
    c: &CoeffTensor,
    family: Option<&[FrameIndex]>,
    sys: &WaveletSystem,
    fns: &TestFunctionTriple,
    x_axes: &[Axis],
) -> Result<OutputField> {
    let d = fns.d;
    if c.dim() != 3 * d {
        return Err(Error::IncompatibleGrid(format!("tensor dimension {} for d = {d}", c.dim())));
    }
    check_x_axes(d, x_axes)?;
    let terms: Vec<(FrameIndex, f64)> = match family {
        Some(f) => f
            .iter()
            .map(|idx| match c.get(idx) {
                Some(b) => Ok((idx.clone(), b)),
                None => Err(Error::MissingIndex(format!("j={} G={} n={:?}", idx.j, idx.g, idx.n))),
            })
            .collect::<Result<_>>()?,
        None => c.iter().map(|(i, b)| (i.clone(), b)).collect(),
    };
    type Key = (usize, u32, Vec<Kind>, Vec<i64>);
    let key = |t: &FrameIndex, i: usize| -> Key {
        let kinds: Vec<Kind> = t.g.kinds().collect();
        (i, t.j, kinds[i * d..(i + 1) * d].to_vec(), t.n[i * d..(i + 1) * d].to_vec())
    };
    let mut keys: Vec<Key> = terms.iter().flat_map(|(t, _)| (0..3).map(move |i| key(t, i))).collect();
    keys.sort();
    keys.dedup();
    let cache: HashMap<Key, Vec<Complex64>> = keys
        .into_par_iter()
        .map(|k| {
            let w = block_window(sys, &fns.freq, k.1, &k.2, &k.3);
            let t = windowed_transform(&fns.freq, &fns.fhat[k.0], &w, x_axes);
            (k, t)
        })
        .collect();
    let mut out = OutputField::zeros(x_axes.to_vec());
    for (t, b) in &terms {
        let (w1, w2, w3) = (&cache[&key(t, 0)], &cache[&key(t, 1)], &cache[&key(t, 2)]);
        out.samples
            .par_iter_mut()
            .enumerate()
            .for_each(|(x, z)| *z += w1[x] * w2[x] * w3[x] * *b);
    }
    Ok(out)
}
