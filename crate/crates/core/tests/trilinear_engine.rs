use num_complex::Complex64;
use proptest::prelude::*;
use trimul_core::coeff_analysis::*;
use trimul_core::error::Error;
use trimul_core::grid::Axis;
use trimul_core::trilinear_engine::*;
use trimul_core::wavelet_frame::*;

const PRODUCT_TOL: f64 = 1e-8;
const LINEARITY_TOL: f64 = 1e-10;
const CROSS_PATH_TOL: f64 = 1e-3;
const BUMP_L2_TOL: f64 = 1e-6;

fn freq_axis(m: usize) -> Axis {
    Axis::new(-1.0, 1.0, m).unwrap()
}

fn bumps(m: usize) -> TestFunctionTriple {
    let ax = freq_axis(m);
    let f1 = make_bump_hat(-0.3, 0.5, &ax).unwrap();
    let mut f2 = make_bump_hat(0.2, 0.6, &ax).unwrap();
    for (k, z) in f2.iter_mut().enumerate() {
        *z *= Complex64::from_polar(1.0, 0.3 * k as f64);
    }
    let f3: Vec<Complex64> = make_bump_hat(0.1, 0.8, &ax)
        .unwrap()
        .iter()
        .zip(ax.points())
        .map(|(z, x)| z * Complex64::new(1.0, -x))
        .collect();
    TestFunctionTriple::new(vec![ax], [f1, f2, f3]).unwrap()
}

fn rel_diff(a: &OutputField, b: &OutputField, p: f64) -> f64 {
    let diff = a.linear_combination(Complex64::new(1.0, 0.0), b, Complex64::new(-1.0, 0.0)).unwrap();
    quasi_norm(&diff, p).unwrap() / quasi_norm(b, p).unwrap()
}

fn x_axes() -> Vec<Axis> {
    // one full period of the M = 32 lattice on [-1, 1]
    spatial_axes(1, 8.0, 96).unwrap()
}

#[test]
fn constant_multiplier_gives_pointwise_product() {
    let fns = bumps(32);
    let ax = fns.freq()[0].clone();
    let m = MultiplierGrid::from_fn(1, vec![ax; 3], |_| 1.0).unwrap();
    let xs = x_axes();
    let out = apply_direct(&m, &fns, &xs).unwrap();
    let f: Vec<_> = (0..3).map(|i| fns.inverse_transform(i, &xs).unwrap()).collect();
    let scale = out.max_abs();
    for x in 0..out.samples.len() {
        let want = f[0][x] * f[1][x] * f[2][x];
        assert!((out.samples[x] - want).norm() <= PRODUCT_TOL * scale);
    }
}

#[test]
fn first_variable_multiplier_filters_f1() {
    let fns = bumps(24);
    let ax = fns.freq()[0].clone();
    let a = |x: f64| (3.0 * x).sin() + 0.5;
    let m = MultiplierGrid::from_fn(1, vec![ax.clone(); 3], move |p| a(p[0])).unwrap();
    let xs = x_axes();
    let out = apply_direct(&m, &fns, &xs).unwrap();
    let filtered: Vec<Complex64> = fns.fhat(0).iter().zip(ax.points()).map(|(z, x)| z * a(x)).collect();
    let ff = fns.with_function(0, filtered).unwrap();
    let f: Vec<_> = (0..3).map(|i| ff.inverse_transform(i, &xs).unwrap()).collect();
    let scale = out.max_abs();
    for x in 0..out.samples.len() {
        assert!((out.samples[x] - f[0][x] * f[1][x] * f[2][x]).norm() <= PRODUCT_TOL * scale);
    }
}

#[test]
fn direct_is_trilinear_and_linear_in_m() {
    let fns = bumps(20);
    let ax = fns.freq()[0].clone();
    let m1 = MultiplierGrid::from_fn(1, vec![ax.clone(); 3], |p| (p[0] - p[1] * p[2]).cos()).unwrap();
    let m2 = MultiplierGrid::from_fn(1, vec![ax.clone(); 3], |p| p[0] * p[1] + p[2]).unwrap();
    let xs = spatial_axes(1, 5.0, 40).unwrap();
    let base = apply_direct(&m1, &fns, &xs).unwrap();
    let scale = base.max_abs();

    let (al, be) = (Complex64::new(0.7, -0.4), Complex64::new(-1.3, 0.2));
    let g: Vec<Complex64> = ax.points().iter().map(|&x| Complex64::new((5.0 * x).cos() * (1.0 - x * x), x)).collect();
    for i in 0..3 {
        let mixed: Vec<Complex64> = fns.fhat(i).iter().zip(&g).map(|(f, g)| al * f + be * g).collect();
        let lhs = apply_direct(&m1, &fns.with_function(i, mixed).unwrap(), &xs).unwrap();
        let other = apply_direct(&m1, &fns.with_function(i, g.clone()).unwrap(), &xs).unwrap();
        let rhs = base.linear_combination(al, &other, be).unwrap();
        assert!(lhs.max_abs_diff(&rhs) <= LINEARITY_TOL * scale, "slot {i}");
    }

    let combo = m1.linear_combination(2.0, &m2, -0.5).unwrap();
    let lhs = apply_direct(&combo, &fns, &xs).unwrap();
    let t2 = apply_direct(&m2, &fns, &xs).unwrap();
    let rhs = base.linear_combination(Complex64::new(2.0, 0.0), &t2, Complex64::new(-0.5, 0.0)).unwrap();
    assert!(lhs.max_abs_diff(&rhs) <= LINEARITY_TOL * scale);
}

#[test]
fn interpolated_multiplier_matches_aligned_samples() {
    // a multiplier given on a finer grid is interpolated onto the lattice
    let fns = bumps(16);
    let coarse = fns.freq()[0].clone();
    let f = |p: &[f64]| 1.0 + 0.3 * p[0] - 0.2 * p[1] + 0.1 * p[2];
    let aligned = MultiplierGrid::from_fn(1, vec![coarse; 3], f).unwrap();
    let fine = MultiplierGrid::from_fn(1, vec![Axis::new(-1.0, 1.0, 64).unwrap(); 3], f).unwrap();
    let xs = spatial_axes(1, 4.0, 32).unwrap();
    let a = apply_direct(&aligned, &fns, &xs).unwrap();
    let b = apply_direct(&fine, &fns, &xs).unwrap();
    // linear m: interpolation is exact away from the boundary half-cells, where f̂ vanishes
    assert!(a.max_abs_diff(&b) <= 1e-12 * a.max_abs());
}

#[test]
fn support_outside_box_is_refused() {
    let fns = bumps(32);
    let m = MultiplierGrid::from_fn(1, vec![Axis::new(-0.5, 0.5, 16).unwrap(); 3], |_| 1.0).unwrap();
    match apply_direct(&m, &fns, &x_axes()) {
        Err(Error::FrequencySupportExceeds { function: 1, .. }) => {}
        other => panic!("{other:?}"),
    }
}

#[test]
fn wavelet_form_agrees_with_direct_on_reconstruction() {
    let fns = bumps(32);
    let ax = fns.freq()[0].clone();
    let sys = build_wavelet_system(2, 14).unwrap();
    let m = MultiplierGrid::from_fn(1, vec![ax.clone(); 3], |p| {
        (-(p[0] * p[0] + 2.0 * p[1] * p[1] + (p[2] - 0.2).powi(2)) / 0.3).exp()
    })
    .unwrap();
    let c = analyze(&m, &sys, 2).unwrap();
    let rec = reconstruct(&c, &sys, 1, &[ax.clone(), ax.clone(), ax]).unwrap();
    let xs = x_axes();
    let direct = apply_direct(&rec, &fns, &xs).unwrap();
    let wave = apply_wavelet_form(&c, None, &sys, &fns, &xs).unwrap();
    let rel = rel_diff(&wave, &direct, 2.0 / 3.0);
    assert!(rel <= CROSS_PATH_TOL, "relative L^(2/3) difference {rel:e}");
}

#[test]
fn wavelet_form_trivial_families() {
    let fns = bumps(16);
    let sys = build_wavelet_system(2, 12).unwrap();
    let mut c = CoeffTensor::new(3, 1, "test");
    let idx = FrameIndex::new(1, "MFM".parse().unwrap(), vec![-1, 0, 0]).unwrap();
    c.insert(idx.clone(), 0.75).unwrap();
    let xs = spatial_axes(1, 4.0, 24).unwrap();

    let empty = apply_wavelet_form(&c, Some(&[]), &sys, &fns, &xs).unwrap();
    assert_eq!(empty.max_abs(), 0.0);

    let one = apply_wavelet_form(&c, Some(std::slice::from_ref(&idx)), &sys, &fns, &xs).unwrap();
    let ax = fns.freq()[0].clone();
    let kinds: Vec<Kind> = idx.g.kinds().collect();
    let mut expect = vec![Complex64::new(0.75, 0.0); one.samples.len()];
    for i in 0..3 {
        let windowed: Vec<Complex64> = fns
            .fhat(i)
            .iter()
            .zip(ax.points())
            .map(|(z, x)| z * sys.eval_1d(kinds[i], 1, idx.n[i], x))
            .collect();
        let t = fns.with_function(i, windowed).unwrap().inverse_transform(i, &xs).unwrap();
        expect.iter_mut().zip(t).for_each(|(e, v)| *e *= v);
    }
    let want = OutputField::new(xs.clone(), expect).unwrap();
    assert!(one.max_abs_diff(&want) <= 1e-12 * want.max_abs().max(1e-300));

    let absent = FrameIndex::new(1, "MMM".parse().unwrap(), vec![0, 0, 0]).unwrap();
    assert!(matches!(
        apply_wavelet_form(&c, Some(&[absent]), &sys, &fns, &xs),
        Err(Error::MissingIndex(_))
    ));
}

#[test]
fn bump_l2_matches_refined_quadrature() {
    let coarse = Axis::new(-1.0, 1.0, 64).unwrap();
    let fine = Axis::new(-1.0, 1.0, 1 << 20).unwrap();
    let l2 = |ax: &Axis| {
        let v = make_bump_hat(0.1, 0.55, ax).unwrap();
        (v.iter().map(|z| z.norm_sqr()).sum::<f64>() * ax.step()).sqrt()
    };
    let (a, b) = (l2(&coarse), l2(&fine));
    assert!((a - b).abs() <= BUMP_L2_TOL * b, "{a} vs {b}");
}

#[test]
fn window_energy_is_bounded_by_overlap_and_sup() {
    let fns = bumps(64);
    let ax = fns.freq()[0].clone();
    let sys = build_wavelet_system(2, 14).unwrap();
    let f = fns.fhat(0);
    let f_l2 = fns.l2_norm(0);
    for j in 1..=3u32 {
        for kind in [Kind::Father, Kind::Mother] {
            let mut total = 0.0;
            for k in sys.translation_range(j, -1.0, 1.0) {
                let e: f64 = f
                    .iter()
                    .zip(ax.points())
                    .map(|(z, x)| (z * sys.eval_1d(kind, j, k, x)).norm_sqr())
                    .sum::<f64>()
                    * ax.step();
                total += e;
            }
            let sup = 2f64.powf(j as f64 / 2.0) * sys.sup_norm(kind);
            let overlap = sys.support_len() as f64;
            assert!(sup <= 2f64.powf(j as f64 / 2.0) * sys.sup_norm_max() + 1e-12);
            assert!(total <= overlap * sup * sup * f_l2 * f_l2, "j={j} {kind:?}");
        }
    }
}

fn field(vals: Vec<(f64, f64)>) -> OutputField {
    let ax = Axis::new(0.0, vals.len() as f64 * 0.5, vals.len()).unwrap();
    OutputField::new(vec![ax], vals.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()).unwrap()
}

proptest! {
    #[test]
    fn quasi_norm_homogeneous(v in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..40), lam in -4.0f64..4.0, p in 0.2f64..3.0) {
        let f = field(v);
        let g = f.linear_combination(Complex64::new(lam, 0.0), &f, Complex64::new(0.0, 0.0)).unwrap();
        let (a, b) = (quasi_norm(&g, p).unwrap(), lam.abs() * quasi_norm(&f, p).unwrap());
        prop_assert!((a - b).abs() <= 1e-10 * b.max(1e-300));
    }

    #[test]
    fn two_thirds_triangle(v in prop::collection::vec(((-5.0f64..5.0, -5.0f64..5.0), (-5.0f64..5.0, -5.0f64..5.0)), 1..40)) {
        let (a, b): (Vec<_>, Vec<_>) = v.into_iter().unzip();
        let (f, g) = (field(a), field(b));
        let one = Complex64::new(1.0, 0.0);
        let s = f.linear_combination(one, &g, one).unwrap();
        let p = 2.0 / 3.0;
        let lhs = quasi_norm(&s, p).unwrap().powf(p);
        let rhs = quasi_norm(&f, p).unwrap().powf(p) + quasi_norm(&g, p).unwrap().powf(p);
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }
}
