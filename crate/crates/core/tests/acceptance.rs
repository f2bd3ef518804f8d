//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//! Run with `--nocapture` to see the lines; tolerances are pinned below.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trimul_core::bound_verifier::*;
use trimul_core::coeff_analysis::*;
use trimul_core::grid::Axis;
use trimul_core::index_partition::*;
use trimul_core::necessity_lab::*;
use trimul_core::trilinear_engine::*;
use trimul_core::wavelet_frame::*;

const ORTHO_TOL: f64 = 1e-5;
const ORTHO_PAIRS: usize = 200;
const MOMENT_TOL: f64 = 1e-6;
const DECAY_LIMIT: f64 = -3.5;
/// `frame_norm_lq / ‖m‖_{L^q}` must stay inside `[1/A, A]` with `A` at most the
/// overlap factor `2^{3d}` of the cubes of side `2^{1-j}`.
const BAND_LIMIT: f64 = 8.0;
const SLOPE_LIMIT: f64 = 0.05;
const PARTITION_SETS: usize = 1000;
const PARTITION_MAX_SIZE: usize = 10_000;
/// Diagonal class count over `|U_r|^{1/3}`; at most `⌊|U_r|^{1/9}⌋³ / |U_r|^{1/3} ≤ 1`,
/// with rounding slack.
const DIAGONAL_CONSTANT: f64 = 1.0 + 1e-12;
const ENVELOPE_MIN_PIECES: usize = 100;
const PRODUCT_TOL: f64 = 1e-8;
const CROSS_PATH_TOL: f64 = 1e-3;
const SWEEP_STABILITY: f64 = 0.2;
const GROWTH_SLOPE_MIN: f64 = 0.25;
const KHINCHIN_SPREAD: f64 = 0.1;
const NECESSITY_SIGNS: usize = 256;
const TAIL_FRACTION: f64 = 0.01;

fn report(n: u32, pass: bool, detail: String, elapsed: Duration, budget: Duration) -> bool {
    let ok = pass && elapsed <= budget;
    println!(
        "criterion {n}: {} | {detail} | {:.1} s (budget {} s)",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    ok
}

fn db2() -> WaveletSystem {
    build_wavelet_system(2, DEFAULT_RESOLUTION).unwrap()
}

fn admissible_type(rng: &mut ChaCha8Rng, j: u32) -> TypeTuple {
    loop {
        let g = TypeTuple::from_bits(3, rng.random_range(0..8u32));
        if g.admissible_at(j) {
            return g;
        }
    }
}

#[test]
fn criterion_01_wavelet_frame() {
    let t = Instant::now();
    let s = db2();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sl = s.support_len() as i64;
    let mut worst: f64 = 0.0;
    for _ in 0..ORTHO_PAIRS {
        let ja = rng.random_range(0..=3u32);
        let a = FrameIndex::new(ja, admissible_type(&mut rng, ja), (0..3).map(|_| rng.random_range(-4..=4)).collect())
            .unwrap();
        let b = if rng.random_bool(0.25) {
            a.clone()
        } else {
            let jb = rng.random_range(0..=3u32);
            let n = a
                .n
                .iter()
                .map(|&v| {
                    let c = if jb >= ja { v << (jb - ja) } else { v >> (ja - jb) };
                    c + rng.random_range(-sl..=sl)
                })
                .collect();
            FrameIndex::new(jb, admissible_type(&mut rng, jb), n).unwrap()
        };
        let want = if a == b { 1.0 } else { 0.0 };
        worst = worst.max((s.inner_product(&a, &b) - want).abs());
    }
    let moment = (0..s.vanishing_moments() as u32)
        .map(|a| s.moment(Kind::Mother, a).abs())
        .fold(0.0, f64::max);
    let pass = worst <= ORTHO_TOL && moment <= MOMENT_TOL;
    let detail = format!("max |<w_a,w_b> - delta| = {worst:.2e}, max moment = {moment:.2e}");
    assert!(report(1, pass, detail, t.elapsed(), Duration::from_secs(30)));
}

fn gaussian(c: [f64; 3], s: f64) -> impl Fn(&[f64]) -> f64 + Send + Sync + 'static {
    move |p| (-(0..3).map(|i| (p[i] - c[i]).powi(2)).sum::<f64>() / s).exp()
}

#[test]
fn criterion_02_coefficient_decay() {
    let t = Instant::now();
    let sys = db2();
    let axes = cube_axes(1, -1.0, 1.0, 128).unwrap();
    let family = [
        ([0.0, 0.0, 0.0], 0.15),
        ([0.1, -0.2, 0.05], 0.2),
        ([-0.15, 0.1, 0.2], 0.12),
        ([0.2, 0.2, -0.1], 0.25),
        ([0.0, 0.15, -0.2], 0.18),
    ];
    let mut slopes = Vec::new();
    for (c, s) in family {
        let m = MultiplierGrid::from_fn(1, axes.clone(), gaussian(c, s)).unwrap();
        slopes.push(decay_slope(&analyze(&m, &sys, 4).unwrap()).unwrap());
    }
    let worst = slopes.iter().map(|f| f.slope).fold(f64::NEG_INFINITY, f64::max);
    let pass = worst <= DECAY_LIMIT;
    let detail = format!(
        "fitted slopes {:?} (limit {DECAY_LIMIT}); slowest type per member {:?}",
        slopes.iter().map(|f| (f.slope * 100.0).round() / 100.0).collect::<Vec<_>>(),
        slopes.iter().map(|f| (f.worst_slope * 100.0).round() / 100.0).collect::<Vec<_>>()
    );
    assert!(report(2, pass, detail, t.elapsed(), Duration::from_secs(120)));
}

#[test]
fn criterion_03_frame_norm_equivalence() {
    let t = Instant::now();
    let sys = db2();
    let axes = cube_axes(1, -1.0, 1.0, 64).unwrap();
    let mut details = Vec::new();
    let mut pass = true;
    for q in [1.5, 2.0, 2.5] {
        let family = random_smooth_family(20, &axes, q, 17).unwrap();
        let mut ratios = Vec::new();
        let mut block_slope = f64::NEG_INFINITY;
        for m in &family {
            let c = analyze(m, &sys, 3).unwrap();
            let norm = m.lq_norm(q);
            ratios.push(frame_norm_lq(&c, q).unwrap() / norm);
            let blocks = lq_coeff_bound_check(&c, q, norm, f64::INFINITY);
            block_slope = block_slope.max(blocks.slope.unwrap_or(f64::NEG_INFINITY));
        }
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let a = hi.max(1.0 / lo);
        pass &= a.is_finite() && a <= BAND_LIMIT && block_slope <= SLOPE_LIMIT;
        details.push(format!("q={q}: ratios in [{lo:.3}, {hi:.3}], A={a:.3}, max block slope {block_slope:.3}"));
    }
    assert!(report(3, pass, details.join("; "), t.elapsed(), Duration::from_secs(300)));
}

fn random_set(rng: &mut ChaCha8Rng) -> WeightedIndexSet {
    let size = (PARTITION_MAX_SIZE as f64).powf(rng.random::<f64>()).round() as usize;
    // span between a dense cube and a sparse one, so fibers range from heavy to light
    let span = ((size as f64).powf(rng.random_range(0.34..0.9)).ceil() as i64).max(2);
    let entries: Vec<(Vec<i64>, f64)> = (0..size)
        .map(|_| {
            let n = (0..3).map(|_| rng.random_range(0..span)).collect();
            let w = 2f64.powf(-rng.random_range(0.0..20.0)) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            (n, w)
        })
        .collect();
    WeightedIndexSet::from_entries(1, entries).unwrap()
}

#[test]
fn criterion_04_partition_correctness() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let sets: Vec<WeightedIndexSet> = (0..PARTITION_SETS).map(|_| random_set(&mut rng)).collect();
    let mut failures = 0;
    let mut worst_ratio: f64 = 0.0;
    let mut diagonal_splits = 0;
    let mut largest = 0;
    for (i, s) in sets.iter().enumerate() {
        largest = largest.max(s.len());
        let q = [1.0, 2.0, 2.5][i % 3];
        let rep = full_partition(s, q).unwrap().verify();
        if !rep.ok() {
            failures += 1;
        }
        worst_ratio = worst_ratio.max(rep.max_diagonal_ratio());
        diagonal_splits += rep.diagonal.len();
    }
    let pass = failures == 0 && worst_ratio <= DIAGONAL_CONSTANT;
    let detail = format!(
        "{PARTITION_SETS} sets (largest {largest}), {failures} failing trees, {diagonal_splits} diagonal splits, \
         max classes/|U_r|^(1/3) = {worst_ratio:.3} (limit 1)"
    );
    assert!(report(4, pass, detail, t.elapsed(), Duration::from_secs(120)));
}

#[test]
fn criterion_05_piece_envelope() {
    let t = Instant::now();
    let sys = db2();
    let m = MultiplierGrid::from_fn(1, cube_axes(1, -1.0, 1.0, 64).unwrap(), gaussian([0.0, 0.1, -0.2], 0.18)).unwrap();
    let c = analyze(&m, &sys, 3).unwrap();
    let freq = vec![Axis::new(-1.0, 1.0, 64).unwrap()];
    let probe = ProbeSetup {
        x_axes: period_axes(&freq, 256).unwrap(),
        freq,
        trials: 8,
        seed: 5,
    };
    let plan = SweepPlan {
        q: 2.0,
        scales: vec![1, 2, 3],
        max_pieces_per_scale: Some(60),
        slope_limit: SLOPE_LIMIT,
    };
    let rep = envelope_sweep(&c, &sys, &plan, &probe).unwrap();
    let size = rep.slope_vs_size.unwrap_or(f64::INFINITY);
    let j = rep.slope_vs_j.unwrap_or(f64::INFINITY);
    let pass = rep.pieces.len() >= ENVELOPE_MIN_PIECES && size <= SLOPE_LIMIT && j <= SLOPE_LIMIT;
    let detail = format!(
        "{} pieces, slope vs size {size:.3}, slope vs j {j:.3} (limit {SLOPE_LIMIT}), max constant {:.3}",
        rep.pieces.len(),
        rep.max_constant
    );
    assert!(report(5, pass, detail, t.elapsed(), Duration::from_secs(900)));
}

fn bumps(ax: &Axis) -> TestFunctionTriple {
    let f1 = make_bump_hat(-0.3, 0.5, ax).unwrap();
    let f2: Vec<Complex64> = make_bump_hat(0.2, 0.6, ax)
        .unwrap()
        .iter()
        .enumerate()
        .map(|(k, z)| z * Complex64::from_polar(1.0, 0.3 * k as f64))
        .collect();
    let f3 = make_bump_hat(0.1, 0.8, ax).unwrap();
    TestFunctionTriple::new(vec![ax.clone()], [f1, f2, f3]).unwrap()
}

#[test]
fn criterion_06_engine_cross_validation() {
    let t = Instant::now();
    let ax = Axis::new(-1.0, 1.0, 32).unwrap();
    let fns = bumps(&ax);
    let xs = spatial_axes(1, 8.0, 96).unwrap();
    let one = MultiplierGrid::from_fn(1, vec![ax.clone(); 3], |_| 1.0).unwrap();
    let out = apply_direct(&one, &fns, &xs).unwrap();
    let f: Vec<_> = (0..3).map(|i| fns.inverse_transform(i, &xs).unwrap()).collect();
    let product_gap = (0..out.samples.len())
        .map(|x| (out.samples[x] - f[0][x] * f[1][x] * f[2][x]).norm())
        .fold(0.0, f64::max)
        / out.max_abs();

    let sys = db2();
    let m = MultiplierGrid::from_fn(1, vec![ax.clone(); 3], |p| {
        (-(p[0] * p[0] + 2.0 * p[1] * p[1] + (p[2] - 0.2).powi(2)) / 0.3).exp()
    })
    .unwrap();
    let c = analyze(&m, &sys, 2).unwrap();
    let rec = reconstruct(&c, &sys, 1, &[ax.clone(), ax.clone(), ax]).unwrap();
    let direct = apply_direct(&rec, &fns, &xs).unwrap();
    let wave = apply_wavelet_form(&c, None, &sys, &fns, &xs).unwrap();
    let diff = wave.linear_combination(Complex64::new(1.0, 0.0), &direct, Complex64::new(-1.0, 0.0)).unwrap();
    let rel = quasi_norm(&diff, 2.0 / 3.0).unwrap() / quasi_norm(&direct, 2.0 / 3.0).unwrap();
    let pass = product_gap <= PRODUCT_TOL && rel <= CROSS_PATH_TOL;
    let detail = format!("product gap {product_gap:.2e} (tol {PRODUCT_TOL:e}), wavelet vs direct {rel:.2e} (tol {CROSS_PATH_TOL:e})");
    assert!(report(6, pass, detail, t.elapsed(), Duration::from_secs(300)));
}

#[test]
fn criterion_07_sufficiency_sweep() {
    let t = Instant::now();
    let axes = cube_axes(1, -1.0, 1.0, 24).unwrap();
    let mut constants = Vec::new();
    let mut reports = Vec::new();
    for seed in 0..3u64 {
        let family = random_smooth_family(20, &axes, 2.0, seed).unwrap();
        let search = NormSearch {
            seed,
            ..NormSearch::default()
        };
        let rep = sufficiency_sweep(&family, 2.0, &search).unwrap();
        constants.push(rep.constant);
        reports.push(rep);
    }
    let a = constants.iter().cloned().fold(0.0, f64::max);
    let lo = constants.iter().cloned().fold(f64::INFINITY, f64::min);
    let bounded = reports.iter().flat_map(|r| &r.rows).all(|row| row.estimate <= a * row.rhs * (1.0 + 1e-12));
    let spread = (a - lo) / lo;
    let pass = bounded && spread <= SWEEP_STABILITY && a.is_finite() && a > 0.0;
    let detail = format!(
        "A per seed {:?}, fitted A = {a:.4}, spread {:.1}% (limit {:.0}%), slopes {:?}",
        constants.iter().map(|c| (c * 1e4).round() / 1e4).collect::<Vec<_>>(),
        spread * 100.0,
        SWEEP_STABILITY * 100.0,
        reports.iter().map(|r| r.slope.map(|s| (s * 100.0).round() / 100.0)).collect::<Vec<_>>()
    );
    assert!(report(7, pass, detail, t.elapsed(), Duration::from_secs(1200)));
}

#[test]
fn criterion_08_necessity_growth() {
    let t = Instant::now();
    let ns: Vec<u32> = (2..=8).collect();
    let runs: Vec<GrowthReport> = (0..3).map(|s| growth_fit(&ns, NECESSITY_SIGNS, s).unwrap()).collect();
    let slope_b = runs[0].slope_b.unwrap();
    let mut spread: f64 = 0.0;
    for i in 0..ns.len() {
        let r: Vec<f64> = runs.iter().map(|g| g.rows[i].ratio).collect();
        let mean = r.iter().sum::<f64>() / r.len() as f64;
        let hi = r.iter().cloned().fold(0.0, f64::max);
        let lo = r.iter().cloned().fold(f64::INFINITY, f64::min);
        spread = spread.max((hi - lo) / mean);
    }
    let all: Vec<f64> = runs.iter().flat_map(|g| g.rows.iter().map(|r| r.ratio)).collect();
    let band = (
        all.iter().cloned().fold(f64::INFINITY, f64::min),
        all.iter().cloned().fold(0.0, f64::max),
    );
    let pass = slope_b >= GROWTH_SLOPE_MIN && spread < KHINCHIN_SPREAD;
    let detail = format!(
        "B_N {:?}, log-log slope {slope_b:.3} (min {GROWTH_SLOPE_MIN}); A_N/(|phi|^2 B_N) in [{:.4}, {:.4}], \
         max spread across seeds {:.2}% (limit {:.0}%)",
        runs[0].rows.iter().map(|r| (r.b_n * 1e4).round() / 1e4).collect::<Vec<_>>(),
        band.0,
        band.1,
        spread * 100.0,
        KHINCHIN_SPREAD * 100.0
    );
    assert!(report(8, pass, detail, t.elapsed(), Duration::from_secs(600)));
}

#[test]
fn criterion_09_lq_boundary() {
    let t = Instant::now();
    let ratio3 = partial_sum(3.0, 1_000_000) / partial_sum(3.0, 1_000);
    let r3 = lq_boundary_check(3.0, 1_000_000).unwrap();
    let r35 = lq_boundary_check(3.5, 100_000_000).unwrap();
    let r10 = lq_boundary_check(10.0, 1_000_000).unwrap();
    let pass = ratio3 > 2.0
        && r3.verdict == Verdict::Diverging
        && r35.verdict == Verdict::Converged
        && r35.tail_fraction < TAIL_FRACTION
        && r10.verdict == Verdict::Converged
        && r10.tail_fraction < TAIL_FRACTION;
    let detail = format!(
        "q=3: P(1e6)/P(1e3) = {ratio3:.3}, {:?}; q=3.5 (L=1e8): tail {:.3}%, {:?}; q=10: tail {:.1e}, {:?}",
        r3.verdict,
        r35.tail_fraction * 100.0,
        r35.verdict,
        r10.tail_fraction,
        r10.verdict
    );
    assert!(report(9, pass, detail, t.elapsed(), Duration::from_secs(60)));
}

#[test]
fn criterion_10_smoothness_table() {
    let t = Instant::now();
    let got: Vec<u32> = [1.0, 2.0, 2.9].iter().map(|q| required_smoothness(*q, 1).unwrap()).collect();
    let pass = got == [2, 4, 31];
    assert!(report(10, pass, format!("M_q for q = 1, 2, 2.9: {got:?}"), t.elapsed(), Duration::from_secs(1)));
}
