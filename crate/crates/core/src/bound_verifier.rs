//! Sufficiency-side checks: the smoothness threshold `M_q`, the per-piece
//! envelope `2^{3jd/2} 2^{-r} ‖b‖_∞ C^{1/3}`, the summability chain over `r`
//! and `j`, and empirical lower bounds for `‖T_m‖_{L²×L²×L² → L^{2/3}}`.
//!
//! Every "≲" constant is fitted from data; none is asserted a priori.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::coeff_analysis::{CoeffTensor, MultiplierGrid};
use crate::error::{Error, Result};
use crate::export::CsvTable;
use crate::grid::Axis;
use crate::index_partition::{full_partition, Certificate, WeightedIndexSet};
use crate::stats::linear_fit;
use crate::trilinear_engine::{
    apply_wavelet_form, block_window, make_bump_hat, quasi_norm, DirectOperator, OutputField, TestFunctionTriple,
};
use crate::wavelet_frame::{FrameIndex, Kind, TypeTuple, WaveletSystem};

/// Target exponent of the trilinear estimate.
pub const OUTPUT_EXPONENT: f64 = 2.0 / 3.0;

/// `⌊3d/(3−q)⌋ + 1` for `1 ≤ q < 3`.
pub fn required_smoothness(q: f64, d: usize) -> Result<u32> {
    if !(1.0..3.0).contains(&q) {
        return Err(Error::ExponentOutOfRange { q, range: "[1, 3)" });
    }
    if d == 0 {
        return Err(Error::param("d", "must be positive"));
    }
    // guard against 3/(3 - 2.9) evaluating to 29.999…
    let t = 3.0 * d as f64 / (3.0 - q);
    Ok((t + 1e-9 * t.max(1.0)).floor() as u32 + 1)
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn normal_c(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn ratio_of(t: &OutputField, fns: &TestFunctionTriple) -> Result<f64> {
    let den: f64 = (0..3).map(|i| fns.l2_norm(i)).product();
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(quasi_norm(t, OUTPUT_EXPONENT)? / den)
}

/// One period `[-1/(2h), 1/(2h)]` of the lattice step `h`, with `len` cells.
pub fn period_axes(freq: &[Axis], len: usize) -> Result<Vec<Axis>> {
    freq.iter()
        .map(|a| {
            let half = 0.5 / a.step();
            Axis::new(-half, half, len)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// per-piece envelope

/// Where a piece came from, for the envelope `2^{3jd/2} 2^{-r} b_inf |U_r|^{1/3}`.
#[derive(Clone, Debug, Serialize)]
pub struct PieceContext {
    pub id: String,
    pub j: u32,
    pub g: TypeTuple,
    pub r: u32,
    pub b_inf: f64,
    pub level_size: usize,
    pub certificate: Certificate,
}

/// Test-function lattice and trial budget for piece measurements.
#[derive(Clone, Debug)]
pub struct ProbeSetup {
    pub freq: Vec<Axis>,
    pub x_axes: Vec<Axis>,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PieceRecord {
    pub id: String,
    pub j: u32,
    #[serde(rename = "G")]
    pub g: TypeTuple,
    pub r: u32,
    pub size: usize,
    pub level_size: usize,
    pub certificate: Certificate,
    /// Max over trials of `‖T_piece(f)‖_{2/3} / ∏‖f_i‖₂`.
    pub measured: f64,
    pub envelope: f64,
    /// `measured / envelope`.
    pub constant: f64,
    /// Same ratio against `2^{jd} 2^{-r} b_inf |U_r|^{1/3}`.
    pub constant_alt: f64,
}

fn envelope(j: u32, d: usize, r: u32, b_inf: f64, c: usize, j_power: f64) -> f64 {
    2f64.powf(j_power * j as f64 * d as f64) * b_inf * 0.5f64.powi(r as i32) * (c as f64).cbrt()
}

/// Random white-noise triple on the lattice.
fn white_triple(freq: &[Axis], rng: &mut ChaCha8Rng) -> Result<TestFunctionTriple> {
    let n: usize = freq.iter().map(|a| a.len).product();
    let fhat = std::array::from_fn(|_| (0..n).map(|_| normal_c(rng)).collect());
    TestFunctionTriple::new(freq.to_vec(), fhat)
}

/// Random combination of the piece's own windows in each slot.
fn adapted_triple(piece: &[FrameIndex], sys: &WaveletSystem, freq: &[Axis], rng: &mut ChaCha8Rng) -> Result<TestFunctionTriple> {
    let d = freq.len();
    let n: usize = freq.iter().map(|a| a.len).product();
    let mut fhat: [Vec<Complex64>; 3] = std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); n]);
    for (i, slot) in fhat.iter_mut().enumerate() {
        let mut seen: Vec<(Vec<Kind>, Vec<i64>)> = Vec::new();
        for idx in piece {
            let kinds: Vec<Kind> = idx.g.kinds().skip(i * d).take(d).collect();
            let k = idx.n[i * d..(i + 1) * d].to_vec();
            if seen.contains(&(kinds.clone(), k.clone())) {
                continue;
            }
            let c = normal_c(rng);
            for (z, w) in slot.iter_mut().zip(block_window(sys, freq, idx.j, &kinds, &k)) {
                *z += c * w;
            }
            seen.push((kinds, k));
        }
    }
    TestFunctionTriple::new(freq.to_vec(), fhat)
}

/// Measures one piece of a fixed-`(j, G)` block against its envelope.
/// Trials alternate white-noise triples and triples built from the piece's windows.
pub fn piece_envelope_check(
    piece: &WeightedIndexSet,
    ctx: &PieceContext,
    sys: &WaveletSystem,
    probe: &ProbeSetup,
) -> Result<PieceRecord> {
    let d = piece.d();
    let indices: Vec<FrameIndex> = piece
        .keys()
        .map(|n| FrameIndex::new(ctx.j, ctx.g, n.clone()))
        .collect::<Result<_>>()?;
    let mut c = CoeffTensor::new(3 * d, ctx.j, ctx.id.clone());
    for (idx, (_, b)) in indices.iter().zip(piece.iter()) {
        c.insert(idx.clone(), b)?;
    }
    let mut measured = 0.0f64;
    if !piece.is_empty() {
        for t in 0..probe.trials.max(1) {
            let mut rng = rng_for(probe.seed, t as u64);
            let fns = if t % 2 == 0 {
                adapted_triple(&indices, sys, &probe.freq, &mut rng)?
            } else {
                white_triple(&probe.freq, &mut rng)?
            };
            let out = apply_wavelet_form(&c, None, sys, &fns, &probe.x_axes)?;
            measured = measured.max(ratio_of(&out, &fns)?);
        }
    }
    let env = envelope(ctx.j, d, ctx.r, ctx.b_inf, ctx.level_size, 1.5);
    let alt = envelope(ctx.j, d, ctx.r, ctx.b_inf, ctx.level_size, 1.0);
    Ok(PieceRecord {
        id: ctx.id.clone(),
        j: ctx.j,
        g: ctx.g,
        r: ctx.r,
        size: piece.len(),
        level_size: ctx.level_size,
        certificate: ctx.certificate.clone(),
        measured,
        envelope: env,
        constant: if env > 0.0 { measured / env } else { 0.0 },
        constant_alt: if alt > 0.0 { measured / alt } else { 0.0 },
    })
}

/// Collected piece measurements with trend fits of `log₂ constant`.
#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub pieces: Vec<PieceRecord>,
    pub max_constant: f64,
    pub max_constant_alt: f64,
    /// Slope of `log₂ constant` against `log₂ |piece|`.
    pub slope_vs_size: Option<f64>,
    /// Slope of `log₂ constant` against `j`.
    pub slope_vs_j: Option<f64>,
    /// Same against `j` for the `2^{jd}` envelope.
    pub slope_vs_j_alt: Option<f64>,
    pub slope_limit: f64,
    pub pass: bool,
}

impl BoundReport {
    pub fn from_pieces(pieces: Vec<PieceRecord>, slope_limit: f64) -> Self {
        let pos: Vec<&PieceRecord> = pieces.iter().filter(|p| p.constant > 0.0).collect();
        let lc: Vec<f64> = pos.iter().map(|p| p.constant.log2()).collect();
        let lc_alt: Vec<f64> = pos.iter().map(|p| p.constant_alt.log2()).collect();
        let ls: Vec<f64> = pos.iter().map(|p| (p.size as f64).log2()).collect();
        let js: Vec<f64> = pos.iter().map(|p| p.j as f64).collect();
        let slope_vs_size = linear_fit(&ls, &lc).map(|f| f.0);
        let slope_vs_j = linear_fit(&js, &lc).map(|f| f.0);
        let slope_vs_j_alt = linear_fit(&js, &lc_alt).map(|f| f.0);
        let pass = slope_vs_size.is_some_and(|s| s <= slope_limit) && slope_vs_j.is_some_and(|s| s <= slope_limit);
        BoundReport {
            max_constant: pieces.iter().fold(0.0, |m, p| m.max(p.constant)),
            max_constant_alt: pieces.iter().fold(0.0, |m, p| m.max(p.constant_alt)),
            pieces,
            slope_vs_size,
            slope_vs_j,
            slope_vs_j_alt,
            slope_limit,
            pass,
        }
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["id", "j", "G", "r", "size", "level_size", "measured", "envelope", "constant"]);
        for p in &self.pieces {
            t.push(vec![
                p.id.clone(),
                p.j.to_string(),
                p.g.to_string(),
                p.r.to_string(),
                p.size.to_string(),
                p.level_size.to_string(),
                crate::export::fmt_f64(p.measured),
                crate::export::fmt_f64(p.envelope),
                crate::export::fmt_f64(p.constant),
            ]);
        }
        t
    }
}

#[derive(Clone, Debug)]
pub struct SweepPlan {
    pub q: f64,
    pub scales: Vec<u32>,
    /// Evenly strided subset of the leaves at each scale, in tree order.
    pub max_pieces_per_scale: Option<usize>,
    pub slope_limit: f64,
}

fn stride_sample<T>(items: Vec<T>, cap: Option<usize>) -> Vec<T> {
    match cap {
        Some(cap) if items.len() > cap => {
            let len = items.len();
            let keep: Vec<usize> = (0..cap).map(|i| i * len / cap).collect();
            items
                .into_iter()
                .enumerate()
                .filter(|(i, _)| keep.binary_search(i).is_ok())
                .map(|(_, t)| t)
                .collect()
        }
        _ => items,
    }
}

/// Partitions every `(j, G)` block of `c` at the planned scales and measures
/// non-residual leaves.
pub fn envelope_sweep(c: &CoeffTensor, sys: &WaveletSystem, plan: &SweepPlan, probe: &ProbeSetup) -> Result<BoundReport> {
    let mut jobs = Vec::new();
    for &j in &plan.scales {
        let mut at_scale = Vec::new();
        for (jj, g) in c.blocks() {
            if jj == j {
                collect_leaves(c, j, g, plan.q, &mut at_scale)?;
            }
        }
        jobs.extend(stride_sample(at_scale, plan.max_pieces_per_scale));
    }
    let pieces = jobs
        .par_iter()
        .map(|(set, ctx)| piece_envelope_check(set, ctx, sys, probe))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundReport::from_pieces(pieces, plan.slope_limit))
}

fn collect_leaves(
    c: &CoeffTensor,
    j: u32,
    g: TypeTuple,
    q: f64,
    jobs: &mut Vec<(WeightedIndexSet, PieceContext)>,
) -> Result<()> {
    let set = WeightedIndexSet::from_block(c, j, g)?;
    let tree = full_partition(&set, q)?;
    for (li, (r, level_size, leaf)) in tree.leaves_with_level().into_iter().enumerate() {
        let Some(r) = r else { continue };
        jobs.push((
            leaf.members.clone(),
            PieceContext {
                id: format!("j{j}/{g}/r{r}/{li}"),
                j,
                g,
                r,
                b_inf: tree.b_inf,
                level_size,
                certificate: leaf.certificate.clone(),
            },
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// summability

#[derive(Clone, Debug, Serialize)]
pub struct ScaleRow {
    pub j: u32,
    pub b_inf: f64,
    /// `2^{jd(5/2−q/2)} b_inf^{1−q/3} ‖m‖_q^{q/3} Σ_r 2^{r(q/3−1)}`.
    pub envelope: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SummabilityReport {
    pub q: f64,
    pub d: usize,
    pub k: u32,
    pub m_norm_q: f64,
    /// `2^{q/3−1}`; the `r`-sum converges iff this is below 1.
    pub r_ratio: f64,
    pub r_terms: u32,
    /// `Σ_{r=0}^{r_terms−1} 2^{r(q/3−1)}`.
    pub r_sum: f64,
    pub r_summable: bool,
    /// `(K+d+1)(1−q/3) > d`.
    pub stated_condition: bool,
    /// `d(5/2−q/2) − (K+1+d)(1−q/3)`, the `j`-exponent after substituting the coefficient decay.
    pub j_exponent: f64,
    pub j_summable: bool,
    /// Fitted slope of `log₂ envelope_j` over the measured scales `j ≥ 1`.
    pub measured_j_slope: Option<f64>,
    pub rows: Vec<ScaleRow>,
    pub total: f64,
    /// `total / ‖m‖_q^{q/3}`.
    pub total_ratio: f64,
    pub divergent: bool,
}

/// Default number of level sets summed, matching the partition's `r_max = 60`.
pub const SUMMABILITY_R_TERMS: u32 = 61;

/// Evaluates the `(j, r)` envelope with the measured per-scale `‖b‖_∞`.
/// `q ≥ 3` is reported as divergent rather than refused.
pub fn summability_audit(c: &CoeffTensor, q: f64, k: u32, m_norm_q: f64) -> Result<SummabilityReport> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::ExponentOutOfRange { q, range: "[1, ∞)" });
    }
    if c.dim() % 3 != 0 {
        return Err(Error::param("tensor", "dimension is not a multiple of 3"));
    }
    let d = c.dim() / 3;
    let df = d as f64;
    let rho = 2f64.powf(q / 3.0 - 1.0);
    let r_terms = SUMMABILITY_R_TERMS;
    let r_sum: f64 = (0..r_terms).map(|r| rho.powi(r as i32)).sum();
    let m_pow = m_norm_q.powf(q / 3.0);
    let mut rows = Vec::new();
    for j in 0..=c.j_max() {
        let b_inf = c
            .block_sup()
            .iter()
            .filter(|((jj, _), _)| *jj == j)
            .fold(0.0f64, |m, (_, v)| m.max(*v));
        let envelope = 2f64.powf(j as f64 * df * (2.5 - q / 2.0)) * b_inf.powf(1.0 - q / 3.0) * m_pow * r_sum;
        rows.push(ScaleRow { j, b_inf, envelope });
    }
    let fit: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.j >= 1 && r.envelope > 0.0)
        .map(|r| (r.j as f64, r.envelope.log2()))
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = fit.into_iter().unzip();
    let measured_j_slope = linear_fit(&xs, &ys).map(|f| f.0);
    let kf = k as f64;
    let j_exponent = df * (2.5 - q / 2.0) - (kf + 1.0 + df) * (1.0 - q / 3.0);
    let total: f64 = rows.iter().map(|r| r.envelope).sum();
    Ok(SummabilityReport {
        q,
        d,
        k,
        m_norm_q,
        r_ratio: rho,
        r_terms,
        r_sum,
        r_summable: q < 3.0,
        stated_condition: (kf + df + 1.0) * (1.0 - q / 3.0) > df,
        j_exponent,
        j_summable: j_exponent < 0.0,
        measured_j_slope,
        rows,
        total,
        total_ratio: if m_pow > 0.0 { total / m_pow } else { 0.0 },
        divergent: q >= 3.0,
    })
}

// ---------------------------------------------------------------------------
// operator-norm lower bounds

#[derive(Clone, Debug)]
pub struct NormSearch {
    pub trials: usize,
    pub ascent_steps: usize,
    pub seed: u64,
    /// Spatial cells per axis over one period of the frequency lattice.
    pub x_len: usize,
}

impl Default for NormSearch {
    fn default() -> Self {
        NormSearch {
            trials: 24,
            ascent_steps: 400,
            seed: 0,
            x_len: 192,
        }
    }
}

/// Certified lower bound `‖T_m(w)‖_{2/3} / ∏‖w_i‖₂` with its witness `w`.
#[derive(Clone, Debug)]
pub struct NormEstimate {
    pub lower_bound: f64,
    pub witness: TestFunctionTriple,
    pub x_axes: Vec<Axis>,
    pub trials: usize,
    /// Best ratio after each trial, then after each ascent step.
    pub trace: Vec<f64>,
}

impl NormEstimate {
    /// Re-evaluates the ratio at the stored witness.
    pub fn recompute(&self, m: &MultiplierGrid) -> Result<f64> {
        let op = DirectOperator::new(m, self.witness.freq().to_vec())?;
        ratio_of(&op.apply(&self.witness, &self.x_axes)?, &self.witness)
    }
}

/// The per-function frequency lattice of `m`; the three blocks must coincide.
pub fn frequency_lattice(m: &MultiplierGrid) -> Result<Vec<Axis>> {
    let d = m.d();
    let a = &m.axes()[..d];
    if m.axes()[d..2 * d] != *a || m.axes()[2 * d..] != *a {
        return Err(Error::IncompatibleGrid("the three frequency blocks of m use different axes".into()));
    }
    Ok(a.to_vec())
}

fn random_start(freq: &[Axis], t: usize, rng: &mut ChaCha8Rng) -> Result<TestFunctionTriple> {
    if t % 2 == 0 || freq.len() != 1 {
        return white_triple(freq, rng);
    }
    // odd trials: a few modulated bumps per slot
    let ax = &freq[0];
    let h = ax.step();
    let span = ax.hi - ax.lo;
    let mut fhat: [Vec<Complex64>; 3] = std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); ax.len]);
    for slot in fhat.iter_mut() {
        for _ in 0..rng.random_range(1..=3) {
            let center = rng.random_range(ax.lo..ax.hi);
            let width = rng.random_range(h..(0.5 * span).max(2.0 * h));
            let amp = normal_c(rng);
            for (z, b) in slot.iter_mut().zip(make_bump_hat(center, width, ax)?) {
                *z += amp * b;
            }
        }
        if slot.iter().all(|z| z.norm() == 0.0) {
            slot[rng.random_range(0..ax.len)] = Complex64::new(1.0, 0.0);
        }
    }
    TestFunctionTriple::new(freq.to_vec(), fhat)
}

/// Random search over test triples, then cell-wise coordinate ascent from the
/// best start. The result is a lower bound only.
pub fn estimate_operator_norm(m: &MultiplierGrid, search: &NormSearch) -> Result<NormEstimate> {
    if search.trials == 0 {
        return Err(Error::param("trials", "need at least one trial"));
    }
    let freq = frequency_lattice(m)?;
    let x_axes = period_axes(&freq, search.x_len)?;
    let op = DirectOperator::new(m, freq.clone())?;
    let starts: Vec<(f64, TestFunctionTriple)> = (0..search.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_for(search.seed, t as u64);
            let fns = random_start(&freq, t, &mut rng)?;
            let r = ratio_of(&op.apply(&fns, &x_axes)?, &fns)?;
            Ok((r, fns))
        })
        .collect::<Result<_>>()?;
    let mut trace = Vec::with_capacity(search.trials + search.ascent_steps);
    let mut best_idx = 0;
    for (t, (r, _)) in starts.iter().enumerate() {
        if *r > starts[best_idx].0 {
            best_idx = t;
        }
        trace.push(starts[best_idx].0);
    }
    let (mut best, mut witness) = starts.into_iter().nth(best_idx).unwrap();

    let n = witness.fhat(0).len();
    let mut rng = rng_for(search.seed, u64::MAX);
    for step in 0..search.ascent_steps {
        let slot = step % 3;
        let cell = (step / 3) % n;
        let cur = witness.fhat(slot).to_vec();
        let scale = cur.iter().fold(0.0f64, |a, z| a.max(z.norm())).max(1e-300);
        let kick = normal_c(&mut rng) * (0.5 * scale);
        let proposals = [cur[cell] * 2.0, cur[cell] * 0.5, Complex64::new(0.0, 0.0), cur[cell] + kick];
        let mut improved: Option<(f64, TestFunctionTriple)> = None;
        for z in proposals {
            if z == cur[cell] {
                continue;
            }
            let mut f = cur.clone();
            f[cell] = z;
            if f.iter().all(|v| v.norm() == 0.0) {
                continue;
            }
            let cand = witness.with_function(slot, f)?;
            let r = ratio_of(&op.apply(&cand, &x_axes)?, &cand)?;
            if r > improved.as_ref().map_or(best, |p| p.0) {
                improved = Some((r, cand));
            }
        }
        if let Some((r, cand)) = improved {
            best = r;
            witness = cand;
        }
        trace.push(best);
    }
    Ok(NormEstimate {
        lower_bound: best,
        witness,
        x_axes,
        trials: search.trials,
        trace,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub estimate: f64,
    pub m_norm_q: f64,
    /// `‖m‖_q^{q/3}`.
    pub rhs: f64,
    /// Finite-difference bound on derivatives up to order `M_q`.
    pub c0: f64,
    /// `C0^{1−q/3} ‖m‖_q^{q/3}`.
    pub combined: f64,
    /// `estimate / rhs`, absent at the origin.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub q: f64,
    pub smoothness_order: u32,
    pub rows: Vec<SweepRow>,
    /// Log-log slope of estimate against `‖m‖_q^{q/3}`.
    pub slope: Option<f64>,
    /// Fitted `A = max estimate / ‖m‖_q^{q/3}`.
    pub constant: f64,
}

impl SweepReport {
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["index", "estimate", "m_norm_q", "rhs", "c0", "combined"]);
        for r in &self.rows {
            t.push_floats(&[r.index as f64, r.estimate, r.m_norm_q, r.rhs, r.c0, r.combined]);
        }
        t
    }
}

pub fn sufficiency_sweep(family: &[MultiplierGrid], q: f64, search: &NormSearch) -> Result<SweepReport> {
    let d = family.first().map_or(1, |m| m.d());
    let order = required_smoothness(q, d)?;
    let mut rows = Vec::with_capacity(family.len());
    for (index, m) in family.iter().enumerate() {
        let m_norm_q = m.lq_norm(q);
        let c0 = m.derivative_bound(order as usize);
        let estimate = if m.sup_norm() == 0.0 {
            0.0
        } else {
            estimate_operator_norm(m, search)?.lower_bound
        };
        let rhs = m_norm_q.powf(q / 3.0);
        rows.push(SweepRow {
            index,
            estimate,
            m_norm_q,
            rhs,
            c0,
            combined: c0.powf(1.0 - q / 3.0) * rhs,
            ratio: (rhs > 0.0).then(|| estimate / rhs),
        });
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.rhs > 0.0 && r.estimate > 0.0)
        .map(|r| (r.rhs.ln(), r.estimate.ln()))
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    Ok(SweepReport {
        q,
        smoothness_order: order,
        slope: linear_fit(&xs, &ys).map(|f| f.0),
        constant: rows.iter().filter_map(|r| r.ratio).fold(0.0, f64::max),
        rows,
    })
}

/// `n` random Gaussian sums on `axes`, each rescaled so that its derivative bound
/// up to order `M_q` equals 1. Bumps are centred well inside the box so the
/// samples vanish near its boundary.
pub fn random_smooth_family(n: usize, axes: &[Axis], q: f64, seed: u64) -> Result<Vec<MultiplierGrid>> {
    if axes.len() % 3 != 0 {
        return Err(Error::param("axes", "need 3d axes"));
    }
    let d = axes.len() / 3;
    let order = required_smoothness(q, d)? as usize;
    (0..n)
        .map(|i| {
            let mut rng = rng_for(seed, i as u64);
            let terms: Vec<(Vec<f64>, f64, f64)> = (0..rng.random_range(1..=3))
                .map(|_| {
                    let c: Vec<f64> = axes
                        .iter()
                        .map(|a| {
                            let w = a.hi - a.lo;
                            rng.random_range(a.lo + 0.3 * w..a.hi - 0.3 * w)
                        })
                        .collect();
                    let s = rng.random_range(0.12..0.25) * (axes[0].hi - axes[0].lo) / 2.0;
                    let amp: f64 = rng.random_range(-1.0..1.0);
                    (c, s, amp)
                })
                .collect();
            let m = MultiplierGrid::from_fn(d, axes.to_vec(), move |x| {
                terms
                    .iter()
                    .map(|(c, s, a)| {
                        let r2: f64 = x.iter().zip(c).map(|(u, v)| (u - v).powi(2)).sum();
                        a * (-r2 / (2.0 * s * s)).exp()
                    })
                    .sum()
            })?;
            let c0 = m.derivative_bound(order);
            Ok(if c0 > 0.0 { m.scaled(1.0 / c0) } else { m })
        })
        .collect()
}
