//! Randomised-sign counterexample at the `L^3` boundary (d = 1).
//!
//! Block inputs `f̂^N(ξ) = Σ_j a_j φ̂(ξ - j)` with `a_j = 2^{-N/2}` on
//! `[2^N, 2^{N+1})`, and multipliers
//! `m_t(ξ,η,δ) = Σ v_{j+k+l} s_{j+k+l} ψ(ξ-j) ψ(η-k) ψ(δ-l)` with
//! `v_l = (l-1)^{-1} (ln(l-1))^{1/2}`. Because `ψ = 1` on the support of `φ̂`,
//! `T_{m_t}(f,g,h)(x) = φ(x)³ Σ_l v_l s_l S_l e^{2πixl}` with the triple
//! convolution `S_l = Σ_j Σ_k a_j b_k c_{l-j-k}`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;
use statrs::function::gamma::{gamma, gamma_ur};

use crate::coeff_analysis::MultiplierGrid;
use crate::error::{Error, Result};
use crate::export::{fmt_f64, CsvTable};
use crate::grid::Axis;
use crate::stats::{linear_fit, mean, std_dev};
use crate::trilinear_engine::{bump_profile, OutputField};

/// Half-width of the interval `I` carrying `φ̂`.
pub const PHI_HALF_WIDTH: f64 = 0.25;
/// `ψ` vanishes for `|u| ≥ PSI_SUPPORT` and equals 1 for `|u| ≤ PSI_PLATEAU`.
pub const PSI_SUPPORT: f64 = 0.45;
pub const PSI_PLATEAU: f64 = 0.3;
/// Sign patterns are enumerated when at most this many signs are active.
pub const MAX_ENUMERATED_SIGNS: usize = 12;

/// Finitely supported real sequence indexed from `first`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sequence {
    pub first: i64,
    pub values: Vec<f64>,
}

impl Sequence {
    pub fn get(&self, j: i64) -> f64 {
        let i = j - self.first;
        if i < 0 {
            return 0.0;
        }
        self.values.get(i as usize).copied().unwrap_or(0.0)
    }

    pub fn last(&self) -> i64 {
        self.first + self.values.len() as i64 - 1
    }

    pub fn sum_squares(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// `a = b = c = 2^{-N/2}` on `[2^N, 2^{N+1} - 1]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockSequences {
    pub n: u32,
    pub a: Sequence,
    pub b: Sequence,
    pub c: Sequence,
}

impl BlockSequences {
    pub fn new(n: u32) -> Result<Self> {
        if !(2..=20).contains(&n) {
            return Err(Error::param("N", format!("block exponent must lie in 2..=20, got {n}")));
        }
        let len = 1usize << n;
        let s = Sequence {
            first: len as i64,
            values: vec![2f64.powf(-(n as f64) / 2.0); len],
        };
        Ok(BlockSequences {
            n,
            a: s.clone(),
            b: s.clone(),
            c: s,
        })
    }

    /// `l` with possibly nonzero `S_l`: `[3·2^N, 3(2^{N+1} - 1)]`.
    pub fn active_range(&self) -> std::ops::RangeInclusive<i64> {
        self.a.first + self.b.first + self.c.first..=self.a.last() + self.b.last() + self.c.last()
    }
}

/// `Σ_{j=1}^{l-1} Σ_{k=1}^{l-j-1} a_j b_k c_{l-j-k}`.
pub fn triple_convolution(a: &Sequence, b: &Sequence, c: &Sequence, l: i64) -> f64 {
    let mut s = 0.0;
    for j in a.first.max(1)..=a.last().min(l - 1) {
        let aj = a.get(j);
        if aj == 0.0 {
            continue;
        }
        for k in b.first.max(1)..=b.last().min(l - j - 1) {
            s += aj * b.get(k) * c.get(l - j - k);
        }
    }
    s
}

pub fn convolution_sum(seqs: &BlockSequences, l: i64) -> f64 {
    triple_convolution(&seqs.a, &seqs.b, &seqs.c, l)
}

/// `v_l = (l-1)^{-1} (ln(l-1))^{1/2}` for `l ≥ 3`, zero below.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct VWeights;

impl VWeights {
    pub fn v(&self, l: i64) -> f64 {
        if l < 3 {
            return 0.0;
        }
        let m = (l - 1) as f64;
        m.ln().sqrt() / m
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignProvenance {
    Constant,
    Enumerated { index: u64 },
    Sampled { seed: u64, sample: u64 },
    /// Rademacher functions `s_l(t) = 1 - 2·(l-th binary digit of t)`.
    Rademacher { t: f64 },
    Stitched,
}

/// Signs `s_l` on a range of `l`; `+1` outside it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignAssignment {
    pub first: i64,
    pub signs: Vec<i8>,
    pub provenance: SignProvenance,
}

impl SignAssignment {
    pub fn constant(range: std::ops::RangeInclusive<i64>, sign: i8) -> Self {
        SignAssignment {
            first: *range.start(),
            signs: vec![sign.signum(); range.count()],
            provenance: SignProvenance::Constant,
        }
    }

    pub fn enumerated(range: std::ops::RangeInclusive<i64>, index: u64) -> Self {
        let first = *range.start();
        let signs = (0..range.count()).map(|b| if index >> b & 1 == 1 { -1 } else { 1 }).collect();
        SignAssignment {
            first,
            signs,
            provenance: SignProvenance::Enumerated { index },
        }
    }

    pub fn sampled(range: std::ops::RangeInclusive<i64>, seed: u64, sample: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(sample);
        let first = *range.start();
        let signs = (0..range.count()).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
        SignAssignment {
            first,
            signs,
            provenance: SignProvenance::Sampled { seed, sample },
        }
    }

    /// Binary digits of `t ∈ [0, 1)` are exact for an `f64`; digits past its
    /// expansion are 0, so those signs are `+1`.
    pub fn rademacher(range: std::ops::RangeInclusive<i64>, t: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&t) {
            return Err(Error::param("t", format!("need t in [0, 1), got {t}")));
        }
        let first = *range.start();
        let signs = range
            .map(|l| {
                if l < 1 {
                    return 1;
                }
                let digit = (t * 2f64.powi(l as i32)).floor() % 2.0;
                if digit == 1.0 {
                    -1
                } else {
                    1
                }
            })
            .collect();
        Ok(SignAssignment {
            first,
            signs,
            provenance: SignProvenance::Rademacher { t },
        })
    }

    pub fn sign(&self, l: i64) -> f64 {
        let i = l - self.first;
        if i < 0 || i as usize >= self.signs.len() {
            return 1.0;
        }
        self.signs[i as usize] as f64
    }

    pub fn negated(&self) -> Self {
        SignAssignment {
            first: self.first,
            signs: self.signs.iter().map(|s| -s).collect(),
            provenance: self.provenance.clone(),
        }
    }

    pub fn range(&self) -> std::ops::RangeInclusive<i64> {
        self.first..=self.first + self.signs.len() as i64 - 1
    }
}

/// Joins assignments with pairwise disjoint ranges into one covering their hull.
pub fn stitch(parts: &[SignAssignment]) -> Result<SignAssignment> {
    let mut sorted: Vec<&SignAssignment> = parts.iter().filter(|p| !p.signs.is_empty()).collect();
    sorted.sort_by_key(|p| p.first);
    for w in sorted.windows(2) {
        if w[1].first <= *w[0].range().end() {
            return Err(Error::param("parts", format!("ranges overlap at l = {}", w[1].first)));
        }
    }
    let Some(first) = sorted.first().map(|p| p.first) else {
        return Ok(SignAssignment {
            first: 0,
            signs: Vec::new(),
            provenance: SignProvenance::Stitched,
        });
    };
    let last = *sorted.last().unwrap().range().end();
    let mut signs = vec![1i8; (last - first + 1) as usize];
    for p in sorted {
        for (i, s) in p.signs.iter().enumerate() {
            signs[(p.first - first) as usize + i] = *s;
        }
    }
    Ok(SignAssignment {
        first,
        signs,
        provenance: SignProvenance::Stitched,
    })
}

/// `φ̂ = exp(1 - 1/(1-(ξ/w)²))` on `|ξ| < w` and its inverse transform `φ`.
#[derive(Clone, Debug, Serialize)]
pub struct PhiProfile {
    pub half_width: f64,
    /// Midpoint nodes for the inverse-transform quadrature.
    pub nodes: usize,
}

impl Default for PhiProfile {
    fn default() -> Self {
        PhiProfile {
            half_width: PHI_HALF_WIDTH,
            nodes: 512,
        }
    }
}

impl PhiProfile {
    pub fn hat(&self, xi: f64) -> f64 {
        bump_profile(xi, 0.0, self.half_width)
    }

    /// `φ(x) = ∫ φ̂(ξ) cos(2πxξ) dξ` (`φ̂` is even).
    pub fn eval(&self, x: f64) -> f64 {
        let h = 2.0 * self.half_width / self.nodes as f64;
        (0..self.nodes)
            .map(|i| {
                let xi = -self.half_width + (i as f64 + 0.5) * h;
                self.hat(xi) * (2.0 * PI * x * xi).cos()
            })
            .sum::<f64>()
            * h
    }

    /// `‖φ‖₂² = ‖φ̂‖₂²`.
    pub fn l2_sq(&self) -> f64 {
        let h = 2.0 * self.half_width / self.nodes as f64;
        (0..self.nodes)
            .map(|i| self.hat(-self.half_width + (i as f64 + 0.5) * h).powi(2))
            .sum::<f64>()
            * h
    }
}

/// Coefficients `v_l S_l` over the active range.
pub fn coefficients(seqs: &BlockSequences, vw: &VWeights) -> BTreeMap<i64, f64> {
    seqs.active_range()
        .into_par_iter()
        .map(|l| (l, vw.v(l) * convolution_sum(seqs, l)))
        .collect()
}

/// `φ(x)³ Σ_l v_l s_l S_l e^{2πixl}` on `x_axes` (one axis).
pub fn closed_form_t(
    seqs: &BlockSequences,
    signs: &SignAssignment,
    vw: &VWeights,
    x_axes: &[Axis],
    phi: &PhiProfile,
) -> Result<OutputField> {
    if x_axes.len() != 1 {
        return Err(Error::IncompatibleGrid("the closed form is one-dimensional".into()));
    }
    let coeffs = coefficients(seqs, vw);
    let samples = x_axes[0]
        .points()
        .into_par_iter()
        .map(|x| {
            let p: Complex64 = coeffs
                .iter()
                .map(|(l, c)| Complex64::from_polar(c * signs.sign(*l), 2.0 * PI * x * *l as f64))
                .sum();
            p * phi.eval(x).powi(3)
        })
        .collect();
    OutputField::new(x_axes.to_vec(), samples)
}

/// Smooth cutoff: 1 on `|u| ≤ PSI_PLATEAU`, 0 on `|u| ≥ PSI_SUPPORT`.
pub fn psi(u: f64) -> f64 {
    let t = (PSI_SUPPORT - u.abs()) / (PSI_SUPPORT - PSI_PLATEAU);
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let e = |s: f64| (-1.0 / s).exp();
    e(t) / (e(t) + e(1.0 - t))
}

/// Samples `m_t` on `axes` (three axes). Every axis must cover the active
/// block `[2^N - 1/2, 2^{N+1} - 1/2]`.
pub fn assemble_mt(
    seqs: &BlockSequences,
    signs: &SignAssignment,
    vw: &VWeights,
    axes: Vec<Axis>,
) -> Result<MultiplierGrid> {
    if axes.len() != 3 {
        return Err(Error::IncompatibleGrid("m_t is sampled on three axes (d = 1)".into()));
    }
    let blocks = [&seqs.a, &seqs.b, &seqs.c];
    for (ax, s) in axes.iter().zip(blocks) {
        let (lo, hi) = (s.first as f64 - 0.5, s.last() as f64 + 0.5);
        if ax.lo > lo || ax.hi < hi {
            return Err(Error::GridTooSmall(format!(
                "axis [{}, {}] does not cover the block [{lo}, {hi}]",
                ax.lo, ax.hi
            )));
        }
    }
    let signs = signs.clone();
    let vw = *vw;
    MultiplierGrid::from_fn(1, axes, move |p| {
        let mut total = 0.0;
        let near = |x: f64| {
            let j = x.round();
            (j as i64, psi(x - j))
        };
        let (j, pj) = near(p[0]);
        let (k, pk) = near(p[1]);
        let (l, pl) = near(p[2]);
        let w = pj * pk * pl;
        if w != 0.0 && j >= 1 && k >= 1 && l >= 1 {
            let s = j + k + l;
            total += vw.v(s) * signs.sign(s) * w;
        }
        total
    })
}

/// `∫ φ(x)² |P(x)|^{2/3} dx` reduced to one period of `P`.
#[derive(Clone, Debug)]
pub struct PeriodicIntegrator {
    /// Samples per unit period.
    pub n: usize,
    /// `Φ(y) = Σ_k φ(y + k)²` at `y = i/n`.
    pub weight: Vec<f64>,
}

impl PeriodicIntegrator {
    /// `window` periods on each side are folded into `Φ`.
    pub fn new(phi: &PhiProfile, n: usize, window: usize) -> Result<Self> {
        if n < 8 || window == 0 {
            return Err(Error::param("n", "need at least 8 samples and a positive window"));
        }
        let w = window as i64;
        let weight = (0..n)
            .into_par_iter()
            .map(|i| {
                let y = i as f64 / n as f64;
                (-w..w).map(|k| phi.eval(y + k as f64).powi(2)).sum()
            })
            .collect();
        Ok(PeriodicIntegrator { n, weight })
    }

    /// `∫ φ² |Σ_l c_l s_l e^{2πixl}|^{2/3}` for each sign pattern, via one inverse FFT each.
    pub fn two_thirds_powers(&self, coeffs: &BTreeMap<i64, f64>, signs: &[SignAssignment]) -> Vec<f64> {
        let fft = FftPlanner::new().plan_fft_inverse(self.n);
        signs
            .par_iter()
            .map(|s| {
                let mut buf = vec![Complex64::new(0.0, 0.0); self.n];
                for (l, c) in coeffs {
                    buf[l.rem_euclid(self.n as i64) as usize] += c * s.sign(*l);
                }
                fft.process(&mut buf);
                buf.iter()
                    .zip(&self.weight)
                    .map(|(p, w)| w * p.norm().powf(2.0 / 3.0))
                    .sum::<f64>()
                    / self.n as f64
            })
            .collect()
    }
}

/// Monte-Carlo (or exhaustive) average `A_N` and the proxy `B_N`.
#[derive(Clone, Debug, Serialize)]
pub struct KhinchinResult {
    pub n: u32,
    pub samples: usize,
    pub exhaustive: bool,
    /// Mean of `‖T_{m_t}(f,g,h)‖_{2/3}^{2/3}` over sign patterns.
    pub a_n: f64,
    /// 95% normal half-width (0 when exhaustive).
    pub ci_half_width: f64,
    /// `(Σ_l (v_l S_l)²)^{1/3}`.
    pub b_n: f64,
    /// `‖φ‖₂² · B_N`.
    pub b_weighted: f64,
    /// `A_N / (‖φ‖₂² B_N)`.
    pub ratio: f64,
    /// Largest sampled `‖T‖^{2/3}` and the pattern attaining it.
    pub best_value: f64,
    pub best_signs: SignAssignment,
}

pub fn khinchin_average(
    seqs: &BlockSequences,
    vw: &VWeights,
    integ: &PeriodicIntegrator,
    phi: &PhiProfile,
    num_signs: usize,
    seed: u64,
) -> Result<KhinchinResult> {
    if num_signs < 64 {
        return Err(Error::param("num_signs", format!("need at least 64 samples, got {num_signs}")));
    }
    let coeffs = coefficients(seqs, vw);
    let range = seqs.active_range();
    let count = range.clone().count();
    let exhaustive = count <= MAX_ENUMERATED_SIGNS;
    let patterns: Vec<SignAssignment> = if exhaustive {
        (0..1u64 << count).map(|i| SignAssignment::enumerated(range.clone(), i)).collect()
    } else {
        (0..num_signs as u64).map(|s| SignAssignment::sampled(range.clone(), seed, s)).collect()
    };
    let values = integ.two_thirds_powers(&coeffs, &patterns);
    let a_n = mean(&values);
    let ci_half_width = if exhaustive {
        0.0
    } else {
        1.96 * std_dev(&values) / (values.len() as f64).sqrt()
    };
    let b_n = coeffs.values().map(|c| c * c).sum::<f64>().cbrt();
    let b_weighted = phi.l2_sq() * b_n;
    let best = values
        .iter()
        .enumerate()
        .fold(0, |b, (i, v)| if *v > values[b] { i } else { b });
    Ok(KhinchinResult {
        n: seqs.n,
        samples: values.len(),
        exhaustive,
        a_n,
        ci_half_width,
        b_n,
        b_weighted,
        ratio: a_n / b_weighted,
        best_value: values[best],
        best_signs: patterns[best].clone(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthReport {
    pub rows: Vec<KhinchinResult>,
    /// Log-log slope of `A_N` against `N`.
    pub slope_a: Option<f64>,
    /// Log-log slope of `B_N` against `N`.
    pub slope_b: Option<f64>,
    pub a_nondecreasing: bool,
}

impl GrowthReport {
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["N", "A_N", "B_N", "ci_half_width"]);
        for r in &self.rows {
            let mut row = vec![r.n.to_string()];
            row.extend([r.a_n, r.b_n, r.ci_half_width].map(fmt_f64));
            t.push(row);
        }
        t
    }

    /// Best patterns of all rows joined into one assignment.
    pub fn stitched(&self) -> Result<SignAssignment> {
        stitch(&self.rows.iter().map(|r| r.best_signs.clone()).collect::<Vec<_>>())
    }
}

/// Samples per unit period large enough to resolve `e^{2πixl}` up to `l_max`.
pub fn period_samples(l_max: i64) -> usize {
    (8 * l_max.max(1) as usize).next_power_of_two()
}

pub fn growth_fit(ns: &[u32], num_signs: usize, seed: u64) -> Result<GrowthReport> {
    if ns.iter().any(|n| !(2..=8).contains(n)) {
        return Err(Error::param("N", "block exponents must lie in 2..=8"));
    }
    let phi = PhiProfile::default();
    let l_max = ns.iter().map(|n| 3 * ((2i64 << n) - 1)).max().unwrap_or(12);
    let integ = PeriodicIntegrator::new(&phi, period_samples(l_max), 16)?;
    let vw = VWeights;
    let rows = ns
        .iter()
        .map(|&n| khinchin_average(&BlockSequences::new(n)?, &vw, &integ, &phi, num_signs, seed))
        .collect::<Result<Vec<_>>>()?;
    let ln: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let la: Vec<f64> = rows.iter().map(|r| r.a_n.ln()).collect();
    let lb: Vec<f64> = rows.iter().map(|r| r.b_n.ln()).collect();
    Ok(GrowthReport {
        slope_a: linear_fit(&ln, &la).map(|f| f.0),
        slope_b: linear_fit(&ln, &lb).map(|f| f.0),
        a_nondecreasing: rows.windows(2).all(|w| w[1].a_n >= w[0].a_n),
        rows,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converged,
    Diverging,
    Undetermined,
}

#[derive(Clone, Debug, Serialize)]
pub struct LqBoundaryReport {
    pub q: f64,
    pub l_max: u64,
    pub partial: f64,
    /// `P(L_max / 10)`.
    pub partial_tenth: f64,
    /// `P(L_max) / P(L_max / 10)`.
    pub decade_ratio: f64,
    /// `∫_{L_max}^∞ (ln y)^{q/2} y^{2-q} dy`; `None` when it diverges (`q ≤ 3`).
    pub tail: Option<f64>,
    /// `tail / (P(L_max) + tail)`.
    pub tail_fraction: f64,
    pub verdict: Verdict,
}

/// `Σ_{3 ≤ l ≤ L} (ln(l-1))^{q/2} (l-1)^{2-q}`.
pub fn partial_sum(q: f64, l_max: u64) -> f64 {
    if l_max < 3 {
        return 0.0;
    }
    (2..l_max)
        .into_par_iter()
        .map(|m| {
            let m = m as f64;
            m.ln().powf(q / 2.0) * m.powf(2.0 - q)
        })
        .sum()
}

/// Increasing summand for `l` small; the tail bound uses the integral from `L_max`,
/// valid once the summand is decreasing (`q > 3`, `L_max ≥ 10³`).
fn tail_integral(q: f64, l_max: u64) -> f64 {
    if q <= 3.0 {
        return f64::INFINITY;
    }
    let a = q / 2.0 + 1.0;
    let s = q - 3.0;
    let x = s * (l_max as f64).ln();
    gamma_ur(a, x) * gamma(a) / s.powf(a)
}

pub fn lq_boundary_check(q: f64, l_max: u64) -> Result<LqBoundaryReport> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::ExponentOutOfRange { q, range: "(0, ∞)" });
    }
    if l_max < 1000 {
        return Err(Error::param("l_max", format!("need at least 1000, got {l_max}")));
    }
    let partial = partial_sum(q, l_max);
    let partial_tenth = partial_sum(q, l_max / 10);
    let decade_ratio = partial / partial_tenth;
    let tail = tail_integral(q, l_max);
    let tail = tail.is_finite().then_some(tail);
    let tail_fraction = tail.map_or(1.0, |t| t / (partial + t));
    let verdict = if decade_ratio > 1.5 {
        Verdict::Diverging
    } else if tail_fraction < 0.01 {
        Verdict::Converged
    } else {
        Verdict::Undetermined
    };
    Ok(LqBoundaryReport {
        q,
        l_max,
        partial,
        partial_tenth,
        decade_ratio,
        tail,
        tail_fraction,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_sequences_are_unit() {
        for n in 2..=8 {
            let s = BlockSequences::new(n).unwrap();
            assert!((s.a.sum_squares() - 1.0).abs() < 1e-12);
            assert_eq!(s.active_range(), 3 * (1 << n)..=3 * ((2 << n) - 1));
        }
        assert!(BlockSequences::new(1).is_err());
    }

    #[test]
    fn convolution_examples() {
        let s = BlockSequences::new(2).unwrap();
        assert_eq!(convolution_sum(&s, 12), 0.125);
        assert_eq!(convolution_sum(&s, 15), 1.25);
        assert_eq!(convolution_sum(&s, 11), 0.0);
        assert_eq!(convolution_sum(&s, 22), 0.0);
    }

    #[test]
    fn psi_plateau_and_support() {
        assert_eq!(psi(0.0), 1.0);
        assert_eq!(psi(0.3), 1.0);
        assert_eq!(psi(0.45), 0.0);
        assert_eq!(psi(-0.5), 0.0);
        assert!(psi(0.4) > 0.0 && psi(0.4) < 1.0);
    }

    #[test]
    fn rademacher_digits() {
        // t = 0.101b: digits 1, 0, 1
        let s = SignAssignment::rademacher(1..=4, 0.625).unwrap();
        assert_eq!(s.signs, vec![-1, 1, -1, 1]);
        assert!(SignAssignment::rademacher(1..=4, 1.0).is_err());
    }

    #[test]
    fn stitch_rejects_overlap() {
        let a = SignAssignment::constant(12..=21, -1);
        let b = SignAssignment::constant(24..=45, 1);
        let s = stitch(&[b.clone(), a.clone()]).unwrap();
        assert_eq!(s.sign(12), -1.0);
        assert_eq!(s.sign(22), 1.0);
        assert!(stitch(&[a.clone(), a]).is_err());
    }
}
