//! Wavelet analysis of sampled multipliers.
//!
//! Coefficients `b^{j,G}_n = ⟨Φ^{j,G}_n, m⟩` are computed by the midpoint rule
//! on the multiplier grid. The tensor structure of `Φ^{j,G}_n` makes the
//! quadrature separable: one sparse contraction per axis turns the sample
//! array into the full coefficient array of a scale. Synthesis is the
//! transposed sequence of contractions.

mod multiplier;
mod tensor;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

pub use multiplier::{cube_axes, Evaluator, MultiplierGrid};
pub use tensor::{CoeffRecord, CoeffTensor};

use crate::error::{Error, Result};
use crate::grid::Axis;
use crate::stats::linear_fit;
use crate::wavelet_frame::{FrameIndex, Kind, TypeTuple, WaveletSystem};

/// Coefficients below this fraction of the largest one are dropped.
pub const DROP_RELATIVE: f64 = 1e-14;

/// Default truncation scale.
pub const DEFAULT_J_MAX: u32 = 4;

type Rows = Vec<Vec<(usize, f64)>>;

/// Sampled generators of one scale along one axis.
///
/// Row `t·count + (n - n_min)` holds `2^{j/2} φ_t(2^j x_i - n)` (times the
/// cell width when built for analysis) at the grid indices `i` it touches.
struct AxisBasis {
    n_min: i64,
    count: usize,
    rows: Rows,
}

fn axis_basis(sys: &WaveletSystem, axis: &Axis, j: u32, weighted: bool) -> AxisBasis {
    let range = sys.translation_range(j, axis.lo, axis.hi);
    let n_min = *range.start();
    let count = (range.end() - range.start() + 1).max(0) as usize;
    let amp = 2f64.powf(j as f64 / 2.0) * if weighted { axis.step() } else { 1.0 };
    let s = (1u64 << j) as f64;
    let mut rows = Vec::with_capacity(2 * count);
    for kind in [Kind::Father, Kind::Mother] {
        for n in range.clone() {
            let (lo, hi) = sys.support_1d(j, n);
            let row = axis
                .indices_within(lo, hi)
                .filter_map(|i| {
                    let v = sys.eval(kind, s * axis.point(i) - n as f64);
                    (v != 0.0).then_some((i, amp * v))
                })
                .collect();
            rows.push(row);
        }
    }
    AxisBasis { n_min, count, rows }
}

fn transpose(rows: &Rows, len: usize) -> Rows {
    let mut cols: Rows = vec![Vec::new(); len];
    for (r, row) in rows.iter().enumerate() {
        for &(i, w) in row {
            cols[i].push((r, w));
        }
    }
    cols
}

/// Replaces axis `axis` of a row-major array by `out[r] = Σ_{(i,w) ∈ rows[r]} w·data[i]`.
fn contract(data: &[f64], shape: &[usize], axis: usize, rows: &Rows) -> Vec<f64> {
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let len = shape[axis];
    let nr = rows.len();
    let mut out = vec![0.0; outer * nr * inner];
    if out.is_empty() {
        return out;
    }
    let fill = |o: usize, r: usize, dst: &mut [f64]| {
        for &(i, w) in &rows[r] {
            let start = (o * len + i) * inner;
            for (d, s) in dst.iter_mut().zip(&data[start..start + inner]) {
                *d += w * s;
            }
        }
    };
    if inner >= 64 {
        out.par_chunks_mut(inner)
            .enumerate()
            .for_each(|(k, dst)| fill(k / nr, k % nr, dst));
    } else {
        out.par_chunks_mut(nr * inner).enumerate().for_each(|(o, block)| {
            for (r, dst) in block.chunks_mut(inner).enumerate() {
                fill(o, r, dst);
            }
        });
    }
    out
}

fn check_resolution(m: &MultiplierGrid, j_max: u32) -> Result<()> {
    let required = 2f64.powi(j_max as i32 + 2);
    for (axis, a) in m.axes().iter().enumerate() {
        if a.density() < required {
            return Err(Error::ResolutionTooCoarse {
                axis,
                per_unit: a.density(),
                j_max,
                required,
            });
        }
    }
    Ok(())
}

/// All coefficients of scale `j` for indices whose support meets the grid box,
/// in index order and without thresholding.
pub fn analyze_scale(m: &MultiplierGrid, sys: &WaveletSystem, j: u32) -> Vec<(FrameIndex, f64)> {
    let bases: Vec<AxisBasis> = m.axes().iter().map(|a| axis_basis(sys, a, j, true)).collect();
    let mut shape = m.shape();
    let mut data = m.values().to_vec();
    for (r, b) in bases.iter().enumerate() {
        data = contract(&data, &shape, r, &b.rows);
        shape[r] = b.rows.len();
    }
    let dim = shape.len();
    let mut out = Vec::with_capacity(data.len());
    for (flat, v) in data.iter().enumerate() {
        let mut rem = flat;
        let mut n = vec![0i64; dim];
        let mut bits = 0u32;
        for r in (0..dim).rev() {
            let c = rem % shape[r];
            rem /= shape[r];
            let b = &bases[r];
            if c >= b.count {
                bits |= 1 << r;
            }
            n[r] = b.n_min + (c % b.count) as i64;
        }
        let g = TypeTuple::from_bits(dim, bits);
        if g.admissible_at(j) {
            out.push((FrameIndex { j, g, n }, *v));
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

/// Wavelet coefficients of `m` for all scales `0..=j_max`.
pub fn analyze(m: &MultiplierGrid, sys: &WaveletSystem, j_max: u32) -> Result<CoeffTensor> {
    check_resolution(m, j_max)?;
    let mut all = BTreeMap::new();
    for j in 0..=j_max {
        all.extend(analyze_scale(m, sys, j));
    }
    let max = all.values().fold(0.0f64, |a, b| a.max(b.abs()));
    let cut = DROP_RELATIVE * max;
    all.retain(|_, b| *b != 0.0 && b.abs() >= cut);
    let meta = format!(
        "analyze: d={}, shape={:?}, filter_len={}, resolution={}",
        m.d(),
        m.shape(),
        sys.filter().len(),
        sys.resolution_levels()
    );
    Ok(CoeffTensor::from_parts(m.dim(), j_max, all, meta))
}

/// `Σ b·Φ` sampled at the midpoints of `axes`.
pub fn reconstruct(c: &CoeffTensor, sys: &WaveletSystem, d: usize, axes: &[Axis]) -> Result<MultiplierGrid> {
    let mut grid = MultiplierGrid::zeros(d, axes.to_vec())?;
    if c.dim() != grid.dim() {
        return Err(Error::IncompatibleGrid(format!(
            "tensor dimension {} vs grid dimension {}",
            c.dim(),
            grid.dim()
        )));
    }
    let mut total = vec![0.0; grid.len()];
    let mut scales: Vec<u32> = c.iter().map(|(k, _)| k.j).collect();
    scales.dedup();
    for j in scales {
        let bases: Vec<AxisBasis> = axes.iter().map(|a| axis_basis(sys, a, j, false)).collect();
        let mut shape: Vec<usize> = bases.iter().map(|b| b.rows.len()).collect();
        let mut data = vec![0.0; shape.iter().product()];
        for (idx, b) in c.iter().filter(|(k, _)| k.j == j) {
            let mut flat = 0usize;
            let mut inside = true;
            for (r, basis) in bases.iter().enumerate() {
                let off = idx.n[r] - basis.n_min;
                if off < 0 || off as usize >= basis.count {
                    inside = false;
                    break;
                }
                let t = (idx.g.kind(r) == Kind::Mother) as usize;
                flat = flat * shape[r] + t * basis.count + off as usize;
            }
            if inside {
                data[flat] += b;
            }
        }
        for (r, basis) in bases.iter().enumerate() {
            let cols = transpose(&basis.rows, axes[r].len);
            data = contract(&data, &shape, r, &cols);
            shape[r] = axes[r].len;
        }
        total.iter_mut().zip(&data).for_each(|(t, v)| *t += v);
    }
    grid = MultiplierGrid::new(d, axes.to_vec(), total)?;
    Ok(grid)
}

/// Sequence-space norm `‖(Σ |b 2^{jD/2} χ_{Q_jn}|²)^{1/2}‖_{L^q}` with
/// `Q_jn` the open cube of side `2^{1-j}` centred at `2^{-j} n`.
///
/// The square function is piecewise constant on the lattice of side
/// `2^{-j_top}` (`j_top` the finest scale present), so the cell-centre sum
/// below is the exact integral.
pub fn frame_norm_lq(c: &CoeffTensor, q: f64) -> Result<f64> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::ExponentOutOfRange { q, range: "[1, ∞)" });
    }
    if c.is_empty() {
        return Ok(0.0);
    }
    let dim = c.dim();
    let j_top = c.iter().map(|(k, _)| k.j).max().unwrap_or(0);

    struct Level {
        j: u32,
        lo: Vec<i64>,
        shape: Vec<usize>,
        energy: Vec<f64>,
    }
    let mut levels: Vec<Level> = Vec::new();
    let mut cell_lo = vec![i64::MAX; dim];
    let mut cell_hi = vec![i64::MIN; dim];
    let mut scales: Vec<u32> = c.iter().map(|(k, _)| k.j).collect();
    scales.dedup();
    for j in scales {
        let mut lo = vec![i64::MAX; dim];
        let mut hi = vec![i64::MIN; dim];
        for (k, _) in c.iter().filter(|(k, _)| k.j == j) {
            for r in 0..dim {
                lo[r] = lo[r].min(k.n[r]);
                hi[r] = hi[r].max(k.n[r]);
            }
        }
        let shape: Vec<usize> = lo.iter().zip(&hi).map(|(a, b)| (b - a + 1) as usize).collect();
        let mut energy = vec![0.0; shape.iter().product()];
        for (k, b) in c.iter().filter(|(k, _)| k.j == j) {
            let flat = (0..dim).fold(0usize, |acc, r| acc * shape[r] + (k.n[r] - lo[r]) as usize);
            energy[flat] += b * b;
        }
        let f = 1i64 << (j_top - j);
        for r in 0..dim {
            cell_lo[r] = cell_lo[r].min((lo[r] - 1) * f);
            cell_hi[r] = cell_hi[r].max((hi[r] + 1) * f);
        }
        levels.push(Level { j, lo, shape, energy });
    }

    let cells: Vec<usize> = cell_lo.iter().zip(&cell_hi).map(|(a, b)| (b - a) as usize).collect();
    let total_cells: usize = cells.iter().product();
    let weights: Vec<f64> = levels.iter().map(|l| 2f64.powi((dim as u32 * l.j) as i32)).collect();
    // per level, per axis, per cell coordinate: the lower candidate translation offset
    let floors: Vec<Vec<Vec<i64>>> = levels
        .iter()
        .map(|l| {
            (0..dim)
                .map(|r| {
                    (0..cells[r])
                        .map(|k| {
                            let u = cell_lo[r] + k as i64;
                            // floor((u + 1/2)·2^{j - j_top}) - lo
                            (u >> (j_top - l.j)) - l.lo[r]
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    let integral: f64 = (0..total_cells)
        .into_par_iter()
        .map(|flat| {
            let mut coords = vec![0usize; dim];
            let mut rem = flat;
            for r in (0..dim).rev() {
                coords[r] = rem % cells[r];
                rem /= cells[r];
            }
            let mut s = 0.0;
            for (li, l) in levels.iter().enumerate() {
                let mut acc = 0.0;
                'corner: for corner in 0..1usize << dim {
                    let mut off = 0usize;
                    for r in 0..dim {
                        let n = floors[li][r][coords[r]] + (corner >> r & 1) as i64;
                        if n < 0 || n as usize >= l.shape[r] {
                            continue 'corner;
                        }
                        off = off * l.shape[r] + n as usize;
                    }
                    acc += l.energy[off];
                }
                s += weights[li] * acc;
            }
            s.powf(q / 2.0)
        })
        .sum();
    let cell_vol = 2f64.powi(-((dim as u32 * j_top) as i32));
    Ok((integral * cell_vol).powf(1.0 / q))
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockLqRow {
    pub j: u32,
    #[serde(rename = "G")]
    pub g: TypeTuple,
    pub count: usize,
    pub lq_norm: f64,
    pub envelope: f64,
    pub ratio: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockLqReport {
    pub q: f64,
    pub m_norm_q: f64,
    pub limit: f64,
    pub rows: Vec<BlockLqRow>,
    pub max_ratio: f64,
    pub any_flagged: bool,
    /// `(j, max_G ratio)` per scale.
    pub per_scale: Vec<(u32, f64)>,
    /// Least-squares slope of `log₂ max_G ratio` against `j`, when defined.
    pub slope: Option<f64>,
}

/// Per-block ratios `‖b^{j,G}‖_{ℓ^q} / (2^{jD(1/q-1/2)} m_norm_q)`, flagged above `limit`.
pub fn lq_coeff_bound_check(c: &CoeffTensor, q: f64, m_norm_q: f64, limit: f64) -> BlockLqReport {
    let dim = c.dim() as f64;
    let mut rows = Vec::new();
    for (j, g) in c.blocks() {
        let block = c.block(j, g);
        let lq = block.values().map(|b| b.abs().powf(q)).sum::<f64>().powf(1.0 / q);
        let envelope = 2f64.powf(dim * j as f64 * (1.0 / q - 0.5)) * m_norm_q;
        let ratio = if lq == 0.0 {
            0.0
        } else if envelope == 0.0 {
            f64::INFINITY
        } else {
            lq / envelope
        };
        rows.push(BlockLqRow {
            j,
            g,
            count: block.len(),
            lq_norm: lq,
            envelope,
            ratio,
            flagged: ratio > limit,
        });
    }
    let mut per_scale: BTreeMap<u32, f64> = BTreeMap::new();
    for r in &rows {
        let e = per_scale.entry(r.j).or_insert(0.0);
        *e = e.max(r.ratio);
    }
    let per_scale: Vec<(u32, f64)> = per_scale.into_iter().collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = per_scale
        .iter()
        .filter(|(_, v)| *v > 0.0 && v.is_finite())
        .map(|(j, v)| (*j as f64, v.log2()))
        .unzip();
    BlockLqReport {
        q,
        m_norm_q,
        limit,
        max_ratio: rows.iter().fold(0.0, |m, r| m.max(r.ratio)),
        any_flagged: rows.iter().any(|r| r.flagged),
        slope: linear_fit(&xs, &ys).map(|(s, _)| s),
        rows,
        per_scale,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayFit {
    /// Smallest slope over type tuples.
    pub slope: f64,
    /// Largest slope over type tuples; the uniform decay rate.
    pub worst_slope: f64,
    pub per_type: Vec<(TypeTuple, f64)>,
    /// `(j, G, sup_n |b|)` samples used by the fits.
    pub samples: Vec<(u32, TypeTuple, f64)>,
}

/// Least-squares slope of `log₂ sup_n |b^{j,G}_n|` against `j ∈ [1, j_max]` per type tuple.
pub fn decay_slope(c: &CoeffTensor) -> Result<DecayFit> {
    let available = c.j_max() as usize;
    if available < 3 {
        return Err(Error::TooFewScales { required: 3, available });
    }
    let sup = c.block_sup();
    let mut per_type = Vec::new();
    let mut samples = Vec::new();
    for g in TypeTuple::admissible(1, c.dim()) {
        let pts: Vec<(f64, f64)> = (1..=c.j_max())
            .filter_map(|j| sup.get(&(j, g)).map(|v| (j, *v)))
            .filter(|(_, v)| *v > 0.0)
            .map(|(j, v)| {
                samples.push((j, g, v));
                (j as f64, v.log2())
            })
            .collect();
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        if xs.len() >= 3 {
            if let Some((s, _)) = linear_fit(&xs, &ys) {
                per_type.push((g, s));
            }
        }
    }
    if per_type.is_empty() {
        return Err(Error::TooFewScales { required: 3, available: 0 });
    }
    Ok(DecayFit {
        slope: per_type.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
        worst_slope: per_type.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
        per_type,
        samples,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DilationReport {
    pub i: i32,
    pub j: u32,
    /// `2^{-iD/2}`.
    pub factor: f64,
    pub compared: usize,
    /// Indices present at scale `j` with no counterpart at scale `j - i` in the grid box.
    pub unmatched: usize,
    pub max_abs_diff: f64,
    pub max_rhs: f64,
    pub rel_error: f64,
    /// `‖LHS‖₂ / ‖factor·RHS‖₂` over the compared indices.
    pub norm_ratio: f64,
}

/// Compares `⟨Φ^{j,G}_n, m(2^i ·)⟩` with `2^{-iD/2} ⟨Φ^{j-i,G}_n, m⟩`, both by
/// quadrature on the grid of `m`. The identity assumes `m` vanishes near the
/// boundary of the grid box and of its `2^{-i}` dilate.
pub fn dilation_covariance_check(sys: &WaveletSystem, m: &MultiplierGrid, i: i32, j: u32) -> Result<DilationReport> {
    let coarse = j as i64 - i as i64;
    if coarse < 0 {
        return Err(Error::ScaleOutOfRange { scale: coarse, j_max: j });
    }
    check_resolution(m, j.max(coarse as u32))?;
    let lhs = analyze_scale(&m.dilated(i)?, sys, j);
    let rhs: BTreeMap<(TypeTuple, Vec<i64>), f64> = analyze_scale(m, sys, coarse as u32)
        .into_iter()
        .map(|(k, v)| ((k.g, k.n), v))
        .collect();
    let factor = 2f64.powf(-(i as f64) * m.dim() as f64 / 2.0);
    let (mut compared, mut unmatched) = (0usize, 0usize);
    let (mut max_diff, mut max_rhs, mut l2, mut r2) = (0.0f64, 0.0f64, 0.0, 0.0);
    for (k, l) in lhs {
        match rhs.get(&(k.g, k.n)) {
            Some(r) if k.g.admissible_at(coarse as u32) => {
                let r = factor * r;
                compared += 1;
                max_diff = max_diff.max((l - r).abs());
                max_rhs = max_rhs.max(r.abs());
                l2 += l * l;
                r2 += r * r;
            }
            _ => unmatched += 1,
        }
    }
    Ok(DilationReport {
        i,
        j,
        factor,
        compared,
        unmatched,
        max_abs_diff: max_diff,
        max_rhs,
        rel_error: if max_rhs > 0.0 { max_diff / max_rhs } else { max_diff },
        norm_ratio: if r2 > 0.0 { (l2 / r2).sqrt() } else { 1.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelet_frame::build_wavelet_system;

    #[test]
    fn contraction_matches_dense() {
        // 2x3 array, contract axis 1 with two rows
        let data = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let rows: Rows = vec![vec![(0, 1.0), (2, 1.0)], vec![(1, 2.0)]];
        assert_eq!(contract(&data, &[2, 3], 1, &rows), vec![4.0, 4.0, 10.0, 10.0]);
        let rows: Rows = vec![vec![(0, 1.0), (1, -1.0)]];
        assert_eq!(contract(&data, &[2, 3], 0, &rows), vec![-3.0, -3.0, -3.0]);
    }

    #[test]
    fn zero_multiplier() {
        let sys = build_wavelet_system(2, 10).unwrap();
        let m = MultiplierGrid::zeros(1, cube_axes(1, -1.0, 1.0, 32).unwrap()).unwrap();
        let c = analyze(&m, &sys, 2).unwrap();
        assert!(c.is_empty());
        assert_eq!(frame_norm_lq(&c, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn coarse_grid_refused() {
        let sys = build_wavelet_system(2, 10).unwrap();
        let m = MultiplierGrid::zeros(1, cube_axes(1, -1.0, 1.0, 16).unwrap()).unwrap();
        assert!(matches!(analyze(&m, &sys, 2), Err(Error::ResolutionTooCoarse { .. })));
    }

    #[test]
    fn single_cube_frame_norm() {
        let mut c = CoeffTensor::new(3, 2, "single");
        c.insert(FrameIndex::new(2, "FMF".parse().unwrap(), vec![1, -2, 0]).unwrap(), -0.5)
            .unwrap();
        for q in [1.0, 2.0, 3.5] {
            let want = 0.5 * 2f64.powf(3.0 * 2.0 / 2.0) * 2f64.powf((1.0 - 2.0) * 3.0 / q);
            let got = frame_norm_lq(&c, q).unwrap();
            assert!((got / want - 1.0).abs() < 1e-12, "q={q}: {got} vs {want}");
        }
        assert!(frame_norm_lq(&c, 0.5).is_err());
    }

    #[test]
    fn decay_needs_three_scales() {
        let c = CoeffTensor::new(3, 2, "");
        assert!(matches!(decay_slope(&c), Err(Error::TooFewScales { .. })));
    }

    #[test]
    fn block_lq_on_empty_tensor() {
        let r = lq_coeff_bound_check(&CoeffTensor::new(3, 4, ""), 2.0, 1.0, 10.0);
        assert!(r.rows.is_empty());
        assert_eq!(r.max_ratio, 0.0);
        assert!(!r.any_flagged);
    }
}
