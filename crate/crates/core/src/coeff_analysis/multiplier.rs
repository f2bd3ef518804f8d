use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Axis, BoxDomain};

/// Closed-form multiplier `x ↦ m(x)` on `R^{3d}`.
pub type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Multiplier sampled at the cell midpoints of a box in `R^{3d}`.
///
/// Values are stored row-major with the last axis fastest.
#[derive(Clone)]
pub struct MultiplierGrid {
    d: usize,
    axes: Vec<Axis>,
    values: Vec<f64>,
    evaluator: Option<Evaluator>,
}

impl fmt::Debug for MultiplierGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MultiplierGrid")
            .field("d", &self.d)
            .field("axes", &self.axes)
            .field("samples", &self.values.len())
            .field("evaluator", &self.evaluator.is_some())
            .finish()
    }
}

/// `3d` identical axes `[lo, hi]` with `res` cells each.
pub fn cube_axes(d: usize, lo: f64, hi: f64, res: usize) -> Result<Vec<Axis>> {
    let a = Axis::new(lo, hi, res)?;
    Ok(vec![a; 3 * d])
}

fn check_axes(d: usize, axes: &[Axis]) -> Result<()> {
    if d == 0 {
        return Err(Error::param("d", "dimension must be positive"));
    }
    if axes.len() != 3 * d {
        return Err(Error::param("axes", format!("need {} axes for d = {d}, got {}", 3 * d, axes.len())));
    }
    if let Some(a) = axes.iter().find(|a| a.len < 2) {
        return Err(Error::param("res", format!("need at least 2 samples per axis, got {}", a.len)));
    }
    Ok(())
}

impl MultiplierGrid {
    pub fn new(d: usize, axes: Vec<Axis>, values: Vec<f64>) -> Result<Self> {
        check_axes(d, &axes)?;
        let n: usize = axes.iter().map(|a| a.len).product();
        if values.len() != n {
            return Err(Error::param("values", format!("expected {n} samples, got {}", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("multiplier samples"));
        }
        Ok(MultiplierGrid {
            d,
            axes,
            values,
            evaluator: None,
        })
    }

    pub fn zeros(d: usize, axes: Vec<Axis>) -> Result<Self> {
        let n: usize = axes.iter().map(|a| a.len).product();
        Self::new(d, axes, vec![0.0; n])
    }

    /// Samples `f` at every midpoint and keeps it as the evaluator.
    pub fn from_fn<F>(d: usize, axes: Vec<Axis>, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::from_evaluator(d, axes, Arc::new(f))
    }

    pub fn from_evaluator(d: usize, axes: Vec<Axis>, f: Evaluator) -> Result<Self> {
        check_axes(d, &axes)?;
        let mut g = MultiplierGrid::zeros(d, axes)?;
        let pts: Vec<Vec<f64>> = g.axes.iter().map(|a| a.points()).collect();
        let shape = g.shape();
        g.values.par_iter_mut().enumerate().for_each(|(flat, v)| {
            let mut x = vec![0.0; shape.len()];
            let mut rem = flat;
            for r in (0..shape.len()).rev() {
                x[r] = pts[r][rem % shape[r]];
                rem /= shape[r];
            }
            *v = f(&x);
        });
        if g.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("multiplier samples"));
        }
        g.evaluator = Some(f);
        Ok(g)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Ambient dimension `3d`.
    pub fn dim(&self) -> usize {
        3 * self.d
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.len).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn evaluator(&self) -> Option<&Evaluator> {
        self.evaluator.as_ref()
    }

    pub fn domain(&self) -> BoxDomain {
        BoxDomain {
            lo: self.axes.iter().map(|a| a.lo).collect(),
            hi: self.axes.iter().map(|a| a.hi).collect(),
        }
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.step()).product()
    }

    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes.len()];
        for r in (0..self.axes.len()).rev() {
            idx[r] = flat % self.axes[r].len;
            flat /= self.axes[r].len;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.axes).fold(0, |acc, (i, a)| acc * a.len + i)
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.unravel(flat)
            .iter()
            .zip(&self.axes)
            .map(|(i, a)| a.point(*i))
            .collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `(Σ |m|^q · cell volume)^{1/q}`.
    pub fn lq_norm(&self, q: f64) -> f64 {
        let s: f64 = self.values.par_iter().map(|v| v.abs().powf(q)).sum();
        (s * self.cell_volume()).powf(1.0 / q)
    }

    /// `m(x)`: the evaluator when present, otherwise multilinear interpolation
    /// of the samples (zero outside the box, constant in the boundary half-cells).
    pub fn value_at(&self, x: &[f64]) -> f64 {
        if let Some(f) = &self.evaluator {
            return f(x);
        }
        if !self.domain().contains(x) {
            return 0.0;
        }
        let mut base = vec![0usize; x.len()];
        let mut frac = vec![0.0; x.len()];
        for (r, a) in self.axes.iter().enumerate() {
            let p = ((x[r] - a.lo) / a.step() - 0.5).clamp(0.0, (a.len - 1) as f64);
            let i = (p.floor() as usize).min(a.len - 2);
            base[r] = i;
            frac[r] = p - i as f64;
        }
        let dim = x.len();
        let mut acc = 0.0;
        for corner in 0..1usize << dim {
            let mut w = 1.0;
            let mut idx = base.clone();
            for r in 0..dim {
                if corner >> r & 1 == 1 {
                    idx[r] += 1;
                    w *= frac[r];
                } else {
                    w *= 1.0 - frac[r];
                }
            }
            if w != 0.0 {
                acc += w * self.values[self.flat_index(&idx)];
            }
        }
        acc
    }

    /// `α·self + β·other` on identical axes; evaluators are combined when both exist.
    pub fn linear_combination(&self, alpha: f64, other: &MultiplierGrid, beta: f64) -> Result<MultiplierGrid> {
        if self.axes != other.axes || self.d != other.d {
            return Err(Error::IncompatibleGrid("axes differ".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        let evaluator = match (&self.evaluator, &other.evaluator) {
            (Some(f), Some(g)) => {
                let (f, g) = (f.clone(), g.clone());
                Some(Arc::new(move |x: &[f64]| alpha * f(x) + beta * g(x)) as Evaluator)
            }
            _ => None,
        };
        Ok(MultiplierGrid {
            d: self.d,
            axes: self.axes.clone(),
            values,
            evaluator,
        })
    }

    pub fn scaled(&self, lambda: f64) -> MultiplierGrid {
        let evaluator = self.evaluator.clone().map(|f| Arc::new(move |x: &[f64]| lambda * f(x)) as Evaluator);
        MultiplierGrid {
            d: self.d,
            axes: self.axes.clone(),
            values: self.values.iter().map(|v| lambda * v).collect(),
            evaluator,
        }
    }

    /// `x ↦ m(2^i x)` resampled on the same axes.
    pub fn dilated(&self, i: i32) -> Result<MultiplierGrid> {
        let f = self
            .evaluator
            .clone()
            .ok_or(Error::MissingEvaluator("dilation needs the closed form"))?;
        let s = 2f64.powi(i);
        MultiplierGrid::from_fn(self.d, self.axes.clone(), move |x: &[f64]| {
            let y: Vec<f64> = x.iter().map(|v| s * v).collect();
            f(&y)
        })
    }

    /// Largest finite-difference estimate of `|∂^α m|` over all `|α| ≤ order`.
    pub fn derivative_bound(&self, order: usize) -> f64 {
        let dim = self.dim();
        let mut best = self.sup_norm();
        let mut alphas: Vec<Vec<usize>> = vec![vec![0; dim]];
        for _ in 0..order {
            let mut next = Vec::new();
            for a in &alphas {
                let start = a.iter().rposition(|v| *v > 0).unwrap_or(0);
                for r in start..dim {
                    let mut b = a.clone();
                    b[r] += 1;
                    next.push(b);
                }
            }
            for a in &next {
                best = best.max(self.difference_sup(a));
            }
            alphas = next;
        }
        best
    }

    fn difference_sup(&self, alpha: &[usize]) -> f64 {
        let mut shape = self.shape();
        let mut data = self.values.clone();
        let mut scale = 1.0;
        for (r, &k) in alpha.iter().enumerate() {
            for _ in 0..k {
                if shape[r] < 2 {
                    return 0.0;
                }
                let outer: usize = shape[..r].iter().product();
                let inner: usize = shape[r + 1..].iter().product();
                let len = shape[r];
                let mut out = vec![0.0; outer * (len - 1) * inner];
                for o in 0..outer {
                    for i in 0..len - 1 {
                        for t in 0..inner {
                            out[(o * (len - 1) + i) * inner + t] =
                                data[(o * len + i + 1) * inner + t] - data[(o * len + i) * inner + t];
                        }
                    }
                }
                data = out;
                shape[r] -= 1;
                scale /= self.axes[r].step();
            }
        }
        data.iter().fold(0.0f64, |m, v| m.max(v.abs())) * scale
    }
}
