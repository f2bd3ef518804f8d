//! Uniform midpoint lattices and axis-aligned boxes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `len` cells of equal width covering `[lo, hi]`; samples sit at cell midpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub len: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, len: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return Err(Error::param("axis", format!("need finite lo < hi, got [{lo}, {hi}]")));
        }
        if len == 0 {
            return Err(Error::param("axis", "need at least one cell"));
        }
        Ok(Axis { lo, hi, len })
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / self.len as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.step()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.point(i)).collect()
    }

    /// Samples per unit length.
    pub fn density(&self) -> f64 {
        self.len as f64 / (self.hi - self.lo)
    }

    /// Indices `i` whose midpoint lies in the closed interval `[a, b]`.
    pub fn indices_within(&self, a: f64, b: f64) -> std::ops::Range<usize> {
        let h = self.step();
        let first = ((a - self.lo) / h - 0.5).ceil().max(0.0);
        let last = ((b - self.lo) / h - 0.5).floor();
        if last < 0.0 || first >= self.len as f64 || last < first {
            return 0..0;
        }
        let last = (last as usize).min(self.len - 1);
        first as usize..last + 1
    }
}

/// Closed axis-aligned box `∏ [lo_r, hi_r]`. A box with some `hi_r < lo_r` is empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::param("box", "corner dimensions differ"));
        }
        if lo.iter().chain(&hi).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("box corners"));
        }
        Ok(BoxDomain { lo, hi })
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        BoxDomain {
            lo: vec![lo; dim],
            hi: vec![hi; dim],
        }
    }

    /// The empty box in `dim` dimensions.
    pub fn empty(dim: usize) -> Self {
        BoxDomain::cube(dim, 1.0, 0.0)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(a, b)| b < a)
    }

    pub fn volume(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (a, b))| *a <= *v && *v <= *b)
    }
}
