use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::export;
use crate::wavelet_frame::{FrameIndex, TypeTuple};

/// Sparse wavelet coefficients `(j, G, n) ↦ b^{j,G}_n`; absent keys are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffTensor {
    dim: usize,
    j_max: u32,
    entries: BTreeMap<FrameIndex, f64>,
    pub source_meta: String,
}

/// One JSON-lines record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoeffRecord {
    pub j: u32,
    #[serde(rename = "G")]
    pub g: TypeTuple,
    pub n: Vec<i64>,
    pub b: f64,
}

impl CoeffTensor {
    pub fn new(dim: usize, j_max: u32, source_meta: impl Into<String>) -> Self {
        CoeffTensor {
            dim,
            j_max,
            entries: BTreeMap::new(),
            source_meta: source_meta.into(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn j_max(&self) -> u32 {
        self.j_max
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, idx: FrameIndex, b: f64) -> Result<()> {
        if idx.dim() != self.dim {
            return Err(Error::param("index", format!("dimension {} in a {}-dimensional tensor", idx.dim(), self.dim)));
        }
        if !idx.g.admissible_at(idx.j) || idx.g.len() != idx.n.len() {
            return Err(Error::param("index", format!("invalid frame index {idx:?}")));
        }
        if !b.is_finite() {
            return Err(Error::NonFinite("coefficient"));
        }
        self.j_max = self.j_max.max(idx.j);
        self.entries.insert(idx, b);
        Ok(())
    }

    pub fn get(&self, idx: &FrameIndex) -> Option<f64> {
        self.entries.get(idx).copied()
    }

    /// Coefficient with absent keys read as zero.
    pub fn coefficient(&self, idx: &FrameIndex) -> f64 {
        self.get(idx).unwrap_or(0.0)
    }

    pub fn contains(&self, idx: &FrameIndex) -> bool {
        self.entries.contains_key(idx)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FrameIndex, f64)> {
        self.entries.iter().map(|(k, v)| (k, *v))
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sum_squares(&self) -> f64 {
        self.entries.values().map(|v| v * v).sum()
    }

    /// Distinct `(j, G)` blocks in order.
    pub fn blocks(&self) -> Vec<(u32, TypeTuple)> {
        let mut out: Vec<(u32, TypeTuple)> = self.entries.keys().map(|k| (k.j, k.g)).collect();
        out.dedup();
        out
    }

    /// Translations and coefficients of one `(j, G)` block.
    pub fn block(&self, j: u32, g: TypeTuple) -> BTreeMap<Vec<i64>, f64> {
        let lo = FrameIndex { j, g, n: Vec::new() };
        self.entries
            .range(lo..)
            .take_while(|(k, _)| k.j == j && k.g == g)
            .map(|(k, v)| (k.n.clone(), *v))
            .collect()
    }

    /// `sup_n |b^{j,G}_n|` for every block.
    pub fn block_sup(&self) -> BTreeMap<(u32, TypeTuple), f64> {
        let mut out = BTreeMap::new();
        for (k, v) in &self.entries {
            let e = out.entry((k.j, k.g)).or_insert(0.0f64);
            *e = e.max(v.abs());
        }
        out
    }

    /// Sub-tensor of the entries accepted by `keep`.
    pub fn restrict(&self, mut keep: impl FnMut(&FrameIndex, f64) -> bool) -> CoeffTensor {
        CoeffTensor {
            dim: self.dim,
            j_max: self.j_max,
            entries: self
                .entries
                .iter()
                .filter(|(k, v)| keep(k, **v))
                .map(|(k, v)| (k.clone(), *v))
                .collect(),
            source_meta: self.source_meta.clone(),
        }
    }

    /// `α·self + β·other`, keyed by the union of both supports.
    pub fn linear_combination(&self, alpha: f64, other: &CoeffTensor, beta: f64) -> CoeffTensor {
        let mut out = CoeffTensor::new(self.dim, self.j_max.max(other.j_max), self.source_meta.clone());
        for (k, v) in &self.entries {
            *out.entries.entry(k.clone()).or_insert(0.0) += alpha * v;
        }
        for (k, v) in &other.entries {
            *out.entries.entry(k.clone()).or_insert(0.0) += beta * v;
        }
        out
    }

    pub(crate) fn from_parts(dim: usize, j_max: u32, entries: BTreeMap<FrameIndex, f64>, meta: String) -> Self {
        CoeffTensor {
            dim,
            j_max,
            entries,
            source_meta: meta,
        }
    }

    pub fn records(&self) -> impl Iterator<Item = CoeffRecord> + '_ {
        self.entries.iter().map(|(k, b)| CoeffRecord {
            j: k.j,
            g: k.g,
            n: k.n.clone(),
            b: *b,
        })
    }

    pub fn write_jsonl<W: Write>(&self, w: &mut W) -> Result<()> {
        export::write_jsonl(self.records(), w)
    }

    /// Reads records written by [`CoeffTensor::write_jsonl`]; blank lines are skipped.
    pub fn read_jsonl<R: BufRead>(r: R, dim: usize, source_meta: impl Into<String>) -> Result<Self> {
        let mut t = CoeffTensor::new(dim, 0, source_meta);
        for (line_no, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: CoeffRecord =
                serde_json::from_str(&line).map_err(|e| Error::Parse(format!("line {}: {e}", line_no + 1)))?;
            let idx = FrameIndex::new(rec.j, rec.g, rec.n)?;
            t.insert(idx, rec.b)?;
        }
        Ok(t)
    }
}
