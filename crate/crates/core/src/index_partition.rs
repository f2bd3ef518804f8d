//! Level-set and slice-cardinality partition of weighted index sets.
//!
//! An index is a triple `n = (k1, k2, k3)` of blocks in `Z^d`, stored flat as
//! a vector of length `3d`. The partition runs in stages, recording a
//! re-checkable [`Certificate`] on every node of a [`PartitionTree`]:
//!
//! 1. dyadic level sets `U_r = {n : 2^{-r-1}‖b‖_∞ < |b_n| ≤ 2^{-r}‖b‖_∞}`;
//! 2. per `U_r`, extraction of slice-heavy parts at threshold `|U_r|^{8/9}`;
//! 3. alternating bisection and slice extraction until pieces have at most
//!    `|U_r|^{1/8}` members;
//! 4. per piece, slice extraction at `|piece|^{8/9}` and a greedy split of the
//!    remainder into classes on which every coordinate projection is injective.
//!
//! The fiber of a set over axis `a` at value `v` is the set of members whose
//! block `a` equals `v`. Slice extraction takes fibers over `k3`, then `k1`,
//! then `k2`, each from what the previous steps left.

use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::coeff_analysis::CoeffTensor;
use crate::error::{Error, Result};
use crate::wavelet_frame::TypeTuple;

/// Weights below `2^{-R_MAX-1}‖b‖_∞` fall into the residual bucket.
pub const DEFAULT_R_MAX: u32 = 60;

/// Axis order of the slice extraction: fibers over `k3`, then `k1`, then `k2`.
pub const SLICE_AXES: [usize; 3] = [2, 0, 1];

/// Map `n ↦ b_n` over `n ∈ (Z^d)^3`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct WeightedIndexSet {
    d: usize,
    entries: BTreeMap<Vec<i64>, f64>,
}

#[derive(Serialize, Deserialize)]
struct Entry {
    n: Vec<i64>,
    b: f64,
}

#[derive(Serialize, Deserialize)]
struct SetRepr {
    d: usize,
    entries: Vec<Entry>,
}

impl Serialize for WeightedIndexSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SetRepr {
            d: self.d,
            entries: self.entries.iter().map(|(n, b)| Entry { n: n.clone(), b: *b }).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for WeightedIndexSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = SetRepr::deserialize(d)?;
        WeightedIndexSet::from_entries(r.d, r.entries.into_iter().map(|e| (e.n, e.b)))
            .map_err(serde::de::Error::custom)
    }
}

impl WeightedIndexSet {
    pub fn new(d: usize) -> Self {
        WeightedIndexSet {
            d,
            entries: BTreeMap::new(),
        }
    }

    pub fn from_entries(d: usize, it: impl IntoIterator<Item = (Vec<i64>, f64)>) -> Result<Self> {
        let mut s = WeightedIndexSet::new(d);
        for (n, b) in it {
            s.insert(n, b)?;
        }
        Ok(s)
    }

    /// The `(j, G)` block of a coefficient tensor on `R^{3d}`.
    pub fn from_block(c: &CoeffTensor, j: u32, g: TypeTuple) -> Result<Self> {
        if c.dim() % 3 != 0 {
            return Err(Error::param("tensor", "dimension is not a multiple of 3"));
        }
        Self::from_entries(c.dim() / 3, c.block(j, g))
    }

    pub fn insert(&mut self, n: Vec<i64>, b: f64) -> Result<()> {
        if n.len() != 3 * self.d {
            return Err(Error::param("index", format!("expected length {}, got {}", 3 * self.d, n.len())));
        }
        if !b.is_finite() {
            return Err(Error::NonFinite("weight"));
        }
        self.entries.insert(n, b);
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, n: &[i64]) -> Option<f64> {
        self.entries.get(n).copied()
    }

    pub fn contains(&self, n: &[i64]) -> bool {
        self.entries.contains_key(n)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<i64>, f64)> {
        self.entries.iter().map(|(k, v)| (k, *v))
    }

    pub fn keys(&self) -> impl Iterator<Item = &Vec<i64>> {
        self.entries.keys()
    }

    /// Block `axis ∈ {0, 1, 2}` of an index.
    pub fn coord<'a>(&self, n: &'a [i64], axis: usize) -> &'a [i64] {
        &n[axis * self.d..(axis + 1) * self.d]
    }

    pub fn sup_norm(&self) -> f64 {
        self.entries.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `(Σ |b_n|^q)^{1/q}`.
    pub fn lq_norm(&self, q: f64) -> f64 {
        self.entries.values().map(|v| v.abs().powf(q)).sum::<f64>().powf(1.0 / q)
    }

    /// Fiber sizes over `axis`, keyed by the block value.
    pub fn fiber_sizes(&self, axis: usize) -> HashMap<&[i64], usize> {
        let mut m: HashMap<&[i64], usize> = HashMap::new();
        for n in self.entries.keys() {
            *m.entry(self.coord(n, axis)).or_insert(0) += 1;
        }
        m
    }

    pub fn max_fiber(&self, axis: usize) -> usize {
        self.fiber_sizes(axis).values().copied().max().unwrap_or(0)
    }

    fn with_keys<'a>(&self, keys: impl IntoIterator<Item = &'a Vec<i64>>) -> WeightedIndexSet {
        WeightedIndexSet {
            d: self.d,
            entries: keys.into_iter().map(|k| (k.clone(), self.entries[k])).collect(),
        }
    }

    /// First `ceil(len/2)` members in lexicographic order, and the rest.
    pub fn bisect(&self) -> (WeightedIndexSet, WeightedIndexSet) {
        let half = self.len().div_ceil(2);
        (
            self.with_keys(self.entries.keys().take(half)),
            self.with_keys(self.entries.keys().skip(half)),
        )
    }
}

/// Cardinality threshold, either a plain real or an exact rational power
/// `base^{num/den}` compared in integer arithmetic.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Threshold {
    Real { value: f64 },
    Power { base: u64, num: u32, den: u32 },
}

impl From<f64> for Threshold {
    fn from(value: f64) -> Self {
        Threshold::Real { value }
    }
}

impl Threshold {
    pub fn power(base: usize, num: u32, den: u32) -> Self {
        Threshold::Power {
            base: base as u64,
            num,
            den,
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            Threshold::Real { value } => value,
            Threshold::Power { base, num, den } => (base as f64).powf(num as f64 / den as f64),
        }
    }

    /// `k > threshold`.
    pub fn exceeded_by(&self, k: usize) -> bool {
        match *self {
            Threshold::Real { value } => k as f64 > value,
            Threshold::Power { base, num, den } => {
                let lhs = (k as u128).checked_pow(den);
                let rhs = (base as u128).checked_pow(num);
                match (lhs, rhs) {
                    (Some(l), Some(r)) => l > r,
                    _ => den as f64 * (k as f64).ln() > num as f64 * (base as f64).ln(),
                }
            }
        }
    }

    /// `k ≤ threshold`.
    pub fn admits(&self, k: usize) -> bool {
        !self.exceeded_by(k)
    }
}

/// The claim a node's member set satisfies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    /// The unpartitioned input; nothing is claimed.
    Input,
    /// `2^{-r-1} b_inf < |b_n| ≤ 2^{-r} b_inf`, and the count bound
    /// `|U_r| ≤ 2^q 2^{rq} ‖b|_{U_r}‖_q^q b_inf^{-q}`.
    LevelBand { r: u32, b_inf: f64, q: f64 },
    /// `|b_n| ≤ upper` for every member.
    Residual { upper: f64 },
    /// Every member's fiber over `axis`, within this set, exceeds `threshold`.
    HeavySlice { axis: usize, threshold: Threshold },
    /// Every fiber over every axis has at most `threshold` members.
    LightSlices { threshold: Threshold },
    SizeAtMost { target: Threshold },
    /// Every coordinate projection is injective.
    Diagonal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Operation {
    Leaf,
    LevelSets { r_max: u32 },
    SliceSplit { threshold: Threshold },
    Halve,
    Diagonal { fiber_bound: Threshold },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionNode {
    pub certificate: Certificate,
    pub operation: Operation,
    pub members: WeightedIndexSet,
    pub children: Vec<PartitionNode>,
}

impl PartitionNode {
    fn leaf(members: WeightedIndexSet, certificate: Certificate) -> Self {
        PartitionNode {
            certificate,
            operation: Operation::Leaf,
            members,
            children: Vec::new(),
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn leaves(&self) -> Vec<&PartitionNode> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            if n.is_leaf() {
                out.push(n);
            } else {
                stack.extend(n.children.iter().rev());
            }
        }
        out
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(|c| c.node_count()).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    /// Number of `Halve` operations on the deepest root-to-leaf path.
    pub fn bisection_depth(&self) -> usize {
        let own = matches!(self.operation, Operation::Halve) as usize;
        own + self.children.iter().map(|c| c.bisection_depth()).max().unwrap_or(0)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartitionTree {
    pub q: f64,
    pub r_max: u32,
    pub b_inf: f64,
    pub root: PartitionNode,
}

/// Level sets `U_0..U_{r_max}` and the residual bucket.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelSets {
    pub b_inf: f64,
    pub bands: BTreeMap<u32, WeightedIndexSet>,
    pub residual: WeightedIndexSet,
}

/// Level `r` with `2^{-r-1} b_inf < |b| ≤ 2^{-r} b_inf`, or `None` below `2^{-r_max-1} b_inf`.
fn level_of(b: f64, b_inf: f64, r_max: u32) -> Option<u32> {
    let a = b.abs();
    if a == 0.0 {
        return None;
    }
    let mut r = ((b_inf / a).log2().floor().max(0.0) as u32).saturating_sub(1);
    // scaling by powers of two is exact, so these comparisons decide the band exactly
    while a <= b_inf * 0.5f64.powi(r as i32 + 1) {
        r += 1;
        if r > r_max {
            return None;
        }
    }
    while r > 0 && a > b_inf * 0.5f64.powi(r as i32) {
        r -= 1;
    }
    (r <= r_max).then_some(r)
}

pub fn level_sets(b: &WeightedIndexSet, r_max: u32) -> LevelSets {
    let b_inf = b.sup_norm();
    let mut bands: BTreeMap<u32, WeightedIndexSet> = BTreeMap::new();
    let mut residual = WeightedIndexSet::new(b.d);
    for (n, w) in b.iter() {
        match (b_inf > 0.0).then(|| level_of(w, b_inf, r_max)).flatten() {
            Some(r) => {
                bands
                    .entry(r)
                    .or_insert_with(|| WeightedIndexSet::new(b.d))
                    .entries
                    .insert(n.clone(), w);
            }
            None => {
                residual.entries.insert(n.clone(), w);
            }
        }
    }
    LevelSets { b_inf, bands, residual }
}

/// Result of [`slice_split`]: `heavy[i]` holds the fibers over `SLICE_AXES[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceParts {
    pub heavy: [WeightedIndexSet; 3],
    pub rest: WeightedIndexSet,
}

/// Sequential extraction of members whose fiber over `k3`, then `k1`, then
/// `k2` (within what remains) has more than `threshold` members.
pub fn slice_split(s: &WeightedIndexSet, threshold: impl Into<Threshold>) -> SliceParts {
    let threshold = threshold.into();
    let mut remaining = s.clone();
    let mut heavy: [WeightedIndexSet; 3] = std::array::from_fn(|_| WeightedIndexSet::new(s.d));
    for (slot, &axis) in SLICE_AXES.iter().enumerate() {
        let sizes = remaining.fiber_sizes(axis);
        let (take, keep): (Vec<&Vec<i64>>, Vec<&Vec<i64>>) = remaining
            .entries
            .keys()
            .partition(|n| threshold.exceeded_by(sizes[remaining.coord(n, axis)]));
        heavy[slot] = remaining.with_keys(take);
        let rest = remaining.with_keys(keep);
        remaining = rest;
    }
    SliceParts { heavy, rest: remaining }
}

/// Greedy split into coordinate-injective classes: bucket by `k1` and deal
/// each bucket's members into successive classes, then refine by `k2`, then `k3`.
pub fn diagonal_decompose(s: &WeightedIndexSet, fiber_bound: impl Into<Threshold>) -> Result<Vec<WeightedIndexSet>> {
    let bound = fiber_bound.into();
    for axis in 0..3 {
        let sizes = s.fiber_sizes(axis);
        if let Some(n) = s.keys().find(|n| bound.exceeded_by(sizes[s.coord(n, axis)])) {
            let v = s.coord(n, axis);
            return Err(Error::FiberBoundViolated {
                axis,
                value: v.to_vec(),
                size: sizes[v],
                bound: bound.value(),
            });
        }
    }
    if s.is_empty() {
        return Ok(Vec::new());
    }
    let mut classes: Vec<Vec<&Vec<i64>>> = vec![s.keys().collect()];
    for axis in 0..3 {
        let mut next = Vec::new();
        for class in classes {
            let mut rank: HashMap<&[i64], usize> = HashMap::new();
            let mut sub: Vec<Vec<&Vec<i64>>> = Vec::new();
            for n in class {
                let r = rank.entry(s.coord(n, axis)).or_insert(0);
                if sub.len() <= *r {
                    sub.push(Vec::new());
                }
                sub[*r].push(n);
                *r += 1;
            }
            next.extend(sub);
        }
        classes = next;
    }
    Ok(classes.into_iter().map(|c| s.with_keys(c)).collect())
}

fn is_diagonal(s: &WeightedIndexSet) -> bool {
    (0..3).all(|axis| s.max_fiber(axis) <= 1)
}

fn slice_children(parts: SliceParts, threshold: Threshold) -> (Vec<PartitionNode>, WeightedIndexSet) {
    let mut children = Vec::new();
    for (slot, h) in parts.heavy.into_iter().enumerate() {
        if !h.is_empty() {
            children.push(PartitionNode::leaf(
                h,
                Certificate::HeavySlice {
                    axis: SLICE_AXES[slot],
                    threshold,
                },
            ));
        }
    }
    (children, parts.rest)
}

type Finish<'a> = &'a (dyn Fn(WeightedIndexSet, Certificate) -> Result<PartitionNode> + Sync);

/// Node for `set` under `cert`: bisect while above `target`, extracting slice-heavy parts after each cut.
fn reduce(set: WeightedIndexSet, cert: Certificate, target: Threshold, finish: Finish) -> Result<PartitionNode> {
    if target.admits(set.len()) {
        return finish(set, Certificate::SizeAtMost { target });
    }
    let half = Threshold::Real {
        value: set.len().div_ceil(2) as f64,
    };
    let (a, b) = set.bisect();
    let mut children = Vec::new();
    for part in [a, b] {
        if part.is_empty() {
            continue;
        }
        if target.admits(part.len()) {
            children.push(finish(part, Certificate::SizeAtMost { target })?);
            continue;
        }
        let threshold = Threshold::power(part.len(), 8, 9);
        let (mut kids, rest) = slice_children(slice_split(&part, threshold), threshold);
        if !rest.is_empty() {
            kids.push(reduce(rest, Certificate::LightSlices { threshold }, target, finish)?);
        }
        children.push(PartitionNode {
            certificate: Certificate::SizeAtMost { target: half },
            operation: Operation::SliceSplit { threshold },
            members: part,
            children: kids,
        });
    }
    Ok(PartitionNode {
        certificate: cert,
        operation: Operation::Halve,
        members: set,
        children,
    })
}

/// Piece of a halving run with the claim it satisfies.
#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    pub set: WeightedIndexSet,
    pub certificate: Certificate,
}

/// Subtree of alternating bisection and slice extraction down to pieces of
/// at most `target` members.
pub fn halving_tree(s: &WeightedIndexSet, target: f64) -> Result<PartitionNode> {
    if !(target >= 1.0) {
        return Err(Error::param("target", format!("must be at least 1, got {target}")));
    }
    let t = Threshold::Real { value: target };
    let leaf = |set, cert| Ok(PartitionNode::leaf(set, cert));
    reduce(s.clone(), Certificate::Input, t, &leaf)
}

/// Leaves of [`halving_tree`]: slice-heavy parts and pieces of size ≤ `target`.
pub fn halve_to_target(s: &WeightedIndexSet, target: f64) -> Result<Vec<Piece>> {
    let tree = halving_tree(s, target)?;
    Ok(tree
        .leaves()
        .into_iter()
        .map(|n| Piece {
            set: n.members.clone(),
            certificate: n.certificate.clone(),
        })
        .collect())
}

fn partition_band(r: u32, band: WeightedIndexSet, b_inf: f64, q: f64) -> Result<PartitionNode> {
    let c = band.len();
    let top = Threshold::power(c, 8, 9);
    let target = Threshold::power(c, 1, 8);
    let fiber_bound = Threshold::power(c, 1, 9);

    let finish = move |piece: WeightedIndexSet, cert: Certificate| -> Result<PartitionNode> {
        let threshold = Threshold::power(piece.len(), 8, 9);
        let (mut kids, rest) = slice_children(slice_split(&piece, threshold), threshold);
        if !rest.is_empty() {
            let classes = diagonal_decompose(&rest, fiber_bound)?;
            kids.push(PartitionNode {
                certificate: Certificate::LightSlices { threshold },
                operation: Operation::Diagonal { fiber_bound },
                members: rest,
                children: classes
                    .into_iter()
                    .map(|s| PartitionNode::leaf(s, Certificate::Diagonal))
                    .collect(),
            });
        }
        Ok(PartitionNode {
            certificate: cert,
            operation: Operation::SliceSplit { threshold },
            members: piece,
            children: kids,
        })
    };

    let (mut kids, rest) = slice_children(slice_split(&band, top), top);
    if !rest.is_empty() {
        kids.push(reduce(rest, Certificate::LightSlices { threshold: top }, target, &finish)?);
    }
    Ok(PartitionNode {
        certificate: Certificate::LevelBand { r, b_inf, q },
        operation: Operation::SliceSplit { threshold: top },
        members: band,
        children: kids,
    })
}

/// Full partition with the default `r_max`.
pub fn full_partition(b: &WeightedIndexSet, q: f64) -> Result<PartitionTree> {
    full_partition_with(b, q, DEFAULT_R_MAX)
}

pub fn full_partition_with(b: &WeightedIndexSet, q: f64, r_max: u32) -> Result<PartitionTree> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::ExponentOutOfRange { q, range: "(0, ∞)" });
    }
    let ls = level_sets(b, r_max);
    let bands: Vec<(u32, WeightedIndexSet)> = ls.bands.into_iter().collect();
    let mut children: Vec<PartitionNode> = bands
        .into_par_iter()
        .map(|(r, band)| partition_band(r, band, ls.b_inf, q))
        .collect::<Result<_>>()?;
    if !ls.residual.is_empty() {
        let upper = ls.b_inf * 0.5f64.powi(r_max as i32 + 1);
        children.push(PartitionNode::leaf(ls.residual, Certificate::Residual { upper }));
    }
    Ok(PartitionTree {
        q,
        r_max,
        b_inf: ls.b_inf,
        root: PartitionNode {
            certificate: Certificate::Input,
            operation: Operation::LevelSets { r_max },
            members: b.clone(),
            children,
        },
    })
}

/// One diagonal split: the level-set size it belongs to and its class count.
#[derive(Clone, Debug, Serialize)]
pub struct DiagonalStat {
    pub level_size: u64,
    pub classes: usize,
    /// `classes / level_size^{1/3}`.
    pub ratio: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct VerifyReport {
    pub nodes: usize,
    pub leaves: usize,
    pub depth: usize,
    pub failures: Vec<String>,
    pub diagonal: Vec<DiagonalStat>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn max_diagonal_ratio(&self) -> f64 {
        self.diagonal.iter().fold(0.0, |m, s| m.max(s.ratio))
    }
}

/// Re-checks `cert` against `s`; `Err` carries the reason.
pub fn check_certificate(s: &WeightedIndexSet, cert: &Certificate) -> std::result::Result<(), String> {
    match cert {
        Certificate::Input => Ok(()),
        Certificate::LevelBand { r, b_inf, q } => {
            let upper = b_inf * 0.5f64.powi(*r as i32);
            let lower = upper * 0.5;
            if let Some((n, w)) = s.iter().find(|(_, w)| !(w.abs() > lower && w.abs() <= upper)) {
                return Err(format!("U_{r}: |b{n:?}| = {} outside ({lower}, {upper}]", w.abs()));
            }
            let bound = 2f64.powf(q * (*r as f64 + 1.0)) * s.lq_norm(*q).powf(*q) / b_inf.powf(*q);
            if s.len() as f64 > bound * (1.0 + 1e-12) {
                return Err(format!("U_{r}: size {} exceeds count bound {bound}", s.len()));
            }
            Ok(())
        }
        Certificate::Residual { upper } => match s.iter().find(|(_, w)| w.abs() > *upper) {
            Some((n, w)) => Err(format!("residual member {n:?} has |b| = {} > {upper}", w.abs())),
            None => Ok(()),
        },
        Certificate::HeavySlice { axis, threshold } => {
            let sizes = s.fiber_sizes(*axis);
            if let Some((v, k)) = sizes.iter().find(|(_, k)| !threshold.exceeded_by(**k)) {
                return Err(format!("heavy slice over axis {axis}: fiber {v:?} has only {k} members"));
            }
            if sizes.len() as f64 * threshold.value() > s.len() as f64 * (1.0 + 1e-12) {
                return Err(format!("heavy slice over axis {axis}: {} distinct values", sizes.len()));
            }
            Ok(())
        }
        Certificate::LightSlices { threshold } => {
            for axis in 0..3 {
                let m = s.max_fiber(axis);
                if threshold.exceeded_by(m) {
                    return Err(format!("light slices: fiber of size {m} over axis {axis}"));
                }
            }
            Ok(())
        }
        Certificate::SizeAtMost { target } => {
            if target.exceeded_by(s.len()) {
                Err(format!("size {} exceeds {}", s.len(), target.value()))
            } else {
                Ok(())
            }
        }
        Certificate::Diagonal => {
            if is_diagonal(s) {
                Ok(())
            } else {
                Err("coordinate projection not injective".into())
            }
        }
    }
}

fn verify_node(node: &PartitionNode, path: &str, rep: &mut VerifyReport) {
    rep.nodes += 1;
    if let Err(e) = check_certificate(&node.members, &node.certificate) {
        rep.failures.push(format!("{path}: {e}"));
    }
    if node.is_leaf() {
        rep.leaves += 1;
        // the empty input is covered vacuously
        if !node.members.is_empty() && !matches!(
            node.certificate,
            Certificate::HeavySlice { .. } | Certificate::Diagonal | Certificate::Residual { .. } | Certificate::SizeAtMost { .. }
        ) {
            rep.failures.push(format!("{path}: leaf without a terminal certificate"));
        }
        return;
    }
    let mut seen: HashSet<&Vec<i64>> = HashSet::new();
    for (i, child) in node.children.iter().enumerate() {
        if child.members.is_empty() {
            rep.failures.push(format!("{path}/{i}: empty child"));
        }
        for (n, w) in child.members.iter() {
            if !seen.insert(n) {
                rep.failures.push(format!("{path}/{i}: {n:?} appears in two children"));
            }
            if node.members.get(n) != Some(w) {
                rep.failures.push(format!("{path}/{i}: {n:?} not in parent with the same weight"));
            }
        }
    }
    if seen.len() != node.members.len() {
        rep.failures
            .push(format!("{path}: children cover {} of {} members", seen.len(), node.members.len()));
    }
    if let Operation::Diagonal { fiber_bound } = &node.operation {
        let classes = node.children.len();
        let level_size = match fiber_bound {
            Threshold::Power { base, .. } => *base,
            Threshold::Real { value } => value.powi(9).round() as u64,
        };
        let cap = (fiber_bound.value() * (1.0 + 1e-12)).floor().powi(3);
        if classes as f64 > cap {
            rep.failures.push(format!("{path}: {classes} diagonal classes exceed {cap}"));
        }
        if node.children.iter().any(|c| c.certificate != Certificate::Diagonal) {
            rep.failures.push(format!("{path}: diagonal split with a non-diagonal class"));
        }
        rep.diagonal.push(DiagonalStat {
            level_size,
            classes,
            ratio: classes as f64 / (level_size as f64).cbrt(),
        });
    }
    for (i, child) in node.children.iter().enumerate() {
        verify_node(child, &format!("{path}/{i}"), rep);
    }
}

impl PartitionTree {
    pub fn verify(&self) -> VerifyReport {
        let mut rep = VerifyReport::default();
        verify_node(&self.root, "root", &mut rep);
        rep.depth = self.root.depth();
        rep
    }

    pub fn leaves(&self) -> Vec<&PartitionNode> {
        self.root.leaves()
    }

    /// Leaves with the level `r` of the band that contains them (`None` for the residual).
    pub fn leaves_with_level(&self) -> Vec<(Option<u32>, usize, &PartitionNode)> {
        let mut out = Vec::new();
        for band in &self.root.children {
            let (r, size) = match band.certificate {
                Certificate::LevelBand { r, .. } => (Some(r), band.members.len()),
                _ => (None, band.members.len()),
            };
            out.extend(band.leaves().into_iter().map(|l| (r, size, l)));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(d: usize, items: &[(&[i64], f64)]) -> WeightedIndexSet {
        WeightedIndexSet::from_entries(d, items.iter().map(|(n, b)| (n.to_vec(), *b))).unwrap()
    }

    #[test]
    fn level_set_example() {
        let b = set(1, &[(&[0, 0, 0], 1.0), (&[1, 0, 0], 0.6), (&[2, 0, 0], 0.3), (&[3, 0, 0], -0.2)]);
        let ls = level_sets(&b, 10);
        let keys = |r: u32| ls.bands[&r].keys().map(|k| k[0]).collect::<Vec<_>>();
        assert_eq!(keys(0), vec![0, 1]);
        assert_eq!(keys(1), vec![2]);
        assert_eq!(keys(2), vec![3]);
        assert!(ls.residual.is_empty());
    }

    #[test]
    fn level_boundaries_are_exact() {
        let b = set(1, &[(&[0, 0, 0], 1.0), (&[1, 0, 0], 0.5), (&[2, 0, 0], 0.25), (&[3, 0, 0], 2f64.powi(-61))]);
        let ls = level_sets(&b, 60);
        assert_eq!(ls.bands[&1].len(), 1);
        assert_eq!(ls.bands[&2].len(), 1);
        assert_eq!(ls.residual.len(), 1);
    }

    #[test]
    fn zero_weights_give_no_bands() {
        let b = set(1, &[(&[0, 0, 0], 0.0), (&[1, 0, 0], 0.0)]);
        let ls = level_sets(&b, 60);
        assert!(ls.bands.is_empty());
    }

    #[test]
    fn shared_k1_goes_to_second_part() {
        let items: Vec<(Vec<i64>, f64)> = (0..9).map(|i| (vec![0, i, 10 + i], 1.0)).collect();
        let s = WeightedIndexSet::from_entries(1, items).unwrap();
        let t = 9f64.powf(8.0 / 9.0);
        let p = slice_split(&s, t);
        assert!(p.heavy[0].is_empty());
        assert_eq!(p.heavy[1].len(), 9);
        assert!(p.heavy[2].is_empty());
        assert!(p.rest.is_empty());
    }

    #[test]
    fn diagonal_examples() {
        let s = set(1, &[(&[1, 1, 1], 1.0), (&[2, 2, 2], 1.0), (&[3, 3, 3], 1.0), (&[4, 4, 4], 1.0), (&[5, 5, 5], 1.0)]);
        assert_eq!(diagonal_decompose(&s, 1.0).unwrap().len(), 1);
        let s = set(1, &[(&[1, 1, 1], 1.0), (&[1, 2, 2], 1.0)]);
        assert_eq!(diagonal_decompose(&s, 2.0).unwrap().len(), 2);
        assert!(matches!(diagonal_decompose(&s, 1.0), Err(Error::FiberBoundViolated { axis: 0, .. })));
    }

    #[test]
    fn exact_power_thresholds() {
        let t = Threshold::power(512, 8, 9);
        assert!(!t.exceeded_by(256));
        assert!(t.exceeded_by(257));
        let t = Threshold::power(1, 1, 8);
        assert!(t.admits(1));
        assert!(!t.admits(2));
    }

    #[test]
    fn singleton_tree() {
        let b = set(1, &[(&[3, -1, 2], 0.7)]);
        let tree = full_partition(&b, 2.0).unwrap();
        let leaves = tree.leaves();
        assert_eq!(leaves.len(), 1);
        assert_eq!(leaves[0].certificate, Certificate::Diagonal);
        assert!(tree.verify().ok());
    }

    #[test]
    fn halving_small_set_is_unchanged() {
        let b = set(1, &[(&[0, 0, 0], 1.0), (&[1, 1, 1], 1.0)]);
        let pieces = halve_to_target(&b, 4.0).unwrap();
        assert_eq!(pieces.len(), 1);
        assert_eq!(pieces[0].set, b);
        assert!(halve_to_target(&b, 0.5).is_err());
    }

    #[test]
    fn tree_json_round_trip() {
        let b = set(1, &[(&[0, 0, 0], 1.0), (&[0, 1, 1], 0.3), (&[2, 1, 0], -0.9)]);
        let tree = full_partition(&b, 2.0).unwrap();
        let s = crate::export::to_stable_json(&tree).unwrap();
        let back: PartitionTree = serde_json::from_str(&s).unwrap();
        assert_eq!(back.root, tree.root);
    }
}
