//! Compactly supported orthonormal wavelets and their tensor products.
//!
//! A [`WaveletSystem`] holds the low-pass filter `h` of a Daubechies-type
//! multiresolution analysis together with the scaling function `φ_F` and the
//! mother wavelet `φ_M` sampled on the dyadic lattice `2^{-R} Z ∩ [0, L-1]`.
//! The tables come from the cascade iteration
//! `φ(x) = √2 Σ_k h_k φ(2x - k)` started from the exact values of `φ` at
//! the integers, and `φ_M(x) = √2 Σ_k g_k φ_F(2x - k)` with
//! `g_k = (-1)^k h_{L-1-k}`.
//!
//! Tensor wavelets on `R^D` (`D = 3d`) are
//! `Φ^{j,G}_n(x) = 2^{jD/2} ∏_r φ_{G_r}(2^j x_r - n_r)`. Scale `j = 0` admits
//! every type tuple and `j ≥ 1` requires at least one mother factor, which
//! makes `{Φ^{j,G}_n}` a complete orthonormal basis of `L²(R^D)`.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::grid::BoxDomain;

/// Daubechies low-pass filters `db1..db10` (orthonormal normalisation, `Σh = √2`).
const DAUBECHIES: [&[f64]; 10] = [
    &[7.07106781186547573e-01, 7.07106781186547573e-01],
    &[4.82962913144534156e-01, 8.36516303737807942e-01, 2.24143868042013389e-01, -1.29409522551260370e-01],
    &[
        3.32670552950082632e-01, 8.06891509311092547e-01, 4.59877502118491543e-01, -1.35011020010254584e-01,
        -8.54412738820266582e-02, 3.52262918857095333e-02,
    ],
    &[
        2.30377813308896506e-01, 7.14846570552915672e-01, 6.30880767929858921e-01, -2.79837694168598543e-02,
        -1.87034811719093086e-01, 3.08413818355607640e-02, 3.28830116668851966e-02, -1.05974017850690317e-02,
    ],
    &[
        1.60102397974192928e-01, 6.03829269797189649e-01, 7.24308528437772936e-01, 1.38428145901320743e-01,
        -2.42294887066382025e-01, -3.22448695846383748e-02, 7.75714938400457188e-02, -6.24149021279827437e-03,
        -1.25807519990819988e-02, 3.33572528547377125e-03,
    ],
    &[
        1.11540743350109467e-01, 4.94623890398453059e-01, 7.51133908021095364e-01, 3.15250351709197629e-01,
        -2.26264693965439828e-01, -1.29766867567261940e-01, 9.75016055873230425e-02, 2.75228655303057269e-02,
        -3.15820393174860298e-02, 5.53842201161496126e-04, 4.77725751094551076e-03, -1.07730108530847959e-03,
    ],
    &[
        7.78520540850091841e-02, 3.96539319481917285e-01, 7.29132090846235092e-01, 4.69782287405193122e-01,
        -1.43906003928564979e-01, -2.24036184993874982e-01, 7.13092192668302594e-02, 8.06126091510830783e-02,
        -3.80299369350144134e-02, -1.65745416306668815e-02, 1.25509985560998405e-02, 4.29577972921366515e-04,
        -1.80164070404749085e-03, 3.53713799974520241e-04,
    ],
    &[
        5.44158422431040081e-02, 3.12871590914299946e-01, 6.75630736297289758e-01, 5.85354683654206731e-01,
        -1.58291052563493059e-02, -2.84015542961546907e-01, 4.72484573913282795e-04, 1.28747426620478472e-01,
        -1.73693010018075474e-02, -4.40882539307947546e-02, 1.39810279173982824e-02, 8.74609404740577662e-03,
        -4.87035299345157414e-03, -3.91740373376947050e-04, 6.75449406450569331e-04, -1.17476784124769535e-04,
    ],
    &[
        3.80779473638783450e-02, 2.43834674612590341e-01, 6.04823123690111153e-01, 6.57288078051300517e-01,
        1.33197385825007564e-01, -2.93273783279174916e-01, -9.68407832229764565e-02, 1.48540749338106376e-01,
        3.07256814793333798e-02, -6.76328290613299743e-02, 2.50947114831451973e-04, 2.23616621236790956e-02,
        -4.72320475775139716e-03, -4.28150368246343026e-03, 1.84764688305622655e-03, 2.30385763523195973e-04,
        -2.51963188942710124e-04, 3.93473203162716026e-05,
    ],
    &[
        2.66700579005555542e-02, 1.88176800077691497e-01, 5.27201188931725628e-01, 6.88459039453603538e-01,
        2.81172343660577473e-01, -2.49846424327315381e-01, -1.95946274377377050e-01, 1.27369340335793252e-01,
        9.30573646035723484e-02, -7.13941471663970817e-02, -2.94575368218758134e-02, 3.32126740593410019e-02,
        3.60655356695616970e-03, -1.07331754833305745e-02, 1.39535174705290106e-03, 1.99240529518505613e-03,
        -6.85856694959711619e-04, -1.16466855129285449e-04, 9.35886703200695919e-05, -1.32642028945212443e-05,
    ],
];

/// Default dyadic depth of the sample tables.
pub const DEFAULT_RESOLUTION: u32 = 14;
pub const MIN_RESOLUTION: u32 = 6;
pub const MAX_RESOLUTION: u32 = 20;

const FILTER_SUM_TOL: f64 = 1e-12;
const FILTER_ORTHO_TOL: f64 = 1e-10;
const CASCADE_BLOWUP: f64 = 1e6;

/// Father (`F`, scaling function) or mother (`M`, wavelet) factor.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    Father,
    Mother,
}

impl Kind {
    pub fn letter(self) -> char {
        match self {
            Kind::Father => 'F',
            Kind::Mother => 'M',
        }
    }
}

/// Type tuple `G ∈ {F, M}^D` packed as a bitmask (bit `r` set means mother).
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeTuple {
    len: u8,
    bits: u32,
}

impl TypeTuple {
    pub const MAX_LEN: usize = 32;

    pub fn from_bits(len: usize, bits: u32) -> Self {
        assert!(len <= Self::MAX_LEN, "type tuple longer than {}", Self::MAX_LEN);
        let mask = if len == 32 { u32::MAX } else { (1u32 << len) - 1 };
        TypeTuple { len: len as u8, bits: bits & mask }
    }

    pub fn all_father(len: usize) -> Self {
        Self::from_bits(len, 0)
    }

    pub fn from_kinds(kinds: &[Kind]) -> Self {
        let bits = kinds
            .iter()
            .enumerate()
            .fold(0u32, |acc, (r, k)| if *k == Kind::Mother { acc | (1 << r) } else { acc });
        Self::from_bits(kinds.len(), bits)
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn kind(&self, r: usize) -> Kind {
        if self.bits >> r & 1 == 1 {
            Kind::Mother
        } else {
            Kind::Father
        }
    }

    pub fn kinds(&self) -> impl Iterator<Item = Kind> + '_ {
        (0..self.len()).map(|r| self.kind(r))
    }

    pub fn has_mother(&self) -> bool {
        self.bits != 0
    }

    /// Whether this tuple is allowed at scale `j`.
    pub fn admissible_at(&self, j: u32) -> bool {
        j == 0 || self.has_mother()
    }

    /// All tuples of length `len` allowed at scale `j`, in bitmask order.
    pub fn admissible(j: u32, len: usize) -> impl Iterator<Item = TypeTuple> {
        assert!(len < Self::MAX_LEN);
        let start = if j == 0 { 0 } else { 1 };
        (start..1u32 << len).map(move |b| TypeTuple::from_bits(len, b))
    }

    /// Restriction to coordinates `range`.
    pub fn sub(&self, start: usize, len: usize) -> TypeTuple {
        TypeTuple::from_bits(len, self.bits >> start)
    }
}

impl fmt::Display for TypeTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in self.kinds() {
            write!(f, "{}", k.letter())?;
        }
        Ok(())
    }
}

impl FromStr for TypeTuple {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.len() > Self::MAX_LEN {
            return Err(Error::Parse(format!("type tuple `{s}` too long")));
        }
        let kinds = s
            .chars()
            .map(|c| match c {
                'F' => Ok(Kind::Father),
                'M' => Ok(Kind::Mother),
                other => Err(Error::Parse(format!("bad type letter `{other}` in `{s}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TypeTuple::from_kinds(&kinds))
    }
}

impl Serialize for TypeTuple {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TypeTuple {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Frame index `(j, G, n)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FrameIndex {
    pub j: u32,
    #[serde(rename = "G")]
    pub g: TypeTuple,
    pub n: Vec<i64>,
}

impl FrameIndex {
    pub fn new(j: u32, g: TypeTuple, n: Vec<i64>) -> Result<Self> {
        if g.len() != n.len() {
            return Err(Error::param(
                "frame index",
                format!("type tuple has length {} but translation has {}", g.len(), n.len()),
            ));
        }
        if !g.admissible_at(j) {
            return Err(Error::param("frame index", format!("type {g} is not admissible at scale {j}")));
        }
        Ok(FrameIndex { j, g, n })
    }

    pub fn dim(&self) -> usize {
        self.n.len()
    }
}

/// Serializable description sufficient to rebuild a [`WaveletSystem`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveletRecord {
    pub family_order: Option<usize>,
    pub filter: Vec<f64>,
    pub vanishing_moments: usize,
    pub support_len: usize,
    pub resolution_levels: u32,
}

/// One-dimensional father/mother pair with dyadic sample tables.
#[derive(Clone, Debug)]
pub struct WaveletSystem {
    family_order: Option<usize>,
    filter: Vec<f64>,
    highpass: Vec<f64>,
    vanishing_moments: usize,
    support_len: usize,
    resolution_levels: u32,
    father: Vec<f64>,
    mother: Vec<f64>,
}

/// Daubechies system with `family_order` vanishing moments (`1` is Haar).
pub fn build_wavelet_system(family_order: usize, resolution_levels: u32) -> Result<WaveletSystem> {
    if !(1..=DAUBECHIES.len()).contains(&family_order) {
        return Err(Error::param(
            "family_order",
            format!("must lie in 1..={}, got {family_order}", DAUBECHIES.len()),
        ));
    }
    let mut sys = WaveletSystem::from_filter(DAUBECHIES[family_order - 1], resolution_levels)?;
    sys.family_order = Some(family_order);
    Ok(sys)
}

impl WaveletSystem {
    /// Builds the system for an arbitrary orthonormal low-pass filter.
    pub fn from_filter(filter: &[f64], resolution_levels: u32) -> Result<WaveletSystem> {
        if !(MIN_RESOLUTION..=MAX_RESOLUTION).contains(&resolution_levels) {
            return Err(Error::param(
                "resolution_levels",
                format!("must lie in {MIN_RESOLUTION}..={MAX_RESOLUTION}, got {resolution_levels}"),
            ));
        }
        validate_filter(filter)?;
        let len = filter.len();
        let support_len = len - 1;
        let highpass: Vec<f64> = (0..len)
            .map(|k| if k % 2 == 0 { 1.0 } else { -1.0 } * filter[len - 1 - k])
            .collect();
        let vanishing_moments = count_vanishing_moments(&highpass);

        let mut father = cascade(filter, resolution_levels)?;
        let mut mother = mother_from_father(&highpass, &father, resolution_levels);

        let h = 0.5f64.powi(resolution_levels as i32);
        for table in [&mut father, &mut mother] {
            let norm = (table.iter().map(|v| v * v).sum::<f64>() * h).sqrt();
            if !(norm.is_finite() && norm > 0.0) {
                return Err(Error::CascadeDiverged("sample table has zero or non-finite norm".into()));
            }
            table.iter_mut().for_each(|v| *v /= norm);
        }

        Ok(WaveletSystem {
            family_order: None,
            filter: filter.to_vec(),
            highpass,
            vanishing_moments,
            support_len,
            resolution_levels,
            father,
            mother,
        })
    }

    pub fn from_record(rec: &WaveletRecord) -> Result<WaveletSystem> {
        let mut sys = WaveletSystem::from_filter(&rec.filter, rec.resolution_levels)?;
        sys.family_order = rec.family_order;
        Ok(sys)
    }

    pub fn record(&self) -> WaveletRecord {
        WaveletRecord {
            family_order: self.family_order,
            filter: self.filter.clone(),
            vanishing_moments: self.vanishing_moments,
            support_len: self.support_len,
            resolution_levels: self.resolution_levels,
        }
    }

    pub fn family_order(&self) -> Option<usize> {
        self.family_order
    }

    pub fn filter(&self) -> &[f64] {
        &self.filter
    }

    pub fn highpass(&self) -> &[f64] {
        &self.highpass
    }

    /// Number of vanishing moments `K` of the mother wavelet.
    pub fn vanishing_moments(&self) -> usize {
        self.vanishing_moments
    }

    /// Both generators are supported in `[0, support_len]`.
    pub fn support_len(&self) -> usize {
        self.support_len
    }

    pub fn resolution_levels(&self) -> u32 {
        self.resolution_levels
    }

    /// Spacing of the sample tables.
    pub fn table_step(&self) -> f64 {
        0.5f64.powi(self.resolution_levels as i32)
    }

    pub fn samples(&self, kind: Kind) -> &[f64] {
        match kind {
            Kind::Father => &self.father,
            Kind::Mother => &self.mother,
        }
    }

    /// Table value at `idx · 2^{-R}`; zero outside the table.
    #[inline]
    pub fn table_at(&self, kind: Kind, idx: i64) -> f64 {
        let t = self.samples(kind);
        if idx < 0 || idx as usize >= t.len() {
            0.0
        } else {
            t[idx as usize]
        }
    }

    /// `φ_kind(t)`, exact on the dyadic lattice and linearly interpolated between.
    pub fn eval(&self, kind: Kind, t: f64) -> f64 {
        let scale = (1u64 << self.resolution_levels) as f64;
        let pos = t * scale;
        if !(pos >= 0.0 && pos < (self.support_len as f64) * scale) {
            return 0.0;
        }
        let i = pos.floor();
        let frac = pos - i;
        let i = i as i64;
        let a = self.table_at(kind, i);
        if frac == 0.0 {
            a
        } else {
            a + frac * (self.table_at(kind, i + 1) - a)
        }
    }

    /// `2^{j/2} φ_kind(2^j x - n)`.
    pub fn eval_1d(&self, kind: Kind, j: u32, n: i64, x: f64) -> f64 {
        let s = (1u64 << j) as f64;
        s.sqrt() * self.eval(kind, s * x - n as f64)
    }

    pub fn sup_norm(&self, kind: Kind) -> f64 {
        self.samples(kind).iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max(‖φ_F‖_∞, ‖φ_M‖_∞)`.
    pub fn sup_norm_max(&self) -> f64 {
        self.sup_norm(Kind::Father).max(self.sup_norm(Kind::Mother))
    }

    /// Riemann-sum `L²` norm of a generator on its table.
    pub fn l2_norm(&self, kind: Kind) -> f64 {
        (self.samples(kind).iter().map(|v| v * v).sum::<f64>() * self.table_step()).sqrt()
    }

    /// `∫ x^α φ_kind(x) dx` by the lattice sum on the table.
    pub fn moment(&self, kind: Kind, alpha: u32) -> f64 {
        let h = self.table_step();
        self.samples(kind)
            .iter()
            .enumerate()
            .map(|(i, v)| (i as f64 * h).powi(alpha as i32) * v)
            .sum::<f64>()
            * h
    }

    /// Translations `n` at scale `j` whose support `2^{-j}[n, n+L-1]` meets the
    /// open interval `(lo, hi)`.
    pub fn translation_range(&self, j: u32, lo: f64, hi: f64) -> RangeInclusive<i64> {
        let s = (1u64 << j) as f64;
        let first = (s * lo - self.support_len as f64).floor() as i64 + 1;
        let last = (s * hi).ceil() as i64 - 1;
        first..=last
    }

    /// One-dimensional inner product `⟨2^{ja/2}φ_a(2^{ja}· - na), 2^{jb/2}φ_b(2^{jb}· - nb)⟩`
    /// on the lattice `2^{-(R + min(ja, jb))} Z`, where both factors hit table points.
    pub fn inner_product_1d(&self, a: (Kind, u32, i64), b: (Kind, u32, i64)) -> f64 {
        let (ka, ja, na) = a;
        let (kb, jb, nb) = b;
        let jmin = ja.min(jb);
        let r = self.resolution_levels;
        let sl = self.support_len as i64;
        // Lattice index i ↔ x = i·2^{-(R+jmin)}; support of (j, n) is i ∈ [n, n+L-1]·2^{R+jmin-j}.
        let span = |j: u32, n: i64| {
            let f = 1i64 << (r + jmin - j);
            (n * f, (n + sl) * f)
        };
        let (a0, a1) = span(ja, na);
        let (b0, b1) = span(jb, nb);
        let lo = a0.max(b0);
        let hi = a1.min(b1);
        if lo >= hi {
            return 0.0;
        }
        let ma = 1i64 << (ja - jmin);
        let mb = 1i64 << (jb - jmin);
        let oa = na << r;
        let ob = nb << r;
        let mut acc = 0.0;
        for i in lo..=hi {
            acc += self.table_at(ka, i * ma - oa) * self.table_at(kb, i * mb - ob);
        }
        let h = 0.5f64.powi((r + jmin) as i32);
        acc * h * ((1u64 << ja) as f64 * (1u64 << jb) as f64).sqrt()
    }

    /// Quadrature inner product of two tensor wavelets of equal dimension.
    pub fn inner_product(&self, a: &FrameIndex, b: &FrameIndex) -> f64 {
        assert_eq!(a.dim(), b.dim(), "inner product of indices with different dimensions");
        (0..a.dim())
            .map(|r| self.inner_product_1d((a.g.kind(r), a.j, a.n[r]), (b.g.kind(r), b.j, b.n[r])))
            .product()
    }

    /// Support of `Φ^{j,G}_n` along one axis.
    pub fn support_1d(&self, j: u32, n: i64) -> (f64, f64) {
        let s = 0.5f64.powi(j as i32);
        (n as f64 * s, (n + self.support_len as i64) as f64 * s)
    }
}

/// `Φ^{j,G}_n(x) = 2^{jD/2} ∏_r φ_{G_r}(2^j x_r - n_r)`.
pub fn tensor_wavelet_eval(sys: &WaveletSystem, idx: &FrameIndex, x: &[f64]) -> f64 {
    assert_eq!(idx.dim(), x.len(), "point dimension does not match the index");
    let mut v = 1.0;
    for (r, xr) in x.iter().enumerate() {
        v *= sys.eval_1d(idx.g.kind(r), idx.j, idx.n[r], *xr);
        if v == 0.0 {
            return 0.0;
        }
    }
    v
}

/// All `(G, n)` at scale `j` whose support meets the interior of `domain`,
/// ordered by type tuple and then translation.
pub fn enumerate_indices(sys: &WaveletSystem, j: u32, domain: &BoxDomain) -> Vec<FrameIndex> {
    let dim = domain.dim();
    if domain.is_empty() || domain.lo.iter().zip(&domain.hi).any(|(a, b)| a >= b) {
        return Vec::new();
    }
    let ranges: Vec<RangeInclusive<i64>> = (0..dim)
        .map(|r| sys.translation_range(j, domain.lo[r], domain.hi[r]))
        .collect();
    let translations = cartesian(&ranges);
    let mut out = Vec::new();
    for g in TypeTuple::admissible(j, dim) {
        out.extend(translations.iter().map(|n| FrameIndex { j, g, n: n.clone() }));
    }
    out
}

pub(crate) fn cartesian(ranges: &[RangeInclusive<i64>]) -> Vec<Vec<i64>> {
    let mut acc: Vec<Vec<i64>> = vec![Vec::new()];
    for r in ranges {
        if r.is_empty() {
            return Vec::new();
        }
        acc = acc
            .into_iter()
            .flat_map(|p| {
                r.clone().map(move |v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    acc
}

fn validate_filter(h: &[f64]) -> Result<()> {
    if h.len() < 2 || h.len() % 2 != 0 {
        return Err(Error::InvalidFilter(format!("length must be even and ≥ 2, got {}", h.len())));
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidFilter("non-finite coefficient".into()));
    }
    let sum: f64 = h.iter().sum();
    if (sum - std::f64::consts::SQRT_2).abs() > FILTER_SUM_TOL {
        return Err(Error::InvalidFilter(format!("coefficients sum to {sum}, expected √2")));
    }
    for m in 0..h.len() / 2 {
        let c: f64 = (0..h.len() - 2 * m).map(|k| h[k] * h[k + 2 * m]).sum();
        let target = if m == 0 { 1.0 } else { 0.0 };
        if (c - target).abs() > FILTER_ORTHO_TOL {
            return Err(Error::InvalidFilter(format!(
                "even-shift autocorrelation at shift {} is {c}, expected {target}",
                2 * m
            )));
        }
    }
    Ok(())
}

fn count_vanishing_moments(g: &[f64]) -> usize {
    let mut k = 0;
    loop {
        let (s, scale) = g.iter().enumerate().fold((0.0, 0.0), |(s, a), (i, v)| {
            let p = (i as f64).powi(k as i32);
            (s + v * p, a + (v * p).abs())
        });
        if k >= g.len() || s.abs() > 1e-8 * scale.max(1.0) {
            return k;
        }
        k += 1;
    }
}

/// Values of `φ` at `i·2^{-levels}`, `0 ≤ i ≤ (L-1)·2^{levels}`, unnormalised.
fn cascade(h: &[f64], levels: u32) -> Result<Vec<f64>> {
    let s = h.len() - 1;
    let c = |i: i64| -> f64 {
        if i < 0 || i as usize >= h.len() {
            0.0
        } else {
            std::f64::consts::SQRT_2 * h[i as usize]
        }
    };
    // φ(S) = 0 for every non-Haar filter; for Haar it is the right-continuous choice.
    // Unknowns φ(0..S-1): rows of (M - I) plus the normalisation Σφ(k) = 1.
    let mut a = vec![vec![0.0; s]; s + 1];
    let mut rhs = vec![0.0; s + 1];
    for i in 0..s {
        for k in 0..s {
            a[i][k] = c(2 * i as i64 - k as i64) - if i == k { 1.0 } else { 0.0 };
        }
    }
    a[s].iter_mut().for_each(|v| *v = 1.0);
    rhs[s] = 1.0;
    let v = least_squares(&a, &rhs)
        .ok_or_else(|| Error::CascadeDiverged("singular eigenvector system at the integers".into()))?;
    let resid = a
        .iter()
        .zip(&rhs)
        .map(|(row, b)| (row.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>() - b).abs())
        .fold(0.0, f64::max);
    if resid > 1e-9 {
        return Err(Error::CascadeDiverged(format!(
            "no eigenvalue-1 eigenvector at the integers (residual {resid:.3e})"
        )));
    }
    let mut cur: Vec<f64> = v;
    cur.push(0.0);

    for level in 1..=levels {
        let half = 1i64 << (level - 1);
        let n = s * (1usize << level) + 1;
        let mut next = vec![0.0; n];
        for (t, out) in next.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in 0..h.len() as i64 {
                let idx = t as i64 - k * half;
                if idx >= 0 && (idx as usize) < cur.len() {
                    acc += c(k) * cur[idx as usize];
                }
            }
            *out = acc;
        }
        let drift = cur
            .iter()
            .enumerate()
            .map(|(i, v)| (next[2 * i] - v).abs())
            .fold(0.0, f64::max);
        let peak = next.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !peak.is_finite() || peak > CASCADE_BLOWUP || drift > 1e-8 * peak.max(1.0) {
            return Err(Error::CascadeDiverged(format!(
                "refinement level {level}: peak {peak:.3e}, drift {drift:.3e}"
            )));
        }
        cur = next;
    }
    Ok(cur)
}

fn mother_from_father(g: &[f64], father: &[f64], levels: u32) -> Vec<f64> {
    let scale = 1i64 << levels;
    (0..father.len() as i64)
        .map(|t| {
            g.iter()
                .enumerate()
                .map(|(k, gk)| {
                    let idx = 2 * t - k as i64 * scale;
                    if idx >= 0 && (idx as usize) < father.len() {
                        std::f64::consts::SQRT_2 * gk * father[idx as usize]
                    } else {
                        0.0
                    }
                })
                .sum()
        })
        .collect()
}

/// Solves `min ‖A x - b‖` through the normal equations with partial pivoting.
fn least_squares(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = a[0].len();
    let mut m = vec![vec![0.0; n + 1]; n];
    for (row, bi) in a.iter().zip(b) {
        for i in 0..n {
            for k in 0..n {
                m[i][k] += row[i] * row[k];
            }
            m[i][n] += row[i] * bi;
        }
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))?;
        if m[piv][col].abs() < 1e-14 {
            return None;
        }
        m.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = m[r][col] / m[col][col];
                for k in col..=n {
                    m[r][k] -= f * m[col][k];
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}
