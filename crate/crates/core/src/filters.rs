//! Prototype filters and the filter-bank matrices built from them.
//!
//! A prototype `g` of length `O·N` is split into `2O` half-symbol segments
//! `g_p`. One multicarrier symbol `q` of length `N` is shaped as
//! `s[m] = g[m]·q[m mod N]`, `m < O·N`; successive symbols start `N/2`
//! samples apart and overlap-add.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{AfbmError, Result};

/// Overlap factor stored as a count of half-symbols (`2O`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Overlap {
    halves: usize,
}

impl Overlap {
    pub const HERMITE: Overlap = Overlap { halves: 3 };
    pub const PHYDYAS: Overlap = Overlap { halves: 8 };

    pub fn from_halves(halves: usize) -> Result<Self> {
        if halves == 0 {
            return Err(AfbmError::Config("overlap factor must be positive".into()));
        }
        Ok(Self { halves })
    }

    /// Rejects values for which `2O` is not an integer.
    pub fn from_factor(o: f64) -> Result<Self> {
        let twice = 2.0 * o;
        if !twice.is_finite() || twice <= 0.0 || (twice - twice.round()).abs() > 1e-9 {
            return Err(AfbmError::Config(format!("overlap factor {o} is not a positive multiple of 1/2")));
        }
        Self::from_halves(twice.round() as usize)
    }

    pub fn halves(self) -> usize {
        self.halves
    }

    pub fn factor(self) -> f64 {
        self.halves as f64 / 2.0
    }

    /// Filter length `O·N`.
    pub fn filter_len(self, n: usize) -> usize {
        self.halves * n / 2
    }
}

impl fmt::Display for Overlap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.factor())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FilterFamily {
    Hermite,
    Phydyas,
    Custom,
}

impl FilterFamily {
    pub fn default_overlap(self) -> Option<Overlap> {
        match self {
            FilterFamily::Hermite => Some(Overlap::HERMITE),
            FilterFamily::Phydyas => Some(Overlap::PHYDYAS),
            FilterFamily::Custom => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FilterFamily::Hermite => "hermite",
            FilterFamily::Phydyas => "phydyas",
            FilterFamily::Custom => "custom",
        }
    }
}

impl fmt::Display for FilterFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterFamily {
    type Err = AfbmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hermite" => Ok(FilterFamily::Hermite),
            "phydyas" => Ok(FilterFamily::Phydyas),
            "custom" => Ok(FilterFamily::Custom),
            other => Err(AfbmError::Parse(format!("unknown filter family '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeFilter {
    taps: Vec<f64>,
    overlap: Overlap,
    fft_size: usize,
    family: FilterFamily,
}

impl PrototypeFilter {
    /// Wraps user taps. The length must be exactly `O·N`; taps are used as
    /// given (no normalization) so unit-energy is the caller's choice.
    pub fn custom(taps: Vec<f64>, overlap: Overlap, fft_size: usize) -> Result<Self> {
        Self::checked(taps, overlap, fft_size, FilterFamily::Custom)
    }

    fn checked(taps: Vec<f64>, overlap: Overlap, fft_size: usize, family: FilterFamily) -> Result<Self> {
        if fft_size == 0 || fft_size % 2 != 0 {
            return Err(AfbmError::Config(format!("filter bank size N must be even and positive, got {fft_size}")));
        }
        if (overlap.halves() * fft_size) % 2 != 0 {
            return Err(AfbmError::Config(format!("O·N = {}·{fft_size} is not an integer", overlap.factor())));
        }
        let expected = overlap.filter_len(fft_size);
        if taps.len() != expected {
            return Err(AfbmError::Config(format!(
                "prototype filter needs O·N = {expected} taps, got {}",
                taps.len()
            )));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(AfbmError::Config("prototype filter taps must be finite".into()));
        }
        let energy: f64 = taps.iter().map(|t| t * t).sum();
        if energy <= 0.0 {
            return Err(AfbmError::Config("prototype filter has zero energy".into()));
        }
        Ok(Self { taps, overlap, fft_size, family })
    }

    /// Reads one real tap per line; blank lines and `#` comments are skipped.
    pub fn from_text(text: &str, overlap: Overlap, fft_size: usize) -> Result<Self> {
        let taps = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.parse::<f64>().map_err(|e| AfbmError::Parse(format!("bad filter tap '{l}': {e}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::custom(taps, overlap, fft_size)
    }

    pub fn from_file(path: &Path, overlap: Overlap, fft_size: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AfbmError::Parse(format!("cannot read filter file {}: {e}", path.display())))?;
        Self::from_text(&text, overlap, fft_size)
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn overlap(&self) -> Overlap {
        self.overlap
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn family(&self) -> FilterFamily {
        self.family
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t * t).sum()
    }
}

fn normalize_energy(taps: &mut [f64]) {
    let e: f64 = taps.iter().map(|t| t * t).sum::<f64>().sqrt();
    taps.iter_mut().for_each(|t| *t /= e);
}

/// Frequency-sampling coefficients of the overlap-4 PHYDYAS design.
const PHYDYAS_K4: [f64; 4] = [1.0, 0.971_959_83, std::f64::consts::FRAC_1_SQRT_2, 0.235_146_95];

/// PHYDYAS prototype, overlap 4, sampled at half-sample offsets so that
/// `g[m] = g[4N−1−m]`. Unit energy.
pub fn phydyas_prototype(n: usize, overlap: Overlap) -> Result<PrototypeFilter> {
    if overlap != Overlap::PHYDYAS {
        return Err(AfbmError::Config(format!("PHYDYAS prototype is only defined for O = 4, got O = {overlap}")));
    }
    if n < 8 || n % 2 != 0 {
        return Err(AfbmError::Config(format!("PHYDYAS prototype needs an even N >= 8, got {n}")));
    }
    let len = overlap.filter_len(n);
    let kk = 4.0;
    let mut taps: Vec<f64> = (0..len)
        .map(|m| {
            let t = (m as f64 + 0.5) / (kk * n as f64);
            let mut v = PHYDYAS_K4[0];
            for (k, &hk) in PHYDYAS_K4.iter().enumerate().skip(1) {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                v += 2.0 * sign * hk * (2.0 * PI * k as f64 * t).cos();
            }
            v
        })
        .collect();
    normalize_energy(&mut taps);
    PrototypeFilter::checked(taps, overlap, n, FilterFamily::Phydyas)
}

/// Weights of the Hermite–Gaussian expansion (orders 0, 4, …, 20).
const HERMITE_WEIGHTS: [(u32, f64); 6] = [
    (0, 1.412_692_577),
    (4, -3.0145e-3),
    (8, -8.8041e-6),
    (12, -2.2611e-9),
    (16, -4.4570e-15),
    (20, 1.8633e-16),
];

/// Physicists' Hermite polynomial by three-term recurrence.
pub(crate) fn hermite_poly(order: u32, x: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * x);
    if order == 0 {
        return h0;
    }
    for n in 1..order {
        let h2 = 2.0 * x * h1 - 2.0 * n as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// Continuous Hermite pulse, time in units of the symbol period `N` samples.
pub fn hermite_pulse(t: f64) -> f64 {
    let x = 2.0 * PI.sqrt() * t;
    let envelope = (-2.0 * PI * t * t).exp();
    envelope * HERMITE_WEIGHTS.iter().map(|&(order, a)| a * hermite_poly(order, x)).sum::<f64>()
}

/// Hermite prototype truncated to `O·N` samples centred on the pulse peak.
/// Unit energy, symmetric.
pub fn hermite_prototype(n: usize, overlap: Overlap) -> Result<PrototypeFilter> {
    if n == 0 || n % 2 != 0 {
        return Err(AfbmError::Config(format!("Hermite prototype needs an even N, got {n}")));
    }
    if (overlap.halves() * n) % 2 != 0 {
        return Err(AfbmError::Config(format!("O·N = {}·{n} is not an integer", overlap.factor())));
    }
    let len = overlap.filter_len(n);
    let centre = len as f64 / 2.0;
    let mut taps: Vec<f64> = (0..len).map(|m| hermite_pulse((m as f64 + 0.5 - centre) / n as f64)).collect();
    normalize_energy(&mut taps);
    PrototypeFilter::checked(taps, overlap, n, FilterFamily::Hermite)
}

/// Builds the named family with its default overlap. Custom filters are
/// constructed directly via [`PrototypeFilter::custom`].
pub fn prototype(family: FilterFamily, n: usize) -> Result<PrototypeFilter> {
    match family {
        FilterFamily::Hermite => hermite_prototype(n, Overlap::HERMITE),
        FilterFamily::Phydyas => phydyas_prototype(n, Overlap::PHYDYAS),
        FilterFamily::Custom => Err(AfbmError::Config("custom filters need explicit taps".into())),
    }
}

/// The `2O` diagonal blocks `G_p = diag(g[pN/2 .. pN/2 + N/2])`, stored as
/// their diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBlocks {
    blocks: Vec<Vec<f64>>,
}

impl FilterBlocks {
    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block_size(&self) -> usize {
        self.blocks.first().map_or(0, Vec::len)
    }
}

pub fn filter_blocks(f: &PrototypeFilter) -> FilterBlocks {
    let half = f.fft_size / 2;
    FilterBlocks { blocks: f.taps.chunks(half).map(<[f64]>::to_vec).collect() }
}

/// Small dense real matrix used for the explicit filter matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    /// `selfᵀ self`.
    pub fn gram(&self) -> RealMatrix {
        let mut out = RealMatrix::zeros(self.cols, self.cols);
        for r in 0..self.rows {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            for (i, &a) in row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (j, &b) in row.iter().enumerate() {
                    out.data[i * self.cols + j] += a * b;
                }
            }
        }
        out
    }

    pub fn mul_complex_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| self.data[i * self.cols..(i + 1) * self.cols].iter().zip(v).map(|(a, x)| x * *a).sum())
            .collect()
    }

    pub fn to_complex(&self) -> crate::linalg::CMat {
        crate::linalg::CMat::from_fn(self.rows, self.cols, |i, j| Complex64::new(self.get(i, j), 0.0))
    }
}

/// `G̃`, the `O·N × N` single-symbol filtering matrix: row block `p` is
/// `[G_p 0]` for even `p` and `[0 G_p]` for odd `p`.
pub fn single_symbol_matrix(f: &PrototypeFilter) -> RealMatrix {
    let n = f.fft_size;
    let mut g = RealMatrix::zeros(f.len(), n);
    for (m, &tap) in f.taps.iter().enumerate() {
        g.set(m, m % n, tap);
    }
    g
}

/// Number of transmitted samples for `k` symbols: `M = O·N + (K−1)·N/2`.
pub fn frame_len(f: &PrototypeFilter, k: usize) -> usize {
    f.len() + (k.saturating_sub(1)) * f.fft_size / 2
}

/// The `M × NK` block-Toeplitz filter matrix: column block `k` is `G̃`
/// moved down by `k·N/2` rows.
pub fn block_toeplitz(f: &PrototypeFilter, k: usize) -> Result<RealMatrix> {
    if k == 0 {
        return Err(AfbmError::Config("K must be at least 1".into()));
    }
    let n = f.fft_size;
    let mut g = RealMatrix::zeros(frame_len(f, k), n * k);
    for sym in 0..k {
        let offset = sym * n / 2;
        for (m, &tap) in f.taps.iter().enumerate() {
            g.set(offset + m, sym * n + m % n, tap);
        }
    }
    Ok(g)
}

/// Structured filter bank that applies `G` and `Gᵀ` without materializing them.
#[derive(Debug, Clone)]
pub struct FilterBank {
    filter: PrototypeFilter,
    symbols: usize,
}

impl FilterBank {
    pub fn new(filter: PrototypeFilter, symbols: usize) -> Result<Self> {
        if symbols == 0 {
            return Err(AfbmError::Config("K must be at least 1".into()));
        }
        Ok(Self { filter, symbols })
    }

    pub fn filter(&self) -> &PrototypeFilter {
        &self.filter
    }

    pub fn symbols(&self) -> usize {
        self.symbols
    }

    pub fn fft_size(&self) -> usize {
        self.filter.fft_size
    }

    pub fn frame_len(&self) -> usize {
        frame_len(&self.filter, self.symbols)
    }

    /// `G·v` for `v` of length `N·K`.
    pub fn synthesize(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.fft_size();
        assert_eq!(v.len(), n * self.symbols, "filter bank input has wrong length");
        let mut out = vec![Complex64::new(0.0, 0.0); self.frame_len()];
        for sym in 0..self.symbols {
            let offset = sym * n / 2;
            let q = &v[sym * n..(sym + 1) * n];
            for (m, &tap) in self.filter.taps.iter().enumerate() {
                out[offset + m] += q[m % n] * tap;
            }
        }
        out
    }

    /// `Gᵀ·r` for `r` of length `M`.
    pub fn analyze(&self, r: &[Complex64]) -> Vec<Complex64> {
        let n = self.fft_size();
        assert_eq!(r.len(), self.frame_len(), "filter bank analysis input has wrong length");
        let mut out = vec![Complex64::new(0.0, 0.0); n * self.symbols];
        for sym in 0..self.symbols {
            let offset = sym * n / 2;
            let u = &mut out[sym * n..(sym + 1) * n];
            for (m, &tap) in self.filter.taps.iter().enumerate() {
                u[m % n] += r[offset + m] * tap;
            }
        }
        out
    }
}
