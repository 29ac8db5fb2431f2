//! Doubly-dispersive channel: `H = Σ_r h_r Z^{f_r} Π^{ℓ_r}` over `M` samples.
//!
//! `Π^ℓ` delays cyclically, `(Π^ℓ s)[m] = s[(m − ℓ) mod M]`, and `Z^f` is
//! the diagonal phase ramp `exp(−j2π m f / M)` with fractional `f` allowed.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{AfbmError, Result};
use crate::linalg::CMat;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSpec {
    pub gain: Complex64,
    /// Integer delay in samples.
    pub delay: usize,
    /// Normalized digital Doppler.
    pub doppler: f64,
}

/// Parameters of the random path draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelProfile {
    pub paths: usize,
    pub max_delay: usize,
    pub max_doppler: f64,
}

impl ChannelProfile {
    /// Three paths, `ℓ_max = 16`, `f_max = 2`.
    pub const REFERENCE: ChannelProfile = ChannelProfile { paths: 3, max_delay: 16, max_doppler: 2.0 };

    pub fn validate(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(AfbmError::InvalidArgument("channel needs at least one path".into()));
        }
        if self.max_delay + 1 < self.paths {
            return Err(AfbmError::InfeasibleDelay { paths: self.paths, max_delay: self.max_delay });
        }
        if !(self.max_doppler >= 0.0) || !self.max_doppler.is_finite() {
            return Err(AfbmError::InvalidArgument(format!("f_max must be finite and >= 0, got {}", self.max_doppler)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    paths: Vec<PathSpec>,
    size: usize,
}

impl ChannelRealization {
    pub fn new(paths: Vec<PathSpec>, size: usize) -> Result<Self> {
        if paths.is_empty() {
            return Err(AfbmError::InvalidArgument("channel needs at least one path".into()));
        }
        if size == 0 {
            return Err(AfbmError::InvalidSize("channel size M must be positive".into()));
        }
        if let Some(p) = paths.iter().find(|p| p.delay >= size) {
            return Err(AfbmError::InvalidArgument(format!("delay {} does not fit in M = {size}", p.delay)));
        }
        if paths.iter().any(|p| !p.doppler.is_finite() || !p.gain.re.is_finite() || !p.gain.im.is_finite()) {
            return Err(AfbmError::InvalidArgument("path gains and Dopplers must be finite".into()));
        }
        Ok(Self { paths, size })
    }

    /// Single unit path with no delay or Doppler: `H = I`.
    pub fn identity(size: usize) -> Self {
        Self { paths: vec![PathSpec { gain: Complex64::new(1.0, 0.0), delay: 0, doppler: 0.0 }], size }
    }

    pub fn paths(&self) -> &[PathSpec] {
        &self.paths
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn total_power(&self) -> f64 {
        self.paths.iter().map(|p| p.gain.norm_sqr()).sum()
    }

    fn doppler_ramp(&self, path: &PathSpec) -> Vec<Complex64> {
        let m = self.size as f64;
        (0..self.size)
            .map(|i| {
                let turns = (i as f64 * path.doppler / m).rem_euclid(1.0);
                path.gain * Complex64::from_polar(1.0, -2.0 * PI * turns)
            })
            .collect()
    }

    /// Dense `M × M` channel matrix.
    pub fn matrix(&self) -> CMat {
        let mut h = CMat::zeros(self.size, self.size);
        for path in &self.paths {
            let ramp = self.doppler_ramp(path);
            for (row, &z) in ramp.iter().enumerate() {
                let col = (row + self.size - path.delay) % self.size;
                h[(row, col)] += z;
            }
        }
        h
    }

    /// `H·s` by per-path shift and phase.
    pub fn apply(&self, s: &[Complex64]) -> Result<Vec<Complex64>> {
        if s.len() != self.size {
            return Err(AfbmError::Shape(format!("channel input has length {}, expected M = {}", s.len(), self.size)));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.size];
        for path in &self.paths {
            let ramp = self.doppler_ramp(path);
            for (m, (o, z)) in out.iter_mut().zip(&ramp).enumerate() {
                *o += z * s[(m + self.size - path.delay) % self.size];
            }
        }
        Ok(out)
    }

    /// `H·X` for a tall `M × n` matrix, row by row.
    pub fn apply_rows(&self, x: &CMat) -> Result<CMat> {
        if x.rows() != self.size {
            return Err(AfbmError::Shape(format!("channel input has {} rows, expected M = {}", x.rows(), self.size)));
        }
        let mut out = CMat::zeros(x.rows(), x.cols());
        for path in &self.paths {
            let ramp = self.doppler_ramp(path);
            for (m, &z) in ramp.iter().enumerate() {
                let src = x.row((m + self.size - path.delay) % self.size);
                for (o, &v) in out.row_mut(m).iter_mut().zip(src) {
                    *o += z * v;
                }
            }
        }
        Ok(out)
    }

    /// CSV record: header line, then one `re,im,delay,doppler` row per path.
    pub fn to_csv(&self) -> String {
        let mut s = format!("# size={}\nre,im,delay,doppler\n", self.size);
        for p in &self.paths {
            let _ = writeln!(s, "{:e},{:e},{},{:e}", p.gain.re, p.gain.im, p.delay, p.doppler);
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut size = None;
        let mut paths = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("size=") {
                    size = Some(v.trim().parse::<usize>().map_err(|e| AfbmError::Parse(format!("bad size: {e}")))?);
                }
                continue;
            }
            if line.starts_with("re,") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(AfbmError::Parse(format!("expected 4 fields, got '{line}'")));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| AfbmError::Parse(format!("bad number '{s}': {e}")));
            paths.push(PathSpec {
                gain: Complex64::new(num(fields[0])?, num(fields[1])?),
                delay: fields[2].parse().map_err(|e| AfbmError::Parse(format!("bad delay '{}': {e}", fields[2])))?,
                doppler: num(fields[3])?,
            });
        }
        let size = size.ok_or_else(|| AfbmError::Parse("missing '# size=' line".into()))?;
        Self::new(paths, size)
    }
}

/// Draws `R` paths: the first at delay 0, the rest at distinct delays drawn
/// uniformly from `[1, ℓ_max]`; Dopplers uniform on `[−f_max, f_max]`;
/// gains `CN(0, 1/R)`.
pub fn sample_channel<R: Rng + ?Sized>(profile: &ChannelProfile, size: usize, rng: &mut R) -> Result<ChannelRealization> {
    profile.validate()?;
    let mut delays = vec![0usize];
    if profile.paths > 1 {
        let mut rest: Vec<usize> = sample(rng, profile.max_delay, profile.paths - 1).into_iter().map(|d| d + 1).collect();
        rest.sort_unstable();
        delays.extend(rest);
    }
    let sd = (0.5 / profile.paths as f64).sqrt();
    let paths = delays
        .into_iter()
        .map(|delay| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            let doppler = if profile.max_doppler > 0.0 {
                rng.random_range(-profile.max_doppler..=profile.max_doppler)
            } else {
                0.0
            };
            PathSpec { gain: Complex64::new(re * sd, im * sd), delay, doppler }
        })
        .collect();
    ChannelRealization::new(paths, size)
}

/// Adds i.i.d. `CN(0, σ²)` noise in place.
pub fn add_awgn<R: Rng + ?Sized>(v: &mut [Complex64], noise_var: f64, rng: &mut R) -> Result<()> {
    if !(noise_var >= 0.0) || !noise_var.is_finite() {
        return Err(AfbmError::InvalidArgument(format!("noise variance must be finite and >= 0, got {noise_var}")));
    }
    if noise_var == 0.0 {
        return Ok(());
    }
    let sd = (noise_var / 2.0).sqrt();
    for z in v.iter_mut() {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        *z += Complex64::new(re * sd, im * sd);
    }
    Ok(())
}
