//! Modulation parameters shared by every stage of the chain.

use std::f64::consts::PI;

use crate::error::{AfbmError, Result};
use crate::filters::{self, FilterFamily, Overlap, PrototypeFilter};
use crate::transforms::ChirpParams;

/// Physical grid description. Carried for provenance; the discrete model
/// never reads it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridMetadata {
    pub subcarrier_spacing_hz: f64,
    pub carrier_hz: f64,
}

impl Default for GridMetadata {
    fn default() -> Self {
        Self { subcarrier_spacing_hz: 15e3, carrier_hz: 4e9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModulationConfig {
    /// `L`, DAFT-domain subcarriers; half of them carry data.
    pub subcarriers: usize,
    /// `K`, multicarrier symbols per block.
    pub symbols: usize,
    /// `N`, filter-bank (IDFT) size.
    pub fft_size: usize,
    /// `P`, size of the pruned inverse DAFT.
    pub pruned_size: usize,
    pub overlap: Overlap,
    pub filter: FilterFamily,
    /// Taps for [`FilterFamily::Custom`].
    pub custom_taps: Option<Vec<f64>>,
    pub c1_l: f64,
    pub c2_l: f64,
    pub c1_p: f64,
    pub c2_p: f64,
    /// `ξ`, extra guard elements in the DAFT-domain orthogonality condition.
    pub guard: usize,
    pub phase_reference: PhaseReference,
    pub grid: GridMetadata,
}

/// Sample of the filter window at which each symbol's IDFT output starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PhaseReference {
    /// IDFT sample 0 sits on the pulse peak (`O·N/2`); a cyclic shift of
    /// `O·N/2 mod N`. Identical to `WindowStart` for integer `O`.
    #[default]
    PulseCentre,
    /// IDFT sample 0 sits on filter tap 0: `s[m] = g[m]·q[m mod N]`.
    WindowStart,
}

impl PhaseReference {
    pub fn name(self) -> &'static str {
        match self {
            PhaseReference::PulseCentre => "pulse-centre",
            PhaseReference::WindowStart => "window-start",
        }
    }
}

impl std::str::FromStr for PhaseReference {
    type Err = AfbmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pulse-centre" | "pulse-center" | "centre" | "center" => Ok(PhaseReference::PulseCentre),
            "window-start" | "start" => Ok(PhaseReference::WindowStart),
            other => Err(AfbmError::Parse(format!("unknown phase reference '{other}'"))),
        }
    }
}

/// `c₁ = (2(f_max + ξ) + 1) / (2·size)`.
pub fn default_c1(max_doppler: f64, guard: usize, size: usize) -> f64 {
    (2.0 * (max_doppler + guard as f64) + 1.0) / (2.0 * size as f64)
}

/// `c₂ = 1 / (π·size²)`.
pub fn default_c2(size: usize) -> f64 {
    1.0 / (PI * (size * size) as f64)
}

/// Maximum normalized Doppler used for the default `c₁`.
pub const DEFAULT_MAX_DOPPLER: f64 = 2.0;

impl ModulationConfig {
    /// Config with the family's default overlap and the default chirps for
    /// `f_max = 2`, `ξ = 0`. Not validated; call [`validate`](Self::validate).
    pub fn new(subcarriers: usize, symbols: usize, fft_size: usize, pruned_size: usize, filter: FilterFamily) -> Self {
        let overlap = filter.default_overlap().unwrap_or(Overlap::HERMITE);
        let mut cfg = Self {
            subcarriers,
            symbols,
            fft_size,
            pruned_size,
            overlap,
            filter,
            custom_taps: None,
            c1_l: 0.0,
            c2_l: 0.0,
            c1_p: 0.0,
            c2_p: 0.0,
            guard: 0,
            phase_reference: PhaseReference::default(),
            grid: GridMetadata::default(),
        };
        cfg.set_default_chirps(DEFAULT_MAX_DOPPLER);
        cfg
    }

    /// Recomputes all four chirp frequencies from `f_max` and the current guard width.
    ///
    /// Both DAFTs share one `c₁`, taken from the `P`-point size, so the
    /// subcarrier-domain chirps of the spreading DAFT and the pruned inverse
    /// DAFT cancel on the `L` occupied bins.
    pub fn set_default_chirps(&mut self, max_doppler: f64) {
        let c1 = if self.pruned_size > 0 { default_c1(max_doppler, self.guard, self.pruned_size) } else { 0.0 };
        self.c1_l = c1;
        self.c1_p = c1;
        self.c2_l = if self.subcarriers > 0 { default_c2(self.subcarriers) } else { 0.0 };
        self.c2_p = if self.pruned_size > 0 { default_c2(self.pruned_size) } else { 0.0 };
    }

    pub fn with_chirps(mut self, c1_l: f64, c2_l: f64, c1_p: f64, c2_p: f64) -> Self {
        self.c1_l = c1_l;
        self.c2_l = c2_l;
        self.c1_p = c1_p;
        self.c2_p = c2_p;
        self
    }

    pub fn with_custom_filter(mut self, taps: Vec<f64>, overlap: Overlap) -> Self {
        self.filter = FilterFamily::Custom;
        self.overlap = overlap;
        self.custom_taps = Some(taps);
        self
    }

    /// `KL/2`, the number of data symbols per block.
    pub fn payload_len(&self) -> usize {
        self.symbols * self.subcarriers / 2
    }

    /// `M = O·N + (K−1)·N/2`.
    pub fn frame_len(&self) -> usize {
        self.overlap.filter_len(self.fft_size) + self.symbols.saturating_sub(1) * self.fft_size / 2
    }

    /// Cyclic shift applied to each symbol's IDFT output.
    pub fn reference_shift(&self) -> usize {
        match self.phase_reference {
            PhaseReference::PulseCentre if self.fft_size > 0 => (self.overlap.filter_len(self.fft_size) / 2) % self.fft_size,
            _ => 0,
        }
    }

    pub fn chirp_l(&self) -> Result<ChirpParams> {
        ChirpParams::new(self.c1_l, self.c2_l, self.subcarriers)
    }

    pub fn chirp_p(&self) -> Result<ChirpParams> {
        ChirpParams::new(self.c1_p, self.c2_p, self.pruned_size)
    }

    /// Every violated constraint, in a fixed order. Empty when valid.
    pub fn diagnostics(&self) -> Vec<String> {
        let (l, p, n) = (self.subcarriers, self.pruned_size, self.fft_size);
        let mut out = Vec::new();
        if self.symbols == 0 {
            out.push("K must be at least 1".to_string());
        }
        if l == 0 {
            out.push("L must be positive".to_string());
        }
        if l % 4 != 0 {
            out.push(format!("L must be divisible by 4, got L = {l}"));
        }
        if l >= p {
            out.push(format!("L < P violated: L = {l}, P = {p}"));
        }
        if p > n {
            out.push(format!("P <= N violated: P = {p}, N = {n}"));
        }
        if p % 2 != 0 {
            out.push(format!("P must be even, got P = {p}"));
        }
        if n % 2 != 0 || n == 0 {
            out.push(format!("N must be even and positive, got N = {n}"));
        }
        match self.filter {
            FilterFamily::Phydyas if self.overlap != Overlap::PHYDYAS => {
                out.push(format!("PHYDYAS prototype requires O = 4, got O = {}", self.overlap));
            }
            FilterFamily::Phydyas if n < 8 => out.push(format!("PHYDYAS prototype requires N >= 8, got N = {n}")),
            FilterFamily::Custom => match &self.custom_taps {
                None => out.push("custom filter selected but no taps given".to_string()),
                Some(t) if t.len() != self.overlap.filter_len(n) => out.push(format!(
                    "custom filter needs O·N = {} taps, got {}",
                    self.overlap.filter_len(n),
                    t.len()
                )),
                _ => {}
            },
            _ => {}
        }
        for (name, v) in [("c1_l", self.c1_l), ("c2_l", self.c2_l), ("c1_p", self.c1_p), ("c2_p", self.c2_p)] {
            if !v.is_finite() {
                out.push(format!("{name} must be finite, got {v}"));
            }
        }
        out
    }

    /// First violated constraint as an error.
    pub fn validate(&self) -> Result<()> {
        match self.diagnostics().into_iter().next() {
            Some(d) => Err(AfbmError::Config(d)),
            None => Ok(()),
        }
    }

    pub fn prototype_filter(&self) -> Result<PrototypeFilter> {
        match self.filter {
            FilterFamily::Hermite => filters::hermite_prototype(self.fft_size, self.overlap),
            FilterFamily::Phydyas => filters::phydyas_prototype(self.fft_size, self.overlap),
            FilterFamily::Custom => {
                let taps = self
                    .custom_taps
                    .clone()
                    .ok_or_else(|| AfbmError::Config("custom filter selected but no taps given".into()))?;
                PrototypeFilter::custom(taps, self.overlap, self.fft_size)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_config_is_valid() {
        let cfg = ModulationConfig::new(128, 8, 256, 192, FilterFamily::Hermite);
        assert!(cfg.diagnostics().is_empty(), "{:?}", cfg.diagnostics());
        assert_eq!(cfg.payload_len(), 512);
        assert_eq!(cfg.frame_len(), 1280);
        assert!((cfg.c2_l - 1.0 / (PI * 128.0 * 128.0)).abs() < 1e-18);
        assert!((cfg.c2_p - 1.0 / (PI * 192.0 * 192.0)).abs() < 1e-18);
        let cfg = ModulationConfig::new(128, 8, 256, 256, FilterFamily::Phydyas);
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.frame_len(), 1024 + 7 * 128);
    }

    #[test]
    fn diagnostics_name_violations() {
        let cfg = ModulationConfig::new(128, 8, 256, 96, FilterFamily::Hermite);
        let d = cfg.diagnostics();
        assert!(d.iter().any(|s| s.contains("L < P")), "{d:?}");
        let cfg = ModulationConfig::new(10, 2, 16, 12, FilterFamily::Hermite);
        assert!(cfg.diagnostics().iter().any(|s| s.contains("divisible by 4")));
        let cfg = ModulationConfig::new(8, 2, 16, 20, FilterFamily::Hermite);
        assert!(cfg.validate().unwrap_err().to_string().contains("P <= N"));
        let mut cfg = ModulationConfig::new(8, 2, 16, 12, FilterFamily::Phydyas);
        cfg.overlap = Overlap::HERMITE;
        assert!(cfg.diagnostics().iter().any(|s| s.contains("O = 4")));
    }

    #[test]
    fn default_c1_formula() {
        assert!((default_c1(2.0, 0, 192) - 5.0 / 384.0).abs() < 1e-15);
        assert!((default_c1(2.0, 1, 100) - 7.0 / 200.0).abs() < 1e-15);
    }

    #[test]
    fn reference_shift() {
        let mut cfg = ModulationConfig::new(128, 8, 256, 192, FilterFamily::Hermite);
        assert_eq!(cfg.reference_shift(), 192);
        cfg.phase_reference = PhaseReference::WindowStart;
        assert_eq!(cfg.reference_shift(), 0);
        let cfg = ModulationConfig::new(128, 8, 256, 192, FilterFamily::Phydyas);
        assert_eq!(cfg.reference_shift(), 0);
    }
}
