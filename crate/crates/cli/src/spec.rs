//! Experiment specification: the TOML file format, its canonical form and
//! validation.

use std::fmt;
use std::path::Path;

use afbm_core::metrics::{Averaging, DEFAULT_SIR_NOISE_VAR};
use afbm_core::transforms::orthogonality_condition_lhs;
use afbm_core::{ChannelProfile, Domain, FilterFamily, ModulationConfig, PhaseReference};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SirWaveform,
    SirChannel,
    Ber,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SirWaveform => "sir-waveform",
            ExperimentKind::SirChannel => "sir-channel",
            ExperimentKind::Ber => "ber",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub seed: u64,
    /// Channel realizations per configuration (`sir-channel`).
    #[serde(default)]
    pub realizations: usize,
    #[serde(default = "default_domains")]
    pub domains: Vec<String>,
    pub channel: ChannelSection,
    #[serde(default)]
    pub modulation: ModulationSection,
    #[serde(default)]
    pub sir: SirSection,
    #[serde(default)]
    pub ber: BerSection,
    #[serde(default)]
    pub output: OutputSection,
    /// Each entry expands to `filters × pruned_sizes` configurations.
    pub grid: Vec<GridEntry>,
}

fn default_domains() -> Vec<String> {
    Domain::ALL.iter().map(|d| d.name().to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub paths: usize,
    pub max_delay: usize,
    pub max_doppler: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModulationSection {
    pub symbols: usize,
    pub guard: usize,
    pub phase_reference: String,
}

impl Default for ModulationSection {
    fn default() -> Self {
        Self { symbols: 8, guard: 0, phase_reference: PhaseReference::default().name().to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridEntry {
    pub subcarriers: usize,
    pub fft_size: usize,
    pub pruned_sizes: Vec<usize>,
    pub filters: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SirSection {
    pub noise_var: f64,
    pub averaging: String,
    /// Realizations averaged into each `|Δ|` heatmap; 0 disables heatmaps.
    pub heatmap_realizations: usize,
}

impl Default for SirSection {
    fn default() -> Self {
        Self { noise_var: DEFAULT_SIR_NOISE_VAR, averaging: "db".into(), heatmap_realizations: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BerSection {
    pub snr_start_db: f64,
    pub snr_stop_db: f64,
    pub snr_step_db: f64,
    pub min_errors: u64,
    pub max_trials: u64,
    pub batch: u64,
}

impl Default for BerSection {
    fn default() -> Self {
        Self { snr_start_db: 0.0, snr_stop_db: 30.0, snr_step_db: 2.0, min_errors: 100, max_trials: 2000, batch: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
    /// Also write gnuplot-ready `.dat` files.
    pub gnuplot: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "results".into(), gnuplot: false }
    }
}

/// One constraint a spec violates.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub message: String,
    /// Only the DAFT-domain orthogonality condition may be overridden.
    pub overridable: bool,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)?;
        if self.overridable {
            f.write_str(" (overridable with --override-orthogonality-check)")?;
        }
        Ok(())
    }
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::from_toml(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec fields are all representable in TOML")
    }

    /// Canonical text hashed for the fingerprint: the serialized spec with
    /// the output section reset, since where results go does not change them.
    pub fn canonical(&self) -> String {
        let mut s = self.clone();
        s.output = OutputSection::default();
        s.to_toml()
    }

    /// SHA-256 of [`canonical`](Self::canonical), lowercase hex.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn short_hash(&self) -> String {
        self.hash()[..12].to_string()
    }

    pub fn profile(&self) -> ChannelProfile {
        ChannelProfile { paths: self.channel.paths, max_delay: self.channel.max_delay, max_doppler: self.channel.max_doppler }
    }

    pub fn parsed_domains(&self) -> Result<Vec<Domain>, String> {
        self.domains.iter().map(|d| d.parse::<Domain>().map_err(|e| e.to_string())).collect()
    }

    pub fn averaging(&self) -> Result<Averaging, String> {
        self.sir.averaging.parse().map_err(|e: afbm_core::AfbmError| e.to_string())
    }

    pub fn snr_grid(&self) -> Vec<f64> {
        let b = &self.ber;
        if !(b.snr_step_db > 0.0) || b.snr_stop_db < b.snr_start_db {
            return vec![];
        }
        let count = ((b.snr_stop_db - b.snr_start_db) / b.snr_step_db + 1e-9).floor() as usize + 1;
        (0..count).map(|i| b.snr_start_db + i as f64 * b.snr_step_db).collect()
    }

    /// Modulation configurations in grid order: entries, then filters, then `P`.
    pub fn configs(&self) -> Result<Vec<ModulationConfig>, String> {
        let phase: PhaseReference = self.modulation.phase_reference.parse().map_err(|e: afbm_core::AfbmError| e.to_string())?;
        let mut out = vec![];
        for entry in &self.grid {
            for f in &entry.filters {
                let family: FilterFamily = f.parse().map_err(|e: afbm_core::AfbmError| e.to_string())?;
                if family == FilterFamily::Custom {
                    return Err("custom filters are not available from the experiment runner".into());
                }
                for &p in &entry.pruned_sizes {
                    let mut cfg = ModulationConfig::new(entry.subcarriers, self.modulation.symbols, entry.fft_size, p, family);
                    cfg.guard = self.modulation.guard;
                    cfg.phase_reference = phase;
                    cfg.set_default_chirps(self.channel.max_doppler);
                    out.push(cfg);
                }
            }
        }
        Ok(out)
    }

    /// Every violated constraint, without computing anything heavy.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = vec![];
        let mut hard = |m: String| out.push(Diagnostic { message: m, overridable: false });
        if let Err(e) = self.profile().validate() {
            hard(format!("channel: {e}"));
        }
        match self.parsed_domains() {
            Ok(d) if d.is_empty() && self.kind != ExperimentKind::SirWaveform => hard("domains: at least one domain is required".into()),
            Ok(_) => {}
            Err(e) => hard(format!("domains: {e}")),
        }
        if let Err(e) = self.averaging() {
            hard(format!("sir.averaging: {e}"));
        }
        match self.kind {
            ExperimentKind::SirChannel => {
                if self.realizations == 0 {
                    hard("realizations must be at least 1".into());
                }
                if !(self.sir.noise_var > 0.0) || !self.sir.noise_var.is_finite() {
                    hard(format!("sir.noise_var must be positive and finite, got {}", self.sir.noise_var));
                }
            }
            ExperimentKind::Ber => {
                if self.snr_grid().is_empty() {
                    hard("ber: SNR grid is empty (need step > 0 and stop >= start)".into());
                }
                if self.ber.max_trials == 0 || self.ber.batch == 0 {
                    hard("ber: max_trials and batch must be at least 1".into());
                }
            }
            ExperimentKind::SirWaveform => {}
        }
        if self.grid.is_empty() {
            hard("grid: at least one entry is required".into());
        }
        for (i, e) in self.grid.iter().enumerate() {
            if e.pruned_sizes.is_empty() || e.filters.is_empty() {
                hard(format!("grid[{i}]: pruned_sizes and filters must be non-empty"));
            }
        }
        let configs = match self.configs() {
            Ok(c) => c,
            Err(e) => {
                hard(e);
                return out;
            }
        };
        let lmax = self.channel.max_delay;
        let lhs = orthogonality_condition_lhs(self.channel.max_doppler, lmax, self.modulation.guard);
        for cfg in &configs {
            let label = config_label(cfg);
            for d in cfg.diagnostics() {
                out.push(Diagnostic { message: format!("{label}: {d}"), overridable: false });
            }
            if lhs > cfg.pruned_size as f64 {
                out.push(Diagnostic {
                    message: format!(
                        "{label}: orthogonality condition 2(f_max + ξ)(ℓ_max + 1) + ℓ_max <= P violated: {lhs} > {}",
                        cfg.pruned_size
                    ),
                    overridable: true,
                });
            }
        }
        out
    }
}

/// Stable identifier of a configuration inside a run.
pub fn config_label(cfg: &ModulationConfig) -> String {
    format!("{}-L{}-P{}-N{}-K{}", cfg.filter, cfg.subcarriers, cfg.pruned_size, cfg.fft_size, cfg.symbols)
}
