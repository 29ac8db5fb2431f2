//! Signal-to-interference ratios and bit-error-rate Monte Carlo.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::channel::{add_awgn, sample_channel, ChannelProfile};
use crate::equalize::{mmse_delta, ridge_for, DeltaMatrix};
use crate::error::{AfbmError, Result};
use crate::linalg::{Cholesky, CMat};
use crate::modem::{Domain, EffectiveChannel, Modem};
use crate::qam::Constellation;
use crate::rng::{purpose, trial_rng};

/// An SIR in dB; `+∞` when the interference term vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveformSir {
    pub db: f64,
    /// Interference term `‖M₀‖² − n` was not positive.
    pub orthogonal: bool,
    pub interference: f64,
}

fn ratio_db(signal: f64, interference: f64) -> f64 {
    if interference <= 0.0 {
        f64::INFINITY
    } else {
        10.0 * (signal / interference).log10()
    }
}

/// Interference below this fraction of the signal counts as exactly zero.
const ORTHOGONAL_TOL: f64 = 1e-12;

fn trace_ratio(m: &CMat) -> (f64, f64) {
    let n = m.rows() as f64;
    let mut interference = m.frobenius_sq() - n;
    if interference.abs() <= ORTHOGONAL_TOL * n {
        interference = 0.0;
    }
    (n, interference)
}

/// `n / (‖M₀‖_F² − n)` for the noiseless Gram of the `n` transmitted symbols.
pub fn sir_from_gram(gram: &CMat) -> WaveformSir {
    let (n, interference) = trace_ratio(gram);
    WaveformSir { db: ratio_db(n, interference), orthogonal: interference <= 0.0, interference }
}

pub fn sir_waveform(modem: &Modem) -> WaveformSir {
    sir_from_gram(&modem.waveform_gram())
}

/// Both channel-conditioned SIR estimates for one Δ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionedSir {
    /// `n / (‖Δ‖_F² − n)`; NaN when the denominator is negative.
    pub trace_db: f64,
    /// `Σ|Δᵢᵢ|² / Σ_{i≠j}|Δᵢⱼ|²`.
    pub robust_db: f64,
    /// The trace formula was unusable and `robust_db` is reported instead.
    pub substituted: bool,
}

impl ConditionedSir {
    pub fn db(&self) -> f64 {
        if self.substituted {
            self.robust_db
        } else {
            self.trace_db
        }
    }
}

pub fn sir_conditioned(delta: &DeltaMatrix) -> ConditionedSir {
    sir_conditioned_matrix(&delta.matrix)
}

pub fn sir_conditioned_matrix(m: &CMat) -> ConditionedSir {
    let (n, interference) = trace_ratio(m);
    let total = m.frobenius_sq();
    let diag: f64 = m.diag().iter().map(|z| z.norm_sqr()).sum();
    let mut off = total - diag;
    if off <= ORTHOGONAL_TOL * diag {
        off = 0.0;
    }
    let robust_db = ratio_db(diag, off);
    if interference < 0.0 {
        ConditionedSir { trace_db: f64::NAN, robust_db, substituted: true }
    } else {
        // a vanishing interference term is +∞ under both formulas
        ConditionedSir { trace_db: ratio_db(n, interference), robust_db, substituted: interference == 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Averaging {
    /// Mean of linear ratios, then dB.
    Linear,
    /// Mean of dB values.
    #[default]
    Decibel,
}

impl std::str::FromStr for Averaging {
    type Err = AfbmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(Averaging::Linear),
            "db" | "decibel" => Ok(Averaging::Decibel),
            other => Err(AfbmError::Parse(format!("unknown averaging '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SirStatistics {
    pub average_db: f64,
    pub maximum_db: f64,
    pub minimum_db: f64,
    pub realizations: usize,
    /// Realizations whose trace-formula denominator was not positive.
    pub substituted: usize,
    pub fingerprint: String,
}

impl SirStatistics {
    pub fn from_samples(samples: &[ConditionedSir], averaging: Averaging, fingerprint: impl Into<String>) -> Result<Self> {
        if samples.is_empty() {
            return Err(AfbmError::InvalidArgument("SIR statistics need at least one realization".into()));
        }
        let db: Vec<f64> = samples.iter().map(ConditionedSir::db).collect();
        let average_db = match averaging {
            Averaging::Linear => {
                let mean = db.iter().map(|d| 10f64.powf(d / 10.0)).sum::<f64>() / db.len() as f64;
                10.0 * mean.log10()
            }
            Averaging::Decibel => db.iter().sum::<f64>() / db.len() as f64,
        };
        // guards against rounding pushing the mean outside [min, max]
        let maximum_db = db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let minimum_db = db.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Self {
            average_db: average_db.clamp(minimum_db, maximum_db),
            maximum_db,
            minimum_db,
            realizations: samples.len(),
            substituted: samples.iter().filter(|s| s.substituted).count(),
            fingerprint: fingerprint.into(),
        })
    }
}

/// Settings shared by the channel-conditioned SIR runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SirOptions {
    /// Channel-output noise variance `σ²` the MMSE equalizers are designed
    /// for; each domain scales it by [`Modem::noise_gain`].
    pub noise_var: f64,
    pub averaging: Averaging,
}

impl Default for SirOptions {
    fn default() -> Self {
        Self { noise_var: DEFAULT_SIR_NOISE_VAR, averaging: Averaging::Decibel }
    }
}

/// Channel-output noise variance for the SIR tables (30 dB SNR).
pub const DEFAULT_SIR_NOISE_VAR: f64 = 1e-3;

/// Per-realization Δ SIRs for each requested domain, on channels shared
/// across domains. Row `r` holds realization `r`, in domain order.
pub fn channel_sir_samples(
    modem: &Modem,
    profile: &ChannelProfile,
    domains: &[Domain],
    realizations: usize,
    seed: u64,
    noise_var: f64,
) -> Result<Vec<Vec<ConditionedSir>>> {
    profile.validate()?;
    let transmit = modem.transmit_matrix();
    (0..realizations as u64)
        .into_par_iter()
        .map(|r| {
            let deltas = realization_deltas(modem, profile, &transmit, domains, seed, r, noise_var)?;
            Ok(deltas.iter().map(sir_conditioned).collect())
        })
        .collect()
}

/// Δ matrices of realization `index` for each domain.
pub fn realization_deltas(
    modem: &Modem,
    profile: &ChannelProfile,
    transmit: &CMat,
    domains: &[Domain],
    seed: u64,
    index: u64,
    noise_var: f64,
) -> Result<Vec<DeltaMatrix>> {
    let mut rng = trial_rng(seed, index, purpose::CHANNEL);
    let channel = sample_channel(profile, modem.frame_len(), &mut rng)?;
    let ftd = modem.ftd_from_transmit(&channel, transmit)?;
    let affine = if domains.contains(&Domain::Affine) {
        Some(EffectiveChannel { matrix: modem.to_affine_rows(&ftd.matrix)?, domain: Domain::Affine })
    } else {
        None
    };
    domains
        .iter()
        .map(|d| {
            let h = match d {
                Domain::Affine => affine.as_ref().expect("affine channel built above"),
                Domain::FilteredTd => &ftd,
            };
            Ok(mmse_delta(h, noise_var * modem.noise_gain(*d))?.0)
        })
        .collect()
}

pub fn sir_statistics(
    modem: &Modem,
    profile: &ChannelProfile,
    domain: Domain,
    realizations: usize,
    seed: u64,
    options: SirOptions,
) -> Result<SirStatistics> {
    if realizations == 0 {
        return Err(AfbmError::InvalidArgument("SIR statistics need at least one realization".into()));
    }
    let samples = channel_sir_samples(modem, profile, &[domain], realizations, seed, options.noise_var)?;
    let flat: Vec<ConditionedSir> = samples.into_iter().map(|row| row[0]).collect();
    SirStatistics::from_samples(&flat, options.averaging, fingerprint(modem, profile, domain, seed, options))
}

/// Short stable description of what produced a statistic.
pub fn fingerprint(modem: &Modem, profile: &ChannelProfile, domain: Domain, seed: u64, options: SirOptions) -> String {
    let c = modem.config();
    format!(
        "{}/O{}/L{}/P{}/N{}/K{}/R{}/lmax{}/fmax{}/{}/s2={:e}/seed{}",
        c.filter,
        c.overlap,
        c.subcarriers,
        c.pruned_size,
        c.fft_size,
        c.symbols,
        profile.paths,
        profile.max_delay,
        profile.max_doppler,
        domain,
        options.noise_var,
        seed
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerPoint {
    pub snr_db: f64,
    pub bit_errors: u64,
    pub bits_total: u64,
    pub ber: f64,
    pub trials: u64,
}

impl BerPoint {
    fn new(snr_db: f64, bit_errors: u64, bits_total: u64, trials: u64) -> Self {
        Self { snr_db, bit_errors, bits_total, ber: bit_errors as f64 / bits_total as f64, trials }
    }

    /// Binomial standard error of the estimate.
    pub fn std_error(&self) -> f64 {
        (self.ber * (1.0 - self.ber) / self.bits_total as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerOptions {
    pub constellation: Constellation,
    /// Stop a point once every domain has seen this many bit errors.
    pub min_errors: u64,
    pub max_trials: u64,
    /// Trials run between stopping checks; fixed so the stopping point does
    /// not depend on the worker count.
    pub batch: u64,
}

impl Default for BerOptions {
    fn default() -> Self {
        Self { constellation: Constellation::QPSK, min_errors: 100, max_trials: 2000, batch: 16 }
    }
}

/// `σ²` per received sample for an SNR in dB (unit-energy data symbols).
pub fn noise_var_for_snr(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Bit errors of one trial in each domain. The channel and payload depend
/// only on the trial index, the noise also on the SNR point.
fn ber_trial(
    modem: &Modem,
    profile: &ChannelProfile,
    transmit: &CMat,
    domains: &[Domain],
    options: &BerOptions,
    noise_var: f64,
    seed: u64,
    point: u64,
    trial: u64,
) -> Result<Vec<u64>> {
    let alphabet = options.constellation;
    let mut crng = trial_rng(seed, trial, purpose::CHANNEL);
    let channel = sample_channel(profile, modem.frame_len(), &mut crng)?;
    let mut prng = trial_rng(seed, trial, purpose::PAYLOAD);
    let nbits = modem.payload_len() * alphabet.bits_per_symbol();
    let bits: Vec<u8> = (0..nbits).map(|_| prng.random_range(0..2u8)).collect();
    let x = alphabet.map(&bits)?;

    let mut r = channel.apply(&modem.modulate(&x)?)?;
    let mut nrng = trial_rng(seed, (point << 32) | trial, purpose::NOISE);
    add_awgn(&mut r, noise_var, &mut nrng)?;
    let filtered = modem.receive_filter(&r)?;
    let ftd = modem.ftd_from_transmit(&channel, transmit)?;

    domains
        .iter()
        .map(|d| {
            let (h, y) = match d {
                Domain::FilteredTd => (ftd.matrix.clone(), filtered.clone()),
                Domain::Affine => (modem.to_affine_rows(&ftd.matrix)?, modem.to_affine(&filtered)?),
            };
            let est = mmse_solve(&h, &y, noise_var * modem.noise_gain(*d))?;
            let detected = alphabet.demap(&est);
            Ok(detected.iter().zip(&bits).filter(|(a, b)| a != b).count() as u64)
        })
        .collect()
}

/// `(HᴴH + σ²I)⁻¹Hᴴy` without forming the equalizer.
fn mmse_solve(h: &CMat, y: &[Complex64], sigma2: f64) -> Result<Vec<Complex64>> {
    let mut a = h.gram();
    let s = ridge_for(&a, sigma2);
    a.add_diag(s);
    let chol = Cholesky::factor(&a)?;
    Ok(chol.solve_vec(&h.adjoint_mul_vec(y)))
}

/// One BER curve per domain over a shared SNR grid.
pub fn ber_curves(
    modem: &Modem,
    profile: &ChannelProfile,
    domains: &[Domain],
    snr_grid_db: &[f64],
    options: BerOptions,
    seed: u64,
) -> Result<Vec<Vec<BerPoint>>> {
    profile.validate()?;
    if options.max_trials == 0 || options.batch == 0 {
        return Err(AfbmError::InvalidArgument("BER needs at least one trial per point".into()));
    }
    let transmit = modem.transmit_matrix();
    let bits_per_trial = (modem.payload_len() * options.constellation.bits_per_symbol()) as u64;
    let mut curves = vec![Vec::with_capacity(snr_grid_db.len()); domains.len()];
    for (p, &snr) in snr_grid_db.iter().enumerate() {
        let noise_var = noise_var_for_snr(snr);
        let mut errors = vec![0u64; domains.len()];
        let mut done = 0u64;
        while done < options.max_trials && errors.iter().any(|&e| e < options.min_errors) {
            let end = (done + options.batch).min(options.max_trials);
            let batch: Vec<Vec<u64>> = (done..end)
                .into_par_iter()
                .map(|t| ber_trial(modem, profile, &transmit, domains, &options, noise_var, seed, p as u64, t))
                .collect::<Result<_>>()?;
            for row in batch {
                for (acc, e) in errors.iter_mut().zip(row) {
                    *acc += e;
                }
            }
            done = end;
        }
        for (curve, &e) in curves.iter_mut().zip(&errors) {
            curve.push(BerPoint::new(snr, e, done * bits_per_trial, done));
        }
    }
    Ok(curves)
}

pub fn ber_curve(
    modem: &Modem,
    profile: &ChannelProfile,
    domain: Domain,
    snr_grid_db: &[f64],
    options: BerOptions,
    seed: u64,
) -> Result<Vec<BerPoint>> {
    Ok(ber_curves(modem, profile, &[domain], snr_grid_db, options, seed)?.remove(0))
}

/// SNR where the curve crosses `target`, by linear interpolation of
/// `log10(BER)` between the bracketing points. `None` if never crossed.
pub fn snr_at_ber(curve: &[BerPoint], target: f64) -> Option<f64> {
    let lt = target.log10();
    curve.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        if a.ber >= target && b.ber <= target && a.ber > 0.0 {
            if b.ber == 0.0 {
                return Some(b.snr_db);
            }
            let (la, lb) = (a.ber.log10(), b.ber.log10());
            if la == lb {
                return Some(a.snr_db);
            }
            Some(a.snr_db + (lt - la) / (lb - la) * (b.snr_db - a.snr_db))
        } else {
            None
        }
    })
}

/// `row,col,magnitude` lines for a heatmap of `|Δ|`.
pub fn heatmap_csv(m: &CMat) -> String {
    let mut s = String::from("row,col,magnitude\n");
    for i in 0..m.rows() {
        for (j, z) in m.row(i).iter().enumerate() {
            s.push_str(&format!("{i},{j},{:e}\n", z.norm()));
        }
    }
    s
}

/// Entrywise mean of `|Δ|` over several realizations.
pub fn mean_magnitude(deltas: &[CMat]) -> Result<CMat> {
    let first = deltas.first().ok_or_else(|| AfbmError::InvalidArgument("no matrices to average".into()))?;
    let mut acc = CMat::zeros(first.rows(), first.cols());
    for d in deltas {
        if d.shape() != first.shape() {
            return Err(AfbmError::Shape("matrices to average differ in shape".into()));
        }
        for (a, z) in acc.as_mut_slice().iter_mut().zip(d.as_slice()) {
            a.re += z.norm();
        }
    }
    acc.scale(Complex64::new(1.0 / deltas.len() as f64, 0.0));
    Ok(acc)
}
