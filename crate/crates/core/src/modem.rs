//! AFBM transmitter and matched receiver.
//!
//! One block carries `x ∈ C^{KL/2}`:
//!
//! ```text
//! s = G (I_K ⊗ Q_P C_f) Ξ x,        C_f = W_L diag(b̃)
//! y = Ξᴴ (I_K ⊗ C_fᴴ Q_Pᴴ) Gᴴ r
//! ```
//!
//! Everything channel-independent is built once in [`Modem::new`]; the
//! per-symbol map `B = Q_P C_f Ξ̄` (`N × L/2`) is all the fast paths need.

use num_complex::Complex64;

use crate::channel::ChannelRealization;
use crate::config::ModulationConfig;
use crate::error::{AfbmError, Result};
use crate::filters::{self, FilterBank, PrototypeFilter};
use crate::linalg::{gemm_into, CMat};
use crate::transforms::{daft_matrix, synthesis_block};

/// Detection domain of an effective channel, equalizer or Δ matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    Affine,
    FilteredTd,
}

impl Domain {
    pub const ALL: [Domain; 2] = [Domain::Affine, Domain::FilteredTd];

    pub fn name(self) -> &'static str {
        match self {
            Domain::Affine => "affine",
            Domain::FilteredTd => "filtered-td",
        }
    }
}

impl std::fmt::Display for Domain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Domain {
    type Err = AfbmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "affine" | "afb" => Ok(Domain::Affine),
            "filtered-td" | "filtered_td" | "ftd" | "filtered" => Ok(Domain::FilteredTd),
            other => Err(AfbmError::Parse(format!("unknown detection domain '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EffectiveChannel {
    pub matrix: CMat,
    pub domain: Domain,
}

impl EffectiveChannel {
    pub fn dims(&self) -> (usize, usize) {
        self.matrix.shape()
    }
}

/// Data-carrying positions of one length-`L` column of `A`: the first and
/// last `L/4`.
pub fn active_indices(l: usize) -> Vec<usize> {
    let q = l / 4;
    (0..q).chain(l - q..l).collect()
}

/// Row of `A`'s column that payload entry `i` (of `L/2`) lands on.
fn active_row(l: usize, i: usize) -> usize {
    let q = l / 4;
    if i < q {
        i
    } else {
        l - 2 * q + i
    }
}

/// `Ξ = I_K ⊗ Ξ̄`, shape `LK × KL/2`.
pub fn mapping_matrix(l: usize, k: usize) -> Result<CMat> {
    if l == 0 || l % 4 != 0 {
        return Err(AfbmError::Config(format!("mapping needs L divisible by 4, got L = {l}")));
    }
    let half = l / 2;
    let mut xi = CMat::zeros(l * k, half * k);
    for sym in 0..k {
        for i in 0..half {
            xi[(sym * l + active_row(l, i), sym * half + i)] = Complex64::new(1.0, 0.0);
        }
    }
    Ok(xi)
}

/// Compensation gains `b̃` and the single-symbol Gram diagonal `c̃` they invert.
#[derive(Debug, Clone, PartialEq)]
pub struct CompensationVector {
    pub entries: Vec<f64>,
    pub gram_diag: Vec<f64>,
}

/// `c̃ = diag(W_Lᴴ Q_Pᴴ G̃ᵀ G̃ Q_P W_L)`, computed as the column energies of
/// `G̃ Q_P W_L`.
pub fn gram_diagonal(w_l: &CMat, q_p: &CMat, filter: &PrototypeFilter) -> Result<Vec<f64>> {
    let n = filter.fft_size();
    if q_p.rows() != n || q_p.cols() != w_l.rows() {
        return Err(AfbmError::Shape(format!(
            "gram diagonal: Q_P is {}x{}, W_L is {}x{}, N = {n}",
            q_p.rows(),
            q_p.cols(),
            w_l.rows(),
            w_l.cols()
        )));
    }
    let v = q_p.matmul(w_l);
    let mut weight = vec![0.0; n];
    for (m, &g) in filter.taps().iter().enumerate() {
        weight[m % n] += g * g;
    }
    let mut c = vec![0.0; v.cols()];
    for (j, &w) in weight.iter().enumerate() {
        for (acc, z) in c.iter_mut().zip(v.row(j)) {
            *acc += w * z.norm_sqr();
        }
    }
    Ok(c)
}

/// `b̃_l = 1/√c̃_l` on the active indices, zero elsewhere.
pub fn compensation_vector(gram_diag: &[f64]) -> Result<CompensationVector> {
    let l = gram_diag.len();
    if l == 0 || l % 4 != 0 {
        return Err(AfbmError::Config(format!("compensation needs L divisible by 4, got L = {l}")));
    }
    let mut entries = vec![0.0; l];
    for idx in active_indices(l) {
        let c = gram_diag[idx];
        if !(c > 0.0) || !c.is_finite() {
            return Err(AfbmError::DegenerateFilter { index: idx, value: c });
        }
        entries[idx] = (1.0 / c).sqrt();
    }
    Ok(CompensationVector { entries, gram_diag: gram_diag.to_vec() })
}

/// `C_f = W_L diag(b̃)`.
pub fn precoder(w_l: &CMat, comp: &CompensationVector) -> Result<CMat> {
    if w_l.cols() != comp.entries.len() {
        return Err(AfbmError::Shape(format!(
            "precoder: W_L has {} columns but b̃ has {} entries",
            w_l.cols(),
            comp.entries.len()
        )));
    }
    let mut c = w_l.clone();
    for i in 0..c.rows() {
        for (z, &b) in c.row_mut(i).iter_mut().zip(&comp.entries) {
            *z *= b;
        }
    }
    Ok(c)
}

#[derive(Debug, Clone)]
pub struct Modem {
    cfg: ModulationConfig,
    bank: FilterBank,
    daft_l: CMat,
    synthesis: CMat,
    compensation: CompensationVector,
    precoder: CMat,
    /// `B = Q_P C_f Ξ̄`, `N × L/2`.
    block_map: CMat,
}

impl Modem {
    pub fn new(cfg: &ModulationConfig) -> Result<Self> {
        cfg.validate()?;
        let filter = cfg.prototype_filter()?;
        let daft_l = daft_matrix(&cfg.chirp_l()?)?.matrix;
        let block = synthesis_block(cfg.subcarriers, cfg.pruned_size, cfg.fft_size, &cfg.chirp_p()?)?.matrix;
        let (n, shift) = (cfg.fft_size, cfg.reference_shift());
        let synthesis = CMat::from_fn(n, cfg.subcarriers, |row, col| block[((row + n - shift) % n, col)]);
        let gram = gram_diagonal(&daft_l, &synthesis, &filter)?;
        let compensation = compensation_vector(&gram)?;
        let precoder = precoder(&daft_l, &compensation)?;
        let qc = synthesis.matmul(&precoder);
        let l = cfg.subcarriers;
        let block_map = CMat::from_fn(cfg.fft_size, l / 2, |row, i| qc[(row, active_row(l, i))]);
        let bank = FilterBank::new(filter, cfg.symbols)?;
        Ok(Self { cfg: cfg.clone(), bank, daft_l, synthesis, compensation, precoder, block_map })
    }

    pub fn config(&self) -> &ModulationConfig {
        &self.cfg
    }

    pub fn filter_bank(&self) -> &FilterBank {
        &self.bank
    }

    pub fn filter(&self) -> &PrototypeFilter {
        self.bank.filter()
    }

    pub fn daft_l(&self) -> &CMat {
        &self.daft_l
    }

    /// `Q_P` after the phase-reference shift.
    pub fn synthesis(&self) -> &CMat {
        &self.synthesis
    }

    pub fn compensation(&self) -> &CompensationVector {
        &self.compensation
    }

    pub fn precoder(&self) -> &CMat {
        &self.precoder
    }

    pub fn block_map(&self) -> &CMat {
        &self.block_map
    }

    pub fn payload_len(&self) -> usize {
        self.cfg.payload_len()
    }

    pub fn frame_len(&self) -> usize {
        self.bank.frame_len()
    }

    /// `NK`, the filtered-time-domain observation length.
    pub fn filtered_len(&self) -> usize {
        self.cfg.fft_size * self.cfg.symbols
    }

    /// `C_fᴴ Q_Pᴴ G̃ᵀ G̃ Q_P C_f`, the single-symbol orthogonality Gram (`L × L`).
    pub fn orthogonality_gram(&self) -> CMat {
        let qc = self.synthesis.matmul(&self.precoder);
        let gt = filters::single_symbol_matrix(self.filter()).to_complex();
        gt.matmul(&qc).gram()
    }

    /// `(I_K ⊗ B)·x`, stacked per symbol, length `NK`.
    fn spread(&self, x: &[Complex64]) -> Vec<Complex64> {
        let half = self.cfg.subcarriers / 2;
        x.chunks(half).flat_map(|xk| self.block_map.mul_vec(xk)).collect()
    }

    /// `(I_K ⊗ Bᴴ)·u` for `u` of length `NK`.
    fn despread(&self, u: &[Complex64]) -> Vec<Complex64> {
        u.chunks(self.cfg.fft_size).flat_map(|uk| self.block_map.adjoint_mul_vec(uk)).collect()
    }

    pub fn modulate(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.payload_len() {
            return Err(AfbmError::Shape(format!(
                "payload has {} symbols, expected KL/2 = {}",
                x.len(),
                self.payload_len()
            )));
        }
        Ok(self.bank.synthesize(&self.spread(x)))
    }

    /// `Gᴴ r`, the filtered-time-domain observation.
    pub fn receive_filter(&self, r: &[Complex64]) -> Result<Vec<Complex64>> {
        if r.len() != self.frame_len() {
            return Err(AfbmError::Shape(format!("received frame has {} samples, expected M = {}", r.len(), self.frame_len())));
        }
        Ok(self.bank.analyze(r))
    }

    /// Affine-domain observation from the filtered one: `Ξᴴ (I_K ⊗ C_fᴴ Q_Pᴴ) u`.
    pub fn to_affine(&self, filtered: &[Complex64]) -> Result<Vec<Complex64>> {
        if filtered.len() != self.filtered_len() {
            return Err(AfbmError::Shape(format!(
                "filtered observation has {} samples, expected NK = {}",
                filtered.len(),
                self.filtered_len()
            )));
        }
        Ok(self.despread(filtered))
    }

    pub fn matched_demodulate(&self, r: &[Complex64]) -> Result<Vec<Complex64>> {
        let u = self.receive_filter(r)?;
        self.to_affine(&u)
    }

    /// `G (I_K ⊗ Q_P C_f) Ξ`, the dense `M × KL/2` transmit matrix.
    pub fn transmit_matrix(&self) -> CMat {
        let n = self.cfg.fft_size;
        let half = self.cfg.subcarriers / 2;
        let mut t = CMat::zeros(self.frame_len(), self.payload_len());
        for sym in 0..self.cfg.symbols {
            let row0 = sym * n / 2;
            for (m, &g) in self.filter().taps().iter().enumerate() {
                let src = self.block_map.row(m % n);
                let dst = &mut t.row_mut(row0 + m)[sym * half..(sym + 1) * half];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d = s * g;
                }
            }
        }
        t
    }

    /// `Gᴴ X` applied to each column of an `M × c` matrix.
    pub fn receive_filter_rows(&self, x: &CMat) -> Result<CMat> {
        if x.rows() != self.frame_len() {
            return Err(AfbmError::Shape(format!("expected {} rows, got {}", self.frame_len(), x.rows())));
        }
        let n = self.cfg.fft_size;
        let mut out = CMat::zeros(self.filtered_len(), x.cols());
        for sym in 0..self.cfg.symbols {
            let row0 = sym * n / 2;
            for (m, &g) in self.filter().taps().iter().enumerate() {
                let src = x.row(row0 + m);
                for (o, &v) in out.row_mut(sym * n + m % n).iter_mut().zip(src) {
                    *o += v * g;
                }
            }
        }
        Ok(out)
    }

    /// `(I_K ⊗ Bᴴ) X` for an `NK × c` matrix.
    pub fn to_affine_rows(&self, x: &CMat) -> Result<CMat> {
        if x.rows() != self.filtered_len() {
            return Err(AfbmError::Shape(format!("expected {} rows, got {}", self.filtered_len(), x.rows())));
        }
        let n = self.cfg.fft_size;
        let half = self.cfg.subcarriers / 2;
        let bh = self.block_map.adjoint();
        let mut out = CMat::zeros(self.payload_len(), x.cols());
        let mut tmp = CMat::zeros(half, x.cols());
        for sym in 0..self.cfg.symbols {
            let xk = x.submatrix(sym * n, 0, n, x.cols());
            gemm_into(Complex64::new(1.0, 0.0), &bh, &xk, Complex64::new(0.0, 0.0), &mut tmp);
            out.set_block(sym * half, 0, &tmp);
        }
        Ok(out)
    }

    /// `H̄ = Gᴴ H G (I_K ⊗ Q_P C_f) Ξ` for a dense `M × M` channel.
    pub fn effective_channel_ftd(&self, h: &CMat) -> Result<EffectiveChannel> {
        if h.shape() != (self.frame_len(), self.frame_len()) {
            return Err(AfbmError::Shape(format!("channel must be {0}x{0}, got {1}x{2}", self.frame_len(), h.rows(), h.cols())));
        }
        let ht = h.matmul(&self.transmit_matrix());
        Ok(EffectiveChannel { matrix: self.receive_filter_rows(&ht)?, domain: Domain::FilteredTd })
    }

    /// `Ξᴴ H_AFB Ξ`, the affine-domain channel restricted to the data positions.
    pub fn effective_channel_affine(&self, h: &CMat) -> Result<EffectiveChannel> {
        let ftd = self.effective_channel_ftd(h)?;
        Ok(EffectiveChannel { matrix: self.to_affine_rows(&ftd.matrix)?, domain: Domain::Affine })
    }

    /// Both effective channels for a path-list channel, using the sparse channel
    /// application and a precomputed transmit matrix.
    pub fn effective_channels(&self, channel: &ChannelRealization, transmit: &CMat) -> Result<(EffectiveChannel, EffectiveChannel)> {
        let ftd = self.ftd_from_transmit(channel, transmit)?;
        let affine = EffectiveChannel { matrix: self.to_affine_rows(&ftd.matrix)?, domain: Domain::Affine };
        Ok((affine, ftd))
    }

    pub fn ftd_from_transmit(&self, channel: &ChannelRealization, transmit: &CMat) -> Result<EffectiveChannel> {
        if channel.size() != self.frame_len() {
            return Err(AfbmError::Shape(format!("channel size {} != M = {}", channel.size(), self.frame_len())));
        }
        let ht = channel.apply_rows(transmit)?;
        Ok(EffectiveChannel { matrix: self.receive_filter_rows(&ht)?, domain: Domain::FilteredTd })
    }

    pub fn effective_channel(&self, channel: &ChannelRealization, domain: Domain) -> Result<EffectiveChannel> {
        let t = self.transmit_matrix();
        let ftd = self.ftd_from_transmit(channel, &t)?;
        match domain {
            Domain::FilteredTd => Ok(ftd),
            Domain::Affine => Ok(EffectiveChannel { matrix: self.to_affine_rows(&ftd.matrix)?, domain }),
        }
    }

    /// Mean per-entry variance of white unit-variance channel noise after
    /// the receive chain of `domain`: `‖g‖²/N` after `Gᴴ`, and the mean
    /// diagonal of the waveform Gram after the full affine chain.
    pub fn noise_gain(&self, domain: Domain) -> f64 {
        match domain {
            Domain::FilteredTd => self.filter().energy() / self.cfg.fft_size as f64,
            Domain::Affine => {
                let n = self.cfg.fft_size;
                let mut weight = vec![0.0; n];
                for (m, &g) in self.filter().taps().iter().enumerate() {
                    weight[m % n] += g * g;
                }
                let e: f64 = (0..n).map(|j| weight[j] * crate::linalg::norm_sqr(self.block_map.row(j))).sum();
                e / (self.cfg.subcarriers / 2) as f64
            }
        }
    }

    /// Noiseless waveform Gram `Ξᴴ(I⊗C_fᴴQ_Pᴴ)GᴴG(I⊗Q_PC_f)Ξ`.
    pub fn waveform_gram(&self) -> CMat {
        self.transmit_matrix().gram()
    }
}
