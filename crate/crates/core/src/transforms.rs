//! DFT, chirp, DAFT and the zero-padded synthesis block.
//!
//! All constructors return dense matrices tagged with a [`TransformKind`].
//! The chirp convention is `Λ_c = diag(exp(−j2π c k²))`, `k = 0..n−1`, with
//! no extra normalization: any size dependence belongs in `c` itself.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{AfbmError, Result};
use crate::linalg::CMat;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    Dft,
    ChirpDiag,
    Daft,
    PrunedDaft,
    Synthesis,
    Expansion,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChirpParams {
    pub c1: f64,
    pub c2: f64,
    pub n: usize,
}

impl ChirpParams {
    pub fn new(c1: f64, c2: f64, n: usize) -> Result<Self> {
        let p = Self { c1, c2, n };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(AfbmError::InvalidSize(format!("chirp transform size must be >= 2, got {}", self.n)));
        }
        if !self.c1.is_finite() || !self.c2.is_finite() {
            return Err(AfbmError::InvalidArgument(format!(
                "chirp frequencies must be finite (c1 = {}, c2 = {})",
                self.c1, self.c2
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TransformMatrix {
    pub kind: TransformKind,
    pub matrix: CMat,
}

impl TransformMatrix {
    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.cols()
    }

    /// Matrix-vector product. Diagonal and 0/1 selection kinds skip the dense multiply.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.cols(), "transform input has wrong length");
        match self.kind {
            TransformKind::ChirpDiag => v.iter().zip(self.matrix.diag()).map(|(x, d)| x * d).collect(),
            TransformKind::Expansion => {
                let (n, p) = (self.rows(), self.cols());
                expand_spectrum(v, n, p)
            }
            _ => self.matrix.mul_vec(v),
        }
    }
}

/// `exp(−j2π·frac)` with the argument reduced modulo one first.
fn unit_phasor(turns: f64) -> Complex64 {
    let t = turns.rem_euclid(1.0);
    Complex64::from_polar(1.0, -2.0 * PI * t)
}

/// Diagonal of `Λ_c` for size `n`.
pub fn chirp_phasors(c: f64, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|k| {
            let k = k as f64;
            unit_phasor(c * k * k)
        })
        .collect()
}

pub fn dft_matrix(n: usize) -> Result<TransformMatrix> {
    if n == 0 {
        return Err(AfbmError::InvalidSize("DFT size must be positive".into()));
    }
    let scale = 1.0 / (n as f64).sqrt();
    // (m·k mod n) keeps the twiddle argument exact for large n.
    let matrix = CMat::from_fn(n, n, |m, k| unit_phasor(((m * k) % n) as f64 / n as f64) * scale);
    Ok(TransformMatrix { kind: TransformKind::Dft, matrix })
}

pub fn chirp_diag(c: f64, n: usize) -> Result<TransformMatrix> {
    if n == 0 {
        return Err(AfbmError::InvalidSize("chirp size must be positive".into()));
    }
    if !c.is_finite() {
        return Err(AfbmError::InvalidArgument(format!("chirp frequency must be finite, got {c}")));
    }
    Ok(TransformMatrix { kind: TransformKind::ChirpDiag, matrix: CMat::from_diag(&chirp_phasors(c, n)) })
}

/// `W = Λ_{c1} F Λ_{c2}`.
pub fn daft_matrix(p: &ChirpParams) -> Result<TransformMatrix> {
    p.validate()?;
    let f = dft_matrix(p.n)?.matrix;
    let left = chirp_phasors(p.c1, p.n);
    let right = chirp_phasors(p.c2, p.n);
    let matrix = CMat::from_fn(p.n, p.n, |m, k| left[m] * f[(m, k)] * right[k]);
    Ok(TransformMatrix { kind: TransformKind::Daft, matrix })
}

/// First `l` rows of the `P`-point DAFT, shape `l × P`.
pub fn pruned_daft(l: usize, p_size: usize, chirp: &ChirpParams) -> Result<TransformMatrix> {
    if chirp.n != p_size {
        return Err(AfbmError::Config(format!("chirp parameters are for size {}, expected {p_size}", chirp.n)));
    }
    if l == 0 || l > p_size {
        return Err(AfbmError::Config(format!("pruned DAFT needs 0 < L <= P, got L = {l}, P = {p_size}")));
    }
    let w = daft_matrix(chirp)?.matrix;
    Ok(TransformMatrix { kind: TransformKind::PrunedDaft, matrix: w.submatrix(0, 0, l, p_size) })
}

/// The `N × P` zero-padding matrix `T`: the lower `P/2` frequency bins stay
/// at the bottom of the spectrum, the upper `P/2` go to the top, and the
/// `N − P` bins in between are zero.
pub fn expansion_matrix(n: usize, p_size: usize) -> Result<TransformMatrix> {
    if p_size % 2 != 0 {
        return Err(AfbmError::Config(format!("expansion needs an even P, got {p_size}")));
    }
    if p_size > n {
        return Err(AfbmError::Config(format!("expansion needs P <= N, got P = {p_size}, N = {n}")));
    }
    let half = p_size / 2;
    let mut t = CMat::zeros(n, p_size);
    for i in 0..half {
        t[(i, i)] = Complex64::new(1.0, 0.0);
        t[(n - half + i, half + i)] = Complex64::new(1.0, 0.0);
    }
    Ok(TransformMatrix { kind: TransformKind::Expansion, matrix: t })
}

fn expand_spectrum(v: &[Complex64], n: usize, p_size: usize) -> Vec<Complex64> {
    let half = p_size / 2;
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    out[..half].copy_from_slice(&v[..half]);
    out[n - half..].copy_from_slice(&v[half..]);
    out
}

/// `Q_P = F_Nᴴ T F_P W̃_Pᴴ`, shape `N × L`.
///
/// `P = N` is accepted, and so is the degenerate `L = P`; the modulation
/// config enforces the strict `L < P` on its own.
pub fn synthesis_block(l: usize, p_size: usize, n: usize, chirp_p: &ChirpParams) -> Result<TransformMatrix> {
    if l > p_size {
        return Err(AfbmError::Config(format!("synthesis block requires L <= P, got L = {l}, P = {p_size}")));
    }
    if p_size > n {
        return Err(AfbmError::Config(format!("synthesis block requires P <= N, got P = {p_size}, N = {n}")));
    }
    let w_pruned = pruned_daft(l, p_size, chirp_p)?.matrix;
    let f_p = dft_matrix(p_size)?.matrix;
    let f_n = dft_matrix(n)?.matrix;
    let t = expansion_matrix(n, p_size)?.matrix;
    let q = f_n.adjoint().matmul(&t.matmul(&f_p.matmul(&w_pruned.adjoint())));
    Ok(TransformMatrix { kind: TransformKind::Synthesis, matrix: q })
}

/// Left side of `2(f_max + ξ)(ℓ_max + 1) + ℓ_max ≤ P`.
pub fn orthogonality_condition_lhs(f_max: f64, l_max: usize, xi: usize) -> f64 {
    2.0 * (f_max + xi as f64) * (l_max as f64 + 1.0) + l_max as f64
}

pub fn check_daft_orthogonality_condition(f_max: f64, l_max: usize, xi: usize, p_size: usize) -> bool {
    orthogonality_condition_lhs(f_max, l_max, xi) <= p_size as f64
}
