//! Linear MMSE equalization in either detection domain.

use num_complex::Complex64;

use crate::error::{AfbmError, Result};
use crate::linalg::{Cholesky, CMat};
use crate::modem::{Domain, EffectiveChannel};
use crate::qam::Constellation;

/// Relative ridge applied when a zero-noise system turns out to be singular.
pub const RIDGE_SCALE: f64 = 1e-10;

/// `E = (HᴴH + σ²I)⁻¹Hᴴ`, shape `KL/2 × d`.
#[derive(Debug, Clone)]
pub struct Equalizer {
    pub matrix: CMat,
    pub domain: Domain,
    pub noise_var: f64,
}

/// `Δ = E·H_eff`, square `KL/2`.
#[derive(Debug, Clone)]
pub struct DeltaMatrix {
    pub matrix: CMat,
    pub domain: Domain,
}

impl DeltaMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }
}

fn check_noise_var(sigma2: f64) -> Result<()> {
    if !(sigma2 >= 0.0) || !sigma2.is_finite() {
        return Err(AfbmError::InvalidArgument(format!("noise variance must be finite and >= 0, got {sigma2}")));
    }
    Ok(())
}

/// Factor `HᴴH + σ²I`. At `σ² = 0` a failed pivot is reported as rank deficiency.
fn factor_normal(gram: &CMat, sigma2: f64) -> Result<Cholesky> {
    let mut a = gram.clone();
    a.add_diag(sigma2);
    Cholesky::factor(&a).map_err(|e| match e {
        AfbmError::NotPositiveDefinite { pivot, value } if sigma2 == 0.0 => AfbmError::RankDeficient(format!(
            "HᴴH is singular at σ² = 0: pivot {pivot} of {} is {value:e}",
            gram.rows()
        )),
        other => other,
    })
}

pub fn mmse(heff: &EffectiveChannel, sigma2: f64) -> Result<Equalizer> {
    check_noise_var(sigma2)?;
    let h = &heff.matrix;
    let chol = factor_normal(&h.gram(), sigma2)?;
    Ok(Equalizer { matrix: chol.solve(&h.adjoint()), domain: heff.domain, noise_var: sigma2 })
}

/// `σ²` actually used: the requested value, or a tiny ridge when zero noise
/// meets a singular `HᴴH`.
pub fn ridge_for(gram: &CMat, sigma2: f64) -> f64 {
    if sigma2 > 0.0 {
        return sigma2;
    }
    let mut a = gram.clone();
    a.add_diag(sigma2);
    if Cholesky::factor(&a).is_ok() {
        sigma2
    } else {
        RIDGE_SCALE * gram.trace().re / gram.rows() as f64
    }
}

/// [`mmse`] that falls back to the relative ridge instead of failing at `σ² = 0`.
pub fn mmse_or_ridge(heff: &EffectiveChannel, sigma2: f64) -> Result<Equalizer> {
    check_noise_var(sigma2)?;
    let s = ridge_for(&heff.matrix.gram(), sigma2);
    mmse(heff, s)
}

pub fn delta_matrix(e: &Equalizer, heff: &EffectiveChannel) -> Result<DeltaMatrix> {
    if e.domain != heff.domain {
        return Err(AfbmError::Shape(format!("equalizer is for the {} domain, channel for {}", e.domain, heff.domain)));
    }
    if e.matrix.cols() != heff.matrix.rows() || e.matrix.rows() != heff.matrix.cols() {
        return Err(AfbmError::Shape(format!(
            "equalizer {}x{} does not fit channel {}x{}",
            e.matrix.rows(),
            e.matrix.cols(),
            heff.matrix.rows(),
            heff.matrix.cols()
        )));
    }
    Ok(DeltaMatrix { matrix: e.matrix.matmul(&heff.matrix), domain: e.domain })
}

/// `Δ` without forming `E`: `(A + σ²I)⁻¹A = I − σ²(A + σ²I)⁻¹` with `A = HᴴH`.
/// Zero noise with a singular `A` uses the relative ridge. Returns the `σ²` used.
pub fn mmse_delta(heff: &EffectiveChannel, sigma2: f64) -> Result<(DeltaMatrix, f64)> {
    check_noise_var(sigma2)?;
    let gram = heff.matrix.gram();
    let s = ridge_for(&gram, sigma2);
    let n = gram.rows();
    let matrix = if s == 0.0 {
        CMat::identity(n)
    } else {
        let chol = factor_normal(&gram, s)?;
        let mut d = chol.inverse();
        d.scale(Complex64::new(-s, 0.0));
        d.add_diag(1.0);
        d
    };
    Ok((DeltaMatrix { matrix, domain: heff.domain }, s))
}

/// `x̃ = E·y` and the hard decisions on it.
pub fn equalize_and_detect(e: &Equalizer, received: &[Complex64], alphabet: Constellation) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if received.len() != e.matrix.cols() {
        return Err(AfbmError::Shape(format!(
            "received vector has {} entries, equalizer expects {}",
            received.len(),
            e.matrix.cols()
        )));
    }
    let estimate = e.matrix.mul_vec(received);
    let decided = alphabet.decide(&estimate);
    Ok((estimate, decided))
}
