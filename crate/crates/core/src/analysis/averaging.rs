use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::TransferFunction;

/// One spectral line `Ω(iν) e^{iνt}` of an almost-periodic regressor.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralLine {
    pub frequency: f64,
    pub amplitude: Vec<Complex64>,
}

impl SpectralLine {
    pub fn new(frequency: f64, amplitude: Vec<Complex64>) -> Self {
        SpectralLine {
            frequency,
            amplitude,
        }
    }

    /// Real amplitude vector.
    pub fn real(frequency: f64, amplitude: &[f64]) -> Self {
        Self::new(frequency, amplitude.iter().map(|a| Complex64::new(*a, 0.0)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AveragingReport {
    pub stable: bool,
    /// Eigenvalues of `Σ_k Re W̄(iν_k) Re[Ω_k Ω_kᴴ]`, ascending.
    pub eigenvalues: Vec<f64>,
}

/// `Re[Ω Ωᴴ] = Re Ω Re Ωᵀ + Im Ω Im Ωᵀ`.
fn re_outer(omega: &[Complex64]) -> DMatrix<f64> {
    let n = omega.len();
    DMatrix::from_fn(n, n, |i, j| (omega[i] * omega[j].conj()).re)
}

/// Averaged-system test over the supplied spectral lines: every eigenvalue of
/// `Σ_k Re W̄_m(iν_k) Re[Ω(iν_k)Ω(iν_k)ᴴ]` must be positive.
///
/// Fails with a precondition error when the lines do not excite every
/// direction (`Σ_k Re[Ω_k Ω_kᴴ]` singular).
pub fn averaging_stability_check(wm_bar: &TransferFunction, spectrum: &[SpectralLine]) -> Result<AveragingReport> {
    let n = spectrum
        .first()
        .map(|l| l.amplitude.len())
        .ok_or_else(|| Error::Precondition("empty spectrum".into()))?;
    if n == 0 || spectrum.iter().any(|l| l.amplitude.len() != n) {
        return Err(Error::Dimension("spectral amplitudes must share a nonzero dimension".into()));
    }
    if wm_bar.poles().iter().any(|p| p.re >= -linalg::HURWITZ_MARGIN) {
        return Err(Error::Precondition("W̄_m must be stable".into()));
    }
    let mut gram = DMatrix::zeros(n, n);
    let mut m = DMatrix::zeros(n, n);
    for line in spectrum {
        let o = re_outer(&line.amplitude);
        m += &o * wm_bar.freq_response(line.frequency).re;
        gram += o;
    }
    let gmax = linalg::max_eigenvalue(&gram);
    if linalg::min_eigenvalue(&gram) <= 1e-12 * gmax.max(f64::MIN_POSITIVE) {
        return Err(Error::Precondition(
            "spectrum does not excite every regressor direction".into(),
        ));
    }
    let eigenvalues = linalg::symmetric_eigenvalues(&m);
    Ok(AveragingReport {
        stable: eigenvalues.iter().all(|e| *e > 0.0),
        eigenvalues,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_regressor_first_order() {
        let w = TransferFunction::from_coeffs(&[1.0], &[1.0, 1.0]).unwrap();
        let r = averaging_stability_check(&w, &[SpectralLine::real(0.0, &[1.0])]).unwrap();
        assert!(r.stable);
    }

    #[test]
    fn single_negative_line() {
        // 1/(s+1)^2 at ν = 2: Re = (1 - 4) / 25 < 0.
        let w = TransferFunction::from_coeffs(&[1.0], &[1.0, 2.0, 1.0]).unwrap();
        let r = averaging_stability_check(&w, &[SpectralLine::real(2.0, &[1.0])]).unwrap();
        assert!(!r.stable);
    }

    #[test]
    fn rank_deficient_spectrum() {
        let w = TransferFunction::from_coeffs(&[1.0], &[1.0, 1.0]).unwrap();
        let r = averaging_stability_check(&w, &[SpectralLine::real(1.0, &[1.0, 0.0])]);
        assert!(matches!(r, Err(Error::Precondition(_))));
    }
}
