use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Smallest admissible eigenvalue of the covariance before it is declared
/// degenerate.
pub const RLS_MIN_EIGENVALUE: f64 = 1e-14;

/// Recursive least-squares estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct RlsEstimatorState {
    pub theta: DVector<f64>,
    pub gamma: DMatrix<f64>,
}

impl RlsEstimatorState {
    pub fn new(theta: DVector<f64>, gamma: DMatrix<f64>) -> Result<Self> {
        let s = RlsEstimatorState { theta, gamma };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.theta.len();
        if self.gamma.nrows() != n || self.gamma.ncols() != n {
            return Err(Error::Dimension(format!(
                "Γ is {}x{}, θ has {n} entries",
                self.gamma.nrows(),
                self.gamma.ncols()
            )));
        }
        linalg::require_spd(&self.gamma, "Γ")
    }
}

/// One classical RLS step with normalized gain `K = Γφ/(1 + φᵀΓφ)`:
/// `θ ← θ - K(φᵀθ - y)`, `Γ ← Γ - ΓφφᵀΓ/(1 + φᵀΓφ)`.
///
/// The covariance is propagated in Joseph form and re-symmetrized.
pub fn rls_step(state: &RlsEstimatorState, phi: &DVector<f64>, y: f64) -> Result<RlsEstimatorState> {
    let n = state.theta.len();
    if phi.len() != n {
        return Err(Error::Dimension(format!("regressor has {} entries, θ has {n}", phi.len())));
    }
    if !linalg::is_symmetric(&state.gamma, 1e-9) {
        return Err(Error::NotPositiveDefinite("Γ is not symmetric".into()));
    }
    let gphi = &state.gamma * phi;
    let denom = 1.0 + phi.dot(&gphi);
    if !(denom > 0.0) {
        return Err(Error::NotPositiveDefinite("Γ is not positive definite".into()));
    }
    let k = &gphi / denom;
    let err = phi.dot(&state.theta) - y;
    let theta = &state.theta - &k * err;
    let i_kp = DMatrix::<f64>::identity(n, n) - &k * phi.transpose();
    let gamma = linalg::symmetrize(&(&i_kp * &state.gamma * i_kp.transpose() + &k * k.transpose()));
    let lmin = linalg::min_eigenvalue(&gamma);
    if !(lmin >= RLS_MIN_EIGENVALUE) {
        return Err(Error::DegenerateGain(lmin));
    }
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("RLS estimate".into()));
    }
    Ok(RlsEstimatorState { theta, gamma })
}
