use nalgebra::DVector;

use super::gain::Gain;
use crate::error::{Error, Result};

/// Continuous gradient-flow estimator for `y = θ*ᵀφ`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimatorState {
    pub theta: DVector<f64>,
    pub gamma: Gain,
}

impl GradientEstimatorState {
    pub fn new(theta: DVector<f64>, gamma: Gain) -> Result<Self> {
        gamma.validate(theta.len(), "γ")?;
        Ok(GradientEstimatorState { theta, gamma })
    }
}

/// Squared prediction loss `½(θᵀφ - y)²`.
pub fn prediction_loss(theta: &DVector<f64>, phi: &DVector<f64>, y: f64) -> f64 {
    0.5 * (theta.dot(phi) - y).powi(2)
}

/// `θ̇ = -γ φ (θᵀφ - y)`.
pub fn gradient_rhs(state: &GradientEstimatorState, phi: &DVector<f64>, y: f64) -> Result<DVector<f64>> {
    state.gamma.validate(state.theta.len(), "γ")?;
    if phi.len() != state.theta.len() {
        return Err(Error::Dimension(format!(
            "regressor has {} entries, θ has {}",
            phi.len(),
            state.theta.len()
        )));
    }
    let e = state.theta.dot(phi) - y;
    Ok(-state.gamma.apply(&(phi * e)))
}
