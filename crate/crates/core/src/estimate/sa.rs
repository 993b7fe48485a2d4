use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the SA normalizer `r_k` evolves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SaNormalizer {
    /// `r_k = r_{k-1} + φ_kᵀφ_k`, `r_0 = 1`.
    #[default]
    Cumulative,
    /// `r_k = 1 + φ_kᵀφ_k` from the first step on (projection algorithm).
    Projection,
}

/// Step-size sequence multiplying `1/r`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SaStepSize {
    #[default]
    Constant,
    /// `γ_k = γ / k^exponent` with `exponent ∈ (1/2, 1]`, which satisfies
    /// `Σγ_k = ∞`, `Σγ_k² < ∞`.
    RobbinsMonro { exponent: f64 },
}

/// Stochastic-approximation estimator for `y_k = φ_{k-1}ᵀθ* + v_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SaEstimatorState {
    pub theta: DVector<f64>,
    /// Normalizer `r_{k-1}` as of the last step.
    pub r: f64,
    pub gamma: f64,
    pub normalizer: SaNormalizer,
    pub step_size: SaStepSize,
    /// Steps taken so far.
    pub k: u64,
}

impl SaEstimatorState {
    pub fn new(theta: DVector<f64>, gamma: f64) -> Result<Self> {
        let s = SaEstimatorState {
            theta,
            r: 1.0,
            gamma,
            normalizer: SaNormalizer::Cumulative,
            step_size: SaStepSize::Constant,
            k: 0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_normalizer(mut self, normalizer: SaNormalizer) -> Self {
        self.normalizer = normalizer;
        self
    }

    pub fn with_step_size(mut self, step_size: SaStepSize) -> Result<Self> {
        self.step_size = step_size;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidParameter(format!("γ must be positive, got {}", self.gamma)));
        }
        if !(self.r >= 1.0) {
            return Err(Error::InvalidParameter(format!("r must be at least 1, got {}", self.r)));
        }
        if let SaStepSize::RobbinsMonro { exponent } = self.step_size {
            if !(exponent > 0.5 && exponent <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "Robbins–Monro exponent must lie in (1/2, 1], got {exponent}"
                )));
            }
        }
        Ok(())
    }

    /// One-step-ahead prediction `φᵀθ`.
    pub fn predict(&self, phi: &DVector<f64>) -> f64 {
        phi.dot(&self.theta)
    }
}

/// `θ_k = θ_{k-1} - (γ/r_{k-1}) φ_{k-1} (φ_{k-1}ᵀθ_{k-1} - y_k)`.
///
/// `r_{k-1}` is formed from `φ_{k-1}` at this call; the first step uses
/// `r_0 = 1`.
pub fn sa_step(state: &SaEstimatorState, phi_prev: &DVector<f64>, y: f64) -> Result<SaEstimatorState> {
    state.validate()?;
    if phi_prev.len() != state.theta.len() {
        return Err(Error::Dimension(format!(
            "regressor has {} entries, θ has {}",
            phi_prev.len(),
            state.theta.len()
        )));
    }
    let mut next = state.clone();
    // The cumulative normalizer starts from r_0 = 1 before any regressor is
    // seen; the projection normalizer always includes the current one, which
    // keeps every noise-free step a contraction for γ < 2.
    next.r = match state.normalizer {
        SaNormalizer::Cumulative if state.k == 0 => state.r,
        SaNormalizer::Cumulative => state.r + phi_prev.norm_squared(),
        SaNormalizer::Projection => 1.0 + phi_prev.norm_squared(),
    };
    next.k = state.k + 1;
    let gamma = match state.step_size {
        SaStepSize::Constant => state.gamma,
        SaStepSize::RobbinsMonro { exponent } => state.gamma / (next.k as f64).powf(exponent),
    };
    let err = phi_prev.dot(&state.theta) - y;
    next.theta = &state.theta - phi_prev * (gamma / next.r * err);
    if next.theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("SA estimate".into()));
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_example() {
        let s = SaEstimatorState::new(DVector::from_element(1, 0.0), 1.0).unwrap();
        let s = sa_step(&s, &DVector::from_element(1, 1.0), 2.0).unwrap();
        assert_eq!(s.theta[0], 2.0);
        assert_eq!(s.r, 1.0);
    }

    #[test]
    fn normalizer_accumulates() {
        let mut s = SaEstimatorState::new(DVector::from_element(2, 0.0), 1.0).unwrap();
        let phi = DVector::from_vec(vec![1.0, 1.0]);
        for _ in 0..3 {
            s = sa_step(&s, &phi, 0.0).unwrap();
        }
        assert_eq!(s.r, 5.0);
        let mut p = SaEstimatorState::new(DVector::from_element(2, 0.0), 1.0)
            .unwrap()
            .with_normalizer(SaNormalizer::Projection);
        for _ in 0..3 {
            p = sa_step(&p, &phi, 0.0).unwrap();
        }
        assert_eq!(p.r, 3.0);
    }

    #[test]
    fn projection_first_step_is_normalized() {
        let s = SaEstimatorState::new(DVector::from_element(1, 0.0), 1.0)
            .unwrap()
            .with_normalizer(SaNormalizer::Projection);
        let s = sa_step(&s, &DVector::from_element(1, 10.0), 20.0).unwrap();
        assert!((s.theta[0] - 200.0 / 101.0).abs() < 1e-14);
    }
}
