use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sign of the correction applied on a misclassified sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerceptronSign {
    /// `θ ← θ - γ y φ`, `θ0 ← θ0 - γ y`.
    #[default]
    AsPrinted,
    /// `θ ← θ + γ y φ`, `θ0 ← θ0 + γ y` (Rosenblatt).
    Classical,
}

/// Whether `y (θᵀφ + θ0) > 0`.
pub fn classifies(theta: &DVector<f64>, theta0: f64, phi: &DVector<f64>, label: f64) -> bool {
    label * (theta.dot(phi) + theta0) > 0.0
}

/// One update: unchanged when the sample is correctly classified, otherwise
/// a step of size `γ` along `∓ y φ` according to `sign`.
pub fn perceptron_step(
    theta: &DVector<f64>,
    theta0: f64,
    phi: &DVector<f64>,
    label: f64,
    gamma: f64,
    sign: PerceptronSign,
) -> Result<(DVector<f64>, f64)> {
    if label != 1.0 && label != -1.0 {
        return Err(Error::InvalidParameter(format!("label must be ±1, got {label}")));
    }
    if phi.len() != theta.len() {
        return Err(Error::Dimension(format!(
            "feature vector has {} entries, θ has {}",
            phi.len(),
            theta.len()
        )));
    }
    if classifies(theta, theta0, phi, label) {
        return Ok((theta.clone(), theta0));
    }
    let s = match sign {
        PerceptronSign::AsPrinted => -1.0,
        PerceptronSign::Classical => 1.0,
    };
    Ok((theta + phi * (s * gamma * label), theta0 + s * gamma * label))
}
