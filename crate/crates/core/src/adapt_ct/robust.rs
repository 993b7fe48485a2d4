use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Correction `h` subtracted from a nominal adaptive law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RobustMod {
    #[default]
    None,
    /// `h = σ·k`.
    Sigma { sigma: f64 },
    /// `h = σ·|eᵀPb|·k`.
    EMod { sigma: f64 },
    /// Adaptation stops while `‖e‖ < e0`.
    DeadZone { e0: f64 },
    /// Keeps `‖k‖ ≤ radius`.
    Projection { radius: f64 },
}

/// Default σ when a config asks for a modification without a value.
pub const DEFAULT_SIGMA: f64 = 0.05;

/// Dead-zone width for a disturbance bound estimate.
pub fn default_dead_zone(disturbance_bound: f64) -> f64 {
    2.0 * disturbance_bound
}

impl RobustMod {
    pub fn validate(&self) -> Result<()> {
        let (name, v) = match *self {
            RobustMod::None => return Ok(()),
            RobustMod::Sigma { sigma } | RobustMod::EMod { sigma } => ("sigma", sigma),
            RobustMod::DeadZone { e0 } => ("e0", e0),
            RobustMod::Projection { radius } => ("radius", radius),
        };
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
        }
        Ok(())
    }

    /// Radius of the ball the parameters are confined to, if any.
    pub fn radius(&self) -> Option<f64> {
        match *self {
            RobustMod::Projection { radius } => Some(radius),
            _ => None,
        }
    }
}

/// Applies `mode` to the nominal parameter derivative.
///
/// `e_norm` is `‖e‖` and `epb` is `eᵀPb`. Projection removes the outward
/// radial component once `‖k‖` reaches the radius.
pub fn robust_mod(
    mode: &RobustMod,
    nominal: &DVector<f64>,
    k: &DVector<f64>,
    e_norm: f64,
    epb: f64,
) -> Result<DVector<f64>> {
    mode.validate()?;
    if nominal.len() != k.len() {
        return Err(Error::Dimension(format!(
            "derivative has {} entries, parameters {}",
            nominal.len(),
            k.len()
        )));
    }
    Ok(match *mode {
        RobustMod::None => nominal.clone(),
        RobustMod::Sigma { sigma } => nominal - k * sigma,
        RobustMod::EMod { sigma } => nominal - k * (sigma * epb.abs()),
        RobustMod::DeadZone { e0 } => {
            if e_norm < e0 {
                DVector::zeros(k.len())
            } else {
                nominal.clone()
            }
        }
        RobustMod::Projection { radius } => {
            let kk = k.norm_squared();
            let outward = k.dot(nominal);
            if kk >= radius * radius && outward > 0.0 {
                nominal - k * (outward / kk)
            } else {
                nominal.clone()
            }
        }
    })
}

/// Radial clamp onto the closed ball; removes integration overshoot.
pub fn project_to_ball(k: &mut DVector<f64>, radius: f64) {
    let n = k.norm();
    if n > radius {
        *k *= radius / n;
    }
}
