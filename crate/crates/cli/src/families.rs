//! Named nonlinearities selectable from configs.

use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use adaptctl::adapt_ct::ParametricNonlinearity;
use adaptctl::model::{Convexity, ParameterSet};
use adaptctl::{Error, Result};

/// Regressor `φ(x)` of the speed-gradient plant `ẋ = a x + θ*φ(x) + u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SgFamily {
    Linear,
    Cubic,
    Sine,
}

impl SgFamily {
    pub fn phi(self, x: f64) -> f64 {
        match self {
            SgFamily::Linear => x,
            SgFamily::Cubic => x * x * x,
            SgFamily::Sine => x.sin(),
        }
    }
}

/// `f(x, θ)` of the min-max plant, scalar `x` and `θ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinMaxFamily {
    /// `e^{θx}`: convex in `θ`.
    Exp,
    /// `x² ln(1 + θ)`: concave in `θ` for `θ > −1`.
    Log,
    /// `θx`.
    Linear,
}

impl MinMaxFamily {
    pub fn f(self, x: f64, theta: f64) -> f64 {
        match self {
            MinMaxFamily::Exp => (theta * x).exp(),
            MinMaxFamily::Log => x * x * theta.ln_1p(),
            MinMaxFamily::Linear => theta * x,
        }
    }

    pub fn df_dtheta(self, x: f64, theta: f64) -> f64 {
        match self {
            MinMaxFamily::Exp => x * (theta * x).exp(),
            MinMaxFamily::Log => x * x / (1.0 + theta),
            MinMaxFamily::Linear => x,
        }
    }

    pub fn convexity(self) -> Convexity {
        match self {
            MinMaxFamily::Exp => Convexity::Convex,
            MinMaxFamily::Log => Convexity::Concave,
            MinMaxFamily::Linear => Convexity::Linear,
        }
    }

    pub fn check_box(self, lo: f64, hi: f64) -> Result<()> {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidParameter(format!("empty or unbounded parameter box [{lo}, {hi}]")));
        }
        if self == MinMaxFamily::Log && lo <= -1.0 {
            return Err(Error::InvalidParameter(format!("log family needs θ > −1, box starts at {lo}")));
        }
        Ok(())
    }

    pub fn nonlinearity(self, lo: f64, hi: f64) -> Result<ParametricNonlinearity> {
        self.check_box(lo, hi)?;
        ParametricNonlinearity::new(
            Arc::new(move |x: &DVector<f64>, th: &DVector<f64>| self.f(x[0], th[0])),
            Arc::new(move |x: &DVector<f64>, th: &DVector<f64>| DVector::from_element(1, self.df_dtheta(x[0], th[0]))),
            self.convexity(),
            ParameterSet::Box { lo: vec![lo], hi: vec![hi] },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradients_match_differences() {
        for fam in [MinMaxFamily::Exp, MinMaxFamily::Log, MinMaxFamily::Linear] {
            let (x, th, h) = (0.7, 0.3, 1e-6);
            let fd = (fam.f(x, th + h) - fam.f(x, th - h)) / (2.0 * h);
            assert!((fd - fam.df_dtheta(x, th)).abs() < 1e-8);
        }
    }

    #[test]
    fn log_box_must_stay_above_minus_one() {
        assert!(MinMaxFamily::Log.check_box(-1.0, 1.0).is_err());
        assert!(MinMaxFamily::Log.check_box(0.0, 1.0).is_ok());
    }
}
