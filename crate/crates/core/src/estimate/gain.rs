use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Positive adaptation gain: a scalar or a symmetric positive definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Gain {
    Scalar(f64),
    Matrix(DMatrix<f64>),
}

impl Gain {
    pub fn validate(&self, dim: usize, name: &str) -> Result<()> {
        match self {
            Gain::Scalar(g) => {
                if !(*g > 0.0) || !g.is_finite() {
                    return Err(Error::InvalidParameter(format!("{name} must be positive, got {g}")));
                }
            }
            Gain::Matrix(m) => {
                if m.nrows() != dim || m.ncols() != dim {
                    return Err(Error::Dimension(format!(
                        "{name} is {}x{}, expected {dim}x{dim}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                linalg::require_spd(m, name)?;
            }
        }
        Ok(())
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        match self {
            Gain::Scalar(g) => v * *g,
            Gain::Matrix(m) => m * v,
        }
    }

    /// `vᵀ Γ⁻¹ v`.
    pub fn inverse_quadratic(&self, v: &DVector<f64>) -> f64 {
        match self {
            Gain::Scalar(g) => v.norm_squared() / g,
            Gain::Matrix(m) => {
                let x = m.clone().cholesky().map(|c| c.solve(v)).unwrap_or_else(|| v.clone());
                v.dot(&x)
            }
        }
    }
}

impl From<f64> for Gain {
    fn from(g: f64) -> Self {
        Gain::Scalar(g)
    }
}
