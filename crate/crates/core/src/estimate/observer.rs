use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Adaptive observer on the nonminimal filter pair `(Λ, ℓ)`.
///
/// `omega_hat = [ω̂1; ω̂2]` and `theta_hat = [θ̂1; θ̂2]`, each of length `2n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverState {
    pub omega_hat: DVector<f64>,
    pub theta_hat: DVector<f64>,
    pub gamma: DMatrix<f64>,
    pub lambda: DMatrix<f64>,
    pub ell: DVector<f64>,
}

/// Output of [`observer_rhs`].
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverDerivatives {
    pub omega_hat: DVector<f64>,
    pub theta_hat: DVector<f64>,
    pub y_hat: f64,
}

impl ObserverState {
    pub fn new(
        lambda: DMatrix<f64>,
        ell: DVector<f64>,
        gamma: DMatrix<f64>,
        theta_hat: DVector<f64>,
    ) -> Result<Self> {
        let n = lambda.nrows();
        let s = ObserverState {
            omega_hat: DVector::zeros(2 * n),
            theta_hat,
            gamma,
            lambda,
            ell,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.lambda.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        linalg::require_square(&self.lambda, "Λ")?;
        let n = self.lambda.nrows();
        if self.ell.len() != n || self.omega_hat.len() != 2 * n || self.theta_hat.len() != 2 * n {
            return Err(Error::Dimension(format!(
                "observer of order {n} needs ℓ of length {n} and ω̂, θ̂ of length {}",
                2 * n
            )));
        }
        if self.gamma.nrows() != 2 * n || self.gamma.ncols() != 2 * n {
            return Err(Error::Dimension(format!("Γ must be {0}x{0}", 2 * n)));
        }
        linalg::require_hurwitz(&self.lambda)?;
        if !linalg::is_symmetric(&self.gamma, 1e-12) {
            return Err(Error::NotPositiveDefinite("Γ is not symmetric".into()));
        }
        linalg::require_spd(&self.gamma, "Γ")
    }

    /// `ŷ = θ̂ᵀω̂`.
    pub fn y_hat(&self) -> f64 {
        self.theta_hat.dot(&self.omega_hat)
    }
}

/// Filter and parameter derivatives:
/// `ω̂̇1 = Λω̂1 + ℓu`, `ω̂̇2 = Λω̂2 + ℓy`, `θ̂̇ = -Γ(ŷ - y)ω̂`.
pub fn observer_rhs(state: &ObserverState, u: f64, y: f64) -> Result<ObserverDerivatives> {
    state.validate()?;
    let n = state.n();
    let w1 = state.omega_hat.rows(0, n);
    let w2 = state.omega_hat.rows(n, n);
    let d1 = &state.lambda * w1 + &state.ell * u;
    let d2 = &state.lambda * w2 + &state.ell * y;
    let mut omega_dot = DVector::zeros(2 * n);
    omega_dot.rows_mut(0, n).copy_from(&d1);
    omega_dot.rows_mut(n, n).copy_from(&d2);
    let y_hat = state.y_hat();
    let theta_dot = -(&state.gamma * &state.omega_hat) * (y_hat - y);
    Ok(ObserverDerivatives {
        omega_hat: omega_dot,
        theta_hat: theta_dot,
        y_hat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn asymmetric_gain_rejected() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        let r = ObserverState::new(
            DMatrix::from_element(1, 1, -1.0),
            DVector::from_element(1, 1.0),
            g,
            DVector::zeros(2),
        );
        assert!(r.is_err());
    }
}
