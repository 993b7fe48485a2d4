use nalgebra::{DMatrix, DVector};

use crate::analysis::{passification_feasible, Passification};
use crate::error::{Error, Result};
use crate::estimate::Gain;
use crate::model::StateSpaceLTI;
use crate::sim::ContinuousSystem;

/// `u = θᵀy`, `θ̇ = −Γ(gᵀy)y`.
pub fn passification_controller_rhs(
    theta: &DVector<f64>,
    y: &DVector<f64>,
    g: &DVector<f64>,
    gamma: &Gain,
) -> Result<(f64, DVector<f64>)> {
    if theta.len() != y.len() || g.len() != y.len() {
        return Err(Error::Dimension(format!(
            "θ has {}, y {}, g {} entries",
            theta.len(),
            y.len(),
            g.len()
        )));
    }
    gamma.validate(y.len(), "Gamma")?;
    Ok((theta.dot(y), gamma.apply(y) * (-g.dot(y))))
}

/// Single-input plant `ẋ = Ax + bu`, `y = Cx`, under the passification
/// controller. State layout: `[x, θ]`.
///
/// The logged `V = xᵀPx + θ̃ᵀΓ⁻¹θ̃` uses the certificate `(P, θ*)` with
/// `Pb = Cᵀg`, so `V̇ = xᵀ(A_θ*ᵀP + PA_θ*)x < 0`.
#[derive(Debug, Clone)]
pub struct PassificationLoop {
    pub plant: StateSpaceLTI,
    pub g: DVector<f64>,
    pub gamma: Gain,
    pub theta0: DVector<f64>,
    pub certificate: Passification,
}

impl PassificationLoop {
    /// Fails when no passifying certificate exists for `(A, b, C, g)`.
    pub fn new(plant: StateSpaceLTI, g: DVector<f64>, gamma: Gain, theta0: DVector<f64>) -> Result<Self> {
        if plant.inputs() != 1 {
            return Err(Error::Dimension("passification loop is single-input".into()));
        }
        let l = plant.outputs();
        if g.len() != l || theta0.len() != l {
            return Err(Error::Dimension(format!(
                "{l} outputs but g has {} and θ0 {} entries",
                g.len(),
                theta0.len()
            )));
        }
        gamma.validate(l, "Gamma")?;
        let certificate = passification_feasible(
            &plant.a,
            &plant.b.column(0).into_owned(),
            &plant.c.transpose(),
            &g,
        )?;
        Ok(PassificationLoop {
            plant,
            g,
            gamma,
            theta0,
            certificate,
        })
    }

    pub fn initial_state(&self, x0: &DVector<f64>) -> DVector<f64> {
        let n = self.plant.n();
        let mut s = DVector::zeros(n + self.g.len());
        s.rows_mut(0, n).copy_from(x0);
        s.rows_mut(n, self.g.len()).copy_from(&self.theta0);
        s
    }

    fn split(&self, s: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let n = self.plant.n();
        (s.rows(0, n).into_owned(), s.rows(n, self.g.len()).into_owned())
    }

    pub fn lyapunov(&self, x: &DVector<f64>, theta: &DVector<f64>) -> f64 {
        let p: &DMatrix<f64> = &self.certificate.p;
        x.dot(&(p * x)) + self.gamma.inverse_quadratic(&(theta - &self.certificate.theta))
    }
}

impl ContinuousSystem for PassificationLoop {
    fn channel_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (0..self.plant.n()).map(|i| format!("x{i}")).collect();
        names.extend((0..self.g.len()).map(|i| format!("y{i}")));
        names.extend((0..self.g.len()).map(|i| format!("theta{i}")));
        names.extend(["u", "V"].map(String::from));
        names
    }

    fn rhs(&self, _t: f64, s: &DVector<f64>) -> Result<DVector<f64>> {
        let (x, theta) = self.split(s);
        let y = self.plant.output(&x);
        let (u, dtheta) = passification_controller_rhs(&theta, &y, &self.g, &self.gamma)?;
        let mut out = DVector::zeros(s.len());
        let n = self.plant.n();
        out.rows_mut(0, n)
            .copy_from(&(&self.plant.a * &x + self.plant.b.column(0) * u));
        out.rows_mut(n, self.g.len()).copy_from(&dtheta);
        Ok(out)
    }

    fn log(&self, _t: f64, s: &DVector<f64>) -> Result<Vec<f64>> {
        let (x, theta) = self.split(s);
        let y = self.plant.output(&x);
        let (u, _) = passification_controller_rhs(&theta, &y, &self.g, &self.gamma)?;
        let mut row: Vec<f64> = x.iter().chain(y.iter()).chain(theta.iter()).copied().collect();
        row.extend([u, self.lyapunov(&x, &theta)]);
        Ok(row)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one() -> DVector<f64> {
        DVector::from_element(1, 1.0)
    }

    #[test]
    fn substitution() {
        let (u, d) = passification_controller_rhs(&DVector::zeros(1), &DVector::from_element(1, 2.0), &one(), &Gain::Scalar(1.0)).unwrap();
        assert_eq!(u, 0.0);
        assert_eq!(d[0], -4.0);
        let (u, d) = passification_controller_rhs(&DVector::from_element(1, 3.0), &DVector::zeros(1), &one(), &Gain::Scalar(1.0)).unwrap();
        assert_eq!(u, 0.0);
        assert_eq!(d[0], 0.0);
    }

    #[test]
    fn rejects_indefinite_gain() {
        let r = passification_controller_rhs(&DVector::zeros(1), &one(), &one(), &Gain::Scalar(-1.0));
        assert!(r.is_err());
    }
}
