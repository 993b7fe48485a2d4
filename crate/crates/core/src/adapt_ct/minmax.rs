use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::estimate::Gain;
use crate::model::{Convexity, ParameterSet};
use crate::sim::{ContinuousSystem, Signal};

pub type ParamFn = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> f64 + Send + Sync>;
pub type ParamGrad = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync>;

/// `f(X, θ)` with its `θ`-gradient, curvature tag and parameter set.
#[derive(Clone)]
pub struct ParametricNonlinearity {
    pub f: ParamFn,
    pub grad: ParamGrad,
    pub convexity: Convexity,
    pub theta_set: ParameterSet,
}

impl fmt::Debug for ParametricNonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParametricNonlinearity")
            .field("convexity", &self.convexity)
            .field("theta_set", &self.theta_set)
            .finish_non_exhaustive()
    }
}

impl ParametricNonlinearity {
    pub fn new(f: ParamFn, grad: ParamGrad, convexity: Convexity, theta_set: ParameterSet) -> Result<Self> {
        theta_set.validate()?;
        if !matches!(theta_set, ParameterSet::Box { .. }) {
            return Err(Error::Unsupported("min-max control needs a box parameter set".into()));
        }
        Ok(ParametricNonlinearity {
            f,
            grad,
            convexity,
            theta_set,
        })
    }

    pub fn dim(&self) -> usize {
        self.theta_set.dim()
    }

    pub fn eval(&self, x: &DVector<f64>, theta: &DVector<f64>) -> f64 {
        (self.f)(x, theta)
    }

    fn bounds(&self) -> (&[f64], &[f64]) {
        match &self.theta_set {
            ParameterSet::Box { lo, hi } => (lo, hi),
            ParameterSet::Finite(_) => unreachable!("rejected at construction"),
        }
    }
}

/// Solution of `min_ω max_{θ∈Θs} sgn(e_c)·J(θ, ω)` with
/// `J = β(f(X, θ) − f(X, θ̂) + (θ̂ − θ)ᵀω)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxSolution {
    /// Min-max value before scaling by `λ_max`.
    pub value: f64,
    pub omega: DVector<f64>,
    /// A maximizing `θ` at `ω` (the smallest one on ties).
    pub maximizer: DVector<f64>,
}

/// `sgn(e_c)·J(θ, ω)`.
pub fn minmax_objective(
    nl: &ParametricNonlinearity,
    x: &DVector<f64>,
    theta_hat: &DVector<f64>,
    sign: f64,
    beta: f64,
    theta: &DVector<f64>,
    omega: &DVector<f64>,
) -> f64 {
    sign * beta * (nl.eval(x, theta) - nl.eval(x, theta_hat) + (theta_hat - theta).dot(omega))
}

/// Closed-form min-max for convex or concave `sgn(e_c)·β·f` in `θ`.
///
/// Convex: the inner maximum sits at an end of `Θs`, and `ω*` is the chord
/// slope that equalizes both ends. Concave: `ω* = ∇f(θ̂)` makes `θ̂` the
/// maximizer with value 0. The convex branch needs scalar `θ`.
pub fn minmax_solve(
    nl: &ParametricNonlinearity,
    x: &DVector<f64>,
    theta_hat: &DVector<f64>,
    e_c: f64,
    beta: f64,
) -> Result<MinMaxSolution> {
    let dim = nl.dim();
    if theta_hat.len() != dim {
        return Err(Error::Dimension(format!("θ̂ has {} entries, Θs is {dim}-dimensional", theta_hat.len())));
    }
    let sign = if e_c < 0.0 { -1.0 } else { 1.0 };
    let grad = (nl.grad)(x, theta_hat);
    let sb = sign * beta;
    let convex = match nl.convexity {
        Convexity::Linear => false,
        Convexity::Convex => sb > 0.0,
        Convexity::Concave => sb < 0.0,
        Convexity::General => {
            return Err(Error::Unsupported(
                "min-max solution for a general (neither convex nor concave) f".into(),
            ))
        }
    };
    if !convex {
        return Ok(MinMaxSolution {
            value: 0.0,
            omega: grad,
            maximizer: theta_hat.clone(),
        });
    }
    if dim != 1 {
        return Err(Error::Unsupported("convex min-max branch implemented for scalar θ only".into()));
    }
    let (lo, hi) = nl.bounds();
    let (lo, hi) = (DVector::from_element(1, lo[0]), DVector::from_element(1, hi[0]));
    let omega = if hi[0] > lo[0] {
        DVector::from_element(1, (nl.eval(x, &hi) - nl.eval(x, &lo)) / (hi[0] - lo[0]))
    } else {
        grad
    };
    let at_lo = minmax_objective(nl, x, theta_hat, sign, beta, &lo, &omega);
    let at_hi = minmax_objective(nl, x, theta_hat, sign, beta, &hi, &omega);
    let (value, maximizer) = if at_hi > at_lo { (at_hi, hi) } else { (at_lo, lo) };
    Ok(MinMaxSolution {
        value: value.max(0.0),
        omega,
        maximizer,
    })
}

/// `s(y) = y^q` for `|y| < 1`, `sgn(y)` otherwise; `q` odd.
pub fn smooth_sign(y: f64, q: u32) -> f64 {
    if y.abs() < 1.0 {
        y.powi(q as i32)
    } else {
        y.signum()
    }
}

/// Adjustable parameters and constants of the min-max controller.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxControllerState {
    pub theta_hat: DVector<f64>,
    pub alpha_hat: DVector<f64>,
    pub epsilon: f64,
    pub beta: f64,
    pub lambda_max: f64,
    /// Odd exponent `q` of `s(y)` inside the band.
    pub s_exponent: u32,
    pub gamma_alpha: Gain,
    pub gamma_theta: Gain,
    /// Last solution, for logging.
    pub a_star: f64,
    pub omega_star: DVector<f64>,
}

impl MinMaxControllerState {
    pub fn new(theta_hat: DVector<f64>, alpha_hat: DVector<f64>, epsilon: f64, gamma_alpha: Gain, gamma_theta: Gain) -> Result<Self> {
        let s = MinMaxControllerState {
            omega_star: DVector::zeros(theta_hat.len()),
            theta_hat,
            alpha_hat,
            epsilon,
            beta: 1.0,
            lambda_max: 1.0,
            s_exponent: 1,
            gamma_alpha,
            gamma_theta,
            a_star: 0.0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.lambda_max > 0.0) || !self.lambda_max.is_finite() {
            return Err(Error::InvalidParameter(format!("lambda_max must be positive, got {}", self.lambda_max)));
        }
        if self.beta == 0.0 || !self.beta.is_finite() {
            return Err(Error::InvalidParameter("beta must be nonzero".into()));
        }
        if self.s_exponent % 2 == 0 {
            return Err(Error::InvalidParameter(format!("s exponent must be odd, got {}", self.s_exponent)));
        }
        self.gamma_alpha.validate(self.alpha_hat.len(), "Gamma_alpha")?;
        self.gamma_theta.validate(self.theta_hat.len(), "Gamma_theta")?;
        Ok(())
    }

    /// `e_ε = e_c − ε·s(e_c/ε)`.
    pub fn e_eps(&self, e_c: f64) -> f64 {
        e_c - self.epsilon * smooth_sign(e_c / self.epsilon, self.s_exponent)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxOutput {
    pub u: f64,
    pub a_star: f64,
    pub omega_star: DVector<f64>,
    pub alpha_hat: DVector<f64>,
    pub theta_hat: DVector<f64>,
    pub e_eps: f64,
}

/// `u = −f(X, θ̂) + α̂ᵀX + r − a*·s(e_c/ε)`, `α̂̇ = −Γ_α e_ε X`,
/// `θ̂̇ = Γ_θ e_ε ω*`, with `a* = λ_max·(min-max value)`.
pub fn minmax_nlp_control(
    state: &MinMaxControllerState,
    nl: &ParametricNonlinearity,
    x: &DVector<f64>,
    e_c: f64,
    r: f64,
) -> Result<MinMaxOutput> {
    if state.alpha_hat.len() != x.len() {
        return Err(Error::Dimension(format!("α̂ has {} entries, X {}", state.alpha_hat.len(), x.len())));
    }
    let sol = minmax_solve(nl, x, &state.theta_hat, e_c, state.beta)?;
    let a_star = state.lambda_max * sol.value;
    let e_eps = state.e_eps(e_c);
    let s = smooth_sign(e_c / state.epsilon, state.s_exponent);
    Ok(MinMaxOutput {
        u: -nl.eval(x, &state.theta_hat) + state.alpha_hat.dot(x) + r - a_star * s,
        a_star,
        alpha_hat: -state.gamma_alpha.apply(x) * e_eps,
        theta_hat: state.gamma_theta.apply(&sol.omega) * e_eps,
        omega_star: sol.omega,
        e_eps,
    })
}

/// Scalar plant `ẋ = a_p x + f(x, θ) + u` tracking `ẋ_m = a_m x_m + r`.
///
/// `θ̂` is kept in `Θs` by projection. With `λ_max·β ≥ 1` and `q = 1`,
/// `V = ½(e_ε² + α̃ᵀΓ_α⁻¹α̃ + θ̃ᵀΓ_θ⁻¹θ̃)` is nonincreasing.
/// State layout: `[x, x_m, α̂, θ̂]`.
#[derive(Debug, Clone)]
pub struct MinMaxLoop {
    pub a_p: f64,
    pub a_m: f64,
    pub theta_star: DVector<f64>,
    pub nl: ParametricNonlinearity,
    pub controller: MinMaxControllerState,
    pub r: Signal,
}

impl MinMaxLoop {
    pub fn new(
        a_p: f64,
        a_m: f64,
        theta_star: DVector<f64>,
        nl: ParametricNonlinearity,
        controller: MinMaxControllerState,
        r: Signal,
    ) -> Result<Self> {
        if !(a_m < 0.0) {
            return Err(Error::NotHurwitz { max_real: a_m });
        }
        controller.validate()?;
        r.validate()?;
        if controller.alpha_hat.len() != 1 {
            return Err(Error::Dimension("scalar plant needs a scalar α̂".into()));
        }
        if theta_star.len() != nl.dim() || controller.theta_hat.len() != nl.dim() {
            return Err(Error::Dimension(format!("Θs is {}-dimensional", nl.dim())));
        }
        if !nl.theta_set.contains(&theta_star, 1e-12) {
            return Err(Error::InvalidParameter("θ* lies outside Θs".into()));
        }
        let mut controller = controller;
        controller.theta_hat = nl.theta_set.project(&controller.theta_hat);
        Ok(MinMaxLoop {
            a_p,
            a_m,
            theta_star,
            nl,
            controller,
            r,
        })
    }

    /// `α* = a_m − a_p`.
    pub fn alpha_star(&self) -> f64 {
        self.a_m - self.a_p
    }

    pub fn initial_state(&self, x0: f64, xm0: f64) -> DVector<f64> {
        let d = self.nl.dim();
        let mut s = DVector::zeros(3 + d);
        s[0] = x0;
        s[1] = xm0;
        s[2] = self.controller.alpha_hat[0];
        s.rows_mut(3, d).copy_from(&self.controller.theta_hat);
        s
    }

    fn evaluate(&self, t: f64, s: &DVector<f64>) -> Result<(MinMaxControllerState, f64, MinMaxOutput)> {
        let d = self.nl.dim();
        let mut c = self.controller.clone();
        c.alpha_hat[0] = s[2];
        c.theta_hat = s.rows(3, d).into_owned();
        let r = self.r.eval(t);
        let out = minmax_nlp_control(&c, &self.nl, &DVector::from_element(1, s[0]), s[0] - s[1], r)?;
        Ok((c, r, out))
    }

    pub fn lyapunov(&self, s: &DVector<f64>) -> f64 {
        let d = self.nl.dim();
        let e_eps = self.controller.e_eps(s[0] - s[1]);
        let da = DVector::from_element(1, s[2] - self.alpha_star());
        let dt = s.rows(3, d) - &self.theta_star;
        0.5 * (e_eps * e_eps
            + self.controller.gamma_alpha.inverse_quadratic(&da)
            + self.controller.gamma_theta.inverse_quadratic(&dt))
    }
}

impl ContinuousSystem for MinMaxLoop {
    fn channel_names(&self) -> Vec<String> {
        let mut names: Vec<String> = ["x", "xm", "e", "e_eps", "alpha", "u", "r", "a_star"].map(String::from).to_vec();
        names.extend((0..self.nl.dim()).map(|i| format!("theta{i}")));
        names.extend((0..self.nl.dim()).map(|i| format!("omega{i}")));
        names.push("V".into());
        names
    }

    fn rhs(&self, t: f64, s: &DVector<f64>) -> Result<DVector<f64>> {
        let d = self.nl.dim();
        let (c, r, out) = self.evaluate(t, s)?;
        let x = DVector::from_element(1, s[0]);
        let mut ds = DVector::zeros(s.len());
        ds[0] = self.a_p * s[0] + self.nl.eval(&x, &self.theta_star) + out.u;
        ds[1] = self.a_m * s[1] + r;
        ds[2] = out.alpha_hat[0];
        let (lo, hi) = self.nl.bounds();
        for i in 0..d {
            let th = c.theta_hat[i];
            let v = out.theta_hat[i];
            // Projection: no motion out of the box.
            ds[3 + i] = if (th <= lo[i] && v < 0.0) || (th >= hi[i] && v > 0.0) { 0.0 } else { v };
        }
        Ok(ds)
    }

    fn post_step(&self, s: &mut DVector<f64>) {
        let d = self.nl.dim();
        let th = self.nl.theta_set.project(&s.rows(3, d).into_owned());
        s.rows_mut(3, d).copy_from(&th);
    }

    fn log(&self, t: f64, s: &DVector<f64>) -> Result<Vec<f64>> {
        let (c, r, out) = self.evaluate(t, s)?;
        let mut row = vec![s[0], s[1], s[0] - s[1], out.e_eps, s[2], out.u, r, out.a_star];
        row.extend(c.theta_hat.iter());
        row.extend(out.omega_star.iter());
        row.push(self.lyapunov(s));
        Ok(row)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_nl() -> ParametricNonlinearity {
        ParametricNonlinearity::new(
            Arc::new(|x, th| (th[0] * x[0]).exp()),
            Arc::new(|x, th| DVector::from_element(1, x[0] * (th[0] * x[0]).exp())),
            Convexity::Convex,
            ParameterSet::Box { lo: vec![0.0], hi: vec![1.0] },
        )
        .unwrap()
    }

    #[test]
    fn smooth_sign_branches() {
        assert_eq!(smooth_sign(2.0, 3), 1.0);
        assert_eq!(smooth_sign(-1.0, 1), -1.0);
        assert_eq!(smooth_sign(0.5, 3), 0.125);
    }

    #[test]
    fn linear_f_reduces_to_gradient() {
        let nl = ParametricNonlinearity::new(
            Arc::new(|x, th| th[0] * x[0] + 2.0 * th[1]),
            Arc::new(|x, _| DVector::from_vec(vec![x[0], 2.0])),
            Convexity::Linear,
            ParameterSet::Box { lo: vec![-1.0, -1.0], hi: vec![1.0, 1.0] },
        )
        .unwrap();
        let x = DVector::from_element(1, 3.0);
        for e in [-1.0, 1.0] {
            let s = minmax_solve(&nl, &x, &DVector::from_vec(vec![0.2, -0.4]), e, 1.0).unwrap();
            assert_eq!(s.value, 0.0);
            assert_eq!(s.omega.as_slice(), &[3.0, 2.0]);
        }
    }

    #[test]
    fn convex_branch_equalizes_the_ends() {
        let nl = exp_nl();
        let x = DVector::from_element(1, 1.0);
        let th = DVector::from_element(1, 0.4);
        let s = minmax_solve(&nl, &x, &th, 1.0, 1.0).unwrap();
        assert!((s.omega[0] - (1f64.exp() - 1.0)).abs() < 1e-15);
        let chord = 1.0 + 0.4 * (1f64.exp() - 1.0);
        assert!((s.value - (chord - 0.4f64.exp())).abs() < 1e-14);
        assert_eq!(s.maximizer[0], 0.0);
        // Negative error flips to the concave branch.
        let n = minmax_solve(&nl, &x, &th, -1.0, 1.0).unwrap();
        assert_eq!(n.value, 0.0);
        assert!((n.omega[0] - 0.4f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn general_curvature_unsupported() {
        let mut nl = exp_nl();
        nl.convexity = Convexity::General;
        let r = minmax_solve(&nl, &DVector::from_element(1, 1.0), &DVector::zeros(1), 1.0, 1.0);
        assert!(matches!(r, Err(Error::Unsupported(_))));
    }

    #[test]
    fn controller_validation() {
        let g = || Gain::Scalar(1.0);
        assert!(MinMaxControllerState::new(DVector::zeros(1), DVector::zeros(1), 0.0, g(), g()).is_err());
        let mut c = MinMaxControllerState::new(DVector::zeros(1), DVector::zeros(1), 0.1, g(), g()).unwrap();
        c.s_exponent = 2;
        assert!(c.validate().is_err());
    }
}
