use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::Gain;
use crate::model::NonlinearPlant;
use crate::sim::ContinuousSystem;

/// Goal rate `w(x, θ, t) = ∂Q/∂t + ∇_xQ·F(x, θ, t)`.
pub type GoalRate = Arc<dyn Fn(&DVector<f64>, &DVector<f64>, f64) -> f64 + Send + Sync>;
/// `∇_θ w(x, θ, t)`.
pub type GoalGradient = Arc<dyn Fn(&DVector<f64>, &DVector<f64>, f64) -> DVector<f64> + Send + Sync>;
/// Hessian of the Bregman generator at `θ`.
pub type GeneratorHessian = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;
/// Control law `u = U(x, θ, t)`.
pub type ControlLaw = Arc<dyn Fn(&DVector<f64>, &DVector<f64>, f64) -> f64 + Send + Sync>;

/// How the generator Hessian multiplies the goal gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BregmanScaling {
    /// `θ̇ = −∇²f(θ)∇_θw`.
    #[default]
    Hessian,
    /// `θ̇ = −[∇²f(θ)]⁻¹∇_θw` (mirror-descent form).
    InverseHessian,
}

#[derive(Clone)]
pub struct BregmanGenerator {
    pub hessian: GeneratorHessian,
    pub scaling: BregmanScaling,
}

/// Speed-gradient law `θ̇ = −Γ∇_θw`, or its Bregman variant when a
/// generator is attached (the variant ignores `Γ`).
#[derive(Clone)]
pub struct SpeedGradientLaw {
    pub w: GoalRate,
    /// Analytic gradient; central differences are used without one.
    pub grad: Option<GoalGradient>,
    pub gamma: Gain,
    pub generator: Option<BregmanGenerator>,
}

impl fmt::Debug for SpeedGradientLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpeedGradientLaw")
            .field("gamma", &self.gamma)
            .field("analytic_gradient", &self.grad.is_some())
            .field("bregman", &self.generator.as_ref().map(|g| g.scaling))
            .finish()
    }
}

impl SpeedGradientLaw {
    pub fn new(w: GoalRate, gamma: Gain) -> Self {
        SpeedGradientLaw {
            w,
            grad: None,
            gamma,
            generator: None,
        }
    }

    pub fn with_gradient(mut self, grad: GoalGradient) -> Self {
        self.grad = Some(grad);
        self
    }

    pub fn with_generator(mut self, hessian: GeneratorHessian, scaling: BregmanScaling) -> Self {
        self.generator = Some(BregmanGenerator { hessian, scaling });
        self
    }

    pub fn gradient(&self, x: &DVector<f64>, theta: &DVector<f64>, t: f64) -> DVector<f64> {
        if let Some(g) = &self.grad {
            return g(x, theta, t);
        }
        DVector::from_fn(theta.len(), |i, _| {
            let h = 1e-6 * theta[i].abs().max(1.0);
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[i] += h;
            tm[i] -= h;
            ((self.w)(x, &tp, t) - (self.w)(x, &tm, t)) / (2.0 * h)
        })
    }

    /// Midpoint-convexity test of `θ ↦ w(x, θ, t)` on `samples` random pairs
    /// from the box `lo ≤ θ ≤ hi`. Returns a description of the first
    /// violation found.
    pub fn convexity_check(
        &self,
        x: &DVector<f64>,
        t: f64,
        lo: &DVector<f64>,
        hi: &DVector<f64>,
        samples: usize,
        seed: u64,
    ) -> Option<String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draw = |rng: &mut ChaCha8Rng| {
            DVector::from_fn(lo.len(), |i, _| {
                if hi[i] > lo[i] {
                    rng.random_range(lo[i]..=hi[i])
                } else {
                    lo[i]
                }
            })
        };
        for _ in 0..samples {
            let a = draw(&mut rng);
            let b = draw(&mut rng);
            let wa = (self.w)(x, &a, t);
            let wb = (self.w)(x, &b, t);
            let wm = (self.w)(x, &((&a + &b) * 0.5), t);
            let slack = 1e-9 * (1.0 + wa.abs().max(wb.abs()));
            if wm > 0.5 * (wa + wb) + slack {
                return Some(format!(
                    "w is not convex in θ: midpoint value {wm:.6e} exceeds chord {:.6e}",
                    0.5 * (wa + wb)
                ));
            }
        }
        None
    }
}

/// `−Γ∇_θw`, or `−∇²f(θ)^{±1}∇_θw` for the Bregman variant.
pub fn speed_gradient_rhs(law: &SpeedGradientLaw, x: &DVector<f64>, theta: &DVector<f64>, t: f64) -> Result<DVector<f64>> {
    law.gamma.validate(theta.len(), "Gamma")?;
    let g = law.gradient(x, theta, t);
    if g.len() != theta.len() {
        return Err(Error::Dimension(format!(
            "gradient has {} entries, θ {}",
            g.len(),
            theta.len()
        )));
    }
    let Some(gen) = &law.generator else {
        return Ok(-law.gamma.apply(&g));
    };
    let h = (gen.hessian)(theta);
    if h.nrows() != theta.len() || h.ncols() != theta.len() {
        return Err(Error::Dimension("generator Hessian has the wrong shape".into()));
    }
    match gen.scaling {
        BregmanScaling::Hessian => Ok(-(h * g)),
        BregmanScaling::InverseHessian => h
            .cholesky()
            .map(|c| -c.solve(&g))
            .ok_or_else(|| Error::NotPositiveDefinite("generator Hessian".into())),
    }
}

/// Plant `ẋ = f(x, θ*, u, t)` with `u = U(x, θ, t)` and goal
/// `Q = ½‖x‖²`, so `w(x, θ, t) = xᵀf(x, θ*, U(x, θ, t), t)`.
///
/// With `w` convex in `θ` and `w(x, θ*, t) ≤ 0`, the logged
/// `V = Q + ½θ̃ᵀΓ⁻¹θ̃` is nonincreasing. State layout: `[x, θ]`.
#[derive(Clone)]
pub struct SpeedGradientLoop {
    pub plant: NonlinearPlant,
    pub theta_star: DVector<f64>,
    pub control: ControlLaw,
    pub law: SpeedGradientLaw,
    pub theta0: DVector<f64>,
}

impl fmt::Debug for SpeedGradientLoop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpeedGradientLoop")
            .field("plant", &self.plant)
            .field("theta_star", &self.theta_star)
            .field("law", &self.law)
            .finish_non_exhaustive()
    }
}

impl SpeedGradientLoop {
    pub fn new(
        plant: NonlinearPlant,
        theta_star: DVector<f64>,
        control: ControlLaw,
        gamma: Gain,
        theta0: DVector<f64>,
    ) -> Result<Self> {
        if theta_star.len() != theta0.len() {
            return Err(Error::Dimension(format!(
                "θ* has {} entries, θ0 {}",
                theta_star.len(),
                theta0.len()
            )));
        }
        gamma.validate(theta0.len(), "Gamma")?;
        let (p, ts, u) = (plant.clone(), theta_star.clone(), control.clone());
        let w: GoalRate = Arc::new(move |x, th, t| x.dot(&p.derivative(x, &ts, u(x, th, t), t)));
        Ok(SpeedGradientLoop {
            plant,
            theta_star,
            control,
            law: SpeedGradientLaw::new(w, gamma),
            theta0,
        })
    }

    pub fn with_generator(mut self, hessian: GeneratorHessian, scaling: BregmanScaling) -> Self {
        self.law = self.law.with_generator(hessian, scaling);
        self
    }

    pub fn initial_state(&self, x0: &DVector<f64>) -> DVector<f64> {
        let n = self.plant.n;
        let mut s = DVector::zeros(n + self.theta0.len());
        s.rows_mut(0, n).copy_from(x0);
        s.rows_mut(n, self.theta0.len()).copy_from(&self.theta0);
        s
    }

    /// Convexity sampling around `θ*` (±2 per component plus the initial
    /// estimate) at the initial state.
    pub fn convexity_warning(&self, x0: &DVector<f64>) -> Option<String> {
        let lo = self.theta_star.zip_map(&self.theta0, |a, b| a.min(b) - 2.0);
        let hi = self.theta_star.zip_map(&self.theta0, |a, b| a.max(b) + 2.0);
        self.law.convexity_check(x0, 0.0, &lo, &hi, 200, 0)
    }

    fn split(&self, s: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let n = self.plant.n;
        (s.rows(0, n).into_owned(), s.rows(n, self.theta0.len()).into_owned())
    }

    pub fn lyapunov(&self, x: &DVector<f64>, theta: &DVector<f64>) -> f64 {
        0.5 * x.norm_squared() + 0.5 * self.law.gamma.inverse_quadratic(&(theta - &self.theta_star))
    }
}

impl ContinuousSystem for SpeedGradientLoop {
    fn channel_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (0..self.plant.n).map(|i| format!("x{i}")).collect();
        names.extend((0..self.theta0.len()).map(|i| format!("theta{i}")));
        names.extend(["u", "w"].map(String::from));
        if self.law.generator.is_none() {
            names.push("V".into());
        }
        names
    }

    fn rhs(&self, t: f64, s: &DVector<f64>) -> Result<DVector<f64>> {
        let (x, theta) = self.split(s);
        let u = (self.control)(&x, &theta, t);
        let mut out = DVector::zeros(s.len());
        let n = self.plant.n;
        out.rows_mut(0, n)
            .copy_from(&self.plant.derivative(&x, &self.theta_star, u, t));
        out.rows_mut(n, theta.len())
            .copy_from(&speed_gradient_rhs(&self.law, &x, &theta, t)?);
        Ok(out)
    }

    fn log(&self, t: f64, s: &DVector<f64>) -> Result<Vec<f64>> {
        let (x, theta) = self.split(s);
        let u = (self.control)(&x, &theta, t);
        let mut row: Vec<f64> = x.iter().chain(theta.iter()).copied().collect();
        row.extend([u, (self.law.w)(&x, &theta, t)]);
        if self.law.generator.is_none() {
            row.push(self.lyapunov(&x, &theta));
        }
        Ok(row)
    }
}
