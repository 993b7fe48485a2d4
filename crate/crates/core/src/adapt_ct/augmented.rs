use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::{StateSpaceLTI, TransferFunction};
use crate::sim::{ContinuousSystem, Signal};

/// Filter states for the augmented error: one copy of the `W_m` realization
/// per regressor component (`ζ = W_m[ω]`) and one for `W_m[θᵀω]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedFilters {
    pub wm: StateSpaceLTI,
    pub zeta: Vec<DVector<f64>>,
    pub eta: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedDerivatives {
    pub epsilon1: f64,
    pub e2: f64,
    pub theta: DVector<f64>,
    /// Filter output `ζ = W_m[ω]`.
    pub zeta: DVector<f64>,
    pub zeta_states: Vec<DVector<f64>>,
    pub eta_state: DVector<f64>,
}

impl AugmentedFilters {
    /// Filters at rest for a regressor of dimension `dim`.
    pub fn new(wm: &TransferFunction, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Dimension("regressor must be nonempty".into()));
        }
        let wm = wm.realize()?;
        let n = wm.n();
        Ok(AugmentedFilters {
            zeta: vec![DVector::zeros(n); dim],
            eta: DVector::zeros(n),
            wm,
        })
    }

    pub fn dim(&self) -> usize {
        self.zeta.len()
    }

    pub fn order(&self) -> usize {
        self.wm.n()
    }

    pub fn zeta_output(&self) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.zeta.iter().map(|z| (&self.wm.c * z)[0]))
    }

    fn filter(&self, x: &DVector<f64>, input: f64) -> DVector<f64> {
        &self.wm.a * x + self.wm.b.column(0) * input
    }
}

/// `m = 1/(1 + ζᵀζ)`.
pub fn default_normalizer(zeta: &DVector<f64>) -> f64 {
    1.0 / (1.0 + zeta.norm_squared())
}

/// `e2 = θᵀζ − W_m[θᵀω]`, `ε1 = e1 + e2`, `θ̇ = −m·ε1·ζ`.
pub fn augmented_error_rhs(
    theta: &DVector<f64>,
    omega: &DVector<f64>,
    filters: &AugmentedFilters,
    e1: f64,
    m: f64,
) -> Result<AugmentedDerivatives> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::InvalidParameter(format!("normalizer must be positive, got {m}")));
    }
    let q = filters.dim();
    if theta.len() != q || omega.len() != q || filters.zeta.iter().any(|z| z.len() != filters.order()) {
        return Err(Error::Dimension(format!(
            "θ has {}, ω {}, filters {q} entries",
            theta.len(),
            omega.len()
        )));
    }
    let zeta = filters.zeta_output();
    let eta = (&filters.wm.c * &filters.eta)[0];
    let e2 = theta.dot(&zeta) - eta;
    let epsilon1 = e1 + e2;
    Ok(AugmentedDerivatives {
        epsilon1,
        e2,
        theta: &zeta * (-m * epsilon1),
        zeta_states: filters
            .zeta
            .iter()
            .zip(omega.iter())
            .map(|(z, w)| filters.filter(z, *w))
            .collect(),
        eta_state: filters.filter(&filters.eta, theta.dot(omega)),
        zeta,
    })
}

/// Error-model loop `e1 = W_m[(θ − θ*)ᵀω]` with a prescribed regressor.
///
/// `W_m` need not be SPR; this is the setting the augmented error exists for.
/// State layout: `[ξ, ζ states, η, θ]` where `e1 = c_mᵀξ`.
#[derive(Debug, Clone)]
pub struct AugmentedErrorLoop {
    pub filters: AugmentedFilters,
    pub omega: Vec<Signal>,
    pub theta_star: DVector<f64>,
    pub theta0: DVector<f64>,
    pub gamma: f64,
    /// Fixed normalizer; `None` selects [`default_normalizer`].
    pub normalizer: Option<f64>,
    /// Holds `θ` at `θ0`.
    pub frozen: bool,
}

impl AugmentedErrorLoop {
    pub fn new(wm: &TransferFunction, omega: Vec<Signal>, theta_star: DVector<f64>, theta0: DVector<f64>, gamma: f64) -> Result<Self> {
        for s in &omega {
            s.validate()?;
        }
        if theta_star.len() != omega.len() || theta0.len() != omega.len() {
            return Err(Error::Dimension(format!(
                "{} regressor signals but θ* has {} and θ0 {} entries",
                omega.len(),
                theta_star.len(),
                theta0.len()
            )));
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
        }
        Ok(AugmentedErrorLoop {
            filters: AugmentedFilters::new(wm, omega.len())?,
            omega,
            theta_star,
            theta0,
            gamma,
            normalizer: None,
            frozen: false,
        })
    }

    pub fn with_normalizer(mut self, m: f64) -> Result<Self> {
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::InvalidParameter(format!("normalizer must be positive, got {m}")));
        }
        self.normalizer = Some(m);
        Ok(self)
    }

    pub fn frozen(mut self) -> Self {
        self.frozen = true;
        self
    }

    fn dims(&self) -> (usize, usize) {
        (self.filters.order(), self.filters.dim())
    }

    pub fn initial_state(&self) -> DVector<f64> {
        let (n, q) = self.dims();
        let mut s = DVector::zeros(n * (q + 2) + q);
        s.rows_mut(n * (q + 2), q).copy_from(&self.theta0);
        s
    }

    fn evaluate(&self, t: f64, s: &DVector<f64>) -> Result<Eval> {
        let (n, q) = self.dims();
        let xi = s.rows(0, n).into_owned();
        let mut f = self.filters.clone();
        for i in 0..q {
            f.zeta[i] = s.rows(n * (1 + i), n).into_owned();
        }
        f.eta = s.rows(n * (1 + q), n).into_owned();
        let theta = s.rows(n * (q + 2), q).into_owned();
        let omega = DVector::from_iterator(q, self.omega.iter().map(|w| w.eval(t)));
        let e1 = (&f.wm.c * &xi)[0];
        let m = self.normalizer.unwrap_or_else(|| default_normalizer(&f.zeta_output()));
        let d = augmented_error_rhs(&theta, &omega, &f, e1, m)?;
        Ok(Eval {
            xi,
            theta,
            omega,
            e1,
            m,
            d,
        })
    }
}

struct Eval {
    xi: DVector<f64>,
    theta: DVector<f64>,
    omega: DVector<f64>,
    e1: f64,
    m: f64,
    d: AugmentedDerivatives,
}

impl ContinuousSystem for AugmentedErrorLoop {
    fn channel_names(&self) -> Vec<String> {
        let q = self.filters.dim();
        let mut names: Vec<String> = ["e1", "e2", "eps1", "m"].map(String::from).to_vec();
        names.extend((0..q).map(|i| format!("theta{i}")));
        names.extend((0..q).map(|i| format!("zeta{i}")));
        names.extend((0..q).map(|i| format!("omega{i}")));
        names
    }

    fn rhs(&self, t: f64, s: &DVector<f64>) -> Result<DVector<f64>> {
        let (n, q) = self.dims();
        let ev = self.evaluate(t, s)?;
        let mut out = DVector::zeros(s.len());
        let drive = (&ev.theta - &self.theta_star).dot(&ev.omega);
        out.rows_mut(0, n).copy_from(&self.filters.filter(&ev.xi, drive));
        for (i, z) in ev.d.zeta_states.iter().enumerate() {
            out.rows_mut(n * (1 + i), n).copy_from(z);
        }
        out.rows_mut(n * (1 + q), n).copy_from(&ev.d.eta_state);
        if !self.frozen {
            out.rows_mut(n * (q + 2), q).copy_from(&(&ev.d.theta * self.gamma));
        }
        Ok(out)
    }

    fn log(&self, t: f64, s: &DVector<f64>) -> Result<Vec<f64>> {
        let ev = self.evaluate(t, s)?;
        let mut row = vec![ev.e1, ev.d.e2, ev.d.epsilon1, ev.m];
        row.extend(ev.theta.iter());
        row.extend(ev.d.zeta.iter());
        row.extend(ev.omega.iter());
        Ok(row)
    }
}
