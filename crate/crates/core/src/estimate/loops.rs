use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{observer_rhs, rls_step, sa_step, ObserverState, RlsEstimatorState, SaEstimatorState};
use crate::linalg;
use crate::model::{nonminimal_realize, StateSpaceLTI, TransferFunction};
use crate::sim::{ContinuousSystem, DiscreteSystem, Disturbance, DisturbanceSpec, Signal};

/// SISO plant `W_p` driven by `u(t)` and watched by the adaptive observer.
///
/// State layout: `[x_p, ω̂, θ̂]`. Plant and filters start at rest, so
/// `y = θ*ᵀω̂` holds exactly and `V = θ̃ᵀΓ⁻¹θ̃` is nonincreasing.
#[derive(Debug, Clone)]
pub struct ObserverLoop {
    pub plant: StateSpaceLTI,
    pub observer: ObserverState,
    pub u: Signal,
    truth: DVector<f64>,
    gamma_inv: DMatrix<f64>,
}

impl ObserverLoop {
    pub fn new(wp: &TransferFunction, observer: ObserverState, u: Signal) -> Result<Self> {
        observer.validate()?;
        u.validate()?;
        let (t1, t2) = nonminimal_realize(wp, &observer.lambda, &observer.ell)?;
        let mut truth = DVector::zeros(t1.len() + t2.len());
        truth.rows_mut(0, t1.len()).copy_from(&t1);
        truth.rows_mut(t1.len(), t2.len()).copy_from(&t2);
        let gamma_inv = observer
            .gamma
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::NotPositiveDefinite("Γ is singular".into()))?;
        Ok(ObserverLoop {
            plant: wp.realize()?,
            observer,
            u,
            truth,
            gamma_inv,
        })
    }

    /// `θ* = [θ1*; θ2*]` of the plant on the observer's filter pair.
    pub fn truth(&self) -> &DVector<f64> {
        &self.truth
    }

    pub fn initial_state(&self) -> DVector<f64> {
        let n = self.plant.n();
        let m = self.observer.omega_hat.len();
        let mut s = DVector::zeros(n + 2 * m);
        s.rows_mut(n, m).copy_from(&self.observer.omega_hat);
        s.rows_mut(n + m, m).copy_from(&self.observer.theta_hat);
        s
    }

    fn unpack(&self, s: &DVector<f64>) -> (DVector<f64>, ObserverState) {
        let n = self.plant.n();
        let m = self.observer.omega_hat.len();
        let mut obs = self.observer.clone();
        obs.omega_hat = s.rows(n, m).into_owned();
        obs.theta_hat = s.rows(n + m, m).into_owned();
        (s.rows(0, n).into_owned(), obs)
    }
}

impl ContinuousSystem for ObserverLoop {
    fn channel_names(&self) -> Vec<String> {
        let m = self.observer.omega_hat.len();
        let mut names: Vec<String> = ["y", "y_hat", "e", "u"].map(String::from).to_vec();
        names.extend((0..m).map(|i| format!("theta{i}")));
        names.extend((0..m).map(|i| format!("omega{i}")));
        names.extend(["theta_err", "V"].map(String::from));
        names
    }

    fn rhs(&self, t: f64, s: &DVector<f64>) -> Result<DVector<f64>> {
        let (x, obs) = self.unpack(s);
        let u = self.u.eval(t);
        let y = self.plant.output(&x)[0];
        let d = observer_rhs(&obs, u, y)?;
        let n = self.plant.n();
        let m = obs.omega_hat.len();
        let mut out = DVector::zeros(s.len());
        out.rows_mut(0, n).copy_from(&(&self.plant.a * &x + self.plant.b.column(0) * u));
        out.rows_mut(n, m).copy_from(&d.omega_hat);
        out.rows_mut(n + m, m).copy_from(&d.theta_hat);
        Ok(out)
    }

    fn log(&self, t: f64, s: &DVector<f64>) -> Result<Vec<f64>> {
        let (x, obs) = self.unpack(s);
        let y = self.plant.output(&x)[0];
        let y_hat = obs.y_hat();
        let err = &obs.theta_hat - &self.truth;
        let mut row = vec![y, y_hat, y_hat - y, self.u.eval(t)];
        row.extend(obs.theta_hat.iter());
        row.extend(obs.omega_hat.iter());
        row.extend([err.norm(), err.dot(&(&self.gamma_inv * &err))]);
        Ok(row)
    }
}

/// Regressor sequence for estimator-only runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegressorSource {
    /// `φ_k[i] = signals[i](k·dt)`.
    Signals { signals: Vec<Signal>, dt: f64 },
    /// Independent uniform draws on `[-1, 1]`.
    Uniform { dim: usize, seed: u64 },
}

impl RegressorSource {
    pub fn dim(&self) -> usize {
        match self {
            RegressorSource::Signals { signals, .. } => signals.len(),
            RegressorSource::Uniform { dim, .. } => *dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RegressorSource::Signals { signals, dt } => {
                if signals.is_empty() {
                    return Err(Error::InvalidParameter("regressor needs at least one signal".into()));
                }
                if !(*dt > 0.0) || !dt.is_finite() {
                    return Err(Error::InvalidParameter(format!("regressor dt must be positive, got {dt}")));
                }
                signals.iter().try_for_each(Signal::validate)
            }
            RegressorSource::Uniform { dim, .. } if *dim == 0 => {
                Err(Error::InvalidParameter("regressor dimension must be positive".into()))
            }
            RegressorSource::Uniform { .. } => Ok(()),
        }
    }
}

/// Discrete estimator driven by [`RegressionLoop`].
#[derive(Debug, Clone, PartialEq)]
pub enum Estimator {
    Sa(SaEstimatorState),
    Rls(RlsEstimatorState),
}

impl Estimator {
    pub fn theta(&self) -> &DVector<f64> {
        match self {
            Estimator::Sa(s) => &s.theta,
            Estimator::Rls(s) => &s.theta,
        }
    }

    fn step(&self, phi: &DVector<f64>, y: f64) -> Result<Estimator> {
        Ok(match self {
            Estimator::Sa(s) => Estimator::Sa(sa_step(s, phi, y)?),
            Estimator::Rls(s) => Estimator::Rls(rls_step(s, phi, y)?),
        })
    }
}

/// Linear regression `y_k = θ*ᵀφ_{k−1} + v_k` identified online.
#[derive(Debug, Clone)]
pub struct RegressionLoop {
    pub truth: DVector<f64>,
    pub estimator: Estimator,
    source: RegressorSource,
    rng: ChaCha8Rng,
    noise: Disturbance,
    phi_prev: DVector<f64>,
}

impl RegressionLoop {
    pub fn new(truth: DVector<f64>, estimator: Estimator, source: RegressorSource, noise: &DisturbanceSpec) -> Result<Self> {
        source.validate()?;
        let n = truth.len();
        if source.dim() != n || estimator.theta().len() != n {
            return Err(Error::Dimension(format!(
                "θ* has {n} entries, regressor {}, estimate {}",
                source.dim(),
                estimator.theta().len()
            )));
        }
        let seed = match &source {
            RegressorSource::Uniform { seed, .. } => *seed,
            RegressorSource::Signals { .. } => 0,
        };
        let mut lp = RegressionLoop {
            truth,
            estimator,
            source,
            rng: ChaCha8Rng::seed_from_u64(seed),
            noise: Disturbance::new(noise)?,
            phi_prev: DVector::zeros(n),
        };
        lp.phi_prev = lp.regressor(0);
        Ok(lp)
    }

    fn regressor(&mut self, k: usize) -> DVector<f64> {
        match &self.source {
            RegressorSource::Signals { signals, dt } => {
                DVector::from_iterator(signals.len(), signals.iter().map(|s| s.eval(k as f64 * dt)))
            }
            RegressorSource::Uniform { dim, .. } => {
                DVector::from_iterator(*dim, (0..*dim).map(|_| self.rng.random_range(-1.0..=1.0)))
            }
        }
    }
}

impl DiscreteSystem for RegressionLoop {
    fn channel_names(&self) -> Vec<String> {
        let n = self.truth.len();
        let mut names: Vec<String> = ["y", "pred_err"].map(String::from).to_vec();
        names.extend((0..n).map(|i| format!("theta{i}")));
        names.extend((0..n).map(|i| format!("phi{i}")));
        names.push("theta_err".into());
        if matches!(self.estimator, Estimator::Rls(_)) {
            names.push("gamma_lmax".into());
        }
        names
    }

    /// Sample `k ≥ 1` uses `φ_{k−1}`; row 0 logs the initial estimate.
    fn step(&mut self, k: usize) -> Result<Vec<f64>> {
        let phi = self.phi_prev.clone();
        let y = self.truth.dot(&phi) + self.noise.sample(k as f64);
        let pred_err = phi.dot(self.estimator.theta()) - y;
        if k > 0 {
            self.estimator = self.estimator.step(&phi, y)?;
        }
        self.phi_prev = self.regressor(k + 1);
        let theta = self.estimator.theta();
        let mut row = vec![y, pred_err];
        row.extend(theta.iter());
        row.extend(phi.iter());
        row.push((theta - &self.truth).norm());
        if let Estimator::Rls(s) = &self.estimator {
            row.push(linalg::max_eigenvalue(&s.gamma));
        }
        Ok(row)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::simulate_dt;

    #[test]
    fn rls_identifies_in_few_steps() {
        let truth = DVector::from_vec(vec![1.0, -2.0]);
        let est = Estimator::Rls(RlsEstimatorState::new(DVector::zeros(2), DMatrix::identity(2, 2) * 1e8).unwrap());
        let src = RegressorSource::Uniform { dim: 2, seed: 3 };
        let mut lp = RegressionLoop::new(truth, est, src, &DisturbanceSpec::None).unwrap();
        let run = simulate_dt(&mut lp, 21, 1e9).unwrap();
        let err = run.trajectory.channel("theta_err").unwrap();
        assert!(*err.last().unwrap() < 1e-6);
    }

    #[test]
    fn dimension_mismatch() {
        let est = Estimator::Sa(SaEstimatorState::new(DVector::zeros(2), 1.0).unwrap());
        let src = RegressorSource::Uniform { dim: 3, seed: 0 };
        assert!(RegressionLoop::new(DVector::zeros(2), est, src, &DisturbanceSpec::None).is_err());
    }
}
