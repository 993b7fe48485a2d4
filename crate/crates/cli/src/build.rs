//! Turns a validated config into a runnable closed loop.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use adaptctl::adapt_ct::{
    AugmentedErrorLoop, BregmanScaling, ControlLaw, GeneratorHessian, GoalGradient, HotController, HotLoop,
    MinMaxControllerState, MinMaxLoop, MracLoop, MracState, OutputFbState, PassificationLoop, SaturatedMracLoop,
    SaturationLimits, SpeedGradientLoop, SprOutputLoop,
};
use adaptctl::adapt_dt::{StrLoop, StrState};
use adaptctl::estimate::{Estimator, Gain, ObserverLoop, ObserverState, RegressionLoop, RlsEstimatorState, SaEstimatorState};
use adaptctl::linalg::matrix_from_rows;
use adaptctl::model::{ArmaxPlant, Convexity, NonlinearPlant, ParameterSet, ReferenceModel, StateSpaceLTI};
use adaptctl::sim::{ContinuousSystem, DiscreteSystem, DisturbanceSpec, SimOptions};
use adaptctl::{Error, Result};

use crate::config::{
    burst_scenario, GainSpec, Generator, LtiBlock, MracBlock, ReferenceBlock, Scenario, ScenarioConfig,
};

pub enum System {
    Continuous {
        sys: Box<dyn ContinuousSystem + Send>,
        x0: DVector<f64>,
        opts: SimOptions,
    },
    Discrete {
        sys: Box<dyn DiscreteSystem + Send>,
        steps: usize,
        limit: f64,
    },
}

/// Runnable loop plus what is known about it before running.
pub struct Assembled {
    pub system: System,
    /// Ideal parameters by channel name, when the loop can compute them.
    pub truth: Vec<(String, f64)>,
    pub warnings: Vec<String>,
}

pub fn gain(spec: &GainSpec) -> Result<Gain> {
    Ok(match spec {
        GainSpec::Scalar(g) => Gain::Scalar(*g),
        GainSpec::Matrix(rows) => Gain::Matrix(matrix_from_rows(rows)?),
    })
}

fn gain_matrix(spec: &GainSpec, dim: usize) -> Result<DMatrix<f64>> {
    Ok(match spec {
        GainSpec::Scalar(g) => DMatrix::identity(dim, dim) * *g,
        GainSpec::Matrix(rows) => matrix_from_rows(rows)?,
    })
}

fn vector_or_zeros(v: &Option<Vec<f64>>, n: usize) -> DVector<f64> {
    v.as_ref().map_or_else(|| DVector::zeros(n), |v| DVector::from_column_slice(v))
}

pub fn lti(block: &LtiBlock) -> Result<StateSpaceLTI> {
    let a = matrix_from_rows(&block.a)?;
    let b = DVector::from_column_slice(&block.b);
    match &block.c {
        None => StateSpaceLTI::single_input(a, b),
        Some(c) => {
            let n = b.len();
            StateSpaceLTI::new(a, DMatrix::from_column_slice(n, 1, b.as_slice()), matrix_from_rows(c)?)
        }
    }
}

pub fn reference(block: &ReferenceBlock) -> Result<ReferenceModel> {
    ReferenceModel::new(matrix_from_rows(&block.a_m)?, DVector::from_column_slice(&block.b_m))
}

pub fn mrac_law(block: &MracBlock, reference: &ReferenceModel) -> Result<MracState> {
    let n = reference.n();
    let q = match &block.q {
        Some(q) => matrix_from_rows(q)?,
        None => DMatrix::identity(n, n),
    };
    MracState::new(
        vector_or_zeros(&block.theta0, n),
        block.k0,
        gain(&block.gamma)?,
        block.gamma_k,
        block.sign_k,
        reference,
        &q,
    )
}

fn noise(cfg: &ScenarioConfig) -> DisturbanceSpec {
    match cfg.sim.seed {
        Some(seed) => cfg.disturbance.with_seed(seed),
        None => cfg.disturbance.clone(),
    }
}

fn initial(v: &Option<Vec<f64>>, n: usize, name: &str) -> Result<DVector<f64>> {
    let x = vector_or_zeros(v, n);
    if x.len() != n {
        return Err(Error::Dimension(format!("initial.{name} needs {n} entries, got {}", x.len())));
    }
    Ok(x)
}

fn sim_options(cfg: &ScenarioConfig) -> Result<SimOptions> {
    let step = cfg
        .sim
        .step
        .ok_or_else(|| Error::InvalidParameter("sim.step is required for continuous-time kinds".into()))?;
    let opts = SimOptions {
        horizon: cfg.sim.horizon,
        step,
        divergence_limit: cfg.sim.divergence_limit,
        decimate: cfg.sim.decimate,
    };
    opts.validate()?;
    Ok(opts)
}

fn named(prefix: &str, v: &DVector<f64>) -> Vec<(String, f64)> {
    v.iter().enumerate().map(|(i, x)| (format!("{prefix}{i}"), *x)).collect()
}

fn continuous(cfg: &ScenarioConfig, sys: impl ContinuousSystem + Send + 'static, x0: DVector<f64>) -> Result<System> {
    Ok(System::Continuous {
        sys: Box::new(sys),
        x0,
        opts: sim_options(cfg)?,
    })
}

fn discrete(cfg: &ScenarioConfig, sys: impl DiscreteSystem + Send + 'static) -> System {
    System::Discrete {
        sys: Box::new(sys),
        steps: cfg.sim.horizon as usize,
        limit: cfg.sim.divergence_limit,
    }
}

pub fn assemble(cfg: &ScenarioConfig) -> Result<Assembled> {
    let mut truth = Vec::new();
    let mut warnings = Vec::new();
    let system = match &cfg.scenario {
        Scenario::MracState {
            plant,
            reference: rb,
            controller,
            input,
        } => {
            let rm = reference(rb)?;
            let law = mrac_law(controller, &rm)?;
            let mut lp = MracLoop::new(lti(plant)?, rm, law, input.clone(), &noise(cfg), None)?
                .with_robust(controller.robust)?
                .with_entry(controller.entry);
            if controller.freeze_k {
                lp = lp.with_frozen_feedforward();
            }
            if let Some((t, k)) = lp.truth() {
                truth.extend(named("theta", t));
                truth.push(("k".into(), k));
            }
            let n = lp.n();
            let x0 = lp.initial_state(&initial(&cfg.initial.x0, n, "x0")?, &initial(&cfg.initial.xm0, n, "xm0")?);
            continuous(cfg, lp, x0)?
        }
        Scenario::SaturatedMrac {
            plant,
            reference: rb,
            controller,
            saturation,
            input,
        } => {
            let rm = reference(rb)?;
            let law = mrac_law(controller, &rm)?;
            let limits = SaturationLimits::scalar(saturation.u_max, saturation.u_r_max, saturation.tau)?;
            let lp = SaturatedMracLoop::new(lti(plant)?, rm, law, limits, saturation.gamma_s, input.clone())?;
            if let Some((t, k)) = lp.truth() {
                truth.extend(named("theta", t));
                truth.push(("k".into(), k));
            }
            let n = lp.n();
            let up0 = cfg.initial.up0.clamp(-saturation.u_max, saturation.u_max);
            let x0 = lp.initial_state(
                &initial(&cfg.initial.x0, n, "x0")?,
                &initial(&cfg.initial.xm0, n, "xm0")?,
                up0,
            );
            continuous(cfg, lp, x0)?
        }
        Scenario::MracOutputSpr {
            plant,
            reference,
            controller,
            input,
        } => {
            let lambda = matrix_from_rows(&controller.lambda)?;
            let n = lambda.nrows();
            let mut state = OutputFbState::new(
                &reference.transfer()?,
                lambda,
                DVector::from_column_slice(&controller.ell),
                vector_or_zeros(&controller.theta0, 2 * n),
                controller.k0,
            )?;
            state.gamma = controller.gamma;
            let lp = SprOutputLoop::new(&plant.transfer()?, &reference.transfer()?, state, controller.sign_k, input.clone())?;
            if let Some(m) = lp.truth() {
                truth.extend(named("theta", &m.theta()));
                truth.push(("k".into(), m.k));
            }
            let x0 = lp.initial_state();
            continuous(cfg, lp, x0)?
        }
        Scenario::AugmentedError {
            plant,
            reference,
            controller,
        } => {
            let n = plant.theta_star.len();
            let theta_star = DVector::from_column_slice(&plant.theta_star);
            let mut lp = AugmentedErrorLoop::new(
                &reference.transfer()?,
                plant.omega.clone(),
                theta_star.clone(),
                vector_or_zeros(&controller.theta0, n),
                controller.gamma,
            )?;
            if let Some(m) = controller.normalizer {
                lp = lp.with_normalizer(m)?;
            }
            if controller.frozen {
                lp = lp.frozen();
            }
            truth.extend(named("theta", &theta_star));
            let x0 = lp.initial_state();
            continuous(cfg, lp, x0)?
        }
        Scenario::HotOutput {
            plant,
            reference,
            controller,
            input,
        } => {
            let wp = plant.transfer()?;
            let lambda = matrix_from_rows(&controller.lambda)?;
            let dim = lambda.nrows() + 1;
            let mut hc = HotController::new(
                wp.relative_degree(),
                controller.a,
                lambda,
                DVector::from_column_slice(&controller.ell),
                vector_or_zeros(&controller.k0, dim),
                controller.mu,
            )?;
            hc.tuner = hc.tuner.clone().with_gamma(controller.gamma)?;
            let lp = HotLoop::new(&wp, &reference.transfer()?, hc, input.clone())?;
            let x0 = lp.initial_state();
            continuous(cfg, lp, x0)?
        }
        Scenario::Passification { plant, controller } => {
            let ss = lti(plant)?;
            let l = ss.outputs();
            let lp = PassificationLoop::new(
                ss,
                DVector::from_column_slice(&controller.g),
                gain(&controller.gamma)?,
                vector_or_zeros(&controller.theta0, l),
            )?;
            truth.extend(named("theta", &lp.certificate.theta));
            let x0 = lp.initial_state(&initial(&cfg.initial.x0, lp.plant.n(), "x0")?);
            continuous(cfg, lp, x0)?
        }
        Scenario::SpeedGradient { plant, controller } => {
            let (fam, a, k) = (plant.family, plant.a, controller.k);
            let f = Arc::new(move |x: &DVector<f64>, th: &DVector<f64>, u: f64, _t: f64| {
                DVector::from_element(1, a * x[0] + th[0] * fam.phi(x[0]) + u)
            });
            let np = NonlinearPlant::new(
                1,
                f,
                ParameterSet::Box {
                    lo: vec![f64::MIN / 4.0],
                    hi: vec![f64::MAX / 4.0],
                },
                vec![Convexity::Linear],
            )?;
            let control: ControlLaw = Arc::new(move |x, th, _| -k * x[0] - th[0] * fam.phi(x[0]));
            if k < a {
                warnings.push(format!("k = {k} < a = {a}: w(x, θ*) is not negative and V need not decrease"));
            }
            let theta_star = DVector::from_element(1, plant.theta_star);
            let mut lp = SpeedGradientLoop::new(
                np,
                theta_star.clone(),
                control,
                Gain::Scalar(controller.gamma),
                DVector::from_element(1, controller.theta0),
            )?;
            let grad: GoalGradient = Arc::new(move |x, _, _| DVector::from_element(1, -x[0] * fam.phi(x[0])));
            lp.law = lp.law.clone().with_gradient(grad);
            if let Some(b) = &controller.bregman {
                let hessian: GeneratorHessian = match b.generator {
                    Generator::Quadratic => Arc::new(|th: &DVector<f64>| DMatrix::identity(th.len(), th.len())),
                    Generator::Entropy => {
                        if controller.theta0 <= 0.0 {
                            return Err(Error::InvalidParameter("entropy generator needs θ0 > 0".into()));
                        }
                        Arc::new(|th: &DVector<f64>| DMatrix::from_diagonal(&th.map(|v| 1.0 / v.max(1e-12))))
                    }
                };
                lp = lp.with_generator(hessian, b.scaling);
                if b.scaling == BregmanScaling::Hessian && b.generator == Generator::Entropy {
                    warnings.push("entropy generator with Hessian scaling slows adaptation as θ grows".into());
                }
            }
            truth.extend(named("theta", &theta_star));
            let x0v = initial(&cfg.initial.x0, 1, "x0")?;
            if let Some(w) = lp.convexity_warning(&x0v) {
                warnings.push(w);
            }
            let x0 = lp.initial_state(&x0v);
            continuous(cfg, lp, x0)?
        }
        Scenario::MinmaxNlp {
            plant,
            reference,
            controller,
            input,
        } => {
            let nl = plant.family.nonlinearity(plant.theta_lo, plant.theta_hi)?;
            let theta0 = controller.theta0.unwrap_or(0.5 * (plant.theta_lo + plant.theta_hi));
            let mut state = MinMaxControllerState::new(
                DVector::from_element(1, theta0),
                DVector::from_element(1, controller.alpha0),
                controller.epsilon,
                Gain::Scalar(controller.gamma_alpha),
                Gain::Scalar(controller.gamma_theta),
            )?;
            state.s_exponent = controller.s_exponent;
            let lp = MinMaxLoop::new(
                plant.a_p,
                reference.a_m,
                DVector::from_element(1, plant.theta_star),
                nl,
                state,
                input.clone(),
            )?;
            truth.push(("alpha".into(), lp.alpha_star()));
            truth.push(("theta0".into(), plant.theta_star));
            let x0 = initial(&cfg.initial.x0, 1, "x0")?[0];
            let xm0 = initial(&cfg.initial.xm0, 1, "xm0")?[0];
            let s0 = lp.initial_state(x0, xm0);
            continuous(cfg, lp, s0)?
        }
        Scenario::Str {
            plant,
            controller,
            input,
        } => {
            let mut ap = ArmaxPlant::new(plant.a.clone(), plant.b.clone(), plant.d)?;
            ap.c = plant.c.clone();
            ap.validate()?;
            let dim = ap.na() + ap.b.len() - 1 + ap.d;
            let theta0 = controller.theta0.as_ref().map_or_else(
                || {
                    let mut t = DVector::zeros(dim);
                    t[dim - 1] = controller.beta0_sign;
                    t
                },
                |v| DVector::from_column_slice(v),
            );
            let state = StrState::for_plant(&ap, theta0, controller.gamma, controller.c)?
                .with_beta0_prior(controller.beta0_sign, controller.beta0_min)?;
            if let Ok(t) = adaptctl::adapt_dt::str_truth(&ap) {
                truth.extend(named("theta_c", &t));
            }
            if !ap.is_minimum_phase() {
                warnings.push(format!("B has zeros outside the unit circle: {:?}", ap.b_zeros()));
            }
            let lp = StrLoop::new(ap, state, input.clone(), &noise(cfg), &DisturbanceSpec::None)?;
            discrete(cfg, lp)
        }
        Scenario::Bursting { plant, .. } => {
            let mut scenario = burst_scenario(cfg).expect("bursting config");
            scenario.noise = noise(cfg);
            truth.push(("theta_c0".into(), plant.a / plant.b));
            truth.push(("theta_c1".into(), 1.0 / plant.b));
            discrete(cfg, scenario.build()?)
        }
        Scenario::Observer {
            plant,
            controller,
            input,
        } => {
            let lambda = matrix_from_rows(&controller.lambda)?;
            let n = lambda.nrows();
            let obs = ObserverState::new(
                lambda,
                DVector::from_column_slice(&controller.ell),
                gain_matrix(&controller.gamma, 2 * n)?,
                vector_or_zeros(&controller.theta0, 2 * n),
            )?;
            let lp = ObserverLoop::new(&plant.transfer()?, obs, input.clone())?;
            truth.extend(named("theta", lp.truth()));
            let x0 = lp.initial_state();
            continuous(cfg, lp, x0)?
        }
        Scenario::EstimatorOnly { plant, controller } => {
            let n = plant.theta_star.len();
            let theta0 = vector_or_zeros(&controller.theta0, n);
            let est = match controller.estimator {
                crate::config::EstimatorKind::Sa => Estimator::Sa(
                    SaEstimatorState::new(theta0, controller.gamma)?
                        .with_normalizer(controller.normalizer)
                        .with_step_size(controller.step_size)?,
                ),
                crate::config::EstimatorKind::Rls => {
                    Estimator::Rls(RlsEstimatorState::new(theta0, DMatrix::identity(n, n) * controller.gamma)?)
                }
            };
            let theta_star = DVector::from_column_slice(&plant.theta_star);
            truth.extend(named("theta", &theta_star));
            let lp = RegressionLoop::new(theta_star, est, plant.regressor.clone(), &noise(cfg))?;
            discrete(cfg, lp)
        }
    };
    Ok(Assembled {
        system,
        truth,
        warnings,
    })
}
