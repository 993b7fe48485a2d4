//! Certificates requested in a config's analysis block.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use adaptctl::adapt_dt::{closed_loop_gain, StabilityClass};
use adaptctl::analysis::{
    hyperminimum_phase_check, kyl_solve, lyapunov_solve, passification_feasible, pe_epsilon0, robustness_margin,
    spr_check, LyapunovCertificate,
};
use adaptctl::model::{ArmaxPlant, Polynomial, TransferFunction};
use adaptctl::sim::Trajectory;
use adaptctl::{Error, Result};

use crate::build::{lti, reference};
use crate::config::{Certificate, MracBlock, Scenario, ScenarioConfig, TfBlock};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateResult {
    pub name: String,
    pub passed: bool,
    pub values: BTreeMap<String, f64>,
    pub detail: String,
}

impl CertificateResult {
    fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        CertificateResult {
            name: name.into(),
            passed,
            values: BTreeMap::new(),
            detail: detail.into(),
        }
    }

    fn with(mut self, key: &str, v: f64) -> Self {
        self.values.insert(key.into(), v);
        self
    }
}

/// Transfer function the SPR and KYL certificates refer to.
fn spr_target(cfg: &ScenarioConfig) -> Result<TransferFunction> {
    match &cfg.scenario {
        Scenario::MracOutputSpr { reference, .. } | Scenario::AugmentedError { reference, .. } => reference.transfer(),
        Scenario::HotOutput {
            plant,
            reference,
            controller,
            ..
        } => {
            let w = reference.transfer()?;
            let p = plant.transfer()?.relative_degree().saturating_sub(1);
            let filter = Polynomial::from_real_roots(&vec![-controller.a; p]);
            TransferFunction::new(&w.num * &filter, w.den.clone())
        }
        _ => Err(Error::Unsupported(format!(
            "kind `{}` has no reference transfer function",
            cfg.scenario.kind()
        ))),
    }
}

fn plant_tf(cfg: &ScenarioConfig) -> Result<&TfBlock> {
    match &cfg.scenario {
        Scenario::MracOutputSpr { plant, .. } | Scenario::HotOutput { plant, .. } | Scenario::Observer { plant, .. } => {
            Ok(plant)
        }
        _ => Err(Error::Unsupported(format!("kind `{}` has no plant transfer function", cfg.scenario.kind()))),
    }
}

fn lyapunov(cfg: &ScenarioConfig) -> Result<LyapunovCertificate> {
    let (am, q) = match &cfg.scenario {
        Scenario::MracState {
            reference: rb,
            controller,
            ..
        }
        | Scenario::SaturatedMrac {
            reference: rb,
            controller,
            ..
        } => {
            let rm = reference(rb)?;
            let n = rm.n();
            (rm.am, q_of(controller, n)?)
        }
        Scenario::MinmaxNlp { reference, .. } => (DMatrix::from_element(1, 1, reference.a_m), DMatrix::identity(1, 1)),
        _ => {
            return Err(Error::Unsupported(format!(
                "kind `{}` has no state-space reference model",
                cfg.scenario.kind()
            )))
        }
    };
    lyapunov_solve(&am, &q)
}

fn q_of(c: &MracBlock, n: usize) -> Result<DMatrix<f64>> {
    match &c.q {
        Some(q) => adaptctl::linalg::matrix_from_rows(q),
        None => Ok(DMatrix::identity(n, n)),
    }
}

fn armax(cfg: &ScenarioConfig) -> Result<ArmaxPlant> {
    match &cfg.scenario {
        Scenario::Str { plant, .. } => {
            let mut p = ArmaxPlant::new(plant.a.clone(), plant.b.clone(), plant.d)?;
            p.c = plant.c.clone();
            Ok(p)
        }
        Scenario::Bursting { plant, .. } => ArmaxPlant::new(vec![plant.a], vec![plant.b], 1),
        _ => Err(Error::Unsupported(format!("kind `{}` has no sampled plant", cfg.scenario.kind()))),
    }
}

fn kyl(w: &TransferFunction) -> Result<DMatrix<f64>> {
    let ss = w.realize()?;
    let b = ss.b.column(0).into_owned();
    let c = ss.c.row(0).transpose();
    kyl_solve(&ss.a, &b, &c)
}

/// Static check run during validation: the certificate must apply to the
/// kind and, where it does not depend on the run, be feasible.
pub fn applicable(cert: &Certificate, cfg: &ScenarioConfig) -> Result<()> {
    match cert {
        Certificate::Lyapunov => lyapunov(cfg).map(|_| ()),
        Certificate::Spr => {
            let w = spr_target(cfg)?;
            if spr_check(&w)?.is_spr {
                Ok(())
            } else {
                Err(Error::Infeasible(format!(
                    "transfer function of relative degree {} is not SPR",
                    w.relative_degree()
                )))
            }
        }
        Certificate::Kyl => kyl(&spr_target(cfg)?).map(|_| ()),
        Certificate::HyperminimumPhase => plant_tf(cfg)?.transfer().map(|_| ()),
        Certificate::Passification => match &cfg.scenario {
            Scenario::Passification { .. } => Ok(()),
            _ => Err(Error::Unsupported("passification applies to the passification kind".into())),
        },
        Certificate::MinimumPhase => armax(cfg).map(|_| ()),
        Certificate::ClosedLoopGain => {
            let p = armax(cfg)?;
            if p.na() == 1 && p.b.len() == 1 && p.d == 1 {
                Ok(())
            } else {
                Err(Error::Unsupported("closed-loop gain needs a first-order plant with d = 1".into()))
            }
        }
        Certificate::PeRobustness { channels, t0, delta0, .. } => {
            lyapunov(cfg)?;
            if channels.is_empty() {
                return Err(Error::InvalidParameter("no regressor channels listed".into()));
            }
            let delta0 = delta0.unwrap_or(*t0);
            if !(*t0 > 0.0 && delta0 > 0.0 && delta0 <= *t0) {
                return Err(Error::InvalidParameter("need 0 < δ0 ≤ T0".into()));
            }
            Ok(())
        }
    }
}

/// Evaluates a certificate; run-dependent ones read `traj`.
pub fn evaluate(cert: &Certificate, cfg: &ScenarioConfig, traj: &Trajectory) -> CertificateResult {
    let name = cert.name();
    match evaluate_inner(cert, cfg, traj) {
        Ok(r) => r,
        Err(e) => CertificateResult::new(name, false, e.to_string()),
    }
}

fn evaluate_inner(cert: &Certificate, cfg: &ScenarioConfig, traj: &Trajectory) -> Result<CertificateResult> {
    let name = cert.name();
    Ok(match cert {
        Certificate::Lyapunov => {
            let c = lyapunov(cfg)?;
            let lmin = adaptctl::linalg::min_eigenvalue(&c.p);
            CertificateResult::new(name, lmin > 0.0 && c.residual <= 1e-10, "A_mᵀP + PA_m = −Q")
                .with("residual", c.residual)
                .with("lambda_min_p", lmin)
        }
        Certificate::Spr => {
            let r = spr_check(&spr_target(cfg)?)?;
            CertificateResult::new(name, r.is_spr, "Re W(jω − ε) > 0 on the frequency grid")
                .with("epsilon", r.epsilon)
                .with("margin", r.margin)
        }
        Certificate::Kyl => {
            let p = kyl(&spr_target(cfg)?)?;
            CertificateResult::new(name, true, "P > 0 with Pb = c").with("lambda_min_p", adaptctl::linalg::min_eigenvalue(&p))
        }
        Certificate::HyperminimumPhase => {
            let ok = hyperminimum_phase_check(&plant_tf(cfg)?.transfer()?);
            CertificateResult::new(name, ok, "hyperminimum-phase test of W_p")
        }
        Certificate::Passification => {
            let Scenario::Passification { plant, controller } = &cfg.scenario else {
                unreachable!("checked during validation")
            };
            let ss = lti(plant)?;
            let p = passification_feasible(
                &ss.a,
                &ss.b.column(0).into_owned(),
                &ss.c.transpose(),
                &DVector::from_column_slice(&controller.g),
            )?;
            let mut r = CertificateResult::new(name, true, "A_θ Hurwitz with Pb = Cᵀg")
                .with("lambda_min_p", adaptctl::linalg::min_eigenvalue(&p.p));
            for (i, t) in p.theta.iter().enumerate() {
                r = r.with(&format!("theta{i}"), *t);
            }
            r
        }
        Certificate::MinimumPhase => {
            let p = armax(cfg)?;
            let zmax = p.b_zeros().iter().map(|z| z.norm()).fold(0.0, f64::max);
            CertificateResult::new(name, p.is_minimum_phase(), "zeros of B inside the unit circle").with("max_zero_modulus", zmax)
        }
        Certificate::ClosedLoopGain => {
            let p = armax(cfg)?;
            let (a, b) = (p.a[0], p.b[0]);
            let t1 = traj.channel("theta_c0")?;
            let t2 = traj.channel("theta_c1")?;
            let last = t1.len() - 1;
            let start = closed_loop_gain(t1[0], t2[0], a, b)?;
            let end = closed_loop_gain(t1[last], t2[last], a, b)?;
            let min_margin = t1
                .iter()
                .map(|&t| 1.0 - (a - b * t).abs())
                .fold(f64::INFINITY, f64::min);
            CertificateResult::new(
                name,
                end.class == StabilityClass::Stable,
                format!("initial {:?}, final {:?}", start.class, end.class),
            )
            .with("theta_burst", end.theta_burst)
            .with("g_initial", start.g)
            .with("g_final", end.g)
            .with("h_final", end.h)
            .with("min_stability_margin", min_margin)
        }
        Certificate::PeRobustness {
            channels,
            t0,
            delta0,
            from,
        } => {
            let c = lyapunov(cfg)?;
            let vmax = cfg.disturbance.bound();
            let required = robustness_margin(&c.p, &c.q, vmax)?;
            let names: Vec<&str> = channels.iter().map(String::as_str).collect();
            let rows = traj.rows(&names)?;
            let k0 = traj.index_at(*from).min(rows.len());
            let eps0 = pe_epsilon0(&rows[k0..], traj.step, *t0, delta0.unwrap_or(*t0))?;
            CertificateResult::new(name, eps0 > required, "measured ε0 against 2λmax(P)/λmin(Q)·vmax")
                .with("epsilon0", eps0)
                .with("required", required)
                .with("vmax", vmax)
        }
    })
}
