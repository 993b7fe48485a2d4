use nalgebra::{DMatrix, DVector};

use crate::adapt_ct::robust::{project_to_ball, robust_mod, RobustMod};
use crate::analysis::{lyapunov_solve, LyapunovCertificate};
use crate::error::{Error, Result};
use crate::estimate::Gain;
use crate::model::{matching_solve, ReferenceModel, StateSpaceLTI};
use crate::sim::{ContinuousSystem, Disturbance, DisturbanceSpec, Signal};

/// Adjustable parameters and gains of state-feedback MRAC.
#[derive(Debug, Clone, PartialEq)]
pub struct MracState {
    pub theta: DVector<f64>,
    pub k: f64,
    pub gamma_theta: Gain,
    pub gamma_k: f64,
    /// `sign(k*)`, ±1.
    pub sign_kstar: f64,
    pub bm: DVector<f64>,
    pub certificate: Option<LyapunovCertificate>,
}

/// Control and parameter derivatives produced by one evaluation of the law.
#[derive(Debug, Clone, PartialEq)]
pub struct MracDerivatives {
    pub u: f64,
    pub theta: DVector<f64>,
    pub k: f64,
    /// `eᵀ P b_m`.
    pub epb: f64,
}

impl MracState {
    /// Law for `reference` with `P` solving `A_mᵀP + PA_m = −Q`.
    pub fn new(
        theta: DVector<f64>,
        k: f64,
        gamma_theta: Gain,
        gamma_k: f64,
        sign_kstar: f64,
        reference: &ReferenceModel,
        q: &DMatrix<f64>,
    ) -> Result<Self> {
        let certificate = lyapunov_solve(&reference.am, q)?;
        let s = MracState {
            theta,
            k,
            gamma_theta,
            gamma_k,
            sign_kstar,
            bm: reference.bm.clone(),
            certificate: Some(certificate),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.theta.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        self.gamma_theta.validate(n, "Gamma_theta")?;
        if !(self.gamma_k > 0.0) || !self.gamma_k.is_finite() {
            return Err(Error::InvalidParameter(format!("gamma_k must be positive, got {}", self.gamma_k)));
        }
        if self.sign_kstar != 1.0 && self.sign_kstar != -1.0 {
            return Err(Error::InvalidParameter(format!("sign(k*) must be ±1, got {}", self.sign_kstar)));
        }
        if self.bm.len() != n {
            return Err(Error::Dimension(format!("b_m has {} entries, theta {n}", self.bm.len())));
        }
        if let Some(c) = &self.certificate {
            if c.p.nrows() != n {
                return Err(Error::Dimension(format!("P is {}x{}, expected {n}x{n}", c.p.nrows(), c.p.ncols())));
            }
        }
        Ok(())
    }

    fn p(&self) -> Result<&DMatrix<f64>> {
        self.certificate
            .as_ref()
            .map(|c| &c.p)
            .ok_or_else(|| Error::Precondition("MRAC law needs a Lyapunov certificate".into()))
    }
}

fn law(
    s: &MracState,
    theta: &DVector<f64>,
    k: f64,
    x: &DVector<f64>,
    xm: &DVector<f64>,
    r: f64,
) -> Result<MracDerivatives> {
    if x.len() != s.n() || xm.len() != s.n() {
        return Err(Error::Dimension(format!(
            "state dimensions {} and {} for a law of order {}",
            x.len(),
            xm.len(),
            s.n()
        )));
    }
    let e = x - xm;
    let epb = e.dot(&(s.p()? * &s.bm));
    Ok(MracDerivatives {
        u: theta.dot(x) + k * r,
        theta: s.gamma_theta.apply(x) * (-s.sign_kstar * epb),
        k: -s.sign_kstar * s.gamma_k * epb * r,
        epb,
    })
}

/// `u = θᵀx + k·r`, `θ̇ = −sign(k*)Γ_θ(eᵀPb_m)x`, `k̇ = −sign(k*)γ_k(eᵀPb_m)r`.
pub fn mrac_state_rhs(state: &MracState, x: &DVector<f64>, xm: &DVector<f64>, r: f64) -> Result<MracDerivatives> {
    law(state, &state.theta, state.k, x, xm, r)
}

/// `V = eᵀPe + (1/|k*|)[θ̃ᵀΓ_θ⁻¹θ̃ + k̃²/γ_k]`, whose derivative along the
/// nominal loop is `−eᵀQe`.
pub fn mrac_lyapunov(
    state: &MracState,
    e: &DVector<f64>,
    theta: &DVector<f64>,
    k: f64,
    theta_star: &DVector<f64>,
    k_star: f64,
) -> Result<f64> {
    let p = state.p()?;
    let dt = theta - theta_star;
    let dk = k - k_star;
    Ok(e.dot(&(p * e)) + (state.gamma_theta.inverse_quadratic(&dt) + dk * dk / state.gamma_k) / k_star.abs())
}

/// Where the scalar disturbance `v(t)` enters the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisturbanceEntry {
    /// `ẋ = A_p x + b_p u + d·v`.
    #[default]
    State,
    /// The controller and the law see `x + d·v`.
    Measurement,
}

/// Plant `ẋ = A_p x + b_p u` under state-feedback MRAC with a bounded
/// disturbance along the direction `d`.
///
/// State layout: `[x, x_m, θ, k]`.
#[derive(Debug, Clone)]
pub struct MracLoop {
    pub plant: StateSpaceLTI,
    pub reference: ReferenceModel,
    pub law: MracState,
    pub r: Signal,
    pub robust: RobustMod,
    /// Keeps `k` at its initial value, giving `u = θᵀx + k(0)·r`.
    pub freeze_k: bool,
    pub disturbance_dir: DVector<f64>,
    pub entry: DisturbanceEntry,
    truth: Option<(DVector<f64>, f64)>,
    disturbance: Disturbance,
    v: f64,
}

impl MracLoop {
    /// The disturbance enters along `b_p/‖b_p‖` unless a direction is given.
    pub fn new(
        plant: StateSpaceLTI,
        reference: ReferenceModel,
        law: MracState,
        r: Signal,
        disturbance: &DisturbanceSpec,
        disturbance_dir: Option<DVector<f64>>,
    ) -> Result<Self> {
        let n = plant.n();
        if plant.inputs() != 1 {
            return Err(Error::Dimension("MRAC loop needs a single-input plant".into()));
        }
        if reference.n() != n || law.n() != n {
            return Err(Error::Dimension(format!(
                "plant order {n}, reference order {}, law order {}",
                reference.n(),
                law.n()
            )));
        }
        law.validate()?;
        law.p()?;
        r.validate()?;
        let bp = plant.b.column(0).into_owned();
        let dir = match disturbance_dir {
            Some(d) => d,
            None => {
                let nb = bp.norm();
                if nb == 0.0 {
                    return Err(Error::InvalidParameter("b_p is zero".into()));
                }
                &bp / nb
            }
        };
        if dir.len() != n {
            return Err(Error::Dimension(format!("disturbance direction has {} entries, expected {n}", dir.len())));
        }
        let truth = matching_solve(&plant.a, &bp, &reference.am, &reference.bm).ok();
        Ok(MracLoop {
            plant,
            reference,
            law,
            r,
            robust: RobustMod::None,
            freeze_k: false,
            disturbance_dir: dir,
            entry: DisturbanceEntry::State,
            truth,
            disturbance: Disturbance::new(disturbance)?,
            v: 0.0,
        })
    }

    pub fn with_robust(mut self, robust: RobustMod) -> Result<Self> {
        robust.validate()?;
        self.robust = robust;
        Ok(self)
    }

    pub fn with_entry(mut self, entry: DisturbanceEntry) -> Self {
        self.entry = entry;
        self
    }

    pub fn with_frozen_feedforward(mut self) -> Self {
        self.freeze_k = true;
        self
    }

    /// `(θ*, k*)` from the matching conditions, when they are solvable.
    pub fn truth(&self) -> Option<(&DVector<f64>, f64)> {
        self.truth.as_ref().map(|(t, k)| (t, *k))
    }

    pub fn n(&self) -> usize {
        self.plant.n()
    }

    pub fn initial_state(&self, x0: &DVector<f64>, xm0: &DVector<f64>) -> DVector<f64> {
        let n = self.n();
        let mut s = DVector::zeros(3 * n + 1);
        s.rows_mut(0, n).copy_from(x0);
        s.rows_mut(n, n).copy_from(xm0);
        s.rows_mut(2 * n, n).copy_from(&self.law.theta);
        s[3 * n] = self.law.k;
        s
    }

    fn split(&self, s: &DVector<f64>) -> (DVector<f64>, DVector<f64>, DVector<f64>, f64) {
        let n = self.n();
        (
            s.rows(0, n).into_owned(),
            s.rows(n, n).into_owned(),
            s.rows(2 * n, n).into_owned(),
            s[3 * n],
        )
    }

    fn measured(&self, x: &DVector<f64>) -> DVector<f64> {
        match self.entry {
            DisturbanceEntry::State => x.clone(),
            DisturbanceEntry::Measurement => x + &self.disturbance_dir * self.v,
        }
    }

    /// Stacked adjustable parameters `[θ, k]`, or `θ` when `k` is frozen.
    fn params(&self, theta: &DVector<f64>, k: f64) -> DVector<f64> {
        if self.freeze_k {
            theta.clone()
        } else {
            let mut p = theta.clone().insert_row(theta.len(), 0.0);
            p[theta.len()] = k;
            p
        }
    }
}

impl ContinuousSystem for MracLoop {
    fn channel_names(&self) -> Vec<String> {
        let n = self.n();
        let mut names = Vec::new();
        for prefix in ["x", "xm", "e", "theta"] {
            names.extend((0..n).map(|i| format!("{prefix}{i}")));
        }
        names.extend(["k", "u", "r", "v", "epb"].map(String::from));
        if self.truth.is_some() {
            names.push("V".into());
        }
        names
    }

    fn begin_step(&mut self, t: f64, _x: &DVector<f64>) -> Result<()> {
        self.v = self.disturbance.sample(t);
        Ok(())
    }

    fn rhs(&self, t: f64, s: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.n();
        let (x, xm, theta, k) = self.split(s);
        let r = self.r.eval(t);
        let xs = self.measured(&x);
        let d = law(&self.law, &theta, k, &xs, &xm, r)?;
        let mut xdot = &self.plant.a * &x + self.plant.b.column(0) * d.u;
        if self.entry == DisturbanceEntry::State {
            xdot += &self.disturbance_dir * self.v;
        }
        let xmdot = self.reference.derivative(&xm, r);
        let nominal = self.params(&d.theta, d.k);
        let pdot = robust_mod(&self.robust, &nominal, &self.params(&theta, k), (&xs - &xm).norm(), d.epb)?;
        let mut out = DVector::zeros(3 * n + 1);
        out.rows_mut(0, n).copy_from(&xdot);
        out.rows_mut(n, n).copy_from(&xmdot);
        out.rows_mut(2 * n, n).copy_from(&pdot.rows(0, n));
        if !self.freeze_k {
            out[3 * n] = pdot[n];
        }
        Ok(out)
    }

    fn post_step(&self, s: &mut DVector<f64>) {
        if let Some(radius) = self.robust.radius() {
            let n = self.n();
            let (_, _, theta, k) = self.split(s);
            let mut p = self.params(&theta, k);
            project_to_ball(&mut p, radius);
            s.rows_mut(2 * n, n).copy_from(&p.rows(0, n));
            if !self.freeze_k {
                s[3 * n] = p[n];
            }
        }
    }

    fn log(&self, t: f64, s: &DVector<f64>) -> Result<Vec<f64>> {
        let (x, xm, theta, k) = self.split(s);
        let r = self.r.eval(t);
        let d = law(&self.law, &theta, k, &self.measured(&x), &xm, r)?;
        let e = &x - &xm;
        let mut row: Vec<f64> = x.iter().chain(xm.iter()).chain(e.iter()).chain(theta.iter()).copied().collect();
        row.extend([k, d.u, r, self.v, d.epb]);
        if let Some((ts, ks)) = &self.truth {
            row.push(mrac_lyapunov(&self.law, &e, &theta, k, ts, *ks)?);
        }
        Ok(row)
    }

    fn state_label(&self, i: usize) -> String {
        let n = self.n();
        match i / n {
            0 => format!("x{i}"),
            1 => format!("xm{}", i - n),
            2 => format!("theta{}", i - 2 * n),
            _ => "k".into(),
        }
    }
}
