use nalgebra::{DMatrix, DVector};

use crate::analysis::{kyl_solve, spr_check};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{output_matching, OutputMatch, StateSpaceLTI, TransferFunction};
use crate::sim::{ContinuousSystem, Signal};

/// Output-feedback controller on the nonminimal filter pair `(Λ, ℓ)`:
/// `ω̇1 = Λω1 + ℓu`, `ω̇2 = Λω2 + ℓy`, `u = θ_cᵀω + k·r`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputFbState {
    pub omega1: DVector<f64>,
    pub omega2: DVector<f64>,
    pub theta_c: DVector<f64>,
    pub k: f64,
    pub lambda: DMatrix<f64>,
    pub ell: DVector<f64>,
    /// Positive adaptation gain multiplying both laws.
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SprDerivatives {
    pub u: f64,
    pub theta_c: DVector<f64>,
    pub k: f64,
}

impl OutputFbState {
    /// Zero filter states. Fails unless `W_m` is SPR and `Λ` is Hurwitz.
    pub fn new(
        wm: &TransferFunction,
        lambda: DMatrix<f64>,
        ell: DVector<f64>,
        theta_c: DVector<f64>,
        k: f64,
    ) -> Result<Self> {
        let report = spr_check(wm)?;
        if !report.is_spr {
            return Err(Error::Infeasible("reference model W_m is not SPR".into()));
        }
        let s = OutputFbState {
            omega1: DVector::zeros(lambda.nrows()),
            omega2: DVector::zeros(lambda.nrows()),
            theta_c,
            k,
            lambda,
            ell,
            gamma: 1.0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.lambda.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        linalg::require_square(&self.lambda, "Lambda")?;
        linalg::require_hurwitz(&self.lambda)?;
        let n = self.n();
        if self.ell.len() != n || self.theta_c.len() != 2 * n || self.omega1.len() != n || self.omega2.len() != n {
            return Err(Error::Dimension(format!(
                "filter order {n} needs ℓ of length {n} and θ_c of length {}",
                2 * n
            )));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidParameter(format!("gamma must be positive, got {}", self.gamma)));
        }
        Ok(())
    }

    /// `ω = [ω1; ω2]`.
    pub fn omega(&self) -> DVector<f64> {
        stack(&self.omega1, &self.omega2)
    }
}

fn stack(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}

/// `u = θ_cᵀω + k·r`, `θ̇_c = −sign(k*)·γ·e_y·ω`, `k̇ = −sign(k*)·γ·e_y·r`.
pub fn mrac_output_spr_rhs(
    state: &OutputFbState,
    e_y: f64,
    omega: &DVector<f64>,
    r: f64,
    sign_kstar: f64,
) -> Result<SprDerivatives> {
    if omega.len() != state.theta_c.len() {
        return Err(Error::Dimension(format!(
            "regressor has {} entries, θ_c {}",
            omega.len(),
            state.theta_c.len()
        )));
    }
    if sign_kstar != 1.0 && sign_kstar != -1.0 {
        return Err(Error::InvalidParameter(format!("sign(k*) must be ±1, got {sign_kstar}")));
    }
    let g = -sign_kstar * state.gamma * e_y;
    Ok(SprDerivatives {
        u: state.theta_c.dot(omega) + state.k * r,
        theta_c: omega * g,
        k: g * r,
    })
}

/// SISO plant `W_p` under the SPR output-feedback law.
///
/// State layout: `[x_p, ω1, ω2, x_m, ε, θ_c, k]`. `ε` realizes the error
/// model `e_y = (1/k*)W_m[θ̃ᵀφ]` from zero initial state, so the logged `V`
/// is exact when the loop starts at rest.
#[derive(Debug, Clone)]
pub struct SprOutputLoop {
    pub plant: StateSpaceLTI,
    pub model: StateSpaceLTI,
    pub controller: OutputFbState,
    pub sign_kstar: f64,
    pub r: Signal,
    truth: Option<OutputMatch>,
    kyl_p: Option<DMatrix<f64>>,
}

impl SprOutputLoop {
    pub fn new(
        wp: &TransferFunction,
        wm: &TransferFunction,
        controller: OutputFbState,
        sign_kstar: f64,
        r: Signal,
    ) -> Result<Self> {
        controller.validate()?;
        r.validate()?;
        let plant = wp.realize()?;
        let model = wm.realize()?;
        if plant.n() != controller.n() {
            return Err(Error::Dimension(format!(
                "plant order {} but filter order {}",
                plant.n(),
                controller.n()
            )));
        }
        let truth = output_matching(wp, wm, &controller.lambda, &controller.ell).ok();
        if let Some(t) = &truth {
            if t.k.signum() != sign_kstar {
                return Err(Error::InvalidParameter(format!(
                    "configured sign(k*) = {sign_kstar} contradicts k* = {}",
                    t.k
                )));
            }
        }
        let bm = model.b.column(0).into_owned();
        let cm = model.c.row(0).transpose();
        let kyl_p = kyl_solve(&model.a, &bm, &cm).ok();
        Ok(SprOutputLoop {
            plant,
            model,
            controller,
            sign_kstar,
            r,
            truth,
            kyl_p,
        })
    }

    pub fn truth(&self) -> Option<&OutputMatch> {
        self.truth.as_ref()
    }

    fn dims(&self) -> (usize, usize) {
        (self.plant.n(), self.model.n())
    }

    pub fn initial_state(&self) -> DVector<f64> {
        let (n, nm) = self.dims();
        let mut s = DVector::zeros(3 * n + 2 * nm + 2 * n + 1);
        s.rows_mut(3 * n + 2 * nm, 2 * n).copy_from(&self.controller.theta_c);
        s[5 * n + 2 * nm] = self.controller.k;
        s
    }

    fn signals(&self, t: f64, s: &DVector<f64>) -> Result<Signals> {
        let (n, nm) = self.dims();
        let xp = s.rows(0, n).into_owned();
        let omega = s.rows(n, 2 * n).into_owned();
        let xm = s.rows(3 * n, nm).into_owned();
        let eps = s.rows(3 * n + nm, nm).into_owned();
        let theta = s.rows(3 * n + 2 * nm, 2 * n).into_owned();
        let k = s[5 * n + 2 * nm];
        let r = self.r.eval(t);
        let y = (&self.plant.c * &xp)[0];
        let ym = (&self.model.c * &xm)[0];
        let mut ctl = self.controller.clone();
        ctl.theta_c = theta;
        ctl.k = k;
        let d = mrac_output_spr_rhs(&ctl, y - ym, &omega, r, self.sign_kstar)?;
        Ok(Signals {
            xp,
            omega,
            xm,
            eps,
            ctl,
            r,
            y,
            ym,
            d,
        })
    }

    fn lyapunov(&self, sig: &Signals) -> Option<f64> {
        let (t, p) = (self.truth.as_ref()?, self.kyl_p.as_ref()?);
        let dt = &sig.ctl.theta_c - t.theta();
        let dk = sig.ctl.k - t.k;
        Some(sig.eps.dot(&(p * &sig.eps)) + (dt.norm_squared() + dk * dk) / (t.k.abs() * self.controller.gamma))
    }
}

struct Signals {
    xp: DVector<f64>,
    omega: DVector<f64>,
    xm: DVector<f64>,
    eps: DVector<f64>,
    ctl: OutputFbState,
    r: f64,
    y: f64,
    ym: f64,
    d: SprDerivatives,
}

impl ContinuousSystem for SprOutputLoop {
    fn channel_names(&self) -> Vec<String> {
        let n = self.plant.n();
        let mut names: Vec<String> = ["y", "ym", "e_y", "u", "r"].map(String::from).to_vec();
        names.extend((0..2 * n).map(|i| format!("theta{i}")));
        names.push("k".into());
        names.extend((0..2 * n).map(|i| format!("omega{i}")));
        if self.truth.is_some() && self.kyl_p.is_some() {
            names.push("V".into());
        }
        names
    }

    fn rhs(&self, t: f64, s: &DVector<f64>) -> Result<DVector<f64>> {
        let (n, nm) = self.dims();
        let sig = self.signals(t, s)?;
        let u = sig.d.u;
        let lam = &self.controller.lambda;
        let ell = &self.controller.ell;
        let mut out = DVector::zeros(s.len());
        out.rows_mut(0, n)
            .copy_from(&(&self.plant.a * &sig.xp + self.plant.b.column(0) * u));
        out.rows_mut(n, n)
            .copy_from(&(lam * sig.omega.rows(0, n) + ell * u));
        out.rows_mut(2 * n, n)
            .copy_from(&(lam * sig.omega.rows(n, n) + ell * sig.y));
        out.rows_mut(3 * n, nm)
            .copy_from(&(&self.model.a * &sig.xm + self.model.b.column(0) * sig.r));
        if let Some(tr) = &self.truth {
            let phi_err = (&sig.ctl.theta_c - tr.theta()).dot(&sig.omega) + (sig.ctl.k - tr.k) * sig.r;
            out.rows_mut(3 * n + nm, nm)
                .copy_from(&(&self.model.a * &sig.eps + self.model.b.column(0) * (phi_err / tr.k)));
        }
        out.rows_mut(3 * n + 2 * nm, 2 * n).copy_from(&sig.d.theta_c);
        out[5 * n + 2 * nm] = sig.d.k;
        Ok(out)
    }

    fn log(&self, t: f64, s: &DVector<f64>) -> Result<Vec<f64>> {
        let sig = self.signals(t, s)?;
        let mut row = vec![sig.y, sig.ym, sig.y - sig.ym, sig.d.u, sig.r];
        row.extend(sig.ctl.theta_c.iter());
        row.push(sig.ctl.k);
        row.extend(sig.omega.iter());
        if let Some(v) = self.lyapunov(&sig) {
            row.push(v);
        }
        Ok(row)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state() -> OutputFbState {
        OutputFbState {
            omega1: DVector::zeros(1),
            omega2: DVector::zeros(1),
            theta_c: DVector::zeros(2),
            k: 0.0,
            lambda: DMatrix::from_element(1, 1, -1.0),
            ell: DVector::from_element(1, 1.0),
            gamma: 1.0,
        }
    }

    #[test]
    fn substitution() {
        let d = mrac_output_spr_rhs(&state(), 2.0, &DVector::from_vec(vec![1.0, -1.0]), 0.5, 1.0).unwrap();
        assert_eq!(d.theta_c.as_slice(), &[-2.0, 2.0]);
        assert_eq!(d.k, -1.0);
        let z = mrac_output_spr_rhs(&state(), 0.0, &DVector::from_vec(vec![1.0, -1.0]), 0.5, 1.0).unwrap();
        assert_eq!(z.theta_c.norm() + z.k.abs(), 0.0);
    }

    #[test]
    fn rejects_non_spr_model() {
        let wm = TransferFunction::from_coeffs(&[1.0], &[1.0, 2.0, 1.0]).unwrap();
        let r = OutputFbState::new(&wm, DMatrix::from_element(1, 1, -1.0), DVector::from_element(1, 1.0), DVector::zeros(2), 0.0);
        assert!(r.is_err());
    }
}
