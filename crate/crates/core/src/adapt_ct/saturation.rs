use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::adapt_ct::mrac::{mrac_lyapunov, MracState};
use crate::error::{Error, Result};
use crate::model::{matching_solve, ReferenceModel, StateSpaceLTI};
use crate::sim::{ContinuousSystem, Signal};

/// Magnitude and rate limits of the actuator and the time constant of the
/// filter generating the plant input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationLimits {
    pub u_max: Vec<f64>,
    pub u_r_max: Vec<f64>,
    pub tau: f64,
}

impl SaturationLimits {
    pub fn scalar(u_max: f64, u_r_max: f64, tau: f64) -> Result<Self> {
        let s = SaturationLimits {
            u_max: vec![u_max],
            u_r_max: vec![u_r_max],
            tau,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn channels(&self) -> usize {
        self.u_max.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {}", self.tau)));
        }
        if self.u_max.is_empty() || self.u_max.len() != self.u_r_max.len() {
            return Err(Error::Dimension("magnitude and rate limits need one entry per channel".into()));
        }
        if self.u_max.iter().chain(&self.u_r_max).any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidParameter("saturation limits must be positive".into()));
        }
        Ok(())
    }
}

/// Elliptical saturation: `v` if `‖v‖ ≤ g(v)`, else `ê·g(v)` with
/// `ê = v/‖v‖` and `g(v) = (Σ (ê_i/v_max,i)²)^{-1/2}`.
pub fn saturate(v: &DVector<f64>, v_max: &[f64]) -> Result<DVector<f64>> {
    if v.len() != v_max.len() {
        return Err(Error::Dimension(format!("{} channels but {} limits", v.len(), v_max.len())));
    }
    if v_max.iter().any(|m| !(*m > 0.0)) {
        return Err(Error::InvalidParameter("saturation limits must be positive".into()));
    }
    let norm = v.norm();
    if norm == 0.0 {
        return Ok(v.clone());
    }
    let e = v / norm;
    let g = e.iter().zip(v_max).map(|(ei, m)| (ei / m).powi(2)).sum::<f64>().powf(-0.5);
    if norm <= g {
        Ok(v.clone())
    } else {
        Ok(e * g)
    }
}

/// Actuator-side signals of the magnitude- and rate-limited input filter.
#[derive(Debug, Clone, PartialEq)]
pub struct SaturationDerivatives {
    pub u_r: DVector<f64>,
    /// `u̇_p = E_s(u_r, u_r,max)`.
    pub u_p: DVector<f64>,
    /// `Δu_m = E_s(u, u_max) − u`.
    pub delta_u_m: DVector<f64>,
    /// `Δu_r = E_s(u_r, u_r,max) − u_r`.
    pub delta_u_r: DVector<f64>,
    /// `Δu = Δu_m + τΔu_r`.
    pub delta_u: DVector<f64>,
}

/// `u_r = (E_s(u) − u_p)/τ`, `u̇_p = E_s(u_r)`, with the control deficiencies.
pub fn saturated_mrac_rhs(limits: &SaturationLimits, u_p: &DVector<f64>, u_cmd: &DVector<f64>) -> Result<SaturationDerivatives> {
    limits.validate()?;
    if u_p.len() != limits.channels() || u_cmd.len() != limits.channels() {
        return Err(Error::Dimension(format!(
            "{} actuator channels, got u_p {} and u {}",
            limits.channels(),
            u_p.len(),
            u_cmd.len()
        )));
    }
    let us = saturate(u_cmd, &limits.u_max)?;
    let u_r = (&us - u_p) / limits.tau;
    let urs = saturate(&u_r, &limits.u_r_max)?;
    let delta_u_m = &us - u_cmd;
    let delta_u_r = &urs - &u_r;
    Ok(SaturationDerivatives {
        delta_u: &delta_u_m + &delta_u_r * limits.tau,
        u_p: urs,
        u_r,
        delta_u_m,
        delta_u_r,
    })
}

/// State-feedback MRAC through a magnitude- and rate-limited actuator.
///
/// The auxiliary error `ė_a = A_m e_a + b_m k_s (u_p − u)` absorbs the input
/// deficiency, and the laws run on `e_u = e + e_a`:
/// `θ̇ = −sign(k*)Γ(e_uᵀPb_m)x`, `k̇ = −sign(k*)γ_k(e_uᵀPb_m)r`,
/// `k̇_s = −γ_s(e_uᵀPb_m)(u_p − u)`. The ideal `k_s` is `−1/k*`.
///
/// State layout: `[x, x_m, e_a, θ, k, k_s, u_p]`.
#[derive(Debug, Clone)]
pub struct SaturatedMracLoop {
    pub plant: StateSpaceLTI,
    pub reference: ReferenceModel,
    pub law: MracState,
    pub limits: SaturationLimits,
    pub gamma_s: f64,
    pub k_s0: f64,
    pub r: Signal,
    truth: Option<(DVector<f64>, f64)>,
}

struct Eval {
    x: DVector<f64>,
    xm: DVector<f64>,
    ea: DVector<f64>,
    theta: DVector<f64>,
    k: f64,
    ks: f64,
    up: f64,
    r: f64,
    u: f64,
    epb: f64,
    sat: SaturationDerivatives,
}

impl SaturatedMracLoop {
    pub fn new(
        plant: StateSpaceLTI,
        reference: ReferenceModel,
        law: MracState,
        limits: SaturationLimits,
        gamma_s: f64,
        r: Signal,
    ) -> Result<Self> {
        limits.validate()?;
        law.validate()?;
        r.validate()?;
        if plant.inputs() != 1 || limits.channels() != 1 {
            return Err(Error::Dimension("saturated MRAC loop is single-input".into()));
        }
        let n = plant.n();
        if reference.n() != n || law.n() != n {
            return Err(Error::Dimension(format!(
                "plant order {n}, reference order {}, law order {}",
                reference.n(),
                law.n()
            )));
        }
        if !(gamma_s > 0.0) || !gamma_s.is_finite() {
            return Err(Error::InvalidParameter(format!("gamma_s must be positive, got {gamma_s}")));
        }
        if law.certificate.is_none() {
            return Err(Error::Precondition("MRAC law needs a Lyapunov certificate".into()));
        }
        let bp = plant.b.column(0).into_owned();
        let truth = matching_solve(&plant.a, &bp, &reference.am, &reference.bm).ok();
        Ok(SaturatedMracLoop {
            plant,
            reference,
            law,
            limits,
            gamma_s,
            k_s0: 0.0,
            r,
            truth,
        })
    }

    pub fn truth(&self) -> Option<(&DVector<f64>, f64)> {
        self.truth.as_ref().map(|(t, k)| (t, *k))
    }

    pub fn n(&self) -> usize {
        self.plant.n()
    }

    /// `u_p(0)` is clamped into the magnitude limit.
    pub fn initial_state(&self, x0: &DVector<f64>, xm0: &DVector<f64>, up0: f64) -> DVector<f64> {
        let n = self.n();
        let mut s = DVector::zeros(4 * n + 3);
        s.rows_mut(0, n).copy_from(x0);
        s.rows_mut(n, n).copy_from(xm0);
        s.rows_mut(3 * n, n).copy_from(&self.law.theta);
        s[4 * n] = self.law.k;
        s[4 * n + 1] = self.k_s0;
        s[4 * n + 2] = up0.clamp(-self.limits.u_max[0], self.limits.u_max[0]);
        s
    }

    fn evaluate(&self, t: f64, s: &DVector<f64>) -> Result<Eval> {
        let n = self.n();
        let x = s.rows(0, n).into_owned();
        let xm = s.rows(n, n).into_owned();
        let ea = s.rows(2 * n, n).into_owned();
        let theta = s.rows(3 * n, n).into_owned();
        let (k, ks, up) = (s[4 * n], s[4 * n + 1], s[4 * n + 2]);
        let r = self.r.eval(t);
        let u = theta.dot(&x) + k * r;
        let p = &self.law.certificate.as_ref().expect("checked at construction").p;
        let eu = &x - &xm + &ea;
        let epb = eu.dot(&(p * &self.law.bm));
        let sat = saturated_mrac_rhs(&self.limits, &DVector::from_element(1, up), &DVector::from_element(1, u))?;
        Ok(Eval {
            x,
            xm,
            ea,
            theta,
            k,
            ks,
            up,
            r,
            u,
            epb,
            sat,
        })
    }

    fn lyapunov(&self, ev: &Eval) -> Result<Option<f64>> {
        let Some((ts, kstar)) = &self.truth else {
            return Ok(None);
        };
        let eu = &ev.x - &ev.xm + &ev.ea;
        let dks = ev.ks + 1.0 / kstar;
        Ok(Some(
            mrac_lyapunov(&self.law, &eu, &ev.theta, ev.k, ts, *kstar)? + dks * dks / self.gamma_s,
        ))
    }
}

impl ContinuousSystem for SaturatedMracLoop {
    fn channel_names(&self) -> Vec<String> {
        let n = self.n();
        let mut names = Vec::new();
        for prefix in ["x", "xm", "e", "ea", "theta"] {
            names.extend((0..n).map(|i| format!("{prefix}{i}")));
        }
        names.extend(
            ["k", "k_s", "u", "u_p", "u_p_dot", "du_m", "du_r", "du", "r", "epb"].map(String::from),
        );
        if self.truth.is_some() {
            names.push("V".into());
        }
        names
    }

    fn rhs(&self, t: f64, s: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.n();
        let ev = self.evaluate(t, s)?;
        let sign = self.law.sign_kstar;
        let deficiency = ev.up - ev.u;
        let bm = &self.law.bm;
        let mut out = DVector::zeros(s.len());
        out.rows_mut(0, n)
            .copy_from(&(&self.plant.a * &ev.x + self.plant.b.column(0) * ev.up));
        out.rows_mut(n, n).copy_from(&self.reference.derivative(&ev.xm, ev.r));
        out.rows_mut(2 * n, n)
            .copy_from(&(&self.reference.am * &ev.ea + bm * (ev.ks * deficiency)));
        out.rows_mut(3 * n, n)
            .copy_from(&(self.law.gamma_theta.apply(&ev.x) * (-sign * ev.epb)));
        out[4 * n] = -sign * self.law.gamma_k * ev.epb * ev.r;
        out[4 * n + 1] = -self.gamma_s * ev.epb * deficiency;
        out[4 * n + 2] = ev.sat.u_p[0];
        Ok(out)
    }

    fn post_step(&self, s: &mut DVector<f64>) {
        let i = 4 * self.n() + 2;
        let m = self.limits.u_max[0];
        s[i] = s[i].clamp(-m, m);
    }

    fn log(&self, t: f64, s: &DVector<f64>) -> Result<Vec<f64>> {
        let ev = self.evaluate(t, s)?;
        let e = &ev.x - &ev.xm;
        let mut row: Vec<f64> = ev
            .x
            .iter()
            .chain(ev.xm.iter())
            .chain(e.iter())
            .chain(ev.ea.iter())
            .chain(ev.theta.iter())
            .copied()
            .collect();
        row.extend([
            ev.k,
            ev.ks,
            ev.u,
            ev.up,
            ev.sat.u_p[0],
            ev.sat.delta_u_m[0],
            ev.sat.delta_u_r[0],
            ev.sat.delta_u[0],
            ev.r,
            ev.epb,
        ]);
        if let Some(v) = self.lyapunov(&ev)? {
            row.push(v);
        }
        Ok(row)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_vec(x.to_vec())
    }

    #[test]
    fn elliptical_saturation() {
        assert_eq!(saturate(&v(&[1.0]), &[2.0]).unwrap()[0], 1.0);
        assert_eq!(saturate(&v(&[3.0]), &[2.0]).unwrap()[0], 2.0);
        assert_eq!(saturate(&v(&[-3.0]), &[2.0]).unwrap()[0], -2.0);
        let s = saturate(&v(&[3.0, 0.0]), &[2.0, 5.0]).unwrap();
        assert!((s - v(&[2.0, 0.0])).norm() < 1e-15);
        assert_eq!(saturate(&v(&[0.0, 0.0]), &[2.0, 5.0]).unwrap().norm(), 0.0);
    }

    #[test]
    fn saturated_point_lies_on_the_ellipse() {
        let s = saturate(&v(&[3.0, 4.0]), &[1.0, 2.0]).unwrap();
        let q = (s[0] / 1.0).powi(2) + (s[1] / 2.0).powi(2);
        assert!((q - 1.0).abs() < 1e-12);
        assert!((s[0] / s[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn deficiencies() {
        let lim = SaturationLimits::scalar(2.0, 100.0, 0.1).unwrap();
        let d = saturated_mrac_rhs(&lim, &v(&[0.0]), &v(&[3.0])).unwrap();
        assert_eq!(d.delta_u_m[0], -1.0);
        assert_eq!(d.u_r[0], 20.0);
        assert_eq!(d.delta_u_r[0], 0.0);
        let inside = saturated_mrac_rhs(&lim, &v(&[0.5]), &v(&[1.0])).unwrap();
        assert_eq!(inside.delta_u[0], 0.0);
        assert!((inside.u_p[0] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_limits() {
        assert!(SaturationLimits::scalar(1.0, 1.0, 0.0).is_err());
        assert!(SaturationLimits::scalar(-1.0, 1.0, 1.0).is_err());
        assert!(saturate(&v(&[1.0]), &[0.0]).is_err());
    }
}
