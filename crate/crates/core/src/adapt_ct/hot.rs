use nalgebra::{DMatrix, DVector};

use crate::analysis::spr_check;
use crate::error::{Error, Result};
use crate::estimate::{hot_rhs, HighOrderTunerState, HotDerivatives};
use crate::linalg;
use crate::model::{Polynomial, StateSpaceLTI, TransferFunction};
use crate::sim::{ContinuousSystem, Signal};

/// Output-feedback controller driven by a high-order tuner.
///
/// The regressor is `ω = [ω1; y]` with `ω̇1 = Λω1 + ℓu`. The chain
/// `ḋ_i = -a d_i + d_{i-1}`, `d_0 = ω`, supplies `d_i = ω/(s+a)^i`, and the
/// tuner is driven by `ω' = d_p`. The control is
/// `u = (s+a)^p[kᵀd_p] + r = Σ C(p,i) k^{(i)ᵀ} d_i + r`.
#[derive(Debug, Clone, PartialEq)]
pub struct HotController {
    pub tuner: HighOrderTunerState,
    /// Chain pole, `a > 0`.
    pub a: f64,
    pub lambda: DMatrix<f64>,
    pub ell: DVector<f64>,
    pub omega1: DVector<f64>,
    /// `d_1, ..., d_p`.
    pub chain: Vec<DVector<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HotControllerDerivatives {
    pub u: f64,
    pub omega1: DVector<f64>,
    pub chain: Vec<DVector<f64>>,
    pub tuner: HotDerivatives,
    /// `[k, k̇, ..., k^{(p)}]` used in `u`.
    pub k_jets: Vec<DVector<f64>>,
}

impl HotController {
    /// Tuner order `p = m - 1` for relative degree `m`; all filters at rest.
    pub fn new(
        relative_degree: usize,
        a: f64,
        lambda: DMatrix<f64>,
        ell: DVector<f64>,
        k0: DVector<f64>,
        mu: f64,
    ) -> Result<Self> {
        if relative_degree < 1 {
            return Err(Error::InvalidParameter("relative degree must be at least 1".into()));
        }
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidParameter(format!("chain pole a must be positive, got {a}")));
        }
        let p = relative_degree - 1;
        let alpha = Polynomial::from_real_roots(&[-a]).pow(p);
        let tuner = HighOrderTunerState::new(k0, alpha, mu)?;
        let n = tuner.dim();
        let c = HotController {
            tuner,
            a,
            omega1: DVector::zeros(lambda.nrows()),
            lambda,
            ell,
            chain: vec![DVector::zeros(n); p],
        };
        c.validate()?;
        Ok(c)
    }

    pub fn p(&self) -> usize {
        self.tuner.p()
    }

    /// Dimension of `ω` (and of `k`).
    pub fn dim(&self) -> usize {
        self.lambda.nrows() + 1
    }

    pub fn validate(&self) -> Result<()> {
        self.tuner.validate()?;
        linalg::require_square(&self.lambda, "Lambda")?;
        if self.lambda.nrows() > 0 {
            linalg::require_hurwitz(&self.lambda)?;
        }
        let n = self.dim();
        if self.ell.len() != n - 1 || self.omega1.len() != n - 1 || self.tuner.dim() != n {
            return Err(Error::Dimension(format!(
                "ω has dimension {n}: ℓ and ω1 need {}, k needs {n}",
                n - 1
            )));
        }
        if self.chain.len() != self.p() || self.chain.iter().any(|d| d.len() != n) {
            return Err(Error::Dimension(format!("chain needs {} states of dimension {n}", self.p())));
        }
        Ok(())
    }

    pub fn omega(&self, y: f64) -> DVector<f64> {
        let mut w = DVector::zeros(self.dim());
        w.rows_mut(0, self.dim() - 1).copy_from(&self.omega1);
        w[self.dim() - 1] = y;
        w
    }

    /// `d^j d_p / dt^j` for `j < max(p, 1)`, from the chain alone.
    fn omega_prime_jets(&self, omega: &DVector<f64>) -> Vec<DVector<f64>> {
        let p = self.p();
        if p == 0 {
            return vec![omega.clone()];
        }
        // jets[i][j] = d^j d_i/dt^j, valid for j <= i.
        let mut jets: Vec<Vec<DVector<f64>>> = vec![vec![omega.clone()]];
        for i in 1..=p {
            let mut row = vec![self.chain[i - 1].clone()];
            for j in 1..=i.min(p - 1) {
                let next = &row[j - 1] * (-self.a) + &jets[i - 1][j - 1];
                row.push(next);
            }
            jets.push(row);
        }
        jets.swap_remove(p).into_iter().take(p).collect()
    }
}

/// Control input and every controller derivative for output `y`,
/// reference `r` and tracking error `e1`.
pub fn hot_output_controller_rhs(ctrl: &HotController, y: f64, r: f64, e1: f64) -> Result<HotControllerDerivatives> {
    ctrl.validate()?;
    let p = ctrl.p();
    let omega = ctrl.omega(y);
    let omega_prime = if p == 0 { omega.clone() } else { ctrl.chain[p - 1].clone() };
    let jets = ctrl.omega_prime_jets(&omega);
    let k_jets = ctrl.tuner.k_derivatives(e1, &jets)?;
    let tuner = hot_rhs(&ctrl.tuner, e1, &omega_prime)?;
    let mut u = r;
    for (i, ki) in k_jets.iter().enumerate() {
        let d = if i == 0 { &omega } else { &ctrl.chain[i - 1] };
        u += linalg::binomial(p, i) * ki.dot(d);
    }
    let omega1 = &ctrl.lambda * &ctrl.omega1 + &ctrl.ell * u;
    let chain = (0..p)
        .map(|i| {
            let prev = if i == 0 { &omega } else { &ctrl.chain[i - 1] };
            &ctrl.chain[i] * (-ctrl.a) + prev
        })
        .collect();
    Ok(HotControllerDerivatives {
        u,
        omega1,
        chain,
        tuner,
        k_jets,
    })
}

/// SISO plant under the high-order-tuner controller, tracking `W_cl[r]`.
///
/// `W_cl` is the closed loop the controller attains at the matching `k*`.
/// State layout: `[x_p, x_m, ω1, d_1..d_p, k', tuner filters]`.
#[derive(Debug, Clone)]
pub struct HotLoop {
    pub plant: StateSpaceLTI,
    pub model: StateSpaceLTI,
    pub controller: HotController,
    pub r: Signal,
}

impl HotLoop {
    /// Fails unless `W_cl(s)(s+a)^p` is SPR and the relative degrees agree.
    pub fn new(wp: &TransferFunction, w_cl: &TransferFunction, controller: HotController, r: Signal) -> Result<Self> {
        controller.validate()?;
        r.validate()?;
        let m = wp.relative_degree();
        if m != controller.p() + 1 || w_cl.relative_degree() != m {
            return Err(Error::InvalidParameter(format!(
                "plant relative degree {m}, reference relative degree {}, tuner order {}",
                w_cl.relative_degree(),
                controller.p()
            )));
        }
        let lifted = TransferFunction::new(
            w_cl.num.clone() * Polynomial::from_real_roots(&[-controller.a]).pow(controller.p()),
            w_cl.den.clone(),
        )?;
        if !spr_check(&lifted)?.is_spr {
            return Err(Error::Infeasible(format!(
                "W_cl(s)(s+{})^{} is not SPR",
                controller.a,
                controller.p()
            )));
        }
        let plant = wp.realize()?;
        if plant.n() != controller.dim() {
            return Err(Error::Dimension(format!(
                "plant order {} needs a filter of order {}",
                plant.n(),
                plant.n() - 1
            )));
        }
        Ok(HotLoop {
            plant,
            model: w_cl.realize()?,
            controller,
            r,
        })
    }

    fn dims(&self) -> (usize, usize, usize, usize) {
        (self.plant.n(), self.model.n(), self.controller.dim(), self.controller.p())
    }

    pub fn initial_state(&self) -> DVector<f64> {
        let (n, nm, q, p) = self.dims();
        let mut s = DVector::zeros(n + nm + (q - 1) + p * q + q + q * p);
        let base = n + nm + (q - 1) + p * q;
        s.rows_mut(base, q).copy_from(&self.controller.tuner.k_prime);
        for (i, x) in self.controller.tuner.x.iter().enumerate() {
            s.rows_mut(base + q + i * p, p).copy_from(x);
        }
        s
    }

    fn unpack(&self, s: &DVector<f64>) -> (DVector<f64>, DVector<f64>, HotController) {
        let (n, nm, q, p) = self.dims();
        let xp = s.rows(0, n).into_owned();
        let xm = s.rows(n, nm).into_owned();
        let mut c = self.controller.clone();
        let mut at = n + nm;
        c.omega1 = s.rows(at, q - 1).into_owned();
        at += q - 1;
        for i in 0..p {
            c.chain[i] = s.rows(at + i * q, q).into_owned();
        }
        at += p * q;
        c.tuner.k_prime = s.rows(at, q).into_owned();
        at += q;
        for i in 0..q {
            c.tuner.x[i] = s.rows(at + i * p, p).into_owned();
        }
        (xp, xm, c)
    }

    fn signals(&self, t: f64, s: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>, HotController, f64, f64, f64, HotControllerDerivatives)> {
        let (xp, xm, c) = self.unpack(s);
        let r = self.r.eval(t);
        let y = (&self.plant.c * &xp)[0];
        let ym = (&self.model.c * &xm)[0];
        let d = hot_output_controller_rhs(&c, y, r, y - ym)?;
        Ok((xp, xm, c, r, y, ym, d))
    }
}

impl ContinuousSystem for HotLoop {
    fn channel_names(&self) -> Vec<String> {
        let q = self.controller.dim();
        let mut names: Vec<String> = ["y", "ym", "e1", "u", "r"].map(String::from).to_vec();
        names.extend((0..q).map(|i| format!("k{i}")));
        names.extend((0..q).map(|i| format!("kprime{i}")));
        names.extend((0..q).map(|i| format!("omega{i}")));
        names
    }

    fn rhs(&self, t: f64, s: &DVector<f64>) -> Result<DVector<f64>> {
        let (n, nm, q, p) = self.dims();
        let (xp, xm, _, r, _, _, d) = self.signals(t, s)?;
        let mut out = DVector::zeros(s.len());
        out.rows_mut(0, n)
            .copy_from(&(&self.plant.a * &xp + self.plant.b.column(0) * d.u));
        out.rows_mut(n, nm)
            .copy_from(&(&self.model.a * &xm + self.model.b.column(0) * r));
        let mut at = n + nm;
        out.rows_mut(at, q - 1).copy_from(&d.omega1);
        at += q - 1;
        for (i, di) in d.chain.iter().enumerate() {
            out.rows_mut(at + i * q, q).copy_from(di);
        }
        at += p * q;
        out.rows_mut(at, q).copy_from(&d.tuner.k_prime);
        at += q;
        for (i, xi) in d.tuner.x.iter().enumerate() {
            out.rows_mut(at + i * p, p).copy_from(xi);
        }
        Ok(out)
    }

    fn log(&self, t: f64, s: &DVector<f64>) -> Result<Vec<f64>> {
        let (_, _, c, r, y, ym, d) = self.signals(t, s)?;
        let mut row = vec![y, ym, y - ym, d.u, r];
        row.extend(d.k_jets[0].iter());
        row.extend(c.tuner.k_prime.iter());
        row.extend(c.omega(y).iter());
        Ok(row)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adapt_ct::{mrac_output_spr_rhs, OutputFbState};

    fn filt() -> (DMatrix<f64>, DVector<f64>) {
        (DMatrix::from_element(1, 1, -1.0), DVector::from_element(1, 1.0))
    }

    #[test]
    fn relative_degree_one_is_the_plain_law() {
        let (l, e) = filt();
        let k = DVector::from_vec(vec![0.3, -0.7]);
        let mut c = HotController::new(1, 1.0, l.clone(), e.clone(), k.clone(), 0.0).unwrap();
        c.omega1[0] = 0.4;
        let d = hot_output_controller_rhs(&c, 1.5, 0.2, 0.0).unwrap();
        let spr = OutputFbState {
            omega1: DVector::zeros(1),
            omega2: DVector::zeros(1),
            theta_c: k,
            k: 1.0,
            lambda: l,
            ell: e,
            gamma: 1.0,
        };
        let s = mrac_output_spr_rhs(&spr, 0.0, &c.omega(1.5), 0.2, 1.0).unwrap();
        assert!((d.u - s.u).abs() < 1e-15);
    }

    #[test]
    fn second_order_expansion() {
        let (l, e) = filt();
        let mut c = HotController::new(2, 2.0, l, e, DVector::from_vec(vec![1.0, -2.0]), 0.5).unwrap();
        c.omega1[0] = 0.3;
        c.chain[0] = DVector::from_vec(vec![0.1, -0.4]);
        c.tuner.k_prime = DVector::from_vec(vec![1.3, -1.5]);
        let (y, r, e1) = (0.8, 0.25, 0.6);
        let d = hot_output_controller_rhs(&c, y, r, e1).unwrap();
        let k = c.tuner.k();
        let kdot = DVector::from_fn(2, |i, _| {
            let h = hot_rhs(&c.tuner, e1, &c.chain[0]).unwrap();
            c.tuner.c.dot(&h.x[i])
        });
        let expected = k.dot(&c.omega(y)) + kdot.dot(&c.chain[0]) + r;
        assert!((d.u - expected).abs() < 1e-12, "{} vs {expected}", d.u);
    }

    #[test]
    fn frozen_tuner_is_linear() {
        let (l, e) = filt();
        let mut c = HotController::new(2, 2.0, l, e, DVector::from_vec(vec![1.0, -2.0]), 0.0).unwrap();
        c.chain[0] = DVector::from_vec(vec![0.5, 0.5]);
        let d1 = hot_output_controller_rhs(&c, 1.0, 0.0, 0.0).unwrap();
        let d2 = hot_output_controller_rhs(&c, 2.0, 0.0, 0.0).unwrap();
        assert!(d1.tuner.k_prime.norm() == 0.0);
        assert!(d1.k_jets[1].norm() < 1e-15);
        // u is affine in y with slope k_y.
        assert!((d2.u - d1.u - (-2.0)).abs() < 1e-14);
    }

    #[test]
    fn jets_follow_the_chain() {
        let (l, e) = filt();
        let mut c = HotController::new(3, 1.5, l, e, DVector::zeros(2), 0.0).unwrap();
        c.chain[0] = DVector::from_vec(vec![0.2, 0.1]);
        c.chain[1] = DVector::from_vec(vec![-0.3, 0.4]);
        let w = c.omega(0.7);
        let jets = c.omega_prime_jets(&w);
        assert_eq!(jets.len(), 2);
        let expected = &c.chain[1] * -1.5 + &c.chain[0];
        assert!((&jets[1] - expected).norm() < 1e-15);
    }
}
