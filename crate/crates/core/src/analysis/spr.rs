use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::lyapunov::kyl_search;
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::TransferFunction;

/// Candidate stability margins, smallest first.
pub const SPR_EPSILONS: [f64; 3] = [1e-6, 1e-4, 1e-2];

/// Outcome of [`spr_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SprReport {
    pub is_spr: bool,
    /// Margin for which the test passed (the largest tried when it failed).
    pub epsilon: f64,
    /// Minimum of `Re W(jω - ε)` over the frequency grid.
    pub margin: f64,
}

/// 400 log-spaced points on `[1e-3, 1e3]` preceded by `ω = 0`.
pub fn spr_frequency_grid() -> Vec<f64> {
    let mut g = vec![0.0];
    g.extend((0..400).map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / 399.0)));
    g
}

fn asymptote_ok(w: &TransferFunction, eps: f64) -> bool {
    let g = w.high_frequency_gain();
    match w.relative_degree() {
        0 => g > 0.0,
        1 => {
            let nm = w.num.degree();
            let nd = w.den.degree();
            let alpha = w.den.coeff(nd - 1) / w.den.leading();
            let beta = if nm == 0 { 0.0 } else { w.num.coeff(nm - 1) / w.num.leading() };
            g > 0.0 && alpha - beta > eps
        }
        _ => false,
    }
}

/// Frequency-domain SPR test: for some `ε` in [`SPR_EPSILONS`], every pole has
/// `Re s < -ε`, `Re W(jω - ε) > 0` on [`spr_frequency_grid`], and the
/// high-frequency asymptote of `Re W(jω - ε)` is positive.
pub fn spr_check(w: &TransferFunction) -> Result<SprReport> {
    if w.num.degree() > w.den.degree() && !w.num.is_zero() {
        return Err(Error::Improper("SPR test requires a proper transfer function".into()));
    }
    let grid = spr_frequency_grid();
    let poles = w.poles();
    let mut last = SprReport {
        is_spr: false,
        epsilon: SPR_EPSILONS[SPR_EPSILONS.len() - 1],
        margin: f64::NEG_INFINITY,
    };
    if w.num.is_zero() {
        return Ok(last);
    }
    for &eps in &SPR_EPSILONS {
        let stable = poles.iter().all(|p| p.re < -eps);
        let shifted = w.shifted(eps);
        let margin = grid
            .iter()
            .map(|&om| shifted.freq_response(om).re)
            .fold(f64::INFINITY, f64::min);
        let ok = stable && margin > 0.0 && asymptote_ok(w, eps);
        last = SprReport {
            is_spr: ok,
            epsilon: eps,
            margin,
        };
        if ok {
            return Ok(last);
        }
    }
    Ok(last)
}

/// Relative degree one, zeros in the open left half-plane, positive
/// high-frequency gain.
pub fn hyperminimum_phase_check(w: &TransferFunction) -> bool {
    if w.num.is_zero() || w.relative_degree() != 1 || w.den.degree() < w.num.degree() {
        return false;
    }
    w.high_frequency_gain() > 0.0 && w.zeros().iter().all(|z| z.re < -linalg::HURWITZ_MARGIN)
}

/// Certificate returned by [`passification_feasible`].
#[derive(Debug, Clone, PartialEq)]
pub struct Passification {
    pub p: DMatrix<f64>,
    pub theta: DVector<f64>,
    /// `A + B θᵀ Cᵀ`.
    pub a_theta: DMatrix<f64>,
}

/// Feedback gains tried along `θ = -κ g`.
fn kappa_schedule() -> impl Iterator<Item = f64> {
    std::iter::once(0.0).chain((0..40).map(|i| 2f64.powi(i)))
}

/// Finds `P = Pᵀ > 0` and `θ` with `A_θᵀP + P A_θ < 0`, `A_θ = A + BθᵀCᵀ`,
/// and `P B = C g`, for the plant `ẋ = Ax + Bu`, `y = Cᵀx` (`C` is `n × l`).
///
/// Feasible exactly when `Z_g(s) = (Cg)ᵀ(sI - A)⁻¹B` is hyperminimum-phase;
/// `θ` is searched along `-κ g` with increasing `κ`.
pub fn passification_feasible(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    c: &DMatrix<f64>,
    g: &DVector<f64>,
) -> Result<Passification> {
    linalg::require_square(a, "A")?;
    let n = a.nrows();
    if b.len() != n || c.nrows() != n || c.ncols() != g.len() {
        return Err(Error::Dimension(format!(
            "A is {n}x{n}, B has {} entries, C is {}x{}, g has {} entries",
            b.len(),
            c.nrows(),
            c.ncols(),
            g.len()
        )));
    }
    let cg = c * g;
    let zg = TransferFunction::from_state_space(a, b, &cg)?;
    if !hyperminimum_phase_check(&zg) {
        return Err(Error::Infeasible("Z_g is not hyperminimum-phase".into()));
    }
    for kappa in kappa_schedule() {
        let theta = -g * kappa;
        let a_theta = a + b * (c * &theta).transpose();
        if !linalg::is_hurwitz(&a_theta) {
            continue;
        }
        let closed = TransferFunction::from_state_space(&a_theta, b, &cg)?;
        if !spr_check(&closed)?.is_spr {
            continue;
        }
        if let Some(p) = kyl_search(&a_theta, b, &cg) {
            return Ok(Passification { p, theta, a_theta });
        }
    }
    Err(Error::Infeasible("no passifying gain found along -κg".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tf(num: &[f64], den: &[f64]) -> TransferFunction {
        TransferFunction::from_coeffs(num, den).unwrap()
    }

    #[test]
    fn spr_examples() {
        assert!(spr_check(&tf(&[1.0], &[1.0, 1.0])).unwrap().is_spr);
        assert!(!spr_check(&tf(&[1.0], &[1.0, 2.0, 1.0])).unwrap().is_spr);
        assert!(!spr_check(&tf(&[1.0], &[0.0, 0.0, 1.0])).unwrap().is_spr);
    }

    #[test]
    fn hyperminimum_phase_examples() {
        assert!(hyperminimum_phase_check(&tf(&[2.0, 1.0], &[1.0, 1.0, 1.0])));
        assert!(!hyperminimum_phase_check(&tf(&[-1.0, 1.0], &[1.0, 2.0, 1.0])));
        assert!(!hyperminimum_phase_check(&tf(&[1.0], &[1.0, 2.0, 1.0])));
    }

    #[test]
    fn passification_scalar() {
        let one = DVector::from_element(1, 1.0);
        let c = DMatrix::from_element(1, 1, 1.0);
        let r = passification_feasible(&DMatrix::zeros(1, 1), &one, &c, &one).unwrap();
        assert!((r.theta[0] + 1.0).abs() < 1e-15);
        assert!((r.p[(0, 0)] - 1.0).abs() < 1e-12);
        let r = passification_feasible(&DMatrix::from_element(1, 1, -1.0), &one, &c, &one).unwrap();
        assert_eq!(r.theta[0], 0.0);
    }
}
