use nalgebra::{DMatrix, DVector};

use super::polynomial::Polynomial;
use super::transfer::TransferFunction;
use crate::error::{Error, Result};
use crate::linalg;

/// Solves `C = A F + z^d G` with `deg F = d - 1` and `F(0) = 1`.
///
/// `F` is the first `d` terms of the power series `C / A`; `G` is the
/// remainder shifted down by `d`.
pub fn bezout_solve(a: &Polynomial, c: &Polynomial, d: usize) -> Result<(Polynomial, Polynomial)> {
    if d < 1 {
        return Err(Error::InvalidParameter("delay d must be at least 1".into()));
    }
    if (a.coeff(0) - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "A must have constant term 1, got {}",
            a.coeff(0)
        )));
    }
    if (c.coeff(0) - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "C must have constant term 1, got {}",
            c.coeff(0)
        )));
    }
    let g_max = a.degree().saturating_sub(1);
    if c.degree() > a.degree().max(1) + d - 1 {
        return Err(Error::Dimension(format!(
            "deg C = {} exceeds deg A + d - 1 = {}",
            c.degree(),
            a.degree().max(1) + d - 1
        )));
    }
    let f = Polynomial::new(c.series_div(a, d));
    let rem = c - &(a * &f);
    let g: Vec<f64> = (d..=rem.degree().max(d)).map(|k| rem.coeff(k)).collect();
    let g = Polynomial::new(g);
    if g.degree() > g_max && !g.is_zero() {
        return Err(Error::Dimension(format!(
            "G has degree {} but at most {g_max} is allowed",
            g.degree()
        )));
    }
    Ok((f, g))
}

/// Solves the state-feedback matching conditions `A_p + b_p θ*ᵀ = A_m`,
/// `b_p k* = b_m` in the least-squares sense and reports infeasibility when
/// the residual exceeds `1e-10` (relative to the data scale).
pub fn matching_solve(
    ap: &DMatrix<f64>,
    bp: &DVector<f64>,
    am: &DMatrix<f64>,
    bm: &DVector<f64>,
) -> Result<(DVector<f64>, f64)> {
    linalg::require_square(ap, "A_p")?;
    linalg::require_square(am, "A_m")?;
    let n = ap.nrows();
    if am.nrows() != n || bp.len() != n || bm.len() != n {
        return Err(Error::Dimension(format!(
            "matching data dimensions disagree (n = {n}, A_m {}x{}, b_p {}, b_m {})",
            am.nrows(),
            am.ncols(),
            bp.len(),
            bm.len()
        )));
    }
    linalg::require_hurwitz(am)?;
    let bb = bp.dot(bp);
    if bb == 0.0 {
        return Err(Error::Infeasible("b_p = 0: no input direction".into()));
    }
    let theta = (am - ap).transpose() * bp / bb;
    let k = bp.dot(bm) / bb;
    let scale = 1.0f64.max(am.norm()).max(ap.norm()).max(bm.norm());
    let r1 = (ap + bp * theta.transpose() - am).norm();
    let r2 = (bp * k - bm).norm();
    if r1 > 1e-10 * scale || r2 > 1e-10 * scale {
        return Err(Error::Infeasible(format!(
            "matching residuals {r1:.3e} (state) and {r2:.3e} (input) exceed tolerance"
        )));
    }
    Ok((theta, k))
}

/// Coefficient matrix of `N(s) = adj(sI - Λ) ℓ`: column `j` holds the
/// coefficient of `s^j`, so `θᵀN(s)` has coefficients `Mᵀθ`.
fn filter_numerators(lambda: &DMatrix<f64>, ell: &DVector<f64>) -> (Polynomial, DMatrix<f64>) {
    let n = lambda.nrows();
    let (cp, terms) = linalg::char_poly_adjugate(lambda);
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        m.set_column(j, &(&terms[n - 1 - j] * ell));
    }
    (Polynomial::new(cp), m)
}

fn check_filter(lambda: &DMatrix<f64>, ell: &DVector<f64>) -> Result<()> {
    linalg::require_square(lambda, "Λ")?;
    if ell.len() != lambda.nrows() {
        return Err(Error::Dimension(format!(
            "ℓ has {} entries, Λ is {}x{}",
            ell.len(),
            lambda.nrows(),
            lambda.ncols()
        )));
    }
    linalg::require_hurwitz(lambda)?;
    let lm = DMatrix::from_column_slice(ell.len(), 1, ell.as_slice());
    if !linalg::is_controllable(lambda, &lm) {
        return Err(Error::NonMinimal("(Λ, ℓ) is not controllable".into()));
    }
    Ok(())
}

/// Solves `θᵀ N(s) = target` for a polynomial of degree below `dim Λ`.
fn solve_numerator(m: &DMatrix<f64>, target: &Polynomial) -> Result<DVector<f64>> {
    let n = m.nrows();
    if target.degree() >= n && !target.is_zero() {
        return Err(Error::Dimension(format!(
            "polynomial of degree {} cannot be produced by an order-{n} filter",
            target.degree()
        )));
    }
    let rhs = DVector::from_fn(n, |j, _| target.coeff(j));
    m.transpose()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NonMinimal("filter numerator basis is singular".into()))
}

/// Parameters `(θ1, θ2)` of the nonminimal realization
/// `ω̇1 = Λω1 + ℓu`, `ω̇2 = Λω2 + ℓy`, `y = θ1ᵀω1 + θ2ᵀω2` of `W_p`.
///
/// Requires `deg den(W_p) = dim Λ`.
pub fn nonminimal_realize(
    wp: &TransferFunction,
    lambda: &DMatrix<f64>,
    ell: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    check_filter(lambda, ell)?;
    let n = lambda.nrows();
    if wp.den.degree() != n {
        return Err(Error::Dimension(format!(
            "W_p has {} poles but Λ is {n}x{n}",
            wp.den.degree()
        )));
    }
    if !wp.is_strictly_proper() {
        return Err(Error::Improper("W_p must be strictly proper".into()));
    }
    if !wp.is_coprime() {
        return Err(Error::NonMinimal("W_p numerator and denominator share a factor".into()));
    }
    let lead = wp.den.leading();
    let z = wp.num.scale(1.0 / lead);
    let r = wp.den.scale(1.0 / lead);
    let (lam, m) = filter_numerators(lambda, ell);
    let theta1 = solve_numerator(&m, &z)?;
    let theta2 = solve_numerator(&m, &(&lam - &r))?;
    Ok((theta1, theta2))
}

/// Transfer function `y/u` realized by `(θ1, θ2)` on the filter pair `(Λ, ℓ)`.
pub fn nonminimal_transfer(
    lambda: &DMatrix<f64>,
    ell: &DVector<f64>,
    theta1: &DVector<f64>,
    theta2: &DVector<f64>,
) -> Result<TransferFunction> {
    let (lam, m) = filter_numerators(lambda, ell);
    let n1 = Polynomial::new((m.transpose() * theta1).as_slice().to_vec());
    let n2 = Polynomial::new((m.transpose() * theta2).as_slice().to_vec());
    TransferFunction::new(n1, &lam - &n2)
}

/// Fixed output-feedback controller `u = θ1ᵀω1 + θ2ᵀω2 + k r` matching the
/// closed loop `r → y` to `W_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputMatch {
    pub theta1: DVector<f64>,
    pub theta2: DVector<f64>,
    pub k: f64,
}

impl OutputMatch {
    /// `θ = [θ1; θ2]`.
    pub fn theta(&self) -> DVector<f64> {
        let n = self.theta1.len();
        DVector::from_fn(2 * n, |i, _| if i < n { self.theta1[i] } else { self.theta2[i - n] })
    }
}

/// Output-feedback matching on the nonminimal filter pair `(Λ, ℓ)` with
/// `dim Λ = deg den(W_p)`.
///
/// Needs equal relative degrees, stable plant zeros, and `Z_m` dividing
/// `det(sI - Λ) R_m`.
pub fn output_matching(
    wp: &TransferFunction,
    wm: &TransferFunction,
    lambda: &DMatrix<f64>,
    ell: &DVector<f64>,
) -> Result<OutputMatch> {
    check_filter(lambda, ell)?;
    let n = lambda.nrows();
    if wp.den.degree() != n {
        return Err(Error::Dimension(format!(
            "W_p has {} poles but Λ is {n}x{n}",
            wp.den.degree()
        )));
    }
    if wp.relative_degree() != wm.relative_degree() || wp.relative_degree() == 0 {
        return Err(Error::Dimension(format!(
            "relative degrees differ or are zero (W_p: {}, W_m: {})",
            wp.relative_degree(),
            wm.relative_degree()
        )));
    }
    if wp.zeros().iter().any(|z| z.re >= -linalg::HURWITZ_MARGIN) {
        return Err(Error::NonMinimumPhase("W_p has zeros outside the open left half-plane".into()));
    }
    let kp = wp.high_frequency_gain();
    let km = wm.high_frequency_gain();
    let zp = wp.num.scale(1.0 / wp.num.leading());
    let rp = wp.den.scale(1.0 / wp.den.leading());
    let zm = wm.num.scale(1.0 / wm.num.leading());
    let rm = wm.den.scale(1.0 / wm.den.leading());

    let (lam, m) = filter_numerators(lambda, ell);
    let (t, rem) = (&lam * &rm).div_rem(&zm);
    if rem.max_abs_coeff() > 1e-9 * t.max_abs_coeff().max(1.0) {
        return Err(Error::Infeasible(
            "Z_m must divide det(sI - Λ) R_m; choose Λ with the model zeros among its eigenvalues".into(),
        ));
    }
    let (q, rem2) = t.div_rem(&rp);
    let theta2 = solve_numerator(&m, &rem2.scale(-1.0 / kp))?;
    let theta1 = solve_numerator(&m, &(&lam - &(&zp * &q)).trimmed(1e-13))?;
    Ok(OutputMatch {
        theta1,
        theta2,
        k: km / kp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bezout_examples() {
        let (f, g) = bezout_solve(&Polynomial::new(vec![1.0, -0.5]), &Polynomial::one(), 1).unwrap();
        assert_eq!(f.coeffs(), &[1.0]);
        assert_eq!(g.coeffs(), &[0.5]);
        let (f, g) = bezout_solve(&Polynomial::one(), &Polynomial::one(), 3).unwrap();
        assert_eq!(f.coeffs(), &[1.0]);
        assert!(g.is_zero());
    }

    #[test]
    fn bezout_rejects_bad_constant_term() {
        assert!(bezout_solve(&Polynomial::new(vec![2.0, 1.0]), &Polynomial::one(), 1).is_err());
    }

    #[test]
    fn matching_scalar() {
        let (th, k) = matching_solve(
            &DMatrix::from_element(1, 1, 1.0),
            &DVector::from_element(1, 2.0),
            &DMatrix::from_element(1, 1, -3.0),
            &DVector::from_element(1, 2.0),
        )
        .unwrap();
        assert!((th[0] + 2.0).abs() < 1e-15 && (k - 1.0).abs() < 1e-15);
    }

    #[test]
    fn matching_infeasible_without_input() {
        let r = matching_solve(
            &DMatrix::from_element(1, 1, 1.0),
            &DVector::from_element(1, 0.0),
            &DMatrix::from_element(1, 1, -1.0),
            &DVector::from_element(1, 1.0),
        );
        assert!(matches!(r, Err(Error::Infeasible(_))));
    }

    #[test]
    fn nonminimal_first_order() {
        let wp = TransferFunction::from_coeffs(&[1.0], &[1.0, 1.0]).unwrap();
        let lam = DMatrix::from_element(1, 1, -2.0);
        let ell = DVector::from_element(1, 1.0);
        let (t1, t2) = nonminimal_realize(&wp, &lam, &ell).unwrap();
        assert!((t1[0] - 1.0).abs() < 1e-14 && (t2[0] - 1.0).abs() < 1e-14);
    }
}
