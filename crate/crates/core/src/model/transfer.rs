use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::plant::StateSpaceLTI;
use super::polynomial::Polynomial;
use crate::error::{Error, Result};
use crate::linalg;

/// Operator domain of a transfer function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    /// Laplace variable `s`; coefficients in ascending powers of `s`.
    Continuous,
    /// Delay operator `z` (`z y_k = y_{k-1}`); coefficients in ascending delays.
    Discrete,
}

/// Rational transfer function `num / den`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferFunction {
    pub num: Polynomial,
    pub den: Polynomial,
    pub domain: Domain,
}

impl TransferFunction {
    /// Builds a proper continuous-time transfer function.
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        Self::with_domain(num, den, Domain::Continuous)
    }

    pub fn with_domain(num: Polynomial, den: Polynomial, domain: Domain) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::InvalidParameter("zero denominator".into()));
        }
        if !num.coeffs().iter().chain(den.coeffs()).all(|c| c.is_finite()) {
            return Err(Error::NonFinite("transfer function coefficients".into()));
        }
        if domain == Domain::Continuous && num.degree() > den.degree() && !num.is_zero() {
            return Err(Error::Improper(format!(
                "numerator degree {} exceeds denominator degree {}",
                num.degree(),
                den.degree()
            )));
        }
        Ok(TransferFunction { num, den, domain })
    }

    /// Convenience constructor from ascending coefficient slices.
    pub fn from_coeffs(num: &[f64], den: &[f64]) -> Result<Self> {
        Self::new(Polynomial::new(num.to_vec()), Polynomial::new(den.to_vec()))
    }

    /// `deg den - deg num`.
    pub fn relative_degree(&self) -> usize {
        self.den.degree().saturating_sub(self.num.degree())
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.num.is_zero() || self.den.degree() > self.num.degree()
    }

    /// Ratio of leading coefficients.
    pub fn high_frequency_gain(&self) -> f64 {
        self.num.leading() / self.den.leading()
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.num.eval_complex(s) / self.den.eval_complex(s)
    }

    /// `W(jω)` for a continuous-time function.
    pub fn freq_response(&self, omega: f64) -> Complex64 {
        self.eval(Complex64::new(0.0, omega))
    }

    pub fn poles(&self) -> Vec<Complex64> {
        self.den.roots()
    }

    pub fn zeros(&self) -> Vec<Complex64> {
        if self.num.is_zero() {
            Vec::new()
        } else {
            self.num.roots()
        }
    }

    pub fn dc_gain(&self) -> f64 {
        self.num.coeff(0) / self.den.coeff(0)
    }

    /// `W(s - c)`: both polynomials composed with the shifted argument.
    pub fn shifted(&self, c: f64) -> TransferFunction {
        TransferFunction {
            num: self.num.compose_shift(-c),
            den: self.den.compose_shift(-c),
            domain: self.domain,
        }
    }

    pub fn scaled(&self, k: f64) -> TransferFunction {
        TransferFunction {
            num: self.num.scale(k),
            den: self.den.clone(),
            domain: self.domain,
        }
    }

    /// Series connection `self * other`.
    pub fn series(&self, other: &TransferFunction) -> TransferFunction {
        TransferFunction {
            num: &self.num * &other.num,
            den: &self.den * &other.den,
            domain: self.domain,
        }
    }

    /// Sylvester resultant of numerator and denominator; zero iff they share a
    /// root.
    pub fn resultant(&self) -> f64 {
        resultant(&self.num, &self.den)
    }

    /// Coprimeness by normalized resultant magnitude.
    pub fn is_coprime(&self) -> bool {
        if self.num.degree() == 0 || self.den.degree() == 0 {
            return !self.num.is_zero();
        }
        let a = self.num.scale(1.0 / self.num.max_abs_coeff());
        let b = self.den.scale(1.0 / self.den.max_abs_coeff());
        resultant(&a, &b).abs() > 1e-12
    }

    /// Controllable-canonical realization of a strictly proper continuous
    /// transfer function: `ẋ = A x + B u`, `y = C x`.
    pub fn realize(&self) -> Result<StateSpaceLTI> {
        if !self.is_strictly_proper() {
            return Err(Error::Improper("realization requires a strictly proper W".into()));
        }
        let n = self.den.degree();
        if n == 0 {
            return Err(Error::Dimension("denominator of degree zero".into()));
        }
        let lead = self.den.leading();
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n - 1 {
            a[(i, i + 1)] = 1.0;
        }
        for j in 0..n {
            a[(n - 1, j)] = -self.den.coeff(j) / lead;
        }
        let mut b = DMatrix::zeros(n, 1);
        b[(n - 1, 0)] = 1.0;
        let mut c = DMatrix::zeros(1, n);
        for j in 0..n {
            c[(0, j)] = self.num.coeff(j) / lead;
        }
        StateSpaceLTI::new(a, b, c)
    }

    /// `c^T (sI - A)^{-1} b` without pole-zero cancellation.
    pub fn from_state_space(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>) -> Result<Self> {
        linalg::require_square(a, "A")?;
        let n = a.nrows();
        if b.len() != n || c.len() != n {
            return Err(Error::Dimension(format!(
                "A is {n}x{n} but b has {} and c has {} entries",
                b.len(),
                c.len()
            )));
        }
        let (den, terms) = linalg::char_poly_adjugate(a);
        let mut num = vec![0.0; n];
        for (k, t) in terms.iter().enumerate() {
            num[n - 1 - k] = (c.transpose() * t * b)[(0, 0)];
        }
        TransferFunction::new(Polynomial::new(num), Polynomial::new(den))
    }
}

/// Sylvester-matrix resultant of two polynomials.
pub fn resultant(p: &Polynomial, q: &Polynomial) -> f64 {
    let m = p.degree();
    let n = q.degree();
    let size = m + n;
    if size == 0 {
        return 1.0;
    }
    let mut s = DMatrix::<f64>::zeros(size, size);
    for i in 0..n {
        for j in 0..=m {
            s[(i, i + j)] = p.coeff(m - j);
        }
    }
    for i in 0..m {
        for j in 0..=n {
            s[(n + i, i + j)] = q.coeff(n - j);
        }
    }
    s.determinant()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn improper_rejected() {
        assert!(matches!(
            TransferFunction::from_coeffs(&[0.0, 0.0, 1.0], &[1.0, 1.0]),
            Err(Error::Improper(_))
        ));
    }

    #[test]
    fn realization_roundtrip() {
        let w = TransferFunction::from_coeffs(&[2.0, 1.0], &[6.0, 5.0, 1.0, 0.5]).unwrap();
        let ss = w.realize().unwrap();
        let back = TransferFunction::from_state_space(
            &ss.a,
            &ss.b.column(0).into_owned(),
            &ss.c.row(0).transpose(),
        )
        .unwrap();
        for om in [0.01, 0.3, 1.0, 7.0] {
            let d = w.freq_response(om) - back.freq_response(om);
            assert!(d.norm() < 1e-12 * w.freq_response(om).norm().max(1.0));
        }
    }

    #[test]
    fn resultant_detects_common_factor() {
        let w = TransferFunction::from_coeffs(&[1.0, 1.0], &[2.0, 3.0, 1.0]).unwrap();
        assert!(!w.is_coprime());
        let w = TransferFunction::from_coeffs(&[3.0, 1.0], &[2.0, 3.0, 1.0]).unwrap();
        assert!(w.is_coprime());
    }

    #[test]
    fn shifted_evaluates_at_offset() {
        let w = TransferFunction::from_coeffs(&[1.0], &[1.0, 1.0]).unwrap();
        let ws = w.shifted(0.25);
        let s = Complex64::new(0.1, 2.0);
        let d = ws.eval(s) - w.eval(s - 0.25);
        assert!(d.norm() < 1e-14);
    }
}
