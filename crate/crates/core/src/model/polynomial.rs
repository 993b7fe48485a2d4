use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg;

/// Real polynomial in an operator variable (`s` or the delay `z`), stored
/// with the constant term first.
///
/// Trailing zero coefficients are dropped on construction, so the stored
/// leading coefficient is nonzero unless the polynomial is identically zero
/// (represented as `[0.0]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<f64>", into = "Vec<f64>")]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl From<Vec<f64>> for Polynomial {
    fn from(v: Vec<f64>) -> Self {
        Polynomial::new(v)
    }
}

impl From<Polynomial> for Vec<f64> {
    fn from(p: Polynomial) -> Self {
        p.coeffs
    }
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: vec![0.0] }
    }

    pub fn one() -> Self {
        Polynomial { coeffs: vec![1.0] }
    }

    pub fn constant(c: f64) -> Self {
        Polynomial::new(vec![c])
    }

    /// `c * x^k`.
    pub fn monomial(k: usize, c: f64) -> Self {
        let mut v = vec![0.0; k + 1];
        v[k] = c;
        Polynomial::new(v)
    }

    /// Monic polynomial with the given real roots, `Π (x - r_i)`.
    pub fn from_real_roots(roots: &[f64]) -> Self {
        roots
            .iter()
            .fold(Polynomial::one(), |acc, &r| acc * Polynomial::new(vec![-r, 1.0]))
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `x^k` (zero past the degree).
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 0.0
    }

    pub fn leading(&self) -> f64 {
        *self.coeffs.last().unwrap()
    }

    /// Drops leading coefficients whose magnitude is below `tol` relative to
    /// the largest coefficient.
    pub fn trimmed(&self, tol: f64) -> Self {
        let scale = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let mut v = self.coeffs.clone();
        while v.len() > 1 && v.last().unwrap().abs() <= tol * scale {
            v.pop();
        }
        Polynomial::new(v)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn scale(&self, k: f64) -> Self {
        Polynomial::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    /// Multiplies by `x^d`; with the delay operator this is a `d`-sample delay.
    pub fn shift(&self, d: usize) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let mut v = vec![0.0; d];
        v.extend_from_slice(&self.coeffs);
        Polynomial::new(v)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Polynomial::zero();
        }
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * k as f64)
                .collect(),
        )
    }

    /// `p(x + c)`.
    pub fn compose_shift(&self, c: f64) -> Self {
        let lin = Polynomial::new(vec![c, 1.0]);
        self.coeffs
            .iter()
            .rev()
            .fold(Polynomial::zero(), |acc, &a| acc * lin.clone() + Polynomial::constant(a))
    }

    pub fn pow(&self, k: usize) -> Self {
        (0..k).fold(Polynomial::one(), |acc, _| acc * self.clone())
    }

    /// Roots via eigenvalues of the companion matrix.
    pub fn roots(&self) -> Vec<Complex64> {
        let p = self.trimmed(0.0);
        let n = p.degree();
        if n == 0 {
            return Vec::new();
        }
        let lead = p.leading();
        let mut comp = DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            comp[(i, i - 1)] = 1.0;
        }
        for i in 0..n {
            comp[(i, n - 1)] = -p.coeffs[i] / lead;
        }
        linalg::eigenvalues(&comp)
    }

    /// Truncated power-series quotient `self / den` to `terms` coefficients
    /// (ascending). Requires `den(0) != 0`.
    pub fn series_div(&self, den: &Polynomial, terms: usize) -> Vec<f64> {
        let d0 = den.coeff(0);
        let mut q = vec![0.0; terms];
        for k in 0..terms {
            let mut acc = self.coeff(k);
            for j in 1..=k.min(den.degree()) {
                acc -= den.coeff(j) * q[k - j];
            }
            q[k] = acc / d0;
        }
        q
    }

    /// Euclidean division by leading terms: `self = q * div + r`, `deg r < deg div`.
    pub fn div_rem(&self, div: &Polynomial) -> (Polynomial, Polynomial) {
        let div = div.trimmed(0.0);
        let dn = div.degree();
        if self.degree() < dn {
            return (Polynomial::zero(), self.clone());
        }
        let mut rem = self.coeffs.clone();
        let mut quot = vec![0.0; self.degree() - dn + 1];
        for k in (0..quot.len()).rev() {
            let c = rem[k + dn] / div.leading();
            quot[k] = c;
            for j in 0..=dn {
                rem[k + j] -= c * div.coeffs[j];
            }
        }
        rem.truncate(dn.max(1));
        (Polynomial::new(quot), Polynomial::new(rem))
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(k, c)| match k {
                0 => format!("{c}"),
                1 => format!("{c}x"),
                _ => format!("{c}x^{k}"),
            })
            .collect();
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}

impl Add for Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: Polynomial) -> Polynomial {
        &self + &rhs
    }
}

impl Add<&Polynomial> for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: Polynomial) -> Polynomial {
        &self - &rhs
    }
}

impl Sub<&Polynomial> for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl Mul for Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: Polynomial) -> Polynomial {
        &self * &rhs
    }
}

impl Mul<&Polynomial> for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut v = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                v[i + j] += a * b;
            }
        }
        Polynomial::new(v)
    }
}
