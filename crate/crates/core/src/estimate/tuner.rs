use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::Polynomial;

/// High-order tuner: `k̇' = -γ e1 ω'`, and per component
/// `ẋ_i = (A x_i + b k'_i) f(ω'_i)`, `k_i = cᵀx_i`, with
/// `f(x) = 1 + μx²` and `cᵀ(sI - A)⁻¹b = α(0)/α(s)`.
///
/// `k` is `p = deg α` times differentiable; its derivatives are available
/// from [`HighOrderTunerState::k_derivatives`] without differentiating any
/// measured signal.
#[derive(Debug, Clone, PartialEq)]
pub struct HighOrderTunerState {
    pub k_prime: DVector<f64>,
    /// One filter state of dimension `p` per parameter.
    pub x: Vec<DVector<f64>>,
    pub mu: f64,
    /// Gain on the first-level law; the unnormalized law has `γ = 1`.
    pub gamma: f64,
    /// Monic stable polynomial of degree `p`.
    pub alpha: Polynomial,
    pub a_f: DMatrix<f64>,
    pub b_f: DVector<f64>,
    pub c: DVector<f64>,
}

/// Derivatives produced by [`hot_rhs`].
#[derive(Debug, Clone, PartialEq)]
pub struct HotDerivatives {
    pub k_prime: DVector<f64>,
    pub x: Vec<DVector<f64>>,
    /// Current tuner output `k`.
    pub k: DVector<f64>,
}

impl HighOrderTunerState {
    /// Tuner with filters at their steady state for `k'(0)`, so `k(0) = k'(0)`.
    pub fn new(k_prime: DVector<f64>, alpha: Polynomial, mu: f64) -> Result<Self> {
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!("μ must be nonnegative, got {mu}")));
        }
        let alpha = alpha.scale(1.0 / alpha.leading());
        if alpha.roots().iter().any(|r| r.re >= 0.0) {
            return Err(Error::NotHurwitz {
                max_real: alpha.roots().iter().map(|r| r.re).fold(f64::NEG_INFINITY, f64::max),
            });
        }
        let p = alpha.degree();
        let mut a_f = DMatrix::zeros(p, p);
        for i in 0..p.saturating_sub(1) {
            a_f[(i, i + 1)] = 1.0;
        }
        for j in 0..p {
            a_f[(p - 1, j)] = -alpha.coeff(j);
        }
        let mut b_f = DVector::zeros(p);
        let mut c = DVector::zeros(p);
        if p > 0 {
            b_f[p - 1] = 1.0;
            c[0] = alpha.coeff(0);
        }
        let mut s = HighOrderTunerState {
            x: Vec::new(),
            k_prime,
            mu,
            gamma: 1.0,
            alpha,
            a_f,
            b_f,
            c,
        };
        s.x = s.steady_state(&s.k_prime);
        Ok(s)
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!("γ must be positive, got {gamma}")));
        }
        self.gamma = gamma;
        Ok(self)
    }

    /// Filter states `x_i = -A⁻¹ b k'_i` giving `k = k'`.
    pub fn steady_state(&self, k_prime: &DVector<f64>) -> Vec<DVector<f64>> {
        let p = self.p();
        if p == 0 {
            return vec![DVector::zeros(0); k_prime.len()];
        }
        let sol = self
            .a_f
            .clone()
            .lu()
            .solve(&self.b_f)
            .unwrap_or_else(|| DVector::zeros(p));
        k_prime.iter().map(|kp| -&sol * *kp).collect()
    }

    pub fn p(&self) -> usize {
        self.alpha.degree()
    }

    pub fn dim(&self) -> usize {
        self.k_prime.len()
    }

    /// Tuner output `k`.
    pub fn k(&self) -> DVector<f64> {
        if self.p() == 0 {
            return self.k_prime.clone();
        }
        DVector::from_fn(self.dim(), |i, _| self.c.dot(&self.x[i]))
    }

    fn f(&self, w: f64) -> f64 {
        1.0 + self.mu * w * w
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.p();
        if self.x.len() != self.dim() || self.x.iter().any(|x| x.len() != p) {
            return Err(Error::Dimension(format!(
                "tuner needs {} filter states of dimension {p}",
                self.dim()
            )));
        }
        Ok(())
    }

    /// `[k, k̇, ..., k^{(p)}]` given `ω'` and its first derivatives
    /// (`omega_prime_jets[j] = d^j ω'/dt^j`, at least `max(p, 1)` entries).
    ///
    /// Uses the Taylor recursion of the filter ODE. Derivatives of `k'` above
    /// the first never reach `k^{(p)}` because `cᵀA^j b = 0` for `j < p - 1`.
    pub fn k_derivatives(&self, e1: f64, omega_prime_jets: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
        self.validate()?;
        let p = self.p();
        let n = self.dim();
        if omega_prime_jets.len() < p.max(1) || omega_prime_jets.iter().any(|w| w.len() != n) {
            return Err(Error::Dimension(format!(
                "need {} derivatives of ω' of dimension {n}",
                p.max(1)
            )));
        }
        let mut out = vec![DVector::zeros(n); p + 1];
        if p == 0 {
            out[0] = self.k_prime.clone();
            return Ok(out);
        }
        let mut fact = vec![1.0; p + 1];
        for j in 1..=p {
            fact[j] = fact[j - 1] * j as f64;
        }
        for i in 0..n {
            let w: Vec<f64> = (0..p).map(|j| omega_prime_jets[j][i] / fact[j]).collect();
            let g: Vec<f64> = (0..p)
                .map(|l| {
                    let sq: f64 = (0..=l).map(|a| w[a] * w[l - a]).sum();
                    if l == 0 {
                        1.0 + self.mu * sq
                    } else {
                        self.mu * sq
                    }
                })
                .collect();
            let mut kp = vec![0.0; p + 1];
            kp[0] = self.k_prime[i];
            kp[1] = -self.gamma * e1 * w[0];
            let mut xs: Vec<DVector<f64>> = vec![self.x[i].clone()];
            for j in 0..p {
                let mut acc = DVector::zeros(p);
                for l in 0..=j {
                    acc += (&self.a_f * &xs[j - l] + &self.b_f * kp[j - l]) * g[l];
                }
                xs.push(acc / (j + 1) as f64);
            }
            for j in 0..=p {
                out[j][i] = fact[j] * self.c.dot(&xs[j]);
            }
        }
        Ok(out)
    }
}

/// First-level and filter derivatives plus the current `k`.
pub fn hot_rhs(state: &HighOrderTunerState, e1: f64, omega_prime: &DVector<f64>) -> Result<HotDerivatives> {
    state.validate()?;
    if omega_prime.len() != state.dim() {
        return Err(Error::Dimension(format!(
            "ω' has {} entries, tuner has {}",
            omega_prime.len(),
            state.dim()
        )));
    }
    let k_prime = -omega_prime * (state.gamma * e1);
    let x = (0..state.dim())
        .map(|i| (&state.a_f * &state.x[i] + &state.b_f * state.k_prime[i]) * state.f(omega_prime[i]))
        .collect();
    Ok(HotDerivatives {
        k_prime,
        x,
        k: state.k(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_dc_gain() {
        let s = HighOrderTunerState::new(
            DVector::from_vec(vec![1.5, -2.0]),
            Polynomial::from_real_roots(&[-1.0, -3.0]),
            0.5,
        )
        .unwrap();
        let k = s.k();
        assert!((k[0] - 1.5).abs() < 1e-14 && (k[1] + 2.0).abs() < 1e-14);
        let d = hot_rhs(&s, 0.0, &DVector::from_vec(vec![0.3, -0.1])).unwrap();
        assert!(d.x.iter().all(|x| x.norm() < 1e-14));
    }

    #[test]
    fn unstable_alpha_rejected() {
        let r = HighOrderTunerState::new(DVector::zeros(1), Polynomial::new(vec![-1.0, 1.0]), 0.0);
        assert!(r.is_err());
    }

    #[test]
    fn first_derivative_matches_rhs() {
        let mut s = HighOrderTunerState::new(
            DVector::from_vec(vec![0.7]),
            Polynomial::from_real_roots(&[-2.0]),
            1.0,
        )
        .unwrap();
        s.x[0][0] = 0.1;
        let w = DVector::from_vec(vec![0.4]);
        let d = hot_rhs(&s, 0.5, &w).unwrap();
        let jets = s.k_derivatives(0.5, &[w]).unwrap();
        assert!((jets[1][0] - s.c.dot(&d.x[0])).abs() < 1e-14);
    }
}
