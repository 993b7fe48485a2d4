use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::polynomial::Polynomial;
use super::transfer::TransferFunction;
use crate::error::{Error, Result};
use crate::linalg;

/// `ẋ = A x + B u`, `y = C x`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceLTI {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

impl StateSpaceLTI {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        linalg::require_square(&a, "A")?;
        let n = a.nrows();
        if n == 0 {
            return Err(Error::Dimension("state dimension must be at least 1".into()));
        }
        if b.nrows() != n {
            return Err(Error::Dimension(format!("B has {} rows, expected {n}", b.nrows())));
        }
        if c.ncols() != n {
            return Err(Error::Dimension(format!("C has {} columns, expected {n}", c.ncols())));
        }
        Ok(StateSpaceLTI { a, b, c })
    }

    /// Single-input system with full state output.
    pub fn single_input(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let n = a.nrows();
        let bm = DMatrix::from_column_slice(b.len(), 1, b.as_slice());
        Self::new(a, bm, DMatrix::identity(n, n))
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn derivative(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u
    }

    pub fn output(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.c * x
    }

    pub fn is_minimal(&self) -> bool {
        linalg::is_controllable(&self.a, &self.b)
            && linalg::is_observable(&self.a, &self.c.transpose())
    }

    /// SISO transfer function `C (sI - A)^{-1} B`.
    pub fn transfer_function(&self) -> Result<TransferFunction> {
        if self.inputs() != 1 || self.outputs() != 1 {
            return Err(Error::Dimension("transfer function requires a SISO system".into()));
        }
        TransferFunction::from_state_space(
            &self.a,
            &self.b.column(0).into_owned(),
            &self.c.row(0).transpose(),
        )
    }
}

/// Stable reference model `ẋ_m = A_m x_m + b_m r`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceModel {
    pub am: DMatrix<f64>,
    pub bm: DVector<f64>,
    pub wm: Option<TransferFunction>,
}

impl ReferenceModel {
    pub fn new(am: DMatrix<f64>, bm: DVector<f64>) -> Result<Self> {
        linalg::require_square(&am, "A_m")?;
        if bm.len() != am.nrows() {
            return Err(Error::Dimension(format!(
                "b_m has {} entries, A_m is {}x{}",
                bm.len(),
                am.nrows(),
                am.ncols()
            )));
        }
        linalg::require_hurwitz(&am)?;
        Ok(ReferenceModel { am, bm, wm: None })
    }

    pub fn with_transfer_function(mut self, wm: TransferFunction) -> Self {
        self.wm = Some(wm);
        self
    }

    pub fn n(&self) -> usize {
        self.am.nrows()
    }

    pub fn derivative(&self, xm: &DVector<f64>, r: f64) -> DVector<f64> {
        &self.am * xm + &self.bm * r
    }
}

/// Named nonlinearities available as NARMAX terms. Lags are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "fn", rename_all = "snake_case")]
pub enum NarmaxFunction {
    /// `tanh(y_{k-lag})`.
    TanhY { lag: usize },
    /// `sin(y_{k-lag})`.
    SinY { lag: usize },
    /// `y_{k-lag}^2 / (1 + y_{k-lag}^2)`.
    SquashedSquareY { lag: usize },
    /// `y_{k-y_lag} * tanh(u_{k-d-u_lag+1})`.
    YTanhU { y_lag: usize, u_lag: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NarmaxTerm {
    pub coeff: f64,
    #[serde(flatten)]
    pub function: NarmaxFunction,
}

/// Discrete NARMAX plant
/// `y_k = Σ_{i≥1} a_i y_{k-i} + Σ_{j≥0} b_j u_{k-d-j} + Σ_{i≥0} c_i w_{k-i} + Σ_l d_l f_l(·)`.
///
/// `a[0]` is `a_1`; `b[0]` is the leading input gain `β0`, which multiplies
/// `u_{k-d}`. An empty `c` means `C(z) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmaxPlant {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    #[serde(default)]
    pub c: Vec<f64>,
    pub d: usize,
    #[serde(default)]
    pub nonlinear: Vec<NarmaxTerm>,
}

impl ArmaxPlant {
    pub fn new(a: Vec<f64>, b: Vec<f64>, d: usize) -> Result<Self> {
        let p = ArmaxPlant {
            a,
            b,
            c: Vec::new(),
            d,
            nonlinear: Vec::new(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 1 {
            return Err(Error::InvalidParameter("delay d must be at least 1".into()));
        }
        match self.b.first() {
            Some(&b0) if b0 != 0.0 => {}
            _ => return Err(Error::InvalidParameter("leading input coefficient must be nonzero".into())),
        }
        if !self.a.iter().chain(&self.b).chain(&self.c).all(|v| v.is_finite()) {
            return Err(Error::NonFinite("plant coefficients".into()));
        }
        Ok(())
    }

    pub fn na(&self) -> usize {
        self.a.len()
    }

    pub fn beta0(&self) -> f64 {
        self.b[0]
    }

    /// `A(z) = 1 - a_1 z - ... - a_n z^n`.
    pub fn a_poly(&self) -> Polynomial {
        let mut v = vec![1.0];
        v.extend(self.a.iter().map(|x| -x));
        Polynomial::new(v)
    }

    /// `B(z) = b_0 + b_1 z + ...`.
    pub fn b_poly(&self) -> Polynomial {
        Polynomial::new(self.b.clone())
    }

    /// `C(z)`, defaulting to `1`.
    pub fn c_poly(&self) -> Polynomial {
        if self.c.is_empty() {
            Polynomial::one()
        } else {
            Polynomial::new(self.c.clone())
        }
    }

    /// Zeros of `B` in the forward-shift variable `q = 1/z`.
    pub fn b_zeros(&self) -> Vec<num_complex::Complex64> {
        let rev: Vec<f64> = self.b.iter().rev().copied().collect();
        Polynomial::new(rev).roots()
    }

    /// All zeros of `B` strictly inside the unit circle of the forward-shift
    /// variable.
    pub fn is_minimum_phase(&self) -> bool {
        self.b_zeros().iter().all(|z| z.norm() < 1.0)
    }

    /// Output `y_k` given histories ordered most recent first:
    /// `y_past[0] = y_{k-1}`, `u_past[0] = u_{k-1}`, `w[0] = w_k`.
    /// Missing history entries read as zero.
    pub fn output(&self, y_past: &[f64], u_past: &[f64], w: &[f64]) -> f64 {
        let at = |s: &[f64], i: usize| s.get(i).copied().unwrap_or(0.0);
        let mut y = 0.0;
        for (i, ai) in self.a.iter().enumerate() {
            y += ai * at(y_past, i);
        }
        for (j, bj) in self.b.iter().enumerate() {
            y += bj * at(u_past, self.d + j - 1);
        }
        if self.c.is_empty() {
            y += at(w, 0);
        } else {
            for (i, ci) in self.c.iter().enumerate() {
                y += ci * at(w, i);
            }
        }
        for term in &self.nonlinear {
            let f = match term.function {
                NarmaxFunction::TanhY { lag } => at(y_past, lag.saturating_sub(1)).tanh(),
                NarmaxFunction::SinY { lag } => at(y_past, lag.saturating_sub(1)).sin(),
                NarmaxFunction::SquashedSquareY { lag } => {
                    let v = at(y_past, lag.saturating_sub(1));
                    v * v / (1.0 + v * v)
                }
                NarmaxFunction::YTanhU { y_lag, u_lag } => {
                    at(y_past, y_lag.saturating_sub(1))
                        * at(u_past, self.d + u_lag.saturating_sub(1)).tanh()
                }
            };
            y += term.coeff * f;
        }
        y
    }

    /// History depth needed by [`ArmaxPlant::output`].
    pub fn history_depth(&self) -> usize {
        let nl = self
            .nonlinear
            .iter()
            .map(|t| match t.function {
                NarmaxFunction::TanhY { lag }
                | NarmaxFunction::SinY { lag }
                | NarmaxFunction::SquashedSquareY { lag } => lag,
                NarmaxFunction::YTanhU { y_lag, u_lag } => y_lag.max(self.d + u_lag),
            })
            .max()
            .unwrap_or(0);
        self.a.len().max(self.d + self.b.len()).max(self.c.len()).max(nl).max(1)
    }
}

/// Compact parameter set for nonlinearly parameterized plants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParameterSet {
    /// Axis-aligned box `lo ≤ θ ≤ hi`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Finite list of admissible parameter vectors.
    Finite(Vec<Vec<f64>>),
}

impl ParameterSet {
    pub fn validate(&self) -> Result<()> {
        match self {
            ParameterSet::Box { lo, hi } => {
                if lo.is_empty() || lo.len() != hi.len() {
                    return Err(Error::Dimension("box bounds must be nonempty and of equal length".into()));
                }
                if lo.iter().zip(hi).any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite()) {
                    return Err(Error::InvalidParameter("empty or unbounded parameter box".into()));
                }
            }
            ParameterSet::Finite(pts) => {
                let Some(first) = pts.first() else {
                    return Err(Error::InvalidParameter("empty parameter set".into()));
                };
                if first.is_empty() || pts.iter().any(|p| p.len() != first.len()) {
                    return Err(Error::Dimension("finite parameter set has ragged points".into()));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            ParameterSet::Box { lo, .. } => lo.len(),
            ParameterSet::Finite(pts) => pts.first().map_or(0, Vec::len),
        }
    }

    /// Extreme points: box corners (lexicographic, `lo` before `hi`) or the
    /// listed points.
    pub fn vertices(&self) -> Vec<DVector<f64>> {
        match self {
            ParameterSet::Box { lo, hi } => {
                let n = lo.len();
                (0..1usize << n)
                    .map(|mask| {
                        DVector::from_fn(n, |i, _| {
                            if mask >> (n - 1 - i) & 1 == 1 {
                                hi[i]
                            } else {
                                lo[i]
                            }
                        })
                    })
                    .collect()
            }
            ParameterSet::Finite(pts) => pts.iter().map(|p| DVector::from_vec(p.clone())).collect(),
        }
    }

    /// Nearest point of the set (Euclidean).
    pub fn project(&self, theta: &DVector<f64>) -> DVector<f64> {
        match self {
            ParameterSet::Box { lo, hi } => {
                DVector::from_fn(theta.len(), |i, _| theta[i].clamp(lo[i], hi[i]))
            }
            ParameterSet::Finite(pts) => {
                let mut best = DVector::from_vec(pts[0].clone());
                let mut bd = (&best - theta).norm();
                for p in &pts[1..] {
                    let v = DVector::from_vec(p.clone());
                    let d = (&v - theta).norm();
                    if d < bd {
                        bd = d;
                        best = v;
                    }
                }
                best
            }
        }
    }

    pub fn contains(&self, theta: &DVector<f64>, tol: f64) -> bool {
        (self.project(theta) - theta).norm() <= tol
    }
}

/// Curvature of the nonlinearity in the unknown parameter over the parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convexity {
    Convex,
    Concave,
    /// Affine in the parameter; a special case of both.
    Linear,
    General,
}

pub type Dynamics = Arc<dyn Fn(&DVector<f64>, &DVector<f64>, f64, f64) -> DVector<f64> + Send + Sync>;

/// `ẋ = f(x, θ, u, t)` with `θ ∈ Θs`.
#[derive(Clone)]
pub struct NonlinearPlant {
    pub n: usize,
    pub f: Dynamics,
    pub theta_set: ParameterSet,
    pub convexity: Vec<Convexity>,
}

impl NonlinearPlant {
    pub fn new(n: usize, f: Dynamics, theta_set: ParameterSet, convexity: Vec<Convexity>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Dimension("state dimension must be at least 1".into()));
        }
        theta_set.validate()?;
        if convexity.is_empty() {
            return Err(Error::InvalidParameter("at least one convexity tag required".into()));
        }
        Ok(NonlinearPlant {
            n,
            f,
            theta_set,
            convexity,
        })
    }

    pub fn derivative(&self, x: &DVector<f64>, theta: &DVector<f64>, u: f64, t: f64) -> DVector<f64> {
        (self.f)(x, theta, u, t)
    }
}

impl fmt::Debug for NonlinearPlant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonlinearPlant")
            .field("n", &self.n)
            .field("theta_set", &self.theta_set)
            .field("convexity", &self.convexity)
            .finish_non_exhaustive()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn armax_output_uses_delay() {
        let p = ArmaxPlant::new(vec![0.5], vec![2.0], 2).unwrap();
        // y_k = 0.5 y_{k-1} + 2 u_{k-2} + w_k
        let y = p.output(&[1.0], &[10.0, 3.0], &[0.25]);
        assert_eq!(y, 0.5 + 6.0 + 0.25);
    }

    #[test]
    fn minimum_phase_test_uses_forward_zeros() {
        assert!(ArmaxPlant::new(vec![0.5], vec![1.0, 0.5], 1).unwrap().is_minimum_phase());
        assert!(!ArmaxPlant::new(vec![0.5], vec![1.0, -2.0], 1).unwrap().is_minimum_phase());
    }

    #[test]
    fn zero_leading_gain_rejected() {
        assert!(ArmaxPlant::new(vec![0.5], vec![0.0, 1.0], 1).is_err());
        assert!(ArmaxPlant::new(vec![0.5], vec![1.0], 0).is_err());
    }

    #[test]
    fn box_vertices_and_projection() {
        let s = ParameterSet::Box {
            lo: vec![0.0, -1.0],
            hi: vec![1.0, 1.0],
        };
        let v = s.vertices();
        assert_eq!(v.len(), 4);
        assert_eq!(v[0], DVector::from_vec(vec![0.0, -1.0]));
        let p = s.project(&DVector::from_vec(vec![2.0, 0.5]));
        assert_eq!(p, DVector::from_vec(vec![1.0, 0.5]));
    }

    #[test]
    fn reference_model_requires_hurwitz() {
        let am = DMatrix::from_row_slice(1, 1, &[1.0]);
        assert!(ReferenceModel::new(am, DVector::from_vec(vec![1.0])).is_err());
    }
}
