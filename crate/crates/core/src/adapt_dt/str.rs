use std::collections::VecDeque;

use nalgebra::DVector;

use crate::adapt_dt::mv::mv_polynomials;
use crate::error::{Error, Result};
use crate::model::ArmaxPlant;
use crate::sim::{Disturbance, DisturbanceSpec, DiscreteSystem, Signal};

/// Self-tuning regulator in predictor form.
///
/// `θ_c = [α_0..α_{n−1}, β_1..β_{m+d−1}, 1/β_0]` with `G/β_0 = Σα_i z^i` and
/// `FB = β_0(1 + Σβ_j z^j)`. The regressor
/// `φ_{c,k} = [−y_k..−y_{k−n+1}, −u_{k−1}..−u_{k−m−d+1}, y_{k+d}]` gives
/// `u_k = φ_{c,k}ᵀθ_c*` for the noise-free plant.
#[derive(Debug, Clone, PartialEq)]
pub struct StrState {
    pub theta_c: DVector<f64>,
    /// SA gain in `(0, 2)`.
    pub gamma: f64,
    /// Normalizer constant, `> 0`.
    pub c: f64,
    pub n: usize,
    pub m: usize,
    pub d: usize,
    /// Known `sign(β0)`; with `beta0_min`, `1/β0` is projected onto
    /// `sign·[0, 1/beta0_min]`.
    pub beta0_sign: f64,
    pub beta0_min: Option<f64>,
    /// `y_k, y_{k−1}, ...`
    y: VecDeque<f64>,
    /// `u_{k−1}, u_{k−2}, ...`
    u: VecDeque<f64>,
    /// `y*_{k+d}, y*_{k+d−1}, ...`
    y_star: VecDeque<f64>,
}

/// Command and diagnostics from one [`str_step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrOutput {
    pub u: f64,
    /// `u_{k−d} − φ_{c,k−d}ᵀθ_{c,k−1}`.
    pub prediction_error: f64,
}

impl StrState {
    /// Orders `n = deg A`, `m = deg B`, delay `d`; histories start at zero.
    pub fn new(n: usize, m: usize, d: usize, theta_c: DVector<f64>, gamma: f64, c: f64) -> Result<Self> {
        let s = StrState {
            theta_c,
            gamma,
            c,
            n,
            m,
            d,
            beta0_sign: 1.0,
            beta0_min: None,
            y: VecDeque::new(),
            u: VecDeque::new(),
            y_star: VecDeque::new(),
        };
        s.validate()?;
        Ok(s)
    }

    /// Orders taken from `plant`.
    pub fn for_plant(plant: &ArmaxPlant, theta_c: DVector<f64>, gamma: f64, c: f64) -> Result<Self> {
        Self::new(plant.na(), plant.b.len() - 1, plant.d, theta_c, gamma, c)
    }

    pub fn with_beta0_prior(mut self, sign: f64, min_magnitude: Option<f64>) -> Result<Self> {
        if sign != 1.0 && sign != -1.0 {
            return Err(Error::InvalidParameter(format!("sign(β0) must be ±1, got {sign}")));
        }
        if let Some(b) = min_magnitude {
            if !(b > 0.0) || !b.is_finite() {
                return Err(Error::InvalidParameter(format!("|β0| lower bound must be positive, got {b}")));
            }
        }
        self.beta0_sign = sign;
        self.beta0_min = min_magnitude;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.n + self.m + self.d
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 2.0) {
            return Err(Error::InvalidParameter(format!("gamma must lie in (0, 2), got {}", self.gamma)));
        }
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::InvalidParameter(format!("c must be positive, got {}", self.c)));
        }
        if self.n == 0 || self.d == 0 {
            return Err(Error::InvalidParameter("orders n and d must be at least 1".into()));
        }
        if self.theta_c.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "θ_c needs n + m + d = {} entries, got {}",
                self.dim(),
                self.theta_c.len()
            )));
        }
        Ok(())
    }

    fn hist(q: &VecDeque<f64>, i: usize) -> f64 {
        q.get(i).copied().unwrap_or(0.0)
    }

    /// Regressor with the outputs and inputs shifted back by `lag` samples
    /// and `last` in the final slot.
    fn regressor(&self, lag: usize, last: f64) -> DVector<f64> {
        let mut phi = DVector::zeros(self.dim());
        for i in 0..self.n {
            phi[i] = -Self::hist(&self.y, lag + i);
        }
        for j in 0..self.m + self.d - 1 {
            phi[self.n + j] = -Self::hist(&self.u, lag + j);
        }
        phi[self.dim() - 1] = last;
        phi
    }

    fn project(&mut self) {
        let i = self.dim() - 1;
        let s = self.beta0_sign;
        let hi = self.beta0_min.map_or(f64::INFINITY, |b| 1.0 / b);
        self.theta_c[i] = s * (s * self.theta_c[i]).clamp(0.0, hi);
    }

    pub fn history_len(&self) -> usize {
        self.n + 2 * self.d + self.m + 1
    }

    /// Fills the histories with a constant operating point.
    pub fn seed_history(&mut self, y: f64, u: f64, y_star: f64) {
        let depth = self.history_len();
        self.y = std::iter::repeat_n(y, depth).collect();
        self.u = std::iter::repeat_n(u, depth).collect();
        self.y_star = std::iter::repeat_n(y_star, depth).collect();
    }
}

/// One STR sample: records `y_k` and the applied `u_{k−1}`, updates
/// `θ_c` from `φ_{c,k−d}`, and returns `u_k = φ_kᵀθ_{c,k}` for the setpoint
/// `y*_{k+d}`.
pub fn str_step(state: &mut StrState, y_k: f64, u_prev: f64, y_star_ahead: f64) -> Result<StrOutput> {
    state.validate()?;
    if !(y_k.is_finite() && u_prev.is_finite() && y_star_ahead.is_finite()) {
        return Err(Error::NonFinite("STR input".into()));
    }
    let depth = state.history_len();
    state.y.push_front(y_k);
    state.u.push_front(u_prev);
    state.y_star.push_front(y_star_ahead);
    state.y.truncate(depth);
    state.u.truncate(depth);
    state.y_star.truncate(depth);
    let d = state.d;
    // φ_{c,k−d}: outputs from y_{k−d}, inputs from u_{k−d−1}, y_k last.
    let phi = state.regressor(d, y_k);
    let u_kd = StrState::hist(&state.u, d - 1);
    let prediction_error = u_kd - phi.dot(&state.theta_c);
    let gain = state.gamma / (state.c + phi.norm_squared());
    state.theta_c += phi * (gain * prediction_error);
    state.project();
    let u = state.regressor(0, y_star_ahead).dot(&state.theta_c);
    Ok(StrOutput { u, prediction_error })
}

/// `θ_c*` of the noise-free plant.
pub fn str_truth(plant: &ArmaxPlant) -> Result<DVector<f64>> {
    if !plant.c.is_empty() && plant.c_poly() != crate::model::Polynomial::one() {
        return Err(Error::Unsupported("predictor-form truth assumes C(z) = 1".into()));
    }
    let (_, g, bf) = mv_polynomials(plant)?;
    let b0 = bf.coeff(0);
    let n = plant.na();
    let m = plant.b.len() - 1;
    let d = plant.d;
    let mut t = DVector::zeros(n + m + d);
    for i in 0..n {
        t[i] = g.coeff(i) / b0;
    }
    for j in 1..m + d {
        t[n + j - 1] = bf.coeff(j) / b0;
    }
    t[n + m + d - 1] = 1.0 / b0;
    Ok(t)
}

/// ARMAX plant under the STR with an additive output disturbance
/// `w_k = noise_k + pulse_k`.
#[derive(Debug, Clone)]
pub struct StrLoop {
    pub plant: ArmaxPlant,
    pub state: StrState,
    pub setpoint: Signal,
    noise: Disturbance,
    pulse: Disturbance,
    y: Vec<f64>,
    u: Vec<f64>,
    w: Vec<f64>,
}

impl StrLoop {
    pub fn new(
        plant: ArmaxPlant,
        state: StrState,
        setpoint: Signal,
        noise: &DisturbanceSpec,
        pulse: &DisturbanceSpec,
    ) -> Result<Self> {
        plant.validate()?;
        state.validate()?;
        setpoint.validate()?;
        let (n, m) = (plant.na(), plant.b.len() - 1);
        if state.n != n || state.m != m || state.d != plant.d {
            return Err(Error::Dimension(format!(
                "STR orders (n, m, d) = ({}, {}, {}) but plant has ({n}, {m}, {})",
                state.n, state.m, state.d, plant.d
            )));
        }
        if plant.beta0() == 0.0 {
            return Err(Error::InvalidParameter("β0 must be nonzero".into()));
        }
        Ok(StrLoop {
            plant,
            state,
            setpoint,
            noise: Disturbance::new(noise)?,
            pulse: Disturbance::new(pulse)?,
            y: Vec::new(),
            u: Vec::new(),
            w: Vec::new(),
        })
    }

    /// Starts the plant and the estimator at the constant operating point
    /// `(y, u)` instead of at rest.
    pub fn with_operating_point(mut self, y: f64, u: f64) -> Self {
        let depth = self.plant.history_depth() + self.plant.d + self.plant.b.len() + 2;
        self.y = vec![y; depth];
        self.u = vec![u; depth];
        self.w = vec![0.0; depth];
        self.state.seed_history(y, u, self.setpoint.eval(0.0));
        self
    }

    /// First-order plant `y_{k+1} = a y_k + b u_k`, where the closed-loop
    /// gain `g = a − bθ_{c1}` is meaningful.
    fn first_order(&self) -> Option<(f64, f64)> {
        (self.plant.na() == 1 && self.plant.b.len() == 1 && self.plant.d == 1).then(|| (self.plant.a[0], self.plant.b[0]))
    }
}

impl DiscreteSystem for StrLoop {
    fn channel_names(&self) -> Vec<String> {
        let mut names: Vec<String> = ["y", "u", "y_star", "e", "w", "pred_err"].map(String::from).to_vec();
        names.extend((0..self.state.dim()).map(|i| format!("theta_c{i}")));
        if self.first_order().is_some() {
            names.push("g".into());
        }
        names
    }

    fn step(&mut self, k: usize) -> Result<Vec<f64>> {
        let t = k as f64;
        let w = self.noise.sample(t) + self.pulse.sample(t);
        self.w.insert(0, w);
        let y = self.plant.output(&self.y, &self.u, &self.w);
        let u_prev = self.u.first().copied().unwrap_or(0.0);
        let ahead = self.setpoint.eval(t + self.plant.d as f64);
        let out = str_step(&mut self.state, y, u_prev, ahead)?;
        self.y.insert(0, y);
        self.u.insert(0, out.u);
        let depth = self.plant.history_depth() + self.plant.d + self.plant.b.len() + 2;
        self.y.truncate(depth);
        self.u.truncate(depth);
        self.w.truncate(depth);
        let ys = self.setpoint.eval(t);
        let mut row = vec![y, out.u, ys, y - ys, w, out.prediction_error];
        row.extend(self.state.theta_c.iter());
        if let Some((a, b)) = self.first_order() {
            row.push(a - b * self.state.theta_c[0]);
        }
        Ok(row)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sa_update_substitution() {
        // n = 1, m = 0, d = 1: φ_{c,k−1} = [−y_{k−1}, y_k].
        let mut s = StrState::new(1, 0, 1, DVector::zeros(2), 1.0, 1.0).unwrap();
        // k = 0 with zero history: φ = [0, y_0] = [0, 1], u_{−1} = 2 is
        // supplied as the applied input of the previous sample.
        s.u.push_front(0.0);
        let out = str_step(&mut s, 1.0, 2.0, 0.0).unwrap();
        // y_0 = 1 with applied u_{−1} = 2: φ = [0, 1], θ = 1/(1 + 1)·φ·2.
        assert!((s.theta_c[1] - 1.0).abs() < 1e-15);
        assert_eq!(s.theta_c[0], 0.0);
        assert_eq!(out.prediction_error, 2.0);
    }

    #[test]
    fn gamma_bounds() {
        assert!(StrState::new(1, 0, 1, DVector::zeros(2), 2.0, 1.0).is_err());
        assert!(StrState::new(1, 0, 1, DVector::zeros(2), 0.0, 1.0).is_err());
        assert!(StrState::new(1, 0, 1, DVector::zeros(2), 1.0, 0.0).is_err());
    }

    #[test]
    fn truth_first_order() {
        let p = ArmaxPlant::new(vec![0.5], vec![2.0], 1).unwrap();
        let t = str_truth(&p).unwrap();
        assert!((t[0] - 0.25).abs() < 1e-15 && (t[1] - 0.5).abs() < 1e-15);
    }
}
