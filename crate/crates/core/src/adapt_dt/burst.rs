use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::adapt_dt::str::{StrLoop, StrState};
use crate::error::{Error, Result};
use crate::model::ArmaxPlant;
use crate::sim::{burst_ratio, simulate_dt, DisturbanceSpec, SimRun, Signal, DIVERGENCE_LIMIT};

/// Closed-loop stability of the frozen first-order STR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityClass {
    Stable,
    Critical,
    Unstable,
}

/// Frozen-parameter closed loop of `y_{k+1} = a y_k + b u_k` under
/// `u_k = −θ_1 y_k + θ_2 y*_{k+1}`: `y_{k+1} = g y_k + h y*_{k+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedLoopGain {
    pub g: f64,
    pub h: f64,
    pub class: StabilityClass,
    /// `θ_1` at which `g = −1`.
    pub theta_burst: f64,
}

const CRITICAL_TOL: f64 = 1e-12;

pub fn closed_loop_gain(theta1: f64, theta2: f64, a: f64, b: f64) -> Result<ClosedLoopGain> {
    if b == 0.0 || !b.is_finite() {
        return Err(Error::InvalidParameter(format!("input gain b must be nonzero and finite, got {b}")));
    }
    let g = a - b * theta1;
    let class = if (g.abs() - 1.0).abs() <= CRITICAL_TOL {
        StabilityClass::Critical
    } else if g.abs() < 1.0 {
        StabilityClass::Stable
    } else {
        StabilityClass::Unstable
    };
    Ok(ClosedLoopGain {
        g,
        h: b * theta2,
        class,
        theta_burst: (a + 1.0) / b,
    })
}

/// First-order STR at steady tracking with `θ_c` on the equilibrium set
/// `θ_2 − θ_1 = (1 − a)/b` near `θ^b`. Constant setpoint gives no excitation
/// to move it, so a pulse rings with `g ≈ −1` before learning re-converges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurstScenario {
    pub a: f64,
    pub b: f64,
    pub setpoint: f64,
    pub theta0: [f64; 2],
    pub gamma: f64,
    pub c: f64,
    pub noise: DisturbanceSpec,
    pub pulse_step: usize,
    pub pulse_amplitude: f64,
    pub steps: usize,
}

impl Default for BurstScenario {
    fn default() -> Self {
        BurstScenario {
            a: 0.5,
            b: 1.0,
            setpoint: 1.0,
            theta0: [1.45, 1.95],
            gamma: 1.0,
            c: 1.0,
            noise: DisturbanceSpec::BoundedNoise { vmax: 1e-6, seed: 7, hold: 0.0 },
            pulse_step: 2000,
            pulse_amplitude: 0.5,
            steps: 6000,
        }
    }
}

impl BurstScenario {
    pub fn build(&self) -> Result<StrLoop> {
        let plant = ArmaxPlant::new(vec![self.a], vec![self.b], 1)?;
        let state = StrState::new(1, 0, 1, DVector::from_row_slice(&self.theta0), self.gamma, self.c)?;
        let pulse = DisturbanceSpec::Pulse {
            t0: self.pulse_step as f64,
            width: 1.0,
            amplitude: self.pulse_amplitude,
        };
        let lp = StrLoop::new(plant, state, Signal::constant(self.setpoint), &self.noise, &pulse)?;
        let u_eq = (1.0 - self.a) * self.setpoint / self.b;
        Ok(lp.with_operating_point(self.setpoint, u_eq))
    }

    pub fn run(&self) -> Result<SimRun> {
        let mut sys = self.build()?;
        simulate_dt(&mut sys, self.steps, DIVERGENCE_LIMIT)
    }

    /// Burst ratio of `e` around the pulse over `window` samples.
    pub fn ratio(&self, run: &SimRun, window: usize) -> Result<f64> {
        burst_ratio(run.trajectory.channel("e")?, self.pulse_step, window)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gain_classes() {
        let c = closed_loop_gain(1.5, 1.0, 0.5, 1.0).unwrap();
        assert_eq!(c.g, -1.0);
        assert_eq!(c.class, StabilityClass::Critical);
        assert_eq!(c.theta_burst, 1.5);
        let s = closed_loop_gain(0.5, 1.0, 0.5, 1.0).unwrap();
        assert_eq!(s.g, 0.0);
        assert_eq!(s.class, StabilityClass::Stable);
        assert_eq!(closed_loop_gain(2.0, 1.0, 0.5, 1.0).unwrap().class, StabilityClass::Unstable);
        assert!(closed_loop_gain(1.0, 1.0, 0.5, 0.0).is_err());
    }
}
