//! Discrete-time adaptive control: minimum-variance and self-tuning regulators.

mod burst;
mod mv;
mod str;

pub use burst::{closed_loop_gain, BurstScenario, ClosedLoopGain, StabilityClass};
pub use mv::{min_variance_control_known, mv_polynomials, MinVarianceLoop};
pub use str::{str_step, str_truth, StrLoop, StrOutput, StrState};
