//! Fixed-step simulation, disturbance generation, logging and trajectory metrics.

mod disturbance;
mod metrics;
mod rk4;
mod run;
mod signal;
mod trajectory;

pub use disturbance::{Disturbance, DisturbanceSpec};
pub use metrics::{burst_ratio, lyapunov_violations, metrics, MetricSpec, BURST_WINDOW, LYAPUNOV_REL_TOL};
pub use rk4::{rk4_integrate, rk4_step};
pub use run::{simulate_ct, simulate_dt, ContinuousSystem, DiscreteSystem, SimOptions, SimRun, DIVERGENCE_LIMIT};
pub use signal::{Signal, Sine};
pub use trajectory::{format_c_exp, Trajectory};
