//! Adaptive control and parameter learning.
//!
//! The crate is organized by concern:
//!
//! - [`model`]: plant and reference-model types plus the operator-polynomial
//!   algebra (Bezout/Diophantine solves, matching conditions, nonminimal
//!   realizations).
//! - [`analysis`]: Lyapunov and Kalman–Yakubovich solves, SPR and
//!   hyperminimum-phase tests, passification, persistent-excitation levels and
//!   the averaging-based spectral test.
//! - [`estimate`]: gradient, stochastic-approximation and least-squares
//!   estimators, the adaptive observer, the high-order tuner and the
//!   perceptron-style classifier update.
//! - [`adapt_ct`]: continuous-time adaptive laws (MRAC variants, robust
//!   modifications, saturation handling, speed-gradient and min-max control).
//! - [`adapt_dt`]: minimum-variance control, the self-tuning regulator and the
//!   bursting machinery.
//! - [`sim`]: fixed-step RK4 simulation, disturbances, trajectories, metrics.
//!
//! Continuous-time laws only produce derivatives; discrete-time laws produce
//! one step. Integration and logging are owned by [`sim`].

pub mod adapt_ct;
pub mod adapt_dt;
pub mod analysis;
pub mod error;
pub mod estimate;
pub mod linalg;
pub mod model;
pub mod sim;

pub use error::{Error, Result};
