//! Recursive parameter estimators.
//!
//! Continuous-time laws return derivatives; discrete-time laws return the
//! next state.

mod gain;
mod gradient;
mod loops;
mod observer;
mod perceptron;
mod rls;
mod sa;
mod tuner;

pub use gain::Gain;
pub use gradient::{gradient_rhs, prediction_loss, GradientEstimatorState};
pub use loops::{Estimator, ObserverLoop, RegressionLoop, RegressorSource};
pub use observer::{observer_rhs, ObserverDerivatives, ObserverState};
pub use perceptron::{classifies, perceptron_step, PerceptronSign};
pub use rls::{rls_step, RlsEstimatorState, RLS_MIN_EIGENVALUE};
pub use sa::{sa_step, SaEstimatorState, SaNormalizer, SaStepSize};
pub use tuner::{hot_rhs, HighOrderTunerState, HotDerivatives};
