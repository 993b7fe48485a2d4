//! Continuous-time adaptive laws and the closed loops they drive.

mod augmented;
mod hot;
mod minmax;
mod mit;
mod mrac;
mod passification;
mod rbf;
mod robust;
mod saturation;
mod speed_gradient;
mod spr_output;

pub use augmented::{augmented_error_rhs, default_normalizer, AugmentedDerivatives, AugmentedErrorLoop, AugmentedFilters};
pub use hot::{hot_output_controller_rhs, HotController, HotControllerDerivatives, HotLoop};
pub use minmax::{
    minmax_nlp_control, minmax_objective, minmax_solve, smooth_sign, MinMaxControllerState, MinMaxLoop, MinMaxOutput,
    MinMaxSolution, ParamFn, ParamGrad, ParametricNonlinearity,
};
pub use mit::mit_rule_rhs;
pub use mrac::{mrac_lyapunov, mrac_state_rhs, DisturbanceEntry, MracDerivatives, MracLoop, MracState};
pub use passification::{passification_controller_rhs, PassificationLoop};
pub use rbf::rbf_features;
pub use robust::{default_dead_zone, project_to_ball, robust_mod, RobustMod, DEFAULT_SIGMA};
pub use saturation::{saturate, saturated_mrac_rhs, SaturatedMracLoop, SaturationDerivatives, SaturationLimits};
pub use speed_gradient::{
    speed_gradient_rhs, BregmanGenerator, BregmanScaling, ControlLaw, GeneratorHessian, GoalGradient, GoalRate,
    SpeedGradientLaw, SpeedGradientLoop,
};
pub use spr_output::{mrac_output_spr_rhs, OutputFbState, SprDerivatives, SprOutputLoop};
