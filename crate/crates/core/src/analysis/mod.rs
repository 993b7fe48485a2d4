//! Stability and excitation certificates.

mod averaging;
mod lyapunov;
mod pe;
mod spr;

pub use averaging::{averaging_stability_check, AveragingReport, SpectralLine};
pub use lyapunov::{kyl_solve, lyapunov_residual, lyapunov_solve, robustness_margin, LyapunovCertificate};
pub use pe::{pe_epsilon0, pe_level, pe_level_discrete, PeReport};
pub use spr::{
    hyperminimum_phase_check, passification_feasible, spr_check, spr_frequency_grid, Passification,
    SprReport, SPR_EPSILONS,
};
