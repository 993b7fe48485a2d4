//! Plant and reference-model descriptions and the operator-polynomial
//! algebra used to design fixed controllers for them.

mod design;
mod plant;
mod polynomial;
mod transfer;

pub use design::{
    bezout_solve, matching_solve, nonminimal_realize, nonminimal_transfer, output_matching,
    OutputMatch,
};
pub use plant::{
    ArmaxPlant, Convexity, Dynamics, NarmaxFunction, NarmaxTerm, NonlinearPlant, ParameterSet,
    ReferenceModel, StateSpaceLTI,
};
pub use polynomial::Polynomial;
pub use transfer::{resultant, Domain, TransferFunction};
