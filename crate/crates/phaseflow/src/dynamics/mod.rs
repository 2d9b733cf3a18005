//! Reduced time-dependent solvers and the interface-condition residual
//! machinery: a radial two-phase heat solver with a lumped surface heat
//! capacity (the fixed-interface sector of the model), a multi-droplet
//! coarsening integrator driven by the linearized Gibbs–Thomson law, and the
//! pointwise residual evaluator for the full set of interface conditions.

pub mod radial;
pub mod ripening;
pub mod snapshot;

pub use radial::{radial_step, simulate_radial, RadialGrid, RadialState, RadialTrajectory};
pub use ripening::{
    ripening_jacobian, ripening_rhs, simulate_ripening, RipeningContext, RipeningTrajectory,
};
pub use snapshot::{compatibility_check, interface_residuals, FieldSnapshot, InterfaceResiduals};
