//! Numerical toolkit for the sharp-interface model of incompressible two-phase
//! flow with phase transitions, temperature-dependent surface tension and
//! kinetic undercooling.
//!
//! The crate is organized around the model's structure:
//!
//! * [`thermo`] — constitutive laws per phase and on the interface, with all
//!   derived thermodynamic quantities (entropy, internal energy, heat
//!   capacity, latent heat) and validation of the standing positivity and
//!   concavity assumptions.
//! * [`equilibria`] — the sphere-family equilibrium states: radius from total
//!   mass, temperature from total energy, phase pressures from the
//!   Young–Laplace and Gibbs–Thomson relations, and the conserved totals
//!   (mass, energy, entropy) by quadrature.
//! * [`variations`] — first variations of entropy, mass and energy, the
//!   Lagrange-multiplier residual, the constrained second-variation quadratic
//!   form, and its definiteness classification (connected interface:
//!   negative semi-definite; disconnected: indefinite).
//! * [`spectral`] — per-harmonic-mode linear stability in concentric
//!   sphere-in-ball geometry: heat Dirichlet-to-Neumann map, interface Stokes
//!   solution operators, the reduced dispersion relation, the full
//!   discretized eigenvalue pencil, kernel and semi-simplicity checks, and
//!   the multi-droplet volume-exchange growth rates.
//! * [`dynamics`] — two reduced time integrators (radial two-phase heat flow
//!   with a surface heat capacity; multi-droplet coarsening) plus the
//!   interface-condition residual evaluator and initial-data compatibility
//!   checker.
//! * [`suite`] — the runnable verification suite binding everything
//!   together.

pub mod cheb;
pub mod dynamics;
pub mod equilibria;
pub mod error;
pub mod geometry;
pub mod harmonics;
pub mod spectral;
pub mod suite;
pub mod thermo;
pub mod variations;

pub use error::{Error, Result};
