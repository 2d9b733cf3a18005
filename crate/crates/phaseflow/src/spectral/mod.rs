//! Per-harmonic-mode linear stability machinery in concentric sphere-in-ball
//! geometry: the heat Dirichlet-to-Neumann map, the interface Stokes
//! solution operators, the reduced dispersion relation, the full discretized
//! eigenvalue pencil with kernel and semi-simplicity checks, and the
//! multi-droplet volume-exchange growth rates.

pub mod dispersion;
pub mod heat;
pub mod lemmas;
pub mod pencil;
pub mod stokes;
pub mod volume_exchange;

pub use dispersion::{assemble_dispersion, contraction_check, dispersion_roots, DispersionSample};
pub use heat::{closed_form_dtn_static, heat_dtn};
pub use lemmas::{contraction_fixture_check, schur_check};
pub use pencil::{direct_mode_spectrum, kernel_check, semisimplicity_check, ModePencil};
pub use stokes::{stokes_mode_operator, StokesMode};
pub use volume_exchange::volume_exchange_spectrum;

use serde::Serialize;

use crate::equilibria::EquilibriumState;
use crate::error::{Error, Result};
use crate::thermo::{MaterialSet, Phase};

/// Concentric geometry: one sphere of radius R_* in a ball of radius R_Ω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralGeometry {
    pub n: usize,
    pub r_star: f64,
    pub r_omega: f64,
}

impl SpectralGeometry {
    pub fn new(n: usize, r_star: f64, r_omega: f64) -> Result<Self> {
        if !(0.0 < r_star && r_star < r_omega) {
            return Err(Error::InvalidInput(
                "need 0 < r_star < r_omega for the concentric geometry".into(),
            ));
        }
        Ok(SpectralGeometry { n, r_star, r_omega })
    }

    pub fn from_equilibrium(eq: &EquilibriumState) -> Result<Self> {
        if eq.spheres.count() != 1 {
            return Err(Error::InvalidInput(
                "per-mode spectral computations require the single concentric sphere".into(),
            ));
        }
        Self::new(eq.domain.n, eq.spheres.radius, eq.domain.r_omega)
    }

    /// H_* = (n−1)/R_*.
    pub fn h_star(&self) -> f64 {
        (self.n as f64 - 1.0) / self.r_star
    }

    /// Interface area |Σ|.
    pub fn area(&self) -> f64 {
        crate::geometry::sphere_area(self.n, self.r_star)
    }
}

/// All material coefficients frozen at the equilibrium temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearizedCoeffs {
    pub theta_star: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub d1: f64,
    pub d2: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    /// Surface heat capacity κ_Γ(θ_*).
    pub kappa_g: f64,
    /// Surface heat conductivity d_Γ(θ_*).
    pub d_g: f64,
    pub sigma: f64,
    pub sigma_p: f64,
    /// Latent heat l(θ_*).
    pub latent: f64,
    /// Kinetic undercooling coefficient γ(θ_*).
    pub gamma: f64,
}

impl LinearizedCoeffs {
    pub fn at(ms: &MaterialSet, theta_star: f64) -> Result<Self> {
        ms.check_theta(theta_star)?;
        Ok(LinearizedCoeffs {
            theta_star,
            rho1: ms.phase1.rho,
            rho2: ms.phase2.rho,
            mu1: ms.phase1.mu.value(theta_star),
            mu2: ms.phase2.mu.value(theta_star),
            d1: ms.phase1.d.value(theta_star),
            d2: ms.phase2.d.value(theta_star),
            kappa1: ms.derived_bulk(Phase::One, theta_star)?.kappa,
            kappa2: ms.derived_bulk(Phase::Two, theta_star)?.kappa,
            kappa_g: ms.derived_surface(theta_star)?.kappa,
            d_g: ms.surface.d_gamma.value(theta_star),
            sigma: ms.surface.sigma.value(theta_star),
            sigma_p: ms.surface.sigma.d1(theta_star),
            latent: ms.latent_heat(theta_star)?,
            gamma: ms.surface.gamma.value(theta_star),
        })
    }

    pub fn rho_jump(&self) -> f64 {
        self.rho2 - self.rho1
    }

    pub fn inv_rho_jump(&self) -> f64 {
        1.0 / self.rho2 - 1.0 / self.rho1
    }
}

/// Radial resolution for the collocation solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SpectralParams {
    /// Collocation points per radial subinterval (≥ 8).
    pub nodes: usize,
}

impl Default for SpectralParams {
    fn default() -> Self {
        SpectralParams { nodes: 48 }
    }
}

impl SpectralParams {
    pub fn new(nodes: usize) -> Result<Self> {
        if nodes < 8 {
            return Err(Error::InvalidInput("need at least 8 nodes per interval".into()));
        }
        Ok(SpectralParams { nodes })
    }

    pub fn doubled(&self) -> Self {
        SpectralParams {
            nodes: 2 * self.nodes,
        }
    }
}
