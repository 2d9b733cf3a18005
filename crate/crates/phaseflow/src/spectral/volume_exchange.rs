//! Growth rates of the multi-sphere volume-exchange modes.
//!
//! The quasi-static reduction couples m equal spheres through their common
//! far field; its linearized right-hand side at equal radii (shared with the
//! coarsening integrator) restricted to the volume-preserving subspace
//! Σ|Σ_k|h_k = 0 carries exactly m−1 positive growth rates — the unstable
//! directions of a disconnected interface.

use nalgebra::DMatrix;

use crate::dynamics::ripening::{ripening_jacobian, RipeningContext};
use crate::equilibria::EquilibriumState;
use crate::error::Result;
use crate::thermo::MaterialSet;

/// Eigenvalues of the reduced growth matrix on the volume-preserving
/// subspace, sorted descending; empty for a single sphere.
pub fn volume_exchange_spectrum(ms: &MaterialSet, eq: &EquilibriumState) -> Result<Vec<f64>> {
    let m = eq.spheres.count();
    if m < 2 {
        return Ok(Vec::new());
    }
    let ctx = RipeningContext::new(ms, eq.theta_star, eq.domain.n, 0.0)?;
    let radii = vec![eq.spheres.radius; m];
    let jac = ripening_jacobian(&ctx, &radii);

    let basis = zero_sum_basis(m);
    let restricted = basis.transpose() * &jac * &basis;
    let sym = (&restricted + restricted.transpose()) * 0.5;
    let mut eigs: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().cloned().collect();
    eigs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(eigs)
}

/// Orthonormal basis (columns) of {h ∈ R^m : Σ h_k = 0}.
fn zero_sum_basis(m: usize) -> DMatrix<f64> {
    let mut b = DMatrix::<f64>::zeros(m, m - 1);
    for j in 0..(m - 1) {
        let norm = ((j + 1) as f64 * (j + 2) as f64).sqrt();
        for i in 0..=j {
            b[(i, j)] = 1.0 / norm;
        }
        b[(j + 1, j)] = -((j + 1) as f64) / norm;
    }
    b
}
