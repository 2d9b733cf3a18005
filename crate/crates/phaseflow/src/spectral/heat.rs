//! Dirichlet-to-Neumann map of the per-mode bulk heat problem.
//!
//! For mode (n, l) and λ ≥ 0 the radial profile solves
//!
//! ```text
//! λ ρκ_* ϑ − d_* (ϑ″ + (n−1)ϑ′/r − l(l+n−2)ϑ/r²) = 0
//! ```
//!
//! on (0, R_*) and (R_*, R_Ω) with ϑ(R_*) = 1 on both sides, the parity
//! condition at r = 0 and an insulating outer wall. The returned value is
//! d_λ^H = −[[d_* ∂_ν ϑ]](R_*), the flux jump produced by unit interface
//! data.

use nalgebra::{DMatrix, DVector};

use crate::cheb::lobatto;
use crate::error::{Error, Result};
use crate::harmonics::ModeIndex;

use super::{LinearizedCoeffs, SpectralGeometry, SpectralParams};

/// One-sided radial heat solve; returns d·ϑ′ at the interface node.
///
/// `interface_last` selects whether the interface sits at the last node
/// (interior region) or the first (exterior region).
fn side_flux(
    a: f64,
    b: f64,
    len: usize,
    n: usize,
    nu: f64,
    lambda_rho_kappa: f64,
    d: f64,
    interface_last: bool,
    l: usize,
) -> Result<f64> {
    let g = lobatto(a, b, len);
    let mut mat = DMatrix::<f64>::zeros(len, len);
    let mut rhs = DVector::<f64>::zeros(len);

    for j in 1..len - 1 {
        let r = g.nodes[j];
        // r²-scaled mode equation keeps the origin row regular
        for k in 0..len {
            mat[(j, k)] = -d * (r * r * g.d2[(j, k)] + (n as f64 - 1.0) * r * g.d1[(j, k)]);
        }
        mat[(j, j)] += d * nu + lambda_rho_kappa * r * r;
    }

    if interface_last {
        // inner region: parity at r = 0, Dirichlet data at r = R_*
        if l == 0 {
            for k in 0..len {
                mat[(0, k)] = g.d1[(0, k)];
            }
        } else {
            mat[(0, 0)] = 1.0;
        }
        mat[(len - 1, len - 1)] = 1.0;
        rhs[len - 1] = 1.0;
    } else {
        // outer region: Dirichlet data at r = R_*, insulated outer wall
        mat[(0, 0)] = 1.0;
        rhs[0] = 1.0;
        for k in 0..len {
            mat[(len - 1, k)] = g.d1[(len - 1, k)];
        }
    }

    let theta = mat
        .lu()
        .solve(&rhs)
        .ok_or(Error::SolveFailure("heat_dtn"))?;
    let row = if interface_last { len - 1 } else { 0 };
    let mut flux = 0.0;
    for k in 0..len {
        flux += g.d1[(row, k)] * theta[k];
    }
    Ok(d * flux)
}

/// d_λ^H(l): flux jump −[[d ∂_ν ϑ]] for unit Dirichlet data on the mode.
pub fn heat_dtn(
    coe: &LinearizedCoeffs,
    geom: &SpectralGeometry,
    mode: ModeIndex,
    lambda: f64,
    params: SpectralParams,
) -> Result<f64> {
    let nu = mode.nu();
    let inner = side_flux(
        0.0,
        geom.r_star,
        params.nodes,
        geom.n,
        nu,
        lambda * coe.rho1 * coe.kappa1,
        coe.d1,
        true,
        mode.l,
    )?;
    let outer = side_flux(
        geom.r_star,
        geom.r_omega,
        params.nodes,
        geom.n,
        nu,
        lambda * coe.rho2 * coe.kappa2,
        coe.d2,
        false,
        mode.l,
    )?;
    Ok(-(outer - inner))
}

/// Closed form of d_0^H(l) from the harmonic radial solutions (λ = 0).
///
/// Interior: (r/R)^l. Exterior: A·r^l + B·r^{−(l+n−2)} with an insulated
/// outer wall (log profile for n = 2, l = 0 never enters: the value is 0).
pub fn closed_form_dtn_static(
    coe: &LinearizedCoeffs,
    geom: &SpectralGeometry,
    mode: ModeIndex,
) -> f64 {
    let l = mode.l;
    if l == 0 {
        return 0.0;
    }
    let (r, rw) = (geom.r_star, geom.r_omega);
    let lf = l as f64;
    let inner = coe.d1 * lf / r;
    let outer = match geom.n {
        3 => {
            let b_over_a = lf * rw.powi(2 * l as i32 + 1) / (lf + 1.0);
            let a = 1.0 / (r.powi(l as i32) + b_over_a * r.powi(-(l as i32) - 1));
            a * lf * (r.powi(l as i32 - 1) - rw.powi(2 * l as i32 + 1) * r.powi(-(l as i32) - 2))
        }
        2 => {
            let b_over_a = rw.powi(2 * l as i32);
            let a = 1.0 / (r.powi(l as i32) + b_over_a * r.powi(-(l as i32)));
            a * lf * (r.powi(l as i32 - 1) - rw.powi(2 * l as i32) * r.powi(-(l as i32) - 1))
        }
        _ => unreachable!(),
    };
    -(coe.d2 * outer - inner)
}
