//! The reduced per-mode dispersion relation.
//!
//! Chain per mode and λ: the heat Dirichlet-to-Neumann value d_λ^H, the
//! Stokes operator S, the coupling vector q = (σ′_*H_*, −l_*/θ_*, σ′_*√ν/R_*)
//! (the tangential-gradient factor of the mode in the normalized basis), the
//! scalar L_λ = (κ_Γ*λ + d_Γ*ν/R_*² + d_λ^H + θ_* qᵀSq)⁻¹, the corrected
//! block M = S − θ_*·(Sq)L_λ(qᵀS), and from its upper-left 2×2 block
//!
//! ```text
//! τ(λ) = r¹ − r·(r² + 1/γ_*)⁻¹·r,       F_l(λ) = λ + τ(λ)·σ_*·a_l.
//! ```
//!
//! Roots of F_l in λ ≥ 0 are eigenvalues of the linearized evolution
//! operator on that mode.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::harmonics::ModeIndex;

use super::{heat_dtn, stokes_mode_operator, LinearizedCoeffs, SpectralGeometry, SpectralParams};

/// Stored intermediates of one dispersion evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct DispersionSample {
    pub lambda: f64,
    pub mode: ModeIndex,
    /// Dispersion value F_l(λ).
    pub f: f64,
    pub dtn: f64,
    pub s11: f64,
    pub s22: f64,
    pub s33: f64,
    pub s12: f64,
    pub s13: f64,
    pub s23: f64,
    pub r1: f64,
    pub r2: f64,
    pub r_cross: f64,
    pub tau: f64,
    /// Scalar L_λ of the surface-temperature solve.
    pub l_lambda: f64,
}

/// Coupling vector q in the normalized (Y, Y, Ŵ) coefficient basis.
fn q_vector(coe: &LinearizedCoeffs, geom: &SpectralGeometry, mode: ModeIndex) -> DVector<f64> {
    let h_star = geom.h_star();
    if mode.l == 0 {
        DVector::from_vec(vec![coe.sigma_p * h_star, -coe.latent / coe.theta_star])
    } else {
        DVector::from_vec(vec![
            coe.sigma_p * h_star,
            -coe.latent / coe.theta_star,
            coe.sigma_p * mode.nu().sqrt() / geom.r_star,
        ])
    }
}

/// Evaluates the full reduction chain at one (mode, λ).
pub fn assemble_dispersion(
    coe: &LinearizedCoeffs,
    geom: &SpectralGeometry,
    mode: ModeIndex,
    lambda: f64,
    params: SpectralParams,
) -> Result<DispersionSample> {
    if coe.gamma <= 0.0 {
        return Err(Error::GammaZero);
    }
    if lambda < 0.0 {
        return Err(Error::InvalidInput("dispersion requires lambda >= 0".into()));
    }
    let dtn = heat_dtn(coe, geom, mode, lambda, params)?;
    let op = stokes_mode_operator(coe, geom, mode, lambda, params)?;
    let s = op.symmetrized();
    let q = q_vector(coe, geom, mode);

    let nu = mode.nu();
    let b_scalar = coe.kappa_g * lambda + coe.d_g * nu / (geom.r_star * geom.r_star) + dtn;
    let qsq = (&s * &q).dot(&q);
    let l_lambda = 1.0 / (b_scalar + coe.theta_star * qsq);

    let sq = &s * &q;
    let m: DMatrix<f64> = &s - coe.theta_star * l_lambda * (&sq * sq.transpose());

    let (r1, r2, r_cross) = (m[(0, 0)], m[(1, 1)], m[(1, 0)]);
    let tau = r1 - r_cross * r_cross / (r2 + 1.0 / coe.gamma);
    let a_l = mode.a_sigma(geom.r_star);
    let f = lambda + tau * coe.sigma * a_l;

    let g3 = |i: usize, j: usize| if s.nrows() > 2 { s[(i, j)] } else { 0.0 };
    Ok(DispersionSample {
        lambda,
        mode,
        f,
        dtn,
        s11: s[(0, 0)],
        s22: s[(1, 1)],
        s33: g3(2, 2),
        s12: s[(0, 1)],
        s13: g3(0, 2),
        s23: g3(1, 2),
        r1,
        r2,
        r_cross,
        tau,
        l_lambda,
    })
}

/// The default λ scan: 0 plus 64 logarithmically spaced points on
/// [1e-4, 1e3].
pub fn default_lambda_grid() -> Vec<f64> {
    let mut grid = vec![0.0];
    let (lo, hi, count) = (1e-4f64, 1e3f64, 64);
    for i in 0..count {
        let t = i as f64 / (count - 1) as f64;
        grid.push(lo * (hi / lo).powf(t));
    }
    grid
}

/// Sign-change scan of F_l over the grid followed by bisection; exact zeros
/// at grid points are kept as roots. An empty list is a valid result.
pub fn dispersion_roots(
    coe: &LinearizedCoeffs,
    geom: &SpectralGeometry,
    mode: ModeIndex,
    scan: &[f64],
    params: SpectralParams,
) -> Result<Vec<f64>> {
    let f = |lambda: f64| -> Result<f64> {
        Ok(assemble_dispersion(coe, geom, mode, lambda, params)?.f)
    };
    let mut roots = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for &lambda in scan {
        let value = f(lambda)?;
        if value.abs() < 1e-10 {
            roots.push(lambda);
            prev = Some((lambda, value));
            continue;
        }
        if let Some((pl, pv)) = prev {
            if pv * value < 0.0 && pv.abs() >= 1e-10 {
                let (mut a, mut b, mut fa) = (pl, lambda, pv);
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    let fm = f(mid)?;
                    if fm.abs() < 1e-10 {
                        a = mid;
                        b = mid;
                        break;
                    }
                    if fa * fm < 0.0 {
                        b = mid;
                    } else {
                        a = mid;
                        fa = fm;
                    }
                }
                roots.push(0.5 * (a + b));
            }
        }
        prev = Some((lambda, value));
    }
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    Ok(roots)
}

/// Spectral norm of the symmetrized contraction block
/// K = θ_* S^{1/2} q L_λ qᵀ S^{1/2}; the lemma bounds it by 1.
pub fn contraction_check(
    coe: &LinearizedCoeffs,
    geom: &SpectralGeometry,
    mode: ModeIndex,
    lambda: f64,
    params: SpectralParams,
) -> Result<f64> {
    if coe.gamma <= 0.0 {
        return Err(Error::GammaZero);
    }
    let dtn = heat_dtn(coe, geom, mode, lambda, params)?;
    let op = stokes_mode_operator(coe, geom, mode, lambda, params)?;
    let s = op.symmetrized();

    // principal square root of the symmetrized S; small negative eigenvalues
    // are discretization noise and are clamped, genuine ones are an error
    let eig = s.clone().symmetric_eigen();
    let scale = eig.eigenvalues.amax().max(1e-300);
    let mut sqrt_vals = DVector::<f64>::zeros(eig.eigenvalues.len());
    for (i, &v) in eig.eigenvalues.iter().enumerate() {
        if v < -1e-8 * scale.max(1.0) {
            return Err(Error::NotPsd { min_eig: v });
        }
        sqrt_vals[i] = v.max(0.0).sqrt();
    }
    let sqrt_s =
        &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals) * eig.eigenvectors.transpose();

    let q = q_vector(coe, geom, mode);
    let nu = mode.nu();
    let b_scalar = coe.kappa_g * lambda + coe.d_g * nu / (geom.r_star * geom.r_star) + dtn;
    let qsq = (&s * &q).dot(&q);
    let l_lambda_denom = b_scalar + coe.theta_star * qsq;
    if l_lambda_denom <= 0.0 {
        // l = 0 at λ = 0 has S = 0 and an empty contraction block
        return Ok(0.0);
    }
    let v = &sqrt_s * &q;
    let k = coe.theta_star / l_lambda_denom * (&v * v.transpose());
    Ok(k.svd(false, false).singular_values.max())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::default_materials;

    fn setup(n: usize) -> (LinearizedCoeffs, SpectralGeometry) {
        let ms = default_materials();
        (
            LinearizedCoeffs::at(&ms, 1.0).unwrap(),
            SpectralGeometry::new(n, 1.0, 2.0).unwrap(),
        )
    }

    #[test]
    fn degree_one_dispersion_is_identity() {
        // a_1 = 0, so F_1(λ) = λ up to discretization error
        let (coe, geom) = setup(3);
        for lambda in [0.0, 0.3, 2.0, 40.0] {
            let s = assemble_dispersion(
                &coe,
                &geom,
                ModeIndex::new(3, 1),
                lambda,
                SpectralParams::default(),
            )
            .unwrap();
            assert!((s.f - lambda).abs() < 1e-10 * (1.0 + lambda));
        }
    }

    #[test]
    fn gamma_zero_is_flagged() {
        let (mut coe, geom) = setup(3);
        coe.gamma = 0.0;
        assert!(matches!(
            assemble_dispersion(&coe, &geom, ModeIndex::new(3, 2), 0.5, SpectralParams::default()),
            Err(Error::GammaZero)
        ));
    }

    #[test]
    fn no_positive_roots_for_connected_interface() {
        let (coe, geom) = setup(3);
        for l in 2..=4 {
            let roots = dispersion_roots(
                &coe,
                &geom,
                ModeIndex::new(3, l),
                &default_lambda_grid(),
                SpectralParams::new(24).unwrap(),
            )
            .unwrap();
            assert!(roots.is_empty(), "l={l}: {roots:?}");
        }
    }

    #[test]
    fn degree_one_root_sits_at_zero() {
        let (coe, geom) = setup(3);
        let roots = dispersion_roots(
            &coe,
            &geom,
            ModeIndex::new(3, 1),
            &default_lambda_grid(),
            SpectralParams::new(24).unwrap(),
        )
        .unwrap();
        assert_eq!(roots.len(), 1);
        assert!(roots[0].abs() < 1e-8);
    }

    #[test]
    fn synthetic_linear_dispersion_root() {
        // tau ≡ 1 and sigma_* a_l = −1 gives F(λ) = λ − 1 with root 1; the
        // bisection machinery is checked against that closed form
        let f = |lambda: f64| lambda - 1.0;
        let grid = default_lambda_grid();
        let mut root = None;
        let mut prev: Option<(f64, f64)> = None;
        for &l in &grid {
            let v = f(l);
            if let Some((pl, pv)) = prev {
                if pv * v < 0.0 {
                    let (mut a, mut b, mut fa) = (pl, l, pv);
                    for _ in 0..100 {
                        let m = 0.5 * (a + b);
                        if fa * f(m) < 0.0 {
                            b = m;
                        } else {
                            a = m;
                            fa = f(m);
                        }
                    }
                    root = Some(0.5 * (a + b));
                }
            }
            prev = Some((l, v));
        }
        assert!((root.unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn contraction_norm_bounded() {
        let (coe, geom) = setup(3);
        for l in [0usize, 1, 2, 4] {
            for lambda in [0.0, 0.5, 10.0] {
                let norm = contraction_check(
                    &coe,
                    &geom,
                    ModeIndex::new(3, l),
                    lambda,
                    SpectralParams::new(24).unwrap(),
                )
                .unwrap();
                assert!(norm <= 1.0 + 1e-8, "l={l} λ={lambda}: {norm}");
            }
        }
    }

    #[test]
    fn contraction_zero_without_coupling() {
        // sigma' = 0 and l_* = 0 kill the coupling vector
        let (mut coe, geom) = setup(3);
        coe.sigma_p = 0.0;
        coe.latent = 0.0;
        let norm = contraction_check(
            &coe,
            &geom,
            ModeIndex::new(3, 2),
            0.7,
            SpectralParams::new(24).unwrap(),
        )
        .unwrap();
        assert!(norm < 1e-14);
    }
}
