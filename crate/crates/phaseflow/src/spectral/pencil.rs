//! The full per-mode eigenvalue problem as a dense matrix pencil.
//!
//! Equations are written as λ·(B z) + A z = 0 where z stacks the spheroidal
//! velocity profiles, pressure amplitudes, bulk temperature profiles, the
//! surface temperature and the interface height coefficient of the mode. B
//! carries mass-type entries on evolution rows and is zero exactly on
//! constraint rows (incompressibility, parity, stress and flux conditions).
//!
//! The generalized spectrum is extracted by a shift-invert reduction: the
//! eigenvalues μ of C = (A + sB)⁻¹B give the full pencil spectrum through
//! λ = s − 1/μ, with μ → 0 corresponding to the constraint (infinite)
//! eigenvalues.

use nalgebra::{Complex, DMatrix, DVector};
use serde::Serialize;

use crate::cheb::lobatto;
use crate::error::{Error, Result};
use crate::harmonics::ModeIndex;

use super::stokes::{
    assemble_stokes_block, normal_stress_jump_row, tangential_stress_jump_row, Layout,
};
use super::{LinearizedCoeffs, SpectralGeometry, SpectralParams};

/// Index bookkeeping: the Stokes layout extended by the heat unknowns.
pub(super) struct PencilLayout {
    pub(super) stokes: Layout,
    pub(super) th1: usize,
    pub(super) th2: usize,
    pub(super) th_s: usize,
    pub(super) h: usize,
    pub(super) size: usize,
}

impl PencilLayout {
    fn new(len: usize, l: usize) -> Self {
        let stokes = Layout::new(len, l);
        let th1 = stokes.size;
        let th2 = th1 + len;
        let th_s = th2 + len;
        let h = th_s + 1;
        PencilLayout {
            stokes,
            th1,
            th2,
            th_s,
            h,
            size: h + 1,
        }
    }
}

/// Assembled pencil with its grids, ready for eigen- and kernel analysis.
pub struct ModePencil {
    pub mode: ModeIndex,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub(super) lay: PencilLayout,
    coe: LinearizedCoeffs,
    geom: SpectralGeometry,
}

/// Builds the discrete pencil for one mode.
pub fn assemble_pencil(
    coe: &LinearizedCoeffs,
    geom: &SpectralGeometry,
    mode: ModeIndex,
    params: SpectralParams,
) -> Result<ModePencil> {
    let len = params.nodes;
    let lay = PencilLayout::new(len, mode.l);
    let g1 = lobatto(0.0, geom.r_star, len);
    let g2 = lobatto(geom.r_star, geom.r_omega, len);
    let n = geom.n as f64;
    let nu = mode.nu();
    let r_star = geom.r_star;
    let h_star = geom.h_star();

    let mut a = DMatrix::<f64>::zeros(lay.size, lay.size);
    let mut b = DMatrix::<f64>::zeros(lay.size, lay.size);

    // Stokes block (momentum with mass entries, parity, incompressibility,
    // no-slip, tangential velocity continuity)
    let mut row = assemble_stokes_block(
        &mut a,
        Some(&mut b),
        0.0,
        0,
        &lay.stokes,
        coe,
        geom,
        mode,
        &g1,
        &g2,
        0,
    );

    // tangential stress balance −2P_Σ[[μD(u)ν]] − θ_*σ′_*∇_Σ ϑ_Σ = 0
    if lay.stokes.with_t {
        tangential_stress_jump_row(&mut a, 0, &lay.stokes, coe, geom, mode, &g1, &g2, row);
        a[(row, lay.th_s)] += -coe.theta_star * coe.sigma_p * nu.sqrt() / r_star;
        row += 1;
    }

    // normal stress balance −2[[μD(u)ν·ν]] + [[π]] + σ_*A_Σ h − θ_*σ′_*H_*ϑ_Σ = 0
    normal_stress_jump_row(&mut a, 0, &lay.stokes, coe, geom, mode, &g1, &g2, row, 1.0, 1.0);
    a[(row, lay.h)] += coe.sigma * mode.a_sigma(r_star);
    a[(row, lay.th_s)] += -coe.theta_star * coe.sigma_p * h_star;
    row += 1;

    // generalized Gibbs–Thomson −2[[μD(u)ν·ν/ρ]] + [[π/ρ]] + l_*ϑ_Σ + γ_*j_Σ = 0
    normal_stress_jump_row(
        &mut a,
        0,
        &lay.stokes,
        coe,
        geom,
        mode,
        &g1,
        &g2,
        row,
        1.0 / coe.rho1,
        1.0 / coe.rho2,
    );
    a[(row, lay.th_s)] += coe.latent;
    let inv_rho_jump = coe.inv_rho_jump();
    a[(row, lay.stokes.f2)] += coe.gamma / inv_rho_jump;
    a[(row, lay.stokes.f1 + len - 1)] += -coe.gamma / inv_rho_jump;
    row += 1;

    // kinematic equation λh − [[ρ u·ν]]/[[ρ]] = 0 (normalized by [[ρ]] so
    // the mass entry stays nonnegative)
    let rho_jump = coe.rho_jump();
    b[(row, lay.h)] = 1.0;
    a[(row, lay.stokes.f2)] += -coe.rho2 / rho_jump;
    a[(row, lay.stokes.f1 + len - 1)] += coe.rho1 / rho_jump;
    row += 1;

    // bulk heat: λρκ r²ϑ − d(r²ϑ″ + (n−1)rϑ′ − νϑ) = 0
    for (region, grid, th_off) in [(0usize, &g1, lay.th1), (1usize, &g2, lay.th2)] {
        let (rho_kappa, d) = if region == 0 {
            (coe.rho1 * coe.kappa1, coe.d1)
        } else {
            (coe.rho2 * coe.kappa2, coe.d2)
        };
        for j in 1..len - 1 {
            let r = grid.nodes[j];
            for k in 0..len {
                a[(row, th_off + k)] +=
                    -d * (r * r * grid.d2[(j, k)] + (n - 1.0) * r * grid.d1[(j, k)]);
            }
            a[(row, th_off + j)] += d * nu;
            b[(row, th_off + j)] = rho_kappa * r * r;
            row += 1;
        }
    }

    // parity of ϑ at the origin
    if mode.l == 0 {
        for k in 0..len {
            a[(row, lay.th1 + k)] = g1.d1[(0, k)];
        }
    } else {
        a[(row, lay.th1)] = 1.0;
    }
    row += 1;

    // insulated outer wall
    for k in 0..len {
        a[(row, lay.th2 + k)] = g2.d1[(len - 1, k)];
    }
    row += 1;

    // temperature continuity at the interface: ϑ_i(R_*) = ϑ_Σ
    a[(row, lay.th1 + len - 1)] = 1.0;
    a[(row, lay.th_s)] = -1.0;
    row += 1;
    a[(row, lay.th2)] = 1.0;
    a[(row, lay.th_s)] = -1.0;
    row += 1;

    // surface energy balance:
    // λκ_Γ*ϑ_Σ − d_Γ*Δ_Σϑ_Σ − (l_*/θ_*)j_Σ − [[d∂ϑ]] − σ′_*(div_Σ P_Σu − H_* V_Σ) = 0
    b[(row, lay.th_s)] = coe.kappa_g;
    a[(row, lay.th_s)] += coe.d_g * nu / (r_star * r_star);
    a[(row, lay.stokes.f2)] += -coe.latent / coe.theta_star / inv_rho_jump;
    a[(row, lay.stokes.f1 + len - 1)] += coe.latent / coe.theta_star / inv_rho_jump;
    for k in 0..len {
        a[(row, lay.th2 + k)] += -coe.d2 * g2.d1[(0, k)];
        a[(row, lay.th1 + k)] += coe.d1 * g1.d1[(len - 1, k)];
    }
    if lay.stokes.with_t {
        // div_Σ P_Σu = −(ν/R_*)·t(R_*) in the Y coefficient
        a[(row, lay.stokes.t1 + len - 1)] += coe.sigma_p * nu / r_star;
    }
    a[(row, lay.stokes.f2)] += coe.sigma_p * h_star * coe.rho2 / rho_jump;
    a[(row, lay.stokes.f1 + len - 1)] += -coe.sigma_p * h_star * coe.rho1 / rho_jump;
    row += 1;

    debug_assert_eq!(row, lay.size);

    Ok(ModePencil {
        mode,
        a,
        b,
        lay,
        coe: *coe,
        geom: *geom,
    })
}

/// Full generalized spectrum of λB + A via shift-invert; infinite
/// (constraint) eigenvalues are dropped. Sorted by real part, descending.
pub fn generalized_eigenvalues(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let shifts = [0.618_033_988_75, 1.772_453_850_9, 3.141_592_6, -0.375_8];
    for &s in &shifts {
        let m = a + b * s;
        let lu = m.clone().lu();
        let Some(c) = lu.solve(b) else {
            continue;
        };
        // reject shifts that landed near an eigenvalue
        let residual = (&m * &c - b).norm() / b.norm().max(1e-300);
        if !residual.is_finite() || residual > 1e-6 {
            continue;
        }
        let mus = c.complex_eigenvalues();
        // |μ| below the cutoff marks the constraint block: those pencil
        // eigenvalues are discretization-infinite and carry no information
        let mut lambdas: Vec<Complex<f64>> = mus
            .iter()
            .filter(|mu| mu.norm() > 1e-6)
            .map(|mu| Complex::new(s, 0.0) - 1.0 / mu)
            .collect();
        lambdas.sort_by(|x, y| y.re.partial_cmp(&x.re).unwrap());
        return Ok(lambdas);
    }
    Err(Error::EigensolveFailure("generalized_eigenvalues"))
}

impl ModePencil {
    pub fn eigenvalues(&self) -> Result<Vec<Complex<f64>>> {
        generalized_eigenvalues(&self.a, &self.b)
    }

    /// Row-normalized copies of (A, B): each row of both matrices divided by
    /// the max-norm of the A row. Solvability questions are invariant.
    fn row_normalized(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let mut a = self.a.clone();
        let mut b = self.b.clone();
        for i in 0..a.nrows() {
            let scale = a.row(i).amax().max(b.row(i).amax()).max(1e-300);
            for j in 0..a.ncols() {
                a[(i, j)] /= scale;
                b[(i, j)] /= scale;
            }
        }
        (a, b)
    }

    /// Candidate kernel vectors of this mode at λ = 0, with labels.
    /// l = 0 carries the constant-temperature and constant-height elements
    /// (with their compensating pressures); every l = 1 direction carries the
    /// pure-height translation element.
    pub fn kernel_candidates(&self) -> Vec<(String, DVector<f64>)> {
        let lay = &self.lay;
        let len = lay.stokes.len;
        let coe = &self.coe;
        let h_star = self.geom.h_star();
        let mut out = Vec::new();
        match self.mode.l {
            0 => {
                // e_theta: θ ≡ 1, θ_Σ = 1; pressures solve
                // [[π]] = θ_*σ′_*H_*, [[π/ρ]] = −l_*
                let (p1, p2) = solve_pressure_pair(
                    coe,
                    coe.theta_star * coe.sigma_p * h_star,
                    -coe.latent,
                );
                let mut z = DVector::<f64>::zeros(lay.size);
                for k in 0..len {
                    z[lay.th1 + k] = 1.0;
                    z[lay.th2 + k] = 1.0;
                }
                z[lay.th_s] = 1.0;
                z[lay.stokes.a1] = p1;
                z[lay.stokes.a2] = p2;
                out.push(("theta_const".to_string(), z));

                // e_h: h = 1; pressures solve [[π]] = −σ_*A_Σ·1, [[π/ρ]] = 0
                let a0 = self.mode.a_sigma(self.geom.r_star);
                let (p1, p2) = solve_pressure_pair(coe, -coe.sigma * a0, 0.0);
                let mut z = DVector::<f64>::zeros(lay.size);
                z[lay.h] = 1.0;
                z[lay.stokes.a1] = p1;
                z[lay.stokes.a2] = p2;
                out.push(("h_const".to_string(), z));
            }
            1 => {
                let mut z = DVector::<f64>::zeros(lay.size);
                z[lay.h] = 1.0;
                out.push(("h_translation".to_string(), z));
            }
            _ => {}
        }
        out
    }
}

/// Solves π₂ − π₁ = jump, π₂/ρ₂ − π₁/ρ₁ = weighted for the constant
/// per-phase pressures of a kernel element.
fn solve_pressure_pair(coe: &LinearizedCoeffs, jump: f64, weighted: f64) -> (f64, f64) {
    let det = 1.0 / coe.rho2 - 1.0 / coe.rho1;
    let p1 = (weighted - jump / coe.rho2) / det;
    (p1, p1 + jump)
}

/// Physical spectrum of one mode: eigenvalues of the fine pencil that are
/// reproduced by the coarse pencil within 1e-3 relative. Returned sorted by
/// descending real part, truncated to `count`.
pub fn direct_mode_spectrum(
    coe: &LinearizedCoeffs,
    geom: &SpectralGeometry,
    mode: ModeIndex,
    params: SpectralParams,
    count: usize,
) -> Result<Vec<Complex<f64>>> {
    let coarse = assemble_pencil(coe, geom, mode, params)?.eigenvalues()?;
    let fine = assemble_pencil(coe, geom, mode, params.doubled())?.eigenvalues()?;
    let mut physical: Vec<Complex<f64>> = fine
        .into_iter()
        .filter(|lf| {
            coarse
                .iter()
                .any(|lc| (lf - lc).norm() <= 1e-3 * lf.norm().max(1.0))
        })
        .collect();
    physical.truncate(count);
    Ok(physical)
}

/// Kernel verification report.
#[derive(Debug, Clone, Serialize)]
pub struct KernelReport {
    /// Total dimension across modes: 2 (l = 0) + n (degree-one directions).
    pub dimension: usize,
    /// (label, relative residual) of each candidate under the row-normalized
    /// pencil.
    pub residuals: Vec<(String, f64)>,
}

/// Verifies the λ = 0 kernel elements mode by mode and reports the total
/// dimension n + 2 for the connected interface.
pub fn kernel_check(
    coe: &LinearizedCoeffs,
    geom: &SpectralGeometry,
    params: SpectralParams,
) -> Result<KernelReport> {
    let mut residuals = Vec::new();
    let mut dimension = 0;
    for l in [0usize, 1] {
        let mode = ModeIndex::new(geom.n, l);
        let pencil = assemble_pencil(coe, geom, mode, params)?;
        let (a_norm, _) = pencil.row_normalized();
        for (label, z) in pencil.kernel_candidates() {
            let res = (&a_norm * &z).amax() / z.amax();
            residuals.push((format!("l{l}:{label}"), res));
            dimension += if l == 0 { 1 } else { mode.multiplicity() };
        }
    }
    Ok(KernelReport {
        dimension,
        residuals,
    })
}

/// True iff no generalized eigenvector exists over the λ = 0 kernel of the
/// pencil: B·(kernel) must not intersect Range(A). Decided via the SVD left
/// null space of the row-normalized A.
pub fn pencil_semisimple_at_zero(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    kernel: &[DVector<f64>],
) -> Result<bool> {
    if kernel.is_empty() {
        return Ok(true);
    }
    let dim = a.nrows();
    let k = kernel.len();
    let svd = a.clone().svd(true, false);
    let u = svd.u.as_ref().ok_or(Error::EigensolveFailure("svd"))?;
    let smax = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-10 * smax)
        .count();
    if dim - rank < k {
        // kernel candidates are not all genuine kernel vectors
        return Err(Error::EigensolveFailure("kernel dimension mismatch"));
    }
    // left null space basis
    let null_dim = dim - rank;
    let u2 = u.columns(rank, null_dim.min(u.ncols() - rank)).into_owned();
    let mut bk = DMatrix::<f64>::zeros(dim, k);
    for (j, z) in kernel.iter().enumerate() {
        let col = b * z;
        let norm = col.norm().max(1e-300);
        bk.set_column(j, &(col / norm));
    }
    let m = u2.transpose() * bk;
    let sigma_min = m.svd(false, false).singular_values.min();
    Ok(sigma_min > 1e-6)
}

/// Semi-simplicity of λ = 0 for the connected interface: checked on the
/// l = 0 and l = 1 pencils (the modes that carry the kernel).
pub fn semisimplicity_check(
    coe: &LinearizedCoeffs,
    geom: &SpectralGeometry,
    params: SpectralParams,
) -> Result<bool> {
    for l in [0usize, 1] {
        let pencil = assemble_pencil(coe, geom, ModeIndex::new(geom.n, l), params)?;
        let (a_norm, b_norm) = pencil.row_normalized();
        let kernel: Vec<DVector<f64>> = pencil
            .kernel_candidates()
            .into_iter()
            .map(|(_, z)| z)
            .collect();
        if !pencil_semisimple_at_zero(&a_norm, &b_norm, &kernel)? {
            return Ok(false);
        }
    }
    Ok(true)
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

    fn small_params() -> SpectralParams {
        SpectralParams::new(20).unwrap()
    }

    #[test]
    fn mass_matrix_is_diagonal_and_vanishes_on_constraint_rows() {
        let (coe, geom) = setup(3);
        let p = assemble_pencil(&coe, &geom, ModeIndex::new(3, 2), small_params()).unwrap();
        // mass-type structure: at most one nonnegative entry per row, and
        // the constraint rows carry none at all
        let mut zero_rows = 0;
        for i in 0..p.b.nrows() {
            let nonzero: Vec<f64> = p.b.row(i).iter().cloned().filter(|v| *v != 0.0).collect();
            assert!(nonzero.len() <= 1, "row {i} couples {} unknowns", nonzero.len());
            assert!(nonzero.iter().all(|&v| v > 0.0), "negative mass in row {i}");
            if nonzero.is_empty() {
                zero_rows += 1;
            }
        }
        assert!(zero_rows > 0 && zero_rows < p.b.nrows());
    }

    #[test]
    fn kernel_candidates_are_discrete_kernel_vectors() {
        for n in [2usize, 3] {
            let (coe, geom) = setup(n);
            let report = kernel_check(&coe, &geom, small_params()).unwrap();
            assert_eq!(report.dimension, n + 2);
            for (label, res) in &report.residuals {
                assert!(*res < 1e-8, "{label}: residual {res}");
            }
            // constant-temperature element satisfies every row to roundoff
            let (label, res) = &report.residuals[0];
            assert!(label.contains("theta_const"));
            assert!(*res < 1e-12, "constant element residual {res}");
        }
    }

    #[test]
    fn translation_mode_has_zero_eigenvalue() {
        let (coe, geom) = setup(3);
        let eigs = direct_mode_spectrum(
            &coe,
            &geom,
            ModeIndex::new(3, 1),
            small_params(),
            40,
        )
        .unwrap();
        let min_abs = eigs.iter().map(|l| l.norm()).fold(f64::INFINITY, f64::min);
        assert!(min_abs < 1e-8, "no eigenvalue at zero; closest {min_abs}");
    }

    #[test]
    fn connected_interface_has_no_unstable_modes() {
        let (coe, geom) = setup(3);
        for l in [0usize, 1, 2, 3] {
            let eigs =
                direct_mode_spectrum(&coe, &geom, ModeIndex::new(3, l), small_params(), 60)
                    .unwrap();
            for e in &eigs {
                assert!(
                    e.re < 1e-6 || e.norm() < 1e-6,
                    "l={l}: unstable eigenvalue {e}"
                );
            }
        }
    }

    #[test]
    fn semisimple_for_default_equilibrium() {
        for n in [2usize, 3] {
            let (coe, geom) = setup(n);
            assert!(semisimplicity_check(&coe, &geom, small_params()).unwrap());
        }
    }

    #[test]
    fn jordan_block_fixture_is_detected() {
        // pencil λI + A with A = [[0,1],[0,0]]: kernel e1, and A z = B e1 is
        // solvable (z = e2), i.e. a genuine Jordan chain
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let b = DMatrix::identity(2, 2);
        let kernel = vec![DVector::from_vec(vec![1.0, 0.0])];
        assert!(!pencil_semisimple_at_zero(&a, &b, &kernel).unwrap());

        // diagonalizable counterpart: kernel is all of the nullspace and the
        // zero eigenvalue is semi-simple
        let a2 = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        let kernel2 = vec![DVector::from_vec(vec![1.0, 0.0])];
        assert!(pencil_semisimple_at_zero(&a2, &b, &kernel2).unwrap());
    }

    #[test]
    fn synthetic_pencil_eigenvalues_recovered() {
        // A + λB with A = diag(1, 2, 3), B = diag(1, 1, 0):
        // finite eigenvalues λ = −1, −2 and one infinite eigenvalue
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]));
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 0.0]));
        let eigs = generalized_eigenvalues(&a, &b).unwrap();
        assert_eq!(eigs.len(), 2);
        assert!((eigs[0].re + 1.0).abs() < 1e-10 && eigs[0].im.abs() < 1e-12);
        assert!((eigs[1].re + 2.0).abs() < 1e-10 && eigs[1].im.abs() < 1e-12);
    }

    #[test]
    fn assembly_order_permutation_leaves_spectrum_unchanged() {
        // permuting unknowns and equations is a similarity of the pencil
        let (coe, geom) = setup(2);
        let p = assemble_pencil(&coe, &geom, ModeIndex::new(2, 2), SpectralParams::new(12).unwrap())
            .unwrap();
        let dim = p.a.nrows();
        let perm: Vec<usize> = (0..dim).map(|i| (dim - 1 - i + 3) % dim).collect();
        let mut pa = DMatrix::<f64>::zeros(dim, dim);
        let mut pb = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                pa[(i, j)] = p.a[(perm[i], perm[j])];
                pb[(i, j)] = p.b[(perm[i], perm[j])];
            }
        }
        let window = |v: Vec<nalgebra::Complex<f64>>| -> Vec<nalgebra::Complex<f64>> {
            v.into_iter().filter(|e| e.norm() < 1e2).collect()
        };
        let e1 = window(generalized_eigenvalues(&p.a, &p.b).unwrap());
        let e2 = window(generalized_eigenvalues(&pa, &pb).unwrap());
        // every well-resolved eigenvalue must survive the permutation
        for k in 0..8.min(e1.len()) {
            let closest = e2
                .iter()
                .map(|e| (e - e1[k]).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(
                closest < 1e-10 * e1[k].norm().max(1.0),
                "k={k}: {} unmatched (closest {closest})",
                e1[k]
            );
        }
    }
}
