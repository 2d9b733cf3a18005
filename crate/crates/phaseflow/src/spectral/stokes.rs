//! Per-mode interface Stokes solution operators.
//!
//! For a surface harmonic Y of degree l the velocity field is expanded in
//! spheroidal components u = f(r)·Y·e_r + t(r)·W with W = ∇_ω Y (toroidal
//! components carry no normal velocity and no interface data of the relevant
//! types, so they never enter). The pressure mode is harmonic per region and
//! is represented by its one (interior) or two (exterior) radial amplitudes,
//! which keeps every solve a dense banded-size linear system without special
//! functions.
//!
//! Data is (g₁, g₂, g₃) = (−[[Tν·ν]], −[[Tν·ν/ρ]], −P_Σ[[Tν]]) and the
//! operator maps it to ([[ρu·ν]]/[[ρ]], [[u·ν]]/[[1/ρ]], P_Σu); tangential
//! quantities are expressed in the surface-L² normalized basis Ŵ = W/√ν so
//! that the matrix is symmetric in the flat coefficient inner product.

use nalgebra::{DMatrix, DVector};

use crate::cheb::{lobatto, Lobatto};
use crate::error::{Error, Result};
use crate::geometry::sphere_area;
use crate::harmonics::ModeIndex;

use super::{LinearizedCoeffs, SpectralGeometry, SpectralParams};

/// Reconstructed radial profiles of one solve (unit data in one slot).
#[derive(Debug, Clone)]
pub struct StokesSolution {
    pub f1: DVector<f64>,
    pub t1: Option<DVector<f64>>,
    pub f2: DVector<f64>,
    pub t2: Option<DVector<f64>>,
}

/// The per-mode operator: the small dense matrix plus the discrete fields
/// behind each column, for identity testing.
#[derive(Debug, Clone)]
pub struct StokesMode {
    pub mode: ModeIndex,
    pub lambda: f64,
    /// 3×3 for l ≥ 1 (2×2 for l = 0) in the normalized (Y, Y, Ŵ) basis.
    pub s: DMatrix<f64>,
    pub solutions: Vec<StokesSolution>,
    grid1: Lobatto,
    grid2: Lobatto,
    coe: LinearizedCoeffs,
    geom: SpectralGeometry,
}

pub(super) struct Layout {
    pub(super) len: usize,
    pub(super) with_t: bool,
    pub(super) f1: usize,
    pub(super) t1: usize,
    pub(super) a1: usize,
    pub(super) f2: usize,
    pub(super) t2: usize,
    pub(super) a2: usize,
    pub(super) b2: usize,
    pub(super) size: usize,
}

impl Layout {
    pub(super) fn new(len: usize, l: usize) -> Self {
        if l == 0 {
            Layout {
                len,
                with_t: false,
                f1: 0,
                t1: usize::MAX,
                a1: len,
                f2: len + 1,
                t2: usize::MAX,
                a2: 2 * len + 1,
                b2: 2 * len + 2,
                size: 2 * len + 3,
            }
        } else {
            Layout {
                len,
                with_t: true,
                f1: 0,
                t1: len,
                a1: 2 * len,
                f2: 2 * len + 1,
                t2: 3 * len + 1,
                a2: 4 * len + 1,
                b2: 4 * len + 2,
                size: 4 * len + 3,
            }
        }
    }
}

/// Exterior pressure basis: (r/R)^l and (r/R)^{−(l+n−2)}, degenerating to
/// log(r/R) for n = 2, l = 0. Returns (value, derivative) pairs.
fn pressure_basis(n: usize, l: usize, r_star: f64, r: f64) -> [(f64, f64); 2] {
    let lf = l as f64;
    let x = r / r_star;
    let p1 = (x.powf(lf), lf / r_star * x.powf(lf - 1.0));
    let k = lf + n as f64 - 2.0;
    let p2 = if k > 0.0 {
        (x.powf(-k), -k / r_star * x.powf(-k - 1.0))
    } else {
        (x.ln(), 1.0 / r)
    };
    [p1, p2]
}

/// Assembles the per-mode Stokes block into `mat` at the given row cursor,
/// returning the next free row. Shared by the operator solve and the full
/// eigenvalue pencil (which adds its own λ-mass entries via `mass`).
#[allow(clippy::too_many_arguments)]
pub(super) fn assemble_stokes_block(
    mat: &mut DMatrix<f64>,
    mass: Option<&mut DMatrix<f64>>,
    lambda: f64,
    lay_off: usize,
    lay: &Layout,
    coe: &LinearizedCoeffs,
    geom: &SpectralGeometry,
    mode: ModeIndex,
    g1: &Lobatto,
    g2: &Lobatto,
    mut row: usize,
) -> usize {
    let n = geom.n as f64;
    let nu = mode.nu();
    let len = lay.len;
    let mut mass = mass;

    // momentum at interior nodes of each region, rows scaled by r²
    for (region, grid) in [(0usize, g1), (1usize, g2)] {
        let (rho, mu) = if region == 0 {
            (coe.rho1, coe.mu1)
        } else {
            (coe.rho2, coe.mu2)
        };
        let (f_off, t_off, pa, pb) = if region == 0 {
            (lay.f1, lay.t1, lay.a1, usize::MAX)
        } else {
            (lay.f2, lay.t2, lay.a2, lay.b2)
        };
        for j in 1..len - 1 {
            let r = grid.nodes[j];
            let r2 = r * r;
            // radial momentum
            for k in 0..len {
                mat[(row, lay_off + f_off + k)] +=
                    -mu * (r2 * grid.d2[(j, k)] + (n - 1.0) * r * grid.d1[(j, k)]);
            }
            mat[(row, lay_off + f_off + j)] += mu * (nu + n - 1.0) + lambda * rho * r2;
            if let Some(m) = mass.as_deref_mut() {
                m[(row, lay_off + f_off + j)] += rho * r2;
            }
            if lay.with_t {
                mat[(row, lay_off + t_off + j)] += -2.0 * mu * nu;
            }
            // pressure gradient, r²-scaled
            let basis = pressure_basis(geom.n, mode.l, geom.r_star, r);
            mat[(row, lay_off + pa)] += r2 * basis[0].1;
            if pb != usize::MAX {
                mat[(row, lay_off + pb)] += r2 * basis[1].1;
            }
            row += 1;

            if lay.with_t {
                // tangential momentum
                for k in 0..len {
                    mat[(row, lay_off + t_off + k)] +=
                        -mu * (r2 * grid.d2[(j, k)] + (n - 1.0) * r * grid.d1[(j, k)]);
                }
                mat[(row, lay_off + t_off + j)] += -mu * ((n - 3.0) - nu) + lambda * rho * r2;
                if let Some(m) = mass.as_deref_mut() {
                    m[(row, lay_off + t_off + j)] += rho * r2;
                }
                mat[(row, lay_off + f_off + j)] += -2.0 * mu;
                mat[(row, lay_off + pa)] += r * basis[0].0;
                if pb != usize::MAX {
                    mat[(row, lay_off + pb)] += r * basis[1].0;
                }
                row += 1;
            }
        }
    }

    // parity at the origin
    if !lay.with_t {
        mat[(row, lay_off + lay.f1)] = 1.0;
        row += 1;
    } else if mode.l == 1 {
        mat[(row, lay_off + lay.f1)] = 1.0;
        mat[(row, lay_off + lay.t1)] = -1.0;
        row += 1;
        for k in 0..len {
            mat[(row, lay_off + lay.f1 + k)] = g1.d1[(0, k)];
        }
        row += 1;
    } else {
        mat[(row, lay_off + lay.f1)] = 1.0;
        row += 1;
        mat[(row, lay_off + lay.t1)] = 1.0;
        row += 1;
    }

    // incompressibility r·f′ + (n−1)f − ν·t = 0 at the region endpoints that
    // pin the divergence mode: interior at R_*, exterior at R_* and R_Ω
    let mut div_row = |grid: &Lobatto, node: usize, f_off: usize, t_off: usize, row: usize| {
        let r = grid.nodes[node];
        for k in 0..len {
            mat[(row, lay_off + f_off + k)] += r * grid.d1[(node, k)];
        }
        mat[(row, lay_off + f_off + node)] += n - 1.0;
        if lay.with_t {
            mat[(row, lay_off + t_off + node)] += -nu;
        }
    };
    div_row(g1, len - 1, lay.f1, lay.t1, row);
    row += 1;
    div_row(g2, 0, lay.f2, lay.t2, row);
    row += 1;
    div_row(g2, len - 1, lay.f2, lay.t2, row);
    row += 1;

    // outer no-slip
    mat[(row, lay_off + lay.f2 + len - 1)] = 1.0;
    row += 1;
    if lay.with_t {
        mat[(row, lay_off + lay.t2 + len - 1)] = 1.0;
        row += 1;
        // tangential velocity continuity across the interface
        mat[(row, lay_off + lay.t2)] = 1.0;
        mat[(row, lay_off + lay.t1 + len - 1)] = -1.0;
        row += 1;
    }

    row
}

/// Adds −[[2μ f′ − p]]-style entries (the normal stress jump) into a row;
/// `weight_i` multiplies the phase-i contribution (1 or 1/ρ_i).
#[allow(clippy::too_many_arguments)]
pub(super) fn normal_stress_jump_row(
    mat: &mut DMatrix<f64>,
    lay_off: usize,
    lay: &Layout,
    coe: &LinearizedCoeffs,
    geom: &SpectralGeometry,
    mode: ModeIndex,
    g1: &Lobatto,
    g2: &Lobatto,
    row: usize,
    w1: f64,
    w2: f64,
) {
    let len = lay.len;
    // −w2(2μ₂f₂′ − p₂) + w1(2μ₁f₁′ − p₁) at r = R_*
    for k in 0..len {
        mat[(row, lay_off + lay.f2 + k)] += -w2 * 2.0 * coe.mu2 * g2.d1[(0, k)];
        mat[(row, lay_off + lay.f1 + k)] += w1 * 2.0 * coe.mu1 * g1.d1[(len - 1, k)];
    }
    let basis = pressure_basis(geom.n, mode.l, geom.r_star, geom.r_star);
    mat[(row, lay_off + lay.a2)] += w2 * basis[0].0;
    mat[(row, lay_off + lay.b2)] += w2 * basis[1].0;
    mat[(row, lay_off + lay.a1)] += -w1 * 1.0;
}

/// Tangential stress trace μ(t′ − t/R + f/R) entries for one side.
fn tangential_stress_entries(
    mat: &mut DMatrix<f64>,
    lay_off: usize,
    len: usize,
    f_off: usize,
    t_off: usize,
    mu: f64,
    grid: &Lobatto,
    node: usize,
    r: f64,
    row: usize,
    scale: f64,
) {
    for k in 0..len {
        mat[(row, lay_off + t_off + k)] += scale * mu * grid.d1[(node, k)];
    }
    mat[(row, lay_off + t_off + node)] += -scale * mu / r;
    mat[(row, lay_off + f_off + node)] += scale * mu / r;
}

/// −√ν[[μ(t′ − t/R + f/R)]] row (the −P_Σ[[Tν]] data in the Ŵ basis).
#[allow(clippy::too_many_arguments)]
pub(super) fn tangential_stress_jump_row(
    mat: &mut DMatrix<f64>,
    lay_off: usize,
    lay: &Layout,
    coe: &LinearizedCoeffs,
    geom: &SpectralGeometry,
    mode: ModeIndex,
    g1: &Lobatto,
    g2: &Lobatto,
    row: usize,
) {
    let len = lay.len;
    let sq = mode.nu().sqrt();
    tangential_stress_entries(
        mat, lay_off, len, lay.f2, lay.t2, coe.mu2, g2, 0, geom.r_star, row, -sq,
    );
    tangential_stress_entries(
        mat, lay_off, len, lay.f1, lay.t1, coe.mu1, g1, len - 1, geom.r_star, row, sq,
    );
}

/// Solves the asymmetric interface Stokes problem for the unit data columns
/// and returns the per-mode operator matrix with the reconstructed fields.
pub fn stokes_mode_operator(
    coe: &LinearizedCoeffs,
    geom: &SpectralGeometry,
    mode: ModeIndex,
    lambda: f64,
    params: SpectralParams,
) -> Result<StokesMode> {
    let len = params.nodes;
    let lay = Layout::new(len, mode.l);
    let g1 = lobatto(0.0, geom.r_star, len);
    let g2 = lobatto(geom.r_star, geom.r_omega, len);

    let mut mat = DMatrix::<f64>::zeros(lay.size, lay.size);
    let row = assemble_stokes_block(
        &mut mat, None, lambda, 0, &lay, coe, geom, mode, &g1, &g2, 0,
    );

    // data rows: g1, g2 (normal stress jumps), g3 (tangential stress jump)
    let r_g1 = row;
    normal_stress_jump_row(&mut mat, 0, &lay, coe, geom, mode, &g1, &g2, r_g1, 1.0, 1.0);
    let r_g2 = row + 1;
    normal_stress_jump_row(
        &mut mat,
        0,
        &lay,
        coe,
        geom,
        mode,
        &g1,
        &g2,
        r_g2,
        1.0 / coe.rho1,
        1.0 / coe.rho2,
    );
    let mut data_rows = vec![r_g1, r_g2];
    if lay.with_t {
        let r_g3 = row + 2;
        tangential_stress_jump_row(&mut mat, 0, &lay, coe, geom, mode, &g1, &g2, r_g3);
        data_rows.push(r_g3);
    }
    debug_assert_eq!(*data_rows.last().unwrap() + 1, lay.size);

    let lu = mat.lu();
    let k = data_rows.len();
    let mut s = DMatrix::<f64>::zeros(k, k);
    let mut solutions = Vec::with_capacity(k);
    let sqnu = mode.nu().sqrt();
    for (col, &dr) in data_rows.iter().enumerate() {
        let mut rhs = DVector::<f64>::zeros(lay.size);
        rhs[dr] = 1.0;
        let z = lu.solve(&rhs).ok_or(Error::SolveFailure("stokes_mode_operator"))?;
        let f1 = DVector::from_fn(len, |i, _| z[lay.f1 + i]);
        let f2 = DVector::from_fn(len, |i, _| z[lay.f2 + i]);
        let (t1, t2) = if lay.with_t {
            (
                Some(DVector::from_fn(len, |i, _| z[lay.t1 + i])),
                Some(DVector::from_fn(len, |i, _| z[lay.t2 + i])),
            )
        } else {
            (None, None)
        };
        let f1_r = f1[len - 1];
        let f2_r = f2[0];
        s[(0, col)] = (coe.rho2 * f2_r - coe.rho1 * f1_r) / coe.rho_jump();
        s[(1, col)] = (f2_r - f1_r) / coe.inv_rho_jump();
        if lay.with_t {
            s[(2, col)] = sqnu * t2.as_ref().unwrap()[0];
        }
        solutions.push(StokesSolution { f1, t1, f2, t2 });
    }

    Ok(StokesMode {
        mode,
        lambda,
        s,
        solutions,
        grid1: g1,
        grid2: g2,
        coe: *coe,
        geom: *geom,
    })
}

impl StokesMode {
    /// Symmetrized operator (S + Sᵀ)/2.
    pub fn symmetrized(&self) -> DMatrix<f64> {
        (&self.s + self.s.transpose()) * 0.5
    }

    /// Relative asymmetry ‖S − Sᵀ‖ / ‖S‖ (Frobenius).
    pub fn asymmetry(&self) -> f64 {
        let diff = (&self.s - self.s.transpose()).norm();
        diff / self.s.norm().max(f64::MIN_POSITIVE)
    }

    /// Volume quadrature of λ∫ρ|u|² + 2∫μ|D(u)|² for the solution driven by
    /// unit data in `col`, with both fields reconstructed from the profiles.
    pub fn energy_quadrature(&self, col: usize) -> f64 {
        let sol = &self.solutions[col];
        let nu = self.mode.nu();
        let n = self.geom.n;
        let s_n = sphere_area(n, 1.0);
        let mut total = 0.0;
        for (region, grid) in [(0usize, &self.grid1), (1usize, &self.grid2)] {
            let (rho, mu, f, t) = if region == 0 {
                (self.coe.rho1, self.coe.mu1, &sol.f1, &sol.t1)
            } else {
                (self.coe.rho2, self.coe.mu2, &sol.f2, &sol.t2)
            };
            let len = grid.nodes.len();
            let fp = &grid.d1 * f;
            let zero = DVector::<f64>::zeros(len);
            let tv = t.as_ref().unwrap_or(&zero);
            let tp = &grid.d1 * tv;
            for j in 0..len {
                let r = grid.nodes[j];
                if r == 0.0 {
                    // integrand has a removable zero at the origin
                    continue;
                }
                let (fj, tj, fpj, tpj) = (f[j], tv[j], fp[j], tp[j]);
                let u_sq = fj * fj + nu * tj * tj;
                let d_sq = fpj * fpj
                    + 0.5 * nu * (tpj + (fj - tj) / r).powi(2)
                    + ((n as f64 - 1.0) * fj * fj - 2.0 * nu * fj * tj
                        + nu * (nu - n as f64 + 2.0) * tj * tj)
                        / (r * r);
                total += grid.weights[j]
                    * s_n
                    * r.powi(n as i32 - 1)
                    * (self.lambda * rho * u_sq + 2.0 * mu * d_sq);
            }
        }
        total
    }

    /// (S g | g)_{L²(Σ)} for unit data in `col`: |Σ| · S[col, col].
    pub fn energy_pairing(&self, col: usize) -> f64 {
        self.geom.area() * self.s[(col, col)]
    }
}
