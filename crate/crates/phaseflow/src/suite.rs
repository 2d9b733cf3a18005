//! The verification suite: one runnable check per acceptance criterion,
//! shared by the command-line `suite` subcommand and the acceptance test
//! target. Every tolerance is pinned here.

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::radial::{simulate_radial, RadialGrid, RadialState};
use crate::dynamics::ripening::{simulate_ripening, RipeningContext};
use crate::dynamics::snapshot::{interface_residuals, FieldSnapshot};
use crate::equilibria::{
    build_equilibrium, energy_at_uniform_theta, total_functionals,
    EquilibriumState, StateFields,
};
use crate::error::Result;
use crate::geometry::{sphere_area, Domain, SphereFamily};
use crate::harmonics::ModeIndex;
use crate::spectral::lemmas::fixtures::{contraction_pair, psd_blocks, Stream};
use crate::spectral::lemmas::{contraction_fixture_check, schur_check};
use crate::spectral::{
    assemble_dispersion, closed_form_dtn_static, contraction_check, dispersion_roots,
    dispersion::default_lambda_grid, direct_mode_spectrum, heat_dtn, kernel_check,
    semisimplicity_check, stokes_mode_operator, volume_exchange_spectrum, LinearizedCoeffs,
    SpectralGeometry, SpectralParams,
};
use crate::thermo::{
    default_materials, MaterialSet, Phase, PsiFamily, ScalarFamily, SigmaFamily, SurfaceLaw,
};
use crate::variations::{
    classify_definiteness, lagrange_residual, second_variation_form, Classification, Perturbation,
};

/// One measured quantity inside a criterion.
#[derive(Debug, Clone, Serialize)]
pub struct CheckLine {
    pub label: String,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckLine {
    fn below(label: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        CheckLine {
            label: label.into(),
            measured,
            tolerance,
            pass: measured <= tolerance && measured.is_finite(),
        }
    }
    fn flag(label: impl Into<String>, ok: bool) -> Self {
        CheckLine {
            label: label.into(),
            measured: if ok { 1.0 } else { 0.0 },
            tolerance: 1.0,
            pass: ok,
        }
    }
}

/// Outcome of one criterion.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub id: usize,
    pub name: String,
    pub pass: bool,
    pub lines: Vec<CheckLine>,
}

impl CheckResult {
    fn from_lines(id: usize, name: &str, lines: Vec<CheckLine>) -> Self {
        CheckResult {
            id,
            name: name.to_string(),
            pass: lines.iter().all(|l| l.pass),
            lines,
        }
    }
}

/// Aggregated report.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Suite resolution knobs. Defaults match the pinned acceptance setup.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SuiteConfig {
    pub nodes: usize,
    pub second_resolution: usize,
    pub modes_max: usize,
    pub radial_steps: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            nodes: 48,
            second_resolution: 96,
            modes_max: 6,
            radial_steps: 10_000,
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

fn fd4(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

/// Criterion 1: thermodynamic identities on 1000 random temperature draws.
pub fn check_thermo_identities() -> Result<CheckResult> {
    let ms = default_materials();
    let theta_c = ms.theta_c();
    let mut stream = Stream::new(11);
    let mut worst_identity = 0.0f64;
    let mut worst_fd = 0.0f64;
    for _ in 0..1000 {
        let theta = 0.01 * theta_c + (0.98 * theta_c) * (0.5 * stream.next_f64() + 0.5);
        for ph in [Phase::One, Phase::Two] {
            let d = ms.derived_bulk(ph, theta)?;
            let psi = ms.phase(ph).psi;
            worst_identity = worst_identity
                .max((d.eps - (psi.value(theta) + theta * d.eta)).abs() / (1.0 + d.eps.abs()));
            worst_identity =
                worst_identity.max((d.kappa + theta * psi.d2(theta)).abs() / (1.0 + d.kappa.abs()));
            let h = 1e-4 * theta;
            worst_fd = worst_fd.max((psi.d1(theta) - fd4(|t| psi.value(t), theta, h)).abs());
            worst_fd = worst_fd.max((psi.d2(theta) - fd4(|t| psi.d1(t), theta, h)).abs());
        }
        let l = ms.latent_heat(theta)?;
        let eta_jump = -ms.phase2.psi.d1(theta) + ms.phase1.psi.d1(theta);
        worst_identity = worst_identity.max((l + theta * eta_jump).abs() / (1.0 + l.abs()));
        let s = ms.derived_surface(theta)?;
        let sigma = ms.surface.sigma;
        worst_identity = worst_identity
            .max((s.eps - (sigma.value(theta) + theta * s.eta)).abs() / (1.0 + s.eps.abs()));
        worst_identity = worst_identity.max((s.kappa + theta * sigma.d2()).abs());
        worst_identity = worst_identity.max((s.latent - theta * sigma.d1(theta)).abs());
        let h = 1e-4 * theta;
        worst_fd = worst_fd.max((sigma.d1(theta) - fd4(|t| sigma.value(t), theta, h)).abs());
    }
    Ok(CheckResult::from_lines(
        1,
        "thermodynamic identity suite",
        vec![
            CheckLine::below("six derived-quantity identities (relative)", worst_identity, 1e-12),
            CheckLine::below("analytic vs finite-difference derivatives", worst_fd, 1e-6),
        ],
    ))
}

fn random_materials(stream: &mut Stream) -> MaterialSet {
    let u = |s: &mut Stream, lo: f64, hi: f64| lo + (hi - lo) * (0.5 * s.next_f64() + 0.5);
    let rho1 = u(stream, 1.5, 3.0);
    let rho2 = u(stream, 0.4, 1.2);
    let phase1 = crate::thermo::PhaseLaw {
        rho: rho1,
        psi: PsiFamily {
            a: 0.0,
            b: u(stream, 0.5, 2.0),
            c: u(stream, 1.0, 3.0),
        },
        mu: ScalarFamily::constant(u(stream, 0.5, 2.0)),
        d: ScalarFamily::constant(u(stream, 0.5, 2.0)),
    };
    let phase2 = crate::thermo::PhaseLaw {
        rho: rho2,
        psi: PsiFamily {
            a: 0.0,
            b: 0.0,
            c: u(stream, 0.5, 2.0),
        },
        mu: ScalarFamily::constant(u(stream, 0.5, 2.0)),
        d: ScalarFamily::constant(u(stream, 0.5, 2.0)),
    };
    let surface = SurfaceLaw::new(
        SigmaFamily::concave(u(stream, 0.5, 2.0), 2.0),
        ScalarFamily::constant(1.0),
        ScalarFamily::constant(0.1),
        4.0,
    )
    .expect("concave sigma has a zero");
    MaterialSet::new(phase1, phase2, surface).expect("densities differ by construction")
}

/// Criterion 2: equilibrium consistency on 100 random parameter draws.
pub fn check_equilibrium_consistency() -> Result<CheckResult> {
    let mut stream = Stream::new(23);
    let mut worst_yl = 0.0f64;
    let mut worst_gt = 0.0f64;
    let mut worst_mass = 0.0f64;
    let mut worst_energy = 0.0f64;
    let mut worst_lagrange = 0.0f64;
    for draw in 0..100 {
        let ms = random_materials(&mut stream);
        let n = if draw % 2 == 0 { 3 } else { 2 };
        let m = if draw % 5 == 0 { 2 } else { 1 };
        let r_omega = if m == 1 { 2.0 } else { 8.0 };
        let dom = Domain::new(n, r_omega)?;
        let frac = 0.02 + 0.2 * (0.5 * stream.next_f64() + 0.5);
        let v1 = frac * dom.volume();
        let m0 = ms.phase1.rho * v1 + ms.phase2.rho * (dom.volume() - v1);
        let theta_target = 0.4 + 1.2 * (0.5 * stream.next_f64() + 0.5);
        let centers: Vec<[f64; 3]> = if m == 1 {
            vec![[0.0; 3]]
        } else {
            vec![[-3.0, 0.0, 0.0], [3.0, 0.0, 0.0]]
        };
        let radius_probe = crate::equilibria::radius_from_mass(&dom, &ms, m0, m)?;
        let probe_family = SphereFamily::new(centers.clone(), radius_probe)?;
        let e0 = energy_at_uniform_theta(&ms, &dom, &probe_family, theta_target)?;
        let (eq, _) = build_equilibrium(&ms, dom, centers, m0, e0)?;

        let sigma_h = ms.surface.sigma.value(eq.theta_star) * eq.h_star;
        let scale = 1.0 + eq.pi1.abs().max(eq.pi2.abs());
        worst_yl = worst_yl.max(((eq.pi2 - eq.pi1) - sigma_h).abs() / scale);
        let gt = ms.jump(|p| p.psi.value(eq.theta_star))
            + (eq.pi2 / ms.phase2.rho - eq.pi1 / ms.phase1.rho);
        worst_gt = worst_gt.max(gt.abs() / scale);

        let tot = total_functionals(
            &ms,
            &eq.domain,
            &eq.spheres,
            &StateFields::uniform(eq.theta_star),
        )?;
        worst_mass = worst_mass.max((tot.mass - m0).abs() / m0);
        worst_energy = worst_energy.max((tot.energy - e0).abs() / e0.abs().max(1.0));
        worst_lagrange = worst_lagrange.max(lagrange_residual(&ms, &eq)?);
    }
    Ok(CheckResult::from_lines(
        2,
        "equilibrium consistency",
        vec![
            CheckLine::below("Young-Laplace residual (relative)", worst_yl, 1e-12),
            CheckLine::below("Gibbs-Thomson residual (relative)", worst_gt, 1e-12),
            CheckLine::below("mass round trip (relative)", worst_mass, 1e-10),
            CheckLine::below("energy round trip (relative)", worst_energy, 1e-10),
            CheckLine::below("Lagrange-multiplier residual", worst_lagrange, 1e-8),
        ],
    ))
}

fn normalized_two_sphere_eq() -> Result<(MaterialSet, EquilibriumState)> {
    // sigma(theta_*) = 1 at theta_* = 1 so that sigma_* theta_* = 1
    let mut ms = default_materials();
    ms.surface = SurfaceLaw::new(
        SigmaFamily::concave(4.0 / 3.0, 2.0),
        ScalarFamily::constant(1.0),
        ScalarFamily::constant(0.1),
        4.0,
    )?;
    let dom = Domain::new(3, 8.0)?;
    let spheres = SphereFamily::new(vec![[-3.0, 0.0, 0.0], [3.0, 0.0, 0.0]], 1.0)?;
    let eq = EquilibriumState::from_radius_temperature(&ms, dom, spheres, 1.0)?;
    Ok((ms, eq))
}

/// Criterion 3: second-variation witness value and definiteness split.
pub fn check_second_variation() -> Result<CheckResult> {
    let mut lines = Vec::new();

    // normalized witness: 16π
    let (ms, eq) = normalized_two_sphere_eq()?;
    let mut pert = Perturbation::zero(3, 2, 8)?;
    pert.h[0].shift_mean(1.0);
    pert.h[1].shift_mean(-1.0);
    let value = second_variation_form(&ms, &eq, &pert)?;
    let expected = 16.0 * std::f64::consts::PI;
    lines.push(CheckLine::below(
        "m=2 witness vs closed form 16π (relative)",
        (value - expected).abs() / expected,
        1e-8,
    ));

    // random draws at theta_* = 1 against the closed form
    let mut stream = Stream::new(37);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let sigma0 = 0.6 + (0.5 * stream.next_f64() + 0.5) * 1.2;
        let radius = 0.5 + (0.5 * stream.next_f64() + 0.5) * 1.0;
        let mut ms = default_materials();
        ms.surface = SurfaceLaw::new(
            SigmaFamily::concave(sigma0, 2.0),
            ScalarFamily::constant(1.0),
            ScalarFamily::constant(0.1),
            4.0,
        )?;
        let dom = Domain::new(3, 10.0)?;
        let spheres = SphereFamily::new(vec![[-4.0, 0.0, 0.0], [4.0, 0.0, 0.0]], radius)?;
        let eq = EquilibriumState::from_radius_temperature(&ms, dom, spheres, 1.0)?;
        let mut pert = Perturbation::zero(3, 2, 8)?;
        let (h0, h1) = (stream.next_f64(), -stream.next_f64());
        pert.h[0].shift_mean(h0);
        pert.h[1].shift_mean(h1);
        // project to the mass constraint: equal areas, so remove the mean
        let mean = 0.5 * (h0 + h1);
        pert.h[0].shift_mean(-mean);
        pert.h[1].shift_mean(-mean);
        let sum_sq = (h0 - mean).powi(2) + (h1 - mean).powi(2);
        let closed = ms.surface.sigma.value(1.0) * 1.0 * 2.0 / (radius * radius)
            * sphere_area(3, radius)
            * sum_sq;
        let got = second_variation_form(&ms, &eq, &pert)?;
        worst = worst.max((got - closed).abs() / closed.abs().max(1e-300));
    }
    lines.push(CheckLine::below(
        "random draws vs σ_*θ_*((n−1)/R²)|Σ|Σh² (relative, θ_*=1)",
        worst,
        1e-8,
    ));

    // classifications
    let msd = default_materials();
    let dom = Domain::new(3, 2.0)?;
    let eq1 = EquilibriumState::from_radius_temperature(
        &msd,
        dom,
        SphereFamily::concentric(1.0),
        1.0,
    )?;
    let report1 = classify_definiteness(&msd, &eq1, 8)?;
    lines.push(CheckLine::flag(
        "m=1 negative semi-definite",
        report1.classification == Classification::NegSemiDefinite,
    ));
    let l1 = report1
        .directions
        .iter()
        .find(|d| d.label == "h_l1_sphere0")
        .map(|d| d.value.abs())
        .unwrap_or(f64::INFINITY);
    lines.push(CheckLine::below("m=1 equality on translation modes", l1, 1e-10));

    for m in [2usize, 3] {
        let dom = Domain::new(3, 12.0)?;
        let centers: Vec<[f64; 3]> = (0..m).map(|k| [5.0 * k as f64 - 5.0, 0.0, 0.0]).collect();
        let eq = EquilibriumState::from_radius_temperature(
            &msd,
            dom,
            SphereFamily::new(centers, 1.0)?,
            1.0,
        )?;
        let report = classify_definiteness(&msd, &eq, 8)?;
        lines.push(CheckLine::flag(
            format!("m={m} indefinite with positive dim {}", m - 1),
            report.classification == Classification::Indefinite
                && report.positive_subspace_dim == m - 1,
        ));
    }

    Ok(CheckResult::from_lines(3, "second variation", lines))
}

struct SpectralVerdict {
    max_unstable_re: f64,
    kernel_dim_ok: bool,
    kernel_residual: f64,
    semisimple: bool,
    positive_roots: usize,
    route_disagreement: f64,
}

fn spectral_connected_case(
    ms: &MaterialSet,
    n: usize,
    modes_max: usize,
    nodes: usize,
) -> Result<SpectralVerdict> {
    let coe = LinearizedCoeffs::at(ms, 1.0)?;
    let geom = SpectralGeometry::new(n, 1.0, 2.0)?;
    let params = SpectralParams::new(nodes)?;

    let per_mode: Vec<Result<(f64, usize, f64)>> = (0..=modes_max)
        .into_par_iter()
        .map(|l| {
            let mode = ModeIndex::new(n, l);
            let eigs = direct_mode_spectrum(&coe, &geom, mode, params, 200)?;
            let max_re = eigs
                .iter()
                .filter(|e| e.norm() > 1e-6)
                .map(|e| e.re)
                .fold(f64::NEG_INFINITY, f64::max);

            let mut positive_roots = 0;
            let mut disagreement = 0.0f64;
            if l >= 1 {
                let roots = dispersion_roots(&coe, &geom, mode, &default_lambda_grid(), params)?;
                for &root in &roots {
                    if root > 1e-6 {
                        positive_roots += 1;
                    }
                    // the direct route must reproduce every dispersion root
                    let closest = eigs
                        .iter()
                        .map(|e| (e - nalgebra::Complex::new(root, 0.0)).norm())
                        .fold(f64::INFINITY, f64::min);
                    disagreement = disagreement.max(closest / root.max(1.0));
                }
                // conversely: no root means no eigenvalue in (1e-6, λ_max]
                if roots.iter().all(|&r| r <= 1e-6) {
                    let spurious = eigs
                        .iter()
                        .any(|e| e.re > 1e-6 && e.re <= 1e3 && e.im.abs() < 1e-6);
                    if spurious {
                        disagreement = f64::INFINITY;
                    }
                }
            }
            Ok((max_re, positive_roots, disagreement))
        })
        .collect();

    let mut max_unstable_re = f64::NEG_INFINITY;
    let mut positive_roots = 0;
    let mut route_disagreement = 0.0f64;
    for r in per_mode {
        let (re, roots, dis) = r?;
        max_unstable_re = max_unstable_re.max(re);
        positive_roots += roots;
        route_disagreement = route_disagreement.max(dis);
    }

    let kernel = kernel_check(&coe, &geom, params)?;
    let kernel_residual = kernel
        .residuals
        .iter()
        .map(|(_, r)| *r)
        .fold(0.0f64, f64::max);
    let semisimple = semisimplicity_check(&coe, &geom, params)?;

    Ok(SpectralVerdict {
        max_unstable_re,
        kernel_dim_ok: kernel.dimension == n + 2,
        kernel_residual,
        semisimple,
        positive_roots,
        route_disagreement,
    })
}

/// Criterion 4: spectral stability of the connected case at two resolutions.
pub fn check_spectral_connected(cfg: &SuiteConfig) -> Result<CheckResult> {
    let ms = default_materials();
    let mut lines = Vec::new();
    for nodes in [cfg.nodes, cfg.second_resolution] {
        for n in [2usize, 3] {
            let v = spectral_connected_case(&ms, n, cfg.modes_max, nodes)?;
            lines.push(CheckLine::below(
                format!("n={n} nodes={nodes}: max Re λ outside the zero cluster"),
                v.max_unstable_re,
                1e-6,
            ));
            lines.push(CheckLine::flag(
                format!("n={n} nodes={nodes}: kernel dimension = {}", n + 2),
                v.kernel_dim_ok,
            ));
            lines.push(CheckLine::below(
                format!("n={n} nodes={nodes}: kernel element residuals"),
                v.kernel_residual,
                1e-8,
            ));
            lines.push(CheckLine::flag(
                format!("n={n} nodes={nodes}: λ=0 semi-simple"),
                v.semisimple,
            ));
            lines.push(CheckLine::flag(
                format!("n={n} nodes={nodes}: no positive dispersion roots (l ≥ 2)"),
                v.positive_roots == 0,
            ));
            lines.push(CheckLine::below(
                format!("n={n} nodes={nodes}: dispersion vs direct route (relative)"),
                v.route_disagreement,
                1e-4,
            ));
        }
    }
    Ok(CheckResult::from_lines(
        4,
        "spectral stability, connected case",
        lines,
    ))
}

/// Criterion 5: operator properties (Stokes symmetry/PSD/energy, DtN closed
/// forms, contraction bound, lemma fixtures).
pub fn check_operator_properties(cfg: &SuiteConfig) -> Result<CheckResult> {
    let ms = default_materials();
    let coe = LinearizedCoeffs::at(&ms, 1.0)?;
    let params = SpectralParams::new(cfg.nodes)?;
    let lambdas = [0.0, 0.5, 2.0, 10.0];

    let mut worst_asym = 0.0f64;
    let mut worst_psd = 0.0f64;
    let mut worst_energy = 0.0f64;
    let mut worst_dtn = 0.0f64;
    let mut worst_contraction = 0.0f64;
    for n in [2usize, 3] {
        let geom = SpectralGeometry::new(n, 1.0, 2.0)?;
        for l in 0..=4usize {
            let mode = ModeIndex::new(n, l);
            worst_dtn = worst_dtn.max(rel(
                heat_dtn(&coe, &geom, mode, 0.0, params)?,
                closed_form_dtn_static(&coe, &geom, mode),
            ));
            for &lambda in &lambdas {
                let op = stokes_mode_operator(&coe, &geom, mode, lambda, params)?;
                if l >= 1 {
                    worst_asym = worst_asym.max(op.asymmetry());
                }
                let scale = op.s.norm().max(1.0);
                let min_eig = op.symmetrized().symmetric_eigen().eigenvalues.min();
                worst_psd = worst_psd.max(-min_eig / scale);
                for col in 0..op.s.nrows() {
                    let lhs = op.energy_pairing(col);
                    let rhs = op.energy_quadrature(col);
                    if lhs.abs().max(rhs.abs()) > 1e-12 {
                        worst_energy =
                            worst_energy.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()));
                    }
                }
                worst_contraction =
                    worst_contraction.max(contraction_check(&coe, &geom, mode, lambda, params)?);
            }
        }
    }

    let mut stream = Stream::new(0xFEED);
    let mut worst_lemma = 0.0f64;
    let mut worst_schur = 0.0f64;
    for i in 0..1000 {
        let (a, b) = contraction_pair(&mut stream, 3 + i % 4, 2 + i % 5);
        worst_lemma = worst_lemma.max(contraction_fixture_check(&a, &b)?);
        let (s, r, t) = psd_blocks(&mut stream, 2 + i % 4, 2 + i % 3);
        worst_schur = worst_schur.max(-schur_check(&s, &r, &t)?);
    }

    Ok(CheckResult::from_lines(
        5,
        "operator properties",
        vec![
            CheckLine::below("Stokes asymmetry (relative)", worst_asym, 1e-6),
            CheckLine::below("Stokes negative eigenvalue (relative)", worst_psd, 1e-8),
            CheckLine::below("Stokes energy identity (relative)", worst_energy, 1e-4),
            CheckLine::below("DtN λ=0 closed forms (relative)", worst_dtn, 1e-8),
            CheckLine::below("contraction ‖K‖ − 1", worst_contraction - 1.0, 1e-8),
            CheckLine::below("pos-def lemma fixtures ‖K‖ − 1", worst_lemma - 1.0, 1e-10),
            CheckLine::below("Schur fixtures: −min eigenvalue", worst_schur, 1e-10),
        ],
    ))
}

/// Least-squares slope of ln(e) against t.
fn log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|(t, _)| t).sum();
    let sy: f64 = points.iter().map(|(_, e)| e.ln()).sum();
    let sxx: f64 = points.iter().map(|(t, _)| t * t).sum();
    let sxy: f64 = points.iter().map(|(t, e)| t * e.ln()).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Criterion 6: disconnected case (volume-exchange counts + nonlinear escape
/// rate).
pub fn check_disconnected_case() -> Result<CheckResult> {
    let ms = default_materials();
    let mut lines = Vec::new();
    for m in [2usize, 3, 4] {
        let dom = Domain::new(3, 20.0)?;
        let centers: Vec<[f64; 3]> = (0..m).map(|k| [5.0 * k as f64 - 8.0, 0.0, 0.0]).collect();
        let eq = EquilibriumState::from_radius_temperature(
            &ms,
            dom,
            SphereFamily::new(centers, 1.0)?,
            1.0,
        )?;
        let eigs = volume_exchange_spectrum(&ms, &eq)?;
        let positive = eigs.iter().filter(|&&e| e > 1e-10).count();
        lines.push(CheckLine::flag(
            format!("volume-exchange: m={m} has {} positive rates", m - 1),
            positive == m - 1,
        ));
    }

    // nonlinear escape from the perturbed m = 3 equal-radius state
    let ctx = RipeningContext::new(&ms, 1.0, 3, 1e-3)?;
    let omega = ctx.growth_rate(1.0);
    let delta = 1e-4;
    let initial = vec![1.0 + delta, 1.0, 1.0 - delta];
    let horizon = 6.0 / omega;
    let traj = simulate_ripening(&ctx, &initial, horizon, 1e-3 / omega)?;
    let mut points = Vec::new();
    for (t, row) in traj.times.iter().zip(&traj.radii) {
        let mean: f64 = row.iter().sum::<f64>() / 3.0;
        let dev: f64 = row.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>().sqrt();
        if dev > 3.0 * delta && dev < 60.0 * delta {
            points.push((*t, dev));
        }
    }
    let slope = log_slope(&points);
    lines.push(CheckLine::below(
        "nonlinear escape rate vs leading eigenvalue (relative)",
        (slope - omega).abs() / omega,
        0.05,
    ));

    Ok(CheckResult::from_lines(6, "disconnected case", lines))
}

/// Criterion 7: Lyapunov structure of the two reduced simulators.
pub fn check_lyapunov_structure(cfg: &SuiteConfig) -> Result<CheckResult> {
    let ms = default_materials();
    let grid = RadialGrid::new(3, 1.0, 2.0, 32, 48)?;
    let mut lines = Vec::new();

    let smooth = |grid: &RadialGrid, amp: f64| {
        let mut s = RadialState::uniform(grid, 1.0);
        for (i, th) in s.theta.iter_mut().enumerate() {
            let r = grid.node(i);
            *th += amp * (std::f64::consts::PI * r / grid.r_omega).cos();
        }
        s
    };
    let families: Vec<(&str, RadialState)> = vec![
        ("two-constant", RadialState::two_constant(&grid, 0.9, 1.1)),
        ("smooth-cosine", smooth(&grid, 0.08)),
        ("uniform", RadialState::uniform(&grid, 1.0)),
    ];
    let dt = 2e-3;
    for (name, initial) in &families {
        let traj = simulate_radial(&ms, &grid, initial, cfg.radial_steps, dt)?;
        lines.push(CheckLine::below(
            format!("radial {name}: |ΔE|/E"),
            traj.energy_drift,
            1e-6,
        ));
        lines.push(CheckLine::below(
            format!("radial {name}: −min stepwise ΔΦ"),
            -traj.min_entropy_step,
            1e-10,
        ));
        lines.push(CheckLine::below(
            format!("radial {name}: terminal θ vs energy prediction"),
            (traj.final_state.theta_gamma(&grid) - traj.theta_infinity).abs(),
            1e-6,
        ));
    }

    // entropy-production identity refinement orders (single-step defect;
    // the dt-order subtracts the fixed-grid spatial bias)
    let defect = |grid: &RadialGrid, dt: f64| -> Result<f64> {
        crate::dynamics::radial::production_identity_error(&ms, grid, &smooth(grid, 0.05), dt)
    };
    let bias = defect(&grid, 1e-6)?;
    let t1 = (defect(&grid, 2e-2)? - bias).abs();
    let t2 = (defect(&grid, 1e-2)? - bias).abs();
    let order_dt = (t1 / t2).log2();
    lines.push(CheckLine::below(
        format!("production identity: order in dt (measured {order_dt:.2})"),
        1.0 - order_dt,
        0.0,
    ));
    let coarse_grid = RadialGrid::new(3, 1.0, 2.0, 16, 24)?;
    let fine_grid = RadialGrid::new(3, 1.0, 2.0, 32, 48)?;
    let m_h1 = defect(&coarse_grid, 1e-6)?;
    let m_h2 = defect(&fine_grid, 1e-6)?;
    let order_h = (m_h1 / m_h2).log2();
    lines.push(CheckLine::below(
        format!("production identity: order in Δr (measured {order_h:.2})"),
        2.0 - order_h,
        0.3,
    ));

    // ripening conservation and terminal radius across extinction events
    let ctx = RipeningContext::new(&ms, 1.0, 3, 1e-3)?;
    let initial = vec![1.06, 0.97, 1.0, 0.9];
    let v0: f64 = initial.iter().map(|r: &f64| r.powi(3)).sum();
    let traj = simulate_ripening(&ctx, &initial, 1e7, 1e-2)?;
    lines.push(CheckLine::below(
        "ripening: ΣR^n conservation across events",
        traj.conservation_drift,
        1e-8,
    ));
    let survivor_ok = traj.final_radii.len() == 1
        && (traj.final_radii[0] - v0.powf(1.0 / 3.0)).abs() < 1e-8 * v0.powf(1.0 / 3.0);
    lines.push(CheckLine::flag(
        "ripening: single survivor at the conservation radius",
        survivor_ok,
    ));
    lines.push(CheckLine::below(
        "ripening: max stepwise area increase",
        traj.max_area_increase,
        1e-10,
    ));

    Ok(CheckResult::from_lines(7, "Lyapunov structure", lines))
}

/// Criterion 8: interface-residual evaluator.
pub fn check_residual_evaluator() -> Result<CheckResult> {
    let ms = default_materials();
    let dom = Domain::new(3, 2.0)?;
    let eq =
        EquilibriumState::from_radius_temperature(&ms, dom, SphereFamily::concentric(1.0), 1.0)?;
    let snap = FieldSnapshot::equilibrium(&eq, 61)?;
    let res = interface_residuals(&ms, &snap)?;
    let mut lines = vec![CheckLine::below(
        "equilibrium snapshot: max of the eight residuals",
        res.max(),
        1e-10,
    )];

    // manufactured field: flux-consistent radial velocity outside
    let manufactured = |points: usize| -> Result<(f64, f64)> {
        let mut snap = FieldSnapshot::equilibrium(&eq, points)?;
        let c = 0.01;
        for (i, r) in snap.nodes2.iter().enumerate() {
            snap.u2[i] = c / (r * r);
        }
        let inv_rho_jump = 1.0 / ms.phase2.rho - 1.0 / ms.phase1.rho;
        snap.j = snap.u2[0] / inv_rho_jump;
        snap.v_interface = -snap.j / ms.phase1.rho;
        let res = interface_residuals(&ms, &snap)?;
        let du2 = -2.0 * c / snap.r_star.powi(3);
        let symbolic = inv_rho_jump * snap.j * snap.j - 2.0 * ms.phase2.mu.value(1.0) * du2;
        Ok((res.stress_normal, symbolic))
    };
    let (coarse, symbolic) = manufactured(201)?;
    let (fine, _) = manufactured(401)?;
    let e_coarse = (coarse - symbolic).abs();
    let e_fine = (fine - symbolic).abs();
    lines.push(CheckLine::below(
        "manufactured stress residual vs symbolic value (fine grid)",
        e_fine / symbolic.abs(),
        1e-4,
    ));
    let order = (e_coarse / e_fine).log2();
    lines.push(CheckLine::below(
        format!("manufactured residual: convergence order (measured {order:.2})"),
        2.0 - order,
        0.4,
    ));

    Ok(CheckResult::from_lines(8, "residual evaluator", lines))
}

/// Runs criteria 1–8 (criterion 9, artifact determinism, lives with the
/// command-line runner: it compares bytes across process runs).
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    Ok(SuiteReport {
        checks: vec![
            check_thermo_identities()?,
            check_equilibrium_consistency()?,
            check_second_variation()?,
            check_spectral_connected(cfg)?,
            check_operator_properties(cfg)?,
            check_disconnected_case()?,
            check_lyapunov_structure(cfg)?,
            check_residual_evaluator()?,
        ],
    })
}

/// Convenience: one (mode, λ) dispersion sample against the default
/// materials, used by the demo front ends.
pub fn sample_dispersion_default(
    n: usize,
    l: usize,
    lambda: f64,
    nodes: usize,
) -> Result<crate::spectral::DispersionSample> {
    let ms = default_materials();
    let coe = LinearizedCoeffs::at(&ms, 1.0)?;
    let geom = SpectralGeometry::new(n, 1.0, 2.0)?;
    assemble_dispersion(&coe, &geom, ModeIndex::new(n, l), lambda, SpectralParams::new(nodes)?)
}
