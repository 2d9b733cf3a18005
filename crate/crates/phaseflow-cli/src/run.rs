//! Per-subcommand artifact generation. Every function is pure configuration
//! → bytes, which is what makes the determinism criterion checkable.

use rayon::prelude::*;
use serde::Serialize;

use phaseflow::dynamics::radial::{simulate_radial, RadialGrid, RadialState};
use phaseflow::dynamics::ripening::{simulate_ripening, RipeningContext};
use phaseflow::equilibria::{total_functionals, StateFields};
use phaseflow::harmonics::ModeIndex;
use phaseflow::spectral::{
    assemble_dispersion, dispersion_roots, direct_mode_spectrum, kernel_check,
    semisimplicity_check, LinearizedCoeffs, SpectralGeometry, SpectralParams,
};
use phaseflow::suite::{run_suite, SuiteConfig, SuiteReport};
use phaseflow::thermo::validate_assumptions;
use phaseflow::variations::classify_definiteness;

use crate::artifacts::{Artifact, Csv, CsvCell};
use crate::config::{Problem, RadialInitial, RunConfig};

pub fn artifacts_validate(config: &RunConfig, problem: &Problem) -> anyhow::Result<Vec<Artifact>> {
    let theta_c = problem.ms.theta_c();
    let grid: Vec<f64> = (1..=config.task.validate.grid)
        .map(|i| theta_c * i as f64 / (config.task.validate.grid + 1) as f64)
        .collect();
    let report = validate_assumptions(&problem.ms, &grid);

    #[derive(Serialize)]
    struct ValidationArtifact<'a> {
        theta_c: f64,
        grid_points: usize,
        ok: bool,
        violations: &'a [phaseflow::thermo::Violation],
    }
    Ok(vec![Artifact::json(
        "materials_report.json",
        &ValidationArtifact {
            theta_c,
            grid_points: grid.len(),
            ok: report.is_empty(),
            violations: &report.violations,
        },
    )?])
}

pub fn artifacts_equilibrium(problem: &Problem) -> anyhow::Result<Vec<Artifact>> {
    let eq = &problem.eq;
    let totals = total_functionals(
        &problem.ms,
        &eq.domain,
        &eq.spheres,
        &StateFields::uniform(eq.theta_star),
    )?;

    #[derive(Serialize)]
    #[allow(non_snake_case)]
    struct EquilibriumArtifact {
        n: usize,
        m: usize,
        R_star: f64,
        theta_star: f64,
        pi1: f64,
        pi2: f64,
        H_star: f64,
        M: f64,
        E: f64,
        Phi: f64,
    }
    Ok(vec![Artifact::json(
        "equilibrium.json",
        &EquilibriumArtifact {
            n: eq.domain.n,
            m: eq.spheres.count(),
            R_star: eq.spheres.radius,
            theta_star: eq.theta_star,
            pi1: eq.pi1,
            pi2: eq.pi2,
            H_star: eq.h_star,
            M: totals.mass,
            E: totals.energy,
            Phi: totals.entropy,
        },
    )?])
}

pub fn artifacts_variations(config: &RunConfig, problem: &Problem) -> anyhow::Result<Vec<Artifact>> {
    let report = classify_definiteness(&problem.ms, &problem.eq, config.task.variations.l_max)?;
    let mut csv = Csv::new(&["label", "constrained", "value"]);
    for d in &report.directions {
        csv.row(&[
            CsvCell::Str(&d.label),
            CsvCell::Str(if d.constrained { "true" } else { "false" }),
            CsvCell::Float(d.value),
        ]);
    }

    #[derive(Serialize)]
    struct VariationsSummary<'a> {
        classification: &'a phaseflow::variations::Classification,
        positive_subspace_dim: usize,
        witness_value: Option<f64>,
    }
    Ok(vec![
        csv.into_artifact("variations.csv"),
        Artifact::json(
            "variations.json",
            &VariationsSummary {
                classification: &report.classification,
                positive_subspace_dim: report.positive_subspace_dim,
                witness_value: report.witness_value,
            },
        )?,
    ])
}

#[derive(Serialize)]
struct ModeSummary {
    l: usize,
    dispersion_roots: Vec<f64>,
    leading_eigenvalue: Option<f64>,
    eigenvalues: Vec<[f64; 2]>,
}

#[derive(Serialize)]
struct SpectrumSummary {
    n: usize,
    gamma_star: f64,
    dispersion_route: String,
    kernel_dimension: usize,
    kernel_residuals: Vec<(String, f64)>,
    semisimple: bool,
    modes: Vec<ModeSummary>,
}

pub fn artifacts_spectrum(config: &RunConfig, problem: &Problem) -> anyhow::Result<Vec<Artifact>> {
    let task = &config.task.spectrum;
    let coe = LinearizedCoeffs::at(&problem.ms, problem.eq.theta_star)?;
    let geom = SpectralGeometry::from_equilibrium(&problem.eq)?;
    let params = SpectralParams::new(task.nodes)?;
    let grid = task.lambda_grid();
    let gamma_ok = coe.gamma > 0.0;

    let mut csv = Csv::new(&["n", "l", "lambda", "F", "dtn", "s11", "s22", "tau"]);
    if gamma_ok {
        let samples: Vec<Vec<phaseflow::spectral::DispersionSample>> = task
            .modes
            .par_iter()
            .map(|&l| {
                grid.iter()
                    .map(|&lambda| {
                        assemble_dispersion(&coe, &geom, ModeIndex::new(geom.n, l), lambda, params)
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        for per_mode in &samples {
            for s in per_mode {
                csv.row(&[
                    CsvCell::Int(geom.n as i64),
                    CsvCell::Int(s.mode.l as i64),
                    CsvCell::Float(s.lambda),
                    CsvCell::Float(s.f),
                    CsvCell::Float(s.dtn),
                    CsvCell::Float(s.s11),
                    CsvCell::Float(s.s22),
                    CsvCell::Float(s.tau),
                ]);
            }
        }
    }

    let modes: Vec<ModeSummary> = task
        .modes
        .par_iter()
        .map(|&l| -> anyhow::Result<ModeSummary> {
            let mode = ModeIndex::new(geom.n, l);
            let roots = if gamma_ok {
                dispersion_roots(&coe, &geom, mode, &grid, params)?
            } else {
                Vec::new()
            };
            let eigs = direct_mode_spectrum(&coe, &geom, mode, params, task.eigenvalues)?;
            Ok(ModeSummary {
                l,
                dispersion_roots: roots,
                leading_eigenvalue: eigs.first().map(|e| e.re),
                eigenvalues: eigs.iter().map(|e| [e.re, e.im]).collect(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let kernel = kernel_check(&coe, &geom, params)?;
    let summary = SpectrumSummary {
        n: geom.n,
        gamma_star: coe.gamma,
        dispersion_route: if gamma_ok {
            "active".to_string()
        } else {
            "skipped: GammaZero".to_string()
        },
        kernel_dimension: kernel.dimension,
        kernel_residuals: kernel.residuals,
        semisimple: semisimplicity_check(&coe, &geom, params)?,
        modes,
    };

    Ok(vec![
        csv.into_artifact("spectrum.csv"),
        Artifact::json("spectrum_summary.json", &summary)?,
    ])
}

pub fn artifacts_radial(config: &RunConfig, problem: &Problem) -> anyhow::Result<Vec<Artifact>> {
    let task = &config.task.radial;
    let grid = RadialGrid::new(
        problem.dom.n,
        problem.eq.spheres.radius,
        problem.dom.r_omega,
        task.cells_inner,
        task.cells_outer,
    )?;
    let initial = match task.initial {
        RadialInitial::TwoConstant { inner, outer } => {
            RadialState::two_constant(&grid, inner, outer)
        }
        RadialInitial::Uniform { value } => RadialState::uniform(&grid, value),
        RadialInitial::Cosine { amplitude } => {
            let mut s = RadialState::uniform(&grid, problem.eq.theta_star);
            for (i, th) in s.theta.iter_mut().enumerate() {
                let r = grid.node(i);
                *th += amplitude * (std::f64::consts::PI * r / grid.r_omega).cos();
            }
            s
        }
    };
    let traj = simulate_radial(&problem.ms, &grid, &initial, task.steps, task.dt)?;

    let mut csv = Csv::new(&["t", "energy", "entropy", "theta_gamma", "theta_min", "theta_max"]);
    for i in (0..traj.times.len()).step_by(task.stride.max(1)) {
        csv.row(&[
            CsvCell::Float(traj.times[i]),
            CsvCell::Float(traj.energy[i]),
            CsvCell::Float(traj.entropy[i]),
            CsvCell::Float(traj.theta_gamma[i]),
            CsvCell::Float(traj.theta_min[i]),
            CsvCell::Float(traj.theta_max[i]),
        ]);
    }

    #[derive(Serialize)]
    struct RadialDiagnostics {
        energy_drift: f64,
        min_entropy_step: f64,
        production_mismatch: f64,
        theta_infinity: f64,
        terminal_theta_gamma: f64,
        steps: usize,
        dt: f64,
    }
    Ok(vec![
        csv.into_artifact("radial.csv"),
        Artifact::json(
            "radial_diagnostics.json",
            &RadialDiagnostics {
                energy_drift: traj.energy_drift,
                min_entropy_step: traj.min_entropy_step,
                production_mismatch: traj.production_mismatch,
                theta_infinity: traj.theta_infinity,
                terminal_theta_gamma: traj.final_state.theta_gamma(&grid),
                steps: task.steps,
                dt: task.dt,
            },
        )?,
    ])
}

pub fn artifacts_ripening(config: &RunConfig, problem: &Problem) -> anyhow::Result<Vec<Artifact>> {
    let task = &config.task.ripening;
    let r0 = task.radii.iter().cloned().fold(0.0f64, f64::max);
    let ctx = RipeningContext::new(
        &problem.ms,
        problem.eq.theta_star,
        problem.dom.n,
        task.r_min_factor * r0,
    )?;
    let traj = simulate_ripening(&ctx, &task.radii, task.t_end, task.dt)?;

    let headers: Vec<String> = std::iter::once("t".to_string())
        .chain((1..=task.radii.len()).map(|k| format!("R_{k}")))
        .collect();
    let header_refs: Vec<&str> = headers.iter().map(|s| s.as_str()).collect();
    let mut csv = Csv::new(&header_refs);
    for (t, row) in traj.times.iter().zip(&traj.radii) {
        let mut cells = vec![CsvCell::Float(*t)];
        cells.extend(row.iter().map(|r| CsvCell::Float(*r)));
        csv.row(&cells);
    }

    #[derive(Serialize)]
    struct RipeningDiagnostics<'a> {
        conservation_drift: f64,
        max_projection_correction: f64,
        max_area_increase: f64,
        final_radii: &'a [f64],
        events: &'a [phaseflow::dynamics::ripening::ExtinctionEvent],
    }
    Ok(vec![
        csv.into_artifact("ripening.csv"),
        Artifact::json(
            "ripening_diagnostics.json",
            &RipeningDiagnostics {
                conservation_drift: traj.conservation_drift,
                max_projection_correction: traj.max_projection_correction,
                max_area_increase: traj.max_area_increase,
                final_radii: &traj.final_radii,
                events: &traj.events,
            },
        )?,
    ])
}

/// Renders the suite report as a fixed-width pass/fail table.
fn suite_table(report: &SuiteReport, determinism: Option<&CheckRow>) -> String {
    let mut out = String::new();
    out.push_str("criterion  verdict  name\n");
    for c in &report.checks {
        out.push_str(&format!(
            "{:<10} {:<8} {}\n",
            c.id,
            if c.pass { "PASS" } else { "FAIL" },
            c.name
        ));
        for l in &c.lines {
            out.push_str(&format!(
                "           {:<8} {} (measured {:e}, tolerance {:e})\n",
                if l.pass { "ok" } else { "FAIL" },
                l.label,
                l.measured,
                l.tolerance
            ));
        }
    }
    if let Some(d) = determinism {
        out.push_str(&format!(
            "{:<10} {:<8} {}\n",
            9,
            if d.pass { "PASS" } else { "FAIL" },
            d.name
        ));
    }
    out
}

#[derive(Serialize)]
pub struct CheckRow {
    pub id: usize,
    pub name: String,
    pub pass: bool,
}

pub fn artifacts_suite(config: &RunConfig, problem: &Problem) -> anyhow::Result<Vec<Artifact>> {
    let t = &config.task.suite;
    let cfg = SuiteConfig {
        nodes: t.nodes,
        second_resolution: t.second_resolution,
        modes_max: t.modes_max,
        radial_steps: t.radial_steps,
    };
    let report = run_suite(&cfg)?;

    // criterion 9: regenerate the standard artifact set twice and compare
    let mut small = config.clone();
    small.task.spectrum.modes = vec![0, 1, 2];
    small.task.spectrum.nodes = 24;
    small.task.spectrum.lambda_count = 16;
    small.task.radial.steps = 200;
    let pass_a = standard_artifacts(&small, problem)?;
    let pass_b = standard_artifacts(&small, problem)?;
    let identical = pass_a.len() == pass_b.len()
        && pass_a
            .iter()
            .zip(&pass_b)
            .all(|(x, y)| x.name == y.name && x.bytes == y.bytes);
    let determinism = CheckRow {
        id: 9,
        name: "determinism: artifact regeneration is bitwise-identical".into(),
        pass: identical,
    };

    #[derive(Serialize)]
    struct SuiteArtifact<'a> {
        all_pass: bool,
        checks: &'a [phaseflow::suite::CheckResult],
        determinism: &'a CheckRow,
    }
    Ok(vec![
        Artifact::json(
            "suite_report.json",
            &SuiteArtifact {
                all_pass: report.all_pass() && determinism.pass,
                checks: &report.checks,
                determinism: &determinism,
            },
        )?,
        Artifact::text("suite.txt", suite_table(&report, Some(&determinism))),
    ])
}

/// The artifact set used for determinism comparisons: everything cheap and
/// deterministic by construction.
pub fn standard_artifacts(config: &RunConfig, problem: &Problem) -> anyhow::Result<Vec<Artifact>> {
    let mut all = Vec::new();
    all.extend(artifacts_validate(config, problem)?);
    all.extend(artifacts_equilibrium(problem)?);
    all.extend(artifacts_variations(config, problem)?);
    all.extend(artifacts_spectrum(config, problem)?);
    all.extend(artifacts_radial(config, problem)?);
    all.extend(artifacts_ripening(config, problem)?);
    Ok(all)
}
