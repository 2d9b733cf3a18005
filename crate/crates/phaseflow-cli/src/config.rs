//! Run configuration: a TOML tree with strict schema validation (unknown
//! keys are errors) plus dotted-path overrides from the command line.

use anyhow::{anyhow, bail, Context};
use serde::{Deserialize, Serialize};

use phaseflow::equilibria::{self, EquilibriumState};
use phaseflow::geometry::{Domain, SphereFamily};
use phaseflow::thermo::{
    MaterialSet, PhaseLaw, PsiFamily, ScalarFamily, SigmaFamily, SurfaceLaw,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub materials: MaterialsConfig,
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub task: TaskConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialsConfig {
    pub phase1: PhaseConfig,
    pub phase2: PhaseConfig,
    pub surface: SurfaceConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseConfig {
    pub rho: f64,
    pub psi: PsiFamily,
    pub mu: ScalarFamily,
    pub d: ScalarFamily,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceConfig {
    pub sigma: SigmaConfig,
    pub d_gamma: ScalarFamily,
    pub gamma: ScalarFamily,
}

/// The concave surface-tension family σ₀(1 − θ²/θ_c²).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaConfig {
    pub sigma0: f64,
    pub theta_c: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub n: usize,
    pub r_omega: f64,
    pub centers: Vec<Vec<f64>>,
    /// Exactly one of `mass` / `r_star`.
    #[serde(default)]
    pub mass: Option<f64>,
    #[serde(default)]
    pub r_star: Option<f64>,
    /// Exactly one of `energy` / `theta_star`.
    #[serde(default)]
    pub energy: Option<f64>,
    #[serde(default)]
    pub theta_star: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    #[serde(default)]
    pub variations: VariationsTask,
    #[serde(default)]
    pub spectrum: SpectrumTask,
    #[serde(default)]
    pub radial: RadialTask,
    #[serde(default)]
    pub ripening: RipeningTask,
    #[serde(default)]
    pub suite: SuiteTask,
    #[serde(default)]
    pub validate: ValidateTask,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariationsTask {
    pub l_max: usize,
}

impl Default for VariationsTask {
    fn default() -> Self {
        VariationsTask { l_max: 8 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumTask {
    pub modes: Vec<usize>,
    pub nodes: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_count: usize,
    /// Eigenvalues reported per mode.
    pub eigenvalues: usize,
}

impl Default for SpectrumTask {
    fn default() -> Self {
        SpectrumTask {
            modes: (0..=6).collect(),
            nodes: 48,
            lambda_min: 1e-4,
            lambda_max: 1e3,
            lambda_count: 64,
            eigenvalues: 12,
        }
    }
}

impl SpectrumTask {
    pub fn lambda_grid(&self) -> Vec<f64> {
        let mut grid = vec![0.0];
        for i in 0..self.lambda_count {
            let t = i as f64 / (self.lambda_count - 1) as f64;
            grid.push(self.lambda_min * (self.lambda_max / self.lambda_min).powf(t));
        }
        grid
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialTask {
    pub steps: usize,
    pub dt: f64,
    pub cells_inner: usize,
    pub cells_outer: usize,
    pub initial: RadialInitial,
    /// Record every k-th step in the CSV.
    pub stride: usize,
}

impl Default for RadialTask {
    fn default() -> Self {
        RadialTask {
            steps: 10_000,
            dt: 2e-3,
            cells_inner: 32,
            cells_outer: 48,
            initial: RadialInitial::TwoConstant {
                inner: 0.9,
                outer: 1.1,
            },
            stride: 10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadialInitial {
    TwoConstant { inner: f64, outer: f64 },
    Uniform { value: f64 },
    Cosine { amplitude: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RipeningTask {
    pub radii: Vec<f64>,
    pub t_end: f64,
    pub dt: f64,
    pub r_min_factor: f64,
}

impl Default for RipeningTask {
    fn default() -> Self {
        RipeningTask {
            radii: vec![1.06, 0.97, 1.0, 0.9],
            t_end: 1e7,
            dt: 1e-2,
            r_min_factor: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteTask {
    pub nodes: usize,
    pub second_resolution: usize,
    pub modes_max: usize,
    pub radial_steps: usize,
}

impl Default for SuiteTask {
    fn default() -> Self {
        SuiteTask {
            nodes: 48,
            second_resolution: 96,
            modes_max: 6,
            radial_steps: 10_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateTask {
    /// Temperature-grid resolution on (0, θ_c).
    pub grid: usize,
}

impl Default for ValidateTask {
    fn default() -> Self {
        ValidateTask { grid: 256 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: "out".into() }
    }
}

/// The built-in default configuration (the default material set in the
/// concentric reference geometry).
pub fn default_config_toml() -> &'static str {
    include_str!("../../../config/default.toml")
}

/// Loads the TOML text, applies dotted-path overrides, then validates
/// against the schema.
pub fn load_config(text: &str, overrides: &[String]) -> anyhow::Result<(RunConfig, String)> {
    let mut tree: toml::Value = toml::from_str(text).context("config is not valid TOML")?;
    for item in overrides {
        apply_override(&mut tree, item)?;
    }
    let canonical = toml::to_string(&tree).context("re-serializing config")?;
    let config: RunConfig = tree.try_into().context("config failed schema validation")?;
    validate(&config)?;
    Ok((config, canonical))
}

fn validate(config: &RunConfig) -> anyhow::Result<()> {
    if config.geometry.mass.is_some() == config.geometry.r_star.is_some() {
        bail!("geometry: specify exactly one of `mass` and `r_star`");
    }
    if config.geometry.energy.is_some() == config.geometry.theta_star.is_some() {
        bail!("geometry: specify exactly one of `energy` and `theta_star`");
    }
    if config.geometry.centers.is_empty() {
        bail!("geometry: at least one sphere center required");
    }
    for c in &config.geometry.centers {
        if c.len() != config.geometry.n {
            bail!(
                "geometry: center {:?} does not have {} coordinates",
                c,
                config.geometry.n
            );
        }
    }
    Ok(())
}

fn apply_override(tree: &mut toml::Value, item: &str) -> anyhow::Result<()> {
    let (path, value) = item
        .split_once('=')
        .ok_or_else(|| anyhow!("override `{item}` is not of the form key.path=value"))?;
    let parsed: toml::Value = toml::from_str(&format!("v = {value}"))
        .or_else(|_| toml::from_str(&format!("v = \"{value}\"")))
        .context("override value is not a TOML literal")?;
    let parsed = parsed.get("v").cloned().expect("just inserted");

    let mut node = tree;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = node
            .as_table_mut()
            .ok_or_else(|| anyhow!("override path `{path}` crosses a non-table"))?;
        if i + 1 == parts.len() {
            table.insert(part.to_string(), parsed);
            return Ok(());
        }
        node = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    unreachable!("loop returns on the last segment")
}

/// Materialized problem: materials, domain, equilibrium state.
pub struct Problem {
    pub ms: MaterialSet,
    pub dom: Domain,
    pub eq: EquilibriumState,
}

pub fn build_problem(config: &RunConfig) -> anyhow::Result<Problem> {
    let m = &config.materials;
    let phase = |p: &PhaseConfig| PhaseLaw {
        rho: p.rho,
        psi: p.psi,
        mu: p.mu,
        d: p.d,
    };
    let surface = SurfaceLaw::new(
        SigmaFamily::concave(m.surface.sigma.sigma0, m.surface.sigma.theta_c),
        m.surface.d_gamma,
        m.surface.gamma,
        2.0 * m.surface.sigma.theta_c,
    )?;
    let ms = MaterialSet::new(phase(&m.phase1), phase(&m.phase2), surface)?;

    let g = &config.geometry;
    let dom = Domain::new(g.n, g.r_omega)?;
    let centers: Vec<[f64; 3]> = g
        .centers
        .iter()
        .map(|c| {
            let mut p = [0.0; 3];
            for (i, v) in c.iter().enumerate() {
                p[i] = *v;
            }
            p
        })
        .collect();

    let r_star = match (g.r_star, g.mass) {
        (Some(r), None) => r,
        (None, Some(m0)) => equilibria::radius_from_mass(&dom, &ms, m0, centers.len())?,
        _ => unreachable!("validated"),
    };
    let spheres = SphereFamily::new(centers, r_star)?;
    let theta_star = match (g.theta_star, g.energy) {
        (Some(t), None) => t,
        (None, Some(e0)) => equilibria::temperature_from_energy(&ms, &dom, &spheres, e0)?.theta,
        _ => unreachable!("validated"),
    };
    let eq = EquilibriumState::from_radius_temperature(&ms, dom, spheres, theta_star)?;
    Ok(Problem { ms, dom, eq })
}
