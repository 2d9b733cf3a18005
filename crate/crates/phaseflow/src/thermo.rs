//! Constitutive laws and derived thermodynamic quantities.
//!
//! Bulk phases carry a free energy density ψ(θ), viscosity μ(θ), heat
//! conductivity d(θ) and a constant density ρ. The interface carries a
//! surface tension σ(θ) (the free surface energy density), a surface heat
//! conductivity d_Γ(θ) and a kinetic undercooling coefficient γ(θ). All
//! derived quantities follow from these by differentiation:
//!
//! * bulk:    η = −ψ′, ε = ψ + θη, κ = −θψ″, latent heat l = θ[[ψ′]]
//! * surface: η_Γ = −σ′, ε_Γ = σ + θη_Γ, κ_Γ = −θσ″, l_Γ = θσ′
//!
//! Families are closed-form and parameterized; derivatives are analytic.
//! Finite differences appear only in tests.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Free energy family ψ(θ) = a − bθ − cθ(log θ − 1).
///
/// Gives η = b + c·log θ, ε = a + cθ and the constant heat capacity κ = c.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsiFamily {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl PsiFamily {
    pub fn value(&self, theta: f64) -> f64 {
        self.a - self.b * theta - self.c * theta * (theta.ln() - 1.0)
    }
    pub fn d1(&self, theta: f64) -> f64 {
        -self.b - self.c * theta.ln()
    }
    pub fn d2(&self, theta: f64) -> f64 {
        -self.c / theta
    }
    pub fn d3(&self, theta: f64) -> f64 {
        self.c / (theta * theta)
    }
}

/// Scalar coefficient family, constant or affine in θ. Used for μ, d, d_Γ, γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarFamily {
    Constant { value: f64 },
    Affine { intercept: f64, slope: f64 },
}

impl ScalarFamily {
    pub fn constant(value: f64) -> Self {
        ScalarFamily::Constant { value }
    }
    pub fn value(&self, theta: f64) -> f64 {
        match *self {
            ScalarFamily::Constant { value } => value,
            ScalarFamily::Affine { intercept, slope } => intercept + slope * theta,
        }
    }
    pub fn d1(&self) -> f64 {
        match *self {
            ScalarFamily::Constant { .. } => 0.0,
            ScalarFamily::Affine { slope, .. } => slope,
        }
    }
}

/// Surface tension family σ(θ) = c0 + c1·θ + c2·θ².
///
/// The workhorse is the concave form σ₀(1 − θ²/θ_c²); the general quadratic
/// also covers the degenerate inputs the validator must reject (linear σ,
/// zero-free σ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaFamily {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl SigmaFamily {
    /// σ(θ) = sigma0·(1 − θ²/theta_c²).
    pub fn concave(sigma0: f64, theta_c: f64) -> Self {
        SigmaFamily {
            c0: sigma0,
            c1: 0.0,
            c2: -sigma0 / (theta_c * theta_c),
        }
    }
    pub fn value(&self, theta: f64) -> f64 {
        self.c0 + self.c1 * theta + self.c2 * theta * theta
    }
    pub fn d1(&self, theta: f64) -> f64 {
        self.c1 + 2.0 * self.c2 * theta
    }
    pub fn d2(&self) -> f64 {
        2.0 * self.c2
    }
}

/// Absolute tolerance on σ(θ_c) for the critical-temperature root.
pub const TOL_ROOT: f64 = 1e-12;

/// Locate the critical temperature: the unique zero of σ on (0, hi].
///
/// A 512-point scan detects sign changes; the bracketed one is refined by
/// bisection with secant acceleration. A second sign change is an error.
pub fn critical_temperature(sigma: &SigmaFamily, hi: f64) -> Result<f64> {
    let lo = hi * 1e-9;
    let n_scan = 512;
    let mut brackets = Vec::new();
    let mut prev_t = lo;
    let mut prev_v = sigma.value(lo);
    for i in 1..=n_scan {
        let t = lo + (hi - lo) * i as f64 / n_scan as f64;
        let v = sigma.value(t);
        if prev_v == 0.0 {
            brackets.push((prev_t, prev_t));
        } else if prev_v * v < 0.0 {
            brackets.push((prev_t, t));
        }
        prev_t = t;
        prev_v = v;
    }
    if sigma.value(hi) == 0.0 {
        brackets.push((hi, hi));
    }
    match brackets.len() {
        0 => Err(Error::NoZeroFound { lo, hi }),
        1 => {
            let (mut a, mut b) = brackets[0];
            if a == b {
                return Ok(a);
            }
            let mut fa = sigma.value(a);
            for _ in 0..200 {
                // secant proposal, clipped to the bracket; bisection fallback
                let fb = sigma.value(b);
                let mut m = if (fb - fa).abs() > 0.0 {
                    b - fb * (b - a) / (fb - fa)
                } else {
                    0.5 * (a + b)
                };
                if !(m > a && m < b) {
                    m = 0.5 * (a + b);
                }
                let fm = sigma.value(m);
                if fm.abs() < TOL_ROOT {
                    return Ok(m);
                }
                if fa * fm < 0.0 {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            Ok(0.5 * (a + b))
        }
        _ => Err(Error::MultipleZeros {
            second: brackets[1].0,
        }),
    }
}

/// Bulk phase: density plus the three temperature laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseLaw {
    pub rho: f64,
    pub psi: PsiFamily,
    pub mu: ScalarFamily,
    pub d: ScalarFamily,
}

/// Bulk derived quantities at one temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BulkDerived {
    /// Specific entropy density η = −ψ′.
    pub eta: f64,
    /// Specific internal energy density ε = ψ + θη.
    pub eps: f64,
    /// Heat capacity κ = −θψ″.
    pub kappa: f64,
}

/// Surface derived quantities at one temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceDerived {
    /// Surface entropy density η_Γ = −σ′.
    pub eta: f64,
    /// Surface energy density ε_Γ = σ + θη_Γ.
    pub eps: f64,
    /// Surface heat capacity κ_Γ = −θσ″.
    pub kappa: f64,
    /// Surface latent heat l_Γ = θσ′.
    pub latent: f64,
}

/// Interface laws with the cached critical temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceLaw {
    pub sigma: SigmaFamily,
    pub d_gamma: ScalarFamily,
    pub gamma: ScalarFamily,
    theta_c: f64,
}

impl SurfaceLaw {
    /// Builds the law, locating θ_c on (0, scan_hi].
    pub fn new(
        sigma: SigmaFamily,
        d_gamma: ScalarFamily,
        gamma: ScalarFamily,
        scan_hi: f64,
    ) -> Result<Self> {
        let theta_c = critical_temperature(&sigma, scan_hi)?;
        Ok(SurfaceLaw {
            sigma,
            d_gamma,
            gamma,
            theta_c,
        })
    }

    /// Builds the law with an explicitly prescribed critical temperature,
    /// bypassing the zero search. Intended for degenerate families (constant
    /// or linear σ) that the validator is expected to flag.
    pub fn with_theta_c(
        sigma: SigmaFamily,
        d_gamma: ScalarFamily,
        gamma: ScalarFamily,
        theta_c: f64,
    ) -> Self {
        SurfaceLaw {
            sigma,
            d_gamma,
            gamma,
            theta_c,
        }
    }

    pub fn theta_c(&self) -> f64 {
        self.theta_c
    }
}

/// Phase selector for bulk accessors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    One,
    Two,
}

/// Complete material description: two bulk phases and the interface laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialSet {
    pub phase1: PhaseLaw,
    pub phase2: PhaseLaw,
    pub surface: SurfaceLaw,
}

impl MaterialSet {
    pub fn new(phase1: PhaseLaw, phase2: PhaseLaw, surface: SurfaceLaw) -> Result<Self> {
        if phase1.rho <= 0.0 || phase2.rho <= 0.0 {
            return Err(Error::InvalidInput("phase densities must be positive".into()));
        }
        if phase1.rho == phase2.rho {
            return Err(Error::InvalidInput(
                "equal phase densities violate the standing hypothesis [[rho]] != 0".into(),
            ));
        }
        Ok(MaterialSet {
            phase1,
            phase2,
            surface,
        })
    }

    pub fn phase(&self, which: Phase) -> &PhaseLaw {
        match which {
            Phase::One => &self.phase1,
            Phase::Two => &self.phase2,
        }
    }

    pub fn theta_c(&self) -> f64 {
        self.surface.theta_c()
    }

    /// Jump bracket [[v]] = v₂ − v₁ of any per-phase quantity.
    pub fn jump(&self, f: impl Fn(&PhaseLaw) -> f64) -> f64 {
        f(&self.phase2) - f(&self.phase1)
    }

    /// [[ρ]] = ρ₂ − ρ₁; nonzero by construction.
    pub fn rho_jump(&self) -> f64 {
        self.phase2.rho - self.phase1.rho
    }

    pub fn check_theta(&self, theta: f64) -> Result<()> {
        let theta_c = self.theta_c();
        if theta > 0.0 && theta < theta_c {
            Ok(())
        } else {
            Err(Error::TemperatureOutOfRange { theta, theta_c })
        }
    }

    /// η, ε, κ of one phase at θ ∈ (0, θ_c).
    pub fn derived_bulk(&self, which: Phase, theta: f64) -> Result<BulkDerived> {
        self.check_theta(theta)?;
        let psi = &self.phase(which).psi;
        let eta = -psi.d1(theta);
        Ok(BulkDerived {
            eta,
            eps: psi.value(theta) + theta * eta,
            kappa: -theta * psi.d2(theta),
        })
    }

    /// Latent heat l(θ) = θ[[ψ′(θ)]] = −θ[[η(θ)]].
    pub fn latent_heat(&self, theta: f64) -> Result<f64> {
        self.check_theta(theta)?;
        Ok(theta * (self.phase2.psi.d1(theta) - self.phase1.psi.d1(theta)))
    }

    /// η_Γ, ε_Γ, κ_Γ, l_Γ at θ ∈ (0, θ_c).
    pub fn derived_surface(&self, theta: f64) -> Result<SurfaceDerived> {
        self.check_theta(theta)?;
        let s = &self.surface.sigma;
        let eta = -s.d1(theta);
        Ok(SurfaceDerived {
            eta,
            eps: s.value(theta) + theta * eta,
            kappa: -theta * s.d2(),
            latent: theta * s.d1(theta),
        })
    }
}

/// One violated inequality of the well-posedness assumptions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Offending temperature, when the inequality is temperature-dependent.
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ViolationKind {
    EqualDensities,
    NonPositiveDensity,
    NonPositiveViscosity,
    NonPositiveConductivity,
    NonPositiveHeatCapacity,
    NonPositiveSurfaceTension,
    NonNegativeSigmaSlope,
    NonPositiveSurfaceHeatCapacity,
    NonPositiveSurfaceConductivity,
    NegativeKineticCoefficient,
}

/// Outcome of scanning the assumptions over a temperature grid.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
    pub fn contains(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

/// Checks the positivity/concavity assumptions on every grid temperature.
///
/// Violations are report entries, never errors; an empty report certifies the
/// material set on the grid.
pub fn validate_assumptions(ms: &MaterialSet, grid: &[f64]) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut push = |kind, theta| report.violations.push(Violation { kind, theta });

    if ms.phase1.rho == ms.phase2.rho {
        push(ViolationKind::EqualDensities, None);
    }
    for phase in [&ms.phase1, &ms.phase2] {
        if phase.rho <= 0.0 {
            push(ViolationKind::NonPositiveDensity, None);
        }
    }
    for &theta in grid {
        for phase in [&ms.phase1, &ms.phase2] {
            if phase.mu.value(theta) <= 0.0 {
                push(ViolationKind::NonPositiveViscosity, Some(theta));
            }
            if phase.d.value(theta) <= 0.0 {
                push(ViolationKind::NonPositiveConductivity, Some(theta));
            }
            if -theta * phase.psi.d2(theta) <= 0.0 {
                push(ViolationKind::NonPositiveHeatCapacity, Some(theta));
            }
        }
        let s = &ms.surface;
        if s.sigma.value(theta) <= 0.0 {
            push(ViolationKind::NonPositiveSurfaceTension, Some(theta));
        }
        if s.sigma.d1(theta) >= 0.0 {
            push(ViolationKind::NonNegativeSigmaSlope, Some(theta));
        }
        if -theta * s.sigma.d2() <= 0.0 {
            push(ViolationKind::NonPositiveSurfaceHeatCapacity, Some(theta));
        }
        if s.d_gamma.value(theta) <= 0.0 {
            push(ViolationKind::NonPositiveSurfaceConductivity, Some(theta));
        }
        if s.gamma.value(theta) < 0.0 {
            push(ViolationKind::NegativeKineticCoefficient, Some(theta));
        }
    }
    report
}

/// The default test material set: ρ = (2, 1), κ = (2, 1), b = (1, 0),
/// σ = 1 − θ²/4 (θ_c = 2), μ = d = d_Γ = 1, γ = 0.1.
///
/// Generic in the sense that every assumption holds strictly and the latent
/// heat is nonzero at the working temperature θ = 1.
pub fn default_materials() -> MaterialSet {
    let phase1 = PhaseLaw {
        rho: 2.0,
        psi: PsiFamily {
            a: 0.0,
            b: 1.0,
            c: 2.0,
        },
        mu: ScalarFamily::constant(1.0),
        d: ScalarFamily::constant(1.0),
    };
    let phase2 = PhaseLaw {
        rho: 1.0,
        psi: PsiFamily {
            a: 0.0,
            b: 0.0,
            c: 1.0,
        },
        mu: ScalarFamily::constant(1.0),
        d: ScalarFamily::constant(1.0),
    };
    let surface = SurfaceLaw::new(
        SigmaFamily::concave(1.0, 2.0),
        ScalarFamily::constant(1.0),
        ScalarFamily::constant(0.1),
        4.0,
    )
    .expect("default surface law is well-formed");
    MaterialSet::new(phase1, phase2, surface).expect("default material set is well-formed")
}
