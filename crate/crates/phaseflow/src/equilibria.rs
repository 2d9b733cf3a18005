//! Equilibrium states: sphere families at rest with constant temperature.
//!
//! An equilibrium is determined by the number of spheres m, their centers,
//! the common radius R_* (fixed by the total mass), the temperature θ_*
//! (fixed by the total energy) and the phase pressures, which solve the two
//! interface relations
//!
//! ```text
//! π₂ − π₁         = σ(θ_*) H_*,          H_* = (n−1)/R_*
//! π₂/ρ₂ − π₁/ρ₁   = −[[ψ(θ_*)]]
//! ```
//!
//! The free parameters (m·n center coordinates, θ_*, R_*) form an
//! (mn+2)-dimensional family; see [`manifold_dim`].

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{ball_volume, Domain, SphereFamily};
use crate::thermo::{MaterialSet, Phase};

/// Free parameter count of the equilibrium family: m·n center coordinates
/// plus the temperature and the common radius.
pub fn manifold_dim(m: usize, n: usize) -> usize {
    m * n + 2
}

/// Equilibrium record: geometry, temperature, pressures, curvature constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumState {
    pub domain: Domain,
    pub spheres: SphereFamily,
    pub theta_star: f64,
    pub pi1: f64,
    pub pi2: f64,
    /// Mean-curvature constant (n−1)/R_*; the single shared sign convention.
    pub h_star: f64,
}

impl EquilibriumState {
    /// Builds the state from a given radius and temperature, solving for the
    /// pressures.
    pub fn from_radius_temperature(
        ms: &MaterialSet,
        domain: Domain,
        spheres: SphereFamily,
        theta_star: f64,
    ) -> Result<Self> {
        ms.check_theta(theta_star)?;
        let (pi1, pi2) = equilibrium_pressures(ms, theta_star, spheres.radius, domain.n)?;
        let h_star = (domain.n as f64 - 1.0) / spheres.radius;
        Ok(EquilibriumState {
            domain,
            spheres,
            theta_star,
            pi1,
            pi2,
            h_star,
        })
    }

    pub fn sigma_star(&self, ms: &MaterialSet) -> f64 {
        ms.surface.sigma.value(self.theta_star)
    }

    /// Phase-1 / phase-2 volumes.
    pub fn volumes(&self) -> (f64, f64) {
        let v1 = self.spheres.volume(self.domain.n);
        (v1, self.domain.volume() - v1)
    }
}

/// Common sphere radius from the total mass: V₁ = (M₀ − ρ₂|Ω|)/(ρ₁ − ρ₂),
/// R_* = (V₁/(m·v_n))^{1/n}.
pub fn radius_from_mass(dom: &Domain, ms: &MaterialSet, m0: f64, m: usize) -> Result<f64> {
    let vol = dom.volume();
    let (rho1, rho2) = (ms.phase1.rho, ms.phase2.rho);
    let v1 = (m0 - rho2 * vol) / (rho1 - rho2);
    if v1 <= 0.0 || v1 >= vol {
        let bounds = [rho1 * vol, rho2 * vol];
        return Err(Error::EmptyPhase {
            m0,
            min: bounds[0].min(bounds[1]),
            max: bounds[0].max(bounds[1]),
        });
    }
    let r_star = (v1 / (m as f64 * ball_volume(dom.n, 1.0))).powf(1.0 / dom.n as f64);
    if r_star >= dom.r_omega {
        return Err(Error::DegenerateConfiguration { m, radius: r_star });
    }
    Ok(r_star)
}

/// Result of inverting the total-energy relation for θ_*.
#[derive(Debug, Clone, Serialize)]
pub struct TemperatureSolve {
    pub theta: f64,
    /// All scan-grid crossings; more than one entry flags a non-monotone
    /// energy profile (the smallest root is returned).
    pub crossings: Vec<f64>,
}

/// Total energy of the resting state at uniform temperature θ.
pub fn energy_at_uniform_theta(
    ms: &MaterialSet,
    dom: &Domain,
    spheres: &SphereFamily,
    theta: f64,
) -> Result<f64> {
    let (v1, v2) = {
        let v1 = spheres.volume(dom.n);
        (v1, dom.volume() - v1)
    };
    let e1 = ms.derived_bulk(Phase::One, theta)?.eps;
    let e2 = ms.derived_bulk(Phase::Two, theta)?.eps;
    let eg = ms.derived_surface(theta)?.eps;
    Ok(ms.phase1.rho * e1 * v1 + ms.phase2.rho * e2 * v2 + eg * spheres.area(dom.n))
}

/// Solves ρ₁ε₁(θ)V₁ + ρ₂ε₂(θ)V₂ + ε_Γ(θ)|Γ| = E₀ for θ ∈ (0, θ_c) by a
/// 512-point scan plus safeguarded bisection/secant refinement.
pub fn temperature_from_energy(
    ms: &MaterialSet,
    dom: &Domain,
    spheres: &SphereFamily,
    e0: f64,
) -> Result<TemperatureSolve> {
    let theta_c = ms.theta_c();
    let lo = 1e-9 * theta_c;
    let hi = theta_c * (1.0 - 1e-12);
    let n_scan = 512;

    let g = |theta: f64| -> f64 {
        energy_at_uniform_theta(ms, dom, spheres, theta).map_or(f64::NAN, |e| e - e0)
    };

    let mut brackets = Vec::new();
    let mut prev_t = lo;
    let mut prev_v = g(lo);
    for i in 1..=n_scan {
        let t = lo + (hi - lo) * i as f64 / n_scan as f64;
        let v = g(t);
        if prev_v * v <= 0.0 && prev_v.is_finite() && v.is_finite() && prev_v != v {
            brackets.push((prev_t, t));
        }
        prev_t = t;
        prev_v = v;
    }
    if brackets.is_empty() {
        return Err(Error::NoRootInRange { e0, lo, hi });
    }

    let scale = 1.0 + e0.abs();
    let mut crossings = Vec::new();
    for &(mut a, mut b) in &brackets {
        let mut fa = g(a);
        let mut root = 0.5 * (a + b);
        for _ in 0..200 {
            let fb = g(b);
            let mut m = if fb != fa {
                b - fb * (b - a) / (fb - fa)
            } else {
                0.5 * (a + b)
            };
            if !(m > a && m < b) {
                m = 0.5 * (a + b);
            }
            let fm = g(m);
            root = m;
            if fm.abs() < 1e-12 * scale || (b - a) < f64::EPSILON * theta_c {
                break;
            }
            if fa * fm <= 0.0 {
                b = m;
            } else {
                a = m;
                fa = fm;
            }
        }
        crossings.push(root);
    }
    Ok(TemperatureSolve {
        theta: crossings.iter().cloned().fold(f64::INFINITY, f64::min),
        crossings,
    })
}

/// Phase pressures from the Young–Laplace and Gibbs–Thomson relations.
/// Both defining residuals vanish to round-off; the pair is unique because
/// [[ρ]] ≠ 0 (the gauge is fixed by the 2×2 solve).
pub fn equilibrium_pressures(
    ms: &MaterialSet,
    theta_star: f64,
    r_star: f64,
    n: usize,
) -> Result<(f64, f64)> {
    ms.check_theta(theta_star)?;
    let (rho1, rho2) = (ms.phase1.rho, ms.phase2.rho);
    if rho1 == rho2 {
        return Err(Error::SingularSystem);
    }
    let h_star = (n as f64 - 1.0) / r_star;
    let s = ms.surface.sigma.value(theta_star) * h_star;
    let psi_jump = ms.jump(|p| p.psi.value(theta_star));
    // pi2 = pi1 + s;  pi2/rho2 - pi1/rho1 = -psi_jump
    let pi1 = (-psi_jump - s / rho2) / (1.0 / rho2 - 1.0 / rho1);
    let pi2 = pi1 + s;
    Ok((pi1, pi2))
}

/// Conserved totals of a state, plus the entropy split into its bulk and
/// surface parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConservedTotals {
    pub mass: f64,
    pub energy: f64,
    pub entropy: f64,
    pub entropy_bulk: f64,
    pub entropy_surface: f64,
}

/// A radial scalar field: either uniform or sampled on a radial grid.
#[derive(Debug, Clone, Copy)]
pub enum RadialScalar<'a> {
    Uniform(f64),
    Grid { nodes: &'a [f64], values: &'a [f64] },
}

impl RadialScalar<'_> {
    fn is_grid(&self) -> bool {
        matches!(self, RadialScalar::Grid { .. })
    }
}

/// State fields feeding the conserved-totals quadrature. `speed*` are the
/// velocity magnitudes (zero at rest).
#[derive(Debug, Clone, Copy)]
pub struct StateFields<'a> {
    pub theta1: RadialScalar<'a>,
    pub theta2: RadialScalar<'a>,
    pub theta_gamma: f64,
    pub speed1: RadialScalar<'a>,
    pub speed2: RadialScalar<'a>,
}

impl StateFields<'_> {
    /// Resting state at uniform temperature.
    pub fn uniform(theta: f64) -> Self {
        StateFields {
            theta1: RadialScalar::Uniform(theta),
            theta2: RadialScalar::Uniform(theta),
            theta_gamma: theta,
            speed1: RadialScalar::Uniform(0.0),
            speed2: RadialScalar::Uniform(0.0),
        }
    }
}

/// Volume weights for a radial grid covering [nodes[0], nodes[last]]: the
/// exact shell volume between node midpoints. Constants integrate exactly.
pub fn shell_weights(n: usize, nodes: &[f64]) -> Result<Vec<f64>> {
    if nodes.len() < 2 {
        return Err(Error::QuadratureFailure("radial grid needs >= 2 nodes".into()));
    }
    for w in nodes.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::QuadratureFailure("radial nodes must increase".into()));
        }
    }
    let last = nodes.len() - 1;
    Ok((0..=last)
        .map(|i| {
            let lo = if i == 0 {
                nodes[0]
            } else {
                0.5 * (nodes[i - 1] + nodes[i])
            };
            let hi = if i == last {
                nodes[last]
            } else {
                0.5 * (nodes[i] + nodes[i + 1])
            };
            ball_volume(n, hi) - ball_volume(n, lo)
        })
        .collect())
}

fn integrate_phase(
    n: usize,
    volume: f64,
    field: RadialScalar<'_>,
    mut f: impl FnMut(f64) -> f64,
) -> Result<f64> {
    match field {
        RadialScalar::Uniform(v) => Ok(volume * f(v)),
        RadialScalar::Grid { nodes, values } => {
            if nodes.len() != values.len() {
                return Err(Error::GridMismatch(format!(
                    "{} nodes vs {} values",
                    nodes.len(),
                    values.len()
                )));
            }
            let w = shell_weights(n, nodes)?;
            Ok(w.iter().zip(values).map(|(wi, &v)| wi * f(v)).sum())
        }
    }
}

/// Total mass, energy and entropy by quadrature. Grid fields require the
/// concentric single-sphere geometry (the radial grids are meaningful only
/// there); uniform fields work for any sphere family.
pub fn total_functionals(
    ms: &MaterialSet,
    dom: &Domain,
    spheres: &SphereFamily,
    fields: &StateFields<'_>,
) -> Result<ConservedTotals> {
    let any_grid = fields.theta1.is_grid()
        || fields.theta2.is_grid()
        || fields.speed1.is_grid()
        || fields.speed2.is_grid();
    if any_grid && spheres.count() != 1 {
        return Err(Error::GridMismatch(
            "radial grid fields require a single concentric sphere".into(),
        ));
    }
    let v1 = spheres.volume(dom.n);
    let v2 = dom.volume() - v1;
    let area = spheres.area(dom.n);
    let (rho1, rho2) = (ms.phase1.rho, ms.phase2.rho);

    let mass = rho1 * v1 + rho2 * v2;

    let eps1 = integrate_phase(dom.n, v1, fields.theta1, |th| {
        ms.phase1.psi.value(th) - th * ms.phase1.psi.d1(th)
    })?;
    let eps2 = integrate_phase(dom.n, v2, fields.theta2, |th| {
        ms.phase2.psi.value(th) - th * ms.phase2.psi.d1(th)
    })?;
    let kin1 = integrate_phase(dom.n, v1, fields.speed1, |u| 0.5 * u * u)?;
    let kin2 = integrate_phase(dom.n, v2, fields.speed2, |u| 0.5 * u * u)?;
    let surf = ms.derived_surface(fields.theta_gamma)?;
    let energy = rho1 * (eps1 + kin1) + rho2 * (eps2 + kin2) + surf.eps * area;

    let eta1 = integrate_phase(dom.n, v1, fields.theta1, |th| -ms.phase1.psi.d1(th))?;
    let eta2 = integrate_phase(dom.n, v2, fields.theta2, |th| -ms.phase2.psi.d1(th))?;
    let entropy_bulk = rho1 * eta1 + rho2 * eta2;
    let entropy_surface = surf.eta * area;

    Ok(ConservedTotals {
        mass,
        energy,
        entropy: entropy_bulk + entropy_surface,
        entropy_bulk,
        entropy_surface,
    })
}

/// Full construction: radius from mass, temperature from energy, pressures
/// from the interface relations.
pub fn build_equilibrium(
    ms: &MaterialSet,
    dom: Domain,
    centers: Vec<[f64; 3]>,
    m0: f64,
    e0: f64,
) -> Result<(EquilibriumState, TemperatureSolve)> {
    let m = centers.len();
    let r_star = radius_from_mass(&dom, ms, m0, m)?;
    let spheres = SphereFamily::new(centers, r_star)?;
    let solve = temperature_from_energy(ms, &dom, &spheres, e0)?;
    let state = EquilibriumState::from_radius_temperature(ms, dom, spheres, solve.theta)?;
    Ok((state, solve))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::default_materials;
    use std::f64::consts::PI;

    #[test]
    fn radius_from_mass_reference_case() {
        // n=3, R_Omega=2, rho=(2,1), m=1, M0=12pi -> R=1
        let dom = Domain::new(3, 2.0).unwrap();
        let ms = default_materials();
        let r = radius_from_mass(&dom, &ms, 12.0 * PI, 1).unwrap();
        assert!((r - 1.0).abs() < 1e-13);
        // mass recomputation round trip
        let spheres = SphereFamily::concentric(r);
        let t = total_functionals(&ms, &dom, &spheres, &StateFields::uniform(1.0)).unwrap();
        assert!((t.mass - 12.0 * PI).abs() < 1e-12 * 12.0 * PI);
    }

    #[test]
    fn radius_from_mass_two_disks() {
        // n=2, R_Omega=1, rho=(2,1), m=2, M0 = pi + 2*(pi/8) -> R = sqrt(1/8)
        let dom = Domain::new(2, 1.0).unwrap();
        let ms = default_materials();
        let r = radius_from_mass(&dom, &ms, PI + 0.25 * PI, 2).unwrap();
        assert!((r - (0.125f64).sqrt()).abs() < 1e-13);
    }

    #[test]
    fn empty_phase_detected() {
        let dom = Domain::new(3, 2.0).unwrap();
        let ms = default_materials();
        let m0 = ms.phase2.rho * dom.volume();
        assert!(matches!(
            radius_from_mass(&dom, &ms, m0, 1),
            Err(Error::EmptyPhase { .. })
        ));
    }

    #[test]
    fn temperature_from_energy_reference_case() {
        // E(theta) = (4*(4pi/3) + 1*(28pi/3)) theta + 4pi (1 + theta^2/4);
        // E0 = E(1) must invert to theta = 1
        let dom = Domain::new(3, 2.0).unwrap();
        let ms = default_materials();
        let spheres = SphereFamily::concentric(1.0);
        let e0 = 44.0 * PI / 3.0 + 4.0 * PI * 1.25;
        let direct = energy_at_uniform_theta(&ms, &dom, &spheres, 1.0).unwrap();
        assert!((direct - e0).abs() < 1e-12 * e0);
        let solve = temperature_from_energy(&ms, &dom, &spheres, e0).unwrap();
        assert!((solve.theta - 1.0).abs() < 1e-10);
        assert_eq!(solve.crossings.len(), 1);
    }

    #[test]
    fn energy_below_range_is_an_error() {
        let dom = Domain::new(3, 2.0).unwrap();
        let ms = default_materials();
        let spheres = SphereFamily::concentric(1.0);
        assert!(matches!(
            temperature_from_energy(&ms, &dom, &spheres, -1e3),
            Err(Error::NoRootInRange { .. })
        ));
    }

    #[test]
    fn tiny_interface_approaches_bulk_only_solution() {
        let dom = Domain::new(3, 2.0).unwrap();
        let ms = default_materials();
        let tiny = SphereFamily::concentric(1e-5);
        // bulk-only closed form: with a=0, eps_i = c_i theta:
        // E = (rho1 c1 V1 + rho2 c2 V2) theta + surface term ~ sigma0*|Gamma|
        let e0 = energy_at_uniform_theta(&ms, &dom, &tiny, 0.8).unwrap();
        let v1 = tiny.volume(3);
        let v2 = dom.volume() - v1;
        let bulk_coeff = 2.0 * 2.0 * v1 + 1.0 * 1.0 * v2;
        let theta_bulk = e0 / bulk_coeff;
        let solve = temperature_from_energy(&ms, &dom, &tiny, e0).unwrap();
        assert!((solve.theta - theta_bulk).abs() < 1e-6);
    }

    #[test]
    fn pressures_satisfy_both_relations() {
        let ms = default_materials();
        let (pi1, pi2) = equilibrium_pressures(&ms, 1.0, 1.0, 3).unwrap();
        let sigma_h = ms.surface.sigma.value(1.0) * 2.0;
        let psi_jump = ms.jump(|p| p.psi.value(1.0));
        let r1 = (pi2 - pi1) - sigma_h;
        let r2 = (pi2 / ms.phase2.rho - pi1 / ms.phase1.rho) + psi_jump;
        let scale = 1.0 + pi1.abs().max(pi2.abs());
        assert!(r1.abs() < 1e-12 * scale);
        assert!(r2.abs() < 1e-12 * scale);
        // [[psi]](1) = 0 for the default set, so pi2 = pi1/2 here
        assert!(psi_jump.abs() < 1e-15);
        assert!((pi2 - 0.5 * pi1).abs() < 1e-13);
    }

    #[test]
    fn homogeneous_system_at_critical_sigma() {
        // sigma -> 0 and [[psi]] = 0 admit the zero-pressure pair
        let mut ms = default_materials();
        ms.phase1.psi = crate::thermo::PsiFamily {
            a: 0.0,
            b: 0.0,
            c: 1.0,
        };
        ms.phase2.psi = ms.phase1.psi;
        // handcrafted: temperature close to theta_c makes sigma tiny
        let theta = 2.0 - 1e-9;
        let mut probe = ms;
        probe.phase2.rho = 1.0;
        probe.phase1.rho = 2.0;
        let (pi1, pi2) = equilibrium_pressures(&probe, theta, 1.0, 3).unwrap();
        assert!(pi1.abs() < 1e-8 && pi2.abs() < 1e-8);
    }

    #[test]
    fn surface_entropy_vanishes_for_constant_sigma() {
        // eta_Gamma = -sigma' = 0 when sigma is constant, so Phi_Gamma = 0
        // and E_Gamma = sigma |Gamma|
        let mut ms = default_materials();
        ms.surface = crate::thermo::SurfaceLaw::with_theta_c(
            crate::thermo::SigmaFamily {
                c0: 1.0,
                c1: 0.0,
                c2: 0.0,
            },
            crate::thermo::ScalarFamily::constant(1.0),
            crate::thermo::ScalarFamily::constant(0.1),
            2.0,
        );
        let dom = Domain::new(3, 2.0).unwrap();
        let spheres = SphereFamily::concentric(1.0);
        let tot = total_functionals(&ms, &dom, &spheres, &StateFields::uniform(1.0)).unwrap();
        assert_eq!(tot.entropy_surface, 0.0);
        let rest_bulk = tot.energy - spheres.area(3);
        let bulk_only = 2.0 * 2.0 * spheres.volume(3) + (dom.volume() - spheres.volume(3));
        assert!((rest_bulk - bulk_only).abs() < 1e-12 * tot.energy);
    }

    #[test]
    fn kinetic_term_adds_exactly() {
        let dom = Domain::new(3, 2.0).unwrap();
        let ms = default_materials();
        let spheres = SphereFamily::concentric(1.0);
        let rest = total_functionals(&ms, &dom, &spheres, &StateFields::uniform(1.0)).unwrap();
        let mut moving = StateFields::uniform(1.0);
        moving.speed2 = RadialScalar::Uniform(0.5);
        let tot = total_functionals(&ms, &dom, &spheres, &moving).unwrap();
        let v2 = dom.volume() - spheres.volume(3);
        let expected = ms.phase2.rho * 0.5 * 0.25 * v2;
        assert!((tot.energy - rest.energy - expected).abs() < 1e-12 * tot.energy.abs());
    }

    #[test]
    fn grid_fields_match_uniform_for_constant_values() {
        let dom = Domain::new(3, 2.0).unwrap();
        let ms = default_materials();
        let spheres = SphereFamily::concentric(1.0);
        let nodes1: Vec<f64> = (0..=40).map(|i| i as f64 / 40.0).collect();
        let nodes2: Vec<f64> = (0..=60).map(|i| 1.0 + i as f64 / 60.0).collect();
        let v1 = vec![0.9; nodes1.len()];
        let v2 = vec![0.9; nodes2.len()];
        let fields = StateFields {
            theta1: RadialScalar::Grid {
                nodes: &nodes1,
                values: &v1,
            },
            theta2: RadialScalar::Grid {
                nodes: &nodes2,
                values: &v2,
            },
            theta_gamma: 0.9,
            speed1: RadialScalar::Uniform(0.0),
            speed2: RadialScalar::Uniform(0.0),
        };
        let a = total_functionals(&ms, &dom, &spheres, &fields).unwrap();
        let b = total_functionals(&ms, &dom, &spheres, &StateFields::uniform(0.9)).unwrap();
        assert!((a.energy - b.energy).abs() < 1e-12 * b.energy.abs());
        assert!((a.entropy - b.entropy).abs() < 1e-12 * (1.0 + b.entropy.abs()));
    }

    #[test]
    fn manifold_dimension_bookkeeping() {
        for (m, n) in [(1usize, 2usize), (1, 3), (2, 3), (3, 2)] {
            let dim = manifold_dim(m, n);
            // centers (m*n) + temperature (1) + radius (1)
            assert_eq!(dim, m * n + 1 + 1);
        }
    }

    #[test]
    fn full_build_round_trips_mass_and_energy() {
        let dom = Domain::new(3, 2.0).unwrap();
        let ms = default_materials();
        let m0 = 12.0 * PI;
        let e0 = 44.0 * PI / 3.0 + 4.0 * PI * 1.25;
        let (eq, _) = build_equilibrium(&ms, dom, vec![[0.0; 3]], m0, e0).unwrap();
        let tot = total_functionals(
            &ms,
            &eq.domain,
            &eq.spheres,
            &StateFields::uniform(eq.theta_star),
        )
        .unwrap();
        assert!((tot.mass - m0).abs() < 1e-10 * m0);
        assert!((tot.energy - e0).abs() < 1e-10 * e0);
        assert!((eq.theta_star - 1.0).abs() < 1e-10);
    }
}
