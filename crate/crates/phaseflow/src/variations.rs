//! First and second variations of the entropy, mass and energy functionals
//! at equilibrium states, the Lagrange-multiplier residual, the constrained
//! projection, and the definiteness classification that separates connected
//! (stable) from disconnected (unstable) interfaces.
//!
//! Directions are z = (v, ϑ, ϑ_Γ, h): a velocity variation, bulk and surface
//! temperature variations, and a normal interface variation expanded in
//! surface harmonics per sphere.
//!
//! Sign conventions: the first-variation h-terms and the λ-relation use the
//! signed geometric curvature H(Γ) = −(n−1)/R_* of the sphere with outward
//! normal (so the finite-difference oracles match); the second-variation
//! form is implemented exactly as displayed, with H′ acting on degree l as
//! ((n−1) − l(l+n−2))/R_*².

use nalgebra::DMatrix;
use serde::Serialize;

use crate::equilibria::{shell_weights, EquilibriumState};
use crate::error::{Error, Result};
use crate::harmonics::{HarmonicCoeffs, ModeIndex};
use crate::thermo::{MaterialSet, Phase};

/// Scalar radial profile on one phase.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
}

/// Bulk temperature variation: constant per phase or a radial profile.
#[derive(Debug, Clone, PartialEq)]
pub enum BulkVar {
    Constant(f64),
    Radial(RadialField),
}

/// A variation direction (v, ϑ, ϑ_Γ, h). Surface fields are per-sphere
/// harmonic coefficient sets.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub v1: Option<RadialField>,
    pub v2: Option<RadialField>,
    pub theta1: BulkVar,
    pub theta2: BulkVar,
    pub theta_gamma: Vec<HarmonicCoeffs>,
    pub h: Vec<HarmonicCoeffs>,
}

impl Perturbation {
    /// All-zero direction with modes up to `l_max` (≥ 2) on `m` spheres.
    pub fn zero(n: usize, m: usize, l_max: usize) -> Result<Self> {
        if l_max < 2 {
            return Err(Error::InvalidInput("l_max must be at least 2".into()));
        }
        Ok(Perturbation {
            v1: None,
            v2: None,
            theta1: BulkVar::Constant(0.0),
            theta2: BulkVar::Constant(0.0),
            theta_gamma: vec![HarmonicCoeffs::zeros(n, l_max); m],
            h: vec![HarmonicCoeffs::zeros(n, l_max); m],
        })
    }

    pub fn all_finite(&self) -> bool {
        self.theta_gamma.iter().all(|c| c.all_finite()) && self.h.iter().all(|c| c.all_finite())
    }
}

fn integrate(field: &RadialField, n: usize, f: impl Fn(f64) -> f64) -> Result<f64> {
    if field.nodes.len() != field.values.len() {
        return Err(Error::GridMismatch(format!(
            "{} nodes vs {} values",
            field.nodes.len(),
            field.values.len()
        )));
    }
    let w = shell_weights(n, &field.nodes)?;
    Ok(w.iter().zip(&field.values).map(|(wi, &v)| wi * f(v)).sum())
}

/// ∫ ϑ over one phase (grid quadrature or exact for constants).
fn integral_theta(var: &BulkVar, n: usize, volume: f64) -> Result<f64> {
    match var {
        BulkVar::Constant(c) => Ok(c * volume),
        BulkVar::Radial(f) => integrate(f, n, |v| v),
    }
}

/// ∫ ϑ² over one phase.
fn integral_theta_sq(var: &BulkVar, n: usize, volume: f64) -> Result<f64> {
    match var {
        BulkVar::Constant(c) => Ok(c * c * volume),
        BulkVar::Radial(f) => integrate(f, n, |v| v * v),
    }
}

struct EquilibriumCoeffs {
    n: usize,
    v1: f64,
    v2: f64,
    /// Area of one sphere.
    area_k: f64,
    /// Signed geometric curvature −(n−1)/R_*.
    h_geo: f64,
}

fn coeffs(eq: &EquilibriumState) -> EquilibriumCoeffs {
    let (v1, v2) = eq.volumes();
    EquilibriumCoeffs {
        n: eq.domain.n,
        v1,
        v2,
        area_k: crate::geometry::sphere_area(eq.domain.n, eq.spheres.radius),
        h_geo: -eq.h_star,
    }
}

/// ⟨Φ′|(v,ϑ,ϑ_Γ,h)⟩ = (ρη′(θ)|ϑ)_Ω + (η_Γ′|ϑ_Γ)_Γ − ([[ρη]] + η_Γ H(Γ) | h)_Γ.
pub fn first_variation_entropy(
    ms: &MaterialSet,
    eq: &EquilibriumState,
    pert: &Perturbation,
) -> Result<f64> {
    let c = coeffs(eq);
    let th = eq.theta_star;
    // eta' = -psi'' = kappa / theta
    let etap1 = -ms.phase1.psi.d2(th);
    let etap2 = -ms.phase2.psi.d2(th);
    let bulk = ms.phase1.rho * etap1 * integral_theta(&pert.theta1, c.n, c.v1)?
        + ms.phase2.rho * etap2 * integral_theta(&pert.theta2, c.n, c.v2)?;

    let etag_prime = -ms.surface.sigma.d2();
    let surf: f64 = pert
        .theta_gamma
        .iter()
        .map(|tg| etag_prime * tg.mean() * c.area_k)
        .sum();

    let eta_jump =
        ms.phase2.rho * (-ms.phase2.psi.d1(th)) - ms.phase1.rho * (-ms.phase1.psi.d1(th));
    let eta_g = -ms.surface.sigma.d1(th);
    let h_coeff = eta_jump + eta_g * c.h_geo;
    let h_term: f64 = pert.h.iter().map(|h| -h_coeff * h.mean() * c.area_k).sum();

    Ok(bulk + surf + h_term)
}

/// ⟨M′(Γ)|h⟩ = −([[ρ]] | h)_Γ.
pub fn first_variation_mass(
    ms: &MaterialSet,
    eq: &EquilibriumState,
    pert: &Perturbation,
) -> Result<f64> {
    let c = coeffs(eq);
    Ok(pert
        .h
        .iter()
        .map(|h| -ms.rho_jump() * h.mean() * c.area_k)
        .sum())
}

/// ⟨E′|(v,ϑ,ϑ_Γ,h)⟩; the (ρu|v) term vanishes at equilibrium (u = 0).
pub fn first_variation_energy(
    ms: &MaterialSet,
    eq: &EquilibriumState,
    pert: &Perturbation,
) -> Result<f64> {
    let c = coeffs(eq);
    let th = eq.theta_star;
    let k1 = ms.derived_bulk(Phase::One, th)?.kappa;
    let k2 = ms.derived_bulk(Phase::Two, th)?.kappa;
    let bulk = ms.phase1.rho * k1 * integral_theta(&pert.theta1, c.n, c.v1)?
        + ms.phase2.rho * k2 * integral_theta(&pert.theta2, c.n, c.v2)?;

    let sd = ms.derived_surface(th)?;
    let surf: f64 = pert
        .theta_gamma
        .iter()
        .map(|tg| sd.kappa * tg.mean() * c.area_k)
        .sum();

    let eps_jump = ms.phase2.rho * ms.derived_bulk(Phase::Two, th)?.eps
        - ms.phase1.rho * ms.derived_bulk(Phase::One, th)?.eps;
    let h_coeff = eps_jump + sd.eps * c.h_geo;
    let h_term: f64 = pert.h.iter().map(|h| -h_coeff * h.mean() * c.area_k).sum();

    Ok(bulk + surf + h_term)
}

/// Probe labels used by `lagrange_residual` and the definiteness report.
pub const LAGRANGE_PROBES: [&str; 5] = ["theta_const", "theta_gamma_const", "h_const", "h_l1", "h_l2"];

/// Max |⟨Φ′ + λM′ + μE′ | probe⟩| over the probe directions, with
/// μ = −1/θ_bulk and λ solved from the h-direction relation
/// [[ρψ(θ)]] + σ(θ)H(Γ) = λ[[ρ]]θ_Γ. Bulk and surface temperatures are
/// allowed to differ; equilibria have them equal.
pub fn lagrange_residual_split(
    ms: &MaterialSet,
    eq: &EquilibriumState,
    theta_bulk: f64,
    theta_surface: f64,
) -> Result<f64> {
    ms.check_theta(theta_bulk)?;
    ms.check_theta(theta_surface)?;
    let c = coeffs(eq);
    let mu = -1.0 / theta_bulk;
    let rho_psi_jump = ms.phase2.rho * ms.phase2.psi.value(theta_bulk)
        - ms.phase1.rho * ms.phase1.psi.value(theta_bulk);
    let lambda = (rho_psi_jump + ms.surface.sigma.value(theta_bulk) * c.h_geo)
        / (ms.rho_jump() * theta_surface);

    // bulk / surface coefficients at the (possibly split) temperatures
    let etap = [-ms.phase1.psi.d2(theta_bulk), -ms.phase2.psi.d2(theta_bulk)];
    let kappa = [
        -theta_bulk * ms.phase1.psi.d2(theta_bulk),
        -theta_bulk * ms.phase2.psi.d2(theta_bulk),
    ];
    let rho = [ms.phase1.rho, ms.phase2.rho];
    let sd = ms.derived_surface(theta_surface)?;
    let etag_prime = -ms.surface.sigma.d2();

    // theta probe: constant 1 in both phases
    let r_theta = rho[0] * (etap[0] + mu * kappa[0]) * c.v1
        + rho[1] * (etap[1] + mu * kappa[1]) * c.v2;

    // theta_gamma probe: constant 1 on the interface
    let m = eq.spheres.count() as f64;
    let r_theta_gamma = (etag_prime + mu * sd.kappa) * c.area_k * m;

    // h probe: constant 1 on every sphere
    let eta_b = [-ms.phase1.psi.d1(theta_bulk), -ms.phase2.psi.d1(theta_bulk)];
    let eps_b = [
        ms.phase1.psi.value(theta_bulk) + theta_bulk * eta_b[0],
        ms.phase2.psi.value(theta_bulk) + theta_bulk * eta_b[1],
    ];
    let eta_jump = rho[1] * eta_b[1] - rho[0] * eta_b[0];
    let eps_jump = rho[1] * eps_b[1] - rho[0] * eps_b[0];
    let r_h = (-(eta_jump + sd.eta * c.h_geo)
        - lambda * ms.rho_jump()
        - mu * (eps_jump + sd.eps * c.h_geo))
        * c.area_k
        * m;

    // degree-1 and degree-2 probes integrate harmonics against constants: 0
    let r_l1 = 0.0;
    let r_l2 = 0.0;

    Ok([r_theta, r_theta_gamma, r_h, r_l1, r_l2]
        .iter()
        .map(|r| r.abs())
        .fold(0.0, f64::max))
}

/// Residual at the state's own temperature (bulk = surface).
pub fn lagrange_residual(ms: &MaterialSet, eq: &EquilibriumState) -> Result<f64> {
    lagrange_residual_split(ms, eq, eq.theta_star, eq.theta_star)
}

/// ⟨D_*z|z⟩, the negative of the displayed right side:
/// −⟨D_*z|z⟩ = (ρv|v) + (1/θ_*)[(ρκ_*ϑ|ϑ) + (κ_Γ*ϑ_Γ|ϑ_Γ) − σ_*θ_*(H′h|h)].
pub fn second_variation_form(
    ms: &MaterialSet,
    eq: &EquilibriumState,
    pert: &Perturbation,
) -> Result<f64> {
    let c = coeffs(eq);
    let th = eq.theta_star;
    let sigma = ms.surface.sigma.value(th);

    let mut vv = 0.0;
    if let Some(v) = &pert.v1 {
        vv += ms.phase1.rho * integrate(v, c.n, |x| x * x)?;
    }
    if let Some(v) = &pert.v2 {
        vv += ms.phase2.rho * integrate(v, c.n, |x| x * x)?;
    }

    let k1 = ms.derived_bulk(Phase::One, th)?.kappa;
    let k2 = ms.derived_bulk(Phase::Two, th)?.kappa;
    let tt = ms.phase1.rho * k1 * integral_theta_sq(&pert.theta1, c.n, c.v1)?
        + ms.phase2.rho * k2 * integral_theta_sq(&pert.theta2, c.n, c.v2)?;

    let kg = ms.derived_surface(th)?.kappa;
    let tg: f64 = pert
        .theta_gamma
        .iter()
        .map(|t| kg * t.mean_square() * c.area_k)
        .sum();

    let mut hh = 0.0;
    for h in &pert.h {
        for (l, _i, coeff) in h.iter() {
            let hp = ModeIndex::new(c.n, l).h_prime(eq.spheres.radius);
            hh += hp * coeff * coeff * c.area_k;
        }
    }

    Ok(-(vv + (tt + tg) / th - sigma * hh))
}

/// Projects a direction onto the constraint kernel of (M′, E′): removes the
/// area-weighted h-mean and shifts (ϑ, ϑ_Γ) jointly so that
/// (ρκ_*|ϑ)_Ω + (κ_Γ*|ϑ_Γ)_Γ = 0.
pub fn constraint_projection(
    ms: &MaterialSet,
    eq: &EquilibriumState,
    pert: &Perturbation,
) -> Result<Perturbation> {
    let c = coeffs(eq);
    let th = eq.theta_star;
    let mut out = pert.clone();

    let total_area = c.area_k * eq.spheres.count() as f64;
    let h_mean: f64 = out.h.iter().map(|h| h.mean() * c.area_k).sum::<f64>() / total_area;
    for h in &mut out.h {
        h.shift_mean(-h_mean);
    }

    let k1 = ms.derived_bulk(Phase::One, th)?.kappa;
    let k2 = ms.derived_bulk(Phase::Two, th)?.kappa;
    let kg = ms.derived_surface(th)?.kappa;
    let numer = ms.phase1.rho * k1 * integral_theta(&out.theta1, c.n, c.v1)?
        + ms.phase2.rho * k2 * integral_theta(&out.theta2, c.n, c.v2)?
        + kg * out
            .theta_gamma
            .iter()
            .map(|t| t.mean() * c.area_k)
            .sum::<f64>();
    let denom = ms.phase1.rho * k1 * c.v1 + ms.phase2.rho * k2 * c.v2 + kg * total_area;
    let shift = numer / denom;

    let apply = |var: &mut BulkVar| match var {
        BulkVar::Constant(v) => *v -= shift,
        BulkVar::Radial(f) => f.values.iter_mut().for_each(|v| *v -= shift),
    };
    apply(&mut out.theta1);
    apply(&mut out.theta2);
    for t in &mut out.theta_gamma {
        t.shift_mean(-shift);
    }
    Ok(out)
}

/// Value of the mass-constraint functional (1|h)_Γ on a direction.
pub fn mass_constraint_value(eq: &EquilibriumState, pert: &Perturbation) -> f64 {
    let c = coeffs(eq);
    pert.h.iter().map(|h| h.mean() * c.area_k).sum()
}

/// Value of the energy-constraint functional (ρκ_*|ϑ)_Ω + (κ_Γ*|ϑ_Γ)_Γ.
pub fn energy_constraint_value(
    ms: &MaterialSet,
    eq: &EquilibriumState,
    pert: &Perturbation,
) -> Result<f64> {
    let c = coeffs(eq);
    let th = eq.theta_star;
    let k1 = ms.derived_bulk(Phase::One, th)?.kappa;
    let k2 = ms.derived_bulk(Phase::Two, th)?.kappa;
    let kg = ms.derived_surface(th)?.kappa;
    Ok(ms.phase1.rho * k1 * integral_theta(&pert.theta1, c.n, c.v1)?
        + ms.phase2.rho * k2 * integral_theta(&pert.theta2, c.n, c.v2)?
        + kg * pert
            .theta_gamma
            .iter()
            .map(|t| t.mean() * c.area_k)
            .sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    NegSemiDefinite,
    Indefinite,
}

/// One probed direction of the quadratic form.
#[derive(Debug, Clone, Serialize)]
pub struct DirectionValue {
    pub label: String,
    /// Whether the direction was pushed through the constraint projection.
    pub constrained: bool,
    /// Form value on the (projected) unit-coefficient direction.
    pub value: f64,
    /// Rayleigh quotient: value divided by the squared L² norm.
    pub normalized: f64,
}

/// Definiteness report over the probe basis.
#[derive(Debug, Clone, Serialize)]
pub struct QuadraticFormReport {
    pub classification: Classification,
    pub positive_subspace_dim: usize,
    /// Witness direction and its form value when indefinite.
    #[serde(skip)]
    pub witness: Option<Perturbation>,
    pub witness_value: Option<f64>,
    pub directions: Vec<DirectionValue>,
}

/// Absolute tolerance for the definiteness decision on normalized directions.
pub const DEFINITENESS_TOL: f64 = 1e-10;

/// Classifies ⟨D_*z|z⟩ on the constrained probe basis. Connected interfaces
/// (m = 1) come out negative semi-definite with equality exactly on the
/// degree-one modes; m ≥ 2 is indefinite with the constant-per-sphere,
/// zero-sum volume-exchange witness and an (m−1)-dimensional positive
/// subspace.
pub fn classify_definiteness(
    ms: &MaterialSet,
    eq: &EquilibriumState,
    l_max: usize,
) -> Result<QuadraticFormReport> {
    if l_max < 2 {
        return Err(Error::InvalidInput("l_max must be at least 2".into()));
    }
    let n = eq.domain.n;
    let m = eq.spheres.count();
    let c = coeffs(eq);
    let th = eq.theta_star;
    let sigma = ms.surface.sigma.value(th);
    let mut directions = Vec::new();

    let mut eval = |label: String, pert: &Perturbation, norm_sq: f64| -> Result<f64> {
        let projected = constraint_projection(ms, eq, pert)?;
        let value = second_variation_form(ms, eq, &projected)?;
        directions.push(DirectionValue {
            label,
            constrained: true,
            value,
            normalized: if norm_sq > 0.0 { value / norm_sq } else { 0.0 },
        });
        Ok(value)
    };

    let mut pert = Perturbation::zero(n, m, l_max)?;
    pert.theta1 = BulkVar::Constant(1.0);
    pert.theta2 = BulkVar::Constant(1.0);
    eval("theta_const".into(), &pert, c.v1 + c.v2)?;

    let mut pert = Perturbation::zero(n, m, l_max)?;
    for t in &mut pert.theta_gamma {
        t.shift_mean(1.0);
    }
    eval("theta_gamma_const".into(), &pert, c.area_k * m as f64)?;

    for l in 0..=l_max {
        let mut pert = Perturbation::zero(n, m, l_max)?;
        pert.h[0] = HarmonicCoeffs::unit(n, l_max, l, 0);
        eval(format!("h_l{l}_sphere0"), &pert, c.area_k)?;
    }

    // cross-sphere constant block restricted to the mass constraint
    let mut positive_dim = 0;
    let mut witness = None;
    let mut witness_value = None;
    if m >= 2 {
        // form on constants per sphere is diagonal: sigma (n-1)/R^2 |Sigma_k|
        let diag = sigma * (n as f64 - 1.0) / (eq.spheres.radius * eq.spheres.radius) * c.area_k;
        let basis = zero_sum_basis(m);
        let mut restricted = DMatrix::<f64>::zeros(m - 1, m - 1);
        for a in 0..(m - 1) {
            for b in 0..(m - 1) {
                let mut s = 0.0;
                for k in 0..m {
                    s += basis[(k, a)] * diag * basis[(k, b)];
                }
                restricted[(a, b)] = s;
            }
        }
        let eig = restricted.symmetric_eigen();
        positive_dim = eig.eigenvalues.iter().filter(|&&e| e > DEFINITENESS_TOL).count();

        let mut w = Perturbation::zero(n, m, l_max)?;
        w.h[0].shift_mean(1.0);
        w.h[1].shift_mean(-1.0);
        let value = second_variation_form(ms, eq, &w)?;
        directions.push(DirectionValue {
            label: "h_volume_exchange".into(),
            constrained: true,
            value,
            normalized: value / (2.0 * c.area_k),
        });
        witness_value = Some(value);
        witness = Some(w);
    }

    let indefinite = directions.iter().any(|d| d.normalized > DEFINITENESS_TOL);
    Ok(QuadraticFormReport {
        classification: if indefinite {
            Classification::Indefinite
        } else {
            Classification::NegSemiDefinite
        },
        positive_subspace_dim: positive_dim,
        witness: if indefinite { witness } else { None },
        witness_value: if indefinite { witness_value } else { None },
        directions,
    })
}

/// Orthonormal basis (columns) of the zero-sum subspace of R^m.
fn zero_sum_basis(m: usize) -> DMatrix<f64> {
    let mut b = DMatrix::<f64>::zeros(m, m - 1);
    for j in 0..(m - 1) {
        // Helmert-style vectors: (1,...,1,-(j+1),0,...)/norm
        let norm = ((j + 1) as f64 * (j + 2) as f64).sqrt();
        for i in 0..=j {
            b[(i, j)] = 1.0 / norm;
        }
        b[(j + 1, j)] = -((j + 1) as f64) / norm;
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::{total_functionals, EquilibriumState, StateFields};
    use crate::geometry::{ball_volume, sphere_area, Domain, SphereFamily};
    use crate::thermo::default_materials;
    use std::f64::consts::PI;

    fn default_eq() -> (MaterialSet, EquilibriumState) {
        let ms = default_materials();
        let dom = Domain::new(3, 2.0).unwrap();
        let eq = EquilibriumState::from_radius_temperature(
            &ms,
            dom,
            SphereFamily::concentric(1.0),
            1.0,
        )
        .unwrap();
        (ms, eq)
    }

    fn two_sphere_eq(n: usize) -> (MaterialSet, EquilibriumState) {
        let ms = default_materials();
        let dom = Domain::new(n, 8.0).unwrap();
        let spheres =
            SphereFamily::new(vec![[-3.0, 0.0, 0.0], [3.0, 0.0, 0.0]], 1.0).unwrap();
        let eq = EquilibriumState::from_radius_temperature(&ms, dom, spheres, 1.0).unwrap();
        (ms, eq)
    }

    #[test]
    fn mass_variation_reference_value() {
        // rho=(2,1), h=1 on one sphere R=1, n=3: -(1-2)*4pi = 4pi
        let (ms, eq) = default_eq();
        let mut pert = Perturbation::zero(3, 1, 8).unwrap();
        pert.h[0].shift_mean(1.0);
        let dm = first_variation_mass(&ms, &eq, &pert).unwrap();
        assert!((dm - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn mean_zero_h_annihilates_first_variations() {
        let (ms, eq) = default_eq();
        let mut pert = Perturbation::zero(3, 1, 8).unwrap();
        pert.h[0].set(2, 1, 0.7);
        pert.h[0].set(3, 0, -0.3);
        assert_eq!(first_variation_mass(&ms, &eq, &pert).unwrap(), 0.0);
        assert_eq!(first_variation_entropy(&ms, &eq, &pert).unwrap(), 0.0);
        assert_eq!(first_variation_energy(&ms, &eq, &pert).unwrap(), 0.0);
    }

    /// Central-difference directional derivatives of the true functionals
    /// under a radius + temperature perturbation.
    fn fd_derivatives(
        ms: &MaterialSet,
        eq: &EquilibriumState,
        h: f64,
        dtheta: f64,
        eps: f64,
    ) -> (f64, f64, f64) {
        let eval = |e: f64| {
            let spheres = SphereFamily {
                centers: eq.spheres.centers.clone(),
                radius: eq.spheres.radius + e * h,
            };
            let tot = total_functionals(
                ms,
                &eq.domain,
                &spheres,
                &StateFields::uniform(eq.theta_star + e * dtheta),
            )
            .unwrap();
            (tot.entropy, tot.mass, tot.energy)
        };
        let (sp, mp, ep) = eval(eps);
        let (sm, mm, em) = eval(-eps);
        (
            (sp - sm) / (2.0 * eps),
            (mp - mm) / (2.0 * eps),
            (ep - em) / (2.0 * eps),
        )
    }

    #[test]
    fn first_variations_match_finite_differences() {
        let (ms, eq) = default_eq();
        let (h, dtheta, eps) = (0.37, 0.23, 1e-5);
        let mut pert = Perturbation::zero(3, 1, 8).unwrap();
        pert.h[0].shift_mean(h);
        pert.theta1 = BulkVar::Constant(dtheta);
        pert.theta2 = BulkVar::Constant(dtheta);
        for t in &mut pert.theta_gamma {
            t.shift_mean(dtheta);
        }
        let (fd_s, fd_m, fd_e) = fd_derivatives(&ms, &eq, h, dtheta, eps);
        let s = first_variation_entropy(&ms, &eq, &pert).unwrap();
        let m = first_variation_mass(&ms, &eq, &pert).unwrap();
        let e = first_variation_energy(&ms, &eq, &pert).unwrap();
        assert!((s - fd_s).abs() < 1e-6 * (1.0 + fd_s.abs()), "{s} vs {fd_s}");
        assert!((m - fd_m).abs() < 1e-6 * (1.0 + fd_m.abs()), "{m} vs {fd_m}");
        assert!((e - fd_e).abs() < 1e-6 * (1.0 + fd_e.abs()), "{e} vs {fd_e}");
    }

    #[test]
    fn entropy_variation_constant_sigma_closed_form() {
        // sigma constant: eta_Gamma = 0; with theta variations off the
        // formula reduces to -([[rho eta]] | h)
        let mut ms = default_materials();
        ms.surface = crate::thermo::SurfaceLaw::with_theta_c(
            crate::thermo::SigmaFamily {
                c0: 0.75,
                c1: 0.0,
                c2: 0.0,
            },
            crate::thermo::ScalarFamily::constant(1.0),
            crate::thermo::ScalarFamily::constant(0.1),
            2.0,
        );
        let dom = Domain::new(3, 2.0).unwrap();
        let eq = EquilibriumState::from_radius_temperature(
            &ms,
            dom,
            SphereFamily::concentric(1.0),
            1.0,
        )
        .unwrap();
        let mut pert = Perturbation::zero(3, 1, 8).unwrap();
        pert.h[0].shift_mean(0.5);
        let th = eq.theta_star;
        let eta_jump = ms.phase2.rho * (-ms.phase2.psi.d1(th))
            - ms.phase1.rho * (-ms.phase1.psi.d1(th));
        let expected = -eta_jump * 0.5 * 4.0 * PI;
        let got = first_variation_entropy(&ms, &eq, &pert).unwrap();
        assert!((got - expected).abs() < 1e-12 * (1.0 + expected.abs()));
    }

    #[test]
    fn lagrange_residual_vanishes_at_equilibria() {
        let (ms, eq) = default_eq();
        assert!(lagrange_residual(&ms, &eq).unwrap() < 1e-8);
        let (ms2, eq2) = two_sphere_eq(3);
        assert!(lagrange_residual(&ms2, &eq2).unwrap() < 1e-8);
    }

    #[test]
    fn lagrange_residual_scales_linearly_in_bulk_perturbation() {
        let (ms, eq) = default_eq();
        let r1 =
            lagrange_residual_split(&ms, &eq, eq.theta_star * 1.01, eq.theta_star).unwrap();
        let r2 =
            lagrange_residual_split(&ms, &eq, eq.theta_star * 1.005, eq.theta_star).unwrap();
        assert!(r1 > 1e-6, "perturbed state must have nonzero residual, got {r1}");
        let ratio = r1 / r2;
        assert!((ratio - 2.0).abs() < 0.05, "ratio {ratio} should be ~2");
    }

    #[test]
    fn second_variation_zero_on_zero_perturbation() {
        let (ms, eq) = default_eq();
        let pert = Perturbation::zero(3, 1, 8).unwrap();
        assert_eq!(second_variation_form(&ms, &eq, &pert).unwrap(), 0.0);
    }

    #[test]
    fn volume_exchange_witness_value() {
        // m=2, n=3, R=1, sigma_* theta_* = 1 requires sigma(theta_*) = 1:
        // use sigma0 chosen so sigma(1) = 1 with theta_c = 2
        let mut ms = default_materials();
        ms.surface = crate::thermo::SurfaceLaw::new(
            crate::thermo::SigmaFamily::concave(4.0 / 3.0, 2.0),
            crate::thermo::ScalarFamily::constant(1.0),
            crate::thermo::ScalarFamily::constant(0.1),
            4.0,
        )
        .unwrap();
        let dom = Domain::new(3, 8.0).unwrap();
        let spheres =
            SphereFamily::new(vec![[-3.0, 0.0, 0.0], [3.0, 0.0, 0.0]], 1.0).unwrap();
        let eq = EquilibriumState::from_radius_temperature(&ms, dom, spheres, 1.0).unwrap();
        assert!((eq.sigma_star(&ms) - 1.0).abs() < 1e-14);
        let mut pert = Perturbation::zero(3, 2, 8).unwrap();
        pert.h[0].shift_mean(1.0);
        pert.h[1].shift_mean(-1.0);
        let value = second_variation_form(&ms, &eq, &pert).unwrap();
        assert!((value - 16.0 * PI).abs() < 1e-8 * 16.0 * PI, "got {value}");
    }

    #[test]
    fn degree_one_harmonics_are_neutral() {
        let (ms, eq) = default_eq();
        let mut pert = Perturbation::zero(3, 1, 8).unwrap();
        pert.h[0].set(1, 2, 1.0);
        assert_eq!(second_variation_form(&ms, &eq, &pert).unwrap(), 0.0);
    }

    #[test]
    fn pure_theta_direction_is_negative() {
        let (ms, eq) = default_eq();
        let mut pert = Perturbation::zero(3, 1, 8).unwrap();
        pert.theta1 = BulkVar::Constant(1.0);
        pert.theta2 = BulkVar::Constant(1.0);
        let v = second_variation_form(&ms, &eq, &pert).unwrap();
        let (v1, v2) = eq.volumes();
        let expected = -(ms.phase1.rho * 2.0 * v1 + ms.phase2.rho * 1.0 * v2) / eq.theta_star;
        assert!((v - expected).abs() < 1e-12 * expected.abs());
        assert!(v < 0.0);
    }

    #[test]
    fn second_variation_is_theta_star_times_true_hessian() {
        // FD of Phi + lambda M + mu E along the volume-exchange path equals
        // the (2var) value divided by theta_*; checked away from theta_* = 1
        let ms = default_materials();
        let dom = Domain::new(3, 10.0).unwrap();
        let spheres =
            SphereFamily::new(vec![[-3.0, 0.0, 0.0], [3.0, 0.0, 0.0]], 1.0).unwrap();
        let theta = 0.8;
        let eq = EquilibriumState::from_radius_temperature(&ms, dom, spheres, theta).unwrap();
        let mu = -1.0 / theta;
        let h_geo = -eq.h_star;
        let rho_psi_jump = ms.phase2.rho * ms.phase2.psi.value(theta)
            - ms.phase1.rho * ms.phase1.psi.value(theta);
        let lambda =
            (rho_psi_jump + ms.surface.sigma.value(theta) * h_geo) / (ms.rho_jump() * theta);

        let combined = |e: f64| -> f64 {
            let mk = |r: f64, centers: Vec<[f64; 3]>| SphereFamily {
                centers,
                radius: r,
            };
            // two spheres of different radii: evaluate the functionals
            // sphere-by-sphere (uniform temperature keeps this closed-form)
            let radii = [eq.spheres.radius + e, eq.spheres.radius - e];
            let mut phi = 0.0;
            let mut mass = 0.0;
            let mut energy = 0.0;
            // bulk phase 2 fills the remainder of the container
            let mut v1_tot = 0.0;
            let mut area_tot = 0.0;
            for r in radii {
                v1_tot += ball_volume(3, r);
                area_tot += sphere_area(3, r);
            }
            let v2 = eq.domain.volume() - v1_tot;
            let b1 = ms.derived_bulk(Phase::One, theta).unwrap();
            let b2 = ms.derived_bulk(Phase::Two, theta).unwrap();
            let s = ms.derived_surface(theta).unwrap();
            phi += ms.phase1.rho * b1.eta * v1_tot + ms.phase2.rho * b2.eta * v2
                + s.eta * area_tot;
            mass += ms.phase1.rho * v1_tot + ms.phase2.rho * v2;
            energy += ms.phase1.rho * b1.eps * v1_tot + ms.phase2.rho * b2.eps * v2
                + s.eps * area_tot;
            let _ = mk;
            phi + lambda * mass + mu * energy
        };
        let eps = 1e-4;
        let hessian = (combined(eps) - 2.0 * combined(0.0) + combined(-eps)) / (eps * eps);

        let mut pert = Perturbation::zero(3, 2, 8).unwrap();
        pert.h[0].shift_mean(1.0);
        pert.h[1].shift_mean(-1.0);
        let form = second_variation_form(&ms, &eq, &pert).unwrap();
        assert!(
            (form - theta * hessian).abs() < 1e-5 * form.abs(),
            "form {form} vs theta*hessian {}",
            theta * hessian
        );
    }

    #[test]
    fn projection_is_idempotent_and_kills_constraints() {
        let (ms, eq) = default_eq();
        let mut pert = Perturbation::zero(3, 1, 8).unwrap();
        pert.h[0].shift_mean(0.9);
        pert.h[0].set(2, 0, 0.4);
        pert.theta1 = BulkVar::Constant(0.3);
        pert.theta2 = BulkVar::Constant(-0.2);
        for t in &mut pert.theta_gamma {
            t.shift_mean(0.8);
        }
        let p = constraint_projection(&ms, &eq, &pert).unwrap();
        assert!(mass_constraint_value(&eq, &p).abs() < 1e-12);
        assert!(energy_constraint_value(&ms, &eq, &p).unwrap().abs() < 1e-12);
        let pp = constraint_projection(&ms, &eq, &p).unwrap();
        assert!((mass_constraint_value(&eq, &pp) - mass_constraint_value(&eq, &p)).abs() < 1e-14);
        // h == 1 everywhere projects to zero
        let mut ones = Perturbation::zero(3, 1, 8).unwrap();
        ones.h[0].shift_mean(1.0);
        let proj = constraint_projection(&ms, &eq, &ones).unwrap();
        assert!(proj.h[0].mean().abs() < 1e-14);
    }

    #[test]
    fn classification_single_sphere_is_neg_semi_definite() {
        let (ms, eq) = default_eq();
        let report = classify_definiteness(&ms, &eq, 8).unwrap();
        assert_eq!(report.classification, Classification::NegSemiDefinite);
        assert_eq!(report.positive_subspace_dim, 0);
        // equality exactly on the degree-one modes
        let l1 = report
            .directions
            .iter()
            .find(|d| d.label == "h_l1_sphere0")
            .unwrap();
        assert!(l1.value.abs() < 1e-13);
    }

    #[test]
    fn classification_two_and_three_spheres_indefinite() {
        let (ms, eq2) = two_sphere_eq(3);
        let report = classify_definiteness(&ms, &eq2, 8).unwrap();
        assert_eq!(report.classification, Classification::Indefinite);
        assert_eq!(report.positive_subspace_dim, 1);
        assert!(report.witness_value.unwrap() > 0.0);

        let dom = Domain::new(3, 12.0).unwrap();
        let spheres = SphereFamily::new(
            vec![[-4.0, 0.0, 0.0], [4.0, 0.0, 0.0], [0.0, 4.0, 0.0]],
            1.0,
        )
        .unwrap();
        let eq3 = EquilibriumState::from_radius_temperature(&ms, dom, spheres, 1.0).unwrap();
        let report3 = classify_definiteness(&ms, &eq3, 8).unwrap();
        assert_eq!(report3.classification, Classification::Indefinite);
        assert_eq!(report3.positive_subspace_dim, 2);
    }

    #[test]
    fn rotation_invariance_within_degree() {
        // mixing same-degree coefficients by an orthogonal matrix leaves the
        // form unchanged
        let (ms, eq) = default_eq();
        let l = 2;
        let mult = ModeIndex::new(3, l).multiplicity();
        let coeffs: Vec<f64> = (0..mult).map(|i| (i as f64 * 0.7).sin() + 0.2).collect();
        let mut pert = Perturbation::zero(3, 1, 8).unwrap();
        for (i, &ci) in coeffs.iter().enumerate() {
            pert.h[0].set(l, i, ci);
        }
        let base = second_variation_form(&ms, &eq, &pert).unwrap();

        // orthogonal mix from QR of a fixed full-rank matrix
        let raw = DMatrix::<f64>::from_fn(mult, mult, |i, j| {
            ((i * 7 + j * 3 + 1) as f64).sin() + if i == j { 2.0 } else { 0.0 }
        });
        let q = raw.qr().q();
        let mixed = &q * nalgebra::DVector::from_vec(coeffs.clone());
        let mut pert2 = Perturbation::zero(3, 1, 8).unwrap();
        for i in 0..mult {
            pert2.h[0].set(l, i, mixed[i]);
        }
        let rotated = second_variation_form(&ms, &eq, &pert2).unwrap();
        assert!((base - rotated).abs() < 1e-10 * base.abs());
    }

    #[test]
    fn constrained_directions_nonpositive_for_single_sphere() {
        // all h-directions in the constraint kernel with v = 0, theta = 0:
        // form <= 0, equality exactly at l = 1
        let (ms, eq) = default_eq();
        for l in 0..=8usize {
            let mut pert = Perturbation::zero(3, 1, 8).unwrap();
            pert.h[0].set(l, 0, 1.0);
            let p = constraint_projection(&ms, &eq, &pert).unwrap();
            let v = second_variation_form(&ms, &eq, &p).unwrap();
            if l == 1 {
                assert!(v.abs() < 1e-13);
            } else if l == 0 {
                // projected to zero for a single sphere
                assert!(v.abs() < 1e-13);
            } else {
                assert!(v < 0.0, "l={l} gave {v}");
            }
        }
    }

    #[test]
    fn mode_h_prime_matches_discrete_laplace_beltrami() {
        // n=3: finite-difference Laplace-Beltrami on a latitude grid applied
        // to Y_2 ~ 3cos^2(theta)-1; n=2: Fourier second derivative on the
        // circle. Both must reproduce -l(l+n-2)/R^2.
        let r: f64 = 1.7;
        // n = 3, l = 2
        let nu_exact = ModeIndex::new(3, 2).laplace_beltrami_eig(r);
        let npts = 20_000;
        let h = PI / npts as f64;
        let y = |t: f64| 3.0 * t.cos() * t.cos() - 1.0;
        let mut max_rel = 0.0f64;
        for i in (npts / 4)..(3 * npts / 4) {
            let t = i as f64 * h;
            // (1/sin t)(sin t Y')' / r^2
            let yp = |t: f64| (y(t + h) - y(t - h)) / (2.0 * h);
            let lap = ((t + 0.5 * h).sin() * yp(t + 0.5 * h)
                - (t - 0.5 * h).sin() * yp(t - 0.5 * h))
                / (h * t.sin())
                / (r * r);
            let rel = (lap - nu_exact * y(t)).abs() / (1.0 + (nu_exact * y(t)).abs());
            max_rel = max_rel.max(rel);
        }
        assert!(max_rel < 1e-6, "n=3 discrete LB error {max_rel}");

        // n = 2, k = 3
        let nu2 = ModeIndex::new(2, 3).laplace_beltrami_eig(r);
        let npts2 = 40_000usize;
        let hp = 2.0 * PI / npts2 as f64;
        let yc = |p: f64| (3.0 * p).cos();
        let mut max_rel2 = 0.0f64;
        for i in 0..npts2 {
            let p = i as f64 * hp;
            let lap = (yc(p + hp) - 2.0 * yc(p) + yc(p - hp)) / (hp * hp) / (r * r);
            let rel = (lap - nu2 * yc(p)).abs() / (1.0 + (nu2 * yc(p)).abs());
            max_rel2 = max_rel2.max(rel);
        }
        assert!(max_rel2 < 1e-6, "n=2 discrete LB error {max_rel2}");
    }
}
