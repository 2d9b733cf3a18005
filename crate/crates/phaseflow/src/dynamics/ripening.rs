//! Multi-droplet coarsening: the quasi-static volume-exchange reduction.
//!
//! Each droplet k obeys the linearized Gibbs–Thomson balance
//! γ_* j_k = −(c̄ + b(R_k)) with the pressure undercooling
//! b(R) = −σ_*(n−1)/(ρ₁ R), where c̄ is the common multiplier (the far-field
//! temperature / exterior pressure combination) enforcing total phase-1
//! volume conservation Σ |Σ_k| j_k = 0. Interface motion is Ṙ_k = −j_k/ρ₁.
//!
//! Linearized at equal radii this gives the growth matrix ω(I − P) with
//! ω = σ_*(n−1)/(γ_* ρ₁² R²): exactly m−1 equal positive growth rates on the
//! volume-preserving subspace.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::thermo::MaterialSet;

/// Frozen coefficients of the reduction.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RipeningContext {
    pub n: usize,
    pub sigma_star: f64,
    pub gamma_star: f64,
    pub rho1: f64,
    /// Extinction radius: droplets below it are removed.
    pub r_min: f64,
}

impl RipeningContext {
    pub fn new(ms: &MaterialSet, theta_star: f64, n: usize, r_min: f64) -> Result<Self> {
        ms.check_theta(theta_star)?;
        let gamma_star = ms.surface.gamma.value(theta_star);
        if gamma_star <= 0.0 {
            return Err(Error::GammaZero);
        }
        Ok(RipeningContext {
            n,
            sigma_star: ms.surface.sigma.value(theta_star),
            gamma_star,
            rho1: ms.phase1.rho,
            r_min,
        })
    }

    /// Growth rate ω of the volume-exchange instability at radius r.
    pub fn growth_rate(&self, r: f64) -> f64 {
        self.sigma_star * (self.n as f64 - 1.0) / (self.gamma_star * self.rho1 * self.rho1 * r * r)
    }

    fn undercooling(&self, r: f64) -> f64 {
        -self.sigma_star * (self.n as f64 - 1.0) / (self.rho1 * r)
    }
}

/// dR_k/dt for the current radii; the rate vector is orthogonal to the
/// volume-conservation gradient (R_1^{n−1}, …, R_m^{n−1}).
pub fn ripening_rhs(ctx: &RipeningContext, radii: &[f64]) -> Result<Vec<f64>> {
    for (k, &r) in radii.iter().enumerate() {
        if r < ctx.r_min {
            return Err(Error::DropletCollapse {
                index: k,
                r_min: ctx.r_min,
            });
        }
    }
    let p = ctx.n as i32 - 1;
    let weight_sum: f64 = radii.iter().map(|r| r.powi(p)).sum();
    let c_bar =
        -radii.iter().map(|r| r.powi(p) * ctx.undercooling(*r)).sum::<f64>() / weight_sum;
    Ok(radii
        .iter()
        .map(|&r| (c_bar + ctx.undercooling(r)) / (ctx.gamma_star * ctx.rho1))
        .collect())
}

/// Analytic Jacobian of `ripening_rhs` (same code path coefficients).
pub fn ripening_jacobian(ctx: &RipeningContext, radii: &[f64]) -> DMatrix<f64> {
    let m = radii.len();
    let nf = ctx.n as f64;
    let p = ctx.n as i32 - 1;
    let s_nm1: f64 = radii.iter().map(|r| r.powi(p)).sum();
    let s_nm2: f64 = radii.iter().map(|r| r.powi(p - 1)).sum();
    let kappa = ctx.sigma_star * (nf - 1.0) / (ctx.rho1 * ctx.gamma_star * ctx.rho1);
    // rate_k = kappa (⟨1/R⟩_w − 1/R_k) with ⟨1/R⟩_w = S_{n−2}/S_{n−1}
    DMatrix::from_fn(m, m, |k, j| {
        let rj = radii[j];
        let d_mean = ((nf - 2.0) * rj.powi(p - 2) * s_nm1 - (nf - 1.0) * rj.powi(p - 1) * s_nm2)
            / (s_nm1 * s_nm1);
        let own = if k == j { 1.0 / (rj * rj) } else { 0.0 };
        kappa * (d_mean + own)
    })
}

/// Extinction record: droplet `index` (original numbering) removed at `t`.
#[derive(Debug, Clone, Serialize)]
pub struct ExtinctionEvent {
    pub t: f64,
    pub index: usize,
    pub radius_before: f64,
}

/// Integration output. Radii rows carry one column per original droplet,
/// zero after extinction.
#[derive(Debug, Clone, Serialize)]
pub struct RipeningTrajectory {
    pub times: Vec<f64>,
    pub radii: Vec<Vec<f64>>,
    pub events: Vec<ExtinctionEvent>,
    /// Max relative drift of Σ R^n over the delivered trajectory (events
    /// included).
    pub conservation_drift: f64,
    /// Largest relative volume correction applied by the per-step
    /// projection (a scheme diagnostic).
    pub max_projection_correction: f64,
    /// Max stepwise increase of the total area Σ R^{n−1} (coarsening must
    /// shrink it; the entropy surrogate −Σ R^{n−1} is nondecreasing).
    pub max_area_increase: f64,
    pub final_radii: Vec<f64>,
}

fn rk4(ctx: &RipeningContext, y: &[f64], dt: f64) -> Result<Vec<f64>> {
    let add = |y: &[f64], k: &[f64], s: f64| -> Vec<f64> {
        y.iter().zip(k).map(|(a, b)| a + s * b).collect()
    };
    let k1 = ripening_rhs(ctx, y)?;
    let k2 = ripening_rhs(ctx, &add(y, &k1, 0.5 * dt))?;
    let k3 = ripening_rhs(ctx, &add(y, &k2, 0.5 * dt))?;
    let k4 = ripening_rhs(ctx, &add(y, &k3, dt))?;
    Ok((0..y.len())
        .map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// One adaptive step with step-doubling error control; the rhs collapse
/// signal is translated into a smaller step so events are resolved.
fn try_step(ctx: &RipeningContext, y: &[f64], dt: f64) -> Result<Option<(Vec<f64>, f64)>> {
    let full = match rk4(ctx, y, dt) {
        Ok(v) => v,
        Err(Error::DropletCollapse { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let half = match rk4(ctx, y, 0.5 * dt).and_then(|mid| rk4(ctx, &mid, 0.5 * dt)) {
        Ok(v) => v,
        Err(Error::DropletCollapse { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let err = full
        .iter()
        .zip(&half)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max)
        / 15.0;
    Ok(Some((half, err)))
}

/// Integrates the reduction with droplet-removal events until a single
/// droplet survives or `t_end` is reached. Σ R^n is reprojected after every
/// step, so conservation holds across the whole run including events.
pub fn simulate_ripening(
    ctx: &RipeningContext,
    initial: &[f64],
    t_end: f64,
    dt0: f64,
) -> Result<RipeningTrajectory> {
    let m0 = initial.len();
    let nf = ctx.n as f64;
    let target_volume: f64 = initial.iter().map(|r| r.powi(ctx.n as i32)).sum();

    let mut alive: Vec<usize> = (0..m0).collect();
    let mut radii: Vec<f64> = initial.to_vec();
    let mut t = 0.0;
    let mut dt = dt0;
    let mut times = vec![0.0];
    let mut rows = vec![full_row(m0, &alive, &radii)];
    let mut events = Vec::new();
    let mut conservation_drift = 0.0f64;
    let mut max_projection_correction = 0.0f64;
    let mut max_area_increase = 0.0f64;
    let mut area_prev: f64 = radii.iter().map(|r| r.powi(ctx.n as i32 - 1)).sum();
    let tol = 1e-10;

    let mut guard = 0usize;
    while t < t_end && alive.len() > 1 {
        guard += 1;
        if guard > 2_000_000 {
            return Err(Error::StepFailure {
                t,
                reason: "step budget exhausted".into(),
            });
        }
        dt = dt.min(t_end - t).max(1e-15);
        let scale: f64 = radii.iter().cloned().fold(0.0, f64::max).max(1.0);

        // event detection: the collapse signal or a sub-r_min radius after
        // the step shrinks dt until the first extinction is resolved
        let stepped = try_step(ctx, &radii, dt)?;
        let accept = match stepped {
            Some((ref y_new, err)) if err <= tol * scale => {
                if y_new.iter().all(|&r| r > ctx.r_min) {
                    Some(y_new.clone())
                } else if dt > 1e-13 {
                    None
                } else {
                    Some(y_new.clone())
                }
            }
            _ => None,
        };

        match accept {
            Some(mut y_new) => {
                // multiplicative volume projection
                let v: f64 = y_new.iter().map(|r| r.powi(ctx.n as i32)).sum();
                max_projection_correction =
                    max_projection_correction.max((v - target_volume).abs() / target_volume);
                let s = (target_volume / v).powf(1.0 / nf);
                for r in &mut y_new {
                    *r *= s;
                }
                t += dt;
                // extinction sweep
                loop {
                    let Some(pos) = y_new.iter().position(|&r| r <= ctx.r_min) else {
                        break;
                    };
                    let gone = y_new.remove(pos);
                    let original = alive.remove(pos);
                    events.push(ExtinctionEvent {
                        t,
                        index: original,
                        radius_before: gone,
                    });
                    let share = gone.powi(ctx.n as i32) / y_new.len() as f64;
                    for r in &mut y_new {
                        *r = (r.powi(ctx.n as i32) + share).powf(1.0 / nf);
                    }
                }
                radii = y_new;
                let v_now: f64 = radii.iter().map(|r| r.powi(ctx.n as i32)).sum();
                conservation_drift =
                    conservation_drift.max((v_now - target_volume).abs() / target_volume);
                let area: f64 = radii.iter().map(|r| r.powi(ctx.n as i32 - 1)).sum();
                max_area_increase = max_area_increase.max(area - area_prev);
                area_prev = area;
                times.push(t);
                rows.push(full_row(m0, &alive, &radii));
                dt = (dt * 1.5).min(dt0 * 100.0);
            }
            None => {
                dt *= 0.5;
                if dt < 1e-11 {
                    // the pull toward extinction is singular (Ṙ ~ −1/R);
                    // once steps underflow, remove the vanishing droplet at
                    // its current radius and redistribute its volume
                    let (pos, _) = radii
                        .iter()
                        .enumerate()
                        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                        .expect("nonempty");
                    let gone = radii.remove(pos);
                    let original = alive.remove(pos);
                    events.push(ExtinctionEvent {
                        t,
                        index: original,
                        radius_before: gone,
                    });
                    let share = gone.powi(ctx.n as i32) / radii.len() as f64;
                    for r in &mut radii {
                        *r = (r.powi(ctx.n as i32) + share).powf(1.0 / nf);
                    }
                    let area: f64 = radii.iter().map(|r| r.powi(ctx.n as i32 - 1)).sum();
                    max_area_increase = max_area_increase.max(area - area_prev);
                    area_prev = area;
                    times.push(t);
                    rows.push(full_row(m0, &alive, &radii));
                    dt = dt0;
                }
            }
        }
    }

    let v: f64 = radii.iter().map(|r| r.powi(ctx.n as i32)).sum();
    conservation_drift = conservation_drift.max((v - target_volume).abs() / target_volume);

    Ok(RipeningTrajectory {
        times,
        radii: rows,
        events,
        conservation_drift,
        max_projection_correction,
        max_area_increase,
        final_radii: radii,
    })
}

fn full_row(m0: usize, alive: &[usize], radii: &[f64]) -> Vec<f64> {
    let mut row = vec![0.0; m0];
    for (slot, &orig) in alive.iter().enumerate() {
        row[orig] = radii[slot];
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::default_materials;

    fn ctx(n: usize) -> RipeningContext {
        RipeningContext::new(&default_materials(), 1.0, n, 1e-3).unwrap()
    }

    #[test]
    fn equal_radii_are_stationary() {
        let c = ctx(3);
        let rhs = ripening_rhs(&c, &[1.0, 1.0, 1.0]).unwrap();
        assert!(rhs.iter().all(|v| v.abs() < 1e-15));
        // single droplet: conservation forces stationarity at any radius
        for r in [0.3, 1.0, 2.5] {
            let rhs1 = ripening_rhs(&c, &[r]).unwrap();
            assert_eq!(rhs1[0], 0.0);
        }
    }

    #[test]
    fn larger_droplet_grows() {
        let c = ctx(3);
        let rhs = ripening_rhs(&c, &[1.0 + 1e-3, 1.0 - 1e-3]).unwrap();
        assert!(rhs[0] > 0.0 && rhs[1] < 0.0);
        assert!(rhs[0] - rhs[1] > 0.0);
    }

    #[test]
    fn rate_orthogonal_to_volume_gradient() {
        let c = ctx(3);
        let radii = [1.3, 0.7, 1.0, 0.9];
        let rhs = ripening_rhs(&c, &radii).unwrap();
        let dot: f64 = radii
            .iter()
            .zip(&rhs)
            .map(|(r, v)| r.powi(2) * v)
            .sum();
        let scale: f64 = rhs.iter().map(|v| v.abs()).sum();
        assert!(dot.abs() < 1e-12 * scale.max(1e-300));
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let c = ctx(3);
        let radii = vec![1.2, 0.8, 1.05];
        let jac = ripening_jacobian(&c, &radii);
        let eps = 1e-7;
        for j in 0..radii.len() {
            let mut plus = radii.clone();
            plus[j] += eps;
            let mut minus = radii.clone();
            minus[j] -= eps;
            let fp = ripening_rhs(&c, &plus).unwrap();
            let fm = ripening_rhs(&c, &minus).unwrap();
            for k in 0..radii.len() {
                let fd = (fp[k] - fm[k]) / (2.0 * eps);
                assert!(
                    (jac[(k, j)] - fd).abs() < 1e-6 * (1.0 + fd.abs()),
                    "({k},{j}): {} vs {fd}",
                    jac[(k, j)]
                );
            }
        }
    }

    #[test]
    fn jacobian_at_equal_radii_is_projector_scaled() {
        let c = ctx(3);
        let m = 4;
        let r = 1.5;
        let jac = ripening_jacobian(&c, &vec![r; m]);
        let omega = c.growth_rate(r);
        for i in 0..m {
            for j in 0..m {
                let expected = omega * (if i == j { 1.0 } else { 0.0 } - 1.0 / m as f64);
                assert!(
                    (jac[(i, j)] - expected).abs() < 1e-12 * omega,
                    "({i},{j})"
                );
            }
        }
    }

    #[test]
    fn two_droplets_coarsen_to_conservation_radius() {
        let c = ctx(3);
        let traj = simulate_ripening(&c, &[1.01, 0.99], 1e4, 1e-3).unwrap();
        assert_eq!(traj.events.len(), 1);
        assert_eq!(traj.events[0].index, 1);
        assert_eq!(traj.final_radii.len(), 1);
        let expected = (1.01f64.powi(3) + 0.99f64.powi(3)).powf(1.0 / 3.0);
        assert!(
            (traj.final_radii[0] - expected).abs() < 1e-8 * expected,
            "{} vs {expected}",
            traj.final_radii[0]
        );
        assert!(traj.conservation_drift < 1e-10);
        assert!(traj.max_area_increase <= 1e-12);
    }

    #[test]
    fn single_droplet_trajectory_is_flat() {
        let c = ctx(3);
        let traj = simulate_ripening(&c, &[1.0], 1.0, 1e-2).unwrap();
        assert!(traj.events.is_empty());
        assert_eq!(traj.final_radii, vec![1.0]);
    }

    #[test]
    fn permutation_equivariance() {
        let c = ctx(2);
        let a = simulate_ripening(&c, &[1.1, 0.9, 1.0], 0.5, 1e-3).unwrap();
        let b = simulate_ripening(&c, &[0.9, 1.0, 1.1], 0.5, 1e-3).unwrap();
        let last_a = a.radii.last().unwrap();
        let last_b = b.radii.last().unwrap();
        assert!((last_a[0] - last_b[2]).abs() < 1e-9);
        assert!((last_a[1] - last_b[0]).abs() < 1e-9);
        assert!((last_a[2] - last_b[1]).abs() < 1e-9);
    }
}
