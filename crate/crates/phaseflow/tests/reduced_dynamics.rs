//! Cross-module integration: states produced by the radial solver, embedded
//! as field snapshots, satisfy the full interface-condition set to grid
//! tolerance (the radial sector carries no flow, so the quasi-stationary
//! pressures close the stress and Gibbs–Thomson balances exactly).

use phaseflow::dynamics::radial::{radial_step, RadialGrid, RadialState};
use phaseflow::dynamics::snapshot::{interface_residuals, FieldSnapshot};
use phaseflow::equilibria::equilibrium_pressures;
use phaseflow::thermo::default_materials;

fn embed(
    ms: &phaseflow::thermo::MaterialSet,
    grid: &RadialGrid,
    state: &RadialState,
    theta_gamma_dot: f64,
) -> FieldSnapshot {
    let nodes = grid.nodes();
    let iface = grid.interface_index();
    let theta_gamma = state.theta[iface];
    let (pi1, pi2) = equilibrium_pressures(ms, theta_gamma, grid.r_star, grid.n).unwrap();
    FieldSnapshot {
        n: grid.n,
        r_star: grid.r_star,
        r_omega: grid.r_omega,
        nodes1: nodes[..=iface].to_vec(),
        nodes2: nodes[iface..].to_vec(),
        u1: vec![0.0; iface + 1],
        u2: vec![0.0; nodes.len() - iface],
        pi1: vec![pi1; iface + 1],
        pi2: vec![pi2; nodes.len() - iface],
        theta1: state.theta[..=iface].to_vec(),
        theta2: state.theta[iface..].to_vec(),
        theta_gamma,
        theta_gamma_mode: None,
        theta_gamma_dot,
        j: 0.0,
        v_interface: 0.0,
    }
}

#[test]
fn radial_trajectory_embeds_with_small_interface_residuals() {
    let ms = default_materials();
    let grid = RadialGrid::new(3, 1.0, 2.0, 64, 96).unwrap();
    let dt = 1e-3;
    let mut states = vec![RadialState::two_constant(&grid, 0.95, 1.05)];
    for _ in 0..400 {
        states.push(radial_step(&ms, &grid, states.last().unwrap(), dt).unwrap());
    }

    // probe instants past the initial-data transient; the time derivative of
    // the surface temperature comes from central differences of the
    // trajectory
    for k in [200usize, 380] {
        let th_dot = (states[k + 1].theta[grid.interface_index()]
            - states[k - 1].theta[grid.interface_index()])
            / (2.0 * dt);
        let snap = embed(&ms, &grid, &states[k], th_dot);
        let res = interface_residuals(&ms, &snap).unwrap();

        // exact closures: continuity, kinematics, stress, Gibbs-Thomson
        assert!(res.theta_continuity == 0.0);
        assert!(res.normal_velocity_jump.abs() < 1e-14);
        assert!(res.kinematic.abs() < 1e-14);
        assert!(res.stress_normal.abs() < 1e-12, "{}", res.stress_normal);
        assert!(res.gibbs_thomson.abs() < 1e-12, "{}", res.gibbs_thomson);

        // the surface energy balance closes to the stencil + step tolerance
        let flux_scale = 1.0;
        assert!(
            res.surface_energy_balance.abs() < 1e-3 * flux_scale,
            "step {k}: energy balance residual {}",
            res.surface_energy_balance
        );
    }
}
