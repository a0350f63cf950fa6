//! DC limits derived by enumerating the best conduction choice per instant.

use rectiplan_core::*;

/// Largest reachable single-phase DC: full conduction with the sign of the
/// supply at every instant.
fn full_conduction_dc(grid: &TimeGrid) -> f64 {
    single_phase_template(grid).samples().iter().map(|s| s.abs()).sum::<f64>() / grid.n() as f64
}

/// Largest reachable three-phase DC: at each instant the pair and polarity
/// whose line voltage has the greatest magnitude.
fn envelope_dc(grid: &TimeGrid) -> f64 {
    let t = LineTemplates::balanced(grid);
    (0..grid.n()).map(|i| t.as_array().iter().map(|p| p.samples()[i].abs()).fold(0.0, f64::max)).sum::<f64>()
        / grid.n() as f64
}

use rectiplan_core::discretization::single_phase_template;

fn single_feasible(n: usize, dc: f64) -> bool {
    let grid = build_grid(n, 50.0).unwrap();
    let spec = SinglePhaseSpec::new(n, dc, 10.0);
    !solve_single_phase(&spec, &grid, &Tolerances::default()).unwrap().is_infeasible()
}

fn three_feasible(n: usize, dc: f64) -> bool {
    let grid = build_grid(n, 50.0).unwrap();
    let spec = ThreePhaseSpec::new(n, dc, 10.0);
    !solve_three_phase(&spec, &grid, &Tolerances::default()).unwrap().is_infeasible()
}

#[test]
fn full_conduction_limit_approaches_two_over_pi() {
    let grid = build_grid(128, 50.0).unwrap();
    let bound = full_conduction_dc(&grid);
    assert!((bound - 0.636492).abs() <= 1e-6, "{bound}");
    assert!((bound - 2.0 / std::f64::consts::PI).abs() <= 2e-4);
}

#[test]
fn single_phase_feasibility_flips_at_the_full_conduction_limit() {
    for n in [16, 64, 128] {
        let bound = full_conduction_dc(&build_grid(n, 50.0).unwrap());
        assert!(single_feasible(n, bound - 1e-4), "n={n}");
        assert!(!single_feasible(n, bound + 1e-4), "n={n}");
    }
    assert!(!single_feasible(128, 0.7));
}

#[test]
fn envelope_limit_matches_six_pulse_mean() {
    let bound = envelope_dc(&build_grid(192, 50.0).unwrap());
    assert!((bound - 1.65399).abs() <= 2e-3, "{bound}");
    let six_pulse = 3.0 * 3f64.sqrt() / std::f64::consts::PI;
    assert!((bound - six_pulse).abs() <= 2e-4);
}

#[test]
fn three_phase_feasibility_flips_at_the_envelope() {
    for n in [12, 48] {
        let bound = envelope_dc(&build_grid(n, 50.0).unwrap());
        assert!(three_feasible(n, bound - 1e-4), "n={n}");
        assert!(!three_feasible(n, bound + 1e-4), "n={n}");
    }
    assert!(!three_feasible(96, 1.7));
}
