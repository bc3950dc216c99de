use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sok_core::equilibria::order_parameter_c1;
use sok_core::gci::{coefficient_c2, coefficient_c3, gci_pairing_check, solve_gci_homogeneous, solve_gci_ode};
use sok_core::sphere::{AngularGrid, ThetaGrid, ThetaRule};

fn grid(n: usize) -> ThetaGrid {
    ThetaGrid::gauss_legendre(n).unwrap()
}

#[test]
fn zero_forcing_gives_zero() {
    let sol = solve_gci_homogeneous(1.0, 2, &grid(128)).unwrap();
    assert!(sol.g().iter().all(|v| v.abs() < 1e-14));
}

#[test]
fn strong_form_residual() {
    let sol = solve_gci_ode(1.0, 2, &grid(256)).unwrap();
    assert!(sol.residual() < 1e-8);
    let r = sol.pointwise_residual();
    assert!(r.iter().fold(0.0f64, |m, v| m.max(v.abs())) < 1e-6);
}

#[test]
fn energy_self_convergence() {
    let a = solve_gci_ode(1.0, 2, &grid(64)).unwrap().weighted_energy();
    let b = solve_gci_ode(1.0, 2, &grid(128)).unwrap().weighted_energy();
    assert!((a - b).abs() < 1e-8, "{a} vs {b}");
}

#[test]
fn uniform_interior_rule_agrees() {
    let a = coefficient_c2(&solve_gci_ode(0.7, 2, &grid(256)).unwrap()).unwrap();
    let u = ThetaGrid::new(256, ThetaRule::UniformInterior).unwrap();
    let b = coefficient_c2(&solve_gci_ode(0.7, 2, &u).unwrap()).unwrap();
    assert!((a - b).abs() < 1e-7);
}

#[test]
fn c2_bounds_and_refinement() {
    let c1 = order_parameter_c1(1.0, 2).unwrap();
    let c128 = coefficient_c2(&solve_gci_ode(1.0, 2, &grid(128)).unwrap()).unwrap();
    let c256 = coefficient_c2(&solve_gci_ode(1.0, 2, &grid(256)).unwrap()).unwrap();
    assert!(c256 > 0.0 && c256 <= c1);
    assert!((c128 - c256).abs() < 1e-7);
}

#[test]
fn c2_approaches_c1_for_small_noise() {
    let d = 1e-3;
    let c2 = coefficient_c2(&solve_gci_ode(d, 2, &grid(512)).unwrap()).unwrap();
    assert!((c2 - order_parameter_c1(d, 2).unwrap()).abs() < 1e-2);
}

#[test]
fn c3_arithmetic() {
    assert_eq!(coefficient_c3(0.4, 1.0, 2, 1.0, 0), 0.0);
    assert!((coefficient_c3(0.4, 1.0, 2, 1.0, 1) - 1.4).abs() < 1e-15);
    assert!((coefficient_c3(0.3, 0.5, 3, 2.0, 1) - 2.6).abs() < 1e-15);
}

#[test]
fn h_and_g_agree_in_modulus() {
    let sol = solve_gci_ode(0.5, 2, &grid(128)).unwrap();
    let t = sol.theta_grid().nodes();
    for ((g, h), t) in sol.g().iter().zip(sol.h()).zip(t) {
        assert!(h.is_finite());
        assert!((h.abs() * t.sin() - g.abs()).abs() <= 1e-12 * g.abs().max(1.0));
    }
}

#[test]
fn endpoints_extrapolate_to_zero() {
    let b = solve_gci_ode(1.0, 2, &grid(256)).unwrap().boundary_extrapolation();
    assert!(b[0].abs() < 1e-6 && b[1].abs() < 1e-6);
}

#[test]
fn higher_dimension_solves() {
    let sol = solve_gci_ode(1.0, 3, &grid(256)).unwrap();
    assert!(sol.residual() < 1e-8);
    let c2 = coefficient_c2(&sol).unwrap();
    assert!(c2 > 0.0 && c2 <= order_parameter_c1(1.0, 3).unwrap());
}

#[test]
fn gci_annihilates_collision_range() {
    let gw = AngularGrid::new(64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for d in [0.2, 1.0, 3.0] {
        let sol = solve_gci_ode(d, 2, &grid(256)).unwrap();
        assert!(gci_pairing_check(&sol, &gw, 1.3, 30, &mut rng) < 1e-6);
    }
}

#[test]
fn rejects_bad_inputs() {
    assert!(solve_gci_ode(-1.0, 2, &grid(128)).is_err());
    assert!(solve_gci_ode(1.0, 2, &grid(16)).is_err());
}

#[test]
fn uniform_interior_rule_in_three_dimensions() {
    let a = coefficient_c2(&solve_gci_ode(0.7, 3, &grid(256)).unwrap()).unwrap();
    let u = ThetaGrid::new(256, ThetaRule::UniformInterior).unwrap();
    let b = coefficient_c2(&solve_gci_ode(0.7, 3, &u).unwrap()).unwrap();
    assert!((a - b).abs() < 1e-7);
}
