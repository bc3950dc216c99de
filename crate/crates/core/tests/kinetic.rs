use std::f64::consts::PI;

use sok_core::collision::J_FLOOR;
use sok_core::equilibria::{equilibrium_field, order_parameter_c1, Coefficients};
use sok_core::hydro::MacroState;
use sok_core::kinetic::{
    compute_macros, read_snapshot_binary, run_sok, sok_step, write_snapshot_binary, KineticField, KineticParams, Mode,
    SokRunOptions, SokStepper, SokStepperConfig,
};
use sok_core::sphere::{AngularGrid, TorusGrid};

fn grids(nx: usize, na: usize) -> (TorusGrid, AngularGrid) {
    (TorusGrid::slab(nx, 1.0).unwrap(), AngularGrid::new(na).unwrap())
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Smooth data away from local equilibrium: an equilibrium times 1 + 0.3 sin 2α.
fn perturbed(gx: &TorusGrid, gw: &AngularGrid, p: KineticParams) -> KineticField {
    let rho = gx.sample(|x| 1.0 + 0.3 * (2.0 * PI * x[0]).cos());
    let phi = gx.sample(|x| 0.5 * (2.0 * PI * x[0]).sin());
    let f = equilibrium_field(gx, gw, &rho, &phi, p).unwrap();
    let na = gw.n_modes();
    let v: Vec<f64> = f
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| v * (1.0 + 0.3 * (2.0 * gw.nodes()[i % na]).sin()))
        .collect();
    f.with_values(v).unwrap()
}

#[test]
fn macros_of_equilibria() {
    let (gx, gw) = grids(16, 64);
    let p = KineticParams { eta0: 1, ..Default::default() };
    let f = equilibrium_field(&gx, &gw, &[1.3; 16], &[2.0; 16], p).unwrap();
    let m = compute_macros(&f, J_FLOOR);
    let c1 = order_parameter_c1(1.0, 2).unwrap();
    for i in 0..16 {
        assert!((m.j[i][0] - 1.3 * c1 * 2f64.cos()).abs() < 1e-10);
        assert!((m.j[i][1] - 1.3 * c1 * 2f64.sin()).abs() < 1e-10);
        assert!((m.omega[i][0] - 2f64.cos()).abs() < 1e-12);
        assert!(m.d[i][0].abs() < 1e-10 && m.d[i][1].abs() < 1e-10);
    }
    let iso = KineticField::new(gx, gw, vec![1.0; 16 * 64], p, Mode::Nonlinear).unwrap();
    assert!(compute_macros(&iso, J_FLOOR).omega.iter().all(|o| *o == [0.0, 0.0]));
}

#[test]
fn viscous_drift_is_perpendicular() {
    let (gx, gw) = grids(32, 32);
    let p = KineticParams { eta0: 1, ..Default::default() };
    let f = perturbed(&gx, &gw, p);
    let m = compute_macros(&f, J_FLOOR);
    assert!(m.d.iter().any(|d| d[0].hypot(d[1]) > 1e-3));
    for (o, d) in m.omega.iter().zip(&m.d) {
        assert!((o[0] * d[0] + o[1] * d[1]).abs() < 1e-14);
    }
}

#[test]
fn homogeneous_equilibrium_is_steady() {
    let (gx, gw) = grids(16, 32);
    let f0 = equilibrium_field(&gx, &gw, &[0.8; 16], &[1.0; 16], KineticParams::default()).unwrap();
    let cfg = SokStepperConfig { dt: 0.01, ..Default::default() };
    let st = SokStepper::new(&f0, cfg).unwrap();
    let mut f = f0.clone();
    for _ in 0..100 {
        st.step(&mut f).unwrap();
    }
    assert!(max_diff(f.values(), f0.values()) < 1e-9);
}

#[test]
fn mass_per_step() {
    let (gx, gw) = grids(32, 32);
    for eta0 in [0, 1] {
        let p = KineticParams { eta0, epsilon: 0.05, ..Default::default() };
        let mut f = perturbed(&gx, &gw, p);
        let cfg = SokStepperConfig { dt: 0.01, ..Default::default() };
        let st = SokStepper::new(&f, cfg).unwrap();
        for _ in 0..20 {
            let m0 = f.total_mass();
            st.step(&mut f).unwrap();
            assert!((f.total_mass() - m0).abs() < 1e-12 * m0);
        }
    }
}

#[test]
fn linearized_mass_per_step() {
    let (gx, gw) = grids(32, 32);
    let c = Coefficients::compute(1.0, 2, 1.0, 0, 256).unwrap();
    let s = MacroState::from_profiles(gx.clone(), |x| 1.0 + 0.2 * (2.0 * PI * x[0]).sin(), |x| 0.4 * (2.0 * PI * x[0]).cos(), c)
        .unwrap();
    let p = KineticParams { epsilon: 0.1, ..Default::default() };
    let f0 = perturbed(&gx, &gw, p);
    let mut f = KineticField::linearized(gx, gw, f0.values().to_vec(), p, s).unwrap();
    let st = SokStepper::new(&f, SokStepperConfig { dt: 0.005, ..Default::default() }).unwrap();
    for _ in 0..20 {
        let m0 = f.total_mass();
        st.step(&mut f).unwrap();
        assert!((f.total_mass() - m0).abs() < 1e-12 * m0);
    }
}

#[test]
fn smaller_epsilon_relaxes_faster() {
    let (gx, gw) = grids(32, 32);
    let entropy = |eps: f64| {
        let f = perturbed(&gx, &gw, KineticParams { epsilon: eps, ..Default::default() });
        let cfg = SokStepperConfig { dt: 0.005, ..Default::default() };
        let run = run_sok(&f, 0.05, &cfg, &SokRunOptions::default()).unwrap();
        (run.monitors[0].relative_entropy, run.monitors.last().unwrap().relative_entropy)
    };
    let (e0, a) = entropy(0.1);
    let (_, b) = entropy(0.05);
    assert!(e0 > 0.0 && a < e0 && b < a, "{e0} {a} {b}");
}

#[test]
fn zero_horizon_returns_initial_field() {
    let (gx, gw) = grids(16, 32);
    let f = perturbed(&gx, &gw, KineticParams::default());
    let run = run_sok(&f, 0.0, &SokStepperConfig::default(), &SokRunOptions::default()).unwrap();
    assert_eq!(run.steps, 0);
    assert_eq!(run.last.values(), f.values());
    assert!(run_sok(&f, -1.0, &SokStepperConfig::default(), &SokRunOptions::default()).is_err());
}

#[test]
fn monitors_constant_on_equilibrium() {
    let (gx, gw) = grids(16, 32);
    let f = equilibrium_field(&gx, &gw, &[1.0; 16], &[0.2; 16], KineticParams { eta0: 1, ..Default::default() }).unwrap();
    let cfg = SokStepperConfig { dt: 0.01, ..Default::default() };
    let run = run_sok(&f, 0.5, &cfg, &SokRunOptions::default()).unwrap();
    let m0 = run.monitors[0];
    for m in &run.monitors {
        assert!((m.mass - m0.mass).abs() < 1e-9);
        assert!((m.current[0] - m0.current[0]).abs() < 1e-9 && (m.current[1] - m0.current[1]).abs() < 1e-9);
        assert!((m.dissipation - m0.dissipation).abs() < 1e-9);
        assert!((m.relative_entropy - m0.relative_entropy).abs() < 1e-9);
        assert!((m.equilibrium_distance - m0.equilibrium_distance).abs() < 1e-9);
    }
}

#[test]
fn dissipation_monitor_is_nonpositive() {
    let (gx, gw) = grids(32, 32);
    let f = perturbed(&gx, &gw, KineticParams { epsilon: 0.1, ..Default::default() });
    let cfg = SokStepperConfig { dt: 0.005, ..Default::default() };
    let run = run_sok(&f, 0.2, &cfg, &SokRunOptions::default()).unwrap();
    assert!(run.monitors.iter().all(|m| m.dissipation <= 0.0));
    assert!(run.monitors.iter().all(|m| m.min_f > 0.0));
}

#[test]
fn modes_agree_on_constant_equilibrium() {
    let (gx, gw) = grids(16, 32);
    for eta0 in [0, 1] {
        let p = KineticParams { eta0, ..Default::default() };
        let c = Coefficients::compute(1.0, 2, 1.0, eta0, 256).unwrap();
        let s = MacroState::new(gx.clone(), vec![1.2; 16], vec![0.9; 16], c).unwrap();
        let mut a = equilibrium_field(&gx, &gw, &[1.2; 16], &[0.9; 16], p).unwrap();
        let mut b = KineticField::linearized(gx.clone(), gw.clone(), a.values().to_vec(), p, s).unwrap();
        let cfg = SokStepperConfig { dt: 0.01, ..Default::default() };
        for _ in 0..100 {
            a = sok_step(&a, &cfg).unwrap();
            b = sok_step(&b, &cfg).unwrap();
        }
        assert!(max_diff(a.values(), b.values()) < 1e-10);
    }
}

#[test]
fn step_rejects_cfl_violation() {
    let (gx, gw) = grids(16, 32);
    let f = equilibrium_field(&gx, &gw, &[1.0; 16], &[0.0; 16], KineticParams::default()).unwrap();
    assert!(SokStepper::new(&f, SokStepperConfig { dt: 0.5, ..Default::default() }).is_err());
}

#[test]
fn binary_snapshot_round_trip() {
    let (gx, gw) = grids(16, 32);
    let f = perturbed(&gx, &gw, KineticParams { eta0: 1, ..Default::default() }).with_time(0.25);
    let path = std::env::temp_dir().join(format!("sok-core-snapshot-{}.bin", std::process::id()));
    write_snapshot_binary(&f, &path).unwrap();
    let (g, mode) = read_snapshot_binary(&path).unwrap();
    let _ = std::fs::remove_file(&path);
    assert_eq!(mode, Mode::Nonlinear);
    assert_eq!(g.values(), f.values());
    assert_eq!(g.t(), 0.25);
    assert_eq!(g.params(), f.params());
}
