use std::f64::consts::PI;

use proptest::prelude::*;
use sok_core::equilibria::{vmf_density, VmfParams};
use sok_core::sphere::{moment_integrals, sphere_divergence_identity_check, AngularGrid, ThetaGrid, ThetaRule, TorusGrid};

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn band_limited(grid: &AngularGrid, c: &[f64]) -> Vec<f64> {
    grid.sample(|a| {
        c.chunks(2)
            .enumerate()
            .map(|(k, p)| {
                let k = k as f64 + 1.0;
                p[0] * (k * a).cos() + p[1] * (k * a).sin()
            })
            .sum()
    })
}

#[test]
fn derivative_of_sine_is_cosine() {
    let g = AngularGrid::new(64).unwrap();
    let d = g.derivative(&g.sample(f64::sin), 1).unwrap();
    assert!(max_diff(&d, &g.sample(f64::cos)) < 1e-12);
}

#[test]
fn derivative_of_constant_vanishes() {
    let g = AngularGrid::new(64).unwrap();
    let d = g.derivative(&vec![1.0; 64], 1).unwrap();
    assert!(d.iter().all(|v| v.abs() < 1e-14));
}

#[test]
fn second_derivative_of_exp_cos() {
    let g = AngularGrid::new(64).unwrap();
    let d = g.derivative(&g.sample(|a| a.cos().exp()), 2).unwrap();
    let exact = g.sample(|a| (a.sin().powi(2) - a.cos()) * a.cos().exp());
    assert!(max_diff(&d, &exact) < 1e-10);
}

#[test]
fn derivative_rejects_wrong_length() {
    let g = AngularGrid::new(16).unwrap();
    assert!(g.derivative(&[0.0; 15], 1).is_err());
    assert!(AngularGrid::new(3).is_err());
}

#[test]
fn divergence_identity() {
    let g = AngularGrid::new(64).unwrap();
    assert!(sphere_divergence_identity_check(&g, [1.0, 0.0]) < 1e-12);
    assert_eq!(sphere_divergence_identity_check(&g, [0.0, 0.0]), 0.0);
    for b in [0.3, 1.7, -2.4] {
        assert!(sphere_divergence_identity_check(&g, [f64::cos(b), f64::sin(b)]) < 1e-12);
    }
}

#[test]
fn moments_of_simple_functions() {
    let g = AngularGrid::new(64).unwrap();
    let (m, j) = moment_integrals(&g, &vec![1.0; 64]).unwrap();
    assert!((m - 2.0 * PI).abs() < 1e-13);
    assert!(j[0].abs() < 1e-13 && j[1].abs() < 1e-13);
    let (m, j) = moment_integrals(&g, &g.sample(f64::cos)).unwrap();
    assert!(m.abs() < 1e-13);
    assert!((j[0] - PI).abs() < 1e-13 && j[1].abs() < 1e-13);
    let vmf = vmf_density(&VmfParams::new(0.7, 1.1).unwrap(), &g).unwrap();
    assert!((moment_integrals(&g, &vmf).unwrap().0 - 1.0).abs() < 1e-12);
}

#[test]
fn moments_reject_nan() {
    let g = AngularGrid::new(8).unwrap();
    let mut f = vec![1.0; 8];
    f[3] = f64::NAN;
    assert!(moment_integrals(&g, &f).is_err());
}

#[test]
fn theta_grids_integrate_sine() {
    for rule in [ThetaRule::GaussLegendre, ThetaRule::UniformInterior] {
        let t = ThetaGrid::new(64, rule).unwrap();
        assert!(t.nodes().iter().all(|&x| x > 0.0 && x < PI));
        assert!((t.integrate(f64::sin) - 2.0).abs() < 1e-10, "{rule:?}");
    }
}

#[test]
fn torus_wraps_indices() {
    let g = TorusGrid::new(&[8, 10], &[1.0, 2.0]).unwrap();
    assert_eq!(g.len(), 80);
    assert_eq!(g.flatten_wrapped([-1, 0]), g.flatten_wrapped([7, 0]));
    assert_eq!(g.flatten_wrapped([8, 11]), g.flatten_wrapped([0, 1]));
    assert!((g.integrate(&vec![1.0; 80]) - 2.0).abs() < 1e-14);
    assert!(TorusGrid::new(&[6], &[1.0]).is_err());
}

#[test]
fn torus_derivative_is_spectral() {
    let g = TorusGrid::new(&[32, 16], &[2.0, 1.0]).unwrap();
    let f = g.sample(|x| (PI * x[0]).sin() * (2.0 * PI * x[1]).cos());
    let dx = g.derivative(&f, 0, 1).unwrap();
    let dy = g.derivative(&f, 1, 1).unwrap();
    let ex = g.sample(|x| PI * (PI * x[0]).cos() * (2.0 * PI * x[1]).cos());
    let ey = g.sample(|x| -2.0 * PI * (PI * x[0]).sin() * (2.0 * PI * x[1]).sin());
    assert!(max_diff(&dx, &ex) < 1e-11);
    assert!(max_diff(&dy, &ey) < 1e-11);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integration_by_parts(
        a in proptest::collection::vec(-1.0f64..1.0, 20),
        b in proptest::collection::vec(-1.0f64..1.0, 20),
    ) {
        let g = AngularGrid::new(64).unwrap();
        let u = band_limited(&g, &a);
        let v = band_limited(&g, &b);
        let du = g.derivative(&u, 1).unwrap();
        let dv = g.derivative(&v, 1).unwrap();
        let lhs: f64 = g.integrate(&du.iter().zip(&v).map(|(x, y)| x * y).collect::<Vec<_>>());
        let rhs: f64 = g.integrate(&u.iter().zip(&dv).map(|(x, y)| x * y).collect::<Vec<_>>());
        prop_assert!((lhs + rhs).abs() < 1e-12);
    }

    #[test]
    fn shift_equivariance(a in proptest::collection::vec(-1.0f64..1.0, 16), s in 0usize..64) {
        let g = AngularGrid::new(64).unwrap();
        let u = band_limited(&g, &a);
        let mut shifted = u.clone();
        shifted.rotate_left(s);
        let mut d = g.derivative(&u, 1).unwrap();
        d.rotate_left(s);
        prop_assert!(max_diff(&g.derivative(&shifted, 1).unwrap(), &d) < 1e-12);
    }
}
