//! Fixtures shared by the benchmarks.

use std::f64::consts::PI;

use sok_core::particles::Swarm;
use sok_core::{equilibrium_field, AngularGrid, Coefficients, KineticField, KineticParams, MacroState, SwarmParams, TorusGrid};

/// Local equilibrium of a smooth (ρ, φ) profile on an n_x-cell slab.
pub fn smooth_field(n_x: usize, n_alpha: usize, params: KineticParams) -> KineticField {
    let gx = TorusGrid::slab(n_x, 1.0).unwrap();
    let gw = AngularGrid::new(n_alpha).unwrap();
    let rho = gx.sample(|x| 1.0 + 0.3 * (2.0 * PI * x[0]).sin());
    let phi = gx.sample(|x| 0.8 * (2.0 * PI * x[0]).cos());
    equilibrium_field(&gx, &gw, &rho, &phi, params).unwrap()
}

/// Smooth SOH state on an n × n torus.
pub fn smooth_state(n: usize) -> MacroState {
    let gx = TorusGrid::new(&[n, n], &[2.0 * PI, 2.0 * PI]).unwrap();
    let c = Coefficients::compute(1.0, 2, 1.0, 1, 256).unwrap();
    MacroState::from_profiles(gx, |x| 1.0 + 0.3 * x[0].sin() * x[1].cos(), |x| 0.6 * x[1].sin() + 0.3 * x[0].cos(), c).unwrap()
}

/// Uniform swarm of n particles on the unit torus.
pub fn swarm(n: usize, radius: f64) -> Swarm {
    let params = SwarmParams { radius, ..Default::default() };
    Swarm::homogeneous(n, params, 3, |_| 1.0, 1.0).unwrap()
}
