//! Fast invariant suite: structural identities of every solver at small sizes.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use sok_core::collision::J_FLOOR;
use sok_core::gci::gci_pairing_check;
use sok_core::hydro::{soh_dt_cap, soh_step};
use sok_core::kinetic::SokStepper;
use sok_core::{
    apply_q, coefficient_c2, dissipation, equilibrium_field, order_parameter_c1, solve_gci_ode, vmf_density, AngularGrid,
    Coefficients, HydroConfig, KineticParams, LinearizedOperator, MacroState, SokStepperConfig, ThetaGrid, TorusGrid, VmfParams,
};

use crate::output::RunDir;

type Check = (&'static str, fn() -> anyhow::Result<(bool, String)>);

fn vmf() -> anyhow::Result<(bool, String)> {
    let gw = AngularGrid::new(128)?;
    let mut err = 0.0f64;
    for (d, phi) in [(0.1, 0.3), (1.0, -2.0), (5.0, 3.0)] {
        let m = vmf_density(&VmfParams::new(d, phi)?, &gw)?;
        let (m0, m1) = gw.moments(&m);
        let c1 = order_parameter_c1(d, 2)?;
        err = err.max((m0 - 1.0).abs()).max((m1[0] - c1 * phi.cos()).abs()).max((m1[1] - c1 * phi.sin()).abs());
    }
    Ok((err < 1e-10, format!("max moment error {err:.2e}")))
}

fn collision() -> anyhow::Result<(bool, String)> {
    let gw = AngularGrid::new(64)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut mean, mut diss, mut eq) = (0.0f64, f64::NEG_INFINITY, 0.0f64);
    for _ in 0..20 {
        let (a, b, ph) = (rng.random_range(0.0..0.9), rng.random_range(0.0..0.5), rng.random_range(0.0..2.0 * PI));
        let f = gw.sample(|x| 1.0 + a * (x + ph).cos() + b * (3.0 * x).sin());
        let d = rng.random_range(0.2..3.0);
        mean = mean.max(gw.integrate(&apply_q(&gw, &f, d, J_FLOOR)?).abs());
        diss = diss.max(dissipation(&gw, &f, d, J_FLOOR)?);
        let m = vmf_density(&VmfParams::new(d, ph)?, &gw)?;
        eq = eq.max(apply_q(&gw, &m, d, J_FLOOR)?.iter().fold(0.0f64, |s, v| s.max(v.abs())));
    }
    Ok((
        mean < 1e-10 && diss <= 0.0 && eq < 1e-10,
        format!("|<Q f>| {mean:.2e}, dissipation {diss:.3e}, |Q(M)| {eq:.2e}"),
    ))
}

fn gci() -> anyhow::Result<(bool, String)> {
    let gw = AngularGrid::new(64)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut res, mut pair, mut ok) = (0.0f64, 0.0f64, true);
    for d in [0.05, 0.5, 5.0] {
        let sol = solve_gci_ode(d, 2, &ThetaGrid::gauss_legendre(256)?)?;
        res = res.max(sol.residual());
        pair = pair.max(gci_pairing_check(&sol, &gw, 0.4, 10, &mut rng));
        let c2 = coefficient_c2(&sol)?;
        ok &= c2 > 0.0 && c2 <= order_parameter_c1(d, 2)?;
    }
    Ok((
        res < 1e-8 && pair < 1e-6 && ok,
        format!("residual {res:.2e}, pairing {pair:.2e}, 0 < c2 <= c1: {ok}"),
    ))
}

fn poincare() -> anyhow::Result<(bool, String)> {
    let op = LinearizedOperator::new(&AngularGrid::new(64)?, 1.0, 0.0)?;
    let lam = op.poincare_constant_estimate(20, &mut ChaCha8Rng::seed_from_u64(4))?;
    Ok((lam > 0.0 && lam.is_finite(), format!("estimate {lam:.6}")))
}

fn soh() -> anyhow::Result<(bool, String)> {
    let gx = TorusGrid::new(&[16, 16], &[2.0 * PI, 2.0 * PI])?;
    let c = Coefficients::compute(1.0, 2, 1.0, 1, 128)?;
    let s0 = MacroState::from_profiles(gx, |x| 1.0 + 0.3 * x[0].sin(), |x| 0.5 * x[1].cos(), c)?;
    let cfg = HydroConfig::default();
    let dt = 0.5 * soh_dt_cap(&s0, &cfg);
    let mut s = s0.clone();
    for _ in 0..100 {
        s = soh_step(&s, dt, &cfg)?;
    }
    let drift = (s.mass() - s0.mass()).abs() / s0.mass();
    let unit = s.omega().iter().map(|o| (o[0].hypot(o[1]) - 1.0).abs()).fold(0.0, f64::max);
    Ok((drift < 1e-9 && unit < 1e-14, format!("mass drift {drift:.2e}, ||Omega|-1| {unit:.1e}")))
}

fn sok() -> anyhow::Result<(bool, String)> {
    let gx = TorusGrid::slab(32, 1.0)?;
    let gw = AngularGrid::new(32)?;
    let p = KineticParams { eta0: 1, ..Default::default() };
    let eq = equilibrium_field(&gx, &gw, &[1.2; 32], &[0.4; 32], p)?;
    let st = SokStepper::new(&eq, SokStepperConfig { dt: 0.01, ..Default::default() })?;
    let mut f = eq.clone();
    for _ in 0..20 {
        st.step(&mut f)?;
    }
    let dev = f.values().iter().zip(eq.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let rho = gx.sample(|x| 1.0 + 0.3 * (2.0 * PI * x[0]).sin());
    let phi = gx.sample(|x| (2.0 * PI * x[0]).cos());
    let g0 = equilibrium_field(&gx, &gw, &rho, &phi, p)?;
    let mut g = g0.clone();
    for _ in 0..20 {
        st.step(&mut g)?;
    }
    let drift = (g.total_mass() - g0.total_mass()).abs() / g0.total_mass();
    Ok((dev < 1e-9 && drift < 1e-10, format!("equilibrium deviation {dev:.2e}, mass drift {drift:.2e}")))
}

const CHECKS: &[Check] = &[
    ("vmf moments", vmf),
    ("collision structure", collision),
    ("gci solver", gci),
    ("weighted poincare", poincare),
    ("soh invariants", soh),
    ("sok invariants", sok),
];

/// Prints one line per check and writes check.json; exits 1 if any fails.
pub fn run(dir: &mut RunDir) -> anyhow::Result<u8> {
    let mut all = true;
    let mut rows = Vec::new();
    for (name, f) in CHECKS {
        let (ok, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e:#}")),
        };
        all &= ok;
        println!("{:<20} {} {detail}", name, if ok { "PASS" } else { "FAIL" });
        rows.push(json!({ "check": name, "passed": ok, "detail": detail }));
    }
    dir.write_json("check.json", &json!({ "passed": all, "checks": rows }))?;
    Ok(if all { 0 } else { 1 })
}
