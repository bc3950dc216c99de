use sok_core::kinetic::{run_sok, write_snapshot_binary, write_snapshot_csv, KineticField, Mode, SokRunOptions};
use sok_core::{equilibrium_field, AngularGrid, Coefficients};

use super::soh::grid_overrides;
use super::{parse_enum, set};
use crate::config::RunConfig;
use crate::output::{Csv, RunDir};
use crate::Usage;

#[derive(clap::Args, Debug, Default)]
pub struct Args {
    #[arg(long)]
    pub n_x: Option<String>,
    #[arg(long)]
    pub length: Option<String>,
    #[arg(long)]
    pub n_alpha: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub d: Option<f64>,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub eta0: Option<u8>,
    /// nonlinear or linearized
    #[arg(long, value_parser = parse_enum::<Mode>)]
    pub mode: Option<Mode>,
    /// implicit_euler or exponential
    #[arg(long, value_parser = parse_enum::<sok_core::CollisionScheme>)]
    pub collision: Option<sok_core::CollisionScheme>,
    #[arg(long, short = 'T')]
    pub t_final: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub monitor_every: Option<usize>,
    #[arg(long)]
    pub snapshot_every: Option<usize>,
    /// Also write binary snapshots.
    #[arg(long)]
    pub binary: bool,
}

/// Starts from the local equilibrium of the configured (ρ, φ) profile.
///
/// monitors.csv: t,mass,current_x,current_y,dissipation,relative_entropy,
/// equilibrium_distance,min_f. Snapshots sok_NNNNN.csv in the snapshot format.
pub fn run(cfg: &mut RunConfig, a: &Args, dir: &mut RunDir) -> anyhow::Result<u8> {
    let c = &mut cfg.sok;
    grid_overrides(&mut c.grid, &a.n_x, &a.length)?;
    set(&mut c.n_alpha, &a.n_alpha);
    set(&mut c.params.epsilon, &a.eps);
    set(&mut c.params.d, &a.d);
    set(&mut c.params.k, &a.k);
    set(&mut c.params.eta0, &a.eta0);
    set(&mut c.mode, &a.mode);
    set(&mut c.stepper.collision, &a.collision);
    set(&mut c.t_final, &a.t_final);
    set(&mut c.stepper.dt, &a.dt);
    set(&mut c.monitor_every, &a.monitor_every);
    set(&mut c.snapshot_every, &a.snapshot_every);
    c.binary |= a.binary;
    if !(c.t_final >= 0.0) {
        return Err(Usage("t_final must be nonnegative".into()).into());
    }
    c.params.validate()?;
    let gx = c.grid.build()?;
    let gw = AngularGrid::new(c.n_alpha)?;
    let p = c.params;
    let coeffs = Coefficients::compute(p.d, 2, p.k, p.eta0, c.theta_nodes)?;
    let state = c.initial.state(&gx, &coeffs)?;
    let f0 = equilibrium_field(&gx, &gw, state.rho(), state.phi(), p)?;
    let f0 = match c.mode {
        Mode::Nonlinear => f0,
        Mode::Linearized => KineticField::linearized(gx, gw, f0.values().to_vec(), p, state)?,
    };
    let opts = SokRunOptions {
        monitor_every: c.monitor_every,
        snapshot_every: c.snapshot_every,
    };
    let run = run_sok(&f0, c.t_final, &c.stepper, &opts)?;
    let mut mon = Csv::new(&[
        "t",
        "mass",
        "current_x",
        "current_y",
        "dissipation",
        "relative_entropy",
        "equilibrium_distance",
        "min_f",
    ]);
    for m in &run.monitors {
        mon.row(&[
            m.t,
            m.mass,
            m.current[0],
            m.current[1],
            m.dissipation,
            m.relative_entropy,
            m.equilibrium_distance,
            m.min_f,
        ]);
    }
    dir.write("monitors.csv", mon.as_str())?;
    for (i, f) in run.snapshots.iter().enumerate() {
        let name = format!("sok_{i:05}.csv");
        write_snapshot_csv(f, &dir.path(&name))?;
        dir.record(&name);
        if c.binary {
            let name = format!("sok_{i:05}.bin");
            write_snapshot_binary(f, &dir.path(&name))?;
            dir.record(&name);
        }
    }
    let m = run.monitors.last().expect("monitors start with the initial state");
    println!(
        "t = {}: {} steps of {:.3e}, mass {:.12e}, distance to equilibrium {:.3e}",
        m.t, run.steps, run.dt, m.mass, m.equilibrium_distance
    );
    Ok(0)
}
