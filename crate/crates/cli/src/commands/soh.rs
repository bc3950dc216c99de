use std::path::PathBuf;

use anyhow::Context;
use sok_core::hydro::{parse_initial_csv, run_soh, MacroState};
use sok_core::Coefficients;

use super::{parse_list, set};
use crate::config::RunConfig;
use crate::output::{Csv, RunDir};
use crate::Usage;

#[derive(clap::Args, Debug, Default)]
pub struct Args {
    /// Cells per axis, comma-separated (one entry for a slab).
    #[arg(long)]
    pub n_x: Option<String>,
    /// Box length per axis, comma-separated.
    #[arg(long)]
    pub length: Option<String>,
    #[arg(long)]
    pub d: Option<f64>,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub eta0: Option<u8>,
    /// Final time.
    #[arg(long, short = 'T')]
    pub t_final: Option<f64>,
    /// Fixed time step (default: the stability cap at every step).
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub snapshot_every: Option<usize>,
    /// CSV with x,rho,phi rows.
    #[arg(long)]
    pub initial: Option<PathBuf>,
}

pub fn grid_overrides(grid: &mut crate::config::GridConfig, n_x: &Option<String>, length: &Option<String>) -> anyhow::Result<()> {
    if let Some(s) = n_x {
        grid.n_x = parse_list(s).map_err(|e| Usage(format!("--n-x: {e}")))?;
    }
    if let Some(s) = length {
        grid.length = parse_list(s).map_err(|e| Usage(format!("--length: {e}")))?;
    }
    Ok(())
}

pub fn write_state(dir: &mut RunDir, name: &str, s: &MacroState) -> anyhow::Result<()> {
    let mut csv = Csv::new(&["x1", "x2", "rho", "phi"]);
    for i in 0..s.grid().len() {
        let x = s.grid().coords(i);
        csv.row(&[x[0], x[1], s.rho()[i], s.phi()[i]]);
    }
    dir.write(name, csv.as_str())
}

/// monitors.csv: t,mass,min_rho,max_grad_phi,phi_high_mode_energy.
/// Snapshots soh_NNNNN.csv: x1,x2,rho,phi.
pub fn run(cfg: &mut RunConfig, a: &Args, dir: &mut RunDir) -> anyhow::Result<u8> {
    let c = &mut cfg.soh;
    grid_overrides(&mut c.grid, &a.n_x, &a.length)?;
    set(&mut c.d, &a.d);
    set(&mut c.k, &a.k);
    set(&mut c.eta0, &a.eta0);
    set(&mut c.t_final, &a.t_final);
    if a.dt.is_some() {
        c.run.dt = a.dt;
    }
    set(&mut c.run.snapshot_every, &a.snapshot_every);
    if a.initial.is_some() {
        c.initial_csv = a.initial.clone();
    }
    if !(c.t_final >= 0.0) {
        return Err(Usage("t_final must be nonnegative".into()).into());
    }
    let grid = c.grid.build()?;
    let coeffs = Coefficients::compute(c.d, 2, c.k, c.eta0, c.theta_nodes)?;
    let s0 = match &c.initial_csv {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let (rho, phi) = parse_initial_csv(&text, &grid)?;
            MacroState::new(grid, rho, phi, coeffs)?
        }
        None => c.initial.state(&grid, &coeffs)?,
    };
    let run = run_soh(&s0, c.t_final, &c.run)?;
    let mut mon = Csv::new(&["t", "mass", "min_rho", "max_grad_phi", "phi_high_mode_energy"]);
    for m in &run.monitors {
        mon.row(&[m.t, m.mass, m.min_rho, m.max_grad_phi, m.phi_high_mode_energy]);
    }
    dir.write("monitors.csv", mon.as_str())?;
    for (i, s) in run.snapshots.iter().enumerate() {
        write_state(dir, &format!("soh_{i:05}.csv"), s)?;
    }
    let last = run.last();
    println!(
        "t = {}: mass {:.12e}, min rho {:.6e}, {} snapshots in {}",
        last.t(),
        last.mass(),
        last.min_rho(),
        run.snapshots.len(),
        dir.dir().display()
    );
    Ok(0)
}
