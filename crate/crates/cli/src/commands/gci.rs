use serde_json::json;
use sok_core::gci::{coefficient_c2, solve_gci_ode};
use sok_core::{order_parameter_c1, ThetaGrid};

use super::set;
use crate::config::RunConfig;
use crate::output::{Csv, RunDir};

#[derive(clap::Args, Debug, Default)]
pub struct Args {
    #[arg(long)]
    pub d: Option<f64>,
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub theta_nodes: Option<usize>,
}

/// gci.csv holds theta,g,h,residual on the solver nodes; gci.json the scalars.
pub fn run(cfg: &mut RunConfig, a: &Args, dir: &mut RunDir) -> anyhow::Result<u8> {
    let c = &mut cfg.gci;
    set(&mut c.d, &a.d);
    set(&mut c.n, &a.n);
    set(&mut c.theta_nodes, &a.theta_nodes);
    let grid = ThetaGrid::gauss_legendre(c.theta_nodes)?;
    let sol = solve_gci_ode(c.d, c.n, &grid)?;
    let res = sol.pointwise_residual();
    let mut csv = Csv::new(&["theta", "g", "h", "residual"]);
    for (i, t) in grid.nodes().iter().enumerate() {
        csv.row(&[*t, sol.g()[i], sol.h()[i], res[i]]);
    }
    dir.write("gci.csv", csv.as_str())?;
    let c2 = coefficient_c2(&sol)?;
    let c1 = order_parameter_c1(c.d, c.n)?;
    let summary = json!({
        "d": c.d,
        "n": c.n,
        "c1": c1,
        "c2": c2,
        "residual": sol.residual(),
        "weighted_energy": sol.weighted_energy(),
    });
    dir.write_json("gci.json", &summary)?;
    println!("d = {}: c1 = {c1:.12}, c2 = {c2:.12}, residual = {:.3e}", c.d, sol.residual());
    Ok(0)
}
