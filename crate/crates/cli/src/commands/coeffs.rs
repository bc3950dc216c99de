use sok_core::Coefficients;

use super::{parse_enum, parse_list, set};
use crate::config::{RunConfig, Spacing};
use crate::output::{Csv, RunDir};
use crate::Usage;

#[derive(clap::Args, Debug, Default)]
pub struct Args {
    /// Comma-separated noise values (replaces the range).
    #[arg(long)]
    pub d: Option<String>,
    #[arg(long)]
    pub d_min: Option<f64>,
    #[arg(long)]
    pub d_max: Option<f64>,
    #[arg(long)]
    pub count: Option<usize>,
    /// log or linear
    #[arg(long, value_parser = parse_enum::<Spacing>)]
    pub spacing: Option<Spacing>,
    /// Dimension of the velocity sphere.
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub eta0: Option<u8>,
    #[arg(long)]
    pub theta_nodes: Option<usize>,
}

/// Writes coeffs.csv with columns d,c1,c2,c3. A row that fails is written
/// as NaN and the command exits 1.
pub fn run(cfg: &mut RunConfig, a: &Args, dir: &mut RunDir) -> anyhow::Result<u8> {
    let c = &mut cfg.coeffs;
    if let Some(s) = &a.d {
        c.d = parse_list(s).map_err(|e| Usage(format!("--d: {e}")))?;
    }
    set(&mut c.d_min, &a.d_min);
    set(&mut c.d_max, &a.d_max);
    set(&mut c.count, &a.count);
    set(&mut c.spacing, &a.spacing);
    set(&mut c.n, &a.n);
    set(&mut c.k, &a.k);
    set(&mut c.eta0, &a.eta0);
    set(&mut c.theta_nodes, &a.theta_nodes);
    let ds = c.values()?;
    if ds.is_empty() {
        return Err(Usage("coeffs: no noise values".into()).into());
    }
    let mut csv = Csv::new(&["d", "c1", "c2", "c3"]);
    let mut failed = 0;
    for d in ds {
        match Coefficients::compute(d, c.n, c.k, c.eta0, c.theta_nodes) {
            Ok(co) => csv.row(&[d, co.c1, co.c2, co.c3]),
            Err(e) => {
                eprintln!("d = {d}: {e}");
                failed += 1;
                csv.row(&[d, f64::NAN, f64::NAN, f64::NAN]);
            }
        }
    }
    dir.write("coeffs.csv", csv.as_str())?;
    println!("{}", dir.path("coeffs.csv").display());
    Ok(if failed > 0 { 1 } else { 0 })
}
