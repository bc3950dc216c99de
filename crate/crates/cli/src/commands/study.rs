use serde_json::json;
use sok_core::limit_study;

use super::{parse_enum, parse_list, set};
use crate::config::RunConfig;
use crate::output::{Csv, RunDir};
use crate::Usage;

#[derive(clap::Args, Debug, Default)]
pub struct Args {
    /// Strictly decreasing, comma-separated epsilon values.
    #[arg(long)]
    pub eps: Option<String>,
    #[arg(long)]
    pub n_x: Option<usize>,
    #[arg(long)]
    pub n_alpha: Option<usize>,
    #[arg(long, short = 'T')]
    pub t_final: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub sample_interval: Option<f64>,
    /// implicit_euler or exponential
    #[arg(long, value_parser = parse_enum::<sok_core::CollisionScheme>)]
    pub collision: Option<sok_core::CollisionScheme>,
    /// Amplitude of the random O(1) remainder added at t = 0.
    #[arg(long)]
    pub perturbation: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Writes convergence.csv, energy_NN.csv per epsilon (in list order) and
/// summary.json. Exits 0 only when the boundedness and slope checks pass.
pub fn run(cfg: &mut RunConfig, a: &Args, dir: &mut RunDir) -> anyhow::Result<u8> {
    let c = &mut cfg.limit_study;
    if let Some(s) = &a.eps {
        c.eps = parse_list(s).map_err(|e| Usage(format!("--eps: {e}")))?;
    }
    set(&mut c.n_x, &a.n_x);
    set(&mut c.n_alpha, &a.n_alpha);
    set(&mut c.t_final, &a.t_final);
    set(&mut c.dt, &a.dt);
    set(&mut c.sample_interval, &a.sample_interval);
    set(&mut c.collision, &a.collision);
    set(&mut c.perturbation, &a.perturbation);
    set(&mut c.seed, &a.seed);
    c.validate()?;
    let study = limit_study(c)?;
    dir.write("convergence.csv", &study.table_csv())?;
    for (i, o) in study.outcomes.iter().enumerate() {
        let mut csv = Csv::new(&[
            "t", "F0", "F1", "F2", "G0", "G1", "G2", "H0", "H1", "H2", "E", "G", "H", "norm_L2_w", "norm_H1_w", "norm_H2_w", "scaled_L2",
            "scaled_H1", "scaled_H2",
        ]);
        for e in &o.report.entries {
            let mut row = vec![e.t];
            row.extend(e.f);
            row.extend(e.g);
            row.extend(e.h);
            row.extend([e.e_total, e.g_total, e.h_total]);
            row.extend(e.norms);
            row.extend(e.scaled);
            csv.row(&row);
        }
        dir.write(&format!("energy_{i:02}.csv"), csv.as_str())?;
    }
    let outcomes: Vec<_> = study
        .outcomes
        .iter()
        .map(|o| {
            json!({
                "eps": o.eps,
                "steps": o.steps,
                "dt": o.dt,
                "samples": o.report.entries.len(),
                "sup_scaled": o.sup_scaled,
                "final_distance": o.final_distance,
                "apriori": o.apriori,
                "restriction": o.restriction,
                "max_gci_residual": o.max_gci_residual,
                "max_mean_residual": o.max_mean_residual,
                "f1_norms": o.f1_norms,
                "error": o.error,
            })
        })
        .collect();
    dir.write_json(
        "summary.json",
        &json!({
            "coeffs": study.coeffs,
            "summary": study.summary,
            "outcomes": outcomes,
        }),
    )?;
    let s = &study.summary;
    for o in &study.outcomes {
        match &o.error {
            Some(e) => println!("eps = {}: failed: {e}", o.eps),
            None => println!(
                "eps = {}: sup scaled norms [{:.4e}, {:.4e}, {:.4e}], |f - f0| = {:.4e}",
                o.eps, o.sup_scaled[0], o.sup_scaled[1], o.sup_scaled[2], o.final_distance
            ),
        }
    }
    println!(
        "slope {} (ok: {:?}), variation {:.3?}, bounded {:?}: {}",
        s.slope.map_or("n/a".into(), |v| format!("{v:.4}")),
        s.slope_ok,
        s.variation,
        s.bounded,
        if s.passed { "passed" } else { "failed" }
    );
    Ok(if s.passed { 0 } else { 1 })
}
