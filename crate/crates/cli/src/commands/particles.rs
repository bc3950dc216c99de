use serde_json::json;
use sok_core::particles::{swarm_step, AngleScheme, Swarm};

use super::{parse_enum, parse_list, set};
use crate::config::RunConfig;
use crate::output::{Csv, RunDir};
use crate::Usage;

#[derive(clap::Args, Debug, Default)]
pub struct Args {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub speed: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub radius: Option<f64>,
    /// Box lengths, comma-separated (two entries).
    #[arg(long)]
    pub length: Option<String>,
    /// euler_maruyama or heun
    #[arg(long, value_parser = parse_enum::<AngleScheme>)]
    pub scheme: Option<AngleScheme>,
    #[arg(long, short = 'T')]
    pub t_final: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub snapshot_every: Option<usize>,
    #[arg(long)]
    pub monitor_every: Option<usize>,
    /// von Mises initial headings with this noise (uniform when omitted).
    #[arg(long)]
    pub initial_d: Option<f64>,
    #[arg(long)]
    pub initial_phi: Option<f64>,
}

/// |mean heading vector| and its angle.
fn polarization(s: &Swarm) -> [f64; 2] {
    let n = s.len().max(1) as f64;
    let (c, si) = s.angles.iter().fold((0.0, 0.0), |(c, si), b| (c + b.cos(), si + b.sin()));
    let (c, si) = (c / n, si / n);
    [c.hypot(si), si.atan2(c)]
}

/// Snapshots swarm_NNNNN.csv (k,x1,x2,beta), the sidecar swarm.json with seed
/// and parameters, and monitors.csv (t,polarization,mean_heading).
pub fn run(cfg: &mut RunConfig, a: &Args, dir: &mut RunDir) -> anyhow::Result<u8> {
    let c = &mut cfg.particles;
    set(&mut c.n, &a.n);
    set(&mut c.params.speed, &a.speed);
    set(&mut c.params.nu, &a.nu);
    set(&mut c.params.noise, &a.noise);
    set(&mut c.params.radius, &a.radius);
    set(&mut c.params.scheme, &a.scheme);
    if let Some(s) = &a.length {
        let l: Vec<f64> = parse_list(s).map_err(|e| Usage(format!("--length: {e}")))?;
        if l.len() != 2 {
            return Err(Usage("--length needs two entries".into()).into());
        }
        c.params.lengths = [l[0], l[1]];
    }
    set(&mut c.t_final, &a.t_final);
    set(&mut c.dt, &a.dt);
    set(&mut c.seed, &a.seed);
    set(&mut c.snapshot_every, &a.snapshot_every);
    set(&mut c.monitor_every, &a.monitor_every);
    if a.initial_d.is_some() {
        c.initial_d = a.initial_d;
    }
    set(&mut c.initial_phi, &a.initial_phi);
    if !(c.t_final >= 0.0) || !(c.dt > 0.0) {
        return Err(Usage("need t_final >= 0 and dt > 0".into()).into());
    }
    if c.initial_d.is_some_and(|d| !(d > 0.0)) {
        return Err(Usage("initial_d must be positive".into()).into());
    }
    let mut s = match c.initial_d {
        Some(d) => {
            let phi = c.initial_phi;
            Swarm::homogeneous(c.n, c.params, c.seed, move |b| (((b - phi).cos() - 1.0) / d).exp(), 1.0)?
        }
        None => Swarm::homogeneous(c.n, c.params, c.seed, |_| 1.0, 1.0)?,
    };
    dir.write_json(
        "swarm.json",
        &json!({
            "seed": c.seed,
            "n": c.n,
            "params": c.params,
            "dt": c.dt,
            "t_final": c.t_final,
            "initial_d": c.initial_d,
            "initial_phi": c.initial_phi,
        }),
    )?;
    let steps = if c.t_final == 0.0 {
        0
    } else {
        (c.t_final / c.dt * (1.0 - 1e-12)).ceil().max(1.0) as usize
    };
    let dt = if steps > 0 { c.t_final / steps as f64 } else { c.dt };
    let mut mon = Csv::new(&["t", "polarization", "mean_heading"]);
    let mut snap = 0usize;
    let mut save = |s: &Swarm, dir: &mut RunDir| -> anyhow::Result<()> {
        let name = format!("swarm_{snap:05}.csv");
        s.write_csv(&dir.path(&name))?;
        dir.record(&name);
        snap += 1;
        Ok(())
    };
    let p = polarization(&s);
    mon.row(&[s.t, p[0], p[1]]);
    save(&s, dir)?;
    for n in 1..=steps {
        s = swarm_step(&s, dt)?;
        if n == steps {
            s.t = c.t_final;
        }
        if n == steps || (c.monitor_every > 0 && n % c.monitor_every == 0) {
            let p = polarization(&s);
            mon.row(&[s.t, p[0], p[1]]);
        }
        if n == steps || (c.snapshot_every > 0 && n % c.snapshot_every == 0) {
            save(&s, dir)?;
        }
    }
    dir.write("monitors.csv", mon.as_str())?;
    let p = polarization(&s);
    println!("t = {}: {} particles, {steps} steps, polarization {:.6}", s.t, s.len(), p[0]);
    Ok(0)
}
