//! ε-scaling study of the remainder on a slab.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    apriori_inequality_monitor, energy_functionals, expansion_slice, extract_remainder, AprioriFit, EnergyReport,
    ExpansionContext, ExpansionSlice,
};
use crate::collision::CollisionScheme;
use crate::equilibria::Coefficients;
use crate::error::{Error, Result};
use crate::hydro::{soh_advance, HydroConfig, MacroState};
use crate::kinetic::{run_sok_with, KineticField, KineticParams, SokRunOptions, SokStepperConfig};
use crate::sphere::{AngularGrid, TorusGrid};

/// ρ = ρ̄ + a_ρ sin(2πm x/L), φ = φ̄ + a_φ cos(2πm x/L) along the first axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoothProfile {
    pub rho_mean: f64,
    pub rho_amp: f64,
    pub phi_mean: f64,
    pub phi_amp: f64,
    pub mode: u32,
}

impl Default for SmoothProfile {
    fn default() -> Self {
        Self {
            rho_mean: 1.0,
            rho_amp: 0.2,
            phi_mean: 0.0,
            phi_amp: 0.5,
            mode: 1,
        }
    }
}

impl SmoothProfile {
    pub fn state(&self, grid_x: &TorusGrid, coeffs: &Coefficients) -> Result<MacroState> {
        let kx = 2.0 * PI * self.mode as f64 / grid_x.lengths()[0];
        let p = *self;
        MacroState::from_profiles(
            grid_x.clone(),
            move |x| p.rho_mean + p.rho_amp * (kx * x[0]).sin(),
            move |x| p.phi_mean + p.phi_amp * (kx * x[0]).cos(),
            *coeffs,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LimitStudyConfig {
    pub n_x: usize,
    pub length: f64,
    pub n_alpha: usize,
    pub t_final: f64,
    /// Strictly decreasing.
    pub eps: Vec<f64>,
    pub d: f64,
    pub k: f64,
    pub eta0: u8,
    pub dt: f64,
    /// Spacing of the remainder samples in time.
    pub sample_interval: f64,
    pub collision: CollisionScheme,
    pub theta_nodes: usize,
    pub fd_delta: f64,
    pub initial: SmoothProfile,
    /// Amplitude of the smooth random f̃₂ added at t = 0 (0: well-prepared).
    pub perturbation: f64,
    pub seed: u64,
    pub hydro: HydroConfig,
    pub solvability_tolerance: f64,
    /// Boundedness passes when max/min − 1 of each sup-in-t scaled norm stays below this.
    pub max_variation: f64,
    pub slope_range: [f64; 2],
}

impl Default for LimitStudyConfig {
    fn default() -> Self {
        Self {
            n_x: 128,
            length: 2.0 * PI,
            n_alpha: 64,
            t_final: 0.25,
            eps: vec![0.1, 0.05, 0.025, 0.0125],
            d: 1.0,
            k: 1.0,
            eta0: 1,
            dt: 1e-3,
            sample_interval: 5e-3,
            collision: CollisionScheme::Exponential,
            theta_nodes: 256,
            fd_delta: 1e-3,
            initial: SmoothProfile::default(),
            perturbation: 0.0,
            seed: 7,
            hydro: HydroConfig::default(),
            solvability_tolerance: super::SOLVABILITY_TOLERANCE,
            max_variation: 0.5,
            slope_range: [0.8, 1.2],
        }
    }
}

impl LimitStudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eps.is_empty() {
            return Err(Error::param("eps", "the epsilon list is empty"));
        }
        if self.eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(Error::param("eps", "every epsilon must be positive"));
        }
        if self.eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::param("eps", "the epsilon list must be strictly decreasing"));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::param("t_final", "must be nonnegative"));
        }
        if !(self.dt > 0.0) || !(self.sample_interval > 0.0) {
            return Err(Error::param("dt", "dt and sample_interval must be positive"));
        }
        if !(self.length > 0.0) || self.n_x < 4 || self.n_alpha < 4 {
            return Err(Error::param("grid", "need length > 0 and at least 4 nodes per direction"));
        }
        if !(self.initial.rho_mean - self.initial.rho_amp.abs() > 0.0) {
            return Err(Error::param("initial", "density profile must stay positive"));
        }
        Ok(())
    }
}

/// One line of the convergence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub eps: f64,
    pub t: f64,
    pub norm_l2_w: f64,
    pub norm_h1_w: f64,
    pub norm_h2_w: f64,
    pub scaled_l2: f64,
    pub scaled_h1: f64,
    pub scaled_h2: f64,
}

/// Per-ε results.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpsilonOutcome {
    pub eps: f64,
    pub steps: usize,
    pub dt: f64,
    pub report: EnergyReport,
    pub apriori: Option<AprioriFit>,
    /// sup over t of the three scaled norms.
    pub sup_scaled: [f64; 3],
    /// ‖f^ε − f₀‖_{L²(dω dx)} at the final time.
    pub final_distance: f64,
    /// sup over t of max_x |⟨f̃₂⟩_{M₀}| and max_x |⟨ω f̃₂⟩_{M₀}|.
    pub restriction: [f64; 2],
    pub max_gci_residual: f64,
    pub max_mean_residual: f64,
    /// sup over t of ‖f̃₁‖, ‖∂_t f₁/M₀‖, ‖h₁‖.
    pub f1_norms: [f64; 3],
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudySummary {
    /// Least-squares slope of ln‖f^ε − f₀‖ against ln ε.
    pub slope: Option<f64>,
    pub slope_ok: Option<bool>,
    /// max/min − 1 across ε of each sup-in-t scaled norm.
    pub variation: [f64; 3],
    pub bounded: [bool; 3],
    /// min and max of M₀: ‖f‖² ∈ [min, max] · ‖f/M₀‖²_{M₀}.
    pub equivalence: [f64; 2],
    pub failed_eps: Vec<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitStudy {
    pub config: LimitStudyConfig,
    pub coeffs: Coefficients,
    pub rows: Vec<StudyRow>,
    pub outcomes: Vec<EpsilonOutcome>,
    pub summary: StudySummary,
}

/// Least-squares slope of ln y against ln x; None with fewer than two points.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn perturbation(cfg: &LimitStudyConfig, grid_x: &TorusGrid, grid_w: &AngularGrid) -> Vec<f64> {
    let mut out = vec![0.0; grid_x.len() * grid_w.n_modes()];
    if cfg.perturbation == 0.0 {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let kx = 2.0 * PI / grid_x.lengths()[0];
    for m in 1..=3 {
        for l in 0..=3 {
            let amp = cfg.perturbation * rng.random_range(-1.0..1.0) / (1 + m * m + l * l) as f64;
            let ph = rng.random_range(0.0..2.0 * PI);
            for i in 0..grid_x.len() {
                let x = grid_x.coords(i)[0];
                for (j, a) in grid_w.nodes().iter().enumerate() {
                    out[i * grid_w.n_modes() + j] += amp * (kx * m as f64 * x + l as f64 * a + ph).cos();
                }
            }
        }
    }
    out
}

fn run_one(
    cfg: &LimitStudyConfig,
    ctx: &ExpansionContext,
    slice0: &ExpansionSlice,
    noise: &[f64],
    eps: f64,
    rows: &mut Vec<StudyRow>,
) -> EpsilonOutcome {
    let mut out = EpsilonOutcome {
        eps,
        steps: 0,
        dt: 0.0,
        report: EnergyReport {
            eps,
            entries: Vec::new(),
        },
        apriori: None,
        sup_scaled: [0.0; 3],
        final_distance: f64::NAN,
        restriction: [0.0; 2],
        max_gci_residual: 0.0,
        max_mean_residual: 0.0,
        f1_norms: [0.0; 3],
        error: None,
    };
    let c = ctx.coeffs();
    let params = KineticParams {
        epsilon: eps,
        eta0: c.eta0,
        d: c.d,
        k: c.k,
    };
    let values: Vec<f64> = slice0
        .f0
        .iter()
        .zip(&slice0.f1.f1)
        .zip(slice0.m0())
        .zip(noise)
        .map(|(((a, b), m), n)| a + eps * b + eps * eps * n * m)
        .collect();
    let gx = slice0.grid_x().clone();
    let cv = gx.cell_volume();
    let gw = slice0.grid_w.clone();
    let wt = gw.weight();
    let distance = |f: &KineticField, s: &ExpansionSlice| -> f64 {
        let sq: f64 = f.values().iter().zip(&s.f0).map(|(a, b)| (a - b) * (a - b)).sum();
        (sq * wt * cv).sqrt()
    };
    let mut record = |f: &KineticField, slice: &ExpansionSlice, out: &mut EpsilonOutcome| -> Result<()> {
        let rem = extract_remainder(f, slice)?;
        let e = energy_functionals(&rem, slice);
        let mom = rem.moments(slice);
        let fn1 = slice.f1_norms();
        for k in 0..3 {
            out.sup_scaled[k] = out.sup_scaled[k].max(e.scaled[k]);
            out.f1_norms[k] = out.f1_norms[k].max(fn1[k]);
        }
        for k in 0..2 {
            out.restriction[k] = out.restriction[k].max(mom[k]);
        }
        out.max_gci_residual = out.max_gci_residual.max(slice.f1.gci_residual);
        out.max_mean_residual = out.max_mean_residual.max(slice.f1.mean_residual);
        out.final_distance = distance(f, slice);
        rows.push(StudyRow {
            eps,
            t: e.t,
            norm_l2_w: e.norms[0],
            norm_h1_w: e.norms[1],
            norm_h2_w: e.norms[2],
            scaled_l2: e.scaled[0],
            scaled_h1: e.scaled[1],
            scaled_h2: e.scaled[2],
        });
        out.report.entries.push(e);
        Ok(())
    };
    let result = (|| -> Result<()> {
        let f0 = KineticField::linearized(gx.clone(), gw.clone(), values, params, slice0.state.clone())?;
        record(&f0, slice0, &mut out)?;
        if cfg.t_final == 0.0 {
            return Ok(());
        }
        let scfg = SokStepperConfig {
            dt: cfg.dt,
            collision: cfg.collision,
            hydro: cfg.hydro,
            ..Default::default()
        };
        let opts = SokRunOptions {
            monitor_every: 0,
            snapshot_every: 0,
        };
        let run = run_sok_with(&f0, cfg.t_final, &scfg, &opts, |f| {
            let ratio = f.t() / cfg.sample_interval;
            let last = f.t() >= cfg.t_final * (1.0 - 1e-12);
            if last || (ratio - ratio.round()).abs() < 1e-6 {
                let state = f.frozen().ok_or(Error::param("mode", "expected a linearized field"))?;
                let slice = expansion_slice(ctx, state)?;
                record(f, &slice, &mut out)?;
            }
            Ok(())
        })?;
        out.steps = run.steps;
        out.dt = run.dt;
        Ok(())
    })();
    if let Err(e) = result {
        out.error = Some(e.to_string());
    }
    if out.report.entries.len() >= 10 {
        out.apriori = apriori_inequality_monitor(&out.report).ok();
    }
    out
}

/// Runs the linearised SOK equation for every ε from well-prepared data and
/// tabulates the scaled remainder norms. Per-ε failures are recorded in the
/// outcome and keep the rows produced before the failure.
pub fn limit_study(cfg: &LimitStudyConfig) -> Result<LimitStudy> {
    cfg.validate()?;
    let coeffs = Coefficients::compute(cfg.d, 2, cfg.k, cfg.eta0, cfg.theta_nodes)?;
    let gx = TorusGrid::slab(cfg.n_x, cfg.length)?;
    let gw = AngularGrid::new(cfg.n_alpha)?;
    let ctx = ExpansionContext::new(&gw, &coeffs, cfg.hydro, cfg.theta_nodes)?
        .with_fd_delta(cfg.fd_delta)?
        .with_tolerance(cfg.solvability_tolerance)?;
    let state0 = cfg.initial.state(&gx, &coeffs)?;
    let slice0 = expansion_slice(&ctx, &state0)?;
    let noise = perturbation(cfg, &gx, &gw);
    let results: Vec<(EpsilonOutcome, Vec<StudyRow>)> = cfg
        .eps
        .par_iter()
        .map(|&eps| {
            let mut rows = Vec::new();
            let o = run_one(cfg, &ctx, &slice0, &noise, eps, &mut rows);
            (o, rows)
        })
        .collect();
    let mut rows = Vec::new();
    let mut outcomes = Vec::new();
    for (o, r) in results {
        rows.extend(r);
        outcomes.push(o);
    }
    let summary = summarize(cfg, &outcomes, slice0.m0());
    Ok(LimitStudy {
        config: cfg.clone(),
        coeffs,
        rows,
        outcomes,
        summary,
    })
}

fn summarize(cfg: &LimitStudyConfig, outcomes: &[EpsilonOutcome], m0: &[f64]) -> StudySummary {
    let ok: Vec<&EpsilonOutcome> = outcomes.iter().filter(|o| o.error.is_none()).collect();
    let failed_eps: Vec<f64> = outcomes.iter().filter(|o| o.error.is_some()).map(|o| o.eps).collect();
    let eps: Vec<f64> = ok.iter().map(|o| o.eps).collect();
    let dist: Vec<f64> = ok.iter().map(|o| o.final_distance).collect();
    let slope = loglog_slope(&eps, &dist);
    let slope_ok = slope.map(|s| s >= cfg.slope_range[0] && s <= cfg.slope_range[1]);
    let mut variation = [0.0; 3];
    let mut bounded = [true; 3];
    for k in 0..3 {
        let v: Vec<f64> = ok.iter().map(|o| o.sup_scaled[k]).collect();
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        variation[k] = if v.is_empty() {
            f64::NAN
        } else if lo > 0.0 {
            hi / lo - 1.0
        } else if hi == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        bounded[k] = variation[k] < cfg.max_variation;
    }
    let lo = m0.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = m0.iter().copied().fold(0.0, f64::max);
    let passed = failed_eps.is_empty() && bounded.iter().all(|b| *b) && slope_ok.unwrap_or(true);
    StudySummary {
        slope,
        slope_ok,
        variation,
        bounded,
        equivalence: [lo, hi],
        failed_eps,
        passed,
    }
}

impl LimitStudy {
    /// Convergence table with 17 significant digits.
    pub fn table_csv(&self) -> String {
        let mut s = String::from("eps,t,norm_L2_w,norm_H1_w,norm_H2_w,scaled_L2,scaled_H1,scaled_H2\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.eps, r.t, r.norm_l2_w, r.norm_h1_w, r.norm_h2_w, r.scaled_l2, r.scaled_h1, r.scaled_h2
            );
        }
        s
    }
}

/// Weighted norms of f₁ along an SOH trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F1Norms {
    pub t: f64,
    pub f1: f64,
    pub dt_f1: f64,
    pub h1: f64,
}

/// Advances the SOH state and evaluates ‖f̃₁‖, ‖∂_t f₁/M₀‖, ‖h₁‖ at
/// `samples + 1` equally spaced times in [t₀, t₀ + T].
pub fn f1_history(ctx: &ExpansionContext, initial: &MacroState, t_final: f64, samples: usize) -> Result<Vec<F1Norms>> {
    if samples == 0 {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let h = t_final / samples as f64;
    let mut s = initial.clone();
    let mut out = Vec::with_capacity(samples + 1);
    for n in 0..=samples {
        if n > 0 {
            s = soh_advance(&s, h, ctx.hydro())?;
        }
        let sl = expansion_slice(ctx, &s)?;
        let [a, b, c] = sl.f1_norms();
        out.push(F1Norms {
            t: s.t(),
            f1: a,
            dt_f1: b,
            h1: c,
        });
    }
    Ok(out)
}
