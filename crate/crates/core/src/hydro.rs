//! Self-organised hydrodynamics in polar form.
//!
//! With Ω = (cos φ, sin φ) the system reads
//!   ∂_t ρ = −c1 ∇·(ρΩ),
//!   ∂_t φ = −c2 Ω·∇φ − (d/ρ) Ω⊥·∇ρ + (c3/ρ) Ω⊥·Δ(ρΩ),
//! so |Ω| = 1 holds by construction. φ is an unwrapped real field whose
//! increment across each period is 2π times an integer winding number.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::equilibria::Coefficients;
use crate::error::{ensure_finite, Error, Result};
use crate::spectral::SpectralFilter;
use crate::sphere::TorusGrid;

pub const RHO_FLOOR: f64 = 1e-6;

/// Solver settings for the SOH system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HydroConfig {
    pub rho_floor: f64,
    pub filter: SpectralFilter,
    /// Fraction of the linear stability limit allowed for dt.
    pub cfl_safety: f64,
}

impl Default for HydroConfig {
    fn default() -> Self {
        Self {
            rho_floor: RHO_FLOOR,
            filter: SpectralFilter::default(),
            cfl_safety: 0.9,
        }
    }
}

/// (ρ, φ) on the torus with the SOH coefficients.
#[derive(Debug, Clone)]
pub struct MacroState {
    grid_x: TorusGrid,
    rho: Vec<f64>,
    phi: Vec<f64>,
    winding: [i64; 2],
    coeffs: Coefficients,
    t: f64,
}

fn wrap(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

impl MacroState {
    /// Builds a state from samples. φ may be given wrapped or unwrapped; it is
    /// unwrapped along each axis and its winding number recorded.
    pub fn new(grid_x: TorusGrid, rho: Vec<f64>, phi: Vec<f64>, coeffs: Coefficients) -> Result<Self> {
        grid_x.check_len(&rho)?;
        grid_x.check_len(&phi)?;
        ensure_finite(&rho, "initial density")?;
        ensure_finite(&phi, "initial angle")?;
        if let Some(r) = rho.iter().copied().find(|&r| r <= 0.0) {
            return Err(Error::param("rho", format!("density must be positive, found {r}")));
        }
        let (phi, winding) = unwrap_with_winding(&grid_x, &phi)?;
        Ok(Self {
            grid_x,
            rho,
            phi,
            winding,
            coeffs,
            t: 0.0,
        })
    }

    /// Builds a state from analytic profiles evaluated at the cell centres.
    pub fn from_profiles(
        grid_x: TorusGrid,
        rho: impl Fn([f64; 2]) -> f64,
        phi: impl Fn([f64; 2]) -> f64,
        coeffs: Coefficients,
    ) -> Result<Self> {
        let r = grid_x.sample(rho);
        let p = grid_x.sample(phi);
        Self::new(grid_x, r, p, coeffs)
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid_x
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn winding(&self) -> [i64; 2] {
        self.winding
    }

    pub fn coeffs(&self) -> &Coefficients {
        &self.coeffs
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn mass(&self) -> f64 {
        self.grid_x.integrate(&self.rho)
    }

    pub fn min_rho(&self) -> f64 {
        self.rho.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Ω at every node.
    pub fn omega(&self) -> Vec<[f64; 2]> {
        self.phi.iter().map(|p| [p.cos(), p.sin()]).collect()
    }

    /// φ minus its linear winding ramp; periodic.
    fn phi_periodic(&self) -> Vec<f64> {
        (0..self.grid_x.len())
            .map(|i| self.phi[i] - self.ramp(i))
            .collect()
    }

    fn ramp(&self, i: usize) -> f64 {
        let x = self.grid_x.coords(i);
        (0..self.grid_x.dim())
            .map(|a| 2.0 * PI * self.winding[a] as f64 * x[a] / self.grid_x.lengths()[a])
            .sum()
    }

    /// ∇φ including the winding contribution.
    pub fn grad_phi(&self) -> Vec<Vec<f64>> {
        let per = self.phi_periodic();
        let mut g = self.grid_x.gradient(&per);
        for (a, ga) in g.iter_mut().enumerate() {
            let slope = 2.0 * PI * self.winding[a] as f64 / self.grid_x.lengths()[a];
            ga.iter_mut().for_each(|v| *v += slope);
        }
        g
    }

    pub fn max_grad_phi(&self) -> f64 {
        let g = self.grad_phi();
        (0..self.grid_x.len())
            .map(|i| g.iter().map(|ga| ga[i] * ga[i]).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    fn with_fields(&self, rho: Vec<f64>, phi: Vec<f64>, t: f64) -> Self {
        Self {
            grid_x: self.grid_x.clone(),
            rho,
            phi,
            winding: self.winding,
            coeffs: self.coeffs,
            t,
        }
    }

    /// Energy of φ's periodic part in the upper third of the spectrum.
    pub fn phi_high_mode_energy(&self) -> f64 {
        let spec = self.grid_x.spectrum(&self.phi_periodic());
        let n = self.grid_x.len() as f64;
        spec.iter()
            .enumerate()
            .filter(|(idx, _)| {
                let (_, ki, _) = self.grid_x.wavevector(*idx);
                (0..self.grid_x.dim()).any(|a| 3 * ki[a].unsigned_abs() as usize > self.grid_x.n_cells()[a])
            })
            .map(|(_, c)| c.norm_sqr() / (n * n))
            .sum()
    }
}

fn unwrap_with_winding(grid: &TorusGrid, phi: &[f64]) -> Result<(Vec<f64>, [i64; 2])> {
    let mut out = phi.to_vec();
    let mut winding = [0i64; 2];
    let n = grid.n_cells();
    for axis in 0..grid.dim() {
        let lines: Vec<Vec<usize>> = if grid.dim() == 1 {
            vec![(0..n[0]).collect()]
        } else if axis == 0 {
            (0..n[1]).map(|j| (0..n[0]).map(|i| i * n[1] + j).collect()).collect()
        } else {
            (0..n[0]).map(|i| (0..n[1]).map(|j| i * n[1] + j).collect()).collect()
        };
        let mut w_axis = None;
        for line in &lines {
            let m = line.len();
            let mut total = 0.0;
            for s in 0..m {
                let inc = wrap(out[line[(s + 1) % m]] - out[line[s]]);
                if inc.abs() > 0.5 * PI {
                    return Err(Error::param(
                        "phi",
                        format!("angle field under-resolved: increment {inc:.3} between neighbours"),
                    ));
                }
                total += inc;
            }
            let w = (total / (2.0 * PI)).round() as i64;
            match w_axis {
                None => w_axis = Some(w),
                Some(w0) if w0 != w => {
                    return Err(Error::param("phi", "inconsistent winding number across lines"))
                }
                _ => {}
            }
            for s in 1..m {
                let prev = out[line[s - 1]];
                out[line[s]] = prev + wrap(out[line[s]] - prev);
            }
        }
        winding[axis] = w_axis.unwrap_or(0);
    }
    // shift so that the first node lies in (−π, π]
    let shift = out[0] - wrap(out[0]);
    out.iter_mut().for_each(|v| *v -= shift);
    Ok((out, winding))
}

/// Time derivatives (∂_t ρ, ∂_t φ) of the SOH system.
pub fn soh_rhs(state: &MacroState, cfg: &HydroConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    let min = state.min_rho();
    if !(min >= cfg.rho_floor) {
        return Err(Error::DensityFloor {
            min,
            floor: cfg.rho_floor,
            t: state.t,
        });
    }
    let g = &state.grid_x;
    let c = &state.coeffs;
    let n = g.len();
    let dim = g.dim();
    let (cos, sin): (Vec<f64>, Vec<f64>) = state.phi.iter().map(|p| (p.cos(), p.sin())).unzip();
    let flux = [
        state.rho.iter().zip(&cos).map(|(r, c)| r * c).collect::<Vec<_>>(),
        state.rho.iter().zip(&sin).map(|(r, s)| r * s).collect::<Vec<_>>(),
    ];
    let mut div = vec![0.0; n];
    for (a, fa) in flux.iter().enumerate().take(dim) {
        for (d, v) in div.iter_mut().zip(g.d(fa, a, 1)) {
            *d += v;
        }
    }
    let drho: Vec<f64> = div.iter().map(|v| -c.c1 * v).collect();

    let gphi = state.grad_phi();
    let grho = g.gradient(&state.rho);
    let visc = if c.c3 != 0.0 {
        Some([g.laplacian(&flux[0]), g.laplacian(&flux[1])])
    } else {
        None
    };
    let mut dphi = vec![0.0; n];
    for i in 0..n {
        let om = [cos[i], sin[i]];
        let perp = [-sin[i], cos[i]];
        let mut adv = 0.0;
        let mut pres = 0.0;
        for a in 0..dim {
            adv += om[a] * gphi[a][i];
            pres += perp[a] * grho[a][i];
        }
        let mut v = -c.c2 * adv - c.d * pres / state.rho[i];
        if let Some(l) = &visc {
            v += c.c3 * (perp[0] * l[0][i] + perp[1] * l[1][i]) / state.rho[i];
        }
        dphi[i] = v;
    }
    let drho = g.filter(&drho, cfg.filter);
    let dphi = g.filter(&dphi, cfg.filter);
    ensure_finite(&drho, "SOH density rate")?;
    ensure_finite(&dphi, "SOH angle rate")?;
    Ok((drho, dphi))
}

/// Largest stable explicit step for the current state.
pub fn soh_dt_cap(state: &MacroState, cfg: &HydroConfig) -> f64 {
    let c = &state.coeffs;
    let dx = state.grid_x.min_spacing();
    let speed = c.c1.max(c.c2) + (c.c1 * c.d).sqrt();
    let hyper = cfg.cfl_safety * 3f64.sqrt() * dx / (PI * speed.max(1e-300));
    if c.c3 > 0.0 {
        let para = cfg.cfl_safety * dx * dx * state.min_rho() / (4.0 * c.c3);
        hyper.min(para)
    } else {
        hyper
    }
}

/// One SSP-RK3 step.
pub fn soh_step(state: &MacroState, dt: f64, cfg: &HydroConfig) -> Result<MacroState> {
    if !(dt > 0.0) {
        return Err(Error::param("dt", "must be positive"));
    }
    let cap = soh_dt_cap(state, cfg);
    if dt > cap * (1.0 + 1e-12) {
        return Err(Error::Cfl {
            dt,
            cap,
            kind: "SOH explicit step",
        });
    }
    rk3(state, dt, cfg)
}

pub(crate) fn rk3(s0: &MacroState, dt: f64, cfg: &HydroConfig) -> Result<MacroState> {
    let axpy = |a: &[f64], b: &[f64], s: f64| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + s * y).collect() };
    let comb = |a: &[f64], wa: f64, b: &[f64], wb: f64, r: &[f64], s: f64| -> Vec<f64> {
        a.iter()
            .zip(b)
            .zip(r)
            .map(|((x, y), z)| wa * x + wb * (y + s * z))
            .collect()
    };
    let t = s0.t;
    let (r0, p0) = soh_rhs(s0, cfg)?;
    let s1 = s0.with_fields(axpy(&s0.rho, &r0, dt), axpy(&s0.phi, &p0, dt), t + dt);
    let (r1, p1) = soh_rhs(&s1, cfg)?;
    let s2 = s0.with_fields(
        comb(&s0.rho, 0.75, &s1.rho, 0.25, &r1, dt),
        comb(&s0.phi, 0.75, &s1.phi, 0.25, &p1, dt),
        t + 0.5 * dt,
    );
    let (r2, p2) = soh_rhs(&s2, cfg)?;
    let rho = comb(&s0.rho, 1.0 / 3.0, &s2.rho, 2.0 / 3.0, &r2, dt);
    let phi = comb(&s0.phi, 1.0 / 3.0, &s2.phi, 2.0 / 3.0, &p2, dt);
    let out = s0.with_fields(rho, phi, t + dt);
    let min = out.min_rho();
    if !(min >= cfg.rho_floor) {
        return Err(Error::DensityFloor {
            min,
            floor: cfg.rho_floor,
            t: out.t,
        });
    }
    Ok(out)
}

/// Advances by `span` using equal RK3 substeps no larger than the stability cap.
pub fn soh_advance(state: &MacroState, span: f64, cfg: &HydroConfig) -> Result<MacroState> {
    if span == 0.0 {
        return Ok(state.clone());
    }
    let cap = soh_dt_cap(state, cfg);
    let n = (span.abs() / cap).ceil().max(1.0) as usize;
    let h = span / n as f64;
    let mut s = state.clone();
    for _ in 0..n {
        s = rk3(&s, h, cfg)?;
    }
    Ok(s)
}

/// P_{Ω⊥} (k Δ(ρΩ)/ρ): the frozen viscous vector D₀ at every node.
pub fn viscous_d0(state: &MacroState, k: f64) -> Vec<[f64; 2]> {
    let g = &state.grid_x;
    let fx: Vec<f64> = state.rho.iter().zip(&state.phi).map(|(r, p)| r * p.cos()).collect();
    let fy: Vec<f64> = state.rho.iter().zip(&state.phi).map(|(r, p)| r * p.sin()).collect();
    let lx = g.laplacian(&fx);
    let ly = g.laplacian(&fy);
    (0..g.len())
        .map(|i| {
            let (s, c) = state.phi[i].sin_cos();
            let along = (-s * lx[i] + c * ly[i]) * k / state.rho[i];
            [-s * along, c * along]
        })
        .collect()
}

/// Monitors recorded by [`run_soh`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SohMonitor {
    pub t: f64,
    pub mass: f64,
    pub min_rho: f64,
    pub max_grad_phi: f64,
    pub phi_high_mode_energy: f64,
}

impl SohMonitor {
    pub fn of(state: &MacroState) -> Self {
        Self {
            t: state.t,
            mass: state.mass(),
            min_rho: state.min_rho(),
            max_grad_phi: state.max_grad_phi(),
            phi_high_mode_energy: state.phi_high_mode_energy(),
        }
    }
}

/// Settings of a SOH run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SohRunConfig {
    /// Time step; None picks the stability cap.
    pub dt: Option<f64>,
    pub hydro: HydroConfig,
    /// Record monitors and snapshots every this many steps (0 = final only).
    pub snapshot_every: usize,
    pub max_grad_phi: f64,
}

impl Default for SohRunConfig {
    fn default() -> Self {
        Self {
            dt: None,
            hydro: HydroConfig::default(),
            snapshot_every: 10,
            max_grad_phi: 1e4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SohRun {
    pub snapshots: Vec<MacroState>,
    pub monitors: Vec<SohMonitor>,
}

impl SohRun {
    pub fn last(&self) -> &MacroState {
        self.snapshots.last().expect("a run keeps at least the initial state")
    }
}

/// Integrates to `t_final` (relative to the initial time), recording
/// snapshots and monitors; halts on blow-up indicators.
pub fn run_soh(initial: &MacroState, t_final: f64, cfg: &SohRunConfig) -> Result<SohRun> {
    if !(t_final >= 0.0) {
        return Err(Error::param("T", "must be nonnegative"));
    }
    let mut run = SohRun {
        snapshots: vec![initial.clone()],
        monitors: vec![SohMonitor::of(initial)],
    };
    if t_final == 0.0 {
        return Ok(run);
    }
    // a fixed dt is split evenly; otherwise each step takes the current cap
    let fixed = cfg.dt.map(|dt| {
        let steps = (t_final / dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        (steps, t_final / steps as f64)
    });
    let t_end = initial.t + t_final;
    let mut s = initial.clone();
    let mut n = 0usize;
    loop {
        n += 1;
        let t_now = s.t;
        let (dt, last) = match fixed {
            Some((steps, dt)) => (dt, n == steps),
            None => {
                let cap = soh_dt_cap(&s, &cfg.hydro);
                let rest = t_end - t_now;
                if rest <= cap * (1.0 + 1e-12) {
                    (rest, true)
                } else {
                    (cap, false)
                }
            }
        };
        s = soh_step(&s, dt, &cfg.hydro).map_err(|e| e.at_time(t_now))?;
        if last {
            s.t = t_end;
        }
        let g = s.max_grad_phi();
        if !(g <= cfg.max_grad_phi) {
            return Err(Error::BlowUp {
                monitor: "max |grad phi|",
                value: g,
                threshold: cfg.max_grad_phi,
                t: s.t,
            });
        }
        if last || (cfg.snapshot_every > 0 && n % cfg.snapshot_every == 0) {
            run.monitors.push(SohMonitor::of(&s));
            run.snapshots.push(s.clone());
        }
        if last {
            return Ok(run);
        }
    }
}

/// L² distance between two periodic fields on grids of different
/// resolution, by Parseval over the union of their spectra.
pub fn l2_distance_spectral(ga: &TorusGrid, a: &[f64], gb: &TorusGrid, b: &[f64]) -> Result<f64> {
    if ga.dim() != 1 || gb.dim() != 1 || ga.lengths() != gb.lengths() {
        return Err(Error::GridMismatch("spectral distance needs two 1-D grids of equal length".into()));
    }
    let sa = ga.spectrum(a);
    let sb = gb.spectrum(b);
    let (na, nb) = (a.len() as i64, b.len() as i64);
    // cell-centred nodes sit at x_j = (j + 1/2)h, so bin k carries a phase e^{iπk/n}
    let coeff = |s: &[rustfft::num_complex::Complex64], n: i64, k: i64| {
        if k.abs() >= n / 2 {
            return rustfft::num_complex::Complex64::new(0.0, 0.0);
        }
        let idx = if k >= 0 { k } else { n + k } as usize;
        s[idx] / n as f64 * rustfft::num_complex::Complex64::from_polar(1.0, -PI * k as f64 / n as f64)
    };
    let kmax = na.max(nb) / 2;
    let mut sum = 0.0;
    for k in -kmax..=kmax {
        sum += (coeff(&sa, na, k) - coeff(&sb, nb, k)).norm_sqr();
    }
    Ok((sum * ga.lengths()[0]).sqrt())
}

/// Reads (x, ρ, φ) rows from CSV text (header line optional; `#` comments).
pub fn parse_initial_csv(text: &str, grid_x: &TorusGrid) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rho = Vec::new();
    let mut phi = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() < 3 {
            return Err(Error::Parse(format!("line {}: expected x,rho,phi", ln + 1)));
        }
        match (cols[1].parse::<f64>(), cols[2].parse::<f64>()) {
            (Ok(r), Ok(p)) => {
                rho.push(r);
                phi.push(p);
            }
            _ if rho.is_empty() => continue,
            _ => return Err(Error::Parse(format!("line {}: bad number", ln + 1))),
        }
    }
    grid_x.check_len(&rho)?;
    Ok((rho, phi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coeffs(c3: bool) -> Coefficients {
        let c = Coefficients::from_parts(1.0, 2, 0.45, 0.35, 1.0, 1).unwrap();
        if c3 {
            c
        } else {
            c.inviscid()
        }
    }

    #[test]
    fn constant_state_is_steady() {
        let g = TorusGrid::slab(32, 1.0).unwrap();
        let s = MacroState::from_profiles(g, |_| 1.3, |_| 0.4, coeffs(true)).unwrap();
        let (r, p) = soh_rhs(&s, &HydroConfig::default()).unwrap();
        assert!(r.iter().chain(&p).all(|v| v.abs() < 1e-13));
        let s2 = soh_step(&s, 1e-4, &HydroConfig::default()).unwrap();
        assert!(s2.rho().iter().all(|v| (v - 1.3).abs() < 1e-13));
    }

    #[test]
    fn density_rate_matches_derivative() {
        let g = TorusGrid::slab(64, 1.0).unwrap();
        let s = MacroState::from_profiles(g.clone(), |x| 1.0 + 0.1 * (2.0 * PI * x[0]).cos(), |_| 0.0, coeffs(false)).unwrap();
        let cfg = HydroConfig {
            filter: SpectralFilter::None,
            ..Default::default()
        };
        let (r, _) = soh_rhs(&s, &cfg).unwrap();
        let exact = g.sample(|x| 0.45 * 0.1 * 2.0 * PI * (2.0 * PI * x[0]).sin());
        assert!(r.iter().zip(&exact).all(|(a, b)| (a - b).abs() < 1e-10));
    }

    #[test]
    fn winding_is_detected_and_differentiated() {
        let g = TorusGrid::slab(32, 2.0).unwrap();
        let s = MacroState::from_profiles(g.clone(), |_| 1.0, |x| wrap(PI * x[0]), coeffs(false)).unwrap();
        assert_eq!(s.winding(), [1, 0]);
        assert!(s.grad_phi()[0].iter().all(|v| (v - PI).abs() < 1e-12));
        let bad = g.sample(|x| 3.0 * x[0].powi(8));
        assert!(MacroState::new(g, vec![1.0; 32], bad, coeffs(false)).is_err());
    }

    #[test]
    fn rejects_floor_breach_and_big_steps() {
        let g = TorusGrid::slab(32, 1.0).unwrap();
        assert!(MacroState::from_profiles(g.clone(), |_| 0.0, |_| 0.0, coeffs(false)).is_err());
        let s = MacroState::from_profiles(g, |_| 1.0, |_| 0.0, coeffs(false)).unwrap();
        assert!(matches!(soh_step(&s, 1.0, &HydroConfig::default()), Err(Error::Cfl { .. })));
        let cfg = HydroConfig {
            rho_floor: 2.0,
            ..Default::default()
        };
        assert!(matches!(soh_rhs(&s, &cfg), Err(Error::DensityFloor { .. })));
    }

    #[test]
    fn unit_norm_pairing() {
        let g = TorusGrid::slab(32, 1.0).unwrap();
        let s = MacroState::from_profiles(g, |x| 1.0 + 0.2 * (2.0 * PI * x[0]).sin(), |x| (2.0 * PI * x[0]).cos(), coeffs(true))
            .unwrap();
        let (_, p) = soh_rhs(&s, &HydroConfig::default()).unwrap();
        for (phi, dp) in s.phi().iter().zip(&p) {
            let om = [phi.cos(), phi.sin()];
            let perp = [-phi.sin(), phi.cos()];
            assert_eq!((om[0] * perp[0] + om[1] * perp[1]) * dp, 0.0);
        }
    }

    #[test]
    fn mass_conserved_and_inviscid_switch() {
        let g = TorusGrid::slab(64, 1.0).unwrap();
        let prof = |x: [f64; 2]| 1.0 + 0.2 * (2.0 * PI * x[0]).sin();
        let ang = |x: [f64; 2]| 0.5 * (2.0 * PI * x[0]).cos();
        let s = MacroState::from_profiles(g.clone(), prof, ang, coeffs(true)).unwrap();
        let cfg = SohRunConfig::default();
        let run = run_soh(&s, 0.2, &cfg).unwrap();
        assert!((run.last().mass() - s.mass()).abs() < 1e-12 * s.mass());

        let a = MacroState::from_profiles(g.clone(), prof, ang, coeffs(false)).unwrap();
        let mut c = coeffs(true);
        c.c3 = 0.0;
        let b = MacroState::from_profiles(g, prof, ang, c).unwrap();
        let ra = soh_step(&a, 1e-4, &HydroConfig::default()).unwrap();
        let rb = soh_step(&b, 1e-4, &HydroConfig::default()).unwrap();
        assert_eq!(ra.phi(), rb.phi());
    }

    #[test]
    fn zero_horizon_returns_initial() {
        let g = TorusGrid::slab(16, 1.0).unwrap();
        let s = MacroState::from_profiles(g, |_| 1.0, |_| 0.1, coeffs(false)).unwrap();
        let run = run_soh(&s, 0.0, &SohRunConfig::default()).unwrap();
        assert_eq!(run.snapshots.len(), 1);
        assert_eq!(run.last().rho(), s.rho());
    }

    #[test]
    fn spectral_distance_between_resolutions() {
        let f = |x: [f64; 2]| (2.0 * PI * x[0]).sin() + 0.3 * (6.0 * PI * x[0]).cos();
        let ga = TorusGrid::slab(32, 1.0).unwrap();
        let gb = TorusGrid::slab(64, 1.0).unwrap();
        assert!(l2_distance_spectral(&ga, &ga.sample(f), &gb, &gb.sample(f)).unwrap() < 1e-13);
        let d = l2_distance_spectral(&ga, &ga.sample(f), &gb, &vec![0.0; 64]).unwrap();
        assert!((d - (0.5f64 + 0.045).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn parses_initial_csv() {
        let g = TorusGrid::slab(8, 1.0).unwrap();
        let mut text = String::from("x,rho,phi\n");
        for i in 0..8 {
            text.push_str(&format!("{},{},{}\n", i, 1.0 + i as f64 * 0.01, 0.1));
        }
        let (r, p) = parse_initial_csv(&text, &g).unwrap();
        assert_eq!(r.len(), 8);
        assert_eq!(p[3], 0.1);
        assert!(parse_initial_csv("1,2,3\n", &g).is_err());
    }
}
