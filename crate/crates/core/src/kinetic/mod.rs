//! Scaled SOK equation on 𝕋^dim × S¹:
//!   ∂_t f + ω·∇_x f + η₀ ∂_α((τ·D) f) = (1/ε) 𝒬(f),
//! integrated by Strang splitting T(dt/2) V(dt/2) C(dt) V(dt/2) T(dt/2):
//! exact Fourier transport per angular node, explicit viscous drift, and a
//! relaxation step for the collision in the variable f/M_{Ω*}.
//!
//! In linearised mode Ω* = Ω₀ and D = D₀ come from an SOH state that is
//! advanced together with f and sampled at the step midpoint.

mod io;

pub use io::{read_snapshot_binary, write_snapshot_binary, write_snapshot_csv};

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::collision::{relax_isotropic, CollisionScheme, LinearizedOperator, Propagator, J_FLOOR};
use crate::equilibria::{check_d, vmf_samples};
use crate::error::{ensure_finite, Error, Result};
use crate::hydro::{soh_advance, viscous_d0, HydroConfig, MacroState};
use crate::sphere::{AngularGrid, TorusGrid};

/// Physical parameters of the scaled model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KineticParams {
    pub epsilon: f64,
    pub eta0: u8,
    pub d: f64,
    pub k: f64,
}

impl Default for KineticParams {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            eta0: 0,
            d: 1.0,
            k: 1.0,
        }
    }
}

impl KineticParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::param("epsilon", "must be positive"));
        }
        check_d(self.d)?;
        if self.eta0 > 1 {
            return Err(Error::param("eta0", "must be 0 or 1"));
        }
        if !(self.k > 0.0) {
            return Err(Error::param("k", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Nonlinear,
    Linearized,
}

/// f(x, α) on TorusGrid × AngularGrid, row-major with α fastest.
#[derive(Debug, Clone)]
pub struct KineticField {
    grid_x: TorusGrid,
    grid_w: AngularGrid,
    values: Vec<f64>,
    params: KineticParams,
    mode: Mode,
    t: f64,
    frozen: Option<MacroState>,
}

impl KineticField {
    /// Nonlinear-mode field. Linearised fields are built with [`Self::linearized`].
    pub fn new(grid_x: TorusGrid, grid_w: AngularGrid, values: Vec<f64>, params: KineticParams, mode: Mode) -> Result<Self> {
        if mode == Mode::Linearized {
            return Err(Error::param("mode", "a linearized field needs its SOH state; use KineticField::linearized"));
        }
        Self::build(grid_x, grid_w, values, params, mode, None)
    }

    /// Field evolved with (ρ₀, Ω₀, D₀) taken from `state`, which is advanced
    /// alongside. The state's coefficients must use the same d, k and η₀.
    pub fn linearized(
        grid_x: TorusGrid,
        grid_w: AngularGrid,
        values: Vec<f64>,
        params: KineticParams,
        state: MacroState,
    ) -> Result<Self> {
        let c = state.coeffs();
        if (c.d - params.d).abs() > 1e-14 * params.d || c.eta0 != params.eta0 || (c.k - params.k).abs() > 1e-14 * params.k {
            return Err(Error::param("state", "SOH coefficients disagree with the kinetic parameters"));
        }
        if state.grid().n_cells() != grid_x.n_cells() || state.grid().lengths() != grid_x.lengths() {
            return Err(Error::GridMismatch("SOH state and kinetic field use different spatial grids".into()));
        }
        let t = state.t();
        let mut f = Self::build(grid_x, grid_w, values, params, Mode::Linearized, Some(state))?;
        f.t = t;
        Ok(f)
    }

    fn build(
        grid_x: TorusGrid,
        grid_w: AngularGrid,
        values: Vec<f64>,
        params: KineticParams,
        mode: Mode,
        frozen: Option<MacroState>,
    ) -> Result<Self> {
        params.validate()?;
        if values.len() != grid_x.len() * grid_w.n_modes() {
            return Err(Error::GridMismatch(format!(
                "expected {} samples, got {}",
                grid_x.len() * grid_w.n_modes(),
                values.len()
            )));
        }
        ensure_finite(&values, "kinetic field")?;
        Ok(Self {
            grid_x,
            grid_w,
            values,
            params,
            mode,
            t: 0.0,
            frozen,
        })
    }

    pub fn grid_x(&self) -> &TorusGrid {
        &self.grid_x
    }

    pub fn grid_w(&self) -> &AngularGrid {
        &self.grid_w
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn params(&self) -> &KineticParams {
        &self.params
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    /// The attached SOH state (linearised mode only), at the field's time.
    pub fn frozen(&self) -> Option<&MacroState> {
        self.frozen.as_ref()
    }

    /// Angular samples at spatial node i.
    pub fn column(&self, i: usize) -> &[f64] {
        let n = self.grid_w.n_modes();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn density(&self) -> Vec<f64> {
        (0..self.grid_x.len()).map(|i| self.grid_w.integrate(self.column(i))).collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.grid_x.integrate(&self.density())
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Same grids and parameters with new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        let mut f = Self::build(
            self.grid_x.clone(),
            self.grid_w.clone(),
            values,
            self.params,
            self.mode,
            self.frozen.clone(),
        )?;
        f.t = self.t;
        Ok(f)
    }
}

/// Macroscopic fields of f at each spatial node.
#[derive(Debug, Clone)]
pub struct Macros {
    pub rho: Vec<f64>,
    pub j: Vec<[f64; 2]>,
    /// Unit mean direction, or zero where |j| < j_floor.
    pub omega: Vec<[f64; 2]>,
    pub d: Vec<[f64; 2]>,
}

/// ρ, j_f, Ω_f and D_f = k P_{Ω_f⊥} Δ_x j_f / |j_f|.
pub fn compute_macros(f: &KineticField, j_floor: f64) -> Macros {
    let gx = &f.grid_x;
    let n = gx.len();
    let mut rho = Vec::with_capacity(n);
    let mut j = Vec::with_capacity(n);
    for i in 0..n {
        let (m0, m1) = f.grid_w.moments(f.column(i));
        rho.push(m0);
        j.push(m1);
    }
    let norm: Vec<f64> = j.iter().map(|v| v[0].hypot(v[1])).collect();
    let omega: Vec<[f64; 2]> = j
        .iter()
        .zip(&norm)
        .map(|(v, &m)| if m < j_floor { [0.0, 0.0] } else { [v[0] / m, v[1] / m] })
        .collect();
    let mut d = vec![[0.0; 2]; n];
    if f.params.eta0 == 1 {
        let jx: Vec<f64> = j.iter().map(|v| v[0]).collect();
        let jy: Vec<f64> = j.iter().map(|v| v[1]).collect();
        let lx = gx.laplacian(&jx);
        let ly = gx.laplacian(&jy);
        for i in 0..n {
            if norm[i] < j_floor {
                continue;
            }
            let o = omega[i];
            let perp = [-o[1], o[0]];
            let along = (perp[0] * lx[i] + perp[1] * ly[i]) * f.params.k / norm[i];
            d[i] = [perp[0] * along, perp[1] * along];
        }
    }
    Macros { rho, j, omega, d }
}

/// Stepper settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SokStepperConfig {
    pub dt: f64,
    /// dt must not exceed cfl_safety · Δx.
    pub cfl_safety: f64,
    pub j_floor: f64,
    pub collision: CollisionScheme,
    /// Settings of the SOH system advanced alongside in linearised mode.
    pub hydro: HydroConfig,
}

impl Default for SokStepperConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            cfl_safety: 1.0,
            j_floor: J_FLOOR,
            collision: CollisionScheme::ImplicitEuler,
            hydro: HydroConfig::default(),
        }
    }
}

/// Reusable stepper: caches transport phases and collision propagators.
pub struct SokStepper {
    cfg: SokStepperConfig,
    op: LinearizedOperator,
    prop: Propagator,
    /// e^{−i k·ω dt/2}, spatial bin fastest, one block per angular node
    phase: Vec<Complex64>,
}

impl SokStepper {
    pub fn new(f: &KineticField, cfg: SokStepperConfig) -> Result<Self> {
        if !(cfg.dt > 0.0 && cfg.dt.is_finite()) {
            return Err(Error::param("dt", "must be positive"));
        }
        let cap = cfg.cfl_safety * f.grid_x.min_spacing();
        if cfg.dt > cap * (1.0 + 1e-12) {
            return Err(Error::Cfl {
                dt: cfg.dt,
                cap,
                kind: "transport",
            });
        }
        let op = LinearizedOperator::new(&f.grid_w, f.params.d, 0.0)?;
        let tau = f.params.d * cfg.dt / f.params.epsilon;
        let prop = op.propagator(tau, cfg.collision);
        let gx = &f.grid_x;
        let nx = gx.len();
        let mut phase = Vec::with_capacity(nx * f.grid_w.n_modes());
        for (c, s) in f.grid_w.cos().iter().zip(f.grid_w.sin()) {
            for idx in 0..nx {
                let (kv, _, nyq) = gx.wavevector(idx);
                let arg = -(kv[0] * c + kv[1] * s) * 0.5 * cfg.dt;
                if nyq[0] || nyq[1] {
                    phase.push(Complex64::new(arg.cos(), 0.0));
                } else {
                    phase.push(Complex64::from_polar(1.0, arg));
                }
            }
        }
        Ok(Self { cfg, op, prop, phase })
    }

    pub fn config(&self) -> &SokStepperConfig {
        &self.cfg
    }

    /// Advances f by one step dt in place.
    pub fn step(&self, f: &mut KineticField) -> Result<()> {
        let t0 = f.t;
        self.step_inner(f).map_err(|e| e.at_time(t0))
    }

    fn step_inner(&self, f: &mut KineticField) -> Result<()> {
        let dt = self.cfg.dt;
        let (mid, end) = match &f.frozen {
            Some(s) => {
                let mid = soh_advance(s, 0.5 * dt, &self.cfg.hydro)?;
                let end = soh_advance(&mid, 0.5 * dt, &self.cfg.hydro)?;
                (Some(mid), Some(end))
            }
            None => (None, None),
        };
        let mass0 = f.total_mass();
        self.transport(f);
        self.viscous(f, mid.as_ref(), 0.5 * dt);
        self.collide(f, mid.as_ref());
        self.viscous(f, mid.as_ref(), 0.5 * dt);
        self.transport(f);
        f.t += dt;
        if let Some(e) = end {
            f.frozen = Some(e);
        }
        ensure_finite(&f.values, "kinetic step")?;
        let mass1 = f.total_mass();
        if !(mass1 > 0.0) {
            return Err(Error::Degenerate {
                context: "total mass after step",
                value: mass1,
            });
        }
        if (mass1 - mass0).abs() > 1e-9 * mass0.abs() {
            return Err(Error::Residual {
                context: "mass conservation in kinetic step",
                residual: (mass1 - mass0).abs() / mass0.abs(),
                tolerance: 1e-9,
            });
        }
        Ok(())
    }

    fn transport(&self, f: &mut KineticField) {
        let nx = f.grid_x.len();
        let nw = f.grid_w.n_modes();
        let mut buf = vec![Complex64::new(0.0, 0.0); nx];
        for j in 0..nw {
            for i in 0..nx {
                buf[i] = Complex64::new(f.values[i * nw + j], 0.0);
            }
            f.grid_x.forward_in_place(&mut buf);
            for (b, p) in buf.iter_mut().zip(&self.phase[j * nx..(j + 1) * nx]) {
                *b *= p;
            }
            f.grid_x.inverse_in_place(&mut buf);
            for i in 0..nx {
                f.values[i * nw + j] = buf[i].re;
            }
        }
    }

    /// ∂_t f = −η₀ ∂_α((τ·D) f) over `h`. In nonlinear mode D_f depends on
    /// Δ_x j_f, which makes the substep diffusive in φ with rate
    /// ν(x) = k ⟨(ω·Ω_f⊥)² f⟩/|j_f|, so it is sub-cycled with D_f refreshed
    /// whenever h ν |k_max|² would exceed 1 (at most 4096 sub-steps).
    fn viscous(&self, f: &mut KineticField, frozen: Option<&MacroState>, h: f64) {
        if f.params.eta0 == 0 {
            return;
        }
        if let Some(s) = frozen {
            advance_viscous(f, &viscous_d0(s, f.params.k), h);
            return;
        }
        let gx = f.grid_x.clone();
        let kmax2: f64 = (0..gx.dim()).map(|a| (PI / gx.spacing(a)).powi(2)).sum();
        let mut left = h;
        while left > 1e-14 * h {
            let mac = compute_macros(f, self.cfg.j_floor);
            let nu = angular_stiffness(f, &mac) * f.params.k;
            let hs = if nu * kmax2 * left > 1.0 { (1.0 / (nu * kmax2)).max(h / 4096.0).min(left) } else { left };
            advance_viscous(f, &mac.d, hs);
            left -= hs;
        }
    }

    fn collide(&self, f: &mut KineticField, frozen: Option<&MacroState>) {
        let gw = f.grid_w.clone();
        let nw = gw.n_modes();
        let d = f.params.d;
        let kappa_tau = d * self.cfg.dt / f.params.epsilon;
        let dirs: Vec<Option<f64>> = match frozen {
            Some(s) => s.phi().iter().map(|&p| Some(p)).collect(),
            None => (0..f.grid_x.len())
                .map(|i| {
                    let (_, j) = gw.moments(f.column(i));
                    if j[0].hypot(j[1]) < self.cfg.j_floor {
                        None
                    } else {
                        Some(j[1].atan2(j[0]))
                    }
                })
                .collect(),
        };
        let scheme = self.cfg.collision;
        f.values.par_chunks_mut(nw).zip(dirs.par_iter()).for_each(|(col, dir)| match dir {
            Some(phi) => {
                let m = vmf_samples(&gw, d, *phi);
                self.prop.relax(&gw, *phi, &m, col);
            }
            None => relax_isotropic(&gw, kappa_tau, scheme, col),
        });
    }

    pub fn operator(&self) -> &LinearizedOperator {
        &self.op
    }
}

/// max over x of ⟨(ω·Ω_f⊥)² f⟩/|j_f|, skipping nodes below the current floor.
fn angular_stiffness(f: &KineticField, mac: &Macros) -> f64 {
    let gw = &f.grid_w;
    let mut out = 0.0f64;
    for (i, o) in mac.omega.iter().enumerate() {
        if *o == [0.0, 0.0] {
            continue;
        }
        let s2: f64 = f
            .column(i)
            .iter()
            .zip(gw.cos().iter().zip(gw.sin()))
            .map(|(v, (c, s))| {
                let p = -o[1] * c + o[0] * s;
                v * p * p
            })
            .sum::<f64>()
            * gw.weight();
        out = out.max(s2 / mac.j[i][0].hypot(mac.j[i][1]));
    }
    out
}

/// Per-column RK4 for ∂_t f = −∂_α((τ·D) f) with D fixed over `h`.
fn advance_viscous(f: &mut KineticField, dvec: &[[f64; 2]], h: f64) {
    let gw = f.grid_w.clone();
    let nw = gw.n_modes();
    f.values.par_chunks_mut(nw).zip(dvec.par_iter()).for_each(|(col, dv)| {
        if dv[0] == 0.0 && dv[1] == 0.0 {
            return;
        }
        let tang: Vec<f64> = gw.cos().iter().zip(gw.sin()).map(|(c, s)| -s * dv[0] + c * dv[1]).collect();
        let rate = |u: &[f64]| -> Vec<f64> {
            let flux: Vec<f64> = u.iter().zip(&tang).map(|(u, t)| u * t).collect();
            gw.d(&flux, 1).into_iter().map(|v| -v).collect()
        };
        // RK4 is stable on the imaginary axis up to 2√2; keep h |D| n/2 ≤ 1
        let speed = dv[0].hypot(dv[1]) * (nw / 2) as f64;
        let sub = (h * speed).ceil().max(1.0) as usize;
        let hs = h / sub as f64;
        for _ in 0..sub {
            let k1 = rate(col);
            let stage = |k: &[f64], c: f64| -> Vec<f64> { col.iter().zip(k).map(|(u, k)| u + c * hs * k).collect() };
            let k2 = rate(&stage(&k1, 0.5));
            let k3 = rate(&stage(&k2, 0.5));
            let k4 = rate(&stage(&k3, 1.0));
            for (i, u) in col.iter_mut().enumerate() {
                *u += hs / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
    });
}

/// One step of the scheme with a freshly built stepper.
pub fn sok_step(f: &KineticField, cfg: &SokStepperConfig) -> Result<KineticField> {
    let stepper = SokStepper::new(f, *cfg)?;
    let mut out = f.clone();
    stepper.step(&mut out)?;
    Ok(out)
}

/// Monitored quantities of a kinetic run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SokMonitor {
    pub t: f64,
    pub mass: f64,
    /// ∫ j_f dx
    pub current: [f64; 2],
    /// ∫ ⟨𝒬(f) f/M_{Ω_f}⟩ dx (nonlinear) or its linearised analogue
    pub dissipation: f64,
    /// ∫ ⟨f ln(f/(ρ M_{Ω_f}))⟩ dx over positive samples
    pub relative_entropy: f64,
    /// ‖f − ρ M_{Ω*}‖_{L²(dx dω)}
    pub equilibrium_distance: f64,
    pub min_f: f64,
}

/// Evaluates the monitors of f. The direction Ω* is Ω_f in nonlinear mode
/// and Ω₀ in linearised mode.
pub fn monitor(f: &KineticField, j_floor: f64) -> SokMonitor {
    let gx = &f.grid_x;
    let gw = &f.grid_w;
    let d = f.params.d;
    let mac = compute_macros(f, j_floor);
    let mut diss = 0.0;
    let mut ent = 0.0;
    let mut dist = 0.0;
    let mut cur = [0.0; 2];
    for i in 0..gx.len() {
        cur[0] += mac.j[i][0];
        cur[1] += mac.j[i][1];
        let col = f.column(i);
        let phi = match &f.frozen {
            Some(s) => Some(s.phi()[i]),
            None => {
                let o = mac.omega[i];
                (o != [0.0, 0.0]).then(|| o[1].atan2(o[0]))
            }
        };
        let m = match phi {
            Some(p) => vmf_samples(gw, d, p),
            None => vec![1.0 / (2.0 * PI); gw.n_modes()],
        };
        let ratio: Vec<f64> = col.iter().zip(&m).map(|(f, m)| f / m).collect();
        let dr = gw.d(&ratio, 1);
        // ⟨𝓛 f · f/M⟩ = −d ⟨M |∂(f/M)|²⟩
        diss -= d * gw.pairing(&dr, &dr, &m);
        let rho = mac.rho[i];
        for (v, mm) in col.iter().zip(&m) {
            if *v > 0.0 && rho > 0.0 {
                ent += gw.weight() * v * (v / (rho * mm)).ln();
            }
            let e = v - rho * mm;
            dist += gw.weight() * e * e;
        }
    }
    let cv = gx.cell_volume();
    SokMonitor {
        t: f.t,
        mass: f.total_mass(),
        current: [cur[0] * cv, cur[1] * cv],
        dissipation: diss * cv,
        relative_entropy: ent * cv,
        equilibrium_distance: (dist * cv).sqrt(),
        min_f: f.min_value(),
    }
}

/// Run settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SokRunOptions {
    /// Record monitors every this many steps (the initial and final states are always recorded).
    pub monitor_every: usize,
    /// Keep a snapshot every this many steps (0 = only the final state).
    pub snapshot_every: usize,
}

impl Default for SokRunOptions {
    fn default() -> Self {
        Self {
            monitor_every: 1,
            snapshot_every: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SokRun {
    pub last: KineticField,
    pub monitors: Vec<SokMonitor>,
    pub snapshots: Vec<KineticField>,
    pub steps: usize,
    pub dt: f64,
}

/// Advances to t₀ + T with equal steps no larger than cfg.dt.
pub fn run_sok(f0: &KineticField, t_final: f64, cfg: &SokStepperConfig, opts: &SokRunOptions) -> Result<SokRun> {
    run_sok_with(f0, t_final, cfg, opts, |_| Ok(()))
}

/// As [`run_sok`], calling `visit` on the field after every step.
pub fn run_sok_with(
    f0: &KineticField,
    t_final: f64,
    cfg: &SokStepperConfig,
    opts: &SokRunOptions,
    mut visit: impl FnMut(&KineticField) -> Result<()>,
) -> Result<SokRun> {
    if !(t_final >= 0.0) {
        return Err(Error::param("T", "must be nonnegative"));
    }
    let mut run = SokRun {
        last: f0.clone(),
        monitors: vec![monitor(f0, cfg.j_floor)],
        snapshots: vec![f0.clone()],
        steps: 0,
        dt: 0.0,
    };
    if t_final == 0.0 {
        return Ok(run);
    }
    let steps = (t_final / cfg.dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let mut c = *cfg;
    c.dt = t_final / steps as f64;
    let stepper = SokStepper::new(f0, c)?;
    let mut f = f0.clone();
    for n in 1..=steps {
        stepper.step(&mut f)?;
        visit(&f)?;
        if n == steps || (opts.monitor_every > 0 && n % opts.monitor_every == 0) {
            run.monitors.push(monitor(&f, cfg.j_floor));
        }
        if n != steps && opts.snapshot_every > 0 && n % opts.snapshot_every == 0 {
            run.snapshots.push(f.clone());
        }
    }
    run.snapshots.push(f.clone());
    run.last = f;
    run.steps = steps;
    run.dt = c.dt;
    Ok(run)
}
