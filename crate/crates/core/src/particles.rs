//! Monte Carlo Vicsek swarm on the 2-torus.
//!
//! Each particle carries X_k ∈ 𝕋² and V_k = (cos β_k, sin β_k). The projected
//! Stratonovich equation dV = P_{V⊥}∘(ν V̄ dt + √(2D) dB) reduces on S¹ to
//!   dβ = ν sin(β̄ − β) dt + √(2D) dW,
//! because P_{V⊥}∘dB = τ (τ·∘dB) and τ·B is a scalar Brownian motion, so the
//! noise in β is additive and Itô and Stratonovich readings coincide.
//!
//! Randomness is counter based: particle k at step n draws from ChaCha8 with
//! stream k positioned at a block reserved for n, so results do not depend on
//! the thread count.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collision::J_FLOOR;
use crate::error::{Error, Result};
use crate::kinetic::{KineticField, KineticParams, Mode};
use crate::sphere::{AngularGrid, TorusGrid};

/// Words of the ChaCha stream reserved for one particle step.
const WORDS_PER_STEP: u128 = 1 << 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AngleScheme {
    #[default]
    EulerMaruyama,
    /// Stochastic Heun predictor–corrector with the same increment.
    Heun,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SwarmParams {
    /// Speed c.
    pub speed: f64,
    /// Alignment intensity ν.
    pub nu: f64,
    /// Noise intensity D.
    pub noise: f64,
    /// Sensing radius R.
    pub radius: f64,
    pub lengths: [f64; 2],
    pub j_floor: f64,
    pub scheme: AngleScheme,
}

impl Default for SwarmParams {
    fn default() -> Self {
        Self {
            speed: 1.0,
            nu: 1.0,
            noise: 0.25,
            radius: 0.1,
            lengths: [1.0, 1.0],
            j_floor: J_FLOOR,
            scheme: AngleScheme::EulerMaruyama,
        }
    }
}

impl SwarmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.speed >= 0.0 && self.nu >= 0.0 && self.noise >= 0.0) {
            return Err(Error::param("swarm", "speed, nu and noise must be nonnegative"));
        }
        if !(self.radius > 0.0) {
            return Err(Error::param("radius", "must be positive"));
        }
        if !(self.lengths[0] > 0.0 && self.lengths[1] > 0.0) {
            return Err(Error::param("lengths", "must be positive"));
        }
        Ok(())
    }

    /// Kinetic parameters of the mean-field limit: ε = 1/ν, d = D/ν.
    pub fn kinetic_params(&self) -> Result<KineticParams> {
        if !(self.nu > 0.0 && self.noise > 0.0) {
            return Err(Error::param("nu", "the mean-field match needs nu > 0 and noise > 0"));
        }
        Ok(KineticParams {
            epsilon: 1.0 / self.nu,
            d: self.noise / self.nu,
            eta0: 0,
            k: 1.0,
        })
    }

    fn max_distance(&self) -> f64 {
        (0.5 * self.lengths[0]).hypot(0.5 * self.lengths[1])
    }
}

#[derive(Debug, Clone)]
pub struct Swarm {
    pub positions: Vec<[f64; 2]>,
    pub angles: Vec<f64>,
    pub params: SwarmParams,
    pub seed: u64,
    pub steps: u64,
    pub t: f64,
}

/// Draws from `density` on [0, 2π) by rejection against `bound ≥ max density`.
pub fn sample_angles<R: Rng>(n: usize, density: impl Fn(f64) -> f64, bound: f64, rng: &mut R) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let a = rng.random_range(0.0..2.0 * PI);
        if rng.random_range(0.0..bound) < density(a) {
            out.push(a);
        }
    }
    out
}

/// VMF angles with noise d and mean direction φ, by rejection.
pub fn sample_vmf<R: Rng>(n: usize, d: f64, phi: f64, rng: &mut R) -> Vec<f64> {
    sample_angles(n, |a| (((a - phi).cos() - 1.0) / d).exp(), 1.0, rng)
}

impl Swarm {
    pub fn new(positions: Vec<[f64; 2]>, angles: Vec<f64>, params: SwarmParams, seed: u64) -> Result<Self> {
        params.validate()?;
        if positions.len() != angles.len() {
            return Err(Error::GridMismatch("positions and angles differ in length".into()));
        }
        let mut s = Self {
            positions,
            angles,
            params,
            seed,
            steps: 0,
            t: 0.0,
        };
        s.wrap();
        Ok(s)
    }

    /// N particles uniform in space with angles drawn from `density` (bounded by `bound`).
    pub fn homogeneous(
        n: usize,
        params: SwarmParams,
        seed: u64,
        density: impl Fn(f64) -> f64,
        bound: f64,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // stream u64::MAX is never used by a particle
        rng.set_stream(u64::MAX);
        let positions = (0..n)
            .map(|_| {
                [
                    rng.random_range(0.0..params.lengths[0]),
                    rng.random_range(0.0..params.lengths[1]),
                ]
            })
            .collect();
        let angles = sample_angles(n, density, bound, &mut rng);
        Self::new(positions, angles, params, seed)
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    fn wrap(&mut self) {
        let l = self.params.lengths;
        for p in &mut self.positions {
            p[0] = p[0].rem_euclid(l[0]);
            p[1] = p[1].rem_euclid(l[1]);
        }
    }

    /// J_k = Σ_{|X_j − X_k| ≤ R} V_j (self included) for every k.
    pub fn neighbour_currents(&self) -> Vec<[f64; 2]> {
        let p = &self.params;
        let v: Vec<[f64; 2]> = self.angles.iter().map(|b| [b.cos(), b.sin()]).collect();
        if p.radius >= p.max_distance() {
            let total = v.iter().fold([0.0; 2], |a, b| [a[0] + b[0], a[1] + b[1]]);
            return vec![total; v.len()];
        }
        let nc = [
            (p.lengths[0] / p.radius).floor() as usize,
            (p.lengths[1] / p.radius).floor() as usize,
        ];
        if nc[0] < 3 || nc[1] < 3 {
            return (0..v.len())
                .into_par_iter()
                .map(|k| {
                    let mut j = [0.0; 2];
                    for (q, vq) in self.positions.iter().zip(&v) {
                        if self.within(self.positions[k], *q) {
                            j[0] += vq[0];
                            j[1] += vq[1];
                        }
                    }
                    j
                })
                .collect();
        }
        let cells = CellList::build(&self.positions, p.lengths, nc);
        (0..v.len())
            .into_par_iter()
            .map(|k| {
                let x = self.positions[k];
                let c = cells.cell_of(x);
                let mut j = [0.0; 2];
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        for &q in cells.members(c[0] as i64 + dx, c[1] as i64 + dy) {
                            if self.within(x, self.positions[q]) {
                                j[0] += v[q][0];
                                j[1] += v[q][1];
                            }
                        }
                    }
                }
                j
            })
            .collect()
    }

    fn within(&self, a: [f64; 2], b: [f64; 2]) -> bool {
        let l = self.params.lengths;
        let mut r2 = 0.0;
        for i in 0..2 {
            let mut d = (a[i] - b[i]).abs();
            if d > 0.5 * l[i] {
                d = l[i] - d;
            }
            r2 += d * d;
        }
        r2 <= self.params.radius * self.params.radius
    }

    /// Standard normal increment of particle k at the current step.
    fn normal(&self, k: usize) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(k as u64);
        rng.set_word_pos(self.steps as u128 * WORDS_PER_STEP);
        StandardNormal.sample(&mut rng)
    }

    /// Writes `k,x1,x2,beta` rows with 17 significant digits.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut s = String::from("k,x1,x2,beta\n");
        for (k, (x, b)) in self.positions.iter().zip(&self.angles).enumerate() {
            let _ = writeln!(s, "{k},{:.16e},{:.16e},{:.16e}", x[0], x[1], b);
        }
        std::fs::write(path, s)?;
        Ok(())
    }
}

struct CellList {
    nc: [usize; 2],
    size: [f64; 2],
    start: Vec<usize>,
    items: Vec<usize>,
}

impl CellList {
    fn build(pos: &[[f64; 2]], lengths: [f64; 2], nc: [usize; 2]) -> Self {
        let size = [lengths[0] / nc[0] as f64, lengths[1] / nc[1] as f64];
        let mut me = Self {
            nc,
            size,
            start: vec![0; nc[0] * nc[1] + 1],
            items: vec![0; pos.len()],
        };
        let ids: Vec<usize> = pos.iter().map(|&x| me.index(me.cell_of(x))).collect();
        for &c in &ids {
            me.start[c + 1] += 1;
        }
        for c in 0..nc[0] * nc[1] {
            me.start[c + 1] += me.start[c];
        }
        let mut fill = me.start.clone();
        for (k, &c) in ids.iter().enumerate() {
            me.items[fill[c]] = k;
            fill[c] += 1;
        }
        me
    }

    fn cell_of(&self, x: [f64; 2]) -> [usize; 2] {
        [
            ((x[0] / self.size[0]) as usize).min(self.nc[0] - 1),
            ((x[1] / self.size[1]) as usize).min(self.nc[1] - 1),
        ]
    }

    fn index(&self, c: [usize; 2]) -> usize {
        c[1] * self.nc[0] + c[0]
    }

    fn members(&self, cx: i64, cy: i64) -> &[usize] {
        let c = [
            cx.rem_euclid(self.nc[0] as i64) as usize,
            cy.rem_euclid(self.nc[1] as i64) as usize,
        ];
        let i = self.index(c);
        &self.items[self.start[i]..self.start[i + 1]]
    }
}

/// ν sin(β̄ − β) with β̄ the direction of J; zero when |J| < j_floor.
fn drift(nu: f64, j: [f64; 2], beta: f64, j_floor: f64) -> f64 {
    let m = j[0].hypot(j[1]);
    if m < j_floor {
        return 0.0;
    }
    let (s, c) = beta.sin_cos();
    nu * (j[1] * c - j[0] * s) / m
}

/// One step of length dt; neighbours are evaluated at the start of the step.
pub fn swarm_step(s: &Swarm, dt: f64) -> Result<Swarm> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", "must be positive"));
    }
    let p = s.params;
    let jk = if p.nu > 0.0 {
        s.neighbour_currents()
    } else {
        vec![[0.0; 2]; s.len()]
    };
    let sigma = (2.0 * p.noise * dt).sqrt();
    let updated: Vec<([f64; 2], f64)> = (0..s.len())
        .into_par_iter()
        .map(|k| {
            let b0 = s.angles[k];
            let dw = if p.noise > 0.0 { sigma * s.normal(k) } else { 0.0 };
            let a0 = drift(p.nu, jk[k], b0, p.j_floor);
            let x = s.positions[k];
            match p.scheme {
                AngleScheme::EulerMaruyama => {
                    let b1 = b0 + a0 * dt + dw;
                    ([x[0] + p.speed * b0.cos() * dt, x[1] + p.speed * b0.sin() * dt], b1)
                }
                AngleScheme::Heun => {
                    let pred = b0 + a0 * dt + dw;
                    let a1 = drift(p.nu, jk[k], pred, p.j_floor);
                    let b1 = b0 + 0.5 * (a0 + a1) * dt + dw;
                    let vx = 0.5 * (b0.cos() + b1.cos());
                    let vy = 0.5 * (b0.sin() + b1.sin());
                    ([x[0] + p.speed * vx * dt, x[1] + p.speed * vy * dt], b1)
                }
            }
        })
        .collect();
    let mut out = s.clone();
    for (k, (x, b)) in updated.into_iter().enumerate() {
        out.positions[k] = x;
        out.angles[k] = b.rem_euclid(2.0 * PI);
    }
    out.wrap();
    out.steps += 1;
    out.t += dt;
    Ok(out)
}

/// Advances by `t_final` with equal steps no larger than `dt`.
pub fn run_swarm(s: &Swarm, t_final: f64, dt: f64) -> Result<Swarm> {
    if !(t_final >= 0.0) {
        return Err(Error::param("T", "must be nonnegative"));
    }
    let n = (t_final / dt * (1.0 - 1e-12)).ceil() as usize;
    let mut cur = s.clone();
    if n == 0 {
        return Ok(cur);
    }
    let h = t_final / n as f64;
    for _ in 0..n {
        cur = swarm_step(&cur, h)?;
    }
    Ok(cur)
}

/// Kernel estimate of f and the number of empty spatial cells.
#[derive(Debug, Clone)]
pub struct DensityEstimate {
    pub field: KineticField,
    pub empty_cells: usize,
}

/// Histogram in x (nearest cell) and a wrapped Gaussian kernel in α with
/// standard deviation `bandwidth` (0: nearest angular node). Each particle
/// carries mass/N and its kernel is normalised on the grid, so the estimate
/// has total mass `mass` exactly.
pub fn empirical_density(
    s: &Swarm,
    grid_x: &TorusGrid,
    grid_w: &AngularGrid,
    bandwidth: f64,
    params: KineticParams,
    mass: f64,
) -> Result<DensityEstimate> {
    if s.len() < 1000 {
        return Err(Error::TooFewSamples {
            needed: 1000,
            got: s.len(),
        });
    }
    if !(bandwidth >= 0.0) {
        return Err(Error::param("bandwidth", "must be nonnegative"));
    }
    let dim = grid_x.dim();
    for a in 0..dim {
        let l = grid_x.lengths()[a];
        if (l - s.params.lengths[a]).abs() > 1e-12 * l {
            return Err(Error::GridMismatch(format!("grid length {l} differs from the swarm domain along axis {a}")));
        }
    }
    let nw = grid_w.n_modes();
    let h = grid_w.weight();
    let mut values = vec![0.0; grid_x.len() * nw];
    let wk = mass / s.len() as f64 / grid_x.cell_volume();
    let mut kern = vec![0.0; nw];
    for (x, &b) in s.positions.iter().zip(&s.angles) {
        let mut idx = [0i64; 2];
        for a in 0..dim {
            idx[a] = (x[a] / grid_x.spacing(a)).floor() as i64;
        }
        let cell = grid_x.flatten_wrapped(idx);
        if bandwidth == 0.0 {
            let j = ((b / h).round() as i64).rem_euclid(nw as i64) as usize;
            values[cell * nw + j] += wk / h;
            continue;
        }
        let mut sum = 0.0;
        for (j, a) in grid_w.nodes().iter().enumerate() {
            let mut d = (a - b).rem_euclid(2.0 * PI);
            if d > PI {
                d -= 2.0 * PI;
            }
            let mut k = 0.0;
            for m in -2..=2 {
                let z = (d + 2.0 * PI * m as f64) / bandwidth;
                k += (-0.5 * z * z).exp();
            }
            kern[j] = k;
            sum += k;
        }
        let scale = wk / (sum * h);
        for j in 0..nw {
            values[cell * nw + j] += kern[j] * scale;
        }
    }
    let empty_cells = (0..grid_x.len())
        .filter(|&i| values[i * nw..(i + 1) * nw].iter().all(|v| *v == 0.0))
        .count();
    let field = KineticField::new(grid_x.clone(), grid_w.clone(), values, params, Mode::Nonlinear)?;
    Ok(DensityEstimate { field, empty_cells })
}

/// Angular histogram of the swarm on the grid's nodes, normalised to unit mass.
pub fn angular_histogram(s: &Swarm, grid_w: &AngularGrid) -> Vec<f64> {
    let nw = grid_w.n_modes();
    let h = grid_w.weight();
    let mut out = vec![0.0; nw];
    let w = 1.0 / (s.len() as f64 * h);
    for &b in &s.angles {
        let j = ((b / h).round() as i64).rem_euclid(nw as i64) as usize;
        out[j] += w;
    }
    out
}

/// Kolmogorov–Smirnov distance between the angles (mod 2π) and the uniform law.
pub fn ks_uniform(angles: &[f64]) -> f64 {
    let mut u: Vec<f64> = angles.iter().map(|a| a.rem_euclid(2.0 * PI) / (2.0 * PI)).collect();
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    u.iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).max((i + 1) as f64 / n - x))
        .fold(0.0, f64::max)
}

/// Settings of the space-homogeneous particle/kinetic comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ComparisonConfig {
    pub n_particles: usize,
    pub nu: f64,
    pub noise: f64,
    pub dt_particles: f64,
    pub dt_kinetic: f64,
    pub n_alpha: usize,
    pub checkpoints: Vec<f64>,
    pub seed: u64,
    /// Initial angular law (1 + a cos(α − φ))/(2π).
    pub amplitude: f64,
    pub phase: f64,
    pub scheme: AngleScheme,
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        Self {
            n_particles: 100_000,
            nu: 1.0,
            noise: 0.25,
            dt_particles: 1e-3,
            dt_kinetic: 1e-3,
            n_alpha: 64,
            checkpoints: vec![0.1, 0.5, 1.0],
            seed: 11,
            amplitude: 0.6,
            phase: 0.3,
            scheme: AngleScheme::EulerMaruyama,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonPoint {
    pub t: f64,
    /// ∫ |histogram − f| dω with both normalised to unit mass.
    pub l1: f64,
    /// 5 N^{-1/2} · 2π
    pub bound: f64,
}

/// Runs a homogeneous swarm with global alignment (R beyond the domain
/// diameter) next to the space-homogeneous SOK equation with ε = 1/ν and
/// d = D/ν, and compares angular marginals at the checkpoints.
pub fn homogeneous_comparison(cfg: &ComparisonConfig) -> Result<Vec<ComparisonPoint>> {
    if cfg.checkpoints.windows(2).any(|w| w[1] <= w[0]) || cfg.checkpoints.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::param("checkpoints", "must be nonnegative and increasing"));
    }
    if !(cfg.amplitude.abs() < 1.0) {
        return Err(Error::param("amplitude", "must lie in (-1, 1)"));
    }
    let params = SwarmParams {
        speed: 1.0,
        nu: cfg.nu,
        noise: cfg.noise,
        radius: 1.0,
        lengths: [1.0, 1.0],
        j_floor: J_FLOOR,
        scheme: cfg.scheme,
    };
    let kp = params.kinetic_params()?;
    let (a, ph) = (cfg.amplitude, cfg.phase);
    let law = move |x: f64| (1.0 + a * (x - ph).cos()) / (2.0 * PI);
    let mut swarm = Swarm::homogeneous(cfg.n_particles, params, cfg.seed, law, (1.0 + a.abs()) / (2.0 * PI))?;
    let gx = TorusGrid::slab(8, 1.0)?;
    let gw = AngularGrid::new(cfg.n_alpha)?;
    let col = gw.sample(law);
    let values: Vec<f64> = (0..gx.len()).flat_map(|_| col.iter().copied()).collect();
    let mut f = KineticField::new(gx, gw.clone(), values, kp, Mode::Nonlinear)?;
    let scfg = crate::kinetic::SokStepperConfig {
        dt: cfg.dt_kinetic,
        ..Default::default()
    };
    let opts = crate::kinetic::SokRunOptions {
        monitor_every: 0,
        snapshot_every: 0,
    };
    let bound = 5.0 * 2.0 * PI / (cfg.n_particles as f64).sqrt();
    let mut out = Vec::with_capacity(cfg.checkpoints.len());
    let mut now = 0.0;
    for &t in &cfg.checkpoints {
        let span = t - now;
        if span > 0.0 {
            swarm = run_swarm(&swarm, span, cfg.dt_particles)?;
            f = crate::kinetic::run_sok(&f, span, &scfg, &opts)?.last;
        }
        now = t;
        let hist = angular_histogram(&swarm, &gw);
        let l1 = gw.weight() * hist.iter().zip(f.column(0)).map(|(p, q)| (p - q).abs()).sum::<f64>();
        out.push(ComparisonPoint { t, l1, bound });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(nu: f64, noise: f64, radius: f64) -> SwarmParams {
        SwarmParams {
            speed: 1.0,
            nu,
            noise,
            radius,
            lengths: [1.0, 1.0],
            ..Default::default()
        }
    }

    #[test]
    fn free_flight() {
        let s = Swarm::new(vec![[0.2, 0.3], [0.9, 0.95]], vec![0.0, 1.0], params(0.0, 0.0, 0.1), 1).unwrap();
        let t = run_swarm(&s, 0.5, 0.01).unwrap();
        assert_eq!(t.angles, s.angles);
        assert!((t.positions[0][0] - 0.7).abs() < 1e-12);
        let x = (0.9 + 0.5 * 1f64.cos()).rem_euclid(1.0);
        let y = (0.95 + 0.5 * 1f64.sin()).rem_euclid(1.0);
        assert!((t.positions[1][0] - x).abs() < 1e-12 && (t.positions[1][1] - y).abs() < 1e-12);
        assert!(t.positions.iter().all(|p| (0.0..1.0).contains(&p[0]) && (0.0..1.0).contains(&p[1])));
    }

    #[test]
    fn pure_noise_becomes_uniform() {
        let n = 20_000;
        let s = Swarm::new(vec![[0.5; 2]; n], vec![0.0; n], params(0.0, 1.0, 0.1), 3).unwrap();
        let t = run_swarm(&s, 3.0, 0.05).unwrap();
        let ks = ks_uniform(&t.angles);
        assert!(ks < 3.0 / (n as f64).sqrt(), "{ks}");
    }

    #[test]
    fn two_body_alignment_matches_ode() {
        let p = SwarmParams { speed: 0.0, ..params(2.0, 0.0, 0.2) };
        let s = Swarm::new(vec![[0.5, 0.5], [0.55, 0.5]], vec![0.2, 2.6], p, 0).unwrap();
        let mut cur = s.clone();
        let mut prev = 2.4f64;
        let dt = 1e-4;
        for _ in 0..10 {
            cur = run_swarm(&cur, 0.1, dt).unwrap();
            let rel = (cur.angles[1] - cur.angles[0]).abs();
            assert!(rel < prev);
            prev = rel;
        }
        // tan(Δ/4) = tan(Δ₀/4) e^{−νt}
        let exact = 4.0 * ((2.4f64 / 4.0).tan() * (-2.0f64).exp()).atan();
        assert!((prev - exact).abs() < 1e-3, "{prev} {exact}");
    }

    #[test]
    fn cell_list_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 400;
        let pos: Vec<[f64; 2]> = (0..n).map(|_| [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)]).collect();
        let ang: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        let s = Swarm::new(pos, ang, params(1.0, 0.1, 0.15), 1).unwrap();
        let fast = s.neighbour_currents();
        for k in 0..n {
            let mut j = [0.0; 2];
            for q in 0..n {
                if s.within(s.positions[k], s.positions[q]) {
                    j[0] += s.angles[q].cos();
                    j[1] += s.angles[q].sin();
                }
            }
            assert!((j[0] - fast[k][0]).abs() < 1e-12 && (j[1] - fast[k][1]).abs() < 1e-12);
        }
    }

    #[test]
    fn reproducible_across_thread_counts() {
        let s = Swarm::homogeneous(2000, params(1.0, 0.3, 0.1), 9, |_| 1.0, 1.0).unwrap();
        let a = run_swarm(&s, 0.05, 0.01).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| run_swarm(&s, 0.05, 0.01).unwrap());
        assert_eq!(a.angles, b.angles);
        assert_eq!(a.positions, b.positions);
    }

    #[test]
    fn density_estimates() {
        let gx = TorusGrid::new(&[8, 8], &[1.0, 1.0]).unwrap();
        let gw = AngularGrid::new(16).unwrap();
        let kp = KineticParams::default();
        let n = 4000;
        let s = Swarm::new(vec![[0.3, 0.6]; n], vec![1.0; n], params(1.0, 0.1, 0.1), 0).unwrap();
        let e = empirical_density(&s, &gx, &gw, 0.2, kp, 2.0).unwrap();
        assert!((e.field.total_mass() - 2.0).abs() < 1e-12);
        assert_eq!(e.empty_cells, 63);
        let hist = empirical_density(&s, &gx, &gw, 0.0, kp, 1.0).unwrap();
        assert_eq!(hist.field.values().iter().filter(|v| **v > 0.0).count(), 1);

        let u = Swarm::homogeneous(64_000, params(1.0, 0.1, 0.1), 4, |_| 1.0, 1.0).unwrap();
        let e = empirical_density(&u, &gx, &gw, 0.0, kp, 1.0).unwrap();
        let bins = (gx.len() * gw.n_modes()) as f64;
        let mean = 1.0 / (gx.volume() * 2.0 * PI);
        // per-bin counts are binomial with mean N/bins
        let tol = 5.0 / (64_000.0 / bins).sqrt() * mean;
        assert!(e.field.values().iter().all(|v| (v - mean).abs() < tol));
        let few = Swarm::new(vec![[0.0; 2]; 10], vec![0.0; 10], params(1.0, 0.1, 0.1), 0).unwrap();
        assert!(empirical_density(&few, &gx, &gw, 0.0, kp, 1.0).is_err());
    }

    #[test]
    fn vmf_sampling_matches_density() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let ang = sample_vmf(n, 0.5, 1.0, &mut rng);
        let s = Swarm::new(vec![[0.0; 2]; n], ang, params(1.0, 0.1, 0.1), 0).unwrap();
        let gw = AngularGrid::new(32).unwrap();
        let hist = angular_histogram(&s, &gw);
        let m = crate::equilibria::vmf_samples(&gw, 0.5, 1.0);
        let l1: f64 = gw.weight() * hist.iter().zip(&m).map(|(a, b)| (a - b).abs()).sum::<f64>();
        assert!(l1 < 0.03, "{l1}");
    }
}
