//! Hilbert expansion f^ε = f₀ + ε f₁ + ε² f₂^ε around an SOH solution, and the
//! ε-weighted energies of the remainder.
//!
//! Tilde quantities are divided by M₀ = M_{Ω₀(t,x)}: f̃ = f/M₀. All norms are
//! L²(M₀ dω dx) norms of tilde fields.

mod study;

pub use study::{
    f1_history, limit_study, loglog_slope, EpsilonOutcome, F1Norms, LimitStudy, LimitStudyConfig, SmoothProfile,
    StudyRow, StudySummary,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collision::LinearizedOperator;
use crate::equilibria::{equilibrium_values, vmf_samples, Coefficients};
use crate::error::{ensure_finite, Error, Result};
use crate::gci::{solve_gci_ode, GciSolution};
use crate::hydro::{soh_advance, soh_rhs, viscous_d0, HydroConfig, MacroState};
use crate::kinetic::KineticField;
use crate::sphere::{AngularGrid, ThetaGrid, TorusGrid};

/// Largest SOH-consistency residual accepted by [`solve_f1`].
pub const SOLVABILITY_TOLERANCE: f64 = 1e-4;

/// Shared pieces for building f₁ at many states.
#[derive(Debug, Clone)]
pub struct ExpansionContext {
    grid_w: AngularGrid,
    coeffs: Coefficients,
    hydro: HydroConfig,
    gci: GciSolution,
    op: LinearizedOperator,
    fd_delta: f64,
    tolerance: f64,
}

impl ExpansionContext {
    pub fn new(grid_w: &AngularGrid, coeffs: &Coefficients, hydro: HydroConfig, theta_nodes: usize) -> Result<Self> {
        if coeffs.n != 2 {
            return Err(Error::param("n", "the expansion is built on the circle only (n = 2)"));
        }
        let gci = solve_gci_ode(coeffs.d, 2, &ThetaGrid::gauss_legendre(theta_nodes)?)?;
        let op = LinearizedOperator::new(grid_w, coeffs.d, 0.0)?;
        Ok(Self {
            grid_w: grid_w.clone(),
            coeffs: *coeffs,
            hydro,
            gci,
            op,
            fd_delta: 1e-3,
            tolerance: SOLVABILITY_TOLERANCE,
        })
    }

    /// Half-width of the central difference used for ∂_t f₁.
    pub fn with_fd_delta(mut self, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::param("fd_delta", "must be positive"));
        }
        self.fd_delta = delta;
        Ok(self)
    }

    pub fn with_tolerance(mut self, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::param("tolerance", "must be positive"));
        }
        self.tolerance = tol;
        Ok(self)
    }

    pub fn grid_w(&self) -> &AngularGrid {
        &self.grid_w
    }

    pub fn coeffs(&self) -> &Coefficients {
        &self.coeffs
    }

    pub fn hydro(&self) -> &HydroConfig {
        &self.hydro
    }

    pub fn gci(&self) -> &GciSolution {
        &self.gci
    }

    pub fn fd_delta(&self) -> f64 {
        self.fd_delta
    }

    fn check_state(&self, state: &MacroState) -> Result<()> {
        let c = state.coeffs();
        if (c.d - self.coeffs.d).abs() > 1e-14 * c.d || c.eta0 != self.coeffs.eta0 || c.k != self.coeffs.k {
            return Err(Error::param("state", "SOH coefficients differ from the expansion context"));
        }
        Ok(())
    }
}

/// f₁ at one time, with the consistency residuals of its right-hand side.
#[derive(Debug, Clone)]
pub struct F1Field {
    pub t: f64,
    pub f1: Vec<f64>,
    pub f1_tilde: Vec<f64>,
    /// M₀ samples, row-major like the fields.
    pub m0: Vec<f64>,
    /// max_x |⟨r⟩_{M₀}|: the density equation residual.
    pub mean_residual: f64,
    /// max_x |⟨ψ r⟩_{M₀}| / ‖ψ‖_{M₀}: the GCI component removed before inverting.
    pub gci_residual: f64,
}

impl F1Field {
    pub fn solvability_residual(&self) -> f64 {
        self.mean_residual.max(self.gci_residual)
    }
}

/// Solves 𝓛₀ f̃₁ = −r/d with r = (∂_t + ω·∇_x + η₀∂_α((τ·D₀)·)) f₀ / M₀,
/// after projecting r onto the orthogonal complement of the GCI ψ.
/// ∂_t(ρ₀, φ₀) come from the SOH right-hand side.
pub fn solve_f1(ctx: &ExpansionContext, state: &MacroState) -> Result<F1Field> {
    let f = assemble_f1(ctx, state)?;
    let res = f.solvability_residual();
    if res > ctx.tolerance {
        return Err(Error::Residual {
            context: "f1 solvability (state does not satisfy SOH)",
            residual: res,
            tolerance: ctx.tolerance,
        });
    }
    Ok(f)
}

struct Column {
    f1: Vec<f64>,
    f1_tilde: Vec<f64>,
    m0: Vec<f64>,
    mean: f64,
    gci: f64,
}

fn assemble_f1(ctx: &ExpansionContext, state: &MacroState) -> Result<F1Field> {
    ctx.check_state(state)?;
    let (drho, dphi) = soh_rhs(state, &ctx.hydro)?;
    let g = state.grid();
    let dim = g.dim();
    let grho = g.gradient(state.rho());
    let gphi = state.grad_phi();
    let d0 = viscous_d0(state, ctx.coeffs.k);
    let eta = ctx.coeffs.eta0 as f64;
    let d = ctx.coeffs.d;
    let gw = &ctx.grid_w;
    let cols: Vec<Result<Column>> = (0..g.len())
        .into_par_iter()
        .map(|i| {
            let rho = state.rho()[i];
            let phi = state.phi()[i];
            let (sp, cp) = phi.sin_cos();
            let delta = -sp * d0[i][0] + cp * d0[i][1];
            let r: Vec<f64> = gw
                .cos()
                .iter()
                .zip(gw.sin())
                .map(|(&ca, &sa)| {
                    let om = [ca, sa];
                    let s = sa * cp - ca * sp;
                    let c = ca * cp + sa * sp;
                    let mut adv_rho = 0.0;
                    let mut adv_phi = 0.0;
                    for a in 0..dim {
                        adv_rho += om[a] * grho[a][i];
                        adv_phi += om[a] * gphi[a][i];
                    }
                    drho[i] + adv_rho + rho * s * (dphi[i] + adv_phi) / d - eta * rho * delta * s * (1.0 + c / d)
                })
                .collect();
            let op = ctx.op.with_direction(phi);
            let psi = ctx.gci.psi_on(gw, phi);
            let pp = op.inner(&psi, &psi);
            let pr = op.inner(&psi, &r);
            let beta = pr / pp;
            let rhs: Vec<f64> = r.iter().zip(&psi).map(|(r, p)| -(r - beta * p) / d).collect();
            let inv = op.invert_l0(&rhs)?;
            let m0 = op.m0().to_vec();
            let f1: Vec<f64> = inv.solution.iter().zip(&m0).map(|(u, m)| u * m).collect();
            Ok(Column {
                f1,
                f1_tilde: inv.solution,
                m0,
                mean: op.mean(&r).abs(),
                gci: pr.abs() / pp.sqrt(),
            })
        })
        .collect();
    let nw = gw.n_modes();
    let mut out = F1Field {
        t: state.t(),
        f1: Vec::with_capacity(g.len() * nw),
        f1_tilde: Vec::with_capacity(g.len() * nw),
        m0: Vec::with_capacity(g.len() * nw),
        mean_residual: 0.0,
        gci_residual: 0.0,
    };
    for c in cols {
        let c = c?;
        out.f1.extend(c.f1);
        out.f1_tilde.extend(c.f1_tilde);
        out.m0.extend(c.m0);
        out.mean_residual = out.mean_residual.max(c.mean);
        out.gci_residual = out.gci_residual.max(c.gci);
    }
    ensure_finite(&out.f1, "f1")?;
    Ok(out)
}

/// ∂ of a row-major (x, α) field along spatial axis `axis`.
pub(crate) fn dx_field(gx: &TorusGrid, nw: usize, u: &[f64], axis: usize, order: u32) -> Vec<f64> {
    let nx = gx.len();
    let mut out = vec![0.0; u.len()];
    let mut col = vec![0.0; nx];
    for j in 0..nw {
        for i in 0..nx {
            col[i] = u[i * nw + j];
        }
        for (i, v) in gx.d(&col, axis, order).into_iter().enumerate() {
            out[i * nw + j] = v;
        }
    }
    out
}

/// ∂_α^order of a row-major (x, α) field.
pub(crate) fn da_field(gw: &AngularGrid, u: &[f64], order: u32) -> Vec<f64> {
    let nw = gw.n_modes();
    let mut out = Vec::with_capacity(u.len());
    for col in u.chunks(nw) {
        out.extend(gw.d(col, order));
    }
    out
}

/// h₀ = −(1/M₀)(∂_t + ω·∇_x + η₀∂_α((τ·D₀)·))M₀ evaluated with spectral
/// derivatives of the sampled M₀.
pub fn h0_direct(ctx: &ExpansionContext, state: &MacroState) -> Result<Vec<f64>> {
    ctx.check_state(state)?;
    let (_, dphi) = soh_rhs(state, &ctx.hydro)?;
    let g = state.grid();
    let gw = &ctx.grid_w;
    let nw = gw.n_modes();
    let m0 = equilibrium_values(gw, &vec![1.0; g.len()], state.phi(), ctx.coeffs.d);
    // M₀ depends on α − φ, so ∂_φ M₀ = −∂_α M₀
    let dam = da_field(gw, &m0, 1);
    let mut acc: Vec<f64> = dam
        .iter()
        .enumerate()
        .map(|(idx, v)| -v * dphi[idx / nw])
        .collect();
    for a in 0..g.dim() {
        let dm = dx_field(g, nw, &m0, a, 1);
        let om = if a == 0 { gw.cos() } else { gw.sin() };
        for (idx, v) in dm.iter().enumerate() {
            acc[idx] += om[idx % nw] * v;
        }
    }
    if ctx.coeffs.eta0 == 1 {
        let d0 = viscous_d0(state, ctx.coeffs.k);
        let flux: Vec<f64> = m0
            .iter()
            .enumerate()
            .map(|(idx, m)| {
                let (i, j) = (idx / nw, idx % nw);
                m * (-gw.sin()[j] * d0[i][0] + gw.cos()[j] * d0[i][1])
            })
            .collect();
        for (a, v) in acc.iter_mut().zip(da_field(gw, &flux, 1)) {
            *a += v;
        }
    }
    let h: Vec<f64> = acc.iter().zip(&m0).map(|(a, m)| -a / m).collect();
    ensure_finite(&h, "h0")?;
    Ok(h)
}

/// −(1/d)[ω·∂_tΩ₀ + ω⊗ω:∇_xΩ₀ + η₀ D₀·P_{ω⊥}Ω₀].
pub fn h0_closed_form(ctx: &ExpansionContext, state: &MacroState) -> Result<Vec<f64>> {
    ctx.check_state(state)?;
    let (_, dphi) = soh_rhs(state, &ctx.hydro)?;
    let g = state.grid();
    let gw = &ctx.grid_w;
    let gphi = state.grad_phi();
    let d0 = viscous_d0(state, ctx.coeffs.k);
    let eta = ctx.coeffs.eta0 as f64;
    let d = ctx.coeffs.d;
    let mut out = Vec::with_capacity(g.len() * gw.n_modes());
    for i in 0..g.len() {
        let (sp, cp) = state.phi()[i].sin_cos();
        let delta = -sp * d0[i][0] + cp * d0[i][1];
        for (&ca, &sa) in gw.cos().iter().zip(gw.sin()) {
            let om = [ca, sa];
            let s = sa * cp - ca * sp;
            let c = ca * cp + sa * sp;
            let adv: f64 = (0..g.dim()).map(|a| om[a] * gphi[a][i]).sum();
            out.push(-(s * (dphi[i] + adv) - eta * delta * c * s) / d);
        }
    }
    Ok(out)
}

/// Everything the remainder analysis needs at one time.
#[derive(Debug, Clone)]
pub struct ExpansionSlice {
    pub t: f64,
    pub state: MacroState,
    pub grid_w: AngularGrid,
    /// ρ₀ M₀
    pub f0: Vec<f64>,
    pub f1: F1Field,
    /// ∂_t f₁ by central differences of solve_f1.
    pub dt_f1: Vec<f64>,
    pub d0: Vec<[f64; 2]>,
    pub h1: Vec<f64>,
}

/// Pointwise checks of a slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceInvariants {
    /// max_x |∫f₀ dω − ρ₀|
    pub f0_mass_error: f64,
    /// max_x |⟨f̃₁⟩_{M₀}|
    pub f1_mean: f64,
    /// max_x |⟨(ω·Ω₀⊥) f̃₁⟩_{M₀}|
    pub f1_current_perp: f64,
    /// max_x |⟨(ω·Ω₀) f̃₁⟩_{M₀}|
    pub f1_current_par: f64,
}

/// Builds f₀, f₁, ∂_t f₁ and h₁ = −(1/M₀)(∂_t + ω·∇_x + η₀∂_α((τ·D₀)·)) f₁.
pub fn expansion_slice(ctx: &ExpansionContext, state: &MacroState) -> Result<ExpansionSlice> {
    let f1 = solve_f1(ctx, state)?;
    let delta = ctx.fd_delta;
    let fp = assemble_f1(ctx, &soh_advance(state, delta, &ctx.hydro)?)?;
    let fm = assemble_f1(ctx, &soh_advance(state, -delta, &ctx.hydro)?)?;
    let dt_f1: Vec<f64> = fp.f1.iter().zip(&fm.f1).map(|(p, m)| (p - m) / (2.0 * delta)).collect();
    let g = state.grid();
    let gw = &ctx.grid_w;
    let nw = gw.n_modes();
    let mut acc = dt_f1.clone();
    for a in 0..g.dim() {
        let om = if a == 0 { gw.cos() } else { gw.sin() };
        for (idx, v) in dx_field(g, nw, &f1.f1, a, 1).iter().enumerate() {
            acc[idx] += om[idx % nw] * v;
        }
    }
    let d0 = viscous_d0(state, ctx.coeffs.k);
    if ctx.coeffs.eta0 == 1 {
        let flux: Vec<f64> = f1
            .f1
            .iter()
            .enumerate()
            .map(|(idx, v)| {
                let (i, j) = (idx / nw, idx % nw);
                v * (-gw.sin()[j] * d0[i][0] + gw.cos()[j] * d0[i][1])
            })
            .collect();
        for (a, v) in acc.iter_mut().zip(da_field(gw, &flux, 1)) {
            *a += v;
        }
    }
    let h1: Vec<f64> = acc.iter().zip(&f1.m0).map(|(a, m)| -a / m).collect();
    ensure_finite(&h1, "h1")?;
    let f0 = equilibrium_values(gw, state.rho(), state.phi(), ctx.coeffs.d);
    Ok(ExpansionSlice {
        t: state.t(),
        state: state.clone(),
        grid_w: gw.clone(),
        f0,
        f1,
        dt_f1,
        d0,
        h1,
    })
}

impl ExpansionSlice {
    pub fn grid_x(&self) -> &TorusGrid {
        self.state.grid()
    }

    pub fn m0(&self) -> &[f64] {
        &self.f1.m0
    }

    pub fn space(&self) -> WeightedSpace<'_> {
        WeightedSpace {
            grid_x: self.state.grid(),
            grid_w: &self.grid_w,
            m0: &self.f1.m0,
        }
    }

    pub fn invariants(&self) -> SliceInvariants {
        let gw = &self.grid_w;
        let nw = gw.n_modes();
        let mut out = SliceInvariants {
            f0_mass_error: 0.0,
            f1_mean: 0.0,
            f1_current_perp: 0.0,
            f1_current_par: 0.0,
        };
        for i in 0..self.grid_x().len() {
            let r = i * nw..(i + 1) * nw;
            let m = &self.f1.m0[r.clone()];
            let u = &self.f1.f1_tilde[r.clone()];
            let (sp, cp) = self.state.phi()[i].sin_cos();
            let par: Vec<f64> = gw.cos().iter().zip(gw.sin()).map(|(c, s)| c * cp + s * sp).collect();
            let perp: Vec<f64> = gw.cos().iter().zip(gw.sin()).map(|(c, s)| s * cp - c * sp).collect();
            out.f0_mass_error = out.f0_mass_error.max((gw.integrate(&self.f0[r]) - self.state.rho()[i]).abs());
            out.f1_mean = out.f1_mean.max(gw.pairing(u, m, &vec![1.0; nw]).abs());
            out.f1_current_perp = out.f1_current_perp.max(gw.pairing(u, &perp, m).abs());
            out.f1_current_par = out.f1_current_par.max(gw.pairing(u, &par, m).abs());
        }
        out
    }

    /// ‖f̃₁‖, ‖∂_t f₁/M₀‖ and ‖h₁‖ in L²(M₀).
    pub fn f1_norms(&self) -> [f64; 3] {
        let sp = self.space();
        let dtt: Vec<f64> = self.dt_f1.iter().zip(self.m0()).map(|(v, m)| v / m).collect();
        [
            sp.norm2(&self.f1.f1_tilde).sqrt(),
            sp.norm2(&dtt).sqrt(),
            sp.norm2(&self.h1).sqrt(),
        ]
    }
}

/// Slices of an expansion along a trajectory.
#[derive(Debug, Clone, Default)]
pub struct ExpansionBundle {
    pub slices: Vec<ExpansionSlice>,
}

impl ExpansionBundle {
    pub fn build(ctx: &ExpansionContext, states: &[MacroState]) -> Result<Self> {
        let slices = states.iter().map(|s| expansion_slice(ctx, s)).collect::<Result<_>>()?;
        Ok(Self { slices })
    }

    /// The slice whose time is within 1e-9 of t.
    pub fn at(&self, t: f64) -> Option<&ExpansionSlice> {
        self.slices.iter().find(|s| (s.t - t).abs() <= 1e-9 * t.abs().max(1.0))
    }
}

/// f₂^ε and f̃₂ = f₂^ε / M₀ at one time.
#[derive(Debug, Clone)]
pub struct Remainder {
    pub t: f64,
    pub eps: f64,
    pub f2: Vec<f64>,
    pub f2_tilde: Vec<f64>,
}

/// f₂^ε = (f^ε − f₀ − ε f₁)/ε² with ε taken from the field's parameters.
pub fn extract_remainder(f_eps: &KineticField, slice: &ExpansionSlice) -> Result<Remainder> {
    let gx = slice.grid_x();
    if f_eps.grid_x().n_cells() != gx.n_cells()
        || f_eps.grid_x().lengths() != gx.lengths()
        || f_eps.grid_w().n_modes() != slice.grid_w.n_modes()
    {
        return Err(Error::GridMismatch("kinetic field and expansion use different grids".into()));
    }
    if (f_eps.t() - slice.t).abs() > 1e-9 * slice.t.abs().max(1.0) {
        return Err(Error::GridMismatch(format!(
            "kinetic field at t = {} but expansion at t = {}",
            f_eps.t(),
            slice.t
        )));
    }
    let eps = f_eps.params().epsilon;
    let f2: Vec<f64> = f_eps
        .values()
        .iter()
        .zip(&slice.f0)
        .zip(&slice.f1.f1)
        .map(|((f, a), b)| (f - a - eps * b) / (eps * eps))
        .collect();
    let f2_tilde = f2.iter().zip(slice.m0()).map(|(v, m)| v / m).collect();
    Ok(Remainder {
        t: slice.t,
        eps,
        f2,
        f2_tilde,
    })
}

impl Remainder {
    /// max_x |⟨f̃₂⟩_{M₀}| and max_x |⟨ω f̃₂⟩_{M₀}|.
    pub fn moments(&self, slice: &ExpansionSlice) -> [f64; 2] {
        let gw = &slice.grid_w;
        let nw = gw.n_modes();
        let mut out = [0.0f64; 2];
        for col in self.f2.chunks(nw) {
            let (m, j) = gw.moments(col);
            out[0] = out[0].max(m.abs());
            out[1] = out[1].max(j[0].hypot(j[1]));
        }
        out
    }
}

/// L²(M₀ dω dx) on a (x, α) grid.
#[derive(Debug, Clone, Copy)]
pub struct WeightedSpace<'a> {
    pub grid_x: &'a TorusGrid,
    pub grid_w: &'a AngularGrid,
    pub m0: &'a [f64],
}

/// One sample of the energy functionals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyEntry {
    pub t: f64,
    pub f: [f64; 3],
    pub g: [f64; 3],
    pub h: [f64; 3],
    pub e_total: f64,
    pub g_total: f64,
    pub h_total: f64,
    /// Weighted L², H¹, H² norms of f̃₂.
    pub norms: [f64; 3],
    /// ε^{1/2}, ε, ε^{3/2} times `norms`.
    pub scaled: [f64; 3],
}

impl WeightedSpace<'_> {
    /// ‖u‖²
    pub fn norm2(&self, u: &[f64]) -> f64 {
        let s: f64 = u.iter().zip(self.m0).map(|(v, m)| v * v * m).sum();
        s * self.grid_w.weight() * self.grid_x.cell_volume()
    }

    fn dx(&self, u: &[f64], axis: usize) -> Vec<f64> {
        dx_field(self.grid_x, self.grid_w.n_modes(), u, axis, 1)
    }

    /// Σ_a ‖∂_a u‖² and the derivatives themselves.
    fn grad_x(&self, u: &[f64]) -> (f64, Vec<Vec<f64>>) {
        let d: Vec<Vec<f64>> = (0..self.grid_x.dim()).map(|a| self.dx(u, a)).collect();
        (d.iter().map(|v| self.norm2(v)).sum(), d)
    }

    /// Σ_{a,b} ‖∂_a ∂_b u‖² from the first derivatives.
    fn hess_x(&self, grad: &[Vec<f64>]) -> f64 {
        let dim = self.grid_x.dim();
        let mut s = 0.0;
        for a in 0..dim {
            for b in 0..dim {
                s += self.norm2(&self.dx(&grad[a], b));
            }
        }
        s
    }

    /// The nine functionals for f̃₂ = `f` and h₁ = `h` at scale ε.
    pub fn energy(&self, t: f64, f: &[f64], h: &[f64], eps: f64) -> EnergyEntry {
        let gw = self.grid_w;
        let n0 = self.norm2(f);
        let (nx1, gx) = self.grad_x(f);
        let nxx = self.hess_x(&gx);
        let fa = da_field(gw, f, 1);
        let faa = da_field(gw, f, 2);
        let na1 = self.norm2(&fa);
        let na2 = self.norm2(&faa);
        let na3 = self.norm2(&da_field(gw, f, 3));
        let (nxa, gxa) = self.grad_x(&fa);
        let nxxa = self.hess_x(&gxa);
        let (nxaa, _) = self.grad_x(&faa);

        let (hx1, ghx) = self.grad_x(h);
        let hxx = self.hess_x(&ghx);
        let ha = da_field(gw, h, 1);
        let (hxa, _) = self.grad_x(&ha);
        let ha1 = self.norm2(&ha);
        let ha2 = self.norm2(&da_field(gw, h, 2));

        let e = eps;
        let fs = [e * n0, e * e * nx1 + e * na1, e.powi(3) * nxx + e * e * nxa + e * na2];
        let gs = [na1, e * nxa + na2, e * e * nxxa + e * nxaa + na3];
        let hs = [self.norm2(h), e * hx1 + ha1, e * e * hxx + e * hxa + ha2];
        let l2 = n0;
        let h1 = l2 + nx1 + na1;
        let h2 = h1 + nxx + nxa + na2;
        let norms = [l2.sqrt(), h1.sqrt(), h2.sqrt()];
        EnergyEntry {
            t,
            f: fs,
            g: gs,
            h: hs,
            e_total: fs.iter().sum(),
            g_total: gs.iter().sum(),
            h_total: hs.iter().sum(),
            norms,
            scaled: [e.sqrt() * norms[0], e * norms[1], e.powf(1.5) * norms[2]],
        }
    }
}

/// Energies of a remainder against its slice.
pub fn energy_functionals(rem: &Remainder, slice: &ExpansionSlice) -> EnergyEntry {
    slice.space().energy(rem.t, &rem.f2_tilde, &slice.h1, rem.eps)
}

/// Time series of energies for one ε.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct EnergyReport {
    pub eps: f64,
    pub entries: Vec<EnergyEntry>,
}

/// Result of fitting d𝓔/dt + 𝓖 ≤ C(𝓔 + 𝓗).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AprioriFit {
    pub c: f64,
    pub violation_fraction: f64,
    pub samples: usize,
}

/// Fraction of interior samples that must satisfy the fitted inequality.
pub const APRIORI_COVERAGE: f64 = 0.95;

/// Smallest C ≥ 0 for which the inequality holds at 95% of the interior
/// samples, with d𝓔/dt by centred differences.
pub fn apriori_inequality_monitor(report: &EnergyReport) -> Result<AprioriFit> {
    let e = &report.entries;
    if e.len() < 10 {
        return Err(Error::TooFewSamples {
            needed: 10,
            got: e.len(),
        });
    }
    let mut need: Vec<f64> = (1..e.len() - 1)
        .map(|i| {
            let de = (e[i + 1].e_total - e[i - 1].e_total) / (e[i + 1].t - e[i - 1].t);
            let lhs = de + e[i].g_total;
            let rhs = e[i].e_total + e[i].h_total;
            if lhs <= 0.0 {
                0.0
            } else if rhs > 0.0 {
                lhs / rhs
            } else {
                f64::INFINITY
            }
        })
        .collect();
    need.sort_by(f64::total_cmp);
    let m = need.len();
    let idx = ((APRIORI_COVERAGE * m as f64).ceil() as usize).clamp(1, m) - 1;
    let c = need[idx];
    let violations = need.iter().filter(|&&v| v > c).count();
    Ok(AprioriFit {
        c,
        violation_fraction: violations as f64 / m as f64,
        samples: m,
    })
}

/// M₀ on a grid for a state, row-major.
pub fn m0_field(grid_w: &AngularGrid, state: &MacroState) -> Vec<f64> {
    let d = state.coeffs().d;
    state.phi().iter().flat_map(|&p| vmf_samples(grid_w, d, p)).collect()
}
