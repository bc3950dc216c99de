//! Generalized collision invariants: the polar-angle elliptic problem for
//! g(θ), the profile h(cos θ) = g(θ)/sin θ and the coefficients c2, c3.
//!
//! The weak form ∫ w g′v′ + (n−2)∫ w g v / sin²θ = ∫ w sin θ v with
//! w = sinⁿ⁻²θ e^{(cos θ − 1)/d} is discretised by Galerkin on
//! φ_j = sin(jθ)·E(θ), E = e^{(1 − cos θ)/(2d)}. Every φ_j vanishes like
//! sin θ at both ends, so it lies in V without imposed boundary values, and
//! w E² = sinⁿ⁻²θ keeps the stiffness matrix O(1) even for small d. The
//! shift of the weight by the constant e^{−1/d} leaves the equation
//! unchanged.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::collision::apply_l_omega;
use crate::equilibria::{check_d, vmf_samples};
use crate::error::{Error, Result};
use crate::sphere::{AngularGrid, ThetaGrid};

/// Weighted-L² residual accepted from the solver.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct GciSolution {
    theta_grid: ThetaGrid,
    d: f64,
    n: u32,
    /// Galerkin coefficients of g = E Σ b_j sin(jθ).
    coeffs: Vec<f64>,
    /// u = g/E = Σ b_j sin(jθ) at the nodes.
    scaled: Vec<f64>,
    g: Vec<f64>,
    h: Vec<f64>,
    residual: f64,
}

/// Solves the GCI problem L̄* g = sin θ on the given θ-grid.
///
/// The number of basis functions is half the number of nodes.
pub fn solve_gci_ode(d: f64, n: u32, grid: &ThetaGrid) -> Result<GciSolution> {
    solve_with_rhs(d, n, grid, true)
}

/// Same operator with a zero right-hand side; the unique solution in V is 0.
pub fn solve_gci_homogeneous(d: f64, n: u32, grid: &ThetaGrid) -> Result<GciSolution> {
    solve_with_rhs(d, n, grid, false)
}

fn solve_with_rhs(d: f64, n: u32, grid: &ThetaGrid, forced: bool) -> Result<GciSolution> {
    check_d(d)?;
    if n < 2 {
        return Err(Error::param("n", "dimension must be >= 2"));
    }
    if grid.len() < 64 {
        return Err(Error::param("theta_grid", format!("need >= 64 nodes, got {}", grid.len())));
    }
    let kb = grid.len() / 2;
    let p = (n - 2) as i32;
    let inv2d = 0.5 / d;

    let mut stiff = DMatrix::<f64>::zeros(kb, kb);
    let mut rhs = DVector::<f64>::zeros(kb);
    let mut psi = vec![0.0; kb];
    let mut sj = vec![0.0; kb];
    // every integrand below is sinⁿθ times a cosine polynomial
    let weights = grid.parity_weights(n % 2 == 1);
    for (&t, &wq) in grid.nodes().iter().zip(weights) {
        let (s, c) = t.sin_cos();
        let sp = s.powi(p);
        for j in 0..kb {
            let jf = (j + 1) as f64;
            let (sjt, cjt) = (jf * t).sin_cos();
            sj[j] = sjt;
            psi[j] = jf * cjt + s * sjt * inv2d;
        }
        let pot = if n == 2 { 0.0 } else { (n - 2) as f64 * s.powi(p - 2) };
        for j in 0..kb {
            let a = wq * sp * psi[j];
            let b = wq * pot * sj[j];
            for m in j..kb {
                stiff[(j, m)] += a * psi[m] + b * sj[m];
            }
        }
        if forced {
            let f = wq * s.powi(p + 1) * ((c - 1.0) * inv2d).exp();
            for j in 0..kb {
                rhs[j] += f * sj[j];
            }
        }
    }
    for j in 0..kb {
        for m in 0..j {
            stiff[(j, m)] = stiff[(m, j)];
        }
    }
    let chol = stiff
        .cholesky()
        .ok_or_else(|| Error::LinearSolve("GCI stiffness matrix is not positive definite".into()))?;
    let coeffs: Vec<f64> = chol.solve(&rhs).iter().copied().collect();

    let mut sol = GciSolution {
        theta_grid: grid.clone(),
        d,
        n,
        coeffs,
        scaled: vec![],
        g: vec![],
        h: vec![],
        residual: 0.0,
    };
    sol.scaled = grid.nodes().iter().map(|&t| sol.eval_scaled(t).0).collect();
    sol.g = grid.nodes().iter().map(|&t| sol.eval_g(t)).collect();
    sol.h = grid.nodes().iter().zip(&sol.g).map(|(&t, g)| g / t.sin()).collect();
    let forcing = if forced { 1.0 } else { 0.0 };
    let r2: f64 = grid
        .nodes()
        .iter()
        .zip(weights)
        .map(|(&t, w)| w * t.sin().powi(p) * sol.scaled_residual(t, forcing).powi(2))
        .sum();
    sol.residual = r2.sqrt();
    if !sol.residual.is_finite() || sol.residual > RESIDUAL_TOLERANCE {
        return Err(Error::Residual {
            context: "GCI ODE (weighted L2)",
            residual: sol.residual,
            tolerance: RESIDUAL_TOLERANCE,
        });
    }
    Ok(sol)
}

impl GciSolution {
    pub fn theta_grid(&self) -> &ThetaGrid {
        &self.theta_grid
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// g at the θ-nodes.
    pub fn g(&self) -> &[f64] {
        &self.g
    }

    /// h(cos θ) = g/sin θ at the θ-nodes.
    pub fn h(&self) -> &[f64] {
        &self.h
    }

    /// g e^{(cos θ − 1)/(2d)} at the nodes (the weight-scaled profile).
    pub fn scaled_g(&self) -> &[f64] {
        &self.scaled
    }

    /// Weighted-L² residual of the strong form, weight sinⁿ⁻²θ e^{(cos θ−1)/d}.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    fn envelope(&self, t: f64) -> f64 {
        ((1.0 - t.cos()) * 0.5 / self.d).exp()
    }

    /// (u, u′, u″) for u = Σ b_j sin(jθ).
    fn eval_scaled(&self, t: f64) -> (f64, f64, f64) {
        let mut u = 0.0;
        let mut du = 0.0;
        let mut d2u = 0.0;
        for (j, b) in self.coeffs.iter().enumerate() {
            let jf = (j + 1) as f64;
            let (s, c) = (jf * t).sin_cos();
            u += b * s;
            du += b * jf * c;
            d2u -= b * jf * jf * s;
        }
        (u, du, d2u)
    }

    /// g(θ); defined for θ ∈ (−π, π) as the odd extension.
    pub fn eval_g(&self, t: f64) -> f64 {
        self.eval_scaled(t).0 * self.envelope(t)
    }

    /// (L̄* g − f·sin θ)/E at θ, computed without forming E.
    fn scaled_residual(&self, t: f64, forcing: f64) -> f64 {
        let (u, du, d2u) = self.eval_scaled(t);
        let (s, c) = t.sin_cos();
        let d = self.d;
        let n2 = (self.n - 2) as f64;
        let g1 = du + u * s / (2.0 * d);
        let g2 = d2u + du * s / d + u * (c / (2.0 * d) + s * s / (4.0 * d * d));
        let wlog = n2 * c / s - s / d;
        let pot = if self.n == 2 { 0.0 } else { n2 * u / (s * s) };
        -g2 - wlog * g1 + pot - forcing * s * ((c - 1.0) / (2.0 * d)).exp()
    }

    /// Pointwise strong-form residual L̄* g − sin θ at each θ-node.
    pub fn pointwise_residual(&self) -> Vec<f64> {
        self.theta_grid
            .nodes()
            .iter()
            .map(|&t| self.scaled_residual(t, 1.0) * self.envelope(t))
            .collect()
    }

    /// ∫ g² w dθ with the shifted weight.
    pub fn weighted_energy(&self) -> f64 {
        let p = (self.n - 2) as i32;
        self.theta_grid
            .nodes()
            .iter()
            .zip(self.theta_grid.parity_weights(self.n % 2 == 1))
            .zip(&self.scaled)
            .map(|((&t, w), u)| w * t.sin().powi(p) * u * u)
            .sum()
    }

    /// Linear extrapolation of sin^{n/2−1}θ · g e^{(cos θ−1)/(2d)} from the two
    /// nodes nearest each endpoint to θ = 0 and θ = π.
    pub fn boundary_extrapolation(&self) -> [f64; 2] {
        let t = self.theta_grid.nodes();
        let q = |i: usize| t[i].sin().powf(self.n as f64 / 2.0 - 1.0) * self.scaled[i];
        let m = t.len();
        let extrap = |i0: usize, i1: usize, at: f64| {
            let slope = (q(i1) - q(i0)) / (t[i1] - t[i0]);
            q(i0) + slope * (at - t[i0])
        };
        [extrap(0, 1, 0.0), extrap(m - 1, m - 2, std::f64::consts::PI)]
    }

    /// GCI ψ(ω) = h(ω·Ω) A·ω with Ω = (cos φ, sin φ), A = Ω⊥, sampled on the
    /// angular grid. In the angle θ = α − φ this is the odd extension of g.
    pub fn psi_on(&self, grid: &AngularGrid, phi: f64) -> Vec<f64> {
        grid.sample(|a| {
            let t = (a - phi + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI)
                - std::f64::consts::PI;
            self.eval_g(t)
        })
    }
}

/// c2 = ∫ cos θ h e^{cos θ/d} sinⁿθ dθ / ∫ h e^{cos θ/d} sinⁿθ dθ on the
/// solution's θ-grid.
pub fn coefficient_c2(sol: &GciSolution) -> Result<f64> {
    let d = sol.d;
    let p = (sol.n - 1) as i32;
    let mut num = 0.0;
    let mut den = 0.0;
    for ((&t, w), u) in sol
        .theta_grid
        .nodes()
        .iter()
        .zip(sol.theta_grid.parity_weights(sol.n % 2 == 1))
        .zip(&sol.scaled)
    {
        let (s, c) = t.sin_cos();
        // h e^{(cos−1)/d} sinⁿ = u e^{(cos−1)/(2d)} sinⁿ⁻¹
        let v = w * u * ((c - 1.0) / (2.0 * d)).exp() * s.powi(p);
        num += c * v;
        den += v;
    }
    if den.abs() < 1e-12 {
        return Err(Error::Degenerate {
            context: "c2 denominator",
            value: den,
        });
    }
    Ok(num / den)
}

/// c3 = η₀ k ((n − 1) d + c2).
pub fn coefficient_c3(c2: f64, d: f64, n: u32, k: f64, eta0: u8) -> f64 {
    eta0 as f64 * k * ((n as f64 - 1.0) * d + c2)
}

/// Largest |⟨L_Ω f · ψ⟩| over random f = M_Ω + δp with p mean-free and
/// ⟨Ω⊥·ω p⟩ = 0, so that Ω_f = Ω. Vanishes for a true GCI.
pub fn gci_pairing_check<R: Rng>(
    sol: &GciSolution,
    grid: &AngularGrid,
    phi: f64,
    trials: usize,
    rng: &mut R,
) -> f64 {
    let d = sol.d;
    let m = vmf_samples(grid, d, phi);
    let psi = sol.psi_on(grid, phi);
    let perp: Vec<f64> = grid.sample(|a| (a - phi).sin());
    let ones = vec![1.0; grid.n_modes()];
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let modes: Vec<(f64, f64)> = (0..6)
            .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let mut p = grid.sample(|a| {
            modes
                .iter()
                .enumerate()
                .map(|(k, (x, y))| x * ((k + 1) as f64 * a).cos() + y * ((k + 1) as f64 * a).sin())
                .sum::<f64>()
        });
        let mean = grid.integrate(&p) / (2.0 * std::f64::consts::PI);
        p.iter_mut().for_each(|v| *v -= mean);
        let beta = grid.pairing(&perp, &p, &ones) / std::f64::consts::PI;
        p.iter_mut().zip(&perp).for_each(|(v, s)| *v -= beta * s);
        let scale = 0.05 / p.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
        let f: Vec<f64> = m.iter().zip(&p).map(|(m, p)| m + scale * p).collect();
        let lf = apply_l_omega(grid, phi, d, &f);
        worst = worst.max(grid.pairing(&lf, &psi, &ones).abs());
    }
    worst
}
