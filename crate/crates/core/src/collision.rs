//! Collision operator 𝒬, its linearisation around a fixed direction and the
//! weighted operator 𝓛₀ = −(1/M₀)∂_α(M₀ ∂_α ·) on S¹.
//!
//! 𝓛₀ is factorised once, for Ω₀ = (1, 0), as a Galerkin system in the real
//! Fourier basis {1, cos kα, sin kα}, k < n/2, with mass G_ij = ⟨e_i e_j⟩_{M₀}
//! and stiffness K_ij = ⟨e_i′ e_j′⟩_{M₀} computed by grid quadrature. Other
//! directions reuse it by rotating the coefficients. Because the grid
//! derivative is skew under the uniform rule, the Galerkin inverse is the
//! exact inverse of the collocation form on the retained modes.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::equilibria::{check_d, vmf_profile, vmf_samples};
use crate::error::{ensure_finite, Error, Result};
use crate::sphere::{rotate_coeffs, AngularGrid};

/// Default threshold below which |j_f| is treated as zero.
pub const J_FLOOR: f64 = 1e-12;

/// Mean direction angle of f, or None when |j_f| < j_floor.
pub fn mean_direction(grid: &AngularGrid, f: &[f64], j_floor: f64) -> Option<f64> {
    let (_, j) = grid.moments(f);
    if j[0].hypot(j[1]) < j_floor {
        None
    } else {
        Some(j[1].atan2(j[0]))
    }
}

/// 𝓛_Ω f = −∂_α(sin(φ − α) f) + d ∂²_α f for Ω = (cos φ, sin φ).
pub fn apply_l_omega(grid: &AngularGrid, phi: f64, d: f64, f: &[f64]) -> Vec<f64> {
    let flux: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(f)
        .map(|(a, v)| (phi - a).sin() * v)
        .collect();
    let div = grid.d(&flux, 1);
    let lap = grid.d(f, 2);
    div.iter().zip(&lap).map(|(a, b)| -a + d * b).collect()
}

/// 𝒬(f) = −∂_α(sin(φ_f − α) f) + d ∂²_α f; the alignment term is dropped
/// when |j_f| < j_floor.
pub fn apply_q(grid: &AngularGrid, f: &[f64], d: f64, j_floor: f64) -> Result<Vec<f64>> {
    grid.check_len(f)?;
    ensure_finite(f, "collision operator input")?;
    check_d(d)?;
    Ok(match mean_direction(grid, f, j_floor) {
        Some(phi) => apply_l_omega(grid, phi, d, f),
        None => grid.d(f, 2).into_iter().map(|v| d * v).collect(),
    })
}

/// Dissipation pairing ⟨𝒬(f) f/M_{Ω_f}⟩, nonpositive for positive f.
pub fn dissipation(grid: &AngularGrid, f: &[f64], d: f64, j_floor: f64) -> Result<f64> {
    let q = apply_q(grid, f, d, j_floor)?;
    let m = match mean_direction(grid, f, j_floor) {
        Some(phi) => vmf_samples(grid, d, phi),
        None => vec![1.0 / (2.0 * PI); grid.n_modes()],
    };
    let ratio: Vec<f64> = f.iter().zip(&m).map(|(f, m)| f / m).collect();
    Ok(grid.pairing(&q, &ratio, &vec![1.0; grid.n_modes()]))
}

/// Time-integration rule for the relaxation ∂_t f̃ = −𝓛₀ f̃.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollisionScheme {
    /// (I + τ𝓛₀)⁻¹
    #[default]
    ImplicitEuler,
    /// exp(−τ𝓛₀)
    Exponential,
}

#[derive(Debug)]
struct Factorization {
    /// generalised eigenvalues of K v = λ G v, ascending, λ₀ = 0
    lambda: Vec<f64>,
    /// G-orthonormal eigenvectors (columns)
    v: DMatrix<f64>,
    /// Vᵀ G, maps coefficients to modal amplitudes
    p: DMatrix<f64>,
}

impl Factorization {
    fn new(grid: &AngularGrid, d: f64) -> Result<Self> {
        let n = grid.n_modes();
        let nc = grid.n_coeffs();
        let m = vmf_samples(grid, d, 0.0);
        let w = grid.weight();
        let mut e = DMatrix::<f64>::zeros(n, nc);
        let mut de = DMatrix::<f64>::zeros(n, nc);
        for (l, &a) in grid.nodes().iter().enumerate() {
            let sw = (w * m[l]).sqrt();
            e[(l, 0)] = sw;
            for k in 1..n / 2 {
                let (s, c) = (k as f64 * a).sin_cos();
                let kf = k as f64;
                e[(l, 2 * k - 1)] = sw * c;
                e[(l, 2 * k)] = sw * s;
                de[(l, 2 * k - 1)] = -sw * kf * s;
                de[(l, 2 * k)] = sw * kf * c;
            }
        }
        let g = e.transpose() * &e;
        let k = de.transpose() * &de;
        let chol = g
            .clone()
            .cholesky()
            .ok_or_else(|| Error::LinearSolve("angular mass matrix is not positive definite".into()))?;
        let l = chol.l();
        let linv = l
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::LinearSolve("singular Cholesky factor".into()))?;
        let a = &linv * k * linv.transpose();
        let a = (&a + a.transpose()) * 0.5;
        let eig = a.symmetric_eigen();
        let mut order: Vec<usize> = (0..nc).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let mut q = DMatrix::<f64>::zeros(nc, nc);
        let mut lambda = Vec::with_capacity(nc);
        for (col, &i) in order.iter().enumerate() {
            q.set_column(col, &eig.eigenvectors.column(i));
            lambda.push(eig.eigenvalues[i]);
        }
        if lambda[0].abs() > 1e-8 || lambda[1] <= 0.0 {
            return Err(Error::LinearSolve(format!(
                "unexpected spectrum of the angular operator: {} {}",
                lambda[0], lambda[1]
            )));
        }
        lambda[0] = 0.0;
        let v = linv.transpose() * &q;
        let p = q.transpose() * l.transpose();
        Ok(Self { lambda, v, p })
    }

    fn propagator(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let scale = DVector::from_iterator(self.lambda.len(), self.lambda.iter().map(|&l| f(l)));
        &self.v * DMatrix::from_diagonal(&scale) * &self.p
    }
}

/// 𝓛₀ for a frozen direction Ω₀, with its factorisation.
#[derive(Debug, Clone)]
pub struct LinearizedOperator {
    grid: AngularGrid,
    d: f64,
    phi0: f64,
    m0: Vec<f64>,
    fact: Arc<Factorization>,
}

/// Result of [`LinearizedOperator::invert_l0`].
#[derive(Debug, Clone)]
pub struct Inversion {
    pub solution: Vec<f64>,
    /// |⟨rhs⟩_{M₀}|, the component removed before solving.
    pub solvability_residual: f64,
}

impl LinearizedOperator {
    pub fn new(grid: &AngularGrid, d: f64, phi0: f64) -> Result<Self> {
        check_d(d)?;
        if !phi0.is_finite() {
            return Err(Error::param("phi0", "must be finite"));
        }
        let fact = Factorization::new(grid, d)?;
        Ok(Self {
            grid: grid.clone(),
            d,
            phi0,
            m0: vmf_samples(grid, d, phi0),
            fact: Arc::new(fact),
        })
    }

    /// Same operator frozen at another direction; the factorisation is shared.
    pub fn with_direction(&self, phi0: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            d: self.d,
            phi0,
            m0: vmf_samples(&self.grid, self.d, phi0),
            fact: Arc::clone(&self.fact),
        }
    }

    pub fn grid(&self) -> &AngularGrid {
        &self.grid
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn phi0(&self) -> f64 {
        self.phi0
    }

    pub fn omega0(&self) -> [f64; 2] {
        [self.phi0.cos(), self.phi0.sin()]
    }

    pub fn m0(&self) -> &[f64] {
        &self.m0
    }

    /// Discrete spectrum of 𝓛₀ on the retained modes, ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.fact.lambda
    }

    /// Smallest nonzero eigenvalue: the sharp discrete Poincaré constant.
    pub fn spectral_gap(&self) -> f64 {
        self.fact.lambda[1]
    }

    /// ⟨a b⟩_{M₀}.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.grid.pairing(a, b, &self.m0)
    }

    /// ⟨f⟩_{M₀}.
    pub fn mean(&self, f: &[f64]) -> f64 {
        self.grid.pairing(f, &self.m0, &vec![1.0; f.len()])
    }

    /// Collocation 𝓛₀f = −(1/M₀)∂_α(M₀ ∂_α f).
    pub fn apply_l0(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.grid.check_len(f)?;
        ensure_finite(f, "L0 input")?;
        Ok(self.apply_unchecked(f))
    }

    fn apply_unchecked(&self, f: &[f64]) -> Vec<f64> {
        let prof = vmf_profile(&self.grid, self.d, self.phi0);
        if prof.iter().any(|&p| p < 1e-250) {
            // −f″ + (1/d) sin(α − φ₀) f′ avoids dividing by an underflowed weight
            let d1 = self.grid.d(f, 1);
            let d2 = self.grid.d(f, 2);
            return self
                .grid
                .nodes()
                .iter()
                .zip(d1.iter().zip(&d2))
                .map(|(a, (d1, d2))| -d2 + (a - self.phi0).sin() * d1 / self.d)
                .collect();
        }
        let df = self.grid.d(f, 1);
        let flux: Vec<f64> = df.iter().zip(&prof).map(|(a, p)| a * p).collect();
        self.grid
            .d(&flux, 1)
            .iter()
            .zip(&prof)
            .map(|(v, p)| -v / p)
            .collect()
    }

    /// Real coefficients of f in the frame where Ω₀ = (1, 0).
    fn frame_coeffs(&self, f: &[f64]) -> DVector<f64> {
        let mut c = self.grid.to_coeffs(f);
        rotate_coeffs(&mut c, self.phi0);
        DVector::from_vec(c)
    }

    fn from_frame(&self, c: &DVector<f64>) -> Vec<f64> {
        let mut c: Vec<f64> = c.iter().copied().collect();
        rotate_coeffs(&mut c, -self.phi0);
        self.grid.from_coeffs(&c)
    }

    /// Solves 𝓛₀u = rhs − ⟨rhs⟩_{M₀} with ⟨u⟩_{M₀} = 0.
    pub fn invert_l0(&self, rhs: &[f64]) -> Result<Inversion> {
        self.grid.check_len(rhs)?;
        ensure_finite(rhs, "L0 inversion right-hand side")?;
        let mean = self.mean(rhs);
        let mut y = &self.fact.p * self.frame_coeffs(rhs);
        y[0] = 0.0;
        for (yk, l) in y.iter_mut().zip(&self.fact.lambda).skip(1) {
            *yk /= l;
        }
        let u = self.from_frame(&(&self.fact.v * y));
        ensure_finite(&u, "L0 inversion")?;
        Ok(Inversion {
            solution: u,
            solvability_residual: mean.abs(),
        })
    }

    /// Relaxation propagator for a step τ, reusable across directions.
    pub fn propagator(&self, tau: f64, scheme: CollisionScheme) -> Propagator {
        let b = match scheme {
            CollisionScheme::ImplicitEuler => self.fact.propagator(|l| 1.0 / (1.0 + tau * l)),
            CollisionScheme::Exponential => self.fact.propagator(|l| (-tau * l).exp()),
        };
        Propagator { tau, scheme, b }
    }

    /// Rayleigh quotient ⟨|∂_α g|²⟩_{M₀} / ⟨(g − ⟨g⟩_{M₀})²⟩_{M₀}, None for
    /// (numerically) constant g.
    pub fn rayleigh_quotient(&self, g: &[f64]) -> Option<f64> {
        let mean = self.mean(g);
        let centred: Vec<f64> = g.iter().map(|v| v - mean).collect();
        let den = self.inner(&centred, &centred);
        let scale = self.inner(g, g).max(f64::MIN_POSITIVE);
        if den <= 1e-24 * scale {
            return None;
        }
        let dg = self.grid.d(g, 1);
        Some(self.inner(&dg, &dg) / den)
    }

    /// Minimum Rayleigh quotient over random band-limited trial functions
    /// (modes up to 8 with decaying amplitudes).
    pub fn poincare_constant_estimate<R: Rng>(&self, trials: usize, rng: &mut R) -> Result<f64> {
        if trials < 10 {
            return Err(Error::TooFewSamples {
                needed: 10,
                got: trials,
            });
        }
        let mut best = f64::INFINITY;
        for _ in 0..trials {
            let amps: Vec<(f64, f64)> = (1..=8)
                .map(|k| {
                    let s = 1.0 / k as f64;
                    (s * rng.random_range(-1.0..1.0), s * rng.random_range(-1.0..1.0))
                })
                .collect();
            let g = self.grid.sample(|a| {
                amps.iter()
                    .enumerate()
                    .map(|(k, (x, y))| {
                        let kf = (k + 1) as f64;
                        x * (kf * a).cos() + y * (kf * a).sin()
                    })
                    .sum()
            });
            if let Some(r) = self.rayleigh_quotient(&g) {
                best = best.min(r);
            }
        }
        if !best.is_finite() {
            return Err(Error::Degenerate {
                context: "Poincaré estimate (all trials constant)",
                value: 0.0,
            });
        }
        Ok(best)
    }
}

/// Precomputed relaxation step f̃ ↦ R(τ𝓛₀) f̃ in the reference frame.
#[derive(Debug, Clone)]
pub struct Propagator {
    tau: f64,
    scheme: CollisionScheme,
    b: DMatrix<f64>,
}

impl Propagator {
    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn scheme(&self) -> CollisionScheme {
        self.scheme
    }

    /// Relaxes f toward ρM_φ: f̃ = f/M_φ is propagated and mapped back.
    /// The Nyquist mode of f̃ is dropped and the angular mass restored exactly.
    pub fn relax(&self, grid: &AngularGrid, phi: f64, m: &[f64], f: &mut [f64]) {
        let mass = grid.integrate(f);
        let ft: Vec<f64> = f.iter().zip(m).map(|(f, m)| f / m).collect();
        let mut c = grid.to_coeffs(&ft);
        rotate_coeffs(&mut c, phi);
        let mut out: Vec<f64> = (&self.b * DVector::from_vec(c)).iter().copied().collect();
        rotate_coeffs(&mut out, -phi);
        let ft = grid.from_coeffs(&out);
        for ((f, t), m) in f.iter_mut().zip(&ft).zip(m) {
            *f = t * m;
        }
        let fix = mass - grid.integrate(f);
        let mm = grid.integrate(m);
        for (f, m) in f.iter_mut().zip(m) {
            *f += fix * m / mm;
        }
    }
}

/// Heat-flow step for the isotropic branch (|j_f| below the floor):
/// ∂_t f = κ ∂²_α f over a time τ with κτ = `kappa_tau`.
pub fn relax_isotropic(grid: &AngularGrid, kappa_tau: f64, scheme: CollisionScheme, f: &mut [f64]) {
    let four = grid.fourier();
    let mut spec = four.forward(f);
    for (i, c) in spec.iter_mut().enumerate() {
        let k = four.wavenumber(i) as f64;
        let s = match scheme {
            CollisionScheme::ImplicitEuler => 1.0 / (1.0 + kappa_tau * k * k),
            CollisionScheme::Exponential => (-kappa_tau * k * k).exp(),
        };
        *c *= s;
    }
    f.copy_from_slice(&four.inverse_real(spec));
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn band(rng: &mut ChaCha8Rng, kmax: usize) -> impl Fn(f64) -> f64 {
        let c: Vec<(f64, f64)> = (0..kmax)
            .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        move |a| {
            c.iter()
                .enumerate()
                .map(|(k, (x, y))| x * ((k + 1) as f64 * a).cos() + y * ((k + 1) as f64 * a).sin())
                .sum()
        }
    }

    #[test]
    fn equilibria_are_in_the_kernel() {
        let g = AngularGrid::new(64).unwrap();
        for (rho, phi) in [(1.0, 0.0), (2.5, 1.3), (0.3, -2.0)] {
            let f: Vec<f64> = vmf_samples(&g, 1.0, phi).iter().map(|m| rho * m).collect();
            let q = apply_q(&g, &f, 1.0, J_FLOOR).unwrap();
            assert!(q.iter().all(|v| v.abs() < 1e-10));
        }
        let q = apply_q(&g, &vec![0.7; 64], 1.0, J_FLOOR).unwrap();
        assert!(q.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn mass_neutral_and_dissipative() {
        let g = AngularGrid::new(64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let p = band(&mut rng, 5);
            let f = g.sample(|a| 3.0 + p(a));
            assert!(g.integrate(&apply_q(&g, &f, 0.8, J_FLOOR).unwrap()).abs() < 1e-10);
            assert!(dissipation(&g, &f, 0.8, J_FLOOR).unwrap() <= 1e-14);
        }
        let m = vmf_samples(&g, 1.0, 0.0);
        let f: Vec<f64> = m.iter().zip(g.nodes()).map(|(m, a)| m * (1.0 + 0.1 * a.sin())).collect();
        assert!(dissipation(&g, &f, 1.0, J_FLOOR).unwrap() <= 0.0);
    }

    #[test]
    fn l0_kernel_and_self_adjointness() {
        let g = AngularGrid::new(64).unwrap();
        let op = LinearizedOperator::new(&g, 1.0, 0.0).unwrap();
        assert!((g.integrate(op.m0()) - 1.0).abs() < 1e-12);
        assert!(op.apply_l0(&vec![1.0; 64]).unwrap().iter().all(|v| v.abs() < 1e-12));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let g1 = g.sample(band(&mut rng, 8));
            let g2 = g.sample(band(&mut rng, 8));
            let lhs = op.inner(&g1, &op.apply_l0(&g2).unwrap());
            let rhs = op.inner(&g.d(&g1, 1), &g.d(&g2, 1));
            assert!((lhs - rhs).abs() < 1e-10);
            assert!(op.inner(&g1, &op.apply_l0(&g1).unwrap()) >= -1e-12);
        }
    }

    #[test]
    fn inverse_recovers_mean_free_input() {
        let g = AngularGrid::new(64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for phi in [0.0, 0.9, -2.4] {
            let op = LinearizedOperator::new(&g, 1.0, 0.0).unwrap().with_direction(phi);
            let mut f = g.sample(band(&mut rng, 8));
            let m = op.mean(&f);
            f.iter_mut().for_each(|v| *v -= m);
            let inv = op.invert_l0(&op.apply_l0(&f).unwrap()).unwrap();
            let err = inv.solution.iter().zip(&f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-9, "phi={phi} err={err}");
            assert!(op.mean(&inv.solution).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_of_constant_and_sine() {
        let g = AngularGrid::new(64).unwrap();
        let op = LinearizedOperator::new(&g, 1.0, 0.0).unwrap();
        let inv = op.invert_l0(&vec![2.5; 64]).unwrap();
        assert!(inv.solution.iter().all(|v| v.abs() < 1e-12));
        assert!((inv.solvability_residual - 2.5).abs() < 1e-12);

        let rhs = g.sample(f64::sin);
        let inv = op.invert_l0(&rhs).unwrap();
        let l = op.apply_l0(&inv.solution).unwrap();
        let mean = op.mean(&rhs);
        assert!(l.iter().zip(&rhs).all(|(a, b)| (a - (b - mean)).abs() < 1e-9));
    }

    #[test]
    fn poincare_estimate() {
        let g = AngularGrid::new(64).unwrap();
        let op = LinearizedOperator::new(&g, 1.0, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let est = op.poincare_constant_estimate(100, &mut rng).unwrap();
        assert!(est > 0.0 && est >= op.spectral_gap() - 1e-12);
        let r: Vec<f64> = (1..=3)
            .map(|k| op.rayleigh_quotient(&g.sample(|a| (k as f64 * a).sin())).unwrap())
            .collect();
        assert!(r[0] < r[1] && r[0] < r[2]);
        let s = g.sample(|a| a.sin());
        let s10: Vec<f64> = s.iter().map(|v| 10.0 * v).collect();
        assert!((op.rayleigh_quotient(&s).unwrap() - op.rayleigh_quotient(&s10).unwrap()).abs() < 1e-12);
        assert!(op.rayleigh_quotient(&vec![1.0; 64]).is_none());
        assert!(op.poincare_constant_estimate(5, &mut rng).is_err());
    }

    #[test]
    fn propagator_fixes_equilibria_and_mass() {
        let g = AngularGrid::new(64).unwrap();
        let op = LinearizedOperator::new(&g, 1.0, 0.0).unwrap();
        let prop = op.propagator(3.0, CollisionScheme::ImplicitEuler);
        let phi = 0.77;
        let m = vmf_samples(&g, 1.0, phi);
        let mut f: Vec<f64> = m.iter().map(|v| 1.7 * v).collect();
        let before = f.clone();
        prop.relax(&g, phi, &m, &mut f);
        assert!(f.iter().zip(&before).all(|(a, b)| (a - b).abs() < 1e-12));

        let mut f: Vec<f64> = g.nodes().iter().zip(&m).map(|(a, m)| m * (1.0 + 0.3 * (2.0 * a).cos())).collect();
        let mass = g.integrate(&f);
        let long = op.propagator(1e6, CollisionScheme::Exponential);
        long.relax(&g, phi, &m, &mut f);
        assert!((g.integrate(&f) - mass).abs() < 1e-14);
        assert!(f.iter().zip(&m).all(|(a, b)| (a - mass * b).abs() < 1e-12));
    }

    #[test]
    fn isotropic_relaxation_conserves_mass() {
        let g = AngularGrid::new(32).unwrap();
        let mut f = g.sample(|a| 1.0 + 0.5 * a.cos());
        relax_isotropic(&g, 0.1, CollisionScheme::ImplicitEuler, &mut f);
        assert!((g.integrate(&f) - 2.0 * PI).abs() < 1e-13);
        assert!((f[0] - (1.0 + 0.5 / 1.1)).abs() < 1e-14);
    }
}
