//! Von Mises–Fisher equilibria, the order parameter c1 and the SOH
//! coefficient bundle.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::kinetic::{KineticField, KineticParams, Mode};
use crate::quadrature::integrate_adaptive;
use crate::sphere::{AngularGrid, TorusGrid};

/// Parameters of M_Ω(ω) = Z_d⁻¹ exp(ω·Ω / d) with Ω = (cos φ, sin φ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VmfParams {
    d: f64,
    phi: f64,
}

impl VmfParams {
    pub fn new(d: f64, phi: f64) -> Result<Self> {
        check_d(d)?;
        if !phi.is_finite() {
            return Err(Error::param("phi", "must be finite"));
        }
        Ok(Self { d, phi })
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn omega(&self) -> [f64; 2] {
        let (s, c) = self.phi.sin_cos();
        [c, s]
    }
}

pub(crate) fn check_d(d: f64) -> Result<()> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::param("d", format!("must be positive and finite, got {d}")));
    }
    Ok(())
}

/// Unnormalised, overflow-safe profile exp((cos(α − φ) − 1)/d).
pub(crate) fn vmf_profile(grid: &AngularGrid, d: f64, phi: f64) -> Vec<f64> {
    let (s, c) = phi.sin_cos();
    grid.cos()
        .iter()
        .zip(grid.sin())
        .map(|(ca, sa)| ((ca * c + sa * s - 1.0) / d).exp())
        .collect()
}

/// M_Ω sampled on the grid, normalised by the grid's own quadrature.
pub(crate) fn vmf_samples(grid: &AngularGrid, d: f64, phi: f64) -> Vec<f64> {
    let mut m = vmf_profile(grid, d, phi);
    let z = grid.integrate(&m);
    m.iter_mut().for_each(|v| *v /= z);
    m
}

/// Samples of M_Ω on the angular grid. Z_d is computed by the same
/// quadrature, so the discrete mass is one to round-off.
pub fn vmf_density(params: &VmfParams, grid: &AngularGrid) -> Result<Vec<f64>> {
    check_d(params.d)?;
    Ok(vmf_samples(grid, params.d, params.phi))
}

/// Absolute tolerance of the c1 quadrature.
pub const C1_TOLERANCE: f64 = 1e-10;

/// Order parameter c1(d) = ⟨ω·Ω⟩_{M_Ω} on S^{n−1}, by adaptive
/// Gauss–Kronrod quadrature in the polar angle.
pub fn order_parameter_c1(d: f64, n: u32) -> Result<f64> {
    check_d(d)?;
    if n < 2 {
        return Err(Error::param("n", "dimension must be >= 2"));
    }
    let p = (n - 2) as i32;
    let weight = move |t: f64| ((t.cos() - 1.0) / d).exp() * t.sin().powi(p);
    // Both integrals are O(sqrt(d)) for small d; scale the tolerance so the
    // ratio meets C1_TOLERANCE.
    let scale = d.sqrt().min(1.0);
    let tol = 1e-3 * C1_TOLERANCE * scale;
    let den = integrate_adaptive(weight, 0.0, PI, tol, 2000)?;
    let num = integrate_adaptive(move |t: f64| t.cos() * weight(t), 0.0, PI, tol, 2000)?;
    if den.value <= 0.0 {
        return Err(Error::Degenerate {
            context: "c1 normalisation",
            value: den.value,
        });
    }
    let c1 = num.value / den.value;
    Ok(c1.clamp(0.0, 1.0))
}

/// SOH coefficients for a given noise strength and dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub d: f64,
    pub n: u32,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub k: f64,
    pub eta0: u8,
}

impl Coefficients {
    /// Assembles the bundle from already computed c1 and c2.
    pub fn from_parts(d: f64, n: u32, c1: f64, c2: f64, k: f64, eta0: u8) -> Result<Self> {
        check_d(d)?;
        if eta0 > 1 {
            return Err(Error::param("eta0", "must be 0 or 1"));
        }
        if !(k > 0.0) {
            return Err(Error::param("k", "must be positive"));
        }
        let c3 = crate::gci::coefficient_c3(c2, d, n, k, eta0);
        Ok(Self {
            d,
            n,
            c1,
            c2,
            c3,
            k,
            eta0,
        })
    }

    /// Computes c1 by quadrature and c2 by solving the GCI problem.
    pub fn compute(d: f64, n: u32, k: f64, eta0: u8, theta_nodes: usize) -> Result<Self> {
        let c1 = order_parameter_c1(d, n)?;
        let grid = crate::sphere::ThetaGrid::gauss_legendre(theta_nodes)?;
        let sol = crate::gci::solve_gci_ode(d, n, &grid)?;
        let c2 = crate::gci::coefficient_c2(&sol)?;
        Self::from_parts(d, n, c1, c2, k, eta0)
    }

    /// The same bundle with the viscous term switched off.
    pub fn inviscid(&self) -> Self {
        Self {
            eta0: 0,
            c3: 0.0,
            ..*self
        }
    }
}

/// f₀(x, ·) = ρ(x) M_{Ω(x)} with Ω(x) = (cos φ(x), sin φ(x)).
pub fn equilibrium_field(
    grid_x: &TorusGrid,
    grid_w: &AngularGrid,
    rho: &[f64],
    phi: &[f64],
    params: KineticParams,
) -> Result<KineticField> {
    grid_x.check_len(rho)?;
    grid_x.check_len(phi)?;
    ensure_finite(rho, "equilibrium density")?;
    ensure_finite(phi, "equilibrium angle")?;
    if let Some(r) = rho.iter().find(|&&r| r <= 0.0) {
        return Err(Error::param("rho", format!("density must be positive, found {r}")));
    }
    let values = equilibrium_values(grid_w, rho, phi, params.d);
    KineticField::new(grid_x.clone(), grid_w.clone(), values, params, Mode::Nonlinear)
}

/// Row-major (x, α) samples of ρ M_{φ} without validation.
pub(crate) fn equilibrium_values(grid_w: &AngularGrid, rho: &[f64], phi: &[f64], d: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(rho.len() * grid_w.n_modes());
    for (&r, &p) in rho.iter().zip(phi) {
        out.extend(vmf_samples(grid_w, d, p).into_iter().map(|m| r * m));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Modified Bessel I_ν(x) by its power series (test oracle).
    fn bessel_i(nu: u32, x: f64) -> f64 {
        let mut term = (x / 2.0).powi(nu as i32) / (1..=nu).map(f64::from).product::<f64>();
        let mut sum = term;
        for m in 1..200 {
            term *= (x * x / 4.0) / (m as f64 * (m + nu) as f64);
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
        }
        sum
    }

    #[test]
    fn c1_matches_bessel_ratio() {
        let c1 = order_parameter_c1(1.0, 2).unwrap();
        let oracle = bessel_i(1, 1.0) / bessel_i(0, 1.0);
        assert!((c1 - oracle).abs() < 1e-9, "{c1} vs {oracle}");
    }

    #[test]
    fn c1_limits() {
        assert!(order_parameter_c1(1e-3, 2).unwrap() > 0.999);
        assert!(order_parameter_c1(1e3, 2).unwrap() < 2e-3);
        // n = 3: c1 = coth(1/d) − d
        let d: f64 = 0.5;
        let exact = 1.0 / (1.0 / d).tanh() - d;
        assert!((order_parameter_c1(d, 3).unwrap() - exact).abs() < 1e-10);
        assert!(order_parameter_c1(-1.0, 2).is_err());
    }

    #[test]
    fn c1_strictly_decreasing() {
        let ds: Vec<f64> = (0..30).map(|i| 10f64.powf(-2.0 + 3.0 * i as f64 / 29.0)).collect();
        let cs: Vec<f64> = ds.iter().map(|&d| order_parameter_c1(d, 2).unwrap()).collect();
        assert!(cs.windows(2).all(|w| w[0] - w[1] > 1e-12));
    }

    #[test]
    fn vmf_uniform_limit_and_symmetry() {
        let g = AngularGrid::new(64).unwrap();
        let m = vmf_density(&VmfParams::new(1e6, 0.0).unwrap(), &g).unwrap();
        assert!(m.iter().all(|v| (v - 1.0 / (2.0 * PI)).abs() < 1e-5));
        let m = vmf_density(&VmfParams::new(0.7, 0.0).unwrap(), &g).unwrap();
        for j in 1..64 {
            assert!((m[j] - m[64 - j]).abs() < 1e-14);
        }
        assert!(VmfParams::new(0.0, 0.0).is_err());
    }

    #[test]
    fn vmf_moments() {
        let g = AngularGrid::new(64).unwrap();
        let m = vmf_density(&VmfParams::new(1.0, 0.0).unwrap(), &g).unwrap();
        let (m0, m1) = g.moments(&m);
        let c1 = order_parameter_c1(1.0, 2).unwrap();
        assert!((m0 - 1.0).abs() < 1e-12);
        assert!((m1[0] - c1).abs() < 1e-10 && m1[1].abs() < 1e-12);
    }

    #[test]
    fn equilibrium_field_mass() {
        let gx = TorusGrid::slab(16, 1.0).unwrap();
        let gw = AngularGrid::new(32).unwrap();
        let rho = gx.sample(|x| 1.0 + 0.5 * (2.0 * PI * x[0]).cos());
        let phi = gx.sample(|x| x[0]);
        let f = equilibrium_field(&gx, &gw, &rho, &phi, KineticParams::default()).unwrap();
        for (i, r) in rho.iter().enumerate() {
            assert!((gw.integrate(f.column(i)) - r).abs() < 1e-12);
        }
        let bad = vec![0.0; 16];
        assert!(equilibrium_field(&gx, &gw, &bad, &phi, KineticParams::default()).is_err());
    }

    #[test]
    fn coefficient_bundle() {
        let c = Coefficients::from_parts(1.0, 2, 0.44, 0.4, 1.0, 1).unwrap();
        assert!((c.c3 - 1.4).abs() < 1e-15);
        assert_eq!(c.inviscid().c3, 0.0);
    }
}
