//! Grids, quadrature and spectral differential operators on the circle S¹,
//! the spatial torus, and the polar-angle interval (0, π).
//!
//! Tangent fields on S¹ are stored as their scalar component along
//! τ(α) = (−sin α, cos α), so ∇_ω u = (∂_α u) τ and ∇_ω·(a τ) = ∂_α a.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::error::{ensure_finite, Error, Result};
use crate::quadrature::gauss_legendre;
use crate::spectral::{Fourier1d, SpectralFilter};

/// Uniform discretisation α_j = 2πj/n of the unit circle.
#[derive(Debug, Clone)]
pub struct AngularGrid {
    nodes: Vec<f64>,
    cos: Vec<f64>,
    sin: Vec<f64>,
    fourier: Fourier1d,
}

impl AngularGrid {
    pub fn new(n_modes: usize) -> Result<Self> {
        if n_modes < 8 || n_modes % 2 != 0 {
            return Err(Error::param("n_modes", format!("must be even and >= 8, got {n_modes}")));
        }
        let h = 2.0 * PI / n_modes as f64;
        let nodes: Vec<f64> = (0..n_modes).map(|j| j as f64 * h).collect();
        Ok(Self {
            cos: nodes.iter().map(|a| a.cos()).collect(),
            sin: nodes.iter().map(|a| a.sin()).collect(),
            nodes,
            fourier: Fourier1d::new(n_modes),
        })
    }

    pub fn n_modes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Quadrature weight 2π/n shared by every node.
    pub fn weight(&self) -> f64 {
        2.0 * PI / self.n_modes() as f64
    }

    pub fn cos(&self) -> &[f64] {
        &self.cos
    }

    pub fn sin(&self) -> &[f64] {
        &self.sin
    }

    pub fn fourier(&self) -> &Fourier1d {
        &self.fourier
    }

    /// Samples a function of the angle on the nodes.
    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        self.nodes.iter().map(|&a| f(a)).collect()
    }

    pub fn check_len(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.n_modes() {
            return Err(Error::GridMismatch(format!(
                "expected {} angular samples, got {}",
                self.n_modes(),
                values.len()
            )));
        }
        Ok(())
    }

    /// Fourier derivative ∂_α^order of periodic samples (order 1 or 2).
    pub fn derivative(&self, values: &[f64], order: u32) -> Result<Vec<f64>> {
        self.check_len(values)?;
        if !(1..=2).contains(&order) {
            return Err(Error::param("order", "must be 1 or 2"));
        }
        ensure_finite(values, "angular derivative input")?;
        Ok(self.fourier.derivative(values, order, 2.0 * PI))
    }

    /// Unchecked derivative used inside hot loops on already validated data.
    pub(crate) fn d(&self, values: &[f64], order: u32) -> Vec<f64> {
        self.fourier.derivative(values, order, 2.0 * PI)
    }

    /// ⟨f⟩ = ∫ f dω.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weight() * values.iter().sum::<f64>()
    }

    /// Weighted pairing ∫ a b w dω.
    pub fn pairing(&self, a: &[f64], b: &[f64], w: &[f64]) -> f64 {
        self.weight() * a.iter().zip(b).zip(w).map(|((a, b), w)| a * b * w).sum::<f64>()
    }

    /// (⟨f⟩, ⟨ω f⟩).
    pub fn moments(&self, values: &[f64]) -> (f64, [f64; 2]) {
        let mut m0 = 0.0;
        let mut m1 = [0.0; 2];
        for ((f, c), s) in values.iter().zip(&self.cos).zip(&self.sin) {
            m0 += f;
            m1[0] += f * c;
            m1[1] += f * s;
        }
        let w = self.weight();
        (m0 * w, [m1[0] * w, m1[1] * w])
    }

    /// Samples of u(α + shift) by band-limited interpolation.
    pub fn translate(&self, values: &[f64], shift: f64) -> Vec<f64> {
        self.fourier.translate(values, shift, 2.0 * PI)
    }

    /// Number of real Fourier coefficients kept by [`Self::to_coeffs`]: the
    /// Nyquist mode is excluded, leaving 1 + 2(n/2 − 1).
    pub fn n_coeffs(&self) -> usize {
        self.n_modes() - 1
    }

    /// Real coefficients `[a0, a1, b1, …, aK, bK]` of
    /// u = a0 + Σ a_k cos kα + b_k sin kα with K = n/2 − 1.
    pub fn to_coeffs(&self, values: &[f64]) -> Vec<f64> {
        let n = self.n_modes();
        let spec = self.fourier.forward(values);
        let inv = 1.0 / n as f64;
        let mut c = Vec::with_capacity(n - 1);
        c.push(spec[0].re * inv);
        for s in spec.iter().take(n / 2).skip(1) {
            c.push(2.0 * s.re * inv);
            c.push(-2.0 * s.im * inv);
        }
        c
    }

    pub fn from_coeffs(&self, coeffs: &[f64]) -> Vec<f64> {
        let n = self.n_modes();
        let mut spec = vec![Complex64::new(0.0, 0.0); n];
        spec[0] = Complex64::new(coeffs[0] * n as f64, 0.0);
        for k in 1..n / 2 {
            let z = Complex64::new(coeffs[2 * k - 1], -coeffs[2 * k]) * (0.5 * n as f64);
            spec[k] = z;
            spec[n - k] = z.conj();
        }
        self.fourier.inverse_real(spec)
    }
}

/// Rotates real Fourier coefficients in place: u(α) ↦ u(α + shift).
pub fn rotate_coeffs(coeffs: &mut [f64], shift: f64) {
    let kmax = (coeffs.len() - 1) / 2;
    for k in 1..=kmax {
        let (s, c) = (k as f64 * shift).sin_cos();
        let a = coeffs[2 * k - 1];
        let b = coeffs[2 * k];
        coeffs[2 * k - 1] = a * c + b * s;
        coeffs[2 * k] = -a * s + b * c;
    }
}

/// Uniform periodic grid on 𝕋¹ or 𝕋², nodes at cell centres, row-major.
#[derive(Debug, Clone)]
pub struct TorusGrid {
    n: Vec<usize>,
    length: Vec<f64>,
    fourier: Vec<Fourier1d>,
}

impl TorusGrid {
    pub fn new(n_cells: &[usize], length: &[f64]) -> Result<Self> {
        if n_cells.is_empty() || n_cells.len() > 2 || n_cells.len() != length.len() {
            return Err(Error::param("dim", "torus must be 1- or 2-dimensional with one length per axis"));
        }
        for &n in n_cells {
            if n < 8 || n % 2 != 0 {
                return Err(Error::param("n_cells", format!("must be even and >= 8, got {n}")));
            }
        }
        for &l in length {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::param("length", format!("must be positive, got {l}")));
            }
        }
        Ok(Self {
            n: n_cells.to_vec(),
            length: length.to_vec(),
            fourier: n_cells.iter().map(|&n| Fourier1d::new(n)).collect(),
        })
    }

    pub fn slab(n_cells: usize, length: f64) -> Result<Self> {
        Self::new(&[n_cells], &[length])
    }

    pub fn dim(&self) -> usize {
        self.n.len()
    }

    pub fn n_cells(&self) -> &[usize] {
        &self.n
    }

    pub fn lengths(&self) -> &[f64] {
        &self.length
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.length[axis] / self.n[axis] as f64
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).fold(f64::INFINITY, f64::min)
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    pub fn volume(&self) -> f64 {
        self.length.iter().product()
    }

    /// Multi-index of a flat index.
    pub fn unflatten(&self, idx: usize) -> [usize; 2] {
        if self.dim() == 1 {
            [idx, 0]
        } else {
            [idx / self.n[1], idx % self.n[1]]
        }
    }

    /// Flat index with periodic wrapping of each component.
    pub fn flatten_wrapped(&self, i: [i64; 2]) -> usize {
        let w = |v: i64, n: usize| v.rem_euclid(n as i64) as usize;
        if self.dim() == 1 {
            w(i[0], self.n[0])
        } else {
            w(i[0], self.n[0]) * self.n[1] + w(i[1], self.n[1])
        }
    }

    /// Cell-centre coordinates of a flat index.
    pub fn coords(&self, idx: usize) -> [f64; 2] {
        let m = self.unflatten(idx);
        let mut x = [0.0; 2];
        for a in 0..self.dim() {
            x[a] = (m[a] as f64 + 0.5) * self.spacing(a);
        }
        x
    }

    pub fn sample<F: Fn([f64; 2]) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len()).map(|i| f(self.coords(i))).collect()
    }

    pub fn check_len(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} spatial samples, got {}",
                self.len(),
                values.len()
            )));
        }
        Ok(())
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.cell_volume() * values.iter().sum::<f64>()
    }

    /// Wavevector (2πk/L per axis) and FFT bin flags for a flat spectral index.
    pub fn wavevector(&self, idx: usize) -> ([f64; 2], [i64; 2], [bool; 2]) {
        let m = self.unflatten(idx);
        let mut kv = [0.0; 2];
        let mut ki = [0; 2];
        let mut nyq = [false; 2];
        for a in 0..self.dim() {
            ki[a] = self.fourier[a].wavenumber(m[a]);
            kv[a] = 2.0 * PI * ki[a] as f64 / self.length[a];
            nyq[a] = self.fourier[a].is_nyquist(m[a]);
        }
        (kv, ki, nyq)
    }

    /// Complex n-D FFT in place (row-major data).
    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        self.transform(buf, true);
    }

    /// Normalised inverse n-D FFT in place.
    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        self.transform(buf, false);
    }

    fn transform(&self, buf: &mut [Complex64], forward: bool) {
        let apply = |f: &Fourier1d, line: &mut [Complex64]| {
            if forward {
                f.forward_in_place(line)
            } else {
                f.inverse_in_place(line)
            }
        };
        if self.dim() == 1 {
            apply(&self.fourier[0], buf);
            return;
        }
        let (n0, n1) = (self.n[0], self.n[1]);
        for row in buf.chunks_mut(n1) {
            apply(&self.fourier[1], row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); n0];
        for j in 0..n1 {
            for i in 0..n0 {
                col[i] = buf[i * n1 + j];
            }
            apply(&self.fourier[0], &mut col);
            for i in 0..n0 {
                buf[i * n1 + j] = col[i];
            }
        }
    }

    pub fn spectrum(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward_in_place(&mut buf);
        buf
    }

    pub fn real_from_spectrum(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        self.inverse_in_place(&mut spec);
        spec.into_iter().map(|c| c.re).collect()
    }

    /// Spectral derivative of the given order along one axis.
    pub fn derivative(&self, values: &[f64], axis: usize, order: u32) -> Result<Vec<f64>> {
        self.check_len(values)?;
        if axis >= self.dim() {
            return Err(Error::param("axis", format!("axis {axis} out of range")));
        }
        ensure_finite(values, "spatial derivative input")?;
        Ok(self.d(values, axis, order))
    }

    pub(crate) fn d(&self, values: &[f64], axis: usize, order: u32) -> Vec<f64> {
        if self.dim() == 1 {
            return self.fourier[0].derivative(values, order, self.length[0]);
        }
        let mut spec = self.spectrum(values);
        for (idx, c) in spec.iter_mut().enumerate() {
            let m = self.unflatten(idx);
            *c *= self.fourier[axis].derivative_symbol(m[axis], order, self.length[axis]);
        }
        self.real_from_spectrum(spec)
    }

    pub fn gradient(&self, values: &[f64]) -> Vec<Vec<f64>> {
        (0..self.dim()).map(|a| self.d(values, a, 1)).collect()
    }

    pub fn laplacian(&self, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; values.len()];
        for a in 0..self.dim() {
            for (o, v) in out.iter_mut().zip(self.d(values, a, 2)) {
                *o += v;
            }
        }
        out
    }

    pub fn filter(&self, values: &[f64], filter: SpectralFilter) -> Vec<f64> {
        if filter == SpectralFilter::None {
            return values.to_vec();
        }
        let mut spec = self.spectrum(values);
        for (idx, c) in spec.iter_mut().enumerate() {
            let (_, ki, _) = self.wavevector(idx);
            let mut f = 1.0;
            for a in 0..self.dim() {
                f *= filter.factor(ki[a], self.n[a]);
            }
            *c *= f;
        }
        self.real_from_spectrum(spec)
    }
}

/// Node placement on (0, π).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaRule {
    GaussLegendre,
    /// Midpoint nodes θ_i = (i + ½)π/n with Fejér weights.
    UniformInterior,
}

/// Quadrature nodes strictly inside (0, π).
#[derive(Debug, Clone)]
pub struct ThetaGrid {
    rule: ThetaRule,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Weights for integrands that are even trigonometric polynomials in θ.
    even_weights: Vec<f64>,
}

impl ThetaGrid {
    pub fn new(n_nodes: usize, rule: ThetaRule) -> Result<Self> {
        if n_nodes < 2 {
            return Err(Error::param("n_nodes", "need at least 2 nodes"));
        }
        let (nodes, weights) = match rule {
            ThetaRule::GaussLegendre => {
                let (x, w) = gauss_legendre(n_nodes);
                let nodes = x.iter().map(|x| 0.5 * PI * (x + 1.0)).collect();
                let weights: Vec<f64> = w.iter().map(|w| 0.5 * PI * w).collect();
                (nodes, weights)
            }
            ThetaRule::UniformInterior => {
                // Fejér's first rule in x = cos θ, divided by sin θ: exact for
                // P(cos θ) sin θ with deg P < n.
                let h = PI / n_nodes as f64;
                let nodes: Vec<f64> = (0..n_nodes).map(|i| (i as f64 + 0.5) * h).collect();
                let weights = nodes
                    .iter()
                    .map(|&t| {
                        let s: f64 = (1..=n_nodes / 2)
                            .map(|k| (2.0 * k as f64 * t).cos() / (4.0 * (k * k) as f64 - 1.0))
                            .sum();
                        2.0 / n_nodes as f64 * (1.0 - 2.0 * s) / t.sin()
                    })
                    .collect();
                (nodes, weights)
            }
        };
        let even_weights = match rule {
            ThetaRule::GaussLegendre => weights.clone(),
            ThetaRule::UniformInterior => vec![PI / n_nodes as f64; n_nodes],
        };
        Ok(Self {
            rule,
            nodes,
            weights,
            even_weights,
        })
    }

    pub fn gauss_legendre(n_nodes: usize) -> Result<Self> {
        Self::new(n_nodes, ThetaRule::GaussLegendre)
    }

    pub fn rule(&self) -> ThetaRule {
        self.rule
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weights for ∫ sinᵖθ C(θ) dθ with C a cosine polynomial. On the
    /// uniform-interior grid the midpoint rule is exact for even p and the
    /// default weights for odd p; Gauss–Legendre weights serve both.
    pub fn parity_weights(&self, odd: bool) -> &[f64] {
        if odd {
            &self.weights
        } else {
            &self.even_weights
        }
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&t, w)| w * f(t)).sum()
    }
}

/// Discrete check of ∇_ω·((Id − ω⊗ω)V) = −(n − 1) ω·V on S¹ (n = 2):
/// returns the max-norm residual between the two sides.
pub fn sphere_divergence_identity_check(grid: &AngularGrid, v: [f64; 2]) -> f64 {
    // tangential component τ·V of the projected field
    let a: Vec<f64> = grid
        .cos()
        .iter()
        .zip(grid.sin())
        .map(|(c, s)| -s * v[0] + c * v[1])
        .collect();
    let lhs = grid.d(&a, 1);
    lhs.iter()
        .zip(grid.cos().iter().zip(grid.sin()))
        .map(|(l, (c, s))| (l + (c * v[0] + s * v[1])).abs())
        .fold(0.0, f64::max)
}

/// (⟨f⟩, ⟨ω f⟩) on the angular grid.
pub fn moment_integrals(grid: &AngularGrid, f: &[f64]) -> Result<(f64, [f64; 2])> {
    grid.check_len(f)?;
    ensure_finite(f, "moment integrand")?;
    Ok(grid.moments(f))
}
