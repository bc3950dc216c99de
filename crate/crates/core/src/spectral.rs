//! Periodic Fourier machinery shared by the angular and spatial grids.
//!
//! Samples live on `n` uniform nodes of a period `length`. Odd-order
//! derivatives drop the Nyquist mode (its derivative is not representable
//! on the nodes); even orders keep it.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Planned forward/inverse FFT pair of a fixed size.
#[derive(Clone)]
pub struct Fourier1d {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Fourier1d {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fourier1d").field("n", &self.n).finish()
    }
}

impl Fourier1d {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Signed integer wavenumber of FFT bin `i`.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    #[inline]
    pub fn is_nyquist(&self, i: usize) -> bool {
        self.n % 2 == 0 && i == self.n / 2
    }

    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(values.len(), self.n);
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fwd.process(&mut buf);
        buf
    }

    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        self.fwd.process(buf);
    }

    /// Inverse transform including the 1/n normalisation; returns the real part.
    pub fn inverse_real(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        self.inv.process(&mut spectrum);
        let scale = 1.0 / self.n as f64;
        spectrum.into_iter().map(|c| c.re * scale).collect()
    }

    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        self.inv.process(buf);
        let scale = 1.0 / self.n as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
    }

    /// Multiplier applied to bin `i` for a derivative of the given order on a
    /// period of `length`.
    #[inline]
    pub fn derivative_symbol(&self, i: usize, order: u32, length: f64) -> Complex64 {
        if order % 2 == 1 && self.is_nyquist(i) {
            return Complex64::new(0.0, 0.0);
        }
        let k = 2.0 * std::f64::consts::PI * self.wavenumber(i) as f64 / length;
        Complex64::new(0.0, k).powu(order)
    }

    pub fn derivative(&self, values: &[f64], order: u32, length: f64) -> Vec<f64> {
        if order == 0 {
            return values.to_vec();
        }
        let mut spec = self.forward(values);
        for (i, c) in spec.iter_mut().enumerate() {
            *c *= self.derivative_symbol(i, order, length);
        }
        self.inverse_real(spec)
    }

    /// Band-limited translate: returns samples of `u(x + shift)`.
    /// The Nyquist bin is dropped because its translate is not real.
    pub fn translate(&self, values: &[f64], shift: f64, length: f64) -> Vec<f64> {
        let mut spec = self.forward(values);
        for (i, c) in spec.iter_mut().enumerate() {
            if self.is_nyquist(i) {
                *c = Complex64::new(0.0, 0.0);
                continue;
            }
            let k = 2.0 * std::f64::consts::PI * self.wavenumber(i) as f64 / length;
            *c *= Complex64::from_polar(1.0, k * shift);
        }
        self.inverse_real(spec)
    }
}

/// Spectral filter applied to products in nonlinear right-hand sides.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectralFilter {
    None,
    /// Zero every mode with |k| > n/3.
    TwoThirds,
    /// exp(-strength (|k|/k_max)^order).
    Exponential { strength: f64, order: u32 },
}

impl Default for SpectralFilter {
    fn default() -> Self {
        SpectralFilter::Exponential {
            strength: 36.0,
            order: 36,
        }
    }
}

impl SpectralFilter {
    /// Damping factor for integer wavenumber `k` on an `n`-point grid.
    pub fn factor(&self, k: i64, n: usize) -> f64 {
        let kmax = (n / 2) as f64;
        let ka = k.unsigned_abs() as f64;
        match *self {
            SpectralFilter::None => 1.0,
            SpectralFilter::TwoThirds => {
                if 3.0 * ka > n as f64 {
                    0.0
                } else {
                    1.0
                }
            }
            SpectralFilter::Exponential { strength, order } => {
                (-strength * (ka / kmax).powi(order as i32)).exp()
            }
        }
    }
}
