//! Uniform periodic 1-D grids and the spectral machinery built on them.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform periodic grid `x_j = x_min + j·dx`, `j = 0..n`, with the standard
/// FFT-ordered wavenumbers.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    n: usize,
    x_min: f64,
    x_max: f64,
    dx: f64,
    wavenumbers: Vec<f64>,
}

impl SpatialGrid {
    pub fn new(n: usize, x_min: f64, x_max: f64) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidParameter(format!("grid size must be a power of two, got {n}")));
        }
        if !(x_min.is_finite() && x_max.is_finite() && x_min < x_max) {
            return Err(Error::InvalidParameter(format!("invalid grid domain [{x_min}, {x_max}]")));
        }
        let length = x_max - x_min;
        let dx = length / n as f64;
        let dk = 2.0 * PI / length;
        let wavenumbers = (0..n).map(|j| signed_index(j, n) as f64 * dk).collect();
        Ok(Self { n, x_min, x_max, dx, wavenumbers })
    }

    /// Symmetric grid `[−half_width, half_width)`.
    pub fn centered(n: usize, half_width: f64) -> Result<Self> {
        Self::new(n, -half_width, half_width)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn dk(&self) -> f64 {
        2.0 * PI / self.length()
    }

    pub fn point(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|j| self.point(j))
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_min && x < self.x_max
    }

    /// Rectangle-rule L² norm squared (spectrally accurate for periodic data).
    pub fn mass(&self, u: &[Complex64]) -> f64 {
        u.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dx
    }

    pub fn l2_norm(&self, u: &[Complex64]) -> f64 {
        self.mass(u).sqrt()
    }

    /// Largest modulus among the first and last `width` samples.
    pub fn edge_amplitude(&self, u: &[Complex64], width: usize) -> f64 {
        let w = width.min(self.n / 2);
        u[..w].iter().chain(&u[self.n - w..]).map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// FFT index `j` mapped to the signed frequency index in `[−n/2, n/2)`.
pub fn signed_index(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Forward/inverse transforms for one grid size. The inverse is normalised,
/// so `inverse(forward(u)) == u`.
#[derive(Clone)]
pub struct Spectral {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("n", &self.n).finish()
    }
}

impl Spectral {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        Self { n, forward, inverse, scratch: vec![Complex64::new(0.0, 0.0); len] }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn forward(&mut self, u: &mut [Complex64]) {
        self.forward.process_with_scratch(u, &mut self.scratch);
    }

    pub fn inverse(&mut self, u: &mut [Complex64]) {
        self.inverse.process_with_scratch(u, &mut self.scratch);
        let scale = 1.0 / self.n as f64;
        u.iter_mut().for_each(|z| *z *= scale);
    }

    /// Applies a diagonal Fourier multiplier in place.
    pub fn apply_multiplier(&mut self, u: &mut [Complex64], multiplier: &[Complex64]) {
        self.forward(u);
        u.iter_mut().zip(multiplier).for_each(|(z, m)| *z *= m);
        self.inverse(u);
    }

    /// `order`-th spectral derivative. The Nyquist mode is dropped for odd orders.
    pub fn derivative(&mut self, grid: &SpatialGrid, u: &[Complex64], order: u32) -> Vec<Complex64> {
        let mut out = u.to_vec();
        if order == 0 {
            return out;
        }
        self.forward(&mut out);
        let nyquist = self.n / 2;
        for (j, (z, &k)) in out.iter_mut().zip(grid.wavenumbers()).enumerate() {
            if order % 2 == 1 && j == nyquist {
                *z = Complex64::new(0.0, 0.0);
            } else {
                *z *= Complex64::new(0.0, k).powu(order);
            }
        }
        self.inverse(&mut out);
        out
    }
}

/// Trigonometric interpolant of periodic samples, evaluable at arbitrary
/// points. Modes whose magnitude is below `cutoff × max` are discarded,
/// and the retained signed-index band is contiguous.
#[derive(Debug, Clone)]
pub struct BandLimited {
    x_min: f64,
    dk: f64,
    first: i64,
    coeffs: Vec<Complex64>,
}

pub const DEFAULT_BAND_CUTOFF: f64 = 1e-16;

impl BandLimited {
    pub fn new(grid: &SpatialGrid, spectral: &mut Spectral, u: &[Complex64], cutoff: f64) -> Self {
        let n = grid.n();
        let mut hat = u.to_vec();
        spectral.forward(&mut hat);
        let scale = 1.0 / n as f64;
        // reorder into ascending signed index
        let mut ordered: Vec<Complex64> = (0..n).map(|m| hat[(m + n / 2) % n] * scale).collect();
        // Split the Nyquist mode symmetrically so the interpolant is real for real data.
        let half = ordered[0] * 0.5;
        ordered[0] = half;
        ordered.push(half);
        let first_signed = -(n as i64) / 2;
        let peak = ordered.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let keep = |z: &Complex64| z.norm() > cutoff * peak;
        let lo = ordered.iter().position(keep);
        let hi = ordered.iter().rposition(keep);
        let (lo, hi) = match (lo, hi) {
            (Some(lo), Some(hi)) => (lo, hi),
            _ => (0, 0),
        };
        Self {
            x_min: grid.x_min(),
            dk: grid.dk(),
            first: first_signed + lo as i64,
            coeffs: if peak > 0.0 { ordered[lo..=hi].to_vec() } else { Vec::new() },
        }
    }

    pub fn bandwidth(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        if self.coeffs.is_empty() {
            return Complex64::new(0.0, 0.0);
        }
        let theta = self.dk * (x - self.x_min);
        let step = Complex64::from_polar(1.0, theta);
        let mut phase = Complex64::from_polar(1.0, theta * self.first as f64);
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, &c) in self.coeffs.iter().enumerate() {
            acc += c * phase;
            // re-anchor the recurrence periodically to bound round-off growth
            if (m + 1) % 64 == 0 {
                phase = Complex64::from_polar(1.0, theta * (self.first + m as i64 + 1) as f64);
            } else {
                phase *= step;
            }
        }
        acc
    }
}

/// Evaluates the interpolant of `u` at each of `points`; points outside the
/// grid's periodic cell evaluate to zero.
pub fn resample(grid: &SpatialGrid, spectral: &mut Spectral, u: &[Complex64], points: &[f64]) -> Vec<Complex64> {
    let band = BandLimited::new(grid, spectral, u, DEFAULT_BAND_CUTOFF);
    points
        .iter()
        .map(|&x| if grid.contains(x) { band.eval(x) } else { Complex64::new(0.0, 0.0) })
        .collect()
}
