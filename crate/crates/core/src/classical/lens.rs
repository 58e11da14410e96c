//! Lens transform for the harmonic profile equation.
//!
//! With `(μ, ν)` from [`OscillatorPair`], `v(s, z) = ν^{1/2} u(τ, νz) e^{−iν'ν z²/2}`
//! and `s = μ/ν` map `i∂τ u = −½∂²u + ½ω²(τ)y²u + κ|u|²u` to
//! `i∂s v = −½∂²v + κν(τ(s))|v|²v`.

use num_complex::Complex64;

use crate::error::Result;
use crate::grid::{BandLimited, Spectral, SpatialGrid, DEFAULT_BAND_CUTOFF};

use super::oscillator::OscillatorPair;

/// Maps `u` sampled on `grid` at absolute time `t` to the lens variable.
/// Returns the lens time together with `v` on the same grid.
pub fn lens_forward(
    grid: &SpatialGrid,
    spectral: &mut Spectral,
    u: &[Complex64],
    t: f64,
    osc: &OscillatorPair,
) -> Result<(f64, Vec<Complex64>)> {
    let st = osc.at_time(t)?;
    let s = st.mu / st.nu;
    let band = BandLimited::new(grid, spectral, u, DEFAULT_BAND_CUTOFF);
    let amp = st.nu.sqrt();
    let chirp = st.dnu * st.nu;
    let v = grid
        .points()
        .map(|z| {
            let y = st.nu * z;
            let val = if grid.contains(y) { band.eval(y) } else { Complex64::new(0.0, 0.0) };
            val * amp * Complex64::from_polar(1.0, -0.5 * chirp * z * z)
        })
        .collect();
    Ok((s, v))
}

/// Inverse of [`lens_forward`]: returns the absolute time and `u` on `grid`.
pub fn lens_inverse(
    grid: &SpatialGrid,
    spectral: &mut Spectral,
    v: &[Complex64],
    s: f64,
    osc: &OscillatorPair,
) -> Result<(f64, Vec<Complex64>)> {
    let tau = osc.tau_of_s(s)?;
    let st = osc.at(tau)?;
    let band = BandLimited::new(grid, spectral, v, DEFAULT_BAND_CUTOFF);
    let amp = 1.0 / st.nu.sqrt();
    let chirp = st.dnu / st.nu;
    let u = grid
        .points()
        .map(|y| {
            let z = y / st.nu;
            let val = if grid.contains(z) { band.eval(z) } else { Complex64::new(0.0, 0.0) };
            val * amp * Complex64::from_polar(1.0, 0.5 * chirp * y * y)
        })
        .collect();
    Ok((osc.t_origin() + tau, u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::oscillator::solve_oscillator;

    #[test]
    fn round_trip_and_mass() {
        let grid = SpatialGrid::centered(512, 20.0).unwrap();
        let mut sp = Spectral::new(grid.n());
        let osc = solve_oscillator(|_| Ok(1.0), 0.25, 0.9, 1e-3, 1e-3).unwrap();
        let u: Vec<Complex64> = grid
            .points()
            .map(|y| Complex64::from_polar((-(y - 0.5f64).powi(2)).exp(), 0.3 * y))
            .collect();
        let t = 0.25 + 0.7;
        let (s, v) = lens_forward(&grid, &mut sp, &u, t, &osc).unwrap();
        assert!((s - 0.7f64.tan()).abs() < 1e-10);
        assert!((grid.mass(&v) - grid.mass(&u)).abs() < 1e-10);
        let (t_back, w) = lens_inverse(&grid, &mut sp, &v, s, &osc).unwrap();
        assert!((t_back - t).abs() < 1e-9);
        for (a, b) in u.iter().zip(&w) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn identity_at_origin() {
        let grid = SpatialGrid::centered(128, 10.0).unwrap();
        let mut sp = Spectral::new(grid.n());
        let osc = solve_oscillator(|_| Ok(2.0), -1.0, 0.3, 1e-3, 1e-3).unwrap();
        let u: Vec<Complex64> = grid.points().map(|y| Complex64::new((-y * y).exp(), 0.0)).collect();
        let (s, v) = lens_forward(&grid, &mut sp, &u, -1.0, &osc).unwrap();
        assert_eq!(s, 0.0);
        for (a, b) in u.iter().zip(&v) {
            assert!((a - b).norm() < 1e-13);
        }
    }
}
