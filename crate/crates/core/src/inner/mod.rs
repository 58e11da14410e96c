//! The crossing region in rescaled variables `s = t/√ε`, `y = (x − tξ₀)/√ε`.

mod family;
mod gamma;
mod scattering;

use num_complex::Complex64;
use rayon::prelude::*;

pub use family::{integrate_lz_family, nonlinear_lz, FamilyRun, InnerField, LzSample};
pub use gamma::gamma;
pub use scattering::{
    lz_phase, numeric_scattering, scattering_coeffs, scattering_table, transition_probability, ScatteringData,
};

use crate::classical::{ClassicalPath, PathSample};
use crate::diagnostics::{convergence_fit, ConvergenceFit};
use crate::error::{Error, Result};
use crate::grid::{BandLimited, Spectral, SpatialGrid};
use crate::params::SemiclassicalParams;
use crate::potential::eigenpair;
use crate::profile::ProfileState;
use crate::semiclassical::SpinorField;

/// Fraction of the peak modulus that marks the occupied y-range.
pub const OCCUPIED_FRACTION: f64 = 1e-6;
const EDGE_CELLS: usize = 4;

/// Inner data at `s = −s^ε` with the neglected-term diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerData {
    pub field: InnerField,
    /// `θ(ε) = −s^ε ξ₀ − x(−t^ε)/√ε`.
    pub theta: f64,
    /// `max |χ⁺(√ε(y − s^εξ₀)) − (0,1)|` over the occupied range.
    pub eigenvector_deviation: f64,
    /// `‖(χ⁺(√ε(y − s^εξ₀)) − (0,1)) u‖_L²`, the deviation weighted by the profile.
    pub weighted_deviation: f64,
    pub occupied: [f64; 2],
}

/// Index range where `|u| > OCCUPIED_FRACTION · max|u|`.
pub fn occupied_range(grid: &SpatialGrid, u: &[Complex64]) -> Option<(usize, usize)> {
    let peak = u.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let lo = u.iter().position(|z| z.norm() > OCCUPIED_FRACTION * peak)?;
    let hi = u.iter().rposition(|z| z.norm() > OCCUPIED_FRACTION * peak)?;
    debug_assert!(hi < grid.n());
    Some((lo, hi))
}

/// Matching phase `φ^ε(y)` built from the integrated path values at `−t^ε`.
pub fn matching_phase(params: &SemiclassicalParams, path: &ClassicalPath, y: f64) -> Result<f64> {
    Ok(phase_from_sample(params, &path.at(-params.t_eps())?, y))
}

fn phase_from_sample(params: &SemiclassicalParams, p: &PathSample, y: f64) -> f64 {
    let sq = params.epsilon().sqrt();
    let se = params.s_eps();
    let xi0 = params.xi0();
    p.action + 0.5 * sq * xi0 * xi0 * se + p.xi * (sq * y - sq * se * xi0 - p.x) - xi0 * sq * y
}

/// `f(−s^ε, y) = u(−t^ε, y)(0, 1)ᵀ e^{iφ^ε(y)/ε}`.
pub fn build_inner_data(
    profile: &ProfileState,
    params: &SemiclassicalParams,
    path: &ClassicalPath,
    y_grid: &SpatialGrid,
) -> Result<InnerData> {
    let te = params.t_eps();
    if (profile.t + te).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("profile is at t = {}, matching needs {}", profile.t, -te)));
    }
    let (lo, hi) = occupied_range(y_grid, &profile.u).ok_or_else(|| Error::InvalidParameter("empty profile".into()))?;
    if lo < EDGE_CELLS || hi + EDGE_CELLS >= y_grid.n() {
        return Err(Error::OutsideWindow("occupied y-range reaches the grid edge".into()));
    }
    let eps = params.epsilon();
    let sq = eps.sqrt();
    let se = params.s_eps();
    let xi0 = params.xi0();
    let p = path.at(-te)?;
    let mut f2 = Vec::with_capacity(y_grid.n());
    for (j, y) in y_grid.points().enumerate() {
        let phi = phase_from_sample(params, &p, y);
        f2.push(profile.u[j] * Complex64::from_polar(1.0, phi / eps));
    }
    let mut deviation: f64 = 0.0;
    let mut weighted = 0.0;
    for j in lo..=hi {
        let y = y_grid.point(j);
        let chi = eigenpair(sq * (y - se * xi0), params.delta()).chi_plus;
        let d = chi[0].hypot(chi[1] - 1.0);
        deviation = deviation.max(d);
        weighted += (d * profile.u[j].norm()).powi(2);
    }
    let field = InnerField { s: -se, y_grid: y_grid.clone(), f: [vec![Complex64::new(0.0, 0.0); y_grid.n()], f2] };
    Ok(InnerData {
        field,
        theta: -se * xi0 - p.x / sq,
        eigenvector_deviation: deviation,
        weighted_deviation: (weighted * y_grid.dx()).sqrt(),
        occupied: [y_grid.point(lo), y_grid.point(hi)],
    })
}

fn galilean_phase(params: &SemiclassicalParams, t: f64, x: f64) -> f64 {
    let xi0 = params.xi0();
    (0.5 * xi0 * xi0 * t + xi0 * (x - t * xi0)) / params.epsilon()
}

/// `ψ(t, x) = ε^{−1/4} f(t/√ε, (x − tξ₀)/√ε) e^{iξ₀²t/2ε + iξ₀(x−tξ₀)/ε}` on `grid`.
pub fn rescale_to_physical(f: &InnerField, params: &SemiclassicalParams, grid: &SpatialGrid) -> Result<SpinorField> {
    let eps = params.epsilon();
    let sq = eps.sqrt();
    let t = f.s * sq;
    let (lo, hi) = occupied_range(&f.y_grid, &f.f[0])
        .into_iter()
        .chain(occupied_range(&f.y_grid, &f.f[1]))
        .fold((usize::MAX, 0), |(a, b), (l, h)| (a.min(l), b.max(h)));
    if lo <= hi {
        let xl = t * params.xi0() + sq * f.y_grid.point(lo);
        let xh = t * params.xi0() + sq * f.y_grid.point(hi);
        if !(grid.contains(xl) && grid.contains(xh)) {
            return Err(Error::OutsideWindow("inner support exceeds the physical grid".into()));
        }
    }
    let mut spectral = Spectral::new(f.y_grid.n());
    let bands = [
        BandLimited::new(&f.y_grid, &mut spectral, &f.f[0], 1e-14),
        BandLimited::new(&f.y_grid, &mut spectral, &f.f[1], 1e-14),
    ];
    let scale = eps.powf(-0.25);
    let xs: Vec<f64> = grid.points().collect();
    let (a, b) = xs
        .par_iter()
        .map(|&x| {
            let y = (x - t * params.xi0()) / sq;
            if !f.y_grid.contains(y) {
                return (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            }
            let ph = Complex64::from_polar(scale, galilean_phase(params, t, x));
            (bands[0].eval(y) * ph, bands[1].eval(y) * ph)
        })
        .unzip();
    Ok(SpinorField { grid: grid.clone(), t, psi: [a, b] })
}

/// Inverse of [`rescale_to_physical`]: samples `v^ε(s, y)` from a physical
/// field on `y_grid`.
pub fn physical_to_inner(psi: &SpinorField, params: &SemiclassicalParams, y_grid: &SpatialGrid) -> InnerField {
    let eps = params.epsilon();
    let sq = eps.sqrt();
    let t = psi.t;
    let mut spectral = Spectral::new(psi.grid.n());
    // keep modes well above the round-off floor so evaluation stays cheap
    let bands = [
        BandLimited::new(&psi.grid, &mut spectral, &psi.psi[0], 1e-13),
        BandLimited::new(&psi.grid, &mut spectral, &psi.psi[1], 1e-13),
    ];
    let scale = eps.powf(0.25);
    let ys: Vec<f64> = y_grid.points().collect();
    let (a, b) = ys
        .par_iter()
        .map(|&y| {
            let x = t * params.xi0() + sq * y;
            if !psi.grid.contains(x) {
                return (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            }
            let ph = Complex64::from_polar(scale, -galilean_phase(params, t, x));
            (bands[0].eval(x) * ph, bands[1].eval(x) * ph)
        })
        .unzip();
    InnerField { s: t / sq, y_grid: y_grid.clone(), f: [a, b] }
}

/// `sup_s ‖∂^k_y f(s)‖_L²` for k = 0, 1, 2 over a trajectory.
pub fn derivative_norms(trajectory: &[InnerField]) -> [f64; 3] {
    let mut out = [0.0; 3];
    let Some(first) = trajectory.first() else {
        return out;
    };
    let mut spectral = Spectral::new(first.y_grid.n());
    for f in trajectory {
        for k in 0..3u32 {
            let mut m = 0.0;
            for c in 0..2 {
                let d = spectral.derivative(&f.y_grid, &f.f[c], k);
                m += f.y_grid.mass(&d);
            }
            out[k as usize] = f64::max(out[k as usize], m.sqrt());
        }
    }
    out
}

/// Fitted ε-exponents of `sup_s ‖∂^k_y f‖` for k = 1, 2, to be compared with `−kγ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeGrowthReport {
    pub gamma: f64,
    pub fits: [ConvergenceFit; 2],
    /// `sup_s ‖f‖` spread across the sweep; zero growth expected.
    pub k0_spread: f64,
}

impl DerivativeGrowthReport {
    pub fn expected(&self, k: usize) -> f64 {
        -(k as f64) * self.gamma
    }
}

/// Takes `(ε, [k=0, k=1, k=2 norms])` from a sweep.
pub fn derivative_growth_check(sweep: &[(f64, [f64; 3])], gamma: f64) -> Result<DerivativeGrowthReport> {
    let fit = |k: usize| convergence_fit(&sweep.iter().map(|(e, n)| (*e, n[k])).collect::<Vec<_>>());
    let k0: Vec<f64> = sweep.iter().map(|(_, n)| n[0]).collect();
    let spread = k0.iter().cloned().fold(f64::MIN, f64::max) - k0.iter().cloned().fold(f64::MAX, f64::min);
    Ok(DerivativeGrowthReport { gamma, fits: [fit(1)?, fit(2)?], k0_spread: spread })
}
