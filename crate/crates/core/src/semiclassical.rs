//! Full two-component solver for
//! `i∂ₜψ = −(ε/2)∂²ψ + (1/ε)V_δ(x)ψ + κ√ε|ψ|²ψ`, coherent-state data and
//! the outer approximation.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::classical::ClassicalPath;
use crate::error::{Error, Result};
use crate::grid::{BandLimited, Spectral, SpatialGrid, DEFAULT_BAND_CUTOFF};
use crate::params::SemiclassicalParams;
use crate::potential::{apply, eigenpair, pointwise_propagator, CMat2};
use crate::profile::ProfileState;

#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField {
    pub grid: SpatialGrid,
    pub t: f64,
    pub psi: [Vec<Complex64>; 2],
}

impl SpinorField {
    pub fn new(grid: SpatialGrid, t: f64, psi: [Vec<Complex64>; 2]) -> Result<Self> {
        if psi[0].len() != grid.n() || psi[1].len() != grid.n() {
            return Err(Error::InvalidParameter("field size does not match grid".into()));
        }
        Ok(Self { grid, t, psi })
    }

    pub fn zeros(grid: SpatialGrid, t: f64) -> Self {
        let n = grid.n();
        Self { grid, t, psi: [vec![Complex64::new(0.0, 0.0); n], vec![Complex64::new(0.0, 0.0); n]] }
    }

    pub fn mass(&self) -> f64 {
        self.grid.mass(&self.psi[0]) + self.grid.mass(&self.psi[1])
    }

    /// `∫x|ψ|² / ∫|ψ|²`.
    pub fn centroid(&self) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for (j, x) in self.grid.points().enumerate() {
            let w = self.psi[0][j].norm_sqr() + self.psi[1][j].norm_sqr();
            num += x * w;
            den += w;
        }
        num / den
    }

    pub fn edge_amplitude(&self, width: usize) -> f64 {
        self.grid.edge_amplitude(&self.psi[0], width).max(self.grid.edge_amplitude(&self.psi[1], width))
    }

    /// Rows `(x, Re ψ₁, Im ψ₁, Re ψ₂, Im ψ₂)`.
    pub fn snapshot_rows(&self) -> Vec<Vec<f64>> {
        self.grid
            .points()
            .enumerate()
            .map(|(j, x)| vec![x, self.psi[0][j].re, self.psi[0][j].im, self.psi[1][j].re, self.psi[1][j].im])
            .collect()
    }

    /// Little-endian layout: `n` as u64, then `x_min, x_max, t` as f64, then
    /// for each grid point `Re ψ₁, Im ψ₁, Re ψ₂, Im ψ₂` as f64.
    pub fn to_binary(&self) -> Vec<u8> {
        let n = self.grid.n();
        let mut out = Vec::with_capacity(32 + 32 * n);
        out.extend_from_slice(&(n as u64).to_le_bytes());
        for v in [self.grid.x_min(), self.grid.x_max(), self.t] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for j in 0..n {
            for v in [self.psi[0][j].re, self.psi[0][j].im, self.psi[1][j].re, self.psi[1][j].im] {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_binary(bytes: &[u8]) -> Result<Self> {
        let bad = || Error::InvalidParameter("malformed snapshot".into());
        let word = |i: usize| -> Result<[u8; 8]> { bytes.get(8 * i..8 * i + 8).ok_or_else(bad)?.try_into().map_err(|_| bad()) };
        let n = u64::from_le_bytes(word(0)?) as usize;
        if bytes.len() != 32 + 32 * n {
            return Err(bad());
        }
        let f = |i: usize| -> Result<f64> { Ok(f64::from_le_bytes(word(i)?)) };
        let grid = SpatialGrid::new(n, f(1)?, f(2)?)?;
        let mut field = SpinorField::zeros(grid, f(3)?);
        for j in 0..n {
            let b = 4 + 4 * j;
            field.psi[0][j] = Complex64::new(f(b)?, f(b + 1)?);
            field.psi[1][j] = Complex64::new(f(b + 2)?, f(b + 3)?);
        }
        Ok(field)
    }
}

/// Physical domain holding `[x⁺(−T), x⁺(T)]` plus `margin` packet widths √ε on
/// each side.
pub fn auto_domain(params: &SemiclassicalParams, path: &ClassicalPath, margin: f64) -> Result<[f64; 2]> {
    let t = params.horizon();
    let lo = path.x_at(-t)?;
    let hi = path.x_at(t)?;
    let w = margin * params.epsilon().sqrt();
    Ok([lo.min(hi) - w, lo.max(hi) + w])
}

pub const DOMAIN_MARGIN: f64 = 16.0;

/// `ε^{−1/4} u((x−q)/√ε) e^{i(S + p(x−q))/ε} χ⁺_δ(x)` on `grid`, with `u`
/// sampled on `y_grid`.
pub fn coherent_state(
    params: &SemiclassicalParams,
    sample: crate::classical::PathSample,
    y_grid: &SpatialGrid,
    u: &[Complex64],
    grid: &SpatialGrid,
) -> SpinorField {
    let eps = params.epsilon();
    let sq = eps.sqrt();
    let delta = params.delta();
    let mut spectral = Spectral::new(y_grid.n());
    let band = BandLimited::new(y_grid, &mut spectral, u, DEFAULT_BAND_CUTOFF);
    let scale = eps.powf(-0.25);
    let xs: Vec<f64> = grid.points().collect();
    let (p0, p1): (Vec<Complex64>, Vec<Complex64>) = xs
        .par_iter()
        .map(|&x| {
            let y = (x - sample.x) / sq;
            if !y_grid.contains(y) {
                return (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            }
            let phase = (sample.action + sample.xi * (x - sample.x)) / eps;
            let amp = band.eval(y) * scale * Complex64::from_polar(1.0, phase);
            let chi = eigenpair(x, delta).chi_plus;
            (amp * chi[0], amp * chi[1])
        })
        .unzip();
    SpinorField { grid: grid.clone(), t: sample.t, psi: [p0, p1] }
}

/// Coherent data at `t = −T` polarised along χ⁺.
pub fn build_initial_data(
    a: &ProfileState,
    y_grid: &SpatialGrid,
    params: &SemiclassicalParams,
    path: &ClassicalPath,
    grid: &SpatialGrid,
) -> Result<SpinorField> {
    let report = crate::params::resolution_check(params, grid.n(), [grid.x_min(), grid.x_max()]);
    if !report.passed() {
        return Err(Error::Resolution(report.to_string()));
    }
    let sample = path.at(-params.horizon())?;
    Ok(coherent_state(params, sample, y_grid, &a.u, grid))
}

/// `φ^ε(t) χ⁺` built from the profile at time `t ∈ [−T, −t^ε]`.
pub fn outer_approximation(
    t: f64,
    params: &SemiclassicalParams,
    path: &ClassicalPath,
    profile: &ProfileState,
    y_grid: &SpatialGrid,
    grid: &SpatialGrid,
) -> Result<SpinorField> {
    let limit = -params.t_eps();
    if t > limit * (1.0 - 1e-12) + 1e-15 || t < -params.horizon() * (1.0 + 1e-12) {
        return Err(Error::OutsideWindow(format!("outer approximation needs t in [-T, -t_eps] = [{}, {limit}], got {t}", -params.horizon())));
    }
    if (profile.t - t).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("profile is at t = {}, requested {t}", profile.t)));
    }
    Ok(coherent_state(params, path.at(t)?, y_grid, &profile.u, grid))
}

/// `(‖ψ − approx‖_L², ‖ε∂ₓ(ψ − approx)‖_L²)`.
pub fn error_norms(spectral: &mut Spectral, psi: &SpinorField, approx: &SpinorField, epsilon: f64) -> (f64, f64) {
    let grid = &psi.grid;
    let (mut l2, mut h1) = (0.0, 0.0);
    for c in 0..2 {
        let w: Vec<Complex64> = psi.psi[c].iter().zip(&approx.psi[c]).map(|(a, b)| a - b).collect();
        l2 += grid.mass(&w);
        let dw = spectral.derivative(grid, &w, 1);
        h1 += grid.mass(&dw) * epsilon * epsilon;
    }
    (l2.sqrt(), h1.sqrt())
}

/// Spatial structure of the 2×2 potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialField {
    /// `V_δ(x)` at each grid point.
    AvoidedCrossing,
    /// `V_δ(x₀)` everywhere.
    Frozen(f64),
}

pub struct SemiclassicalSolver {
    field: SpinorField,
    spectral: Spectral,
    epsilon: f64,
    delta: f64,
    nl_coeff: f64,
    dt: f64,
    potential: PotentialField,
    kinetic: Vec<Complex64>,
    half_prop: Vec<CMat2>,
    leak_limit: f64,
    steps: u64,
}

const EDGE_WIDTH: usize = 4;

impl SemiclassicalSolver {
    pub fn new(field: SpinorField, params: &SemiclassicalParams, dt: f64) -> Result<Self> {
        Self::with_potential(field, params, dt, PotentialField::AvoidedCrossing)
    }

    pub fn with_potential(field: SpinorField, params: &SemiclassicalParams, dt: f64, potential: PotentialField) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter("dt must be positive".into()));
        }
        let n = field.grid.n();
        let epsilon = params.epsilon();
        let mut solver = Self {
            spectral: Spectral::new(n),
            epsilon,
            delta: params.delta(),
            nl_coeff: params.kappa() * epsilon.sqrt(),
            dt,
            potential,
            kinetic: Vec::new(),
            half_prop: Vec::new(),
            leak_limit: 1e-6,
            steps: 0,
            field,
        };
        solver.kinetic = solver.kinetic_factor(dt);
        solver.half_prop = solver.propagators(0.5 * dt);
        Ok(solver)
    }

    /// Edge amplitude, in units of the ε^{−1/4} packet scale, that aborts a run.
    pub fn with_leak_limit(mut self, limit: f64) -> Self {
        self.leak_limit = limit;
        self
    }

    pub fn field(&self) -> &SpinorField {
        &self.field
    }

    pub fn into_field(self) -> SpinorField {
        self.field
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    fn kinetic_factor(&self, h: f64) -> Vec<Complex64> {
        let eps = self.epsilon;
        self.field.grid.wavenumbers().iter().map(|&k| Complex64::from_polar(1.0, -0.5 * eps * k * k * h)).collect()
    }

    fn propagators(&self, h: f64) -> Vec<CMat2> {
        let tau = h / self.epsilon;
        let delta = self.delta;
        match self.potential {
            PotentialField::AvoidedCrossing => self.field.grid.points().map(|x| pointwise_propagator(x, delta, tau)).collect(),
            PotentialField::Frozen(x0) => vec![pointwise_propagator(x0, delta, tau); self.field.grid.n()],
        }
    }

    fn pointwise(field: &mut SpinorField, props: &[CMat2], nl: f64, h: f64) {
        let [p0, p1] = &mut field.psi;
        p0.par_iter_mut().zip(p1.par_iter_mut()).zip(props.par_iter()).for_each(|((a, b), m)| {
            let rho = a.norm_sqr() + b.norm_sqr();
            let [na, nb] = apply(m, [*a, *b]);
            let phase = Complex64::from_polar(1.0, -h * nl * rho);
            *a = na * phase;
            *b = nb * phase;
        });
    }

    fn step(&mut self, h: f64) -> Result<()> {
        let shortened = h != self.dt;
        let (props, kin) = if shortened {
            (Some(self.propagators(0.5 * h)), Some(self.kinetic_factor(h)))
        } else {
            (None, None)
        };
        let props = props.as_deref().unwrap_or(&self.half_prop);
        let kin = kin.as_deref().unwrap_or(&self.kinetic);
        Self::pointwise(&mut self.field, props, self.nl_coeff, 0.5 * h);
        for c in 0..2 {
            self.spectral.apply_multiplier(&mut self.field.psi[c], kin);
        }
        Self::pointwise(&mut self.field, props, self.nl_coeff, 0.5 * h);
        self.field.t += h;
        self.steps += 1;
        if self.steps.is_multiple_of(16) || shortened {
            let edge = self.field.edge_amplitude(EDGE_WIDTH) * self.epsilon.powf(0.25);
            if edge > self.leak_limit {
                return Err(Error::BoundaryLeak { amplitude: edge });
            }
        }
        Ok(())
    }

    /// Steps to exactly `t_end`; the last step is shortened when needed.
    pub fn advance_to(&mut self, t_end: f64) -> Result<()> {
        loop {
            let remaining = t_end - self.field.t;
            if remaining <= 1e-9 * self.dt {
                break;
            }
            let h = if remaining < self.dt * (1.0 + 1e-9) { remaining } else { self.dt };
            self.step(h)?;
        }
        if (self.field.t - t_end).abs() <= 1e-9 * self.dt {
            self.field.t = t_end;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::crossing_path;
    use crate::potential::project_modes;
    use crate::profile::initial_profile_gaussian;

    fn params(eps: f64, c: f64, kappa: f64) -> SemiclassicalParams {
        SemiclassicalParams::derive_scales(eps, c, kappa, 2.0, 0.5, 0.1, 1.0).unwrap()
    }

    fn setup(p: &SemiclassicalParams, n: usize) -> (ClassicalPath, SpatialGrid, SpatialGrid, SpinorField) {
        let path = crossing_path(p.xi0(), p.delta(), -p.horizon(), p.horizon(), 1e-5).unwrap();
        let dom = auto_domain(p, &path, DOMAIN_MARGIN).unwrap();
        let grid = SpatialGrid::new(n, dom[0], dom[1]).unwrap();
        let y_grid = SpatialGrid::centered(1024, 20.0).unwrap();
        let a = initial_profile_gaussian(&y_grid);
        let psi = build_initial_data(&a, &y_grid, p, &path, &grid).unwrap();
        (path, grid, y_grid, psi)
    }

    #[test]
    fn initial_data_properties() {
        let p = params(1e-2, 1.0, 0.0);
        let (path, grid, _, psi) = setup(&p, 4096);
        assert!((psi.mass() - 1.0).abs() < 1e-6);
        let xs: Vec<f64> = grid.points().collect();
        let (plus, minus) = project_modes(&xs, &psi.psi, p.delta());
        assert!((grid.mass(&plus) - 1.0).abs() < 1e-6);
        assert!(grid.mass(&minus) < 1e-28);
        let x0 = path.x_at(-0.5).unwrap();
        assert!((psi.centroid() - x0).abs() < 1e-6);
    }

    #[test]
    fn ep_weighted_norm_is_order_one() {
        let p = params(1e-3, 1.0, 0.0);
        let (_, grid, _, psi) = setup(&p, 1 << 14);
        let mut sp = Spectral::new(grid.n());
        let zero = SpinorField::zeros(grid.clone(), psi.t);
        let (l2, h1) = error_norms(&mut sp, &psi, &zero, p.epsilon());
        assert!((l2 - 1.0).abs() < 1e-6);
        // ε‖∂ₓψ‖ ≈ |ξ(−T)|
        assert!(h1 > 0.5 && h1 < 3.0, "{h1}");
    }

    #[test]
    fn error_norm_identities() {
        let p = params(1e-2, 1.0, 0.0);
        let (_, grid, _, psi) = setup(&p, 4096);
        let mut sp = Spectral::new(grid.n());
        assert_eq!(error_norms(&mut sp, &psi, &psi, 0.01), (0.0, 0.0));
        let theta = std::f64::consts::FRAC_PI_2;
        let rot = Complex64::from_polar(1.0, theta);
        let mut other = psi.clone();
        other.psi.iter_mut().for_each(|c| c.iter_mut().for_each(|z| *z *= rot));
        let (l2, _) = error_norms(&mut sp, &other, &psi, 0.01);
        assert!((l2 - 2.0 * (theta / 2.0).sin() * psi.mass().sqrt()).abs() < 1e-12);
    }

    #[test]
    fn outer_at_initial_time_matches() {
        let p = params(1e-2, 1.0, 0.0);
        let (path, grid, y_grid, psi) = setup(&p, 4096);
        let mut a = initial_profile_gaussian(&y_grid);
        a.t = -0.5;
        let outer = outer_approximation(-0.5, &p, &path, &a, &y_grid, &grid).unwrap();
        assert_eq!(outer.psi, psi.psi);
        a.t = 0.0;
        assert!(matches!(outer_approximation(0.0, &p, &path, &a, &y_grid, &grid), Err(Error::OutsideWindow(_))));
    }

    #[test]
    fn frozen_potential_rabi_oracle() {
        let p = params(1e-2, 1.0, 0.0);
        let grid = SpatialGrid::new(256, -1.0, 1.0).unwrap();
        let k0 = grid.wavenumbers()[5];
        let x0 = 0.03;
        let mut field = SpinorField::zeros(grid.clone(), 0.0);
        for (j, x) in grid.points().enumerate() {
            field.psi[0][j] = Complex64::from_polar(0.8, k0 * x);
            field.psi[1][j] = Complex64::from_polar(0.6, k0 * x + 0.4);
        }
        let init = field.clone();
        let mut solver = SemiclassicalSolver::with_potential(field, &p, 1e-3, PotentialField::Frozen(x0)).unwrap().with_leak_limit(f64::INFINITY);
        let t = 0.37;
        solver.advance_to(t).unwrap();
        let m = pointwise_propagator(x0, p.delta(), t / p.epsilon());
        let kin = Complex64::from_polar(1.0, -0.5 * p.epsilon() * k0 * k0 * t);
        let out = solver.field();
        assert_eq!(out.t, t);
        for j in 0..grid.n() {
            let exact = apply(&m, [init.psi[0][j], init.psi[1][j]]);
            assert!((out.psi[0][j] - exact[0] * kin).norm() < 1e-8);
            assert!((out.psi[1][j] - exact[1] * kin).norm() < 1e-8);
        }
    }

    #[test]
    fn mass_conservation_nonlinear() {
        let p = params(1e-2, 1.0, 0.5);
        let (_, _, _, psi) = setup(&p, 4096);
        let m0 = psi.mass();
        let mut solver = SemiclassicalSolver::new(psi, &p, 1e-4).unwrap();
        solver.advance_to(-0.3).unwrap();
        assert!((solver.field().mass() - m0).abs() / m0 < 1e-8 * 0.2);
    }

    #[test]
    fn centroid_tracks_path() {
        let p = params(1e-2, 1.0, 0.05);
        let (path, _, _, psi) = setup(&p, 4096);
        let mut solver = SemiclassicalSolver::new(psi, &p, 1e-4).unwrap();
        for t in [-0.4, -0.3, -0.2] {
            solver.advance_to(t).unwrap();
            let x = path.x_at(t).unwrap();
            assert!((solver.field().centroid() - x).abs() < 5.0 * p.epsilon().sqrt());
        }
    }

    #[test]
    fn binary_round_trip() {
        let p = params(1e-2, 1.0, 0.0);
        let (_, _, _, psi) = setup(&p, 4096);
        let bytes = psi.to_binary();
        assert_eq!(bytes.len(), 32 + 32 * 4096);
        assert_eq!(SpinorField::from_binary(&bytes).unwrap(), psi);
        assert!(SpinorField::from_binary(&bytes[..100]).is_err());
    }
}
