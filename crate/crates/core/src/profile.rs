//! The packet envelope equation
//! `i∂ₜu = −½∂²u + ½ω²(t)y²u + κ|u|²u`, with `ω²(t) = λ^(2)(x⁺(t))`,
//! solved by Strang splitting directly and through the Lens transform.

use std::sync::Arc;

use num_complex::Complex64;

use crate::classical::{lens_forward, lens_inverse, solve_oscillator_until, ClassicalPath};
use crate::error::{Error, Result};
use crate::grid::{Spectral, SpatialGrid};

/// Time-dependent harmonic coefficient `ω²(t)`.
pub type Curvature = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

/// `λ^(2)` along a classical path.
pub fn path_curvature(path: Arc<ClassicalPath>) -> Curvature {
    Arc::new(move |t| path.curvature_at(t))
}

pub fn constant_curvature(omega2: f64) -> Curvature {
    Arc::new(move |_| Ok(omega2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileState {
    pub t: f64,
    pub u: Vec<Complex64>,
    pub mass: f64,
}

impl ProfileState {
    pub fn new(grid: &SpatialGrid, t: f64, u: Vec<Complex64>) -> Self {
        let mass = grid.mass(&u);
        Self { t, u, mass }
    }
}

pub const MIN_PROFILE_MASS: f64 = 1e-8;
pub const SPECTRAL_TAIL: f64 = 1e-8;
const EDGE_WIDTH: usize = 4;

/// `a(y) = π^{-1/4} e^{-y²/2}`.
pub fn initial_profile_gaussian(grid: &SpatialGrid) -> ProfileState {
    let c = std::f64::consts::PI.powf(-0.25);
    let u = grid.points().map(|y| Complex64::new(c * (-0.5 * y * y).exp(), 0.0)).collect();
    ProfileState::new(grid, 0.0, u)
}

/// Accepts sampled profiles that carry mass and are resolved: the outer
/// quarter of the spectrum must stay below `SPECTRAL_TAIL` of the peak.
pub fn initial_profile_custom(grid: &SpatialGrid, spectral: &mut Spectral, samples: Vec<Complex64>) -> Result<ProfileState> {
    if samples.len() != grid.n() {
        return Err(Error::InvalidParameter(format!(
            "profile has {} samples, grid has {}",
            samples.len(),
            grid.n()
        )));
    }
    let state = ProfileState::new(grid, 0.0, samples);
    if !(state.mass >= MIN_PROFILE_MASS) {
        return Err(Error::InvalidParameter(format!("profile mass {:e} below {MIN_PROFILE_MASS:e}", state.mass)));
    }
    let mut hat = state.u.clone();
    spectral.forward(&mut hat);
    let n = grid.n() as i64;
    let peak = hat.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tail = hat
        .iter()
        .enumerate()
        .filter(|(j, _)| crate::grid::signed_index(*j, grid.n()).abs() >= 3 * n / 8)
        .map(|(_, z)| z.norm())
        .fold(0.0, f64::max);
    if tail > SPECTRAL_TAIL * peak {
        return Err(Error::Resolution(format!("profile aliased: spectral tail {:e} of peak", tail / peak)));
    }
    Ok(state)
}

fn kinetic_factor(grid: &SpatialGrid, h: f64) -> Vec<Complex64> {
    grid.wavenumbers().iter().map(|&k| Complex64::from_polar(1.0, -0.5 * k * k * h)).collect()
}

/// Direct Strang stepper: half pointwise step (harmonic term at the half-step
/// midpoint plus exact cubic phase), full kinetic step, half pointwise step.
pub struct ProfileSolver {
    grid: SpatialGrid,
    spectral: Spectral,
    y2: Vec<f64>,
    kinetic: Vec<Complex64>,
    dt: f64,
    kappa: f64,
    omega2: Curvature,
    leak_limit: f64,
    state: ProfileState,
}

impl ProfileSolver {
    pub fn new(grid: SpatialGrid, a: ProfileState, kappa: f64, omega2: Curvature, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter("dt must be positive".into()));
        }
        if a.u.len() != grid.n() {
            return Err(Error::InvalidParameter("profile does not match grid".into()));
        }
        let y2 = grid.points().map(|y| y * y).collect();
        let kinetic = kinetic_factor(&grid, dt);
        let spectral = Spectral::new(grid.n());
        Ok(Self { grid, spectral, y2, kinetic, dt, kappa, omega2, leak_limit: 1e-6, state: a })
    }

    pub fn with_leak_limit(mut self, limit: f64) -> Self {
        self.leak_limit = limit;
        self
    }

    pub fn state(&self) -> &ProfileState {
        &self.state
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    fn pointwise(&mut self, t_mid: f64, h: f64) -> Result<()> {
        let w = 0.5 * (self.omega2)(t_mid)?;
        let kappa = self.kappa;
        for (z, &y2) in self.state.u.iter_mut().zip(&self.y2) {
            *z *= Complex64::from_polar(1.0, -h * (w * y2 + kappa * z.norm_sqr()));
        }
        Ok(())
    }

    fn step(&mut self, h: f64) -> Result<()> {
        let t = self.state.t;
        self.pointwise(t + 0.25 * h, 0.5 * h)?;
        if h == self.dt {
            self.spectral.apply_multiplier(&mut self.state.u, &self.kinetic);
        } else {
            let k = kinetic_factor(&self.grid, h);
            self.spectral.apply_multiplier(&mut self.state.u, &k);
        }
        self.pointwise(t + 0.75 * h, 0.5 * h)?;
        self.state.t = t + h;
        let edge = self.grid.edge_amplitude(&self.state.u, EDGE_WIDTH);
        if edge > self.leak_limit {
            return Err(Error::BoundaryLeak { amplitude: edge });
        }
        Ok(())
    }

    /// Steps to exactly `t_end`; the last step is shortened as needed.
    pub fn advance_to(&mut self, t_end: f64) -> Result<()> {
        while self.state.t < t_end {
            let remaining = t_end - self.state.t;
            if remaining <= 1e-12 * self.dt {
                break;
            }
            let h = if remaining < self.dt * (1.0 + 1e-9) { remaining } else { self.dt };
            self.step(h)?;
        }
        self.state.t = t_end.max(self.state.t);
        self.state.mass = self.grid.mass(&self.state.u);
        Ok(())
    }
}

/// Runs the direct solver over `[t0, t1]` and returns the state at each time
/// in `record` (sorted, inside the span).
pub fn solve_profile_direct(
    grid: &SpatialGrid,
    a: &ProfileState,
    kappa: f64,
    omega2: Curvature,
    t_span: [f64; 2],
    dt: f64,
    record: &[f64],
) -> Result<Vec<ProfileState>> {
    let mut start = a.clone();
    start.t = t_span[0];
    let mut solver = ProfileSolver::new(grid.clone(), start, kappa, omega2, dt)?;
    let mut out = Vec::with_capacity(record.len() + 1);
    for &t in record {
        if t < t_span[0] || t > t_span[1] {
            return Err(Error::OutsideWindow(format!("record time {t} outside [{}, {}]", t_span[0], t_span[1])));
        }
        solver.advance_to(t)?;
        out.push(solver.state().clone());
    }
    solver.advance_to(t_span[1])?;
    if out.last().map(|s| s.t) != Some(t_span[1]) {
        out.push(solver.state().clone());
    }
    Ok(out)
}

/// Lens-route solve over `[t0, t1]`. Each segment solves the oscillator pair
/// from the segment start until ν falls to `nu_switch`, evolves the free cubic
/// NLS with coefficient `κν(τ(s))` in lens time, and maps back.
pub fn solve_profile_lens(
    grid: &SpatialGrid,
    a: &ProfileState,
    kappa: f64,
    omega2: Curvature,
    t_span: [f64; 2],
    dt: f64,
    ode_dt: f64,
) -> Result<ProfileState> {
    const NU_SWITCH: f64 = 0.5;
    let mut spectral = Spectral::new(grid.n());
    let mut t = t_span[0];
    let mut u = a.u.clone();
    while t_span[1] - t > 1e-12 * dt.max(1.0) {
        let origin = t;
        let w = omega2.clone();
        let osc = solve_oscillator_until(move |tau| w(origin + tau), origin, t_span[1] - origin, ode_dt, NU_SWITCH)?;
        if osc.is_empty() {
            return Err(Error::SingularOscillator { nu: NU_SWITCH, t: origin });
        }
        let (_, mut v) = lens_forward(grid, &mut spectral, &u, origin, &osc)?;
        let s_end = osc.s_end();
        let steps = (s_end / dt).ceil().max(1.0) as usize;
        let h = s_end / steps as f64;
        let kinetic = kinetic_factor(grid, h);
        let nu_at = |s: f64| -> Result<f64> { Ok(osc.at(osc.tau_of_s(s)?)?.nu) };
        for k in 0..steps {
            let s = k as f64 * h;
            nonlinear_phase(&mut v, kappa * nu_at(s + 0.25 * h)?, 0.5 * h);
            spectral.apply_multiplier(&mut v, &kinetic);
            nonlinear_phase(&mut v, kappa * nu_at((s + 0.75 * h).min(s_end))?, 0.5 * h);
        }
        let (t_next, u_next) = lens_inverse(grid, &mut spectral, &v, s_end, &osc)?;
        let edge = grid.edge_amplitude(&u_next, EDGE_WIDTH);
        if edge > 1e-6 {
            return Err(Error::BoundaryLeak { amplitude: edge });
        }
        u = u_next;
        t = if t_span[1] - t_next < 1e-9 * dt { t_span[1] } else { t_next };
    }
    Ok(ProfileState::new(grid, t_span[1], u))
}

fn nonlinear_phase(v: &mut [Complex64], coeff: f64, h: f64) {
    if coeff == 0.0 {
        return;
    }
    for z in v.iter_mut() {
        *z *= Complex64::from_polar(1.0, -h * coeff * z.norm_sqr());
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEntry {
    pub alpha: u32,
    pub beta: u32,
    /// `‖y^α ∂^β u‖_L²`.
    pub value: f64,
}

/// Table of weighted derivative norms for all `α + β ≤ k_max`.
pub fn monitor_moments(grid: &SpatialGrid, spectral: &mut Spectral, u: &[Complex64], k_max: u32) -> Vec<MomentEntry> {
    let mut table = Vec::new();
    for beta in 0..=k_max {
        let d = spectral.derivative(grid, u, beta);
        for alpha in 0..=(k_max - beta) {
            let weighted: Vec<Complex64> = grid.points().zip(&d).map(|(y, z)| z * y.powi(alpha as i32)).collect();
            table.push(MomentEntry { alpha, beta, value: grid.l2_norm(&weighted) });
        }
    }
    table
}

/// Rows `(t, y, Re u, Im u)` for a set of snapshots.
pub fn snapshot_rows(grid: &SpatialGrid, states: &[ProfileState]) -> Vec<Vec<f64>> {
    states
        .iter()
        .flat_map(|s| grid.points().zip(&s.u).map(move |(y, z)| vec![s.t, y, z.re, z.im]))
        .collect()
}

pub fn moment_rows(t: f64, table: &[MomentEntry]) -> Vec<Vec<f64>> {
    table.iter().map(|m| vec![t, m.alpha as f64, m.beta as f64, m.value]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> SpatialGrid {
        SpatialGrid::centered(1024, 20.0).unwrap()
    }

    fn mehler(omega: f64, t: f64, y: f64) -> Complex64 {
        let i = Complex64::i();
        let tn = (omega * t).tan();
        let alpha = omega * (i - omega * tn) / (omega + i * tn);
        let z = Complex64::new((omega * t).cos(), 0.0) + i * (omega * t).sin() / omega;
        PI.powf(-0.25) * z.powf(-0.5) * (i * alpha * y * y / 2.0).exp()
    }

    #[test]
    fn gaussian_profile_moments() {
        let g = grid();
        let a = initial_profile_gaussian(&g);
        assert!((a.mass - 1.0).abs() < 1e-10);
        let mut sp = Spectral::new(g.n());
        let table = monitor_moments(&g, &mut sp, &a.u, 2);
        let get = |al, be| table.iter().find(|m| m.alpha == al && m.beta == be).unwrap().value;
        assert!((get(1, 0).powi(2) - 0.5).abs() < 1e-10);
        assert!((get(0, 1).powi(2) - 0.5).abs() < 1e-10);
        assert!((get(0, 0) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn custom_profile_checks() {
        let g = grid();
        let mut sp = Spectral::new(g.n());
        assert!(initial_profile_custom(&g, &mut sp, vec![Complex64::new(0.0, 0.0); 1024]).is_err());
        let rough: Vec<Complex64> = (0..1024).map(|j| Complex64::new(if j == 512 { 1.0 } else { 0.0 }, 0.0)).collect();
        assert!(matches!(initial_profile_custom(&g, &mut sp, rough), Err(Error::Resolution(_))));
        let smooth = initial_profile_gaussian(&g).u;
        assert!(initial_profile_custom(&g, &mut sp, smooth).is_ok());
    }

    #[test]
    fn matches_mehler_gaussian() {
        let g = grid();
        let a = initial_profile_gaussian(&g);
        let omega = 2.0;
        let out = solve_profile_direct(&g, &a, 0.0, constant_curvature(omega * omega), [0.0, 1.0], 1e-4, &[]).unwrap();
        let end = out.last().unwrap();
        assert_eq!(end.t, 1.0);
        let diff: Vec<Complex64> = g.points().zip(&end.u).map(|(y, z)| z - mehler(omega, 1.0, y)).collect();
        assert!(g.l2_norm(&diff) < 1e-6, "{}", g.l2_norm(&diff));
    }

    #[test]
    fn free_variance_growth() {
        let g = grid();
        let a = initial_profile_gaussian(&g);
        let out = solve_profile_direct(&g, &a, 0.0, constant_curvature(0.0), [0.0, 1.5], 1e-3, &[0.5]).unwrap();
        let mut sp = Spectral::new(g.n());
        for s in &out {
            let var = monitor_moments(&g, &mut sp, &s.u, 1)
                .into_iter()
                .find(|m| m.alpha == 1 && m.beta == 0)
                .unwrap()
                .value
                .powi(2);
            assert!((var - (0.5 + 0.5 * s.t * s.t)).abs() < 1e-10, "t={}", s.t);
        }
    }

    #[test]
    fn mass_and_gauge() {
        let g = grid();
        let a = initial_profile_gaussian(&g);
        let w = constant_curvature(3.0);
        let run = |a: &ProfileState| solve_profile_direct(&g, a, 0.7, w.clone(), [-0.5, 0.0], 1e-3, &[]).unwrap();
        let base = run(&a).pop().unwrap();
        assert!((base.mass - 1.0).abs() < 1e-10);
        let phase = Complex64::from_polar(1.0, 0.9);
        let rotated = ProfileState::new(&g, 0.0, a.u.iter().map(|z| z * phase).collect());
        let other = run(&rotated).pop().unwrap();
        for (x, y) in base.u.iter().zip(&other.u) {
            assert!((x * phase - y).norm() < 1e-12);
        }
    }

    #[test]
    fn leak_is_detected() {
        let g = SpatialGrid::centered(256, 6.0).unwrap();
        let a = initial_profile_gaussian(&g);
        let err = solve_profile_direct(&g, &a, 0.0, constant_curvature(0.0), [0.0, 10.0], 1e-2, &[]).unwrap_err();
        assert!(matches!(err, Error::BoundaryLeak { .. }));
    }

    #[test]
    fn lens_route_matches_direct_linear() {
        let g = grid();
        let a = initial_profile_gaussian(&g);
        let w: Curvature = Arc::new(|t: f64| Ok(1.5 + (3.0 * t).sin()));
        let direct = solve_profile_direct(&g, &a, 0.0, w.clone(), [-0.5, 1.2], 1e-4, &[]).unwrap().pop().unwrap();
        let lens = solve_profile_lens(&g, &a, 0.0, w, [-0.5, 1.2], 1e-3, 1e-4).unwrap();
        let diff: Vec<Complex64> = direct.u.iter().zip(&lens.u).map(|(x, y)| x - y).collect();
        assert!(g.l2_norm(&diff) < 1e-6, "{}", g.l2_norm(&diff));
    }

    #[test]
    fn lens_degenerate_span() {
        let g = grid();
        let a = initial_profile_gaussian(&g);
        let out = solve_profile_lens(&g, &a, 0.3, constant_curvature(1.0), [0.2, 0.2], 1e-3, 1e-4).unwrap();
        assert_eq!(out.u, a.u);
    }
}
