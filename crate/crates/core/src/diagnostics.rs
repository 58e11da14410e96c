//! Mode masses, ε-convergence fits and the end-to-end crossing experiment.

use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::classical::{crossing_path, ClassicalPath};
use crate::error::{Error, Result};
use crate::grid::{Spectral, SpatialGrid};
use crate::inner::{
    build_inner_data, integrate_lz_family, physical_to_inner, transition_probability, InnerField,
};
use crate::params::{fmt_f64, resolution_check, NumericsConfig, ResolutionCheck, SemiclassicalParams};
use crate::potential::project_modes;
use crate::profile::{initial_profile_gaussian, monitor_moments, path_curvature, solve_profile_direct, ProfileState};
use crate::semiclassical::{
    auto_domain, build_initial_data, error_norms, outer_approximation, SemiclassicalSolver, SpinorField, DOMAIN_MARGIN,
};

/// `(‖ψ₊‖², ‖ψ₋‖²)` with `ψ± = ⟨ψ, χ±⟩`.
pub fn mode_masses(psi: &SpinorField, delta: f64) -> (f64, f64) {
    let xs: Vec<f64> = psi.grid.points().collect();
    let (p, m) = project_modes(&xs, &psi.psi, delta);
    (psi.grid.mass(&p), psi.grid.mass(&m))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceFit {
    pub slope: f64,
    pub intercept: f64,
    /// RMS residual of the fit in natural-log units.
    pub residual: f64,
    /// False when the fitted slope is below [`MIN_CONVERGENCE_SLOPE`].
    pub converging: bool,
}

pub const MIN_CONVERGENCE_SLOPE: f64 = 0.01;

/// Least-squares fit of `log(error) = slope · log(ε) + intercept`.
pub fn convergence_fit(points: &[(f64, f64)]) -> Result<ConvergenceFit> {
    if points.len() < 2 {
        return Err(Error::Fit("need at least two points".into()));
    }
    for &(e, err) in points {
        if !(e > 0.0 && err > 0.0 && err.is_finite()) {
            return Err(Error::Fit(format!("non-positive value in ({e}, {err})")));
        }
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all epsilon values coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs.iter().zip(&ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum::<f64>() / n).sqrt();
    let span = points.iter().map(|p| p.0).fold(f64::MIN, f64::max) / points.iter().map(|p| p.0).fold(f64::MAX, f64::min);
    if span < 99.0 {
        log::debug!("convergence fit spans {:.2} decades", span.log10());
    }
    Ok(ConvergenceFit { slope, intercept, residual, converging: slope > MIN_CONVERGENCE_SLOPE })
}

/// Outcome of one crossing experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionReport {
    pub params: SemiclassicalParams,
    pub n_points: usize,
    pub domain: [f64; 2],
    pub dt: f64,
    pub mass_plus_before: f64,
    pub mass_minus_before: f64,
    pub mass_plus_after: f64,
    pub mass_minus_after: f64,
    pub total_before: f64,
    pub total_after: f64,
    pub p_theory: f64,
    pub p_measured: f64,
    pub rel_error: f64,
    /// `‖w(−t^ε)‖_L²` and `‖ε∂ₓw(−t^ε)‖_L²`.
    pub outer_l2: f64,
    pub outer_h1: f64,
    /// `sup_s ‖v^ε(s) − f(s)‖_L²` over the inner window.
    pub inner_sup: f64,
    pub theta: f64,
    pub eigenvector_deviation: f64,
    pub weighted_deviation: f64,
    /// Relative mass drift of the full solver per unit time.
    pub mass_drift_rate: f64,
    pub family_norm_drift: f64,
    /// Largest ratio of a profile moment at t = 0 to its value at −T.
    pub profile_moment_growth: f64,
    pub degraded: bool,
    pub warnings: Vec<String>,
}

impl TransitionReport {
    pub fn outer_error(&self) -> f64 {
        self.outer_l2 + self.outer_h1
    }

    fn fields(&self) -> Vec<(&'static str, String)> {
        let p = &self.params;
        vec![
            ("epsilon", fmt_f64(p.epsilon())),
            ("c", fmt_f64(p.c())),
            ("kappa", fmt_f64(p.kappa())),
            ("xi0", fmt_f64(p.xi0())),
            ("T", fmt_f64(p.horizon())),
            ("gamma", fmt_f64(p.gamma())),
            ("c0", fmt_f64(p.c0())),
            ("delta", fmt_f64(p.delta())),
            ("t_eps", fmt_f64(p.t_eps())),
            ("n_points", self.n_points.to_string()),
            ("x_min", fmt_f64(self.domain[0])),
            ("x_max", fmt_f64(self.domain[1])),
            ("dt", fmt_f64(self.dt)),
            ("mass_plus_before", fmt_f64(self.mass_plus_before)),
            ("mass_minus_before", fmt_f64(self.mass_minus_before)),
            ("mass_plus_after", fmt_f64(self.mass_plus_after)),
            ("mass_minus_after", fmt_f64(self.mass_minus_after)),
            ("total_before", fmt_f64(self.total_before)),
            ("total_after", fmt_f64(self.total_after)),
            ("p_theory", fmt_f64(self.p_theory)),
            ("p_measured", fmt_f64(self.p_measured)),
            ("rel_error", fmt_f64(self.rel_error)),
            ("outer_l2", fmt_f64(self.outer_l2)),
            ("outer_h1", fmt_f64(self.outer_h1)),
            ("inner_sup", fmt_f64(self.inner_sup)),
            ("theta", fmt_f64(self.theta)),
            ("eigenvector_deviation", fmt_f64(self.eigenvector_deviation)),
            ("weighted_deviation", fmt_f64(self.weighted_deviation)),
            ("mass_drift_rate", fmt_f64(self.mass_drift_rate)),
            ("family_norm_drift", fmt_f64(self.family_norm_drift)),
            ("profile_moment_growth", fmt_f64(self.profile_moment_growth)),
            ("degraded", self.degraded.to_string()),
        ]
    }

    /// Flat `key=value` block, one pair per line.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.fields() {
            let _ = writeln!(out, "{k}={v}");
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning={w}");
        }
        out
    }

    pub fn csv_header() -> String {
        let dummy = Self::placeholder();
        dummy.fields().iter().map(|(k, _)| *k).collect::<Vec<_>>().join(",")
    }

    pub fn csv_row(&self) -> String {
        self.fields().into_iter().map(|(_, v)| v).collect::<Vec<_>>().join(",")
    }

    fn placeholder() -> Self {
        TransitionReport {
            params: SemiclassicalParams::derive_scales(1.0, 1.0, 0.0, 1.0, 1.0, 0.1, 1.0).unwrap(),
            n_points: 0,
            domain: [0.0, 0.0],
            dt: 0.0,
            mass_plus_before: 0.0,
            mass_minus_before: 0.0,
            mass_plus_after: 0.0,
            mass_minus_after: 0.0,
            total_before: 0.0,
            total_after: 0.0,
            p_theory: 0.0,
            p_measured: 0.0,
            rel_error: 0.0,
            outer_l2: 0.0,
            outer_h1: 0.0,
            inner_sup: 0.0,
            theta: 0.0,
            eigenvector_deviation: 0.0,
            weighted_deviation: 0.0,
            mass_drift_rate: 0.0,
            family_norm_drift: 0.0,
            profile_moment_growth: 0.0,
            degraded: false,
            warnings: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentOptions {
    /// Outer-error samples on `[−T, −t^ε]`, endpoints included.
    pub outer_samples: usize,
    /// Inner comparison samples on `[−s^ε, s^ε]`, endpoints included.
    pub inner_samples: usize,
    /// Step of the Landau-Zener family in s.
    pub family_ds: f64,
    pub keep_snapshots: bool,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self { outer_samples: 9, inner_samples: 41, family_ds: 5e-4, keep_snapshots: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuterSample {
    pub t: f64,
    pub l2: f64,
    pub h1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerSample {
    pub s: f64,
    pub r: f64,
    pub mass_f2: f64,
    pub mass_v2: f64,
    /// `m₋ / (m₊ + m₋)` of the full solution at `t = s√ε`.
    pub minus_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub report: TransitionReport,
    pub outer_series: Vec<OuterSample>,
    pub inner_series: Vec<InnerSample>,
    /// `sup_s ‖∂^k_y f‖` for k = 0, 1, 2 over the family run.
    pub family_derivatives: [f64; 3],
    /// Full-solver fields at −T, −t^ε and +t^ε when requested.
    pub snapshots: Vec<SpinorField>,
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![b];
    }
    (0..n).map(|k| if k + 1 == n { b } else { a + (b - a) * k as f64 / (n - 1) as f64 }).collect()
}

/// Secondary discretisation checks; a failure marks the report degraded.
pub fn secondary_checks(params: &SemiclassicalParams, num: &NumericsConfig) -> Vec<ResolutionCheck> {
    let dt = num.dt;
    // phase advanced per step by the packet's kinetic factor
    let kinetic_phase = params.xi0().powi(2) * dt / (2.0 * params.epsilon());
    let pg = num.profile_grid;
    let dy = 2.0 * pg.half_width / pg.n_points as f64;
    // matching phase and Landau-Zener phases each contribute y-wavenumbers up to about s^ε
    let y_wave = std::f64::consts::PI / (dy * (2.0 * params.s_eps() + 8.0));
    vec![
        ResolutionCheck { name: "kinetic phase per step", ratio: 1.0 / kinetic_phase, required: 1.0, passed: kinetic_phase <= 1.0 },
        ResolutionCheck { name: "inner y-grid", ratio: y_wave, required: 2.0, passed: y_wave >= 2.0 },
    ]
}

/// Path, grid and initial profile shared by the experiment stages.
pub struct Setup {
    pub path: Arc<ClassicalPath>,
    pub grid: SpatialGrid,
    pub y_grid: SpatialGrid,
    pub a: ProfileState,
}

pub fn prepare(params: &SemiclassicalParams, num: &NumericsConfig) -> Result<Setup> {
    num.validate()?;
    let t = params.horizon();
    let path = crossing_path(params.xi0(), params.delta(), -t, t, num.ode_dt)?;
    path.check_increasing(-t, 0.0)?;
    let domain = match num.domain {
        Some(d) => d,
        None => auto_domain(params, &path, DOMAIN_MARGIN)?,
    };
    let grid = SpatialGrid::new(num.n_points, domain[0], domain[1])?;
    let report = resolution_check(params, grid.n(), domain);
    if !report.passed() {
        return Err(Error::Resolution(report.failures().map(|c| c.name).collect::<Vec<_>>().join(", ")));
    }
    let y_grid = SpatialGrid::centered(num.profile_grid.n_points, num.profile_grid.half_width)?;
    let a = initial_profile_gaussian(&y_grid);
    Ok(Setup { path: Arc::new(path), grid, y_grid, a })
}

/// Runs the crossing experiment: profile and full solver from −T, outer error
/// on `[−T, −t^ε]`, inner comparison with the Landau-Zener family on
/// `[−t^ε, t^ε]`, and mode masses at `±t^ε`.
pub fn landau_zener_experiment(
    params: &SemiclassicalParams,
    num: &NumericsConfig,
    opts: &ExperimentOptions,
) -> Result<ExperimentResult> {
    params.warn_inner_kappa();
    let setup = prepare(params, num)?;
    let Setup { path, grid, y_grid, a } = setup;
    let te = params.t_eps();
    let t0 = -params.horizon();
    if te >= params.horizon() {
        return Err(Error::InvalidParameter(format!("t_eps = {te} is not inside the horizon")));
    }
    let mut warnings = Vec::new();
    let checks = secondary_checks(params, num);
    for c in checks.iter().filter(|c| !c.passed) {
        warnings.push(format!("{} ratio {:.3} below {}", c.name, c.ratio, c.required));
    }
    if params.kappa().abs() > crate::params::INNER_KAPPA_WARNING {
        warnings.push(format!("|kappa| = {} above the inner-region threshold", params.kappa()));
    }

    // profile on [−T, 0]; outer-sample times are read from the dense output
    let outer_times = linspace(t0, -te, opts.outer_samples.max(2));
    let mut a0 = a.clone();
    a0.t = t0;
    let profiles = solve_profile_direct(&y_grid, &a0, params.kappa(), path_curvature(path.clone()), [t0, 0.0], num.dt, &outer_times)?;
    let mut spectral_y = Spectral::new(y_grid.n());
    let m_start = monitor_moments(&y_grid, &mut spectral_y, &a0.u, 2);
    let m_end = monitor_moments(&y_grid, &mut spectral_y, &profiles.last().unwrap().u, 2);
    let moment_growth = m_start.iter().zip(&m_end).map(|(s, e)| e.value / s.value).fold(0.0, f64::max);

    // full solver
    let psi0 = build_initial_data(&a0, &y_grid, params, &path, &grid)?;
    let total0 = psi0.mass();
    let mut snapshots = Vec::new();
    if opts.keep_snapshots {
        snapshots.push(psi0.clone());
    }
    let mut solver = SemiclassicalSolver::new(psi0, params, num.dt)?;
    let mut spectral = Spectral::new(grid.n());
    let mut outer_series = Vec::with_capacity(outer_times.len());
    for (k, &t) in outer_times.iter().enumerate() {
        solver.advance_to(t)?;
        let approx = outer_approximation(t, params, &path, &profiles[k], &y_grid, &grid)?;
        let (l2, h1) = error_norms(&mut spectral, solver.field(), &approx, params.epsilon());
        outer_series.push(OuterSample { t, l2, h1 });
    }
    let before = solver.field().clone();
    let (mp_b, mm_b) = mode_masses(&before, params.delta());
    if opts.keep_snapshots {
        snapshots.push(before.clone());
    }

    // inner comparison
    let k_match = outer_times.len() - 1;
    let inner = build_inner_data(&profiles[k_match], params, &path, &y_grid)?;
    let se = params.s_eps();
    let s_times = linspace(-se, se, opts.inner_samples.max(2));
    let run = integrate_lz_family(&inner.field, params.c(), params.xi0(), &s_times[1..], opts.family_ds, num.tolerances.norm_reject)?;
    let sq = params.epsilon().sqrt();
    let mut inner_series = Vec::with_capacity(s_times.len());
    let mut traj: Vec<InnerField> = Vec::with_capacity(s_times.len());
    traj.push(inner.field.clone());
    traj.extend(run.snapshots.iter().cloned());
    for (k, f) in traj.iter().enumerate() {
        if k > 0 {
            solver.advance_to(s_times[k] * sq)?;
        }
        let v = physical_to_inner(solver.field(), params, &y_grid);
        let (mp, mm) = mode_masses(solver.field(), params.delta());
        inner_series.push(InnerSample {
            s: f.s,
            r: v.distance(f),
            mass_f2: f.component_masses().1,
            mass_v2: v.component_masses().1,
            minus_fraction: mm / (mp + mm),
        });
    }
    let after = solver.field().clone();
    let (mp_a, mm_a) = mode_masses(&after, params.delta());
    if opts.keep_snapshots {
        snapshots.push(after.clone());
    }
    let total1 = after.mass();
    let elapsed = after.t - t0;
    let mass_drift_rate = ((total1 - total0) / total0).abs() / elapsed;
    let mtol = num.tolerances.mass_drift_per_time;
    let degraded = checks.iter().any(|c| !c.passed) || mass_drift_rate > mtol;
    if mass_drift_rate > mtol {
        warnings.push(format!("mass drift rate {mass_drift_rate:e} above {mtol:e}"));
    }

    let p_theory = transition_probability(params.c(), params.xi0());
    let p_measured = (mm_a / (mp_a + mm_a)).clamp(0.0, 1.0);
    let rel_error = if p_theory > 0.0 { (p_measured - p_theory).abs() / p_theory } else { f64::INFINITY };
    let outer_last = outer_series.last().unwrap();
    let report = TransitionReport {
        params: *params,
        n_points: grid.n(),
        domain: [grid.x_min(), grid.x_max()],
        dt: num.dt,
        mass_plus_before: mp_b,
        mass_minus_before: mm_b,
        mass_plus_after: mp_a,
        mass_minus_after: mm_a,
        total_before: mp_b + mm_b,
        total_after: mp_a + mm_a,
        p_theory,
        p_measured,
        rel_error,
        outer_l2: outer_last.l2,
        outer_h1: outer_last.h1,
        inner_sup: inner_series.iter().map(|s| s.r).fold(0.0, f64::max),
        theta: inner.theta,
        eigenvector_deviation: inner.eigenvector_deviation,
        weighted_deviation: inner.weighted_deviation,
        mass_drift_rate,
        family_norm_drift: run.max_norm_drift,
        profile_moment_growth: moment_growth,
        degraded,
        warnings,
    };
    Ok(ExperimentResult {
        report,
        outer_series,
        inner_series,
        family_derivatives: crate::inner::derivative_norms(&traj),
        snapshots,
    })
}

/// Runs the experiment at each ε in `epsilons` (other parameters fixed).
pub fn epsilon_sweep(
    params: &SemiclassicalParams,
    num: &NumericsConfig,
    opts: &ExperimentOptions,
    epsilons: &[f64],
) -> Result<Vec<ExperimentResult>> {
    epsilons
        .par_iter()
        .map(|&e| landau_zener_experiment(&params.with_epsilon(e)?, num, opts))
        .collect()
}

/// Slopes of the outer error and of the inner sup-error across a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub epsilons: Vec<f64>,
    pub outer: Vec<f64>,
    pub inner: Vec<f64>,
    pub outer_fit: ConvergenceFit,
    pub inner_fit: ConvergenceFit,
}

impl SweepSummary {
    pub fn outer_monotone(&self) -> bool {
        strictly_decreasing_in_eps(&self.epsilons, &self.outer)
    }

    pub fn inner_monotone(&self) -> bool {
        strictly_decreasing_in_eps(&self.epsilons, &self.inner)
    }
}

/// True when the values decrease strictly as ε decreases.
fn strictly_decreasing_in_eps(eps: &[f64], vals: &[f64]) -> bool {
    let mut idx: Vec<usize> = (0..eps.len()).collect();
    idx.sort_by(|&a, &b| eps[b].total_cmp(&eps[a]));
    idx.windows(2).all(|w| vals[w[1]] < vals[w[0]])
}

pub fn summarize_sweep(results: &[ExperimentResult]) -> Result<SweepSummary> {
    let epsilons: Vec<f64> = results.iter().map(|r| r.report.params.epsilon()).collect();
    let outer: Vec<f64> = results.iter().map(|r| r.report.outer_error()).collect();
    let inner: Vec<f64> = results.iter().map(|r| r.report.inner_sup).collect();
    let pairs = |v: &[f64]| epsilons.iter().cloned().zip(v.iter().cloned()).collect::<Vec<_>>();
    Ok(SweepSummary {
        outer_fit: convergence_fit(&pairs(&outer))?,
        inner_fit: convergence_fit(&pairs(&inner))?,
        epsilons,
        outer,
        inner,
    })
}

/// Equal-weight superposition helper used in tests and examples.
pub fn superpose_modes(grid: &SpatialGrid, delta: f64, g: &[Complex64], w_plus: f64, w_minus: f64) -> SpinorField {
    let mut field = SpinorField::zeros(grid.clone(), 0.0);
    for (j, x) in grid.points().enumerate() {
        let e = crate::potential::eigenpair(x, delta);
        for c in 0..2 {
            field.psi[c][j] = g[j] * (w_plus * e.chi_plus[c] + w_minus * e.chi_minus[c]);
        }
    }
    field
}
