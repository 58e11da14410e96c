//! Per-y linear Landau-Zener family `i∂ₛf = [[y+sξ₀, c], [c, −(y+sξ₀)]]f`
//! and the nonlinear two-level comparison system.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::SpatialGrid;

/// Two-component field on the rescaled y-grid at rescaled time `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerField {
    pub s: f64,
    pub y_grid: SpatialGrid,
    pub f: [Vec<Complex64>; 2],
}

impl InnerField {
    pub fn mass(&self) -> f64 {
        self.y_grid.mass(&self.f[0]) + self.y_grid.mass(&self.f[1])
    }

    pub fn component_masses(&self) -> (f64, f64) {
        (self.y_grid.mass(&self.f[0]), self.y_grid.mass(&self.f[1]))
    }

    /// `‖self − other‖_L²` over both components.
    pub fn distance(&self, other: &InnerField) -> f64 {
        let mut acc = 0.0;
        for c in 0..2 {
            acc += self.f[c].iter().zip(&other.f[c]).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>();
        }
        (acc * self.y_grid.dx()).sqrt()
    }
}

type Spinor = [Complex64; 2];

#[inline]
fn lz_rhs(a: f64, c: f64, u: Spinor) -> Spinor {
    // −i [[a, c], [c, −a]] u
    let mi = Complex64::new(0.0, -1.0);
    [mi * (u[0] * a + u[1] * c), mi * (u[0] * c - u[1] * a)]
}

#[inline]
fn axpy(u: Spinor, k: Spinor, h: f64) -> Spinor {
    [u[0] + k[0] * h, u[1] + k[1] * h]
}

/// RK4 for `i u' = [[a(s), c], [c, −a(s)]] u` with `a` affine in s.
fn rk4_affine(u: Spinor, y: f64, xi0: f64, c: f64, s: f64, h: f64) -> Spinor {
    let a0 = y + s * xi0;
    let am = y + (s + 0.5 * h) * xi0;
    let a1 = y + (s + h) * xi0;
    let k1 = lz_rhs(a0, c, u);
    let k2 = lz_rhs(am, c, axpy(u, k1, 0.5 * h));
    let k3 = lz_rhs(am, c, axpy(u, k2, 0.5 * h));
    let k4 = lz_rhs(a1, c, axpy(u, k3, h));
    let w = h / 6.0;
    [
        u[0] + (k1[0] + (k2[0] + k3[0]) * 2.0 + k4[0]) * w,
        u[1] + (k1[1] + (k2[1] + k3[1]) * 2.0 + k4[1]) * w,
    ]
}

/// Largest per-y drift `||f(s,y)|² − |f(s₀,y)|²|` observed in a family run.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyRun {
    pub snapshots: Vec<InnerField>,
    pub max_norm_drift: f64,
}

/// Integrates each y independently from `f0.s` through the sorted `record`
/// times with RK4 at step about `ds`. Snapshots are returned at each record
/// time. Fails when any per-y norm drifts by more than `norm_reject`.
pub fn integrate_lz_family(
    f0: &InnerField,
    c: f64,
    xi0: f64,
    record: &[f64],
    ds: f64,
    norm_reject: f64,
) -> Result<FamilyRun> {
    if !(ds > 0.0) {
        return Err(Error::InvalidParameter("ds must be positive".into()));
    }
    if record.windows(2).any(|w| w[1] < w[0]) || record.first().is_some_and(|&s| s < f0.s) {
        return Err(Error::InvalidParameter("record times must be sorted and after the start".into()));
    }
    let ys: Vec<f64> = f0.y_grid.points().collect();
    let s0 = f0.s;
    // column j: values at every record time
    let columns: Vec<(Vec<Spinor>, f64)> = ys
        .par_iter()
        .enumerate()
        .map(|(j, &y)| {
            let mut u = [f0.f[0][j], f0.f[1][j]];
            let n0 = u[0].norm_sqr() + u[1].norm_sqr();
            let mut s = s0;
            let mut out = Vec::with_capacity(record.len());
            let mut drift: f64 = 0.0;
            for &target in record {
                let span = target - s;
                if span > 0.0 {
                    let steps = (span / ds).ceil() as usize;
                    let h = span / steps as f64;
                    for k in 0..steps {
                        u = rk4_affine(u, y, xi0, c, s + k as f64 * h, h);
                    }
                }
                s = target;
                drift = drift.max((u[0].norm_sqr() + u[1].norm_sqr() - n0).abs());
                out.push(u);
            }
            (out, drift)
        })
        .collect();
    let max_norm_drift = columns.iter().map(|(_, d)| *d).fold(0.0, f64::max);
    if max_norm_drift > norm_reject {
        return Err(Error::NormDrift { drift: max_norm_drift, limit: norm_reject });
    }
    let snapshots = record
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let (a, b) = columns.iter().map(|(col, _)| (col[k][0], col[k][1])).unzip();
            InnerField { s, y_grid: f0.y_grid.clone(), f: [a, b] }
        })
        .collect();
    Ok(FamilyRun { snapshots, max_norm_drift })
}

/// Sample of the nonlinear two-level system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LzSample {
    pub t: f64,
    pub u: [Complex64; 2],
}

/// RK4 for `i u' = [[g + κ(|u₂|²−|u₁|²), δ], [δ, −(g + κ(|u₂|²−|u₁|²))]]u`
/// with `g = gamma_fn(t)`. Returns `n_samples + 1` evenly spaced samples.
pub fn nonlinear_lz(
    kappa: f64,
    delta_lz: f64,
    gamma_fn: impl Fn(f64) -> f64,
    u0: [Complex64; 2],
    t_span: [f64; 2],
    dt: f64,
    n_samples: usize,
) -> Result<Vec<LzSample>> {
    if !(dt > 0.0 && t_span[1] > t_span[0]) {
        return Err(Error::InvalidParameter("nonlinear_lz needs dt > 0 and a proper span".into()));
    }
    let rhs = |t: f64, u: Spinor| -> Spinor {
        let a = gamma_fn(t) + kappa * (u[1].norm_sqr() - u[0].norm_sqr());
        lz_rhs(a, delta_lz, u)
    };
    let span = t_span[1] - t_span[0];
    let n_samples = n_samples.max(1);
    let per = ((span / dt / n_samples as f64).ceil() as usize).max(1);
    let steps = per * n_samples;
    let h = span / steps as f64;
    let n0 = u0[0].norm_sqr() + u0[1].norm_sqr();
    let mut u = u0;
    let mut out = vec![LzSample { t: t_span[0], u }];
    for k in 0..steps {
        let t = t_span[0] + k as f64 * h;
        let k1 = rhs(t, u);
        let k2 = rhs(t + 0.5 * h, axpy(u, k1, 0.5 * h));
        let k3 = rhs(t + 0.5 * h, axpy(u, k2, 0.5 * h));
        let k4 = rhs(t + h, axpy(u, k3, h));
        let w = h / 6.0;
        u = [
            u[0] + (k1[0] + (k2[0] + k3[0]) * 2.0 + k4[0]) * w,
            u[1] + (k1[1] + (k2[1] + k3[1]) * 2.0 + k4[1]) * w,
        ];
        if (k + 1) % per == 0 {
            out.push(LzSample { t: t_span[0] + (k + 1) as f64 * h, u });
        }
    }
    let drift = (u[0].norm_sqr() + u[1].norm_sqr() - n0).abs() / n0;
    if drift > 1e-6 {
        return Err(Error::NormDrift { drift, limit: 1e-6 });
    }
    Ok(out)
}
