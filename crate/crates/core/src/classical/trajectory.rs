use crate::error::{Error, Result};
use crate::potential::{lambda_plus_slope, lambda_second};

/// Eigenvalue branch `λ± = ±√(x²+δ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }

    pub fn lambda(self, x: f64, delta: f64) -> f64 {
        self.sign() * x.hypot(delta)
    }

    pub fn slope(self, x: f64, delta: f64) -> f64 {
        self.sign() * lambda_plus_slope(x, delta)
    }

    pub fn curvature(self, x: f64, delta: f64) -> f64 {
        self.sign() * lambda_second(x, delta)
    }
}

/// Phase-space point with its accumulated action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample {
    pub t: f64,
    pub x: f64,
    pub xi: f64,
    pub action: f64,
}

/// Time-ordered samples of a Hamiltonian trajectory on one branch.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalPath {
    branch: Branch,
    delta: f64,
    samples: Vec<PathSample>,
}

/// Energy drift above which an integration is rejected.
pub const ENERGY_REJECT: f64 = 1e-6;

impl ClassicalPath {
    pub fn branch(&self) -> Branch {
        self.branch
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn samples(&self) -> &[PathSample] {
        &self.samples
    }

    pub fn t_start(&self) -> f64 {
        self.samples[0].t
    }

    pub fn t_end(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }

    pub fn covers(&self, t: f64) -> bool {
        let slack = 1e-12 * (1.0 + t.abs());
        t >= self.t_start() - slack && t <= self.t_end() + slack
    }

    pub fn energy(&self, s: &PathSample) -> f64 {
        0.5 * s.xi * s.xi + self.branch.lambda(s.x, self.delta)
    }

    /// Largest relative deviation of the energy from its first sample.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energy(&self.samples[0]);
        let scale = e0.abs().max(f64::MIN_POSITIVE);
        self.samples
            .iter()
            .map(|s| (self.energy(s) - e0).abs() / scale)
            .fold(0.0, f64::max)
    }

    /// Cubic Hermite interpolation of (x, ξ, S) using their exact time
    /// derivatives at the bracketing samples.
    pub fn at(&self, t: f64) -> Result<PathSample> {
        if !self.covers(t) {
            return Err(Error::PathRange(t));
        }
        let n = self.samples.len();
        if n == 1 {
            return Ok(self.samples[0]);
        }
        let idx = match self.samples.binary_search_by(|s| s.t.total_cmp(&t)) {
            Ok(i) => return Ok(self.samples[i]),
            Err(i) => i.clamp(1, n - 1),
        };
        let (a, b) = (self.samples[idx - 1], self.samples[idx]);
        let h = b.t - a.t;
        let u = ((t - a.t) / h).clamp(0.0, 1.0);
        let (h00, h10, h01, h11) = hermite_basis(u);
        let herm = |ya: f64, da: f64, yb: f64, db: f64| h00 * ya + h10 * h * da + h01 * yb + h11 * h * db;
        let (xa, xb) = (self.xi_dot(a.x), self.xi_dot(b.x));
        let (sa, sb) = (self.action_rate(&a), self.action_rate(&b));
        Ok(PathSample {
            t,
            x: herm(a.x, a.xi, b.x, b.xi),
            xi: herm(a.xi, xa, b.xi, xb),
            action: herm(a.action, sa, b.action, sb),
        })
    }

    pub fn x_at(&self, t: f64) -> Result<f64> {
        self.at(t).map(|s| s.x)
    }

    /// `λ^(2)(x(t))` on this path's branch.
    pub fn curvature_at(&self, t: f64) -> Result<f64> {
        Ok(self.branch.curvature(self.x_at(t)?, self.delta))
    }

    fn xi_dot(&self, x: f64) -> f64 {
        -self.branch.slope(x, self.delta)
    }

    fn action_rate(&self, s: &PathSample) -> f64 {
        0.5 * s.xi * s.xi - self.branch.lambda(s.x, self.delta)
    }

    /// Checks that x(t) strictly increases on `[t_lo, t_hi]`, i.e. ξ > 0 at every sample there.
    pub fn check_increasing(&self, t_lo: f64, t_hi: f64) -> Result<()> {
        for s in self.samples.iter().filter(|s| s.t >= t_lo && s.t <= t_hi) {
            if s.xi <= 0.0 {
                return Err(Error::Trajectory(format!(
                    "x(t) is not increasing: xi = {} at t = {}; choose a smaller T",
                    s.xi, s.t
                )));
            }
        }
        Ok(())
    }

    /// Merges a backward path ending at `t0` with a forward path starting there.
    pub fn join(backward: ClassicalPath, forward: ClassicalPath) -> Result<ClassicalPath> {
        if backward.branch != forward.branch || backward.delta != forward.delta {
            return Err(Error::Trajectory("cannot join paths on different branches".into()));
        }
        if backward.t_end() != forward.t_start() {
            return Err(Error::Trajectory("paths do not meet".into()));
        }
        let mut samples = backward.samples;
        samples.extend_from_slice(&forward.samples[1..]);
        Ok(ClassicalPath { branch: forward.branch, delta: forward.delta, samples })
    }

    pub fn to_csv_rows(&self) -> Vec<[f64; 4]> {
        self.samples.iter().map(|s| [s.t, s.x, s.xi, s.action]).collect()
    }
}

pub(crate) fn hermite_basis(u: f64) -> (f64, f64, f64, f64) {
    let u2 = u * u;
    let u3 = u2 * u;
    (2.0 * u3 - 3.0 * u2 + 1.0, u3 - 2.0 * u2 + u, -2.0 * u3 + 3.0 * u2, u3 - u2)
}

/// Integrates `ẋ = ξ, ξ̇ = −∂ₓλ(x), Ṡ = ξ²/2 − λ(x)` with classical RK4 at a
/// fixed step from `(x0, xi0, S = 0)` at `t_start` to `t_end` (either
/// direction). The returned samples are in increasing time.
pub fn integrate_trajectory(
    x0: f64,
    xi0: f64,
    delta: f64,
    branch: Branch,
    t_start: f64,
    t_end: f64,
    dt: f64,
) -> Result<ClassicalPath> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter("delta must be positive".into()));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter("dt must be positive".into()));
    }
    let span = t_end - t_start;
    let steps = (span.abs() / dt).ceil().max(1.0) as usize;
    let h = span / steps as f64;

    let rhs = |state: [f64; 3]| -> [f64; 3] {
        let [x, xi, _] = state;
        [xi, -branch.slope(x, delta), 0.5 * xi * xi - branch.lambda(x, delta)]
    };
    let mut state = [x0, xi0, 0.0];
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(PathSample { t: t_start, x: x0, xi: xi0, action: 0.0 });
    for k in 1..=steps {
        let add = |s: [f64; 3], d: [f64; 3], f: f64| [s[0] + f * d[0], s[1] + f * d[1], s[2] + f * d[2]];
        let k1 = rhs(state);
        let k2 = rhs(add(state, k1, 0.5 * h));
        let k3 = rhs(add(state, k2, 0.5 * h));
        let k4 = rhs(add(state, k3, h));
        for i in 0..3 {
            state[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t = if k == steps { t_end } else { t_start + k as f64 * h };
        samples.push(PathSample { t, x: state[0], xi: state[1], action: state[2] });
    }
    if span < 0.0 {
        samples.reverse();
    }
    let path = ClassicalPath { branch, delta, samples };
    let drift = path.energy_drift();
    if drift > ENERGY_REJECT {
        return Err(Error::EnergyDrift { drift, limit: ENERGY_REJECT });
    }
    Ok(path)
}

/// The reference path through the crossing: `x(0) = 0, ξ(0) = ξ₀, S(0) = 0`
/// on the upper branch, sampled on `[t_lo, t_hi]` (which must contain 0).
pub fn crossing_path(xi0: f64, delta: f64, t_lo: f64, t_hi: f64, dt: f64) -> Result<ClassicalPath> {
    if !(t_lo <= 0.0 && t_hi >= 0.0 && t_lo < t_hi) {
        return Err(Error::InvalidParameter("crossing path must contain t = 0".into()));
    }
    let back = integrate_trajectory(0.0, xi0, delta, Branch::Plus, 0.0, t_lo.min(-dt), dt)?;
    let fwd = integrate_trajectory(0.0, xi0, delta, Branch::Plus, 0.0, t_hi.max(dt), dt)?;
    ClassicalPath::join(back, fwd)
}

/// Derivatives of the reference path at the crossing time t = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorTable {
    pub x: [f64; 4],
    pub xi: [f64; 4],
    pub action: [f64; 4],
}

/// Closed-form derivatives of order 0..=3 of (x, ξ, S) at t = 0 for the path
/// with x(0) = 0, ξ(0) = ξ₀ on the upper branch.
pub fn taylor_at_crossing(xi0: f64, delta: f64) -> TaylorTable {
    TaylorTable {
        x: [0.0, xi0, 0.0, -xi0 / delta],
        xi: [xi0, 0.0, -xi0 / delta, 0.0],
        action: [0.0, 0.5 * xi0 * xi0 - delta, 0.0, -2.0 * xi0 * xi0 / delta],
    }
}

/// Composite Simpson rule with `n` (rounded up to even) sub-intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = (n.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// `∫₀ᵗ |λ^(2)(x(s))| ds` along the path.
pub fn curvature_integral(path: &ClassicalPath, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    if !path.covers(0.0) {
        return Err(Error::PathRange(0.0));
    }
    if !path.covers(t) {
        return Err(Error::PathRange(t));
    }
    // Pieces finer than the curvature width δ/ξ near the crossing.
    let scale = (path.delta() / path.at(0.0)?.xi.abs().max(1e-12)).min(t.abs());
    let n = ((t.abs() / scale) * 200.0).ceil().min(2e6) as usize;
    Ok(simpson(|s| path.curvature_at(s).map(f64::abs).unwrap_or(f64::NAN), 0.0, t, n.max(200)))
}
