use crate::error::{Error, Result};

use super::trajectory::hermite_basis;

/// Fundamental solutions of `f'' + ω²(τ) f = 0` with
/// `μ(0) = 0, μ'(0) = 1` and `ν(0) = 1, ν'(0) = 0`, sampled on a uniform τ grid
/// starting at the absolute time `t_origin`.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorPair {
    t_origin: f64,
    tau: Vec<f64>,
    mu: Vec<f64>,
    dmu: Vec<f64>,
    nu: Vec<f64>,
    dnu: Vec<f64>,
    omega2: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorState {
    pub mu: f64,
    pub dmu: f64,
    pub nu: f64,
    pub dnu: f64,
}

impl OscillatorState {
    pub fn wronskian(&self) -> f64 {
        self.dmu * self.nu - self.mu * self.dnu
    }
}

fn rk4_step(omega2: &impl Fn(f64) -> Result<f64>, tau: f64, h: f64, y: [f64; 4]) -> Result<[f64; 4]> {
    let w0 = omega2(tau)?;
    let wm = omega2(tau + 0.5 * h)?;
    let w1 = omega2(tau + h)?;
    let f = |w: f64, s: [f64; 4]| [s[1], -w * s[0], s[3], -w * s[2]];
    let add = |s: [f64; 4], d: [f64; 4], c: f64| [s[0] + c * d[0], s[1] + c * d[1], s[2] + c * d[2], s[3] + c * d[3]];
    let k1 = f(w0, y);
    let k2 = f(wm, add(y, k1, 0.5 * h));
    let k3 = f(wm, add(y, k2, 0.5 * h));
    let k4 = f(w1, add(y, k3, h));
    let mut out = y;
    for i in 0..4 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}

/// Integrates the pair with RK4 on `τ ∈ [0, horizon]`. `omega2` receives the
/// local time τ. Fails when ν drops below `nu_floor`.
pub fn solve_oscillator(
    omega2: impl Fn(f64) -> Result<f64>,
    t_origin: f64,
    horizon: f64,
    dt: f64,
    nu_floor: f64,
) -> Result<OscillatorPair> {
    let pair = integrate(&omega2, t_origin, horizon, dt, nu_floor, true)?;
    Ok(pair)
}

/// Like [`solve_oscillator`] but stops at the last sample with `ν ≥ stop_below`
/// instead of failing.
pub fn solve_oscillator_until(
    omega2: impl Fn(f64) -> Result<f64>,
    t_origin: f64,
    horizon: f64,
    dt: f64,
    stop_below: f64,
) -> Result<OscillatorPair> {
    integrate(&omega2, t_origin, horizon, dt, stop_below, false)
}

fn integrate(
    omega2: &impl Fn(f64) -> Result<f64>,
    t_origin: f64,
    horizon: f64,
    dt: f64,
    floor: f64,
    fail_below: bool,
) -> Result<OscillatorPair> {
    if !(horizon > 0.0 && dt > 0.0) {
        return Err(Error::InvalidParameter("oscillator horizon and step must be positive".into()));
    }
    let steps = (horizon / dt).ceil() as usize;
    let h = horizon / steps as f64;
    let mut pair = OscillatorPair {
        t_origin,
        tau: vec![0.0],
        mu: vec![0.0],
        dmu: vec![1.0],
        nu: vec![1.0],
        dnu: vec![0.0],
        omega2: vec![omega2(0.0)?],
    };
    let mut y = [0.0, 1.0, 1.0, 0.0];
    for k in 0..steps {
        let tau = k as f64 * h;
        let next = rk4_step(omega2, tau, h, y)?;
        let tau_next = if k + 1 == steps { horizon } else { (k + 1) as f64 * h };
        if next[2] < floor {
            if fail_below {
                return Err(Error::SingularOscillator { nu: next[2], t: t_origin + tau_next });
            }
            break;
        }
        y = next;
        pair.tau.push(tau_next);
        pair.mu.push(y[0]);
        pair.dmu.push(y[1]);
        pair.nu.push(y[2]);
        pair.dnu.push(y[3]);
        pair.omega2.push(omega2(tau_next)?);
    }
    Ok(pair)
}

impl OscillatorPair {
    pub fn t_origin(&self) -> f64 {
        self.t_origin
    }

    pub fn horizon(&self) -> f64 {
        *self.tau.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.len() < 2
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, OscillatorState)> + '_ {
        (0..self.tau.len()).map(|i| (self.tau[i], self.node(i)))
    }

    fn node(&self, i: usize) -> OscillatorState {
        OscillatorState { mu: self.mu[i], dmu: self.dmu[i], nu: self.nu[i], dnu: self.dnu[i] }
    }

    fn bracket(&self, tau: f64) -> Result<(usize, f64)> {
        let end = self.horizon();
        if !(tau >= -1e-12 && tau <= end + 1e-12 * (1.0 + end)) {
            return Err(Error::OutsideWindow(format!("oscillator time {tau} outside [0, {end}]")));
        }
        let n = self.tau.len();
        if n == 1 {
            return Ok((0, 0.0));
        }
        let i = match self.tau.binary_search_by(|t| t.total_cmp(&tau)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.clamp(1, n - 1) - 1,
        };
        let h = self.tau[i + 1] - self.tau[i];
        Ok((i, ((tau - self.tau[i]) / h).clamp(0.0, 1.0)))
    }

    /// Hermite interpolation of (μ, μ', ν, ν') at local time τ.
    pub fn at(&self, tau: f64) -> Result<OscillatorState> {
        let (i, u) = self.bracket(tau)?;
        if self.tau.len() == 1 {
            return Ok(self.node(0));
        }
        let h = self.tau[i + 1] - self.tau[i];
        let (h00, h10, h01, h11) = hermite_basis(u);
        let herm = |a: f64, da: f64, b: f64, db: f64| h00 * a + h10 * h * da + h01 * b + h11 * h * db;
        let (w0, w1) = (self.omega2[i], self.omega2[i + 1]);
        Ok(OscillatorState {
            mu: herm(self.mu[i], self.dmu[i], self.mu[i + 1], self.dmu[i + 1]),
            dmu: herm(self.dmu[i], -w0 * self.mu[i], self.dmu[i + 1], -w1 * self.mu[i + 1]),
            nu: herm(self.nu[i], self.dnu[i], self.nu[i + 1], self.dnu[i + 1]),
            dnu: herm(self.dnu[i], -w0 * self.nu[i], self.dnu[i + 1], -w1 * self.nu[i + 1]),
        })
    }

    pub fn at_time(&self, t: f64) -> Result<OscillatorState> {
        self.at(t - self.t_origin)
    }

    /// Lens time `s = μ/ν`.
    pub fn s_of_tau(&self, tau: f64) -> Result<f64> {
        let st = self.at(tau)?;
        Ok(st.mu / st.nu)
    }

    pub fn s_end(&self) -> f64 {
        let i = self.tau.len() - 1;
        self.mu[i] / self.nu[i]
    }

    /// Inverse of `s(τ)` by Hermite interpolation with `dτ/ds = ν²`.
    pub fn tau_of_s(&self, s: f64) -> Result<f64> {
        let n = self.tau.len();
        let s_nodes: Vec<f64> = (0..n).map(|i| self.mu[i] / self.nu[i]).collect();
        let end = s_nodes[n - 1];
        if !(s >= -1e-12 && s <= end + 1e-12 * (1.0 + end)) {
            return Err(Error::OutsideWindow(format!("lens time {s} outside [0, {end}]")));
        }
        if n == 1 {
            return Ok(0.0);
        }
        let i = match s_nodes.binary_search_by(|v| v.total_cmp(&s)) {
            Ok(i) => return Ok(self.tau[i]),
            Err(i) => i.clamp(1, n - 1) - 1,
        };
        let h = s_nodes[i + 1] - s_nodes[i];
        let u = ((s - s_nodes[i]) / h).clamp(0.0, 1.0);
        let (h00, h10, h01, h11) = hermite_basis(u);
        let d0 = self.nu[i] * self.nu[i];
        let d1 = self.nu[i + 1] * self.nu[i + 1];
        Ok(h00 * self.tau[i] + h10 * h * d0 + h01 * self.tau[i + 1] + h11 * h * d1)
    }

    pub fn wronskian_drift(&self) -> f64 {
        (0..self.tau.len()).map(|i| (self.node(i).wronskian() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Largest τ such that ν stays at or above `threshold` on `[0, τ]`.
    pub fn max_valid_horizon(&self, threshold: f64) -> f64 {
        let mut last = 0.0;
        for (i, &t) in self.tau.iter().enumerate() {
            if self.nu[i] < threshold {
                break;
            }
            last = t;
        }
        last
    }

    pub fn min_nu(&self) -> f64 {
        self.nu.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}
