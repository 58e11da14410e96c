//! Physical and numerical parameters, the ε-dependent scales, and the flat
//! `key=value` configuration format.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// Scalar parameters of the coupled cubic system together with the
/// crossing-window scales derived from ε.
///
/// The gap `δ = c√ε` and the window scales are computed on demand from the
/// stored primitives, never stored separately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemiclassicalParams {
    epsilon: f64,
    c: f64,
    kappa: f64,
    xi0: f64,
    horizon: f64,
    gamma: f64,
    c0: f64,
}

/// κ above this magnitude is outside the small-coupling regime in which the
/// inner approximation is known to hold.
pub const INNER_KAPPA_WARNING: f64 = 0.1;

impl SemiclassicalParams {
    /// Validates the primitives and returns the full parameter set.
    pub fn derive_scales(
        epsilon: f64,
        c: f64,
        kappa: f64,
        xi0: f64,
        horizon: f64,
        gamma: f64,
        c0: f64,
    ) -> Result<Self> {
        let named = [
            ("epsilon", epsilon),
            ("c", c),
            ("kappa", kappa),
            ("xi0", xi0),
            ("T", horizon),
            ("gamma", gamma),
            ("c0", c0),
        ];
        for (name, v) in named {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} is not finite")));
            }
        }
        for (name, v) in [("epsilon", epsilon), ("c", c), ("xi0", xi0), ("T", horizon), ("c0", c0)] {
            if v <= 0.0 {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(gamma > 0.0 && gamma < 1.0 / 6.0) {
            return Err(Error::GammaOutOfRange(gamma));
        }
        if kappa.abs() > 1.0 {
            return Err(Error::InvalidParameter(format!("|kappa| must be <= 1, got {kappa}")));
        }
        Ok(Self { epsilon, c, kappa, xi0, horizon, gamma, c0 })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn xi0(&self) -> f64 {
        self.xi0
    }

    /// Outer horizon T: the data are prescribed at t = −T.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// Gap parameter δ = c√ε.
    pub fn delta(&self) -> f64 {
        self.c * self.epsilon.sqrt()
    }

    /// Rescaled inner horizon s^ε = c₀ ε^(−γ).
    pub fn s_eps(&self) -> f64 {
        self.c0 * self.epsilon.powf(-self.gamma)
    }

    /// Outer/inner switch time t^ε = c₀ ε^(1/2−γ) = √ε s^ε.
    pub fn t_eps(&self) -> f64 {
        self.epsilon.sqrt() * self.s_eps()
    }

    /// Landau-Zener coupling η = −c/√ξ₀.
    pub fn eta(&self) -> f64 {
        -self.c / self.xi0.sqrt()
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::derive_scales(epsilon, self.c, self.kappa, self.xi0, self.horizon, self.gamma, self.c0)
    }

    pub fn with_kappa(&self, kappa: f64) -> Result<Self> {
        Self::derive_scales(self.epsilon, self.c, kappa, self.xi0, self.horizon, self.gamma, self.c0)
    }

    /// Emits a warning when κ is outside the proven small-coupling regime.
    pub fn warn_inner_kappa(&self) -> bool {
        let large = self.kappa.abs() > INNER_KAPPA_WARNING;
        if large {
            log::warn!(
                "kappa = {} exceeds {INNER_KAPPA_WARNING}; the inner approximation is only established for small kappa",
                self.kappa
            );
        }
        large
    }
}

/// Named acceptance and guard thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative total-mass drift allowed per unit time.
    pub mass_drift_per_time: f64,
    /// Relative energy drift asserted along a classical path.
    pub energy_drift: f64,
    /// Energy drift above which a trajectory integration is rejected.
    pub energy_reject: f64,
    pub wronskian: f64,
    /// Per-y norm drift of the Landau-Zener family, per unit rescaled time.
    pub lz_norm_drift: f64,
    /// Norm drift above which an RK4 run is rejected.
    pub norm_reject: f64,
    pub boundary_leak: f64,
    /// ν below this aborts the Lens transform.
    pub nu_floor: f64,
    /// Relative band on the measured transition probability.
    pub transition_rel: f64,
    /// Absolute band on the mode-minus mass before the crossing.
    pub minus_before: f64,
    pub lz_numeric: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            mass_drift_per_time: 1e-8,
            energy_drift: 1e-8,
            energy_reject: 1e-6,
            wronskian: 1e-8,
            lz_norm_drift: 1e-10,
            norm_reject: 1e-6,
            boundary_leak: 1e-6,
            nu_floor: 1e-3,
            transition_rel: 0.1,
            minus_before: 1e-2,
            lz_numeric: 1e-3,
        }
    }
}

/// Grid used for the packet profile and the rescaled inner variable y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileGridSpec {
    pub n_points: usize,
    pub half_width: f64,
}

impl Default for ProfileGridSpec {
    fn default() -> Self {
        Self { n_points: 1024, half_width: 20.0 }
    }
}

/// Discretisation parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericsConfig {
    pub n_points: usize,
    /// Physical domain `[x_min, x_max]`; `None` selects it from the classical path.
    pub domain: Option<[f64; 2]>,
    pub dt: f64,
    pub ode_dt: f64,
    pub lz_horizon: f64,
    pub profile_grid: ProfileGridSpec,
    pub tolerances: Tolerances,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            n_points: 1 << 13,
            domain: None,
            dt: 1e-4,
            ode_dt: 1e-5,
            lz_horizon: 200.0,
            profile_grid: ProfileGridSpec::default(),
            tolerances: Tolerances::default(),
        }
    }
}

impl NumericsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_points < 16 || !self.n_points.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "n_points must be a power of two >= 16, got {}",
                self.n_points
            )));
        }
        if let Some([lo, hi]) = self.domain {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidParameter(format!("domain must satisfy x_min < x_max, got [{lo}, {hi}]")));
            }
        }
        for (name, v) in [("dt", self.dt), ("ode_dt", self.ode_dt), ("lz_horizon", self.lz_horizon)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        let pg = self.profile_grid;
        if pg.n_points < 16 || !pg.n_points.is_power_of_two() || !(pg.half_width > 0.0) {
            return Err(Error::InvalidParameter("profile grid must be a power of two >= 16 with positive width".into()));
        }
        Ok(())
    }
}

/// One line of a resolution report.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionCheck {
    pub name: &'static str,
    /// Grid cells spanned by the resolved length.
    pub ratio: f64,
    pub required: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionReport {
    pub checks: Vec<ResolutionCheck>,
}

impl ResolutionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ResolutionCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for ResolutionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{}: {:.3} cells (need {}) {}",
                c.name,
                c.ratio,
                c.required,
                if c.passed { "pass" } else { "FAIL" }
            )?;
        }
        Ok(())
    }
}

pub const POINTS_PER_WAVELENGTH: f64 = 8.0;
pub const POINTS_PER_WIDTH: f64 = 32.0;

/// Checks that the spacing of an `n`-point grid on `[x_min, x_max]` resolves
/// the oscillation wavelength 2πε/ξ₀ and the packet width √ε.
pub fn resolution_check(params: &SemiclassicalParams, n_points: usize, domain: [f64; 2]) -> ResolutionReport {
    let dx = (domain[1] - domain[0]) / n_points as f64;
    let wavelength = 2.0 * std::f64::consts::PI * params.epsilon() / params.xi0();
    let width = params.epsilon().sqrt();
    let wl_ratio = wavelength / dx;
    let width_ratio = width / dx;
    ResolutionReport {
        checks: vec![
            ResolutionCheck {
                name: "oscillation",
                ratio: wl_ratio,
                required: POINTS_PER_WAVELENGTH,
                passed: wl_ratio >= POINTS_PER_WAVELENGTH,
            },
            ResolutionCheck {
                name: "packet",
                ratio: width_ratio,
                required: POINTS_PER_WIDTH,
                passed: width_ratio >= POINTS_PER_WIDTH,
            },
        ],
    }
}

/// Keys accepted by [`parse_config`].
pub const CONFIG_KEYS: [&str; 13] = [
    "epsilon", "c", "kappa", "xi0", "T", "gamma", "c0", "n_points", "x_min", "x_max", "dt", "ode_dt", "lz_horizon",
];

/// Splits UTF-8 `key=value` text into pairs. `#` starts a comment; blank
/// lines are skipped. Duplicate keys are rejected.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config(format!("line {}: expected key=value", lineno + 1)));
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
        }
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::Config(format!("duplicate key: {k}")));
        }
    }
    Ok(map)
}

fn number(map: &BTreeMap<String, String>, key: &str) -> Result<Option<f64>> {
    map.get(key)
        .map(|v| v.parse::<f64>().map_err(|_| Error::Config(format!("{key}: not a number: {v:?}"))))
        .transpose()
}

fn required(map: &BTreeMap<String, String>, key: &str) -> Result<f64> {
    number(map, key)?.ok_or_else(|| Error::MissingKey(key.to_string()))
}

/// Builds parameters from an already-split key/value map. Physical keys are
/// required; numerical keys fall back to [`NumericsConfig::default`], and a
/// missing `x_min`/`x_max` pair leaves the domain to be chosen from the path.
pub fn config_from_map(map: &BTreeMap<String, String>) -> Result<(SemiclassicalParams, NumericsConfig)> {
    if let Some(k) = map.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
        return Err(Error::UnknownKey(k.clone()));
    }
    let params = SemiclassicalParams::derive_scales(
        required(map, "epsilon")?,
        required(map, "c")?,
        required(map, "kappa")?,
        required(map, "xi0")?,
        required(map, "T")?,
        required(map, "gamma")?,
        required(map, "c0")?,
    )?;
    let mut num = NumericsConfig::default();
    if let Some(v) = map.get("n_points") {
        num.n_points = v
            .parse::<usize>()
            .map_err(|_| Error::Config(format!("n_points: not an integer: {v:?}")))?;
    }
    match (number(map, "x_min")?, number(map, "x_max")?) {
        (Some(lo), Some(hi)) => num.domain = Some([lo, hi]),
        (None, None) => {}
        (Some(_), None) => return Err(Error::MissingKey("x_max".into())),
        (None, Some(_)) => return Err(Error::MissingKey("x_min".into())),
    }
    if let Some(v) = number(map, "dt")? {
        num.dt = v;
    }
    if let Some(v) = number(map, "ode_dt")? {
        num.ode_dt = v;
    }
    if let Some(v) = number(map, "lz_horizon")? {
        num.lz_horizon = v;
    }
    num.validate()?;
    Ok((params, num))
}

pub fn parse_config(text: &str) -> Result<(SemiclassicalParams, NumericsConfig)> {
    config_from_map(&parse_key_values(text)?)
}

/// Renders the configuration back to `key=value` text accepted by [`parse_config`].
pub fn render_config(params: &SemiclassicalParams, num: &NumericsConfig) -> String {
    let mut out = String::new();
    let mut push = |k: &str, v: String| {
        out.push_str(k);
        out.push('=');
        out.push_str(&v);
        out.push('\n');
    };
    push("epsilon", fmt_f64(params.epsilon()));
    push("c", fmt_f64(params.c()));
    push("kappa", fmt_f64(params.kappa()));
    push("xi0", fmt_f64(params.xi0()));
    push("T", fmt_f64(params.horizon()));
    push("gamma", fmt_f64(params.gamma()));
    push("c0", fmt_f64(params.c0()));
    push("n_points", num.n_points.to_string());
    if let Some([lo, hi]) = num.domain {
        push("x_min", fmt_f64(lo));
        push("x_max", fmt_f64(hi));
    }
    push("dt", fmt_f64(num.dt));
    push("ode_dt", fmt_f64(num.ode_dt));
    push("lz_horizon", fmt_f64(num.lz_horizon));
    out
}

/// Fixed output formatting: 17 significant digits in scientific notation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
