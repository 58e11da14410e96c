//! Benchmark fixtures.

use acl_core::diagnostics::{prepare, Setup};
use acl_core::inner::{build_inner_data, InnerField};
use acl_core::params::{NumericsConfig, SemiclassicalParams};
use acl_core::semiclassical::{build_initial_data, SpinorField};

pub fn params(eps: f64) -> SemiclassicalParams {
    SemiclassicalParams::derive_scales(eps, 1.0, 0.05, 2.0, 0.5, 0.1, 1.0).expect("valid parameters")
}

/// Setup and initial field at −T for a grid of `n` points.
pub fn initial_field(eps: f64, n: usize) -> (SemiclassicalParams, Setup, SpinorField) {
    let p = params(eps);
    let num = NumericsConfig { n_points: n, ..Default::default() };
    let s = prepare(&p, &num).expect("setup");
    let mut a = s.a.clone();
    a.t = -p.horizon();
    let psi = build_initial_data(&a, &s.y_grid, &p, &s.path, &s.grid).expect("initial data");
    (p, s, psi)
}

/// Inner data at −s^ε built from the unevolved Gaussian profile.
pub fn inner_field(eps: f64) -> (SemiclassicalParams, InnerField) {
    let p = params(eps);
    let s = prepare(&p, &NumericsConfig { n_points: 1 << 15, ..Default::default() }).expect("setup");
    let mut a = s.a.clone();
    a.t = -p.t_eps();
    let d = build_inner_data(&a, &p, &s.path, &s.y_grid).expect("inner data");
    (p, d.field)
}
