use std::sync::Arc;

use acl_core::classical::crossing_path;
use acl_core::diagnostics::convergence_fit;
use acl_core::grid::SpatialGrid;
use acl_core::inner::{build_inner_data, derivative_growth_check, derivative_norms, integrate_lz_family};
use acl_core::params::SemiclassicalParams;
use acl_core::profile::{initial_profile_gaussian, path_curvature, solve_profile_direct};

const EPS: [f64; 3] = [1e-3, 1e-4, 1e-5];

fn params(eps: f64) -> SemiclassicalParams {
    SemiclassicalParams::derive_scales(eps, 1.0, 0.05, 2.0, 0.5, 0.1, 1.0).unwrap()
}

#[test]
fn theta_shift_scales_like_half_minus_two_gamma() {
    let y = SpatialGrid::centered(1024, 20.0).unwrap();
    let mut pts = Vec::new();
    for eps in EPS {
        let p = params(eps);
        let path = crossing_path(p.xi0(), p.delta(), -0.5, 0.5, 1e-5).unwrap();
        let mut a = initial_profile_gaussian(&y);
        a.t = -p.t_eps();
        let d = build_inner_data(&a, &p, &path, &y).unwrap();
        pts.push((eps, d.theta.abs()));
    }
    let fit = convergence_fit(&pts).unwrap();
    assert!((fit.slope - 0.3).abs() < 0.1, "slope {} from {pts:?}", fit.slope);
}

#[test]
fn family_derivative_growth() {
    let y = SpatialGrid::centered(1024, 20.0).unwrap();
    let mut sweep = Vec::new();
    for eps in EPS {
        let p = params(eps);
        let path = Arc::new(crossing_path(p.xi0(), p.delta(), -0.5, 0.5, 1e-5).unwrap());
        let mut a = initial_profile_gaussian(&y);
        a.t = -0.5;
        let u = solve_profile_direct(&y, &a, p.kappa(), path_curvature(path.clone()), [-0.5, -p.t_eps()], 1e-3, &[])
            .unwrap()
            .pop()
            .unwrap();
        let d = build_inner_data(&u, &p, &path, &y).unwrap();
        let se = p.s_eps();
        let record: Vec<f64> = (1..=8).map(|k| -se + 2.0 * se * k as f64 / 8.0).collect();
        let run = integrate_lz_family(&d.field, p.c(), p.xi0(), &record, 5e-4, 1e-6).unwrap();
        let mut traj = vec![d.field.clone()];
        traj.extend(run.snapshots);
        sweep.push((eps, derivative_norms(&traj)));
    }
    let report = derivative_growth_check(&sweep, 0.1).unwrap();
    assert!(report.k0_spread < 1e-8, "k=0 spread {}", report.k0_spread);
    assert!((report.fits[0].slope - report.expected(1)).abs() < 0.1, "k=1 {:?} {sweep:?}", report.fits[0]);
    assert!((report.fits[1].slope - report.expected(2)).abs() < 0.2, "k=2 {:?} {sweep:?}", report.fits[1]);
}
