//! The 2×2 avoided-crossing potential `V_δ(x) = [[x, δ], [δ, −x]]`.

use num_complex::Complex64;

/// Real 2×2 matrix, row-major.
pub type Mat2 = [[f64; 2]; 2];
/// Complex 2×2 matrix, row-major.
pub type CMat2 = [[Complex64; 2]; 2];

pub fn eval_potential(x: f64, delta: f64) -> Mat2 {
    [[x, delta], [delta, -x]]
}

/// Eigenvalues `±√(x²+δ²)` and the associated real unit eigenvectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenPair {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub chi_plus: [f64; 2],
    pub chi_minus: [f64; 2],
}

/// Eigen-decomposition in half-angle form.
///
/// With `φ = atan2(δ, x) ∈ (0, π)`, `χ⁺ = (cos φ/2, sin φ/2)` and
/// `χ⁻ = (sin φ/2, −cos φ/2)`. For x ≥ 0 this is `(cos, sin)(½ arctan(δ/x))`;
/// for x ≤ 0 the half angle passes π/4, reproducing the `(−sin, cos)` branch,
/// so χ± are continuous across x = 0 and free of the `√(x²+δ²) − x`
/// cancellation.
pub fn eigenpair(x: f64, delta: f64) -> EigenPair {
    let r = x.hypot(delta);
    let half = 0.5 * delta.atan2(x);
    let (s, c) = half.sin_cos();
    EigenPair { lambda_plus: r, lambda_minus: -r, chi_plus: [c, s], chi_minus: [s, -c] }
}

/// Curvature of the upper eigenvalue, `δ²(x²+δ²)^(−3/2)`.
pub fn lambda_second(x: f64, delta: f64) -> f64 {
    let r2 = x * x + delta * delta;
    delta * delta / (r2 * r2.sqrt())
}

/// Slope of the upper eigenvalue, `x/√(x²+δ²)`.
pub fn lambda_plus_slope(x: f64, delta: f64) -> f64 {
    x / x.hypot(delta)
}

/// `exp(−iτ [[a, δ], [δ, −a]])` in closed form: `cos(τr) I − i sin(τr)/r · V`.
pub fn pointwise_propagator(x: f64, delta: f64, tau: f64) -> CMat2 {
    let r = x.hypot(delta);
    let (s, c) = (tau * r).sin_cos();
    let sinc = if r > 0.0 { s / r } else { tau };
    let i = Complex64::new(0.0, -sinc);
    [
        [Complex64::new(c, 0.0) + i * x, i * delta],
        [i * delta, Complex64::new(c, 0.0) - i * x],
    ]
}

pub fn apply(m: &CMat2, v: [Complex64; 2]) -> [Complex64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

pub fn matmul(a: &CMat2, b: &CMat2) -> CMat2 {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, z) in row.iter_mut().enumerate() {
            *z = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Mode amplitudes `(⟨ψ, χ⁺⟩, ⟨ψ, χ⁻⟩)` at one point. The eigenvectors are
/// real, so the Hermitian product is a plain dot product.
pub fn project_point(psi: [Complex64; 2], pair: &EigenPair) -> (Complex64, Complex64) {
    let p = psi[0] * pair.chi_plus[0] + psi[1] * pair.chi_plus[1];
    let m = psi[0] * pair.chi_minus[0] + psi[1] * pair.chi_minus[1];
    (p, m)
}

/// Mode amplitudes ψ± of a two-component field sampled at `xs`.
pub fn project_modes(xs: &[f64], psi: &[Vec<Complex64>; 2], delta: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    xs.iter()
        .enumerate()
        .map(|(j, &x)| project_point([psi[0][j], psi[1][j]], &eigenpair(x, delta)))
        .unzip()
}

/// Empirical constants of the refined eigenvector derivative bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeBoundReport {
    pub order: u32,
    /// `max |∂^order χ| / bound(x)` over the sample set.
    pub constant: f64,
    /// Sample points `x` with the measured ratio at each.
    pub samples: Vec<(f64, f64)>,
}

/// Samples `∂^order χ±` by central differences on a log-spaced grid in
/// `|x| ∈ [δ·10⁻³, δ·10³]` (both signs plus x = 0) and reports the
/// constant `C` with `|∂χ| ≤ C δ/(x²+δ²)` (order 1) or
/// `|∂²χ| ≤ C δ/(x²+δ²)^{3/2}` (order 2). Order 0 reports `max |χ|`.
pub fn eigenvector_derivative_bound_check(delta: f64, order: u32) -> DerivativeBoundReport {
    assert!(order <= 2, "orders 0..=2 supported");
    let per_decade = 20;
    let mut xs = vec![0.0];
    for k in 0..=(6 * per_decade) {
        let m = delta * 10f64.powf(-3.0 + k as f64 / per_decade as f64);
        xs.push(m);
        xs.push(-m);
    }
    let chi = |x: f64| {
        let p = eigenpair(x, delta);
        [p.chi_plus, p.chi_minus]
    };
    let mut samples = Vec::with_capacity(xs.len());
    let mut constant = 0.0f64;
    for &x in &xs {
        let r2 = x * x + delta * delta;
        let h = 1e-3 * r2.sqrt();
        let (value, bound) = match order {
            0 => {
                let c = chi(x);
                (c.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max), 1.0)
            }
            1 => {
                let (a, b) = (chi(x + h), chi(x - h));
                let d = (0..2)
                    .map(|m| ((a[m][0] - b[m][0]) / (2.0 * h)).hypot((a[m][1] - b[m][1]) / (2.0 * h)))
                    .fold(0.0, f64::max);
                (d, delta / r2)
            }
            _ => {
                let (a, c0, b) = (chi(x + h), chi(x), chi(x - h));
                let d = (0..2)
                    .map(|m| {
                        let d0 = (a[m][0] - 2.0 * c0[m][0] + b[m][0]) / (h * h);
                        let d1 = (a[m][1] - 2.0 * c0[m][1] + b[m][1]) / (h * h);
                        d0.hypot(d1)
                    })
                    .fold(0.0, f64::max);
                (d, delta / (r2 * r2.sqrt()))
            }
        };
        let ratio = value / bound;
        constant = constant.max(ratio);
        samples.push((x, ratio));
    }
    DerivativeBoundReport { order, constant, samples }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    /// Radical form of the eigenvectors, with `√(x²+δ²) − x` rewritten as
    /// `δ²/(√(x²+δ²) + x)` for x > 0 to avoid cancellation.
    fn radical(x: f64, delta: f64) -> ([f64; 2], [f64; 2]) {
        let r = (x * x + delta * delta).sqrt();
        let r_minus_x = if x > 0.0 { delta * delta / (r + x) } else { r - x };
        let denom = (2.0 * r * r_minus_x).sqrt();
        let t1p = delta / denom;
        let t2p = r_minus_x / denom;
        ([t1p, t2p], [t2p, -t1p])
    }

    #[test]
    fn potential_structure() {
        assert_eq!(eval_potential(0.0, 0.5), [[0.0, 0.5], [0.5, 0.0]]);
        let v = eval_potential(3.0, 4.0);
        assert_eq!(v[0][0] + v[1][1], 0.0);
        assert_eq!(v[0][0] * v[1][1] - v[0][1] * v[1][0], -25.0);
        let p = eigenpair(3.0, 4.0);
        assert_eq!((p.lambda_plus, p.lambda_minus), (5.0, -5.0));
    }

    #[test]
    fn symmetric_point() {
        let p = eigenpair(0.0, 0.37);
        assert!((p.chi_plus[0] - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((p.chi_plus[1] - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn asymptotic_polarisation() {
        let d = 0.01;
        let p = eigenpair(1e6 * d, d);
        assert!((p.chi_plus[0] - 1.0).abs() < 1e-12);
        assert!((p.chi_plus[1] - 0.5e-6).abs() < 1e-15);
        let m = eigenpair(-1e6 * d, d);
        assert!((m.chi_plus[0] - 0.5e-6).abs() < 1e-15);
        assert!((m.chi_plus[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn continuity_across_zero() {
        let d = 0.2;
        let a = eigenpair(-1e-12, d);
        let b = eigenpair(1e-12, d);
        for k in 0..2 {
            assert!((a.chi_plus[k] - b.chi_plus[k]).abs() < 1e-10);
            assert!((a.chi_minus[k] - b.chi_minus[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn lambda_second_values_and_finite_difference() {
        let d = 0.1;
        assert!((lambda_second(0.0, d) - 10.0).abs() < 1e-12);
        assert!((lambda_second(d, d) - 1.0 / (2.0 * 2f64.sqrt() * d)).abs() < 1e-12);
        let (x, h) = (0.3, 1e-4);
        let lam = |x: f64| x.hypot(d);
        let fd = (lam(x + h) - 2.0 * lam(x) + lam(x - h)) / (h * h);
        assert!((fd - lambda_second(x, d)).abs() / lambda_second(x, d) < 1e-6);
    }

    #[test]
    fn propagator_closed_forms() {
        let (d, tau) = (0.3, 1.7);
        let u = pointwise_propagator(0.0, d, tau);
        let (s, c) = (tau * d).sin_cos();
        assert!((u[0][0] - Complex64::new(c, 0.0)).norm() < 1e-15);
        assert!((u[0][1] - Complex64::new(0.0, -s)).norm() < 1e-15);
        assert!((u[1][0] - Complex64::new(0.0, -s)).norm() < 1e-15);
        let id = pointwise_propagator(0.7, d, 0.0);
        assert_eq!(id[0][0], Complex64::new(1.0, 0.0));
        assert_eq!(id[0][1], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn propagator_unitary_on_random_samples() {
        // fixed LCG so the sample set is reproducible
        let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let x = 20.0 * next() - 10.0;
            let d = 1e-3 + 5.0 * next();
            let tau = 200.0 * next() - 100.0;
            let u = pointwise_propagator(x, d, tau);
            let mut adj = u;
            for i in 0..2 {
                for j in 0..2 {
                    adj[i][j] = u[j][i].conj();
                }
            }
            let p = matmul(&u, &adj);
            for i in 0..2 {
                for j in 0..2 {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((p[i][j] - e).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn derivative_bounds() {
        let r0 = eigenvector_derivative_bound_check(0.1, 0);
        assert!((r0.constant - 1.0).abs() < 1e-14);
        let r1 = eigenvector_derivative_bound_check(0.1, 1);
        assert!(r1.constant.is_finite() && r1.constant > 0.1 && r1.constant < 10.0);
        let r2 = eigenvector_derivative_bound_check(0.1, 2);
        assert!(r2.constant.is_finite() && r2.constant < 10.0);
        // |dχ⁺/dx| at x = 0 is 1/(2δ)
        let d = 0.1;
        let h = 1e-6;
        let (a, b) = (eigenpair(h, d).chi_plus, eigenpair(-h, d).chi_plus);
        let slope = ((a[0] - b[0]) / (2.0 * h)).hypot((a[1] - b[1]) / (2.0 * h));
        assert!((slope - 1.0 / (2.0 * d)).abs() < 1e-6);
    }

    #[test]
    fn projection_examples() {
        let p = eigenpair(0.0, 0.2);
        let (plus, minus) = project_point([Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)], &p);
        assert!((plus.re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((minus.re + FRAC_1_SQRT_2).abs() < 1e-15);
        let xs = [-1.0, 0.0, 0.4];
        let field = [
            xs.iter().map(|&x| Complex64::new(eigenpair(x, 0.2).chi_plus[0], 0.0)).collect(),
            xs.iter().map(|&x| Complex64::new(eigenpair(x, 0.2).chi_plus[1], 0.0)).collect(),
        ];
        let (pp, mm) = project_modes(&xs, &field, 0.2);
        for j in 0..3 {
            assert!((pp[j] - 1.0).norm() < 1e-15);
            assert!(mm[j].norm() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn eigen_identities(ratio in -1e3f64..1e3, d in 1e-4f64..10.0) {
            let x = ratio * d;
            let p = eigenpair(x, d);
            let v = eval_potential(x, d);
            let n = |a: [f64; 2]| a[0].hypot(a[1]);
            prop_assert!((n(p.chi_plus) - 1.0).abs() < 1e-14);
            prop_assert!((n(p.chi_minus) - 1.0).abs() < 1e-14);
            prop_assert!((p.chi_plus[0] * p.chi_minus[0] + p.chi_plus[1] * p.chi_minus[1]).abs() < 1e-14);
            prop_assert_eq!(p.chi_plus[0], -p.chi_minus[1]);
            prop_assert_eq!(p.chi_plus[1], p.chi_minus[0]);
            prop_assert!(p.lambda_plus - p.lambda_minus >= 2.0 * d);
            for (chi, lam) in [(p.chi_plus, p.lambda_plus), (p.chi_minus, p.lambda_minus)] {
                let r0 = v[0][0] * chi[0] + v[0][1] * chi[1] - lam * chi[0];
                let r1 = v[1][0] * chi[0] + v[1][1] * chi[1] - lam * chi[1];
                prop_assert!(r0.hypot(r1) < 1e-12 * d);
            }
        }

        #[test]
        fn half_angle_matches_radical(ratio in -1e6f64..1e6, d in 1e-4f64..1.0) {
            let x = ratio * d;
            let p = eigenpair(x, d);
            let (rp, rm) = radical(x, d);
            for k in 0..2 {
                prop_assert!((p.chi_plus[k] - rp[k]).abs() < 1e-12);
                prop_assert!((p.chi_minus[k] - rm[k]).abs() < 1e-12);
            }
        }

        #[test]
        fn propagator_group_property(x in -5f64..5.0, d in 0.01f64..2.0, tau in -2f64..2.0, n in 1usize..20) {
            let one = pointwise_propagator(x, d, tau);
            let mut acc = pointwise_propagator(x, d, 0.0);
            for _ in 0..n {
                acc = matmul(&acc, &one);
            }
            let direct = pointwise_propagator(x, d, n as f64 * tau);
            for i in 0..2 {
                for j in 0..2 {
                    prop_assert!((acc[i][j] - direct[i][j]).norm() < 1e-12);
                }
            }
        }

        #[test]
        fn projection_preserves_norm(re0 in -1f64..1.0, im0 in -1f64..1.0, re1 in -1f64..1.0, im1 in -1f64..1.0, x in -3f64..3.0) {
            let psi = [Complex64::new(re0, im0), Complex64::new(re1, im1)];
            let p = eigenpair(x, 0.05);
            let (a, b) = project_point(psi, &p);
            let before = psi[0].norm_sqr() + psi[1].norm_sqr();
            prop_assert!((a.norm_sqr() + b.norm_sqr() - before).abs() < 1e-12);
            let back0 = a * p.chi_plus[0] + b * p.chi_minus[0];
            let back1 = a * p.chi_plus[1] + b * p.chi_minus[1];
            prop_assert!((back0 - psi[0]).norm() < 1e-13);
            prop_assert!((back1 - psi[1]).norm() < 1e-13);
        }
    }
}
