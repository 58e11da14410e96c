//! Landau-Zener scattering for `−i∂ₛu = [[s, η], [η, −s]]u`.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::gamma::gamma;
use crate::error::{Error, Result};
use crate::potential::CMat2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringData {
    pub eta: f64,
    pub a_coeff: Complex64,
    pub b_coeff: Complex64,
    pub p: f64,
    pub numeric_matrix: Option<CMat2>,
}

impl ScatteringData {
    pub fn a_sq(&self) -> f64 {
        self.a_coeff.norm_sqr()
    }

    pub fn b_sq(&self) -> f64 {
        self.b_coeff.norm_sqr()
    }
}

/// Closed-form `a(η) = e^{−πη²/2}` and
/// `b(η) = 2i/(√π η) 2^{−iη²/2} e^{−πη²/4} Γ(1 + iη²/2) sinh(πη²/2)`, with `b(0) = 0`.
pub fn scattering_coeffs(eta: f64) -> ScatteringData {
    let e2 = eta * eta;
    let a = Complex64::new((-PI * e2 / 2.0).exp(), 0.0);
    let b = if eta == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        let pow2 = Complex64::from_polar(1.0, -(e2 / 2.0) * 2f64.ln());
        let pref = Complex64::new(0.0, 2.0 / (PI.sqrt() * eta));
        pref * pow2 * (-PI * e2 / 4.0).exp() * gamma(Complex64::new(1.0, e2 / 2.0)) * (PI * e2 / 2.0).sinh()
    };
    ScatteringData { eta, a_coeff: a, b_coeff: b, p: a.norm_sqr(), numeric_matrix: None }
}

/// `p = e^{−πc²/ξ₀}`.
pub fn transition_probability(c: f64, xi0: f64) -> f64 {
    (-PI * c * c / xi0).exp()
}

/// `Λ(s, η) = s²/2 + (η²/2) log|s|`.
pub fn lz_phase(s: f64, eta: f64) -> f64 {
    0.5 * s * s + 0.5 * eta * eta * s.abs().ln()
}

/// One fourth-order commutator-free Magnus step for `u' = iH(s)u`, returned
/// as the exactly unitary 2×2 factor.
fn magnus_step(s: f64, h: f64, eta: f64) -> CMat2 {
    let r = 3f64.sqrt() / 6.0;
    let s1 = s + (0.5 - r) * h;
    let s2 = s + (0.5 + r) * h;
    // Ω = i n·σ
    let n = [h * eta, -(3f64.sqrt() / 6.0) * h * h * eta * (s2 - s1), 0.5 * h * (s1 + s2)];
    let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    let (sn, cs) = norm.sin_cos();
    let k = if norm > 0.0 { sn / norm } else { 1.0 };
    let (nx, ny, nz) = (n[0] * k, n[1] * k, n[2] * k);
    // cos|n| I + i (n̂ sin|n|)·σ
    [
        [Complex64::new(cs, nz), Complex64::new(ny, nx)],
        [Complex64::new(-ny, nx), Complex64::new(cs, -nz)],
    ]
}

/// Transition matrix from `−S` to `S` with the asymptotic phases removed:
/// column `j` starts from `e^{±iΛ(−S)}e_j`, and row `i` is multiplied by
/// `e^{∓iΛ(S)}`.
pub fn numeric_scattering(eta: f64, horizon: f64, ds: f64) -> Result<CMat2> {
    if !(horizon > 0.0 && ds > 0.0) {
        return Err(Error::InvalidParameter("horizon and ds must be positive".into()));
    }
    let steps = (2.0 * horizon / ds).ceil() as usize;
    let h = 2.0 * horizon / steps as f64;
    let l0 = lz_phase(-horizon, eta);
    let mut cols = [
        [Complex64::from_polar(1.0, l0), Complex64::new(0.0, 0.0)],
        [Complex64::new(0.0, 0.0), Complex64::from_polar(1.0, -l0)],
    ];
    for k in 0..steps {
        let s = -horizon + k as f64 * h;
        let m = magnus_step(s, h, eta);
        for c in cols.iter_mut() {
            *c = crate::potential::apply(&m, *c);
        }
    }
    for c in &cols {
        let drift = (c[0].norm_sqr() + c[1].norm_sqr() - 1.0).abs();
        if drift > 1e-10 {
            return Err(Error::NormDrift { drift, limit: 1e-10 });
        }
    }
    let l1 = lz_phase(horizon, eta);
    let strip = [Complex64::from_polar(1.0, -l1), Complex64::from_polar(1.0, l1)];
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (j, c) in cols.iter().enumerate() {
        for i in 0..2 {
            out[i][j] = c[i] * strip[i];
        }
    }
    Ok(out)
}

/// `(η, |a|², |b|², numeric |M₁₁|², |numeric − |a|²|)` rows.
pub fn scattering_table(etas: &[f64], horizon: f64, ds: f64) -> Result<Vec<[f64; 5]>> {
    etas.iter()
        .map(|&eta| {
            let d = scattering_coeffs(eta);
            let m = numeric_scattering(eta, horizon, ds)?;
            let num = m[0][0].norm_sqr();
            Ok([eta, d.a_sq(), d.b_sq(), num, (num - d.a_sq()).abs()])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXP_M_PI_ETA2: [(f64, f64); 5] = [
        (0.25, 0.821724958033877),
        (0.5, 0.455938127765996),
        (0.75, 0.170819836152930),
        (1.5, 8.51438342805158e-4),
        (2.0, 3.48734235620900e-6),
    ];

    #[test]
    fn unitarity_of_coefficients() {
        for &eta in &[0.25, 0.5, 0.75, 1.0, 1.5, 2.0] {
            let d = scattering_coeffs(eta);
            assert!((d.a_sq() + d.b_sq() - 1.0).abs() < 1e-12, "eta={eta}");
        }
    }

    #[test]
    fn frozen_values() {
        assert!((scattering_coeffs(1.0).a_sq() - 0.0432139182637722498).abs() < 1e-15);
        for &(eta, v) in &EXP_M_PI_ETA2 {
            assert!((scattering_coeffs(eta).p - v).abs() < 1e-14 * v.max(1e-3), "eta={eta}");
        }
        assert!((transition_probability(1.0, 2.0) - 0.207879576350761908).abs() < 1e-15);
        assert!((transition_probability(3.0, 1.0) - 5.25548517600644856e-13).abs() < 1e-25);
        assert_eq!(transition_probability(0.0, 1.0), 1.0);
    }

    #[test]
    fn small_coupling_limit() {
        let d = scattering_coeffs(0.0);
        assert_eq!(d.a_coeff, Complex64::new(1.0, 0.0));
        assert_eq!(d.b_coeff, Complex64::new(0.0, 0.0));
        let d = scattering_coeffs(1e-4);
        assert!(d.b_coeff.norm() < 1e-3);
    }

    #[test]
    fn monotonicity() {
        let mut prev = 2.0;
        for k in 0..20 {
            let p = transition_probability(0.1 * k as f64, 1.5);
            assert!(p < prev);
            prev = p;
        }
        let mut prev = -1.0;
        for k in 1..20 {
            let p = transition_probability(1.0, 0.2 * k as f64);
            assert!(p > prev);
            prev = p;
        }
    }

    #[test]
    fn magnus_step_is_unitary() {
        let m = magnus_step(3.7, 0.01, 0.8);
        let c0 = m[0][0].norm_sqr() + m[1][0].norm_sqr();
        let c01 = m[0][0].conj() * m[0][1] + m[1][0].conj() * m[1][1];
        assert!((c0 - 1.0).abs() < 1e-15);
        assert!(c01.norm() < 1e-15);
    }

    #[test]
    fn decoupled_is_identity() {
        let m = numeric_scattering(0.0, 50.0, 1e-3).unwrap();
        assert!((m[0][0] - 1.0).norm() < 1e-9);
        assert!((m[1][1] - 1.0).norm() < 1e-9);
        assert!(m[0][1].norm() < 1e-14 && m[1][0].norm() < 1e-14);
    }

    #[test]
    fn numeric_matches_closed_form() {
        let m = numeric_scattering(1.0, 200.0, 5e-4).unwrap();
        assert!((m[0][0].norm_sqr() - (-PI).exp()).abs() < 1e-3);
        assert!((m[0][0].norm_sqr() + m[1][0].norm_sqr() - 1.0).abs() < 1e-6);
        let off = m[0][0].conj() * m[0][1] + m[1][0].conj() * m[1][1];
        assert!(off.norm() < 1e-6);
    }
}
