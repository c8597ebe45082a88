//! Compressional and shear far-field patterns from a scattered trace on
//! `Γ_R`.
//!
//! With `Ψ_α^n = ψ_α^n / H_n(k_α R)` the coefficients of `H_n(k_α r)e^{inθ}`
//! in the exterior potentials,
//! `u_p^∞(θ) = 4k_p Σ Ψ_p^n e^{in(θ−π/2)}` and
//! `u_s^∞(θ) = −4k_s Σ Ψ_s^n e^{in(θ−π/2)}`.
//! This normalisation omits the factor `e^{iπ/4}/√(8πk_α)` of the
//! asymptotic expansion, so `∇H₀(k_p|x|)` has pattern `4k_p x̂`.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::dtn2d::{BoundaryTrace, DtnOperator};
use crate::special_functions::hankel1;
use crate::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct FarField {
    pub thetas: Vec<f64>,
    pub up: Vec<Complex64>,
    pub us: Vec<Complex64>,
}

impl FarField {
    /// `u^∞(θ_k) = u_p^∞ x̂ + u_s^∞ x̂⊥`.
    pub fn vector(&self, k: usize) -> [Complex64; 2] {
        let (s, c) = self.thetas[k].sin_cos();
        let (p, q) = (self.up[k], self.us[k]);
        [p * c - q * s, p * s + q * c]
    }

    /// Largest `|u^∞(θ_k)|` over the samples.
    pub fn max_norm(&self) -> f64 {
        (0..self.thetas.len())
            .map(|k| {
                let v = self.vector(k);
                (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// `max_k |u^∞ − v^∞| / max_k |v^∞|` over common samples.
    pub fn relative_error(&self, reference: &Self) -> f64 {
        let mut num: f64 = 0.0;
        for k in 0..self.thetas.len() {
            let (a, b) = (self.vector(k), reference.vector(k));
            num = num.max(((a[0] - b[0]).norm_sqr() + (a[1] - b[1]).norm_sqr()).sqrt());
        }
        num / reference.max_norm()
    }

    /// CSV with columns `theta,re_up,im_up,re_us,im_us`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("theta,re_up,im_up,re_us,im_us\n");
        for k in 0..self.thetas.len() {
            let _ = writeln!(
                s,
                "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                self.thetas[k], self.up[k].re, self.up[k].im, self.us[k].re, self.us[k].im
            );
        }
        s
    }
}

/// Angles `2πk/n`, `k = 0..n`.
pub fn uniform_angles(n: usize) -> Vec<f64> {
    (0..n).map(|k| std::f64::consts::TAU * k as f64 / n as f64).collect()
}

/// Far field of the radiating field with the given trace on `Γ_R`.
/// Modes above the operator's truncation are dropped.
pub fn farfield_from_trace(op: &DtnOperator<f64>, trace: &BoundaryTrace<f64>, thetas: &[f64]) -> Result<FarField> {
    let coeffs = op.radiating_coeffs(trace);
    let nt = coeffs.n_max as i32;
    let p = &op.params;
    let (kp, ks) = (p.kp(), p.ks());
    let mut big_p = Vec::with_capacity(2 * nt as usize + 1);
    let mut big_s = Vec::with_capacity(2 * nt as usize + 1);
    for n in -nt..=nt {
        let (hp, _) = hankel1(n, p.tp())?;
        let (hs, _) = hankel1(n, p.ts())?;
        // |H_n| grows without bound in n; an infinite denominator means the
        // mode contributes nothing.
        let div = |a: Complex64, h: Complex64| if h.norm().is_finite() { a / h } else { Complex64::new(0.0, 0.0) };
        big_p.push(div(coeffs.psi_p(n), hp));
        big_s.push(div(coeffs.psi_s(n), hs));
    }
    let mut up = Vec::with_capacity(thetas.len());
    let mut us = Vec::with_capacity(thetas.len());
    for &th in thetas {
        let (mut a, mut b) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for n in -nt..=nt {
            let e = Complex64::from_polar(1.0, n as f64 * (th - FRAC_PI_2));
            let k = (n + nt) as usize;
            a += big_p[k] * e;
            b += big_s[k] * e;
        }
        up.push(a * (4.0 * kp));
        us.push(b * (-4.0 * ks));
    }
    Ok(FarField {
        thetas: thetas.to_vec(),
        up,
        us,
    })
}
