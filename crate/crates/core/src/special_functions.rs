//! Hankel functions of the first kind, cylindrical and spherical, together
//! with the logarithmic-derivative ratios the DtN kernels are built from.
//!
//! `J_n` comes from Miller's backward recurrence normalised by
//! `J_0 + 2 Σ J_2k = 1`. `Y_0` and `Y_1` are summed from Neumann series over
//! the same `J` values and then recurred forward, where `Y` is dominant.
//!
//! Ratios `γ_n = H_n'/H_n` are produced by a forward recurrence on
//! `r_n = H_{n-1}/H_n`. Each step maps `Im r` multiplicatively, so `Im γ_n`
//! keeps full relative precision even after `|H_n|` has left the float range.

use num_complex::Complex;

use crate::{Cplx, Error, Real, Result};

/// Largest supported `|n|`.
pub const MAX_ORDER: i32 = 500;

/// `H_n(t)` together with `γ = H_n'/H_n` and `β = H_n''/H_n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HankelRatio<T> {
    pub order: i32,
    pub argument: T,
    /// Non-finite once `|H_n(t)|` overflows. `gamma` and `beta` stay valid.
    pub h: Cplx<T>,
    pub dh: Cplx<T>,
    pub gamma: Cplx<T>,
    pub beta: Cplx<T>,
    /// `ln |H_n(t)|`, finite whenever `gamma` is.
    pub ln_abs_h: T,
    /// `ln Im γ`. Stays finite after `Im γ` itself underflows.
    pub ln_im_gamma: T,
    /// `H_n(t)/|H_n(t)|`.
    pub phase: Cplx<T>,
}

impl<T: Real> HankelRatio<T> {
    /// `t γ`.
    pub fn t_gamma(&self) -> Cplx<T> {
        self.gamma * self.argument
    }

    /// `|H_n(t)|^{-2}`, computed from the logarithm so it underflows
    /// gracefully instead of dividing by infinity.
    pub fn inv_abs_h_sq(&self) -> T {
        (-(self.ln_abs_h + self.ln_abs_h)).exp()
    }

    /// `H_n(self.argument) / H_n(other.argument)` without forming either value.
    pub fn ratio_to(&self, other: &Self) -> Cplx<T> {
        self.phase / other.phase * (self.ln_abs_h - other.ln_abs_h).exp()
    }
}

/// `J_n`, `Y_n` and their derivatives with independent exponent offsets:
/// `J_n = j e^{ln_j}`, `J_n' = dj e^{ln_j}` and likewise for `Y`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledBessel<T> {
    pub order: usize,
    pub argument: T,
    pub j: T,
    pub dj: T,
    pub ln_j: T,
    pub y: T,
    pub dy: T,
    pub ln_y: T,
}

impl<T: Real> ScaledBessel<T> {
    pub fn j_value(&self) -> T {
        self.j * self.ln_j.exp()
    }
    pub fn y_value(&self) -> T {
        self.y * self.ln_y.exp()
    }
    pub fn dj_value(&self) -> T {
        self.dj * self.ln_j.exp()
    }
    pub fn dy_value(&self) -> T {
        self.dy * self.ln_y.exp()
    }

    /// `(π t / 2)(J Y' − J' Y)`, which equals one exactly.
    pub fn normalized_wronskian(&self) -> T {
        let w = self.j * self.dy - self.dj * self.y;
        let half_pi_t = T::FRAC_PI_2() * self.argument;
        if w == T::zero() {
            return T::zero();
        }
        let ln = w.abs().ln() + self.ln_j + self.ln_y + half_pi_t.ln();
        w.signum() * ln.exp()
    }
}

fn check_argument<T: Real>(t: T) -> Result<()> {
    if !(t > T::zero()) || !t.is_finite() {
        return Err(Error::Domain(format!(
            "Hankel argument must be positive and finite, got {t}"
        )));
    }
    Ok(())
}

fn check_order(n: i64) -> Result<usize> {
    let a = n.unsigned_abs();
    if a > MAX_ORDER as u64 {
        return Err(Error::OrderTooLarge {
            order: n,
            max: MAX_ORDER as i64,
        });
    }
    Ok(a as usize)
}

fn rescale_threshold<T: Real>() -> (T, T) {
    let big = T::max_value().sqrt().sqrt();
    (big, big.ln())
}

/// Miller's algorithm. Returns mantissas and log offsets of `J_0..=J_{n_max}`.
fn miller_j<T: Real>(n_max: usize, t: T) -> (Vec<T>, Vec<T>) {
    let (big, ln_big) = rescale_threshold::<T>();
    let tf = t.to_f64_lossy();
    let m = (n_max as f64).max(tf.ceil());
    let mut start = (m + 16.0 + (200.0 * m.max(1.0)).sqrt()).ceil() as usize;
    start += start % 2;
    let mut mant = vec![T::zero(); start + 1];
    let mut lsc = vec![T::zero(); start + 1];
    let two = T::lit(2.0);
    let mut f_next = T::zero();
    let mut f = T::one();
    let mut off = T::zero();
    mant[start] = f;
    for k in (1..=start).rev() {
        let f_prev = two * T::from_usize(k).unwrap() / t * f - f_next;
        f_next = f;
        f = f_prev;
        if f.abs() > big {
            f = f / big;
            f_next = f_next / big;
            off += ln_big;
        }
        mant[k - 1] = f;
        lsc[k - 1] = off;
    }
    let l0 = lsc[0];
    let mut s = mant[0];
    let mut k = 2;
    while k <= start {
        s += two * mant[k] * (lsc[k] - l0).exp();
        k += 2;
    }
    let len = n_max.max(1) + 2;
    let mut jm = Vec::with_capacity(start + 1);
    let mut jl = Vec::with_capacity(start + 1);
    for k in 0..=start {
        jm.push(mant[k] / s);
        jl.push(lsc[k] - l0);
    }
    debug_assert!(jm.len() >= len);
    (jm, jl)
}

/// `J_n`, `Y_n` for `n = 0..=n_max` in scaled form.
pub fn bessel_jy_scaled_seq<T: Real>(n_max: usize, t: T) -> Result<Vec<ScaledBessel<T>>> {
    check_argument(t)?;
    let (jm, jl) = miller_j(n_max + 1, t);
    let jv = |k: usize| jm[k] * jl[k].exp();

    let euler = T::lit(0.577_215_664_901_532_9);
    let lg = (t / T::lit(2.0)).ln() + euler;
    let two_over_pi = T::FRAC_2_PI();
    let mut s0 = T::zero();
    let mut s1 = T::zero();
    let kmax = (jm.len() - 2) / 2;
    for k in 1..=kmax {
        let kk = T::from_usize(k).unwrap();
        let sgn = if k % 2 == 0 { T::one() } else { -T::one() };
        s0 += sgn * jv(2 * k) / kk;
        s1 += sgn * (jv(2 * k - 1) - jv(2 * k + 1)) / kk;
    }
    let y0 = two_over_pi * (lg * jv(0) - T::lit(2.0) * s0);
    let y1 = -two_over_pi * (jv(0) / t - lg * jv(1) - s1);
    if !y1.is_finite() {
        return Err(Error::Overflow {
            order: 1,
            argument: t.to_f64_lossy(),
        });
    }

    let (big, ln_big) = rescale_threshold::<T>();
    let mut ym = vec![T::zero(); n_max + 2];
    let mut yl = vec![T::zero(); n_max + 2];
    ym[0] = y0;
    ym[1] = y1;
    let mut prev = y0;
    let mut cur = y1;
    let mut off = T::zero();
    for k in 1..=n_max {
        let next = T::lit(2.0) * T::from_usize(k).unwrap() / t * cur - prev;
        prev = cur;
        cur = next;
        if cur.abs() > big {
            cur = cur / big;
            prev = prev / big;
            off += ln_big;
        }
        ym[k + 1] = cur;
        yl[k + 1] = off;
    }

    let mut out = Vec::with_capacity(n_max + 1);
    for k in 0..=n_max {
        let (dj, dy) = if k == 0 {
            (
                -jm[1] * (jl[1] - jl[0]).exp(),
                -ym[1] * (yl[1] - yl[0]).exp(),
            )
        } else {
            let kt = T::from_usize(k).unwrap() / t;
            (
                jm[k - 1] * (jl[k - 1] - jl[k]).exp() - kt * jm[k],
                ym[k - 1] * (yl[k - 1] - yl[k]).exp() - kt * ym[k],
            )
        };
        out.push(ScaledBessel {
            order: k,
            argument: t,
            j: jm[k],
            dj,
            ln_j: jl[k],
            y: ym[k],
            dy,
            ln_y: yl[k],
        });
    }
    Ok(out)
}

/// Scaled `J_n`, `Y_n` for a single non-negative order.
pub fn bessel_jy_scaled<T: Real>(n: usize, t: T) -> Result<ScaledBessel<T>> {
    check_order(n as i64)?;
    Ok(bessel_jy_scaled_seq(n, t)?.pop().expect("non-empty"))
}

fn parity<T: Real>(n: i32) -> T {
    if n < 0 && n % 2 != 0 {
        -T::one()
    } else {
        T::one()
    }
}

/// `(H_n(t), H_n'(t))`, built from independent `J` and `Y` evaluations.
pub fn hankel1<T: Real>(n: i32, t: T) -> Result<(Cplx<T>, Cplx<T>)> {
    check_argument(t)?;
    let a = check_order(n as i64)?;
    let b = bessel_jy_scaled(a, t)?;
    let (y, dy) = (b.y_value(), b.dy_value());
    if !y.is_finite() || !dy.is_finite() {
        return Err(Error::Overflow {
            order: n as i64,
            argument: t.to_f64_lossy(),
        });
    }
    let s = parity::<T>(n);
    Ok((
        Complex::new(b.j_value(), y) * s,
        Complex::new(b.dj_value(), dy) * s,
    ))
}

/// Shared forward ratio recurrence. `mu(k)` is the recurrence coefficient in
/// `f_{k+1} = mu(k) f_k − f_{k−1}`, `nu(k)` the shift in
/// `f_k' = f_{k−1} − nu(k) f_k`.
fn ratio_sequence<T: Real>(
    n_max: usize,
    t: T,
    f0: Cplx<T>,
    f1: Cplx<T>,
    mu: impl Fn(usize) -> T,
    nu: impl Fn(usize) -> T,
    beta: impl Fn(usize, Cplx<T>) -> Cplx<T>,
) -> Result<Vec<HankelRatio<T>>> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut ln_abs = f0.norm().ln();
    let mut phase = f0 / f0.norm();
    let gamma0 = -f1 / f0;
    let push = |out: &mut Vec<HankelRatio<T>>,
                k: usize,
                ln_abs: T,
                phase: Cplx<T>,
                gamma: Cplx<T>,
                ln_im: T| {
        let h = phase * ln_abs.exp();
        out.push(HankelRatio {
            order: k as i32,
            argument: t,
            h,
            dh: gamma * h,
            gamma,
            beta: beta(k, gamma),
            ln_abs_h: ln_abs,
            ln_im_gamma: ln_im,
            phase,
        });
    };
    push(&mut out, 0, ln_abs, phase, gamma0, gamma0.im.ln());
    let mut r = f0 / f1;
    let mut ln_im = r.im.ln();
    for k in 1..=n_max {
        if k > 1 {
            let denom = Complex::new(mu(k - 1), T::zero()) - r;
            r = denom.inv();
        }
        let nr = r.norm();
        if k > 1 {
            ln_im += T::lit(2.0) * nr.ln();
        }
        ln_abs = ln_abs - nr.ln();
        phase = phase * (r / nr).conj();
        let phase_n = phase.norm();
        phase = phase / phase_n;
        let gamma = r - nu(k);
        if !gamma.re.is_finite() || !gamma.im.is_finite() {
            return Err(Error::Overflow {
                order: k as i64,
                argument: t.to_f64_lossy(),
            });
        }
        push(&mut out, k, ln_abs, phase, gamma, ln_im);
    }
    Ok(out)
}

/// `HankelRatio` for `n = 0..=n_max`.
pub fn hankel_ratios<T: Real>(n_max: usize, t: T) -> Result<Vec<HankelRatio<T>>> {
    check_argument(t)?;
    check_order(n_max as i64)?;
    let s = bessel_jy_scaled_seq(1, t)?;
    let h0 = Complex::new(s[0].j_value(), s[0].y_value());
    let h1 = Complex::new(s[1].j_value(), s[1].y_value());
    let two = T::lit(2.0);
    ratio_sequence(
        n_max,
        t,
        h0,
        h1,
        |k| two * T::from_usize(k).unwrap() / t,
        |k| T::from_usize(k).unwrap() / t,
        |k, g| {
            let n = T::from_usize(k).unwrap();
            Complex::new(n * n / (t * t) - T::one(), T::zero()) - g / t
        },
    )
}

/// `HankelRatio` for a single order; `γ`, `β` are even in `n`.
pub fn hankel_ratio<T: Real>(n: i32, t: T) -> Result<HankelRatio<T>> {
    check_argument(t)?;
    let a = check_order(n as i64)?;
    let mut r = hankel_ratios(a, t)?.pop().expect("non-empty");
    let s = parity::<T>(n);
    r.order = n;
    r.h = r.h * s;
    r.dh = r.dh * s;
    r.phase = r.phase * s;
    Ok(r)
}

/// `(h_n(t), h_n'(t))` for the spherical Hankel function of the first kind.
pub fn spherical_hankel1<T: Real>(n: i32, t: T) -> Result<(Cplx<T>, Cplx<T>)> {
    if n < 0 {
        return Err(Error::Domain(format!(
            "spherical Hankel order must be non-negative, got {n}"
        )));
    }
    let r = spherical_ratio(n, t)?;
    if !r.h.re.is_finite() || !r.h.im.is_finite() || !r.dh.re.is_finite() || !r.dh.im.is_finite()
    {
        return Err(Error::Overflow {
            order: n as i64,
            argument: t.to_f64_lossy(),
        });
    }
    Ok((r.h, r.dh))
}

fn spherical_start<T: Real>(t: T) -> (Cplx<T>, Cplx<T>) {
    let e = Complex::new(t.cos(), t.sin());
    let i = Complex::new(T::zero(), T::one());
    let h0 = -i * e / t;
    let h1 = -e * Complex::new(t, T::one()) / (t * t);
    (h0, h1)
}

/// Spherical ratios for `n = 0..=n_max`, with `β = δ_n/t² − 1 − 2γ/t`.
pub fn spherical_ratios<T: Real>(n_max: usize, t: T) -> Result<Vec<HankelRatio<T>>> {
    check_argument(t)?;
    check_order(n_max as i64)?;
    let (h0, h1) = spherical_start(t);
    let two = T::lit(2.0);
    ratio_sequence(
        n_max,
        t,
        h0,
        h1,
        |k| (two * T::from_usize(k).unwrap() + T::one()) / t,
        |k| (T::from_usize(k).unwrap() + T::one()) / t,
        |k, g| {
            let n = T::from_usize(k).unwrap();
            Complex::new(n * (n + T::one()) / (t * t) - T::one(), T::zero()) - g * two / t
        },
    )
}

pub fn spherical_ratio<T: Real>(n: i32, t: T) -> Result<HankelRatio<T>> {
    if n < 0 {
        return Err(Error::Domain(format!(
            "spherical Hankel order must be non-negative, got {n}"
        )));
    }
    check_argument(t)?;
    let a = check_order(n as i64)?;
    Ok(spherical_ratios(a, t)?.pop().expect("non-empty"))
}

/// One row of the diagnostic table printed by the command line tool.
#[derive(Clone, Copy, Debug)]
pub struct TableRow {
    pub order: i32,
    pub argument: f64,
    pub h: Cplx<f64>,
    pub gamma: Cplx<f64>,
    pub beta: Cplx<f64>,
    /// `|Im(tγ) π|H|²/2 − 1|`, evaluated through `ln|H|`.
    pub wronskian_residual: f64,
}

/// Ratios for every `(n, t)` on the given grid.
pub fn table(n_max: usize, arguments: &[f64]) -> Result<Vec<TableRow>> {
    let mut rows = Vec::new();
    for &t in arguments {
        for r in hankel_ratios(n_max, t)? {
            rows.push(TableRow {
                order: r.order,
                argument: t,
                h: r.h,
                gamma: r.gamma,
                beta: r.beta,
                wronskian_residual: cylindrical_wronskian_residual(&r),
            });
        }
    }
    Ok(rows)
}

/// Relative defect of `Im(tγ) = 2/(π|H|²)`.
pub fn cylindrical_wronskian_residual<T: Real>(r: &HankelRatio<T>) -> T {
    let ln_lhs = r.ln_im_gamma + r.argument.ln() + T::lit(2.0) * r.ln_abs_h + T::FRAC_PI_2().ln();
    (ln_lhs.exp() - T::one()).abs()
}

/// Relative defect of `Im(tγ) = 1/(t|h|²)`.
pub fn spherical_wronskian_residual<T: Real>(r: &HankelRatio<T>) -> T {
    let ln_lhs = r.ln_im_gamma + T::lit(2.0) * (r.ln_abs_h + r.argument.ln());
    (ln_lhs.exp() - T::one()).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Ascending series, adequate for small arguments only.
    fn j_series(n: usize, x: f64) -> f64 {
        let mut term = (x / 2.0).powi(n as i32) / (1..=n).map(|k| k as f64).product::<f64>();
        let mut s = term;
        for k in 1..60 {
            term *= -(x * x / 4.0) / (k as f64 * (k + n) as f64);
            s += term;
        }
        s
    }

    #[test]
    fn j_matches_series_for_small_argument() {
        for n in 0..8 {
            for &x in &[0.1, 0.7, 1.0, 2.5] {
                let b = bessel_jy_scaled(n, x).unwrap();
                let want = j_series(n, x);
                assert!((b.j_value() - want).abs() < 1e-14 * (1.0 + want.abs()), "{n} {x}");
            }
        }
    }

    #[test]
    fn known_values_at_one() {
        let b0 = bessel_jy_scaled(0, 1.0_f64).unwrap();
        let b1 = bessel_jy_scaled(1, 1.0_f64).unwrap();
        assert!((b0.y_value() - 0.088_256_964_215_676_96).abs() < 1e-14);
        assert!((b1.y_value() + 0.781_212_821_300_288_7).abs() < 1e-14);
        assert!((b0.j_value() - 0.765_197_686_557_966_6).abs() < 1e-15);
    }

    #[test]
    fn y0_large_argument_against_asymptotics() {
        // Hankel's expansion, three terms, is accurate to ~1e-9 at x = 40.
        let x: f64 = 40.0;
        let chi = x - std::f64::consts::FRAC_PI_4;
        let p = 1.0 - 9.0 / (128.0 * x * x);
        let q = -1.0 / (8.0 * x) + 75.0 / (1024.0 * x.powi(3));
        let amp = (2.0 / (std::f64::consts::PI * x)).sqrt();
        let y0 = amp * (p * chi.sin() + q * chi.cos());
        let j0 = amp * (p * chi.cos() - q * chi.sin());
        let b = bessel_jy_scaled(0, x).unwrap();
        assert!((b.y_value() - y0).abs() < 1e-8);
        assert!((b.j_value() - j0).abs() < 1e-8);
    }

    #[test]
    fn spherical_h0_closed_form() {
        let t = 2.3_f64;
        let (h, _) = spherical_hankel1(0, t).unwrap();
        let want = -Complex::new(0.0, 1.0) * Complex::new(0.0, t).exp() / t;
        assert!((h - want).norm() < 1e-15);
    }

    #[test]
    fn negative_order_parity() {
        let (h3, d3) = hankel1(3, 2.0_f64).unwrap();
        let (hm3, dm3) = hankel1(-3, 2.0_f64).unwrap();
        assert!((h3 + hm3).norm() < 1e-15 * h3.norm());
        assert!((d3 + dm3).norm() < 1e-15 * d3.norm());
        let (h2, _) = hankel1(2, 2.0_f64).unwrap();
        let (hm2, _) = hankel1(-2, 2.0_f64).unwrap();
        assert_eq!(h2, hm2);
    }

    #[test]
    fn errors() {
        assert!(matches!(hankel1(0, 0.0_f64), Err(Error::Domain(_))));
        assert!(matches!(hankel1(0, -1.0_f64), Err(Error::Domain(_))));
        assert!(matches!(hankel1(501, 1.0_f64), Err(Error::OrderTooLarge { .. })));
        match hankel1(400, 0.01_f64) {
            Err(Error::Overflow { order, argument }) => {
                assert_eq!(order, 400);
                assert_eq!(argument, 0.01);
            }
            other => panic!("expected overflow, got {other:?}"),
        }
        assert!(hankel_ratio(400, 0.01_f64).unwrap().gamma.re.is_finite());
    }

    #[test]
    fn f32_instantiation() {
        let r = hankel_ratio(3, 2.0_f32).unwrap();
        let d = hankel_ratio(3, 2.0_f64).unwrap();
        assert!((r.gamma.re as f64 - d.gamma.re).abs() < 1e-4 * d.gamma.norm());
    }
}
