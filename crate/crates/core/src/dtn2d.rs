//! Exact Dirichlet-to-Neumann map on the circle `|x| = R` for the isotropic
//! Navier system, in the vector Fourier basis
//! `P_n = e^{inθ} r̂`, `S_n = e^{inθ} θ̂`.
//!
//! A radiating field outside `B_R` is written as `v = ∇ψ_p + curl⃗ ψ_s`, with
//! `curl⃗ f = (∂₂f, −∂₁f)`. Its trace coefficients satisfy `w = A_n ψ / R`
//! and its traction coefficients `τ = B_n ψ / R²`, so `τ = W_n w` with
//! `W_n = B_n A_n⁻¹ / R`.
//!
//! The traction uses the split `λ̃ + μ̃ = λ + μ`. Any admissible `λ̃` gives
//! the same `T`, but the splitting changes which part of `W_n` dominates.

use num_complex::Complex;

use crate::incident::FieldValue;
use crate::linalg::{
    cmat_adjoint, cmat_herm_im, cmat_max_abs, cmat_mul, cmat_neg_herm_re, cmat_scale, cmat_vec,
    leading_minors, CMat,
};
use crate::material::IsotropicMedium;
use crate::special_functions::{hankel_ratios, HankelRatio};
use crate::{Cplx, Error, Real, Result};

/// Named choices of `λ̃`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Splitting {
    /// `λ̃ = λ`, `μ̃ = μ`.
    Lame,
    /// `λ̃ = λ + μ`, `μ̃ = 0`.
    NoShear,
    /// `λ̃ = (λ+2μ)(λ+μ)/(λ+3μ)`.
    Balanced,
}

impl Splitting {
    pub fn lambda_tilde<T: Real>(self, m: &IsotropicMedium<T>) -> T {
        let (l, mu) = (m.lambda, m.mu);
        let two = T::lit(2.0);
        match self {
            Splitting::Lame => l,
            Splitting::NoShear => l + mu,
            Splitting::Balanced => (l + two * mu) * (l + mu) / (l + T::lit(3.0) * mu),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DtnParams<T> {
    pub radius: T,
    pub omega: T,
    pub background: IsotropicMedium<T>,
    pub lambda_tilde: T,
    /// Modes `|n| ≤ n_trunc` are kept.
    pub n_trunc: usize,
}

impl<T: Real> DtnParams<T> {
    pub fn new(
        radius: T,
        omega: T,
        background: IsotropicMedium<T>,
        lambda_tilde: T,
        n_trunc: Option<usize>,
    ) -> Result<Self> {
        if !(radius > T::zero()) || !(omega > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "need R > 0 and ω > 0 (R = {radius}, ω = {omega})"
            )));
        }
        let (l, mu) = (background.lambda, background.mu);
        let lo = (l - mu) * (l + T::lit(2.0) * mu) / (l + T::lit(3.0) * mu);
        let hi = l + T::lit(2.0) * mu;
        if !(lambda_tilde > lo && lambda_tilde < hi) {
            return Err(Error::InvalidParameter(format!(
                "λ̃ = {lambda_tilde} outside the admissible interval ({lo}, {hi})"
            )));
        }
        let mut p = Self {
            radius,
            omega,
            background,
            lambda_tilde,
            n_trunc: 0,
        };
        p.n_trunc = n_trunc.unwrap_or_else(|| p.default_truncation());
        if p.n_trunc > crate::special_functions::MAX_ORDER as usize {
            return Err(Error::OrderTooLarge {
                order: p.n_trunc as i64,
                max: crate::special_functions::MAX_ORDER as i64,
            });
        }
        Ok(p)
    }

    pub fn with_splitting(
        radius: T,
        omega: T,
        background: IsotropicMedium<T>,
        splitting: Splitting,
        n_trunc: Option<usize>,
    ) -> Result<Self> {
        Self::new(radius, omega, background, splitting.lambda_tilde(&background), n_trunc)
    }

    /// `⌈k_s R⌉ + 16`.
    pub fn default_truncation(&self) -> usize {
        (self.ts().ceil().to_f64_lossy() as usize) + 16
    }

    pub fn mu_tilde(&self) -> T {
        self.background.lambda + self.background.mu - self.lambda_tilde
    }

    pub fn kp(&self) -> T {
        self.background.kp(self.omega)
    }

    pub fn ks(&self) -> T {
        self.background.ks(self.omega)
    }

    pub fn tp(&self) -> T {
        self.kp() * self.radius
    }

    pub fn ts(&self) -> T {
        self.ks() * self.radius
    }

    /// Leading coefficient `c` of `det W̃_n ≈ c n²`.
    pub fn det_slope(&self) -> T {
        let (l, mu) = (self.background.lambda, self.background.mu);
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let a = two * mu * (l + two * mu);
        let b = (l - self.lambda_tilde) * (l + three * mu) + two * mu * mu;
        let d = self.radius * (l + three * mu);
        (a * a - b * b) / (d * d)
    }
}

/// Mode-`n` matrices. `a`, `b`, `w` follow the conventions in the module
/// docs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeMatrices<T> {
    pub n: i32,
    pub a: CMat<T, 2>,
    pub a_inv: CMat<T, 2>,
    pub b: CMat<T, 2>,
    pub w: CMat<T, 2>,
    /// `Λ_n = det A_n = n² − t_p t_s γ_p γ_s`.
    pub lambda_n: Cplx<T>,
    pub ratio_p: HankelRatio<T>,
    pub ratio_s: HankelRatio<T>,
}

impl<T: Real> ModeMatrices<T> {
    /// `W̃_n = −(W_n + W_n*)/2`.
    pub fn w_tilde(&self) -> CMat<T, 2> {
        cmat_neg_herm_re(&self.w)
    }

    /// Hermitian imaginary part of `A_n* B_n`.
    pub fn im_a_star_b(&self) -> CMat<T, 2> {
        cmat_herm_im(&cmat_mul(&cmat_adjoint(&self.a), &self.b))
    }
}

fn build_mode<T: Real>(p: &DtnParams<T>, n: i32, rp: &HankelRatio<T>, rs: &HankelRatio<T>) -> Result<ModeMatrices<T>> {
    let i = Complex::new(T::zero(), T::one());
    let nn = T::from_i32(n).unwrap();
    let (tp, ts) = (p.tp(), p.ts());
    let xp = rp.gamma * tp;
    let xs = rs.gamma * ts;
    let a = [[xp, i * nn], [i * nn, -xs]];
    let lam = Complex::new(nn * nn, T::zero()) - xp * xs;
    let scale = (nn * nn).max((xp * xs).norm());
    if !(lam.norm() >= T::lit(1e-14) * scale) {
        return Err(Error::Consistency(format!(
            "|Λ_{n}| = {} is below roundoff for R = {}, ω = {}",
            lam.norm(),
            p.radius,
            p.omega
        )));
    }
    let inv = lam.inv();
    let a_inv = [[-xs * inv, -i * nn * inv], [-i * nn * inv, xp * inv]];
    let mpm = p.background.mu + p.mu_tilde();
    let lt = p.lambda_tilde;
    let mt = p.mu_tilde();
    let one = Complex::new(T::one(), T::zero());
    let b = [
        [
            rp.beta * (mpm * tp * tp) - one * (lt * tp * tp),
            i * (mpm * nn) * (xs - one),
        ],
        [
            i * (mpm * nn) * (xp - one),
            -rs.beta * (mpm * ts * ts) - one * (mt * ts * ts),
        ],
    ];
    let w = cmat_scale(&cmat_mul(&b, &a_inv), Complex::new(T::one() / p.radius, T::zero()));
    Ok(ModeMatrices {
        n,
        a,
        a_inv,
        b,
        w,
        lambda_n: lam,
        ratio_p: *rp,
        ratio_s: *rs,
    })
}

/// Mode matrices for a single `n`.
pub fn mode_matrices<T: Real>(p: &DtnParams<T>, n: i32) -> Result<ModeMatrices<T>> {
    let a = n.unsigned_abs() as usize;
    let rp = hankel_ratios(a, p.tp())?.pop().expect("non-empty");
    let rs = hankel_ratios(a, p.ts())?.pop().expect("non-empty");
    build_mode(p, n, &rp, &rs)
}

/// Mode matrices for `|n| ≤ n_max`, computed once and read many times.
#[derive(Clone, Debug)]
pub struct DtnOperator<T> {
    pub params: DtnParams<T>,
    n_max: usize,
    modes: Vec<ModeMatrices<T>>,
}

impl<T: Real> DtnOperator<T> {
    pub fn new(params: DtnParams<T>) -> Result<Self> {
        Self::with_modes(params, params.n_trunc)
    }

    /// Cache up to `n_max`, which may exceed the truncation.
    pub fn with_modes(params: DtnParams<T>, n_max: usize) -> Result<Self> {
        let rp = hankel_ratios(n_max, params.tp())?;
        let rs = hankel_ratios(n_max, params.ts())?;
        let mut modes = Vec::with_capacity(2 * n_max + 1);
        for n in -(n_max as i32)..=(n_max as i32) {
            let k = n.unsigned_abs() as usize;
            modes.push(build_mode(&params, n, &rp[k], &rs[k])?);
        }
        Ok(Self { params, n_max, modes })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn mode(&self, n: i32) -> &ModeMatrices<T> {
        &self.modes[(n + self.n_max as i32) as usize]
    }

    pub fn modes(&self) -> &[ModeMatrices<T>] {
        &self.modes
    }

    /// Traction coefficients of the radiating field with the given trace.
    /// Modes above the truncation are dropped.
    pub fn apply(&self, trace: &BoundaryTrace<T>) -> BoundaryTrace<T> {
        let nt = self.params.n_trunc.min(self.n_max).min(trace.n_max);
        let mut out = BoundaryTrace::zeros(trace.n_max);
        for n in -(nt as i32)..=(nt as i32) {
            let w = [trace.p(n), trace.s(n)];
            let t = cmat_vec(&self.mode(n).w, &w);
            out.set(n, t[0], t[1]);
        }
        out
    }

    /// Potential coefficients `ψ_n = R A_n⁻¹ w_n`.
    pub fn radiating_coeffs(&self, trace: &BoundaryTrace<T>) -> RadiatingCoeffs<T> {
        let nt = self.params.n_trunc.min(self.n_max).min(trace.n_max);
        let mut psi_p = vec![Complex::new(T::zero(), T::zero()); 2 * nt + 1];
        let mut psi_s = psi_p.clone();
        let r = Complex::new(self.params.radius, T::zero());
        for n in -(nt as i32)..=(nt as i32) {
            let w = [trace.p(n), trace.s(n)];
            let psi = cmat_vec(&self.mode(n).a_inv, &w);
            let k = (n + nt as i32) as usize;
            psi_p[k] = psi[0] * r;
            psi_s[k] = psi[1] * r;
        }
        RadiatingCoeffs {
            radius: self.params.radius,
            kp: self.params.kp(),
            ks: self.params.ks(),
            n_max: nt,
            psi_p,
            psi_s,
        }
    }
}

/// Coefficients `w_p^n = (u, P_n)`, `w_s^n = (u, S_n)` of a vector field on
/// the circle, for `|n| ≤ n_max`, with `(u, v) = (2π)⁻¹ ∫ u·v̄ dθ`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryTrace<T> {
    pub n_max: usize,
    pub wp: Vec<Cplx<T>>,
    pub ws: Vec<Cplx<T>>,
}

impl<T: Real> BoundaryTrace<T> {
    pub fn zeros(n_max: usize) -> Self {
        let z = vec![Complex::new(T::zero(), T::zero()); 2 * n_max + 1];
        Self {
            n_max,
            wp: z.clone(),
            ws: z,
        }
    }

    fn idx(&self, n: i32) -> Option<usize> {
        if n.unsigned_abs() as usize > self.n_max {
            None
        } else {
            Some((n + self.n_max as i32) as usize)
        }
    }

    pub fn p(&self, n: i32) -> Cplx<T> {
        self.idx(n).map_or(Complex::new(T::zero(), T::zero()), |k| self.wp[k])
    }

    pub fn s(&self, n: i32) -> Cplx<T> {
        self.idx(n).map_or(Complex::new(T::zero(), T::zero()), |k| self.ws[k])
    }

    pub fn set(&mut self, n: i32, p: Cplx<T>, s: Cplx<T>) {
        let k = self.idx(n).expect("mode in range");
        self.wp[k] = p;
        self.ws[k] = s;
    }

    /// Trapezoidal projection of samples at `θ_i = 2πi/N`. Requires
    /// `n_max < N/2`.
    pub fn from_samples(samples: &[[Cplx<T>; 2]], n_max: usize) -> Result<Self> {
        let nb = samples.len();
        if 2 * n_max >= nb {
            return Err(Error::InvalidParameter(format!(
                "truncation {n_max} violates the sampling limit for {nb} boundary points"
            )));
        }
        let mut out = Self::zeros(n_max);
        let inv = T::one() / T::from_usize(nb).unwrap();
        for (i, u) in samples.iter().enumerate() {
            let th = T::TAU() * T::from_usize(i).unwrap() * inv;
            let (s, c) = th.sin_cos();
            let ur = u[0] * c + u[1] * s;
            let ut = -u[0] * s + u[1] * c;
            let step = Complex::new(th.cos(), -th.sin());
            let mut e = Complex::new(T::one(), T::zero());
            let mut em = e;
            for n in 0..=n_max as i32 {
                let kp = (n + n_max as i32) as usize;
                out.wp[kp] += ur * e * inv;
                out.ws[kp] += ut * e * inv;
                if n > 0 {
                    let km = (-n + n_max as i32) as usize;
                    out.wp[km] += ur * em * inv;
                    out.ws[km] += ut * em * inv;
                }
                e *= step;
                em *= step.conj();
            }
        }
        Ok(out)
    }

    /// Field value at angle `theta`.
    pub fn synthesize(&self, theta: T) -> [Cplx<T>; 2] {
        let (s, c) = theta.sin_cos();
        let mut ur = Complex::new(T::zero(), T::zero());
        let mut ut = ur;
        for n in -(self.n_max as i32)..=(self.n_max as i32) {
            let e = Complex::new(T::zero(), T::from_i32(n).unwrap() * theta).exp();
            ur += self.p(n) * e;
            ut += self.s(n) * e;
        }
        [ur * c - ut * s, ur * s + ut * c]
    }
}

/// Potential coefficients of a radiating field outside `B_R`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadiatingCoeffs<T> {
    pub radius: T,
    pub kp: T,
    pub ks: T,
    pub n_max: usize,
    pub psi_p: Vec<Cplx<T>>,
    pub psi_s: Vec<Cplx<T>>,
}

impl<T: Real> RadiatingCoeffs<T> {
    pub fn psi_p(&self, n: i32) -> Cplx<T> {
        self.psi_p[(n + self.n_max as i32) as usize]
    }

    pub fn psi_s(&self, n: i32) -> Cplx<T> {
        self.psi_s[(n + self.n_max as i32) as usize]
    }

    /// `v = ∇ψ_p + curl⃗ ψ_s` and its gradient at `|x| ≥ R`.
    pub fn eval_exterior(&self, x: [T; 2]) -> Result<FieldValue<T>> {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        if r < self.radius * (T::one() - T::lit(1e-12)) {
            return Err(Error::Domain(format!(
                "exterior evaluation at |x| = {r} inside R = {}",
                self.radius
            )));
        }
        let hp = potential_hessian(&self.psi_p, self.n_max, self.kp, self.radius, x)?;
        let hs = potential_hessian(&self.psi_s, self.n_max, self.ks, self.radius, x)?;
        let (gp, hp) = hp;
        let (gs, hs) = hs;
        let u = [gp[0] + gs[1], gp[1] - gs[0]];
        let grad = [
            [hp[0][0] + hs[1][0], hp[0][1] + hs[1][1]],
            [hp[1][0] - hs[0][0], hp[1][1] - hs[0][1]],
        ];
        Ok(FieldValue { u, grad })
    }
}

type Grad<T> = [Cplx<T>; 2];
type Hess<T> = [[Cplx<T>; 2]; 2];

/// Cartesian gradient and Hessian of `Σ H_n(kr)/H_n(kR) c_n e^{inθ}`.
fn potential_hessian<T: Real>(
    coeffs: &[Cplx<T>],
    n_max: usize,
    k: T,
    radius: T,
    x: [T; 2],
) -> Result<(Grad<T>, Hess<T>)> {
    let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
    let theta = x[1].atan2(x[0]);
    let at_r = hankel_ratios(n_max, k * r)?;
    let at_big_r = hankel_ratios(n_max, k * radius)?;
    let zero = Complex::new(T::zero(), T::zero());
    let (mut fr, mut ft, mut frr, mut frt, mut ftt) = (zero, zero, zero, zero, zero);
    let s = k * r;
    for n in -(n_max as i32)..=(n_max as i32) {
        let c = coeffs[(n + n_max as i32) as usize];
        if c == zero {
            continue;
        }
        let a = n.unsigned_abs() as usize;
        let rat = at_r[a].ratio_to(&at_big_r[a]);
        let g = at_r[a].gamma;
        let nn = T::from_i32(n).unwrap();
        let f = rat * c;
        let f1 = f * g * k;
        let f2 = f * (-(g / s) - Complex::new(T::one() - nn * nn / (s * s), T::zero())) * (k * k);
        let e = Complex::new(T::zero(), nn * theta).exp();
        let i_n = Complex::new(T::zero(), nn);
        fr += f1 * e;
        ft += f * e * i_n;
        frr += f2 * e;
        frt += f1 * e * i_n;
        ftt += f * e * (-nn * nn);
    }
    let h_rr = frr;
    let h_rt = frt / r - ft / (r * r);
    let h_tt = fr / r + ftt / (r * r);
    let (sn, cs) = theta.sin_cos();
    let rhat = [cs, sn];
    let that = [-sn, cs];
    let grad = [fr * rhat[0] + ft / r * that[0], fr * rhat[1] + ft / r * that[1]];
    let hess = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            h_rr * (rhat[i] * rhat[j]) + h_rt * (rhat[i] * that[j] + that[i] * rhat[j]) + h_tt * (that[i] * that[j])
        })
    });
    Ok((grad, hess))
}

/// Smallest `M` with `W̃_n` positive definite for all `M ≤ |n| ≤ n_max`.
pub fn positivity_scan<T: Real>(p: &DtnParams<T>, n_max: usize) -> Result<usize> {
    let op = DtnOperator::with_modes(*p, n_max)?;
    let mut m_emp = 0usize;
    for n in 0..=n_max as i32 {
        for sgn in [1, -1] {
            let minors = leading_minors(&op.mode(sgn * n).w_tilde());
            if minors.iter().any(|&v| !(v > T::zero())) {
                m_emp = n as usize + 1;
            }
        }
    }
    if m_emp > n_max {
        return Err(Error::NotFound(format!(
            "W̃_n is not positive definite up to |n| = {n_max}"
        )));
    }
    Ok(m_emp)
}

/// One diagnostic row per `n`.
#[derive(Clone, Copy, Debug)]
pub struct CheckRow {
    pub n: i32,
    pub lambda_n: Cplx<f64>,
    pub minor1: f64,
    pub det: f64,
    /// Relative defect of the diagonal of `Im(A* B)`.
    pub rellich_residual: f64,
}

/// Closed form of `Im(A_n* B_n)`: `ρ₀ω²R² diag(Im(t_pγ_p), Im(t_sγ_s))`.
/// With `Im(tγ) = 2/(π|H|²)` this is `(2ρ₀ω²R²/π) diag(|H_n(t_p)|⁻², |H_n(t_s)|⁻²)`.
pub fn rellich_diagonal<T: Real>(p: &DtnParams<T>, m: &ModeMatrices<T>) -> [T; 2] {
    let c = p.background.rho * p.omega * p.omega * p.radius * p.radius * T::lit(2.0) / T::PI();
    [c * m.ratio_p.inv_abs_h_sq(), c * m.ratio_s.inv_abs_h_sq()]
}

/// Defect of `Im(A* B)` against [`rellich_diagonal`]: relative on the
/// diagonal, and relative to `max|A* B|` off the diagonal where the exact
/// value is zero.
pub fn rellich_residual<T: Real>(p: &DtnParams<T>, m: &ModeMatrices<T>) -> T {
    let d = rellich_diagonal(p, m);
    let ab = cmat_mul(&cmat_adjoint(&m.a), &m.b);
    herm_im_defect(&ab, &d)
}

/// Shared by the 2D and 3D checks. Diagonal entries that fall below the
/// normal float range are compared on the absolute scale of the product.
pub(crate) fn herm_im_defect<T: Real, const N: usize>(ab: &CMat<T, N>, diag: &[T; N]) -> T {
    let im = cmat_herm_im(ab);
    let big = cmat_max_abs(ab);
    let mut worst = T::zero();
    for i in 0..N {
        for j in 0..N {
            let e = if i == j {
                let err = (im[i][i] - Complex::new(diag[i], T::zero())).norm();
                if diag[i] > T::min_positive_value() * T::lit(1e20) {
                    err / diag[i]
                } else {
                    err / big
                }
            } else {
                im[i][j].norm() / big
            };
            worst = worst.max(e);
        }
    }
    worst
}

pub fn check_rows(p: &DtnParams<f64>, n_max: usize) -> Result<Vec<CheckRow>> {
    let op = DtnOperator::with_modes(*p, n_max)?;
    Ok((0..=n_max as i32)
        .map(|n| {
            let m = op.mode(n);
            let minors = leading_minors(&m.w_tilde());
            CheckRow {
                n,
                lambda_n: m.lambda_n,
                minor1: minors[0],
                det: minors[1],
                rellich_residual: rellich_residual(p, m),
            }
        })
        .collect())
}

/// Outcome of the property suite for one parameter set.
#[derive(Clone, Debug)]
pub struct PropertyReport {
    pub rows: Vec<CheckRow>,
    /// `None` when `W̃_n` is not positive definite anywhere up to `n_max`.
    pub m_emp: Option<usize>,
    pub violations: Vec<String>,
}

/// `|Λ_n|` bounded away from zero relative to its natural scale, the
/// closed diagonal of `Im(A_n* B_n)` to `1e-9`, and eventual positive
/// definiteness of `W̃_n`, for `0 ≤ n ≤ n_max`.
pub fn property_suite(p: &DtnParams<f64>, n_max: usize) -> Result<PropertyReport> {
    let op = DtnOperator::with_modes(*p, n_max)?;
    let mut violations = Vec::new();
    for n in 0..=n_max as i32 {
        let m = op.mode(n);
        let scale = (n as f64).powi(2).max((m.ratio_p.gamma * m.ratio_s.gamma).norm() * p.tp() * p.ts());
        if !(m.lambda_n.norm() > 1e-10 * scale) {
            violations.push(format!("n={n}: |Λ_n| = {:e} vs scale {scale:e}", m.lambda_n.norm()));
        }
        let res = rellich_residual(p, m);
        if !(res < 1e-9) {
            violations.push(format!("n={n}: Im(A*B) defect {res:e}"));
        }
    }
    let m_emp = match positivity_scan(p, n_max) {
        Ok(m) => Some(m),
        Err(_) => {
            violations.push(format!("W̃_n not positive definite up to {n_max}"));
            None
        }
    };
    Ok(PropertyReport {
        rows: check_rows(p, n_max)?,
        m_emp,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> DtnParams<f64> {
        let bg = IsotropicMedium::new(1.0, 2.0, 1.0).unwrap();
        DtnParams::with_splitting(2.0, 3.0, bg, Splitting::Lame, None).unwrap()
    }

    #[test]
    fn admissible_interval_enforced() {
        let bg = IsotropicMedium::new(1.0, 2.0, 1.0).unwrap();
        assert!(DtnParams::new(2.0, 3.0, bg, 5.0, None).is_err());
        assert!(DtnParams::new(2.0, 3.0, bg, -0.9, None).is_err());
        for s in [Splitting::Lame, Splitting::NoShear, Splitting::Balanced] {
            assert!(DtnParams::with_splitting(2.0, 3.0, bg, s, None).is_ok());
        }
    }

    #[test]
    fn no_shear_split_has_zero_mu_tilde() {
        let bg = IsotropicMedium::new(1.0, 2.0, 1.0).unwrap();
        let p = DtnParams::with_splitting(2.0, 3.0, bg, Splitting::NoShear, None).unwrap();
        assert_eq!(p.mu_tilde(), 0.0);
    }

    #[test]
    fn inverse_is_inverse() {
        let p = params();
        for n in [-7, 0, 3, 40] {
            let m = mode_matrices(&p, n).unwrap();
            let id = cmat_mul(&m.a, &m.a_inv);
            assert!((id[0][0] - 1.0).norm() < 1e-12 && id[0][1].norm() < 1e-12);
            assert!((id[1][1] - 1.0).norm() < 1e-12 && id[1][0].norm() < 1e-12);
        }
    }

    #[test]
    fn default_truncation() {
        let p = params();
        assert_eq!(p.n_trunc, (p.ts().ceil() as usize) + 16);
    }
}
