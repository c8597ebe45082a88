//! Plane-strain stiffness tensors in Voigt notation, isotropic media and
//! the Christoffel eigenproblem.
//!
//! Voigt indices: `11 → 1`, `22 → 2`, `12 → 3`. The tensor acts on the
//! engineering strain `(ε11, ε22, 2ε12)`.

use num_complex::Complex;

use crate::linalg::sym_eigen;
use crate::{Cplx, Error, Real, Result};

/// Symmetric 3×3 Voigt stiffness `C_{αβ}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StiffnessTensor2D<T> {
    pub c11: T,
    pub c12: T,
    pub c13: T,
    pub c22: T,
    pub c23: T,
    pub c33: T,
}

/// Homogeneous isotropic background medium.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsotropicMedium<T> {
    pub lambda: T,
    pub mu: T,
    pub rho: T,
}

/// Anisotropic obstacle material. `Im ρ ≥ 0` models absorption.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Material<T> {
    pub stiffness: StiffnessTensor2D<T>,
    pub rho: Cplx<T>,
}

/// One eigenpair of `A_C(d)`: `A_C p = ρ v² p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlaneWaveMode<T> {
    pub rho_v2: T,
    pub velocity: T,
    pub polarization: [T; 2],
}

fn voigt_index(i: usize, j: usize) -> usize {
    match (i, j) {
        (0, 0) => 0,
        (1, 1) => 1,
        _ => 2,
    }
}

impl<T: Real> StiffnessTensor2D<T> {
    /// Validates strong ellipticity on symmetric matrices.
    pub fn new(c11: T, c12: T, c13: T, c22: T, c23: T, c33: T) -> Result<Self> {
        let c = Self::new_unchecked(c11, c12, c13, c22, c23, c33);
        let c0 = c.ellipticity_constant();
        if !(c0 > T::zero()) {
            return Err(Error::InvalidMaterial(format!(
                "stiffness is not positive definite on symmetric matrices (c0 = {c0})"
            )));
        }
        Ok(c)
    }

    pub fn new_unchecked(c11: T, c12: T, c13: T, c22: T, c23: T, c33: T) -> Self {
        Self {
            c11,
            c12,
            c13,
            c22,
            c23,
            c33,
        }
    }

    pub fn from_voigt(m: [[T; 3]; 3]) -> Result<Self> {
        let tol = T::lit(1e-12) * (0..3).map(|i| m[i][i].abs()).fold(T::zero(), T::max);
        if (m[0][1] - m[1][0]).abs() > tol
            || (m[0][2] - m[2][0]).abs() > tol
            || (m[1][2] - m[2][1]).abs() > tol
        {
            return Err(Error::InvalidMaterial("Voigt matrix is not symmetric".into()));
        }
        Self::new(m[0][0], m[0][1], m[0][2], m[1][1], m[1][2], m[2][2])
    }

    pub fn voigt(&self) -> [[T; 3]; 3] {
        [
            [self.c11, self.c12, self.c13],
            [self.c12, self.c22, self.c23],
            [self.c13, self.c23, self.c33],
        ]
    }

    /// `C_{ijkl}` with zero-based indices.
    pub fn component(&self, i: usize, j: usize, k: usize, l: usize) -> T {
        self.voigt()[voigt_index(i, j)][voigt_index(k, l)]
    }

    /// Smallest `c0` with `(C:A):A ≥ c0 |A|²` for symmetric `A`.
    /// The shear row and column are scaled by `√2` so the quadratic form is
    /// measured in the Frobenius norm rather than engineering strain.
    pub fn ellipticity_constant(&self) -> T {
        let s = [T::one(), T::one(), T::SQRT_2()];
        let v = self.voigt();
        let m: [[T; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| s[i] * v[i][j] * s[j]));
        sym_eigen(&m).0[0]
    }

    /// Stress `σ = C ∇u` for a complex displacement gradient
    /// `g[i][j] = ∂_j u_i`.
    pub fn stress(&self, g: &[[Cplx<T>; 2]; 2]) -> [[Cplx<T>; 2]; 2] {
        let e = [g[0][0], g[1][1], g[0][1] + g[1][0]];
        let v = self.voigt();
        let s: [Cplx<T>; 3] = std::array::from_fn(|a| e[0] * v[a][0] + e[1] * v[a][1] + e[2] * v[a][2]);
        [[s[0], s[2]], [s[2], s[1]]]
    }

    /// Tensor rotated by `angle` (counter-clockwise).
    pub fn rotated(&self, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        let q = [[c, -s], [s, c]];
        let mut out = [[T::zero(); 3]; 3];
        let pairs = [(0usize, 0usize), (1, 1), (0, 1)];
        for (a, &(i, j)) in pairs.iter().enumerate() {
            for (b, &(k, l)) in pairs.iter().enumerate() {
                let mut acc = T::zero();
                for p in 0..2 {
                    for qq in 0..2 {
                        for r in 0..2 {
                            for t in 0..2 {
                                acc += q[i][p] * q[j][qq] * q[k][r] * q[l][t] * self.component(p, qq, r, t);
                            }
                        }
                    }
                }
                out[a][b] = acc;
            }
        }
        Self::new_unchecked(out[0][0], out[0][1], out[0][2], out[1][1], out[1][2], out[2][2])
    }

    pub fn max_abs(&self) -> T {
        [self.c11, self.c12, self.c13, self.c22, self.c23, self.c33]
            .into_iter()
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// `[[λ+2μ, λ, 0], [λ, λ+2μ, 0], [0, 0, μ]]`.
pub fn isotropic_stiffness<T: Real>(lambda: T, mu: T) -> Result<StiffnessTensor2D<T>> {
    if !(mu > T::zero()) || !(lambda + mu > T::zero()) {
        return Err(Error::InvalidMaterial(format!(
            "Lamé parameters need μ > 0 and λ + μ > 0 (λ = {lambda}, μ = {mu})"
        )));
    }
    let two = T::lit(2.0);
    StiffnessTensor2D::new(lambda + two * mu, lambda, T::zero(), lambda + two * mu, T::zero(), mu)
}

impl<T: Real> IsotropicMedium<T> {
    pub fn new(lambda: T, mu: T, rho: T) -> Result<Self> {
        isotropic_stiffness(lambda, mu)?;
        if !(rho > T::zero()) {
            return Err(Error::InvalidMaterial(format!("density must be positive, got {rho}")));
        }
        Ok(Self { lambda, mu, rho })
    }

    /// Medium with given density and wave speeds.
    pub fn from_speeds(rho: T, cp: T, cs: T) -> Result<Self> {
        let mu = rho * cs * cs;
        let lambda = rho * cp * cp - T::lit(2.0) * mu;
        Self::new(lambda, mu, rho)
    }

    pub fn kp(&self, omega: T) -> T {
        omega * (self.rho / (self.lambda + T::lit(2.0) * self.mu)).sqrt()
    }

    pub fn ks(&self, omega: T) -> T {
        omega * (self.rho / self.mu).sqrt()
    }

    pub fn stiffness(&self) -> StiffnessTensor2D<T> {
        isotropic_stiffness(self.lambda, self.mu).expect("validated on construction")
    }

    pub fn as_material(&self) -> Material<T> {
        Material {
            stiffness: self.stiffness(),
            rho: Complex::new(self.rho, T::zero()),
        }
    }
}

impl<T: Real> Material<T> {
    pub fn new(stiffness: StiffnessTensor2D<T>, rho: Cplx<T>) -> Result<Self> {
        if !(rho.re > T::zero()) || rho.im < T::zero() {
            return Err(Error::InvalidMaterial(format!(
                "density needs Re ρ > 0 and Im ρ ≥ 0, got {rho}"
            )));
        }
        if !(stiffness.ellipticity_constant() > T::zero()) {
            return Err(Error::InvalidMaterial("stiffness is not elliptic".into()));
        }
        Ok(Self { stiffness, rho })
    }
}

fn check_direction<T: Real>(d: [T; 2]) -> Result<()> {
    let n = (d[0] * d[0] + d[1] * d[1]).sqrt();
    if !((n - T::one()).abs() <= T::lit(1e-12)) {
        return Err(Error::InvalidDirection(n.to_f64_lossy()));
    }
    Ok(())
}

/// `A_C(d)_{ij} = Σ C_{iklj} d_k d_l`.
pub fn christoffel<T: Real>(c: &StiffnessTensor2D<T>, d: [T; 2]) -> Result<[[T; 2]; 2]> {
    check_direction(d)?;
    let (d1, d2) = (d[0], d[1]);
    let two = T::lit(2.0);
    let a11 = c.c11 * d1 * d1 + two * c.c13 * d1 * d2 + c.c33 * d2 * d2;
    let a12 = c.c13 * d1 * d1 + (c.c12 + c.c33) * d1 * d2 + c.c23 * d2 * d2;
    let a22 = c.c33 * d1 * d1 + two * c.c23 * d1 * d2 + c.c22 * d2 * d2;
    Ok([[a11, a12], [a12, a22]])
}

/// Eigenpairs of the Christoffel matrix, sorted by descending `ρv²`.
/// Polarizations are unit vectors with a non-negative leading component.
pub fn plane_wave_modes<T: Real>(
    c: &StiffnessTensor2D<T>,
    rho: Cplx<T>,
    d: [T; 2],
) -> Result<[PlaneWaveMode<T>; 2]> {
    if rho.im != T::zero() || !(rho.re > T::zero()) {
        return Err(Error::InvalidMaterial(format!(
            "plane-wave modes need a real positive density, got {rho}"
        )));
    }
    let a = christoffel(c, d)?;
    let (vals, vecs) = sym_eigen(&a);
    let mk = |k: usize| {
        let mut p = [vecs[0][k], vecs[1][k]];
        let n = (p[0] * p[0] + p[1] * p[1]).sqrt();
        p = [p[0] / n, p[1] / n];
        if p[0] < T::zero() || (p[0] == T::zero() && p[1] < T::zero()) {
            p = [-p[0], -p[1]];
        }
        PlaneWaveMode {
            rho_v2: vals[k],
            velocity: (vals[k] / rho.re).sqrt(),
            polarization: p,
        }
    };
    Ok([mk(1), mk(0)])
}
