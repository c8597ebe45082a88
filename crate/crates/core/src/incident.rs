//! Incident fields in the isotropic background and the boundary traction
//! operator.

use num_complex::Complex;

use crate::material::IsotropicMedium;
use crate::special_functions::bessel_jy_scaled_seq;
use crate::{Cplx, Error, Real, Result};

/// Displacement and gradient at a point. `grad[i][j] = ∂_j u_i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldValue<T> {
    pub u: [Cplx<T>; 2],
    pub grad: [[Cplx<T>; 2]; 2],
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum IncidentField<T> {
    /// `c_p d e^{ik_p x·d} + c_s d⊥ e^{ik_s x·d}` with `d⊥ = (−d₂, d₁)`.
    PlaneWave {
        direction: [T; 2],
        cp: Cplx<T>,
        cs: Cplx<T>,
    },
    /// `Π(x, y) a`, the background Green's tensor applied to `a`.
    PointSource { source: [T; 2], amplitude: [Cplx<T>; 2] },
}

impl<T: Real> IncidentField<T> {
    /// Plane wave along the unit vector at angle `theta`.
    pub fn plane_wave(theta: T, cp: Cplx<T>, cs: Cplx<T>) -> Self {
        Self::PlaneWave {
            direction: [theta.cos(), theta.sin()],
            cp,
            cs,
        }
    }

    /// Rejects a point source that does not sit outside `B_R`, and
    /// non-unit plane-wave directions.
    pub fn validate(&self, radius: T) -> Result<()> {
        match self {
            Self::PlaneWave { direction, .. } => {
                let n = (direction[0] * direction[0] + direction[1] * direction[1]).sqrt();
                if (n - T::one()).abs() > T::lit(1e-12) {
                    return Err(Error::InvalidDirection(n.to_f64_lossy()));
                }
            }
            Self::PointSource { source, .. } => {
                let r = (source[0] * source[0] + source[1] * source[1]).sqrt();
                if !(r > radius) {
                    return Err(Error::InvalidParameter(format!(
                        "point source at |y| = {r} must lie outside B_R, R = {radius}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, medium: &IsotropicMedium<T>, omega: T, x: [T; 2]) -> Result<FieldValue<T>> {
        match *self {
            Self::PlaneWave { direction: d, cp, cs } => {
                let kp = medium.kp(omega);
                let ks = medium.ks(omega);
                let xd = x[0] * d[0] + x[1] * d[1];
                let i = Complex::new(T::zero(), T::one());
                let ep = (i * kp * xd).exp() * cp;
                let es = (i * ks * xd).exp() * cs;
                let dp = [-d[1], d[0]];
                let u = [ep * d[0] + es * dp[0], ep * d[1] + es * dp[1]];
                let grad = std::array::from_fn(|a| {
                    std::array::from_fn(|b| i * (ep * (d[a] * kp * d[b]) + es * (dp[a] * ks * d[b])))
                });
                Ok(FieldValue { u, grad })
            }
            Self::PointSource { source, amplitude } => {
                let (pi, dpi) = greens_tensor(medium, omega, x, source)?;
                let u = std::array::from_fn(|a| pi[a][0] * amplitude[0] + pi[a][1] * amplitude[1]);
                let grad = std::array::from_fn(|a| {
                    std::array::from_fn(|b| dpi[a][0][b] * amplitude[0] + dpi[a][1][b] * amplitude[1])
                });
                Ok(FieldValue { u, grad })
            }
        }
    }
}

/// Radial derivative coefficients of `Φ_k = (i/4) H_0(k|z|)`:
/// `g_m = (r⁻¹ d/dr)^m Φ_k = (i/4)(−k/r)^m H_m(kr)` for `m = 0..=3`.
fn radial_chain<T: Real>(k: T, r: T) -> Result<[Cplx<T>; 4]> {
    let s = k * r;
    let seq = bessel_jy_scaled_seq(3, s)?;
    let quarter_i = Complex::new(T::zero(), T::lit(0.25));
    let mut out = [Complex::new(T::zero(), T::zero()); 4];
    let mut f = T::one();
    for m in 0..4 {
        let h = Complex::new(seq[m].j_value(), seq[m].y_value());
        out[m] = quarter_i * h * f;
        f = f * (-k / r);
    }
    Ok(out)
}

/// Green's tensor `Π(x, y)` and its gradient `∂_{x_k} Π_{ij}` stored as
/// `[i][j][k]`.
pub fn greens_tensor<T: Real>(
    medium: &IsotropicMedium<T>,
    omega: T,
    x: [T; 2],
    y: [T; 2],
) -> Result<([[Cplx<T>; 2]; 2], [[[Cplx<T>; 2]; 2]; 2])> {
    let z = [x[0] - y[0], x[1] - y[1]];
    let r = (z[0] * z[0] + z[1] * z[1]).sqrt();
    if !(r > T::zero()) {
        return Err(Error::Domain("Green's tensor evaluated at the source point".into()));
    }
    let gs = radial_chain(medium.ks(omega), r)?;
    let gp = radial_chain(medium.kp(omega), r)?;
    let inv_mu = T::one() / medium.mu;
    let inv_rw = T::one() / (medium.rho * omega * omega);
    let delta = |a: usize, b: usize| if a == b { T::one() } else { T::zero() };
    let g1 = gs[1] - gp[1];
    let g2 = gs[2] - gp[2];
    let g3 = gs[3] - gp[3];
    let pi = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            gs[0] * (inv_mu * delta(i, j)) + (g2 * (z[i] * z[j]) + g1 * delta(i, j)) * inv_rw
        })
    });
    let dpi = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            std::array::from_fn(|k| {
                let third = g3 * (z[i] * z[j] * z[k])
                    + g2 * (delta(i, k) * z[j] + delta(j, k) * z[i] + delta(i, j) * z[k]);
                gs[1] * (z[k] * inv_mu * delta(i, j)) + third * inv_rw
            })
        })
    });
    Ok((pi, dpi))
}

/// `Tu = 2μ ∂_ν u + λ ν div u + μ ν⊥ (∂₂u₁ − ∂₁u₂)`.
pub fn traction<T: Real>(medium: &IsotropicMedium<T>, grad: &[[Cplx<T>; 2]; 2], normal: [T; 2]) -> [Cplx<T>; 2] {
    generalized_traction(medium, medium.lambda, grad, normal)
}

/// `(μ+μ̃) ∂_ν u + λ̃ ν div u + μ̃ ν⊥ (∂₂u₁ − ∂₁u₂)` with `μ̃ = λ + μ − λ̃`.
/// Agrees with [`traction`] when `λ̃ = λ`.
pub fn generalized_traction<T: Real>(
    medium: &IsotropicMedium<T>,
    lambda_tilde: T,
    grad: &[[Cplx<T>; 2]; 2],
    normal: [T; 2],
) -> [Cplx<T>; 2] {
    let mu_t = medium.lambda + medium.mu - lambda_tilde;
    let dn = [
        grad[0][0] * normal[0] + grad[0][1] * normal[1],
        grad[1][0] * normal[0] + grad[1][1] * normal[1],
    ];
    let div = grad[0][0] + grad[1][1];
    let curl = grad[0][1] - grad[1][0];
    let perp = [-normal[1], normal[0]];
    std::array::from_fn(|i| dn[i] * (medium.mu + mu_t) + div * (lambda_tilde * normal[i]) + curl * (mu_t * perp[i]))
}

/// `σν` for a general stiffness, `σ = C ∇u`.
pub fn conormal<T: Real>(
    c: &crate::material::StiffnessTensor2D<T>,
    grad: &[[Cplx<T>; 2]; 2],
    normal: [T; 2],
) -> [Cplx<T>; 2] {
    let s = c.stress(grad);
    [
        s[0][0] * normal[0] + s[0][1] * normal[1],
        s[1][0] * normal[0] + s[1][1] * normal[1],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn traction_of_identity_map() {
        let m = IsotropicMedium::new(1.3, 0.7, 1.0).unwrap();
        let one = Complex::new(1.0, 0.0);
        let zero = Complex::new(0.0, 0.0);
        let g = [[one, zero], [zero, one]];
        let nu = [0.6, 0.8];
        let t = traction(&m, &g, nu);
        for i in 0..2 {
            assert!((t[i] - one * (2.0 * 1.3 + 2.0 * 0.7) * nu[i]).norm() < 1e-15);
        }
    }

    #[test]
    fn point_source_rejects_interior_source() {
        let f = IncidentField::PointSource {
            source: [1.0, 0.5],
            amplitude: [Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)],
        };
        assert!(f.validate(2.0).is_err());
        let m = IsotropicMedium::new(1.0, 2.0, 1.0).unwrap();
        assert!(f.evaluate(&m, 1.0, [1.0, 0.5]).is_err());
    }
}
