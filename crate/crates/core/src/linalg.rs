//! Fixed-size dense helpers for the 2×2 and 3×3 mode matrices.

use num_complex::Complex;

use crate::{Cplx, Real};

pub type CMat<T, const N: usize> = [[Cplx<T>; N]; N];

pub fn czero<T: Real>() -> Cplx<T> {
    Complex::new(T::zero(), T::zero())
}

pub fn cmat_zero<T: Real, const N: usize>() -> CMat<T, N> {
    [[czero(); N]; N]
}

pub fn cmat_mul<T: Real, const N: usize>(a: &CMat<T, N>, b: &CMat<T, N>) -> CMat<T, N> {
    let mut c = cmat_zero();
    for i in 0..N {
        for j in 0..N {
            let mut s = czero();
            for k in 0..N {
                s += a[i][k] * b[k][j];
            }
            c[i][j] = s;
        }
    }
    c
}

pub fn cmat_adjoint<T: Real, const N: usize>(a: &CMat<T, N>) -> CMat<T, N> {
    let mut c = cmat_zero();
    for i in 0..N {
        for j in 0..N {
            c[i][j] = a[j][i].conj();
        }
    }
    c
}

pub fn cmat_scale<T: Real, const N: usize>(a: &CMat<T, N>, s: Cplx<T>) -> CMat<T, N> {
    let mut c = *a;
    for row in c.iter_mut() {
        for v in row.iter_mut() {
            *v *= s;
        }
    }
    c
}

pub fn cmat_sub<T: Real, const N: usize>(a: &CMat<T, N>, b: &CMat<T, N>) -> CMat<T, N> {
    let mut c = *a;
    for i in 0..N {
        for j in 0..N {
            c[i][j] -= b[i][j];
        }
    }
    c
}

pub fn cmat_vec<T: Real, const N: usize>(a: &CMat<T, N>, x: &[Cplx<T>; N]) -> [Cplx<T>; N] {
    let mut y = [czero(); N];
    for i in 0..N {
        for k in 0..N {
            y[i] += a[i][k] * x[k];
        }
    }
    y
}

/// Max-abs entry.
pub fn cmat_max_abs<T: Real, const N: usize>(a: &CMat<T, N>) -> T {
    let mut m = T::zero();
    for row in a {
        for v in row {
            m = m.max(v.norm());
        }
    }
    m
}

/// Hermitian imaginary part `(M − M*)/(2i)`.
pub fn cmat_herm_im<T: Real, const N: usize>(a: &CMat<T, N>) -> CMat<T, N> {
    let d = cmat_sub(a, &cmat_adjoint(a));
    cmat_scale(&d, Complex::new(T::zero(), -T::lit(0.5)))
}

/// `−(M + M*)/2`.
pub fn cmat_neg_herm_re<T: Real, const N: usize>(a: &CMat<T, N>) -> CMat<T, N> {
    let mut c = cmat_zero();
    for i in 0..N {
        for j in 0..N {
            c[i][j] = -(a[i][j] + a[j][i].conj()) * T::lit(0.5);
        }
    }
    c
}

/// Eigenvalues and eigenvectors (columns) of a real symmetric matrix by
/// cyclic Jacobi rotations. Eigenvalues ascend.
pub fn sym_eigen<T: Real, const N: usize>(a: &[[T; N]; N]) -> ([T; N], [[T; N]; N]) {
    let mut m = *a;
    let mut v = [[T::zero(); N]; N];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = T::one();
    }
    for _sweep in 0..64 {
        let mut off = T::zero();
        let mut scale = T::zero();
        for i in 0..N {
            for j in 0..N {
                if i != j {
                    off += m[i][j] * m[i][j];
                }
                scale += m[i][j] * m[i][j];
            }
        }
        if off <= T::epsilon() * T::epsilon() * scale || off == T::zero() {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                if m[p][q] == T::zero() {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (T::lit(2.0) * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..N {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..N {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut idx: [usize; N] = std::array::from_fn(|i| i);
    idx.sort_by(|&a, &b| m[a][a].partial_cmp(&m[b][b]).unwrap_or(std::cmp::Ordering::Equal));
    let vals = std::array::from_fn(|i| m[idx[i]][idx[i]]);
    let vecs = std::array::from_fn(|r| std::array::from_fn(|c| v[r][idx[c]]));
    (vals, vecs)
}

/// Leading principal minors of a Hermitian matrix (real parts).
pub fn leading_minors<T: Real, const N: usize>(a: &CMat<T, N>) -> Vec<T> {
    let mut out = Vec::with_capacity(N);
    for k in 1..=N {
        out.push(det_leading(a, k).re);
    }
    out
}

fn det_leading<T: Real, const N: usize>(a: &CMat<T, N>, k: usize) -> Cplx<T> {
    match k {
        1 => a[0][0],
        2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
        3 => {
            a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
        }
        _ => unimplemented!("k <= 3"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_diagonalises() {
        let a = [[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 1.0]];
        let (vals, vecs) = sym_eigen(&a);
        for k in 0..3 {
            for i in 0..3 {
                let av: f64 = (0..3).map(|j| a[i][j] * vecs[j][k]).sum();
                assert!((av - vals[k] * vecs[i][k]).abs() < 1e-13);
            }
        }
        assert!(vals[0] <= vals[1] && vals[1] <= vals[2]);
    }
}
