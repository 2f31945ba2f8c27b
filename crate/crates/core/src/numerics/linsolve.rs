//! Cholesky factorization, triangular solves, and a one-sided Jacobi SVD used
//! for the Moore–Penrose pseudo-inverse.

use super::eig::jacobi_rotation;
use super::matrix::{vecops, Mat};
use super::scalar::Scalar;
use crate::error::{Error, Result};

/// Relative singular-value cutoff for the pseudo-inverse.
pub const PINV_RCOND: f64 = 1e-12;

/// Lower-triangular `L` with `A = L Lᴴ`. Fails on a non-positive pivot.
pub fn cholesky<T: Scalar>(a: &Mat<T>) -> Result<Mat<T>> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "cholesky of {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let scale = a.diag().iter().map(|x| x.re().abs()).fold(0.0, f64::max);
    let mut l = Mat::<T>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re();
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 1e-300 && d > 1e-15 * scale) {
            return Err(Error::Conditioning(format!(
                "Cholesky pivot {d:e} at column {j} (diagonal scale {scale:e})"
            )));
        }
        let djj = d.sqrt();
        l[(j, j)] = T::from_real(djj);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s.scale(1.0 / djj);
        }
    }
    Ok(l)
}

/// Solves `L x = b` for lower-triangular `L`.
pub fn solve_lower<T: Scalar>(l: &Mat<T>, b: &[T]) -> Vec<T> {
    let n = l.rows();
    let mut x = vec![T::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Solves `Lᴴ x = b` for lower-triangular `L`.
pub fn solve_upper_adjoint<T: Scalar>(l: &Mat<T>, b: &[T]) -> Vec<T> {
    let n = l.rows();
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[(k, i)].conj() * x[k];
        }
        x[i] = s / l[(i, i)].conj();
    }
    x
}

/// Solves `A x = b` given the Cholesky factor of `A`.
pub fn cholesky_solve<T: Scalar>(l: &Mat<T>, b: &[T]) -> Vec<T> {
    solve_upper_adjoint(l, &solve_lower(l, b))
}

/// Inverse of a Hermitian positive-definite matrix.
pub fn hpd_inverse<T: Scalar>(a: &Mat<T>) -> Result<Mat<T>> {
    let l = cholesky(a)?;
    let n = a.rows();
    let mut inv = Mat::zeros(n, n);
    let mut e = vec![T::zero(); n];
    for j in 0..n {
        e.iter_mut().for_each(|x| *x = T::zero());
        e[j] = T::one();
        inv.set_column(j, &cholesky_solve(&l, &e));
    }
    Ok(inv.hermitian_part())
}

/// Thin singular value decomposition `A = U diag(s) Vᴴ`.
#[derive(Clone, Debug)]
pub struct Svd<T> {
    pub u: Mat<T>,
    pub s: Vec<f64>,
    pub v: Mat<T>,
}

/// One-sided (Hestenes) Jacobi SVD. Works on the taller orientation, so
/// `u` is `rows × min(rows, cols)`.
pub fn svd<T: Scalar>(a: &Mat<T>) -> Svd<T> {
    if a.rows() < a.cols() {
        let t = svd(&a.adjoint());
        return Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        };
    }
    let (m, n) = a.shape();
    let mut w = a.clone();
    let mut v = Mat::<T>::identity(n);
    for _ in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = T::zero();
                for i in 0..m {
                    alpha += w[(i, p)].norm_sqr();
                    beta += w[(i, q)].norm_sqr();
                    gamma += w[(i, p)].conj() * w[(i, q)];
                }
                if gamma.modulus() <= 1e-15 * (alpha * beta).sqrt() || gamma == T::zero() {
                    continue;
                }
                rotated = true;
                let (upp, upq, uqp, uqq) = jacobi_rotation(alpha, beta, gamma);
                for i in 0..m {
                    let (xp, xq) = (w[(i, p)], w[(i, q)]);
                    w[(i, p)] = xp * upp + xq * uqp;
                    w[(i, q)] = xp * upq + xq * uqq;
                }
                for i in 0..n {
                    let (xp, xq) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = xp * upp + xq * uqp;
                    v[(i, q)] = xp * upq + xq * uqq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s = Vec::with_capacity(n);
    let mut u = Mat::<T>::zeros(m, n);
    for j in 0..n {
        let col = w.column(j);
        let sj = vecops::norm(&col);
        s.push(sj);
        if sj > 0.0 {
            u.set_column(j, &vecops::scale(&col, 1.0 / sj));
        }
    }
    Svd { u, s, v }
}

/// Moore–Penrose pseudo-inverse with singular values below
/// `PINV_RCOND × s_max` treated as zero.
pub fn pinv<T: Scalar>(a: &Mat<T>) -> Mat<T> {
    let Svd { u, s, v } = svd(a);
    let smax = s.iter().copied().fold(0.0, f64::max);
    let cutoff = PINV_RCOND * smax;
    let mut out = Mat::<T>::zeros(a.cols(), a.rows());
    for (j, &sj) in s.iter().enumerate() {
        if sj <= cutoff || sj == 0.0 {
            continue;
        }
        let vj = v.column(j);
        let uj = u.column(j);
        out.add_assign_scaled(&Mat::outer(&vj, &uj), T::from_real(1.0 / sj));
    }
    out
}

/// Pseudo-inverse that refuses numerically rank-deficient input.
pub fn pinv_full_rank<T: Scalar>(a: &Mat<T>, what: &str) -> Result<Mat<T>> {
    let s = svd(a).s;
    let smax = s.iter().copied().fold(0.0, f64::max);
    let smin = s.iter().copied().fold(f64::INFINITY, f64::min);
    if !(smin > PINV_RCOND * smax) {
        return Err(Error::Conditioning(format!(
            "{what} is rank deficient (singular values {smin:e} .. {smax:e})"
        )));
    }
    Ok(pinv(a))
}
