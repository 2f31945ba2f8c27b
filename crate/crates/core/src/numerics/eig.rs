//! Cyclic Jacobi eigensolver for real symmetric and complex Hermitian
//! matrices, plus the dominant-eigenpair helpers built on it.
//!
//! Each rotation first removes the phase of the pivot entry with a diagonal
//! unitary, then applies the classical symmetric Schur rotation to the
//! resulting real 2×2 block. For real input every phase factor is ±1, so the
//! iteration never leaves the reals.

use num_complex::Complex64;

use super::linsolve::{cholesky, solve_lower, solve_upper_adjoint};
use super::matrix::{vecops, CMatrix, Mat, RMatrix};
use super::scalar::Scalar;
use crate::error::{Error, Result};

/// Relative tolerance for accepting a matrix as symmetric/Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Relative floor on the smallest eigenvalue of a positive-definite matrix.
pub const PD_TOL: f64 = 1e-12;

const MAX_SWEEPS: usize = 100;

/// Dominant eigenpair. `vector` has unit norm.
#[derive(Clone, Debug, PartialEq)]
pub struct EigPair<T> {
    pub value: f64,
    pub vector: Vec<T>,
}

/// Full eigendecomposition `A = V diag(values) Vᴴ` with eigenvalues in
/// descending order (ties keep Jacobi's diagonal order).
#[derive(Clone, Debug)]
pub struct Eigh<T> {
    pub values: Vec<f64>,
    pub vectors: Mat<T>,
}

pub fn check_hermitian<T: Scalar>(a: &Mat<T>) -> Result<()> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "expected a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let scale = a.max_abs();
    let deviation = a.hermitian_deviation();
    if !(deviation <= HERMITIAN_TOL * scale) {
        return Err(Error::NotHermitian { deviation, scale });
    }
    Ok(())
}

/// Pivot-phase-corrected symmetric Schur rotation for the 2×2 block
/// `[[app, apq], [conj(apq), aqq]]`. Returns `(upp, upq, uqp, uqq)` of the
/// unitary `U` such that `Uᴴ B U` is diagonal.
pub(crate) fn jacobi_rotation<T: Scalar>(app: f64, aqq: f64, apq: T) -> (T, T, T, T) {
    let b = apq.modulus();
    let w_bar = apq.conj().scale(1.0 / b);
    let tau = (aqq - app) / (2.0 * b);
    let t = if tau == 0.0 {
        1.0
    } else {
        tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    (
        T::from_real(c),
        T::from_real(s),
        w_bar.scale(-s),
        w_bar.scale(c),
    )
}

/// Full Hermitian eigendecomposition by cyclic Jacobi.
pub fn eigh<T: Scalar>(a: &Mat<T>) -> Result<Eigh<T>> {
    check_hermitian(a)?;
    let n = a.rows();
    let mut m = a.hermitian_part();
    let mut v = Mat::<T>::identity(n);
    let total = m.frobenius_sqr();
    if total == 0.0 || n == 1 {
        return Ok(sorted(m.diag().iter().map(|x| x.re()).collect(), v));
    }

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m[(p, q)].norm_sqr();
            }
        }
        if off <= 1e-30 * total {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let app = m[(p, p)].re();
                let aqq = m[(q, q)].re();
                if apq.modulus() <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs())
                    || apq == T::zero()
                {
                    m[(p, q)] = T::zero();
                    m[(q, p)] = T::zero();
                    continue;
                }
                let (upp, upq, uqp, uqq) = jacobi_rotation(app, aqq, apq);
                for i in 0..n {
                    let (xp, xq) = (m[(i, p)], m[(i, q)]);
                    m[(i, p)] = xp * upp + xq * uqp;
                    m[(i, q)] = xp * upq + xq * uqq;
                }
                for j in 0..n {
                    let (xp, xq) = (m[(p, j)], m[(q, j)]);
                    m[(p, j)] = upp.conj() * xp + uqp.conj() * xq;
                    m[(q, j)] = upq.conj() * xp + uqq.conj() * xq;
                }
                m[(p, q)] = T::zero();
                m[(q, p)] = T::zero();
                m[(p, p)] = T::from_real(m[(p, p)].re());
                m[(q, q)] = T::from_real(m[(q, q)].re());
                for i in 0..n {
                    let (xp, xq) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = xp * upp + xq * uqp;
                    v[(i, q)] = xp * upq + xq * uqq;
                }
            }
        }
    }
    Ok(sorted(m.diag().iter().map(|x| x.re()).collect(), v))
}

fn sorted<T: Scalar>(values: Vec<f64>, vectors: Mat<T>) -> Eigh<T> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    let vals = order.iter().map(|&i| values[i]).collect();
    let vecs = Mat::from_fn(vectors.rows(), n, |r, c| vectors[(r, order[c])]);
    Eigh {
        values: vals,
        vectors: vecs,
    }
}

fn nonzero_floor(v: &[impl Scalar]) -> f64 {
    1e-12 * v.iter().map(|x| x.modulus()).fold(0.0, f64::max)
}

/// Largest eigenpair of a real symmetric matrix. Sign convention: the first
/// non-negligible component of the eigenvector is positive.
pub fn eig_sym_max(a: &RMatrix) -> Result<EigPair<f64>> {
    let e = eigh(a)?;
    let mut vector = e.vectors.column(0);
    let floor = nonzero_floor(&vector);
    if let Some(&first) = vector.iter().find(|x| x.abs() > floor) {
        if first < 0.0 {
            vector.iter_mut().for_each(|x| *x = -*x);
        }
    }
    Ok(EigPair {
        value: e.values[0],
        vector,
    })
}

/// Rotates `v` so that its largest-magnitude component (first one on ties)
/// is real and positive.
pub fn fix_phase(v: &mut [Complex64]) {
    let mut best = 0usize;
    let mut best_mag = -1.0;
    for (i, x) in v.iter().enumerate() {
        let mag = x.norm();
        if mag > best_mag * (1.0 + 1e-12) {
            best = i;
            best_mag = mag;
        }
    }
    if best_mag > 0.0 {
        let rot = v[best].conj() / best_mag;
        v.iter_mut().for_each(|x| *x *= rot);
        v[best] = Complex64::new(v[best].re, 0.0);
    }
}

/// Largest eigenpair of a Hermitian matrix with the phase convention of
/// [`fix_phase`].
pub fn eig_herm_max(a: &CMatrix) -> Result<EigPair<Complex64>> {
    let e = eigh(a)?;
    let mut vector = e.vectors.column(0);
    fix_phase(&mut vector);
    Ok(EigPair {
        value: e.values[0],
        vector,
    })
}

/// Dominant generalized eigenpair of `(A, B)`: maximizes `vᴴAv / vᴴBv`.
///
/// `B = LLᴴ` is whitened by its Cholesky factor and the Hermitian matrix
/// `L⁻¹ A L⁻ᴴ` is diagonalized; the result is mapped back with `L⁻ᴴ` and
/// normalized to unit norm.
pub fn gen_eig_max(a: &CMatrix, b: &CMatrix) -> Result<EigPair<Complex64>> {
    check_hermitian(a)?;
    check_hermitian(b)?;
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!(
            "generalized eigenproblem with {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let eb = eigh(b)?;
    let (lmax, lmin) = (eb.values[0], *eb.values.last().unwrap());
    if !(lmax > 0.0 && lmin > PD_TOL * lmax) {
        return Err(Error::Conditioning(format!(
            "B is not positive definite (eigenvalues in [{lmin:e}, {lmax:e}])"
        )));
    }
    let l = cholesky(b)?;
    let c = whiten(a, &l);
    let top = eig_herm_max(&c)?;
    let mut v = solve_upper_adjoint(&l, &top.vector);
    let v_norm = vecops::norm(&v);
    v.iter_mut().for_each(|x| *x /= v_norm);
    fix_phase(&mut v);
    Ok(EigPair {
        value: top.value,
        vector: v,
    })
}

/// `L⁻¹ A L⁻ᴴ`, symmetrized.
pub fn whiten(a: &CMatrix, l: &CMatrix) -> CMatrix {
    let n = a.rows();
    let mut x = CMatrix::zeros(n, n);
    for j in 0..n {
        x.set_column(j, &solve_lower(l, &a.column(j)));
    }
    // L⁻¹ (L⁻¹ A)ᴴ = L⁻¹ A L⁻ᴴ since A = Aᴴ
    let xh = x.adjoint();
    let mut c = CMatrix::zeros(n, n);
    for j in 0..n {
        c.set_column(j, &solve_lower(l, &xh.column(j)));
    }
    c.hermitian_part()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::random::sample_cgauss;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hermitian(n: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = CMatrix::from_vec(n, n, sample_cgauss(&mut rng, n * n, 1.0).unwrap()).unwrap();
        g.add(&g.adjoint()).scale(0.5)
    }

    /// Power iteration on `A + shift·I` (shift makes the spectrum positive).
    fn power_iteration(a: &CMatrix, steps: usize) -> f64 {
        let n = a.rows();
        let shift = a.frobenius();
        let b = a.add(&CMatrix::identity(n).scale(shift));
        let mut v: Vec<Complex64> = (0..n).map(|i| c(1.0, 0.1 * i as f64)).collect();
        for _ in 0..steps {
            let w = b.matvec(&v);
            v = vecops::normalized(&w).unwrap();
        }
        let av = a.matvec(&v);
        vecops::dot_h(&v, &av).re
    }

    #[test]
    fn identity_picks_first_axis() {
        let p = eig_sym_max(&RMatrix::identity(2)).unwrap();
        assert_eq!(p.value, 1.0);
        assert_eq!(p.vector, vec![1.0, 0.0]);
    }

    #[test]
    fn diagonal_case() {
        let p = eig_sym_max(&RMatrix::from_diag(&[3.0, -1.0])).unwrap();
        assert!((p.value - 3.0).abs() < 1e-15);
        assert!((p.vector[0] - 1.0).abs() < 1e-15 && p.vector[1].abs() < 1e-15);
    }

    #[test]
    fn swap_matrix_against_characteristic_polynomial() {
        // λ² − 1 = 0 → λ = 1, eigenvector (1, 1)/√2
        let a = RMatrix::from_vec(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let p = eig_sym_max(&a).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((p.value - 1.0).abs() < 1e-14);
        assert!((p.vector[0] - r).abs() < 1e-14 && (p.vector[1] - r).abs() < 1e-14);
    }

    #[test]
    fn rejects_asymmetric_and_nonsquare() {
        let a = RMatrix::from_vec(2, 2, vec![0.0, 1.0, 2.0, 0.0]).unwrap();
        assert!(matches!(eig_sym_max(&a), Err(Error::NotHermitian { .. })));
        assert!(matches!(
            eig_sym_max(&RMatrix::zeros(2, 3)),
            Err(Error::Dimension(_))
        ));
        let h = CMatrix::from_vec(
            2,
            2,
            vec![c(1.0, 0.0), c(0.0, 1.0), c(0.0, 1.0), c(1.0, 0.0)],
        )
        .unwrap();
        assert!(eig_herm_max(&h).is_err());
    }

    #[test]
    fn hermitian_identity_and_rank_one() {
        assert_eq!(eig_herm_max(&CMatrix::identity(3)).unwrap().value, 1.0);
        let h = vec![c(1.0, 1.0), c(0.0, -1.0), c(1.0, 0.0), c(0.0, 0.0)];
        let h = vecops::scale(&h, 2.0 / vecops::norm(&h));
        let p = eig_herm_max(&CMatrix::outer(&h, &h)).unwrap();
        assert!((p.value - 4.0).abs() < 1e-12);
        let overlap = vecops::dot_h(&p.vector, &h).norm();
        assert!((overlap - 2.0).abs() < 1e-12);
    }

    #[test]
    fn hermitian_matches_power_iteration() {
        for seed in 0..5 {
            let a = random_hermitian(4, seed);
            let p = eig_herm_max(&a).unwrap();
            let oracle = power_iteration(&a, 10_000);
            assert!(
                (p.value - oracle).abs() < 1e-8,
                "seed {seed}: {} vs {oracle}",
                p.value
            );
            let r = vecops::sub(&a.matvec(&p.vector), &vecops::scale(&p.vector, p.value));
            assert!(vecops::norm(&r) <= 1e-8 * a.frobenius());
            assert!((vecops::norm(&p.vector) - 1.0).abs() < 1e-10);
            // phase convention
            let big = p.vector.iter().map(|x| x.norm()).fold(0.0, f64::max);
            let lead = p
                .vector
                .iter()
                .find(|x| (x.norm() - big).abs() < 1e-12 * big)
                .unwrap();
            assert!(lead.im == 0.0 && lead.re > 0.0);
        }
    }

    #[test]
    fn full_decomposition_reconstructs() {
        let a = random_hermitian(6, 42);
        let e = eigh(&a).unwrap();
        let d = CMatrix::from_diag(&e.values.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>());
        let rec = e.vectors.matmul(&d).matmul(&e.vectors.adjoint());
        assert!(rec.sub(&a).frobenius() < 1e-12 * a.frobenius());
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn generalized_trivial_cases() {
        let a = CMatrix::from_diag(&[c(2.0, 0.0), c(1.0, 0.0)]);
        let p = gen_eig_max(&a, &CMatrix::identity(2)).unwrap();
        assert!((p.value - 2.0).abs() < 1e-14);
        assert!((p.vector[0] - c(1.0, 0.0)).norm() < 1e-14);

        let h = vec![c(0.3, -1.0), c(2.0, 0.5), c(-1.0, 0.0)];
        let hc = vecops::conj(&h);
        let gain = 0.7f64;
        let sigma2 = 0.25;
        let a = CMatrix::outer(&hc, &hc).scale(gain * gain);
        let b = CMatrix::identity(3).scale(sigma2);
        let p = gen_eig_max(&a, &b).unwrap();
        let expect = vecops::norm_sqr(&h) * gain * gain / sigma2;
        assert!((p.value - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn generalized_rejects_indefinite() {
        let a = CMatrix::identity(2);
        let b = CMatrix::from_diag(&[c(1.0, 0.0), c(-1.0, 0.0)]);
        assert!(matches!(gen_eig_max(&a, &b), Err(Error::Conditioning(_))));
        let singular = CMatrix::from_diag(&[c(1.0, 0.0), c(0.0, 0.0)]);
        assert!(gen_eig_max(&a, &singular).is_err());
    }

    /// Dense oracle: Rayleigh quotient of B⁻¹A eigenvector via power iteration
    /// on B⁻¹A (explicit inverse is fine in test code).
    #[test]
    fn generalized_matches_dense_oracle() {
        for seed in 10..15 {
            let a = random_hermitian(4, seed);
            let g = random_hermitian(4, seed + 100);
            let b = g.matmul(&g).add(&CMatrix::identity(4).scale(0.5));
            let p = gen_eig_max(&a, &b).unwrap();
            // residual of A v = λ B v
            let r = vecops::sub(
                &a.matvec(&p.vector),
                &vecops::scale(&b.matvec(&p.vector), p.value),
            );
            assert!(vecops::norm(&r) < 1e-9 * (a.frobenius() + p.value.abs() * b.frobenius()));
            // every other generalized eigenvalue is smaller: compare with a
            // whitened full decomposition computed independently through B^{-1/2}
            let eb = eigh(&b).unwrap();
            let inv_sqrt = CMatrix::from_diag(
                &eb.values
                    .iter()
                    .map(|&x| c(1.0 / x.sqrt(), 0.0))
                    .collect::<Vec<_>>(),
            );
            let w = eb.vectors.matmul(&inv_sqrt).matmul(&eb.vectors.adjoint());
            let c_mat = w.matmul(&a).matmul(&w).hermitian_part();
            let oracle = power_iteration(&c_mat, 10_000);
            assert!((p.value - oracle).abs() < 1e-8 * oracle.abs().max(1.0));
        }
    }
}
