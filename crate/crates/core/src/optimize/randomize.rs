//! Gaussian randomization: recovers a rank-one precoder from the relaxed
//! covariance.

use rand::Rng;

use crate::error::Result;
use crate::numerics::{eigh, sample_cgauss, sample_unit_phases, vecops, CMatrix, Complex64};

#[derive(Clone, Debug)]
pub struct Randomized {
    pub f: Vec<Complex64>,
    /// `min_k (γ̂_k / γ̂_1) |ĥ_kᵀ f|²`, directly comparable with `SdrSolution::p`.
    pub objective: f64,
    /// Index of the winning candidate in generation order.
    pub candidate: usize,
}

/// Weighted max-min objective over tags with a nonzero estimate.
pub fn weighted_min_power(f: &[Complex64], h_hat: &[Vec<Complex64>], gamma_hat: &[f64]) -> f64 {
    h_hat
        .iter()
        .zip(gamma_hat)
        .filter(|(h, _)| vecops::norm_sqr(h) > 0.0)
        .map(|(h, g)| g / gamma_hat[0] * vecops::dot_t(h, f).norm_sqr())
        .fold(f64::INFINITY, f64::min)
}

/// Draws `K` candidates of each kind and returns the best, scaled to
/// `‖f‖² = p_t`:
///
/// 1. `U Λ^{1/2} x_a` with `x_a ~ CN(0, I)`,
/// 2. `sqrt(diag F) ⊙ x_b` with unit-modulus `x_b`,
/// 3. `U Λ^{1/2} x_b`, reusing the same `x_b`.
///
/// RNG order: the `K` vectors `x_a`, then the `K` vectors `x_b`. Ties keep
/// the first candidate in the order kind 1, 2, 3.
pub fn randomize<R: Rng + ?Sized>(
    f: &CMatrix,
    h_hat: &[Vec<Complex64>],
    gamma_hat: &[f64],
    k_samples: usize,
    p_t: f64,
    rng: &mut R,
) -> Result<Randomized> {
    let n = f.rows();
    let eig = eigh(&f.hermitian_part())?;
    let root = CMatrix::from_fn(n, n, |i, j| {
        eig.vectors[(i, j)] * eig.values[j].max(0.0).sqrt()
    });
    let diag_root: Vec<Complex64> = f
        .diag()
        .iter()
        .map(|d| Complex64::new(d.re.max(0.0).sqrt(), 0.0))
        .collect();

    let xa: Vec<Vec<Complex64>> = (0..k_samples)
        .map(|_| sample_cgauss(rng, n, 1.0))
        .collect::<Result<_>>()?;
    let xb: Vec<Vec<Complex64>> = (0..k_samples).map(|_| sample_unit_phases(rng, n)).collect();

    let candidates = xa
        .iter()
        .map(|x| root.matvec(x))
        .chain(
            xb.iter()
                .map(|x| diag_root.iter().zip(x).map(|(d, p)| d * p).collect()),
        )
        .chain(xb.iter().map(|x| root.matvec(x)));

    let mut best: Option<Randomized> = None;
    for (idx, cand) in candidates.enumerate() {
        let Some(u) = vecops::normalized(&cand) else {
            continue;
        };
        let fc = vecops::scale(&u, p_t.sqrt());
        let obj = weighted_min_power(&fc, h_hat, gamma_hat);
        if best.as_ref().is_none_or(|b| obj > b.objective) {
            best = Some(Randomized {
                f: fc,
                objective: obj,
                candidate: idx,
            });
        }
    }
    Ok(best.unwrap_or_else(|| {
        let f = vec![Complex64::new((p_t / n as f64).sqrt(), 0.0); n];
        Randomized {
            objective: weighted_min_power(&f, h_hat, gamma_hat),
            f,
            candidate: usize::MAX,
        }
    }))
}
