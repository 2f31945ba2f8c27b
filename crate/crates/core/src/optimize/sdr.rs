//! Semidefinite relaxation of the weighted max-min received-power problem
//!
//! ```text
//! maximize P  s.t.  c_k a_kᴴ F a_k ≥ P,  tr F ≤ p_t,  F ⪰ 0
//! ```
//!
//! with `a_k = ĥ_k*` and `c_k = γ̂_k / γ̂_1`. Solved by fully-corrective
//! column generation over rank-one atoms `p_t v vᴴ`: the restricted master
//! is a matrix game (see [`super::game`]), and its row strategy `π` prices a
//! new atom through the leading eigenvector of `Σ_k π_k c_k a_k a_kᴴ`, whose
//! eigenvalue also gives an upper bound on the relaxation value.

use super::game::solve_game;
use crate::error::{Error, Result};
use crate::numerics::{eig_herm_max, vecops, CMatrix, Complex64};

/// Stop once the certified relative gap falls below this.
pub const SDR_TARGET_GAP: f64 = 1e-5;
/// Gap accepted at the iteration cap before reporting non-convergence.
pub const SDR_REQUIRED_GAP: f64 = 1e-4;
pub const SDR_MAX_ITERATIONS: usize = 400;

#[derive(Clone, Debug)]
pub struct SdrSolution {
    /// Relaxed transmit covariance `F`.
    pub f: CMatrix,
    /// `min_k c_k a_kᴴ F a_k`.
    pub p: f64,
    /// Certified relative gap `(upper_bound − p) / upper_bound`.
    pub gap: f64,
    pub upper_bound: f64,
    pub iterations: usize,
}

struct Weighted {
    a: Vec<Vec<Complex64>>,
    c: Vec<f64>,
}

impl Weighted {
    fn gain(&self, k: usize, v: &[Complex64]) -> f64 {
        self.c[k] * vecops::dot_h(&self.a[k], v).norm_sqr()
    }

    fn pricing_matrix(&self, pi: &[f64]) -> CMatrix {
        let n = self.a[0].len();
        let mut w = CMatrix::zeros(n, n);
        for (k, ak) in self.a.iter().enumerate() {
            if pi[k] > 0.0 {
                w.add_assign_scaled(
                    &CMatrix::outer(ak, ak),
                    Complex64::new(pi[k] * self.c[k], 0.0),
                );
            }
        }
        w.hermitian_part()
    }
}

fn covariance(atoms: &[Vec<Complex64>], theta: &[f64], p_t: f64) -> CMatrix {
    let n = atoms[0].len();
    let mut f = CMatrix::zeros(n, n);
    for (v, &t) in atoms.iter().zip(theta) {
        if t > 0.0 {
            f.add_assign_scaled(&CMatrix::outer(v, v), Complex64::new(p_t * t, 0.0));
        }
    }
    f.hermitian_part()
}

/// Solves the relaxation for channel estimates `h_hat` and per-tag weights
/// `gamma_hat` (all positive). Tags with a zero estimate are left out of
/// the constraints.
pub fn sdr_solve(h_hat: &[Vec<Complex64>], gamma_hat: &[f64], p_t: f64) -> Result<SdrSolution> {
    let n = h_hat.first().map_or(0, Vec::len);
    if n == 0 || h_hat.iter().any(|h| h.len() != n) || gamma_hat.len() != h_hat.len() {
        return Err(Error::Dimension(
            "SDR needs one weight per length-N channel".into(),
        ));
    }
    if gamma_hat.iter().any(|g| !(*g > 0.0 && g.is_finite())) || !(p_t > 0.0) {
        return Err(Error::Parameter(
            "SDR weights and power budget must be positive".into(),
        ));
    }
    let active: Vec<usize> = (0..h_hat.len())
        .filter(|&k| vecops::norm_sqr(&h_hat[k]) > 0.0)
        .collect();
    if active.is_empty() {
        return Err(Error::Parameter(
            "SDR needs at least one nonzero channel estimate".into(),
        ));
    }

    // unit-scale the problem: c_k ‖a_k‖² ≤ 1
    let raw_c: Vec<f64> = active
        .iter()
        .map(|&k| gamma_hat[k] / gamma_hat[0])
        .collect();
    let scale = active
        .iter()
        .zip(&raw_c)
        .map(|(&k, c)| c * vecops::norm_sqr(&h_hat[k]))
        .fold(0.0, f64::max);
    let prob = Weighted {
        a: active.iter().map(|&k| vecops::conj(&h_hat[k])).collect(),
        c: raw_c.iter().map(|c| c / scale).collect(),
    };
    let m = prob.a.len();

    let mut atoms: Vec<Vec<Complex64>> = prob
        .a
        .iter()
        .filter_map(|a| vecops::normalized(a))
        .collect();
    let uniform = vec![1.0 / m as f64; m];
    atoms.push(eig_herm_max(&prob.pricing_matrix(&uniform))?.vector);

    let mut best_ub = f64::INFINITY;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut gap = f64::INFINITY;
    for it in 1..=SDR_MAX_ITERATIONS {
        let payoff: Vec<Vec<f64>> = (0..m)
            .map(|k| atoms.iter().map(|v| prob.gain(k, v)).collect())
            .collect();
        let game = solve_game(&payoff)?;
        let top = eig_herm_max(&prob.pricing_matrix(&game.pi))?;
        best_ub = best_ub.min(top.value);
        gap = ((best_ub - game.value) / best_ub).max(0.0);
        best = Some((game.value, game.theta));
        if gap <= SDR_TARGET_GAP {
            let (_, theta) = best.take().unwrap();
            return Ok(finish(&prob, &atoms, &theta, p_t, scale, best_ub, gap, it));
        }
        atoms.push(top.vector);
    }
    let (_, theta) = best.take().unwrap();
    atoms.pop();
    let sol = finish(
        &prob,
        &atoms,
        &theta,
        p_t,
        scale,
        best_ub,
        gap,
        SDR_MAX_ITERATIONS,
    );
    if gap <= SDR_REQUIRED_GAP {
        return Ok(sol);
    }
    Err(Error::SolverNonConvergence {
        iterations: SDR_MAX_ITERATIONS,
        gap,
        best: Box::new(sol),
    })
}

#[allow(clippy::too_many_arguments)]
fn finish(
    prob: &Weighted,
    atoms: &[Vec<Complex64>],
    theta: &[f64],
    p_t: f64,
    scale: f64,
    ub: f64,
    gap: f64,
    iterations: usize,
) -> SdrSolution {
    let f = covariance(atoms, theta, p_t);
    let p = (0..prob.a.len())
        .map(|k| prob.c[k] * vecops::dot_h(&prob.a[k], &f.matvec(&prob.a[k])).re)
        .fold(f64::INFINITY, f64::min);
    SdrSolution {
        f,
        p: p * scale,
        gap,
        upper_bound: ub * p_t * scale,
        iterations,
    }
}
