//! Two-phase channel estimation at the reader.
//!
//! Sub-phase (1a): every tag sits in its silent state while the reader sends
//! `N` orthogonal pilots, which gives a least-squares estimate of the
//! ambient-reflection (UAR) matrix. Sub-phase (1b): tags take turns in the
//! active state; after subtracting the UAR contribution, each tag's channel
//! follows from the dominant eigenpair of a `2N × 2N` real embedding of its
//! matched-filtered block.
//!
//! Observations are kept in the physical orientation `X S` with `X` the
//! (complex-symmetric) round-trip matrix `h hᵀ`. Since `S` is symmetric this
//! is the blockwise transpose of the stacked `(A ⊗ S) 𝓗` form, with identical
//! least-squares solutions.

use rand::Rng;

use crate::channel::{ChannelRealization, PilotMatrix, PreambleMatrix, SimConfig};
use crate::error::{Error, Result};
use crate::numerics::{
    eig_sym_max, pinv_full_rank, sample_cgauss, vecops, CMatrix, Complex64, RMatrix,
};

/// Reader observations during the CE phase.
#[derive(Clone, Debug)]
pub struct CeObservation {
    /// Sub-phase (1a), `N × N`.
    pub y0: CMatrix,
    /// Sub-phase (1b), `NM × N`; block `k` is received while tag `k` is active.
    pub y1: CMatrix,
}

/// Per-tag estimate returned by [`lse_from_ytilde`].
#[derive(Clone, Debug)]
pub struct TagEstimate {
    pub h_hat: Vec<Complex64>,
    pub lambda: f64,
    /// Set when the dominant eigenvalue is not positive and `h_hat` is zero.
    pub degenerate: bool,
}

#[derive(Clone, Debug)]
pub struct CeResult {
    pub h_u_hat: CMatrix,
    pub h_hat: Vec<Vec<Complex64>>,
    /// `λ_max` per tag, equal to `‖ĥ_k‖²`.
    pub lambda: Vec<f64>,
    pub degenerate: Vec<bool>,
    /// Least-squares objective at the estimate.
    pub residual: f64,
}

impl CeResult {
    pub fn h_hat_matrix(&self) -> CMatrix {
        CMatrix::from_columns(&self.h_hat)
    }
}

/// How the (1b) observation is cleaned before per-tag estimation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UarHandling {
    /// Subtract the (1a) UAR estimate.
    Suppress,
    /// Use the raw (1b) observation.
    Ignore,
}

fn check_dims(what: &str, m: &CMatrix, rows: usize, cols: usize) -> Result<()> {
    if m.shape() != (rows, cols) {
        return Err(Error::Dimension(format!(
            "{what}: expected {rows}x{cols}, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

fn round_trip(h: &[Complex64]) -> CMatrix {
    CMatrix::from_fn(h.len(), h.len(), |i, j| h[i] * h[j])
}

/// Generates the (1a) and (1b) observations for one realization.
///
/// `Y0 = (H_U + a0 Σ_m h_m h_mᵀ) S + W0`, and block `k` of `Y1` is
/// `(Σ_m A[k, m] h_m h_mᵀ + H_U) S + W1_k`. Noise is drawn as `W0` then `W1`,
/// both row-major.
pub fn simulate_ce_phase<R: Rng + ?Sized>(
    cfg: &SimConfig,
    real: &ChannelRealization,
    pilots: &PilotMatrix,
    preamble: &PreambleMatrix,
    rng: &mut R,
) -> Result<CeObservation> {
    let n = real.n_antennas();
    let m = real.n_tags();
    check_dims("pilot matrix", &pilots.s, n, n)?;
    if preamble.a.shape() != (m, m) {
        return Err(Error::Dimension(format!(
            "preamble is {}x{}, expected {m}x{m}",
            preamble.a.rows(),
            preamble.a.cols()
        )));
    }
    let s = &pilots.s;
    let x: Vec<CMatrix> = real.h.iter().map(|h| round_trip(h)).collect();

    let mut silent = real.h_u.clone();
    for xm in &x {
        silent.add_assign_scaled(xm, Complex64::new(cfg.a0, 0.0));
    }
    let w0 = CMatrix::from_vec(n, n, sample_cgauss(rng, n * n, cfg.sigma2_w0())?)?;
    let y0 = silent.matmul(s).add(&w0);

    let w1 = CMatrix::from_vec(n * m, n, sample_cgauss(rng, n * m * n, cfg.sigma2_w1())?)?;
    let mut y1 = w1;
    for k in 0..m {
        let mut block = real.h_u.clone();
        for (j, xm) in x.iter().enumerate() {
            block.add_assign_scaled(xm, Complex64::new(preamble.a[(k, j)], 0.0));
        }
        let noisy = block.matmul(s).add(&y1.submatrix(k * n, 0, n, n));
        y1.set_submatrix(k * n, 0, &noisy);
    }
    Ok(CeObservation { y0, y1 })
}

/// `Ĥ_U = Y0 S⁺`.
pub fn estimate_uar(y0: &CMatrix, pilots: &PilotMatrix) -> Result<CMatrix> {
    let n = pilots.s.rows();
    check_dims("Y0", y0, n, pilots.samples())?;
    Ok(y0.matmul(&pinv_full_rank(&pilots.s, "pilot matrix")?))
}

/// `Y = Y1 − (1_M ⊗ Ĥ_U) S`.
pub fn suppress_uar(y1: &CMatrix, h_u_hat: &CMatrix, pilots: &PilotMatrix) -> Result<CMatrix> {
    let n = pilots.s.rows();
    check_dims("UAR estimate", h_u_hat, n, n)?;
    if y1.cols() != pilots.samples() || !y1.rows().is_multiple_of(n) {
        return Err(Error::Dimension(format!(
            "Y1 is {}x{}",
            y1.rows(),
            y1.cols()
        )));
    }
    let leak = h_u_hat.matmul(&pilots.s);
    let mut y = y1.clone();
    for k in 0..y1.rows() / n {
        let block = y.submatrix(k * n, 0, n, n).sub(&leak);
        y.set_submatrix(k * n, 0, &block);
    }
    Ok(y)
}

/// Unconstrained LS blocks of the stacked model, computed through the
/// Kronecker factorization `(A ⊗ S)⁺ = A⁺ ⊗ S⁺`, then symmetrized.
fn ls_blocks(y: &CMatrix, pilots: &PilotMatrix, preamble: &PreambleMatrix) -> Result<Vec<CMatrix>> {
    let n = pilots.s.rows();
    let m = preamble.a.rows();
    check_dims("Y", y, n * m, pilots.samples())?;
    let s_pinv = pinv_full_rank(&pilots.s, "pilot matrix")?;
    let a_pinv: RMatrix = pinv_full_rank(&preamble.a, "preamble matrix")?;
    let matched: Vec<CMatrix> = (0..m)
        .map(|j| y.submatrix(j * n, 0, n, pilots.samples()).matmul(&s_pinv))
        .collect();
    Ok((0..m)
        .map(|k| {
            let mut xk = CMatrix::zeros(n, n);
            for (j, bj) in matched.iter().enumerate() {
                xk.add_assign_scaled(bj, Complex64::new(a_pinv[(k, j)], 0.0));
            }
            xk.add(&xk.transpose()).scale(0.5)
        })
        .collect())
}

/// Symmetric `N × N` matrix `Ỹ_k` whose best symmetric rank-one
/// approximation `ĥ_k ĥ_kᵀ` solves the per-tag LS problem. `k` is 0-based.
pub fn build_ytilde(
    y: &CMatrix,
    pilots: &PilotMatrix,
    preamble: &PreambleMatrix,
    k: usize,
) -> Result<CMatrix> {
    if k >= preamble.a.rows() {
        return Err(Error::Parameter(format!(
            "tag index {k} out of range for M = {}",
            preamble.a.rows()
        )));
    }
    Ok(ls_blocks(y, pilots, preamble)?.swap_remove(k))
}

/// `Z = [[Re Ỹ, Im Ỹ], [Im Ỹ, −Re Ỹ]]`.
pub fn real_embedding(ytilde: &CMatrix) -> RMatrix {
    let n = ytilde.rows();
    let re = ytilde.real_part();
    let im = ytilde.imag_part();
    RMatrix::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
        (true, true) => re[(i, j)],
        (true, false) => im[(i, j - n)],
        (false, true) => im[(i - n, j)],
        (false, false) => -re[(i - n, j - n)],
    })
}

/// `ĥ = √λ_max (v_re + j v_im)` from the dominant eigenpair of the real
/// embedding. A non-positive `λ_max` yields the zero vector.
pub fn lse_from_ytilde(ytilde: &CMatrix) -> Result<TagEstimate> {
    if !ytilde.is_square() {
        return Err(Error::Dimension(format!(
            "Ỹ is {}x{}",
            ytilde.rows(),
            ytilde.cols()
        )));
    }
    let n = ytilde.rows();
    let sym = ytilde.add(&ytilde.transpose()).scale(0.5);
    let pair = eig_sym_max(&real_embedding(&sym))?;
    if !(pair.value > 0.0) {
        return Ok(TagEstimate {
            h_hat: vec![Complex64::new(0.0, 0.0); n],
            lambda: 0.0,
            degenerate: true,
        });
    }
    let amp = pair.value.sqrt();
    let v = &pair.vector;
    let h_hat = (0..n)
        .map(|i| Complex64::new(v[i], v[i + n]) * amp)
        .collect();
    Ok(TagEstimate {
        h_hat,
        lambda: pair.value,
        degenerate: false,
    })
}

/// `‖ĥᴴỸ − ‖ĥ‖² ĥᵀ‖`, the first-order optimality residual of
/// `min ‖Ỹ − ĥĥᵀ‖²`.
pub fn stationarity_residual(ytilde: &CMatrix, h_hat: &[Complex64]) -> f64 {
    let lhs = ytilde.transpose().matvec(&vecops::conj(h_hat));
    let nsq = vecops::norm_sqr(h_hat);
    let rhs: Vec<Complex64> = h_hat.iter().map(|x| x * nsq).collect();
    vecops::norm(&vecops::sub(&lhs, &rhs))
}

/// `𝓔 = Σ_k ‖Y_k − Σ_m A[k, m] ĥ_m ĥ_mᵀ S‖²`.
pub fn ls_objective(
    y: &CMatrix,
    pilots: &PilotMatrix,
    preamble: &PreambleMatrix,
    h_hat: &[Vec<Complex64>],
) -> Result<f64> {
    let n = pilots.s.rows();
    let m = preamble.a.rows();
    check_dims("Y", y, n * m, pilots.samples())?;
    if h_hat.len() != m || h_hat.iter().any(|h| h.len() != n) {
        return Err(Error::Dimension(
            "channel estimates do not match N, M".into(),
        ));
    }
    let xs: Vec<CMatrix> = h_hat
        .iter()
        .map(|h| round_trip(h).matmul(&pilots.s))
        .collect();
    let mut total = 0.0;
    for k in 0..m {
        let mut r = y.submatrix(k * n, 0, n, pilots.samples());
        for (j, xj) in xs.iter().enumerate() {
            r.add_assign_scaled(xj, Complex64::new(-preamble.a[(k, j)], 0.0));
        }
        total += r.frobenius_sqr();
    }
    Ok(total)
}

/// Relative error of `ĥ` against `h` after resolving the sign ambiguity.
pub fn sign_aligned_error(h_hat: &[Complex64], h: &[Complex64]) -> f64 {
    let minus = vecops::norm(&vecops::sub(h_hat, h));
    let plus = vecops::norm(&vecops::add(h_hat, h));
    minus.min(plus) / vecops::norm(h)
}

/// Estimates from an already-simulated observation.
pub fn estimate_from_observation(
    obs: &CeObservation,
    pilots: &PilotMatrix,
    preamble: &PreambleMatrix,
    uar: UarHandling,
) -> Result<CeResult> {
    let h_u_hat = estimate_uar(&obs.y0, pilots)?;
    let y = match uar {
        UarHandling::Suppress => suppress_uar(&obs.y1, &h_u_hat, pilots)?,
        UarHandling::Ignore => obs.y1.clone(),
    };
    let blocks = ls_blocks(&y, pilots, preamble)?;
    let mut h_hat = Vec::with_capacity(blocks.len());
    let mut lambda = Vec::with_capacity(blocks.len());
    let mut degenerate = Vec::with_capacity(blocks.len());
    for (k, yt) in blocks.iter().enumerate() {
        let est = lse_from_ytilde(yt)?;
        if est.degenerate {
            log::warn!("tag {k}: non-positive dominant eigenvalue, returning a zero estimate");
        }
        h_hat.push(est.h_hat);
        lambda.push(est.lambda);
        degenerate.push(est.degenerate);
    }
    let residual = ls_objective(&y, pilots, preamble, &h_hat)?;
    Ok(CeResult {
        h_u_hat,
        h_hat,
        lambda,
        degenerate,
        residual,
    })
}

/// Full CE protocol with UAR suppression.
pub fn run_ce<R: Rng + ?Sized>(
    cfg: &SimConfig,
    real: &ChannelRealization,
    rng: &mut R,
) -> Result<CeResult> {
    run_ce_with(cfg, real, UarHandling::Suppress, rng)
}

pub fn run_ce_with<R: Rng + ?Sized>(
    cfg: &SimConfig,
    real: &ChannelRealization,
    uar: UarHandling,
    rng: &mut R,
) -> Result<CeResult> {
    let pilots = crate::channel::make_pilots(cfg);
    let preamble = crate::channel::make_preamble(cfg);
    let obs = simulate_ce_phase(cfg, real, &pilots, &preamble, rng)?;
    estimate_from_observation(&obs, &pilots, &preamble, uar)
}
