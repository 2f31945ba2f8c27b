//! SINR and throughput evaluation, plus the closed-form transceiver pieces:
//! MMSE/MRC/ZF detectors, the per-tag optimal precoder, and the
//! path-loss-weighted benchmark precoder.
//!
//! Channels are passed as one vector per tag. The received power at tag `i`
//! is `q_i = |h_iᵀ f|²` and the decoding noise is `σ̄² = σ²_wR / ā²`.

use crate::channel::SimConfig;
use crate::error::{Error, Result};
use crate::numerics::{cholesky, cholesky_solve, pinv_full_rank, vecops, CMatrix, Complex64};

/// Precoder and detector pair.
#[derive(Clone, Debug)]
pub struct TrxDesign {
    pub f: Vec<Complex64>,
    /// `N × M`, one unit-norm column per tag.
    pub g: CMatrix,
}

impl TrxDesign {
    pub fn power(&self) -> f64 {
        vecops::norm_sqr(&self.f)
    }

    /// Checks `‖f‖² ≤ p_t` and unit detector columns, both within `tol`.
    pub fn is_feasible(&self, p_t: f64, tol: f64) -> bool {
        self.power() <= p_t + tol
            && (0..self.g.cols()).all(|k| (vecops::norm(&self.g.column(k)) - 1.0).abs() <= tol)
            && self.f.iter().all(|x| x.is_finite())
            && self.g.is_finite()
    }
}

#[derive(Clone, Debug)]
pub struct RateReport {
    pub gamma: Vec<f64>,
    /// Per-tag throughput (bits/s/Hz) including the CE-time prefactor.
    pub rates: Vec<f64>,
    pub min_rate: f64,
    /// Population standard deviation of `rates` (0 for a single tag).
    pub sigma_r: f64,
}

impl RateReport {
    pub fn from_sinr(gamma: Vec<f64>, prefactor: f64) -> Self {
        let rates: Vec<f64> = gamma
            .iter()
            .map(|g| prefactor * g.max(0.0).ln_1p() / std::f64::consts::LN_2)
            .collect();
        let min_rate = rates.iter().copied().fold(f64::INFINITY, f64::min);
        Self {
            sigma_r: population_std(&rates),
            gamma,
            rates,
            min_rate,
        }
    }
}

pub fn population_std(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

fn check_channels(h: &[Vec<Complex64>], n: usize) -> Result<()> {
    if h.is_empty() || h.iter().any(|hi| hi.len() != n) {
        return Err(Error::Dimension(format!(
            "expected {} channel vectors of length {n}",
            h.len().max(1)
        )));
    }
    Ok(())
}

/// `q_i = |h_iᵀ f|²`, plus tag noise when the config enables it.
pub fn received_powers(f: &[Complex64], h: &[Vec<Complex64>], cfg: &SimConfig) -> Vec<f64> {
    h.iter()
        .map(|hi| vecops::dot_t(hi, f).norm_sqr() + cfg.tag_noise())
        .collect()
}

/// SINR of tag `k` (0-based) for a general, possibly unnormalized, detector.
pub fn sinr(
    k: usize,
    f: &[Complex64],
    g: &CMatrix,
    h: &[Vec<Complex64>],
    cfg: &SimConfig,
) -> Result<f64> {
    let n = f.len();
    check_channels(h, n)?;
    if g.shape() != (n, h.len()) || k >= h.len() {
        return Err(Error::Dimension(format!(
            "detector is {}x{}, tag {k}, N = {n}, M = {}",
            g.rows(),
            g.cols(),
            h.len()
        )));
    }
    let q = received_powers(f, h, cfg);
    Ok(sinr_with_powers(k, &g.column(k), h, &q, cfg.noise_bar()))
}

fn sinr_with_powers(
    k: usize,
    gk: &[Complex64],
    h: &[Vec<Complex64>],
    q: &[f64],
    noise: f64,
) -> f64 {
    let mut signal = 0.0;
    let mut interference = 0.0;
    for (i, hi) in h.iter().enumerate() {
        let p = q[i] * vecops::dot_h(gk, hi).norm_sqr();
        if i == k {
            signal = p;
        } else {
            interference += p;
        }
    }
    let denom = interference + noise * vecops::norm_sqr(gk);
    if denom > 0.0 {
        signal / denom
    } else {
        0.0
    }
}

/// SINR of every tag.
pub fn sinrs(
    f: &[Complex64],
    g: &CMatrix,
    h: &[Vec<Complex64>],
    cfg: &SimConfig,
) -> Result<Vec<f64>> {
    (0..h.len()).map(|k| sinr(k, f, g, h, cfg)).collect()
}

pub fn rate_report(
    f: &[Complex64],
    g: &CMatrix,
    h: &[Vec<Complex64>],
    cfg: &SimConfig,
) -> Result<RateReport> {
    Ok(RateReport::from_sinr(
        sinrs(f, g, h, cfg)?,
        cfg.rate_prefactor(),
    ))
}

/// Solves `(ε I + Σ_i w_i v_i v_iᴴ) x = b` after dividing through by `ε`,
/// with two steps of iterative refinement.
fn solve_regularized(
    eps: f64,
    terms: &[(f64, &[Complex64])],
    b: &[Complex64],
) -> Result<Vec<Complex64>> {
    let n = b.len();
    let mut a = CMatrix::identity(n);
    for &(w, v) in terms {
        if w > 0.0 {
            a.add_assign_scaled(&CMatrix::outer(v, v), Complex64::new(w / eps, 0.0));
        }
    }
    let l = cholesky(&a)?;
    let rhs = vecops::scale(b, 1.0 / eps);
    let mut x = cholesky_solve(&l, &rhs);
    for _ in 0..2 {
        let r = vecops::sub(&rhs, &a.matvec(&x));
        x = vecops::add(&x, &cholesky_solve(&l, &r));
    }
    Ok(x)
}

fn fallback_column(n: usize) -> Vec<Complex64> {
    let mut e = vec![Complex64::new(0.0, 0.0); n];
    e[0] = Complex64::new(1.0, 0.0);
    e
}

fn unit_or_fallback(v: &[Complex64], k: usize) -> Vec<Complex64> {
    vecops::normalized(v).unwrap_or_else(|| {
        log::warn!("tag {k}: zero detector column, falling back to e1");
        fallback_column(v.len())
    })
}

/// Column `k` ∝ `(σ̄² I + Σ_i q_i ĥ_i ĥ_iᴴ)⁻¹ ĥ_k`, normalized.
pub fn detector_mmse(
    f: &[Complex64],
    h_hat: &[Vec<Complex64>],
    cfg: &SimConfig,
) -> Result<CMatrix> {
    let n = f.len();
    check_channels(h_hat, n)?;
    let q = received_powers(f, h_hat, cfg);
    let terms: Vec<(f64, &[Complex64])> = q
        .iter()
        .zip(h_hat)
        .map(|(&w, h)| (w, h.as_slice()))
        .collect();
    let cols = h_hat
        .iter()
        .enumerate()
        .map(|(k, hk)| {
            Ok(unit_or_fallback(
                &solve_regularized(cfg.noise_bar(), &terms, hk)?,
                k,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CMatrix::from_columns(&cols))
}

/// Column `k` = `ĥ_k / ‖ĥ_k‖`.
pub fn detector_mrc(h_hat: &[Vec<Complex64>]) -> CMatrix {
    let cols: Vec<_> = h_hat
        .iter()
        .enumerate()
        .map(|(k, h)| unit_or_fallback(h, k))
        .collect();
    CMatrix::from_columns(&cols)
}

/// Unnormalized zero-forcing matrix `G_Z = Ĥ (ĤᴴĤ)⁻¹`, computed as `(Ĥ⁺)ᴴ`.
pub fn zf_unnormalized(h_hat: &[Vec<Complex64>]) -> Result<CMatrix> {
    let n = h_hat.first().map_or(0, Vec::len);
    check_channels(h_hat, n)?;
    if h_hat.len() > n {
        return Err(Error::Conditioning(format!(
            "zero forcing needs N >= M, got N = {n}, M = {}",
            h_hat.len()
        )));
    }
    Ok(pinv_full_rank(&CMatrix::from_columns(h_hat), "channel matrix")?.adjoint())
}

/// `G_Z` with unit-norm columns.
pub fn detector_zf(h_hat: &[Vec<Complex64>]) -> Result<CMatrix> {
    let gz = zf_unnormalized(h_hat)?;
    let cols: Vec<_> = (0..gz.cols())
        .map(|k| unit_or_fallback(&gz.column(k), k))
        .collect();
    Ok(CMatrix::from_columns(&cols))
}

/// Pencil `(𝓖_k, 𝓖_k̄)` of the per-tag precoder problem, with
/// `fᴴ 𝓖_k f = |ĥ_kᵀ f|² |g_kᴴ ĥ_k|²`.
pub fn pertag_pencil(
    k: usize,
    g: &CMatrix,
    h_hat: &[Vec<Complex64>],
    cfg: &SimConfig,
) -> (CMatrix, CMatrix) {
    let n = g.rows();
    let gk = g.column(k);
    let mut num = CMatrix::zeros(n, n);
    let mut den = CMatrix::identity(n).scale(cfg.noise_bar() * vecops::norm_sqr(&gk) / cfg.p_t);
    for (i, hi) in h_hat.iter().enumerate() {
        let a = vecops::conj(hi);
        let w = Complex64::new(vecops::dot_h(&gk, hi).norm_sqr(), 0.0);
        if i == k {
            num.add_assign_scaled(&CMatrix::outer(&a, &a), w);
        } else {
            den.add_assign_scaled(&CMatrix::outer(&a, &a), w);
        }
    }
    (num, den)
}

/// Maximizer of tag `k`'s SINR over `‖f‖² ≤ p_t` for fixed detectors:
/// the dominant generalized eigenvector of the pencil, which for the
/// rank-one numerator is `𝓖_k̄⁻¹ ĥ_k*`. Scaled to `‖f‖² = p_t`.
pub fn precoder_pertag(
    k: usize,
    g: &CMatrix,
    h_hat: &[Vec<Complex64>],
    cfg: &SimConfig,
) -> Result<Vec<Complex64>> {
    let n = g.rows();
    check_channels(h_hat, n)?;
    if g.cols() != h_hat.len() || k >= h_hat.len() {
        return Err(Error::Dimension(format!(
            "detector has {} columns, tag {k}",
            g.cols()
        )));
    }
    let gk = g.column(k);
    let conj: Vec<Vec<Complex64>> = h_hat.iter().map(|h| vecops::conj(h)).collect();
    let weights: Vec<f64> = h_hat
        .iter()
        .map(|h| vecops::dot_h(&gk, h).norm_sqr())
        .collect();
    let terms: Vec<(f64, &[Complex64])> = (0..h_hat.len())
        .filter(|&i| i != k)
        .map(|i| (weights[i], conj[i].as_slice()))
        .collect();
    let eps = cfg.noise_bar() * vecops::norm_sqr(&gk) / cfg.p_t;
    let x = solve_regularized(eps, &terms, &conj[k])?;
    Ok(match vecops::normalized(&x) {
        Some(u) => vecops::scale(&u, cfg.p_t.sqrt()),
        None => isotropic_precoder(n, cfg.p_t),
    })
}

/// `√(p_t / N) · 1`.
pub fn isotropic_precoder(n: usize, p_t: f64) -> Vec<Complex64> {
    vec![Complex64::new((p_t / n as f64).sqrt(), 0.0); n]
}

/// Path-loss-weighted superposition of per-tag MRT directions,
/// `Σ_k √((1/β_k²) / Σ_i 1/β_i²) ĥ_k* / ‖ĥ_k‖`, rescaled to `‖f‖² = p_t`.
pub fn precoder_benchmark(
    h_hat: &[Vec<Complex64>],
    beta: &[f64],
    cfg: &SimConfig,
) -> Result<Vec<Complex64>> {
    let n = h_hat.first().map_or(0, Vec::len);
    check_channels(h_hat, n)?;
    if beta.len() != h_hat.len() || beta.iter().any(|b| !(*b > 0.0)) {
        return Err(Error::Parameter(
            "benchmark needs one positive path gain per tag".into(),
        ));
    }
    let inv_total: f64 = beta.iter().map(|b| b.powi(-2)).sum();
    let mut f = vec![Complex64::new(0.0, 0.0); n];
    for (h, b) in h_hat.iter().zip(beta) {
        if let Some(u) = vecops::normalized(&vecops::conj(h)) {
            let w = (b.powi(-2) / inv_total).sqrt();
            f = vecops::add(&f, &vecops::scale(&u, w));
        }
    }
    Ok(match vecops::normalized(&f) {
        Some(u) => vecops::scale(&u, cfg.p_t.sqrt()),
        None => isotropic_precoder(n, cfg.p_t),
    })
}
