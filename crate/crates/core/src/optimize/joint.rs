//! Iterative joint design: Nelder–Mead on the precoder minimizes the spread
//! of the per-tag rates under MMSE detection, with restarts that steer the
//! precoder towards the current bottleneck tag.

use rand::seq::index::sample;
use rand::Rng;

use super::asymptotic::best_asymptotic;
use super::nelder_mead::{nelder_mead, NmOptions};
use crate::channel::SimConfig;
use crate::error::{Error, Result};
use crate::numerics::{cholesky, linsolve::solve_lower, vecops, CMatrix, Complex64};
use crate::trx::{detector_mmse, RateReport, TrxDesign};

#[derive(Clone, Debug)]
pub struct JointResult {
    pub design: TrxDesign,
    /// Min-rate of `design` on the channel estimates.
    pub min_rate: f64,
    /// Rate standard deviation of the last Nelder–Mead output, the quantity
    /// the outer loop terminates on.
    pub sigma_r: f64,
    /// Rate standard deviation of `design`. Differs from `sigma_r` when an
    /// earlier iterate (or the start) had the higher min-rate.
    pub design_sigma_r: f64,
    pub iterations: usize,
    /// `sigma_r < ε`: the loop stopped on tolerance rather than `it_max`.
    pub converged: bool,
    pub start_min_rate: f64,
    /// Best min-rate after each outer iteration.
    pub history: Vec<f64>,
    pub evaluations: usize,
}

/// Rates under MMSE detection for a fixed set of channels, in `O(NM + M³)`
/// per precoder.
///
/// With `T = D G D / σ̄²`, `G = HᴴH` and `D = diag(√q)`, the MMSE SINR of
/// tag `k` is `1 / [(I + T)⁻¹]_kk − 1`.
pub struct MmseEvaluator<'a> {
    h: &'a [Vec<Complex64>],
    gram: CMatrix,
    noise: f64,
    tag_noise: f64,
    prefactor: f64,
}

impl<'a> MmseEvaluator<'a> {
    pub fn new(h: &'a [Vec<Complex64>], cfg: &SimConfig) -> Self {
        let m = h.len();
        let gram = CMatrix::from_fn(m, m, |i, j| vecops::dot_h(&h[i], &h[j]));
        Self {
            h,
            gram,
            noise: cfg.noise_bar(),
            tag_noise: cfg.tag_noise(),
            prefactor: cfg.rate_prefactor(),
        }
    }

    pub fn sinrs(&self, f: &[Complex64]) -> Result<Vec<f64>> {
        let m = self.h.len();
        let d: Vec<f64> = self
            .h
            .iter()
            .map(|h| (vecops::dot_t(h, f).norm_sqr() + self.tag_noise).sqrt())
            .collect();
        let mut t = CMatrix::from_fn(m, m, |i, j| self.gram[(i, j)] * (d[i] * d[j] / self.noise));
        for i in 0..m {
            t[(i, i)] += Complex64::new(1.0, 0.0);
        }
        let l = cholesky(&t)?;
        let mut e = vec![Complex64::new(0.0, 0.0); m];
        Ok((0..m)
            .map(|k| {
                e.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
                e[k] = Complex64::new(1.0, 0.0);
                let s = vecops::norm_sqr(&solve_lower(&l, &e));
                (1.0 / s - 1.0).max(0.0)
            })
            .collect())
    }

    pub fn report(&self, f: &[Complex64]) -> Result<RateReport> {
        Ok(RateReport::from_sinr(self.sinrs(f)?, self.prefactor))
    }
}

fn to_real(f: &[Complex64]) -> Vec<f64> {
    f.iter()
        .map(|z| z.re)
        .chain(f.iter().map(|z| z.im))
        .collect()
}

/// Maps `2N` reals onto the sphere `‖f‖² = p_t`.
fn to_precoder(x: &[f64], p_t: f64) -> Option<Vec<Complex64>> {
    let n = x.len() / 2;
    let f: Vec<Complex64> = (0..n).map(|i| Complex64::new(x[i], x[i + n])).collect();
    vecops::normalized(&f).map(|u| vecops::scale(&u, p_t.sqrt()))
}

/// Sparse restart weights: `n ~ U{1..N}` positions drawn without
/// replacement, each with a `U(0, 1)` weight; zero elsewhere.
pub fn restart_weights<R: Rng + ?Sized>(n_antennas: usize, rng: &mut R) -> Vec<f64> {
    let count = rng.gen_range(1..=n_antennas);
    let mut alpha = vec![0.0; n_antennas];
    for pos in sample(rng, n_antennas, count).into_iter() {
        alpha[pos] = rng.gen_range(0.0..1.0);
    }
    alpha
}

pub fn joint_design<R: Rng + ?Sized>(
    h_hat: &[Vec<Complex64>],
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<JointResult> {
    let start = best_asymptotic(h_hat, cfg, rng)?;
    joint_design_from(&start.design, h_hat, cfg, rng)
}

/// Runs the outer loop from a given starting design. The returned design is
/// the best by min-rate among the start and every Nelder–Mead output.
pub fn joint_design_from<R: Rng + ?Sized>(
    start: &TrxDesign,
    h_hat: &[Vec<Complex64>],
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<JointResult> {
    let n = cfg.n_antennas;
    if start.f.len() != n || h_hat.iter().any(|h| h.len() != n) {
        return Err(Error::Dimension("starting design does not match N".into()));
    }
    let eval = MmseEvaluator::new(h_hat, cfg);
    let start_report = crate::trx::rate_report(&start.f, &start.g, h_hat, cfg)?;
    let mut best_f = start.f.clone();
    let mut best_g = Some(start.g.clone());
    let mut best = start_report.clone();
    let mut f_prev = start.f.clone();
    let mut history = Vec::with_capacity(cfg.it_max);
    let mut evaluations = 0;
    let opts = NmOptions::default();
    let mut iterations = 0;
    let mut last_sigma = start_report.sigma_r;

    for it in 1..=cfg.it_max {
        iterations = it;
        let nm = nelder_mead(
            |x| match to_precoder(x, cfg.p_t) {
                Some(f) => eval.report(&f).map_or(f64::NAN, |r| r.sigma_r),
                None => f64::MAX,
            },
            &to_real(&f_prev),
            &opts,
        )?;
        evaluations += nm.evaluations;
        let f_nm = to_precoder(&nm.x, cfg.p_t).unwrap_or_else(|| f_prev.clone());
        let report = eval.report(&f_nm)?;
        if report.min_rate > best.min_rate {
            best = report.clone();
            best_f = f_nm.clone();
            best_g = None;
        }
        history.push(best.min_rate);
        last_sigma = report.sigma_r;
        if report.sigma_r < cfg.epsilon {
            break;
        }

        let k0 = (0..report.rates.len())
            .min_by(|&a, &b| report.rates[a].total_cmp(&report.rates[b]))
            .unwrap_or(0);
        let alpha = restart_weights(n, rng);
        f_prev = match vecops::normalized(&vecops::conj(&h_hat[k0])) {
            Some(u) => {
                let mrt = vecops::scale(&u, cfg.p_t.sqrt());
                (0..n)
                    .map(|i| mrt[i] * alpha[i] + f_nm[i] * (1.0 - alpha[i]))
                    .collect()
            }
            None => f_nm,
        };
    }

    let g = match best_g {
        Some(g) => g,
        None => detector_mmse(&best_f, h_hat, cfg)?,
    };
    Ok(JointResult {
        design: TrxDesign { f: best_f, g },
        min_rate: best.min_rate,
        sigma_r: last_sigma,
        design_sigma_r: best.sigma_r,
        iterations,
        converged: last_sigma < cfg.epsilon,
        start_min_rate: start_report.min_rate,
        history,
        evaluations,
    })
}
