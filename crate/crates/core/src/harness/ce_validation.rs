//! Sum received power at the tags under beamforming built from estimated
//! and true channels.

use rand::Rng;
use rayon::prelude::*;

use super::trial::trial_rng;
use crate::channel::{draw_realization, SimConfig};
use crate::error::Result;
use crate::estimation::{run_ce_with, UarHandling};
use crate::numerics::{eig_herm_max, vecops, CMatrix, Complex64};

/// Sum received powers `Σ_k |h_kᵀ f|²` (W) of one trial.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CePowers {
    pub lse_uar: f64,
    pub lse_nouar: f64,
    pub perfect: f64,
    pub isotropic: f64,
}

impl CePowers {
    pub fn as_array(&self) -> [f64; 4] {
        [self.lse_uar, self.lse_nouar, self.perfect, self.isotropic]
    }
}

#[derive(Clone, Debug)]
pub struct CePoint {
    pub snr_db: f64,
    pub samples: Vec<CePowers>,
    pub failed: usize,
}

impl CePoint {
    pub fn mean(&self) -> CePowers {
        let n = self.samples.len().max(1) as f64;
        let mut m = CePowers::default();
        for s in &self.samples {
            m.lse_uar += s.lse_uar / n;
            m.lse_nouar += s.lse_nouar / n;
            m.perfect += s.perfect / n;
            m.isotropic += s.isotropic / n;
        }
        m
    }

    /// Mean and standard error of the paired difference `a − b`.
    pub fn paired_diff(
        &self,
        a: impl Fn(&CePowers) -> f64,
        b: impl Fn(&CePowers) -> f64,
    ) -> (f64, f64) {
        let d: Vec<f64> = self.samples.iter().map(|s| a(s) - b(s)).collect();
        let n = d.len() as f64;
        let mean = d.iter().sum::<f64>() / n;
        let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        (mean, (var / n).sqrt())
    }
}

/// Unit-power direction maximizing `Σ_k |h_kᵀ f|²`, scaled to `√p_t`.
pub fn sum_power_beamformer(h: &[Vec<Complex64>], p_t: f64) -> Result<Vec<Complex64>> {
    let n = h.first().map_or(0, Vec::len);
    let mut a = CMatrix::zeros(n, n);
    for hk in h {
        let c = vecops::conj(hk);
        a.add_assign_scaled(&CMatrix::outer(&c, &c), Complex64::new(1.0, 0.0));
    }
    let v = eig_herm_max(&a)?.vector;
    Ok(vecops::scale(&v, p_t.sqrt()))
}

pub fn sum_received_power(f: &[Complex64], h: &[Vec<Complex64>]) -> f64 {
    h.iter().map(|hk| vecops::dot_t(hk, f).norm_sqr()).sum()
}

/// One trial at average backscattered SNR `p_t a₁² β̄² / σ²_wR`.
///
/// The UAR-free estimate uses the same geometry and CE noise with the
/// ambient reflection removed, so the two LSE curves are paired.
pub fn ce_trial<R: Rng + Clone>(base: &SimConfig, snr_db: f64, rng: &mut R) -> Result<CePowers> {
    let mut cfg = base.clone();
    let real = draw_realization(&cfg, rng)?;
    let b = real.mean_beta();
    cfg.sigma2_wr = cfg.p_t * cfg.a1 * cfg.a1 * b * b / 10f64.powf(snr_db / 10.0);

    let noise_rng = rng.clone();
    let with_uar = run_ce_with(&cfg, &real, UarHandling::Suppress, &mut noise_rng.clone())?;
    let mut clean = real.clone();
    clean.h_u = CMatrix::zeros(clean.h_u.rows(), clean.h_u.cols());
    let without = run_ce_with(&cfg, &clean, UarHandling::Ignore, &mut noise_rng.clone())?;

    let h = &real.h;
    let power = |est: &[Vec<Complex64>]| -> Result<f64> {
        Ok(sum_received_power(&sum_power_beamformer(est, cfg.p_t)?, h))
    };
    Ok(CePowers {
        lse_uar: power(&with_uar.h_hat)?,
        lse_nouar: power(&without.h_hat)?,
        perfect: power(h)?,
        isotropic: cfg.p_t / cfg.n_antennas as f64
            * h.iter().map(|x| vecops::norm_sqr(x)).sum::<f64>(),
    })
}

/// Runs `trials` trials per SNR point. Trial `t` uses the same generator at
/// every point, so the points differ only in the noise level.
pub fn validate_ce_sweep(
    base: &SimConfig,
    snr_values: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<CePoint>> {
    base.validate()?;
    Ok(snr_values
        .iter()
        .map(|&snr_db| {
            let results: Vec<Result<CePowers>> = (0..trials)
                .into_par_iter()
                .map(|t| ce_trial(base, snr_db, &mut trial_rng(seed, 0, t as u64)))
                .collect();
            let failed = results.iter().filter(|r| r.is_err()).count();
            for e in results.iter().filter_map(|r| r.as_ref().err()) {
                log::warn!("CE trial at {snr_db} dB failed: {e}");
            }
            CePoint {
                snr_db,
                samples: results.into_iter().flatten().collect(),
                failed,
            }
        })
        .collect())
}
