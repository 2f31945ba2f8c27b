//! Low- and high-SNR asymptotic designs: SDR on SNR-weighted received
//! powers, Gaussian randomization, then the MMSE detector for the chosen
//! precoder.

use rand::Rng;

use super::randomize::randomize;
use super::sdr::{sdr_solve, SdrSolution};
use crate::channel::SimConfig;
use crate::error::{Error, Result};
use crate::numerics::{vecops, Complex64};
use crate::trx::{detector_mmse, rate_report, zf_unnormalized, RateReport, TrxDesign};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AsymptoticChoice {
    /// MRC-based SNR weights, suited to noise-limited links.
    Low,
    /// ZF-based SNR weights, suited to interference-limited links.
    High,
}

#[derive(Clone, Debug)]
pub struct AsymptoticDesign {
    pub choice: AsymptoticChoice,
    pub design: TrxDesign,
    pub sdr: SdrSolution,
    /// Randomized objective on the same scale as `sdr.p`.
    pub randomized: f64,
    /// Rates evaluated on the channel estimates.
    pub report: RateReport,
}

/// Per-tag SNR weights `γ̂_k`. Tags with a zero estimate get weight 1,
/// which the SDR ignores.
pub fn asymptotic_weights(
    choice: AsymptoticChoice,
    h_hat: &[Vec<Complex64>],
    cfg: &SimConfig,
) -> Result<Vec<f64>> {
    let noise = cfg.noise_bar();
    match choice {
        AsymptoticChoice::Low => Ok(h_hat
            .iter()
            .map(|h| {
                let w = vecops::norm_sqr(h) / noise;
                if w > 0.0 {
                    w
                } else {
                    1.0
                }
            })
            .collect()),
        AsymptoticChoice::High => {
            let gz = zf_unnormalized(h_hat)?;
            (0..gz.cols())
                .map(|k| {
                    let w = 1.0 / (noise * vecops::norm_sqr(&gz.column(k)));
                    if w.is_finite() && w > 0.0 {
                        Ok(w)
                    } else {
                        Err(Error::Conditioning(format!("ZF weight for tag {k} is {w}")))
                    }
                })
                .collect()
        }
    }
}

pub fn asymptotic_design<R: Rng + ?Sized>(
    choice: AsymptoticChoice,
    h_hat: &[Vec<Complex64>],
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<AsymptoticDesign> {
    let weights = asymptotic_weights(choice, h_hat, cfg)?;
    let sdr = sdr_solve(h_hat, &weights, cfg.p_t)?;
    let rand = randomize(&sdr.f, h_hat, &weights, cfg.k_samples(), cfg.p_t, rng)?;
    let g = detector_mmse(&rand.f, h_hat, cfg)?;
    let report = rate_report(&rand.f, &g, h_hat, cfg)?;
    Ok(AsymptoticDesign {
        choice,
        design: TrxDesign { f: rand.f, g },
        sdr,
        randomized: rand.objective,
        report,
    })
}

/// The better of the two designs by min-rate on the estimates. The high-SNR
/// design is only tried when `N ≥ M`; if it fails the low-SNR one is kept.
pub fn best_asymptotic<R: Rng + ?Sized>(
    h_hat: &[Vec<Complex64>],
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<AsymptoticDesign> {
    let low = asymptotic_design(AsymptoticChoice::Low, h_hat, cfg, rng)?;
    if h_hat.len() > cfg.n_antennas {
        return Ok(low);
    }
    match asymptotic_design(AsymptoticChoice::High, h_hat, cfg, rng) {
        Ok(high) if high.report.min_rate > low.report.min_rate => Ok(high),
        Ok(_) => Ok(low),
        Err(e) => {
            log::warn!("high-SNR design unavailable ({e}); using the low-SNR design");
            Ok(low)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::draw_realization;
    use crate::trx::detector_mrc;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_tag_choices_coincide_with_mrt_mrc() {
        let cfg = SimConfig {
            n_tags: 1,
            ..SimConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let real = draw_realization(&cfg, &mut rng).unwrap();
        let mrt = vecops::normalized(&vecops::conj(&real.h[0])).unwrap();
        for choice in [AsymptoticChoice::Low, AsymptoticChoice::High] {
            let d = asymptotic_design(choice, &real.h, &cfg, &mut rng).unwrap();
            assert!((vecops::dot_h(&mrt, &d.design.f).norm() - 1.0).abs() < 1e-9);
            let overlap =
                vecops::dot_h(&d.design.g.column(0), &detector_mrc(&real.h).column(0)).norm();
            assert!((overlap - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn both_choices_are_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for noise_scale in [1.0, 1e8] {
            let cfg = SimConfig {
                sigma2_wr: SimConfig::default().sigma2_wr * noise_scale,
                ..SimConfig::default()
            };
            let real = draw_realization(&cfg, &mut rng).unwrap();
            for choice in [AsymptoticChoice::Low, AsymptoticChoice::High] {
                let d = asymptotic_design(choice, &real.h, &cfg, &mut rng).unwrap();
                assert!(d.design.is_feasible(cfg.p_t, 1e-9));
                assert!(d.randomized <= d.sdr.upper_bound * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn high_choice_needs_enough_antennas() {
        let cfg = SimConfig {
            n_antennas: 2,
            n_tags: 3,
            ..SimConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let real = draw_realization(&cfg, &mut rng).unwrap();
        assert!(asymptotic_design(AsymptoticChoice::High, &real.h, &cfg, &mut rng).is_err());
        let best = best_asymptotic(&real.h, &cfg, &mut rng).unwrap();
        assert_eq!(best.choice, AsymptoticChoice::Low);
    }
}
