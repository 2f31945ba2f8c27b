use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::channel::{draw_realization, ChannelRealization, SimConfig};
use crate::error::{Error, Result};
use crate::estimation::run_ce;
use crate::numerics::Complex64;
use crate::optimize::{best_asymptotic, joint_design, joint_design_from, AsymptoticDesign};
use crate::trx::{
    detector_mmse, detector_zf, isotropic_precoder, precoder_benchmark, rate_report, TrxDesign,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Design {
    Joint,
    Asymptotic,
    Benchmark,
    PerfectCsi,
    Isotropic,
}

impl Design {
    pub const ALL: [Design; 5] = [
        Design::Joint,
        Design::Asymptotic,
        Design::Benchmark,
        Design::PerfectCsi,
        Design::Isotropic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Design::Joint => "joint",
            Design::Asymptotic => "asymptotic",
            Design::Benchmark => "benchmark",
            Design::PerfectCsi => "perfect_csi",
            Design::Isotropic => "isotropic",
        }
    }

    fn stream(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Design {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Design::ALL
            .into_iter()
            .find(|d| d.name() == s.trim())
            .ok_or_else(|| Error::Parameter(format!("unknown design {s:?}")))
    }
}

/// Outcome of one design on one trial, scored on the true channels.
#[derive(Clone, Debug)]
pub struct DesignOutcome {
    pub design: TrxDesign,
    pub min_rate: f64,
    pub sigma_r: f64,
    /// Outer iterations (joint designs only; 0 otherwise).
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug)]
pub struct TrialResult {
    pub realization: ChannelRealization,
    pub h_hat: Vec<Vec<Complex64>>,
    pub outcomes: Vec<(Design, Result<DesignOutcome>)>,
}

impl TrialResult {
    pub fn outcome(&self, d: Design) -> Option<&Result<DesignOutcome>> {
        self.outcomes.iter().find(|(x, _)| *x == d).map(|(_, r)| r)
    }
}

/// Per-trial overrides applied after the realization is drawn.
#[derive(Clone, Copy, Debug, Default)]
pub struct TrialOverrides {
    /// Sets `σ²_wR = p_t β̄² / 10^(snr/10)` with `β̄` the mean path gain.
    pub snr_db: Option<f64>,
}

/// Deterministic generator for `(point, trial)` of a run seeded by `seed`.
pub fn trial_rng(seed: u64, point: u64, trial: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream((point << 32) | trial);
    rng
}

fn derived_rng(base: u64, design: Design) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(base);
    rng.set_stream(design.stream());
    rng
}

fn score(
    design: TrxDesign,
    h: &[Vec<Complex64>],
    cfg: &SimConfig,
    iterations: usize,
    converged: bool,
) -> Result<DesignOutcome> {
    let report = rate_report(&design.f, &design.g, h, cfg)?;
    Ok(DesignOutcome {
        design,
        min_rate: report.min_rate,
        sigma_r: report.sigma_r,
        iterations,
        converged,
    })
}

/// `f_B` with the ZF detector, or the MMSE detector when `M > N`.
pub fn benchmark_design(
    h_hat: &[Vec<Complex64>],
    beta: &[f64],
    cfg: &SimConfig,
) -> Result<TrxDesign> {
    let f = precoder_benchmark(h_hat, beta, cfg)?;
    let g = if h_hat.len() <= cfg.n_antennas {
        match detector_zf(h_hat) {
            Ok(g) => g,
            Err(e) => {
                log::warn!("benchmark ZF detector unavailable ({e}); using MMSE");
                detector_mmse(&f, h_hat, cfg)?
            }
        }
    } else {
        detector_mmse(&f, h_hat, cfg)?
    };
    Ok(TrxDesign { f, g })
}

/// Draws a realization, runs CE, builds each requested design from the
/// estimates (the perfect-CSI design uses the true channels) and scores it
/// on the true channels.
///
/// The asymptotic design doubles as the joint design's starting point, so
/// both see the same randomization draws.
pub fn run_trial<R: Rng + ?Sized>(
    base: &SimConfig,
    designs: &[Design],
    overrides: TrialOverrides,
    rng: &mut R,
) -> Result<TrialResult> {
    let mut cfg = base.clone();
    let realization = draw_realization(&cfg, rng)?;
    if let Some(snr) = overrides.snr_db {
        let b = realization.mean_beta();
        cfg.sigma2_wr = cfg.p_t * b * b / 10f64.powf(snr / 10.0);
    }
    let ce = run_ce(&cfg, &realization, rng)?;
    let design_seed: u64 = rng.gen();
    let h_hat = ce.h_hat;
    let h = &realization.h;

    let mut asym: Option<Result<AsymptoticDesign>> = None;
    let get_asym = |asym: &mut Option<Result<AsymptoticDesign>>| -> Result<AsymptoticDesign> {
        asym.get_or_insert_with(|| {
            best_asymptotic(
                &h_hat,
                &cfg,
                &mut derived_rng(design_seed, Design::Asymptotic),
            )
        })
        .as_ref()
        .map(Clone::clone)
        .map_err(|e| Error::Parameter(format!("asymptotic design failed: {e}")))
    };

    let mut outcomes = Vec::with_capacity(designs.len());
    for &d in designs {
        let out = match d {
            Design::Asymptotic => {
                get_asym(&mut asym).and_then(|a| score(a.design, h, &cfg, 0, false))
            }
            Design::Joint => get_asym(&mut asym).and_then(|a| {
                let j = joint_design_from(
                    &a.design,
                    &h_hat,
                    &cfg,
                    &mut derived_rng(design_seed, Design::Joint),
                )?;
                score(j.design, h, &cfg, j.iterations, j.converged)
            }),
            Design::PerfectCsi => {
                joint_design(h, &cfg, &mut derived_rng(design_seed, Design::PerfectCsi))
                    .and_then(|j| score(j.design, h, &cfg, j.iterations, j.converged))
            }
            Design::Benchmark => benchmark_design(&h_hat, &realization.beta, &cfg)
                .and_then(|b| score(b, h, &cfg, 0, false)),
            Design::Isotropic => {
                let f = isotropic_precoder(cfg.n_antennas, cfg.p_t);
                detector_mmse(&f, &h_hat, &cfg)
                    .and_then(|g| score(TrxDesign { f, g }, h, &cfg, 0, false))
            }
        };
        if let Err(e) = &out {
            log::warn!("design {d} failed: {e}");
        }
        outcomes.push((d, out));
    }
    Ok(TrialResult {
        realization,
        h_hat,
        outcomes,
    })
}
