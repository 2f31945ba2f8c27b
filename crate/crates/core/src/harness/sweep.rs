use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::trial::{run_trial, trial_rng, Design, TrialOverrides, TrialResult};
use crate::channel::{dbm_to_watt, SimConfig};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    FieldSide,
    Antennas,
    Tags,
    SnrDb,
    Sigma2HuDbm,
    /// Total CE time as a fraction of the block, split evenly over the
    /// `M + 1` sub-phase slots.
    TauCFraction,
}

impl SweepParam {
    pub const ALL: [SweepParam; 6] = [
        SweepParam::FieldSide,
        SweepParam::Antennas,
        SweepParam::Tags,
        SweepParam::SnrDb,
        SweepParam::Sigma2HuDbm,
        SweepParam::TauCFraction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::FieldSide => "L",
            SweepParam::Antennas => "N",
            SweepParam::Tags => "M",
            SweepParam::SnrDb => "snr_db",
            SweepParam::Sigma2HuDbm => "sigma2_HU_dbm",
            SweepParam::TauCFraction => "tau_c_fraction",
        }
    }

    fn is_integer(self) -> bool {
        matches!(self, SweepParam::Antennas | SweepParam::Tags)
    }

    /// Config for one sweep point plus any per-trial override.
    pub fn apply(self, base: &SimConfig, value: f64) -> Result<(SimConfig, TrialOverrides)> {
        let mut cfg = base.clone();
        let mut ov = TrialOverrides::default();
        if self.is_integer() && (value.fract() != 0.0 || value < 1.0) {
            return Err(Error::Parameter(format!(
                "{} needs positive integer values, got {value}",
                self.name()
            )));
        }
        match self {
            SweepParam::FieldSide => cfg.field_side = value,
            SweepParam::Antennas => cfg.n_antennas = value as usize,
            SweepParam::Tags => cfg.n_tags = value as usize,
            SweepParam::SnrDb => ov.snr_db = Some(value),
            SweepParam::Sigma2HuDbm => cfg.sigma2_hu = dbm_to_watt(value),
            SweepParam::TauCFraction => {
                let slot = value * cfg.tau / (cfg.n_tags + 1) as f64;
                cfg.tau_c0 = Some(slot);
                cfg.tau_ck = Some(slot);
            }
        }
        cfg.validate()?;
        Ok((cfg, ov))
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepParam::ALL
            .into_iter()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| Error::Parameter(format!("unknown sweep parameter {s:?}")))
    }
}

#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub trials: usize,
    pub designs: Vec<Design>,
    pub seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() || self.trials == 0 || self.designs.is_empty() {
            return Err(Error::Parameter(
                "sweep needs values, designs and at least one trial".into(),
            ));
        }
        if self.values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Parameter(
                "sweep values must be strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

/// Aggregates of one design at one sweep point. Means run over the valid
/// trials only.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DesignStats {
    pub valid: usize,
    pub failed: usize,
    pub mean_min_rate: f64,
    pub mean_sigma_r: f64,
    pub mean_iterations: f64,
    pub converged_fraction: f64,
}

#[derive(Clone, Debug)]
pub struct SweepRecord {
    pub value: f64,
    pub trials: usize,
    pub seed: u64,
    pub stats: Vec<(Design, DesignStats)>,
    /// Trials whose realization or CE step failed before any design ran.
    pub failed_trials: usize,
}

impl SweepRecord {
    pub fn get(&self, d: Design) -> Option<&DesignStats> {
        self.stats.iter().find(|(x, _)| *x == d).map(|(_, s)| s)
    }

    /// `mean_min_rate(joint) / mean_min_rate(other)`, when both are present.
    pub fn ratio(&self, num: Design, den: Design) -> Option<f64> {
        Some(self.get(num)?.mean_min_rate / self.get(den)?.mean_min_rate)
    }
}

pub(crate) fn aggregate(
    designs: &[Design],
    results: &[Result<TrialResult>],
) -> (Vec<(Design, DesignStats)>, usize) {
    let failed_trials = results.iter().filter(|r| r.is_err()).count();
    let stats = designs
        .iter()
        .map(|&d| {
            let mut s = DesignStats::default();
            for r in results.iter().flatten() {
                match r.outcome(d) {
                    Some(Ok(o)) => {
                        s.valid += 1;
                        s.mean_min_rate += o.min_rate;
                        s.mean_sigma_r += o.sigma_r;
                        s.mean_iterations += o.iterations as f64;
                        s.converged_fraction += o.converged as u8 as f64;
                    }
                    _ => s.failed += 1,
                }
            }
            s.failed += failed_trials;
            if s.valid > 0 {
                let n = s.valid as f64;
                s.mean_min_rate /= n;
                s.mean_sigma_r /= n;
                s.mean_iterations /= n;
                s.converged_fraction /= n;
            } else {
                s.mean_min_rate = f64::NAN;
                s.mean_sigma_r = f64::NAN;
                s.mean_iterations = f64::NAN;
                s.converged_fraction = f64::NAN;
            }
            (d, s)
        })
        .collect();
    (stats, failed_trials)
}

/// Runs `trials` trials for sweep point `point`, in parallel, returned in
/// trial order.
pub fn run_point(
    cfg: &SimConfig,
    ov: TrialOverrides,
    designs: &[Design],
    trials: usize,
    seed: u64,
    point: u64,
) -> Vec<Result<TrialResult>> {
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let r = run_trial(cfg, designs, ov, &mut trial_rng(seed, point, t as u64));
            if let Err(e) = &r {
                log::warn!("point {point} trial {t} failed: {e}");
            }
            r
        })
        .collect()
}

pub fn run_sweep(spec: &SweepSpec, base: &SimConfig) -> Result<Vec<SweepRecord>> {
    spec.validate()?;
    spec.values
        .iter()
        .enumerate()
        .map(|(p, &value)| {
            let (cfg, ov) = spec.param.apply(base, value)?;
            log::info!("{} = {value}: {} trials", spec.param, spec.trials);
            let results = run_point(&cfg, ov, &spec.designs, spec.trials, spec.seed, p as u64);
            let (stats, failed_trials) = aggregate(&spec.designs, &results);
            Ok(SweepRecord {
                value,
                trials: spec.trials,
                seed: spec.seed,
                stats,
                failed_trials,
            })
        })
        .collect()
}

/// One cell of the CE-time grid: sub-phase (1a) and per-tag (1b) fractions.
#[derive(Clone, Debug)]
pub struct GridRecord {
    pub tau_c0: f64,
    pub tau_ck: f64,
    pub trials: usize,
    pub seed: u64,
    pub stats: Vec<(Design, DesignStats)>,
}

/// Sweeps `(τ_c0, τ_ck)` over `values × values`; cells whose total CE time
/// exceeds the block are skipped.
pub fn run_ce_time_grid(
    base: &SimConfig,
    values: &[f64],
    designs: &[Design],
    trials: usize,
    seed: u64,
) -> Result<Vec<GridRecord>> {
    if values.is_empty() || trials == 0 || designs.is_empty() {
        return Err(Error::Parameter(
            "grid needs values, designs and at least one trial".into(),
        ));
    }
    let mut out = Vec::new();
    for (i, &c0) in values.iter().enumerate() {
        for (j, &ck) in values.iter().enumerate() {
            let cfg = SimConfig {
                tau_c0: Some(c0 * base.tau),
                tau_ck: Some(ck * base.tau),
                ..base.clone()
            };
            if let Err(e) = cfg.validate() {
                log::info!("skipping tau_c0={c0} tau_ck={ck}: {e}");
                continue;
            }
            let point = (i * values.len() + j) as u64;
            let results = run_point(
                &cfg,
                TrialOverrides::default(),
                designs,
                trials,
                seed,
                point,
            );
            let (stats, _) = aggregate(designs, &results);
            out.push(GridRecord {
                tau_c0: c0,
                tau_ck: ck,
                trials,
                seed,
                stats,
            });
        }
    }
    Ok(out)
}
