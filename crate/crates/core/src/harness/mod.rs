//! Monte Carlo experiment driver: trials, parameter sweeps, CE validation and
//! CSV output.

pub mod ce_validation;
pub mod csv;
pub mod sweep;
pub mod trial;

pub use ce_validation::{
    ce_trial, sum_power_beamformer, sum_received_power, validate_ce_sweep, CePoint, CePowers,
};
pub use csv::{
    ce_validation_csv, grid_csv, sweep_columns, sweep_csv, write_output, CE_COLUMNS, GRID_COLUMNS,
};
pub use sweep::{
    run_ce_time_grid, run_point, run_sweep, DesignStats, GridRecord, SweepParam, SweepRecord,
    SweepSpec,
};
pub use trial::{
    benchmark_design, run_trial, trial_rng, Design, DesignOutcome, TrialOverrides, TrialResult,
};

/// Parses a comma-separated list.
pub fn parse_list<T: std::str::FromStr>(s: &str) -> std::result::Result<Vec<T>, T::Err> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(str::parse)
        .collect()
}

/// `count` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}
