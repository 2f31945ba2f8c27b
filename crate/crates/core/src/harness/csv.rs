//! CSV emission. Every file starts with `#` comment lines (the first one
//! carries a timestamp), followed by a header row and data rows. Everything
//! after the first line is a deterministic function of config and seed.

use std::fmt::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use super::ce_validation::CePoint;
use super::sweep::{GridRecord, SweepRecord, SweepSpec};
use super::trial::Design;
use crate::error::Result;

pub const CE_COLUMNS: [&str; 5] = [
    "snr_db",
    "sum_rx_power_lse_uar",
    "sum_rx_power_lse_nouar",
    "sum_rx_power_perfect",
    "sum_rx_power_isotropic",
];

fn stamp(kind: &str) -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    format!("# bscsim {kind} generated_unix={secs}\n")
}

fn geometric_mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x.ln(), n + 1));
    (sum / n as f64).exp()
}

pub fn ce_validation_csv(points: &[CePoint], trials: usize, seed: u64) -> String {
    let mut s = stamp("validate-ce");
    let _ = writeln!(s, "# trials={trials} seed={seed} unit=W");
    s.push_str(&CE_COLUMNS.join(","));
    s.push('\n');
    for p in points {
        let m = p.mean();
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            p.snr_db, m.lse_uar, m.lse_nouar, m.perfect, m.isotropic
        );
    }
    s
}

/// Column names of a sweep CSV for the given designs.
pub fn sweep_columns(param: &str, designs: &[Design]) -> Vec<String> {
    let mut cols = vec![param.to_string(), "trials".into(), "seed".into()];
    for d in designs {
        for stat in ["min_rate", "sigma_r", "iterations", "converged", "failed"] {
            cols.push(format!("{d}_{stat}"));
        }
    }
    if designs.contains(&Design::Joint) {
        for d in designs.iter().filter(|d| **d != Design::Joint) {
            cols.push(format!("ratio_joint_{d}"));
        }
    }
    cols
}

/// Sweep table; the header comments give the geometric mean over points of
/// each `ratio_joint_*` column.
pub fn sweep_csv(spec: &SweepSpec, records: &[SweepRecord]) -> String {
    let mut s = stamp("sweep");
    let _ = writeln!(
        s,
        "# param={} trials={} seed={}",
        spec.param, spec.trials, spec.seed
    );
    let has_joint = spec.designs.contains(&Design::Joint);
    let others: Vec<Design> = spec
        .designs
        .iter()
        .copied()
        .filter(|d| *d != Design::Joint)
        .collect();
    if has_joint {
        for d in &others {
            let g = geometric_mean(records.iter().filter_map(|r| r.ratio(Design::Joint, *d)));
            let _ = writeln!(s, "# geometric_mean ratio_joint_{d}={g}");
        }
    }
    s.push_str(&sweep_columns(spec.param.name(), &spec.designs).join(","));
    s.push('\n');
    for r in records {
        let mut row = vec![
            r.value.to_string(),
            r.trials.to_string(),
            r.seed.to_string(),
        ];
        for (_, st) in &r.stats {
            row.push(st.mean_min_rate.to_string());
            row.push(st.mean_sigma_r.to_string());
            row.push(st.mean_iterations.to_string());
            row.push(st.converged_fraction.to_string());
            row.push(st.failed.to_string());
        }
        if has_joint {
            for d in &others {
                row.push(
                    r.ratio(Design::Joint, *d)
                        .map_or("nan".into(), |x| x.to_string()),
                );
            }
        }
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub const GRID_COLUMNS: [&str; 9] = [
    "tau_c0",
    "tau_ck",
    "design",
    "min_rate",
    "sigma_r",
    "iterations",
    "converged",
    "failed",
    "trials",
];

/// Long format: one row per grid cell and design.
pub fn grid_csv(records: &[GridRecord]) -> String {
    let mut s = stamp("grid-ce-time");
    if let Some(r) = records.first() {
        let _ = writeln!(
            s,
            "# trials={} seed={} fractions of the coherence block",
            r.trials, r.seed
        );
    }
    s.push_str(&GRID_COLUMNS.join(","));
    s.push('\n');
    for r in records {
        for (d, st) in &r.stats {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                r.tau_c0,
                r.tau_ck,
                d,
                st.mean_min_rate,
                st.mean_sigma_r,
                st.mean_iterations,
                st.converged_fraction,
                st.failed,
                r.trials
            );
        }
    }
    s
}

pub fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
