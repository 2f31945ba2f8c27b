use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bscsim::channel::SimConfig;
use bscsim::harness::{
    ce_validation_csv, grid_csv, linspace, parse_list, run_ce_time_grid, run_sweep, run_trial,
    sweep_csv, trial_rng, validate_ce_sweep, write_output, Design, SweepParam, SweepSpec,
    TrialOverrides,
};
use bscsim::{Error, Result};

#[derive(Parser)]
#[command(
    name = "bscsim",
    version,
    about = "Multi-tag backscatter link simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Config file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Config override, e.g. `--set N=8`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> Result<SimConfig> {
        let mut cfg = match &self.config {
            Some(p) => SimConfig::load(p)?,
            None => SimConfig::default(),
        };
        for kv in &self.overrides {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parameter(format!("expected KEY=VALUE, got {kv:?}")))?;
            cfg.set(k.trim(), v).map_err(Error::Parameter)?;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sum received power versus SNR for estimated and true channels.
    ValidateCe {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 500)]
        trials: usize,
        /// SNR points in dB; defaults to 20 points from 0 to 40.
        #[arg(long)]
        values: Option<String>,
    },
    /// Sweeps one parameter and compares designs.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// One of L, N, M, snr_db, sigma2_HU_dbm, tau_c_fraction.
        #[arg(long)]
        param: String,
        #[arg(long)]
        values: String,
        #[arg(long, default_value = "joint,asymptotic,benchmark")]
        designs: String,
    },
    /// Grid over the two CE sub-phase fractions (long-format CSV).
    GridCeTime {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Fractions of the coherence block used on both axes.
        #[arg(long)]
        values: String,
        #[arg(long, default_value = "joint")]
        designs: String,
    },
    /// Runs one trial and prints per-design rates.
    SingleTrial {
        #[command(flatten)]
        common: Common,
        #[arg(
            long,
            default_value = "joint,asymptotic,benchmark,perfect_csi,isotropic"
        )]
        designs: String,
    },
}

fn floats(s: &str) -> Result<Vec<f64>> {
    parse_list(s).map_err(|e| Error::Parameter(format!("bad value list {s:?}: {e}")))
}

fn designs(s: &str) -> Result<Vec<Design>> {
    parse_list(s)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::ValidateCe {
            common,
            trials,
            values,
        } => {
            let cfg = common.config()?;
            let snr = match values {
                Some(v) => floats(&v)?,
                None => linspace(0.0, 40.0, 20),
            };
            let points = validate_ce_sweep(&cfg, &snr, trials, cfg.seed)?;
            write_output(
                common.out.as_deref(),
                &ce_validation_csv(&points, trials, cfg.seed),
            )
        }
        Command::Sweep {
            common,
            trials,
            param,
            values,
            designs: d,
        } => {
            let cfg = common.config()?;
            let spec = SweepSpec {
                param: param.parse::<SweepParam>()?,
                values: floats(&values)?,
                trials,
                designs: designs(&d)?,
                seed: cfg.seed,
            };
            let records = run_sweep(&spec, &cfg)?;
            write_output(common.out.as_deref(), &sweep_csv(&spec, &records))
        }
        Command::GridCeTime {
            common,
            trials,
            values,
            designs: d,
        } => {
            let cfg = common.config()?;
            let records =
                run_ce_time_grid(&cfg, &floats(&values)?, &designs(&d)?, trials, cfg.seed)?;
            write_output(common.out.as_deref(), &grid_csv(&records))
        }
        Command::SingleTrial { common, designs: d } => {
            let cfg = common.config()?;
            let r = run_trial(
                &cfg,
                &designs(&d)?,
                TrialOverrides::default(),
                &mut trial_rng(cfg.seed, 0, 0),
            )?;
            let mut text = String::from("design,min_rate,sigma_r,iterations,converged,power\n");
            for (d, o) in &r.outcomes {
                match o {
                    Ok(o) => text.push_str(&format!(
                        "{d},{},{},{},{},{}\n",
                        o.min_rate,
                        o.sigma_r,
                        o.iterations,
                        o.converged,
                        o.design.power()
                    )),
                    Err(e) => log::error!("{d}: {e}"),
                }
            }
            write_output(common.out.as_deref(), &text)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
