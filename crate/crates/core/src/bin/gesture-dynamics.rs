use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gesture_dynamics::batch::{self, RunConfig};
use gesture_dynamics::dynamics::{
    simulate_paper_euler, simulate_rk4, EulerOptions, GestureParams, Rk4Options, StopRule,
    DEFAULT_SAMPLE_PERIOD,
};
use gesture_dynamics::{Error, Result};

#[derive(Parser)]
#[command(name = "gesture-dynamics", version, about = "Fit, simulate and analyze constriction movements")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by all subcommands. Each overrides the config file.
#[derive(Args)]
struct Common {
    /// TOML file with run settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Onset/offset threshold as a fraction of peak speed.
    #[arg(long, global = true)]
    threshold: Option<f64>,
    /// Lowpass cutoff for velocity and acceleration (Hz).
    #[arg(long = "cutoff-hz", global = true)]
    cutoff_hz: Option<f64>,
    /// Sampling rate override (Hz).
    #[arg(long, global = true)]
    fs: Option<f64>,
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Inputs {
    /// Trajectory files or directories of *.csv files.
    #[arg(long = "input", short = 'i')]
    inputs: Vec<PathBuf>,
    /// Sidecar metadata table.
    #[arg(long)]
    metadata: Option<PathBuf>,
    /// auto, aperture or sensor.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Euler,
    Rk4,
}

#[derive(Subcommand)]
enum Command {
    /// Segment, fit, simulate and summarize every recording.
    Analyze(Inputs),
    /// Segment and fit only.
    Fit(Inputs),
    /// Simulate one movement from explicit parameters.
    Simulate {
        /// Target (mm).
        #[arg(long, allow_hyphen_values = true)]
        t: f64,
        /// Rapidity (1/sample).
        #[arg(long)]
        r: f64,
        #[arg(long, allow_hyphen_values = true)]
        x0: f64,
        /// Initial velocity (mm/sample).
        #[arg(long, allow_hyphen_values = true)]
        v0: f64,
        /// Stop once |v| falls below this; defaults to |v0|.
        #[arg(long)]
        stop_speed: Option<f64>,
        #[arg(long, value_enum, default_value = "euler")]
        method: Method,
        /// RK4 step as a fraction of a sample.
        #[arg(long, default_value_t = 0.001)]
        dt: f64,
    },
    /// Generate a synthetic corpus from the configured sweep.
    Synth,
    /// Re-emit summary and plot data from a saved per-token table.
    Report {
        #[arg(long)]
        tokens: PathBuf,
    },
}

fn config(common: &Common, inputs: Option<&Inputs>) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::from_toml_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(t) = common.threshold {
        cfg.threshold = t;
    }
    if let Some(fc) = common.cutoff_hz {
        cfg.filter.velocity_cutoff_hz = Some(fc);
        cfg.filter.acceleration_cutoff_hz = Some(fc);
    }
    if common.fs.is_some() {
        cfg.fs = common.fs;
    }
    if common.jobs.is_some() {
        cfg.jobs = common.jobs;
    }
    if let Some(o) = &common.out {
        cfg.out = o.clone();
    }
    if let Some(i) = inputs {
        if !i.inputs.is_empty() {
            cfg.inputs = i.inputs.clone();
        }
        if i.metadata.is_some() {
            cfg.metadata = i.metadata.clone();
        }
        if let Some(f) = &i.format {
            cfg.format = f.parse()?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Analyze(inputs) | Command::Fit(inputs) => {
            let mut cfg = config(&cli.common, Some(inputs))?;
            if cfg.inputs.is_empty() {
                return Err(Error::InvalidInput("no inputs given (use --input)".into()));
            }
            if matches!(cli.command, Command::Fit(_)) {
                cfg.stages.baseline = false;
                cfg.stages.simulate = false;
            }
            let bundle = batch::run_pipeline(&cfg)?;
            batch::emit(&bundle, &cfg.out)?;
            let c = &bundle.summary.counts;
            println!(
                "{} tokens: {} analyzed, {} excluded -> {}",
                c.ingested,
                c.analyzed,
                c.excluded_total,
                cfg.out.display()
            );
        }
        Command::Simulate {
            t,
            r,
            x0,
            v0,
            stop_speed,
            method,
            dt,
        } => {
            let cfg = config(&cli.common, None)?;
            let p = GestureParams::new(*t, *r)?;
            let stop = stop_speed.unwrap_or(v0.abs());
            let period = cfg.fs.map_or(DEFAULT_SAMPLE_PERIOD, |f| 1.0 / f);
            let traj = match method {
                Method::Euler => {
                    let opts = EulerOptions {
                        sample_period: period,
                        ..EulerOptions::stop_below(stop)
                    };
                    simulate_paper_euler(*x0, *v0, &p, &opts)?
                }
                Method::Rk4 => {
                    let opts = Rk4Options {
                        sample_period: period,
                        ..Rk4Options::new(*dt, StopRule::SpeedBelow(stop))
                    };
                    simulate_rk4(*x0, *v0, &p, &opts)?
                }
            };
            let path = cfg.out.join("simulation.csv");
            batch::write_trajectory(&traj, &path)?;
            println!("{} samples -> {}", traj.len(), path.display());
        }
        Command::Synth => {
            let cfg = config(&cli.common, None)?;
            let n = batch::generate_corpus(&cfg, &cfg.out)?;
            println!("{n} tokens -> {}", cfg.out.display());
        }
        Command::Report { tokens } => {
            let cfg = config(&cli.common, None)?;
            let bundle = batch::report_from_table(tokens, &cfg)?;
            batch::emit(&bundle, &cfg.out)?;
            println!("{} tokens -> {}", bundle.records.len(), cfg.out.display());
        }
    }
    Ok(())
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
