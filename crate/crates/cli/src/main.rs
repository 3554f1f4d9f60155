use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wpcn_aoi::experiment::table1::{table1_records, TABLE1_COLUMNS};
use wpcn_aoi::experiment::{self, load_config, preset, ConfigError, ExperimentConfig, PRESET_NAMES};
use wpcn_aoi::selftest::run_selftest;
use wpcn_aoi::{DerivedParams, ModelError};

#[derive(Parser)]
#[command(name = "wpcn-aoi", version, about = "Age of information in wireless-powered relay links")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one config file or preset and write CSV rows.
    Run(Source),
    /// Shorthand for `run --preset NAME`.
    Preset {
        name: String,
        #[command(flatten)]
        opts: Opts,
    },
    /// Evaluate the limiting-case table at one parameter point.
    Table1(Source),
    /// Run the built-in invariant suite.
    Selftest {
        /// Smaller workloads.
        #[arg(long)]
        fast: bool,
    },
}

#[derive(Args)]
struct Source {
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Args)]
struct Opts {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replications: Option<usize>,
    /// 1e5 deliveries per replication for presets.
    #[arg(long)]
    fast: bool,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Skip the simulation, analysis columns only.
    #[arg(long)]
    no_sim: bool,
}

enum Failure {
    Model(ModelError),
    Config(String),
    Io(String),
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        Failure::Model(e)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn resolve(config: Option<&PathBuf>, preset_name: Option<&str>, opts: &Opts) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match (config, preset_name) {
        (Some(path), _) => load_config(path)?,
        (None, Some(name)) => preset(name, opts.fast).ok_or_else(|| {
            Failure::Config(format!("unknown preset {name:?}, expected one of {}", PRESET_NAMES.join(", ")))
        })?,
        (None, None) => ExperimentConfig::default(),
    };
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    if let Some(r) = opts.replications {
        if r < 2 {
            return Err(Failure::Config("--replications must be at least 2".into()));
        }
        cfg.replications = r;
    }
    if opts.no_sim {
        cfg.simulate = false;
    }
    if opts.out.is_some() {
        cfg.out = opts.out.clone();
    }
    Ok(cfg)
}

fn sink(path: Option<&PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_run(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let total = cfg.grid().len() * cfg.schemes.len();
    let mut done = 0;
    let rows = experiment::run_experiment(cfg, |row| {
        done += 1;
        eprintln!("[{done}/{total}] point {} {}", row.point, row.scheme.as_str());
    })?;
    let out = sink(cfg.out.as_ref())?;
    experiment::write_csv(out, &experiment::header_comment(cfg), &rows).map_err(|e| Failure::Io(e.to_string()))
}

fn cmd_table1(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let d = DerivedParams::from_params(&cfg.params)?.with_overrides(&cfg.overrides)?;
    let records = table1_records(&d)?;
    let out = sink(cfg.out.as_ref())?;
    experiment::write_table(out, &experiment::header_comment(cfg), &TABLE1_COLUMNS, records.into_iter())
        .map_err(|e| Failure::Io(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(s) => resolve(s.config.as_ref(), s.preset.as_deref(), &s.opts).and_then(|c| cmd_run(&c)),
        Command::Preset { name, opts } => resolve(None, Some(name), opts).and_then(|c| cmd_run(&c)),
        Command::Table1(s) => resolve(s.config.as_ref(), s.preset.as_deref(), &s.opts).and_then(|c| cmd_table1(&c)),
        Command::Selftest { fast } => {
            let report = run_selftest(*fast);
            for item in &report.items {
                println!("{} {} {}", if item.pass { "PASS" } else { "FAIL" }, item.name, item.detail);
            }
            return if report.pass() { ExitCode::SUCCESS } else { ExitCode::from(3) };
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Model(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Io(e)) => {
            eprintln!("io error: {e}");
            ExitCode::from(1)
        }
    }
}
