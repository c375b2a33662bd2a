//! `pathwave` command-line driver.
//!
//! Every run writes its outputs plus a `manifest.json` echoing the fully resolved
//! configuration; passing that manifest back as `--config` reproduces the run.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use pathwave::io::{json_bytes, write_atomic, DEFAULT_DIGITS, FULL_DIGITS};
use pathwave::Error;

use commands::Outputs;
use config::{Format, RescaleConfig, SimulateConfig, StationaryConfig, SweepConfig, WavespeedConfig, ENVELOPE_KEYS};

#[derive(Parser)]
#[command(name = "pathwave", version, about = "Signal propagation in feed-forward signaling cascades")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration (a previous run's manifest.json also works).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the ensemble seed of stochastic runs.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write 17 significant digits instead of 10.
    #[arg(long, global = true)]
    full_precision: bool,
    /// Overrides the number of realizations per sigma level.
    #[arg(long, global = true)]
    realizations: Option<usize>,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Integrate pathways and write trajectories.
    Simulate,
    /// Stationary profiles and penetration depths.
    Stationary,
    /// Asymptotic wave speeds of uniform pathways.
    Wavespeed,
    /// Rescaled coordinates and original/rescaled wave metrics.
    Rescale,
    /// VISE/RISE statistics over lognormal ensembles.
    Sweep,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Stationary => "stationary",
            Command::Wavespeed => "wavespeed",
            Command::Rescale => "rescale",
            Command::Sweep => "sweep",
        }
    }
}

enum Failure {
    Config(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Run(e) if e.is_propagation_failure() => 3,
            Failure::Run(e) if e.is_numerical_failure() => 4,
            Failure::Run(
                Error::InvalidParams(_)
                | Error::Document(_)
                | Error::Json(_)
                | Error::Domain { .. }
                | Error::Separatrix { .. }
                | Error::BiasedDepth { .. }
                | Error::DivergentDepth
                | Error::TableRange { .. }
                | Error::DimensionMismatch { .. },
            ) => 2,
            Failure::Run(_) => 1,
        }
    }
}

struct Envelope {
    format: Format,
    digits: usize,
    body: Value,
}

fn read_config(cli: &Cli) -> Result<Envelope, Failure> {
    let mut doc = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<Value>(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
        }
        None => Value::Object(Map::new()),
    };
    let obj = doc.as_object_mut().ok_or_else(|| Failure::Config("configuration must be a JSON object".into()))?;
    let name = cli.command.name();
    if let Some(c) = obj.remove("command") {
        if c.as_str() != Some(name) {
            return Err(Failure::Config(format!("configuration is for command {c}, not \"{name}\"")));
        }
    }
    let format = match obj.remove("format") {
        Some(v) => serde_json::from_value(v).map_err(|e| Failure::Config(format!("format: {e}")))?,
        None => Format::Csv,
    };
    let digits = match obj.remove("digits") {
        Some(v) => serde_json::from_value::<usize>(v).map_err(|e| Failure::Config(format!("digits: {e}")))?,
        None => DEFAULT_DIGITS,
    };
    let format = cli.format.unwrap_or(format);
    let digits = if cli.full_precision { FULL_DIGITS } else { digits };
    if !(1..=FULL_DIGITS).contains(&digits) {
        return Err(Failure::Config(format!("digits must lie in 1..={FULL_DIGITS}")));
    }
    Ok(Envelope { format, digits, body: doc })
}

fn parse<C: DeserializeOwned>(body: Value) -> Result<C, Failure> {
    serde_json::from_value(body).map_err(|e| Failure::Config(e.to_string()))
}

fn manifest<C: Serialize>(command: Command, env: &Envelope, cfg: &C) -> Result<Value, Failure> {
    let mut v = serde_json::to_value(cfg).map_err(Error::from)?;
    let obj = v.as_object_mut().expect("configurations serialize to objects");
    let mut out = Map::new();
    out.insert(ENVELOPE_KEYS[0].into(), Value::from(command.name()));
    out.insert(ENVELOPE_KEYS[1].into(), serde_json::to_value(env.format).map_err(Error::from)?);
    out.insert(ENVELOPE_KEYS[2].into(), Value::from(env.digits));
    out.append(obj);
    Ok(Value::Object(out))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(format!("threads: {e}")))?;
    }
    let env = read_config(cli)?;
    let verbose = cli.verbose > 0;
    let mut out = Outputs::new(env.format, env.digits);
    let manifest = match cli.command {
        Command::Simulate => {
            let cfg: SimulateConfig = parse(env.body.clone())?;
            commands::simulate(&cfg, &mut out, verbose)?;
            manifest(cli.command, &env, &cfg)?
        }
        Command::Stationary => {
            let cfg: StationaryConfig = parse(env.body.clone())?;
            commands::stationary(&cfg, &mut out, verbose)?;
            manifest(cli.command, &env, &cfg)?
        }
        Command::Wavespeed => {
            let cfg: WavespeedConfig = parse(env.body.clone())?;
            commands::wavespeed(&cfg, &mut out, verbose)?;
            manifest(cli.command, &env, &cfg)?
        }
        Command::Rescale => {
            let mut cfg: RescaleConfig = parse(env.body.clone())?;
            if let (Some(seed), Some(s)) = (cli.seed, cfg.stochastic.as_mut()) {
                s.ensemble.seed = seed;
            }
            commands::rescale(&cfg, &mut out, verbose)?;
            manifest(cli.command, &env, &cfg)?
        }
        Command::Sweep => {
            let mut cfg: SweepConfig = parse(env.body.clone())?;
            if let Some(seed) = cli.seed {
                cfg.ensemble.seed = seed;
            }
            if let Some(r) = cli.realizations {
                cfg.ensemble.realizations = r;
            }
            commands::sweep(&cfg, &mut out, verbose)?;
            manifest(cli.command, &env, &cfg)?
        }
    };
    out.files.push(("manifest.json".into(), json_bytes(&manifest).map_err(Failure::Run)?));
    write_all(&cli.out, &out.files)?;
    if verbose {
        eprintln!("wrote {} files to {}", out.files.len(), cli.out.display());
    }
    Ok(())
}

fn write_all(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<(), Failure> {
    for (name, bytes) in files {
        write_atomic(&dir.join(name), bytes)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let code = f.exit_code();
            match f {
                Failure::Config(msg) => eprintln!("configuration error: {msg}"),
                Failure::Run(e) => eprintln!("error: {e}"),
            }
            ExitCode::from(code)
        }
    }
}
