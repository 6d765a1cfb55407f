//! `peace`: run experiments, sweeps and designs from the command line.
//!
//! Exit codes: 0 ok, 1 config error, 2 runtime error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use peace_core::config::{ExperimentConfig, Sweep, SweepParam};
use peace_core::design_opt::{complexity_design, Complexity, GeneralOptions};
use peace_core::env::rng;
use peace_core::experiment::{metrics_csv, run_experiment, summary_csv};
use peace_core::instance_file::parse_instance;
use peace_core::{selftest, Error};

#[derive(Parser, Debug)]
#[command(name = "peace", version, about = "Gaussian-width designs and pure-exploration bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// Config file; defaults apply to anything it leaves out.
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Metrics CSV path; the summary goes next to it as <stem>.summary.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override one config key, e.g. --set gap=0.1. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Matching side 14, 26 path layers, 10^6 linear-bandit items.
    #[arg(long)]
    paper_scale: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the experiment a config file describes.
    Run(Common),
    /// Run a config at several values of one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = ["gap", "n_items", "budget"])]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Print a ρ- or γ-minimizing design for an instance file.
    Design {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = Objective::Rho)]
        objective: Objective,
        #[arg(long, default_value_t = 2000)]
        n_mc: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the numerical property checks.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Objective {
    Rho,
    Gamma,
}

fn load_config(c: &Common) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
            ExperimentConfig::parse(&text).with_context(|| format!("in {}", p.display()))?
        }
        None => ExperimentConfig::default(),
    };
    if c.paper_scale {
        cfg.side = 14;
        cfg.layers = 26;
        cfg.n_items = 1_000_000;
    }
    for kv in &c.sets {
        let Some((k, v)) = kv.split_once('=') else {
            return Err(Error::Config(format!("--set expects KEY=VALUE, got '{kv}'")).into());
        };
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(t) = c.trials {
        cfg.trials = t;
    }
    if let Some(o) = &c.out {
        cfg.out = Some(o.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write(path: &Path, body: &str) -> anyhow::Result<()> {
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

fn summary_path(metrics: &Path) -> PathBuf {
    metrics.with_extension("summary.csv")
}

fn experiment(cfg: &ExperimentConfig) -> anyhow::Result<()> {
    let cells = run_experiment(cfg)?;
    let metrics = metrics_csv(&cells)?;
    let summary = summary_csv(cfg, &cells)?;
    match &cfg.out {
        Some(p) => {
            write(p, &metrics)?;
            write(&summary_path(p), &summary)?;
        }
        None => {
            print!("{metrics}");
            eprint!("{summary}");
        }
    }
    Ok(())
}

fn design(instance: &Path, objective: Objective, n_mc: usize, seed: u64, out: Option<&Path>) -> anyhow::Result<()> {
    let text =
        fs::read_to_string(instance).map_err(|e| Error::Config(format!("cannot read {}: {e}", instance.display())))?;
    let inst = parse_instance(&text)?;
    let which = match objective {
        Objective::Rho => Complexity::Rho,
        Objective::Gamma => Complexity::Gamma,
    };
    let mut r = rng::stream(seed, &[0xde5]);
    let (d, value) = complexity_design(&inst, which, &GeneralOptions::default(), n_mc, &mut r)?;
    let mut body = String::from("arm,weight\n");
    for (i, w) in d.weights().iter().enumerate() {
        body.push_str(&format!("{i},{w}\n"));
    }
    match out {
        Some(p) => write(p, &body)?,
        None => print!("{body}"),
    }
    eprintln!("{objective:?} = {value}");
    Ok(())
}

fn selftest(seed: u64) -> anyhow::Result<()> {
    let checks = selftest::run(seed)?;
    for c in &checks {
        println!("{} {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        bail!("{failed} check(s) failed");
    }
    Ok(())
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run(c) => experiment(&load_config(&c)?),
        Command::Sweep { common, param, values } => {
            let mut cfg = load_config(&common)?;
            cfg.sweep = Some(Sweep {
                param: SweepParam::from_name(&param)?,
                values,
            });
            cfg.validate()?;
            experiment(&cfg)
        }
        Command::Design {
            instance,
            objective,
            n_mc,
            seed,
            out,
        } => design(&instance, objective, n_mc, seed, out.as_deref()),
        Command::Selftest { seed } => selftest(seed),
    }
}

fn is_config_error(e: &anyhow::Error) -> bool {
    matches!(
        e.downcast_ref::<Error>(),
        Some(Error::Config(_) | Error::InvalidArgument(_) | Error::DegenerateInstance(_) | Error::InfeasibleStructure(_))
    )
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_config_error(&e) { 1 } else { 2 })
        }
    }
}
