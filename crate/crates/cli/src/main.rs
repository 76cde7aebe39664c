use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use sglab::inequalities::{run_suite, SuiteReport};
use sglab::lab::{
    emit_report, emit_run, parse_config, run_experiment, ExperimentSpec, ParsedConfig, RunConfig,
};
use sglab::spectral::{self, load_field, save_field, DumpHeader, TorusGrid};
use sglab::transport::{run_simulation_with, ExitReason, RunOptions};

/// Semigeostrophic / Euler laboratory on the flat torus.
#[derive(Parser)]
#[command(name = "sglab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a single run configuration.
    Run(Common),
    /// Run an experiment specification and write its report.
    Experiment(Common),
    /// Run the randomized inequality suite.
    Check {
        #[command(flatten)]
        common: Common,
        /// Samples per checker and seed.
        #[arg(long, default_value_t = 20)]
        count: usize,
    },
    /// Write the initial density of a run configuration as a field dump.
    Dump(Common),
    /// Read a field dump and print its header and norms as JSON.
    Load { path: PathBuf },
}

/// Failures of the tool itself, as opposed to failed assertions.
const EXIT_INFRA: u8 = 3;
const EXIT_ASSERT: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INFRA)
        }
    }
}

fn dispatch(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Run(c) => run(&c),
        Command::Experiment(c) => experiment(&c),
        Command::Check { common, count } => check(&common, count),
        Command::Dump(c) => dump(&c),
        Command::Load { path } => load(&path),
    }
}

fn threads(c: &Common) -> Result<()> {
    if let Some(n) = c.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(())
}

fn read_config(c: &Common) -> Result<ParsedConfig> {
    let path = c.config.as_ref().context("--config is required")?;
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config(&text).with_context(|| format!("parsing {}", path.display()))
}

fn run_config(c: &Common) -> Result<RunConfig> {
    match read_config(c)? {
        ParsedConfig::Run(mut cfg) => {
            if let Some(s) = c.seed {
                cfg.seed = s;
            }
            if let Some(out) = &c.out {
                cfg.output_dir = out.clone();
            }
            Ok(cfg)
        }
        ParsedConfig::Experiment(_) => {
            bail!("expected a run configuration, found an experiment specification")
        }
    }
}

fn run(c: &Common) -> Result<u8> {
    threads(c)?;
    let cfg = run_config(c)?;
    let traj = run_simulation_with(&cfg, RunOptions::default())?;
    let written = emit_run(&traj, &cfg, &cfg.output_dir)?;
    for p in &written {
        println!("{}", p.display());
    }
    match &traj.exit {
        ExitReason::Failed { time, message } => {
            eprintln!("run failed at t = {time}: {message}");
            Ok(EXIT_INFRA)
        }
        ExitReason::BootstrapExit { time } => {
            eprintln!("left the bootstrap window at t = {time}");
            Ok(0)
        }
        ExitReason::Completed => Ok(0),
    }
}

fn experiment(c: &Common) -> Result<u8> {
    threads(c)?;
    let mut spec: ExperimentSpec = match read_config(c)? {
        ParsedConfig::Experiment(s) => s,
        ParsedConfig::Run(_) => {
            bail!("expected an experiment specification, found a run configuration")
        }
    };
    if let Some(s) = c.seed {
        spec.base.seed = s;
        spec.seeds = vec![s];
    }
    let out = c
        .out
        .clone()
        .unwrap_or_else(|| spec.base.output_dir.clone());
    let report = run_experiment(&spec)?;
    emit_report(&report, &out)?;
    for check in &report.checks {
        println!(
            "[{}] {}: {}",
            if check.pass { "PASS" } else { "FAIL" },
            check.name,
            check.detail
        );
    }
    for note in &report.notes {
        println!("note: {note}");
    }
    Ok(if report.passed() { 0 } else { EXIT_ASSERT })
}

fn check(c: &Common, count: usize) -> Result<u8> {
    threads(c)?;
    let seeds: Vec<u64> = match (&c.config, c.seed) {
        (_, Some(s)) => vec![s],
        (Some(_), None) => match read_config(c)? {
            ParsedConfig::Experiment(s) => s.seeds,
            ParsedConfig::Run(r) => vec![r.seed],
        },
        (None, None) => vec![0],
    };
    let mut all = SuiteReport::default();
    for s in seeds {
        all.merge(run_suite(s, count)?);
    }
    let out = c.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let mut nd = Vec::new();
    all.write_ndjson(&mut nd)?;
    fs::write(out.join("suite.ndjson"), nd)?;
    let mut csv = Vec::new();
    all.write_summary_csv(&mut csv)?;
    fs::write(out.join("suite_summary.csv"), &csv)?;
    print!("{}", String::from_utf8_lossy(&csv));
    for e in &all.errors {
        eprintln!(
            "checker error: {} (seed {}, sample {}): {}",
            e.name, e.seed, e.index, e.message
        );
    }
    let failures = all.failures().count();
    Ok(if failures == 0 && all.errors.is_empty() {
        0
    } else {
        EXIT_ASSERT
    })
}

fn dump(c: &Common) -> Result<u8> {
    let cfg = run_config(c)?;
    cfg.validate()?;
    let grid = TorusGrid::new(cfg.n)?;
    let rho0 = cfg.initial_data.sample(&grid);
    let out = c.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    let path = if out.extension().is_some() {
        out
    } else {
        fs::create_dir_all(&out)?;
        out.join("rho0.bin")
    };
    let header = DumpHeader {
        n: cfg.n,
        kind: "rho".into(),
        time: 0.0,
        epsilon: Some(cfg.eps),
    };
    save_field(&path, &rho0, &header)?;
    println!("{}", path.display());
    Ok(0)
}

fn load(path: &Path) -> Result<u8> {
    let (header, field) = load_field(path)?;
    let mean = field.mean();
    let centred = field.mean_free();
    let summary = json!({
        "header": header,
        "mean": mean,
        "l2": spectral::l2(&field),
        "linf": spectral::linf(&field),
        "hminus1": spectral::hminus1_unchecked(&centred),
        "grad_linf": spectral::grad_linf(&field),
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(0)
}
