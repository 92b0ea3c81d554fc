use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use memsched_core::config::presets;
use memsched_core::harness::{format_decision_log, run_experiment, run_sweep, to_csv, RunOptions};
use memsched_core::oracle::cross_check;
use memsched_core::sim::Simulation;
use memsched_core::{DramConfig, ExperimentConfig, PolicyKind};

/// Shared-memory scheduling experiments for CPU cores and periodic
/// accelerators.
#[derive(Parser)]
#[command(name = "memsched", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Alone runs, one shared run, one CSV row.
    Run(RunArgs),
    /// Every point of the config's `[sweep]` grid, one CSV row each.
    Sweep(RunArgs),
    /// Parse and check a config, including urgent-window admission.
    Validate(Target),
    /// Compare simulator completions against the brute-force reference
    /// on random tiny instances with the config's timings.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct Target {
    /// Config file, or a preset name: config-a, config-b, ddr3-1333.
    config: String,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    target: Target,
    #[arg(long)]
    seed: Option<u64>,
    /// Simulated cycles.
    #[arg(long)]
    horizon: Option<u64>,
    /// Override the configured policy.
    #[arg(long)]
    policy: Option<PolicyKind>,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    csv_out: Option<PathBuf>,
    /// Write the per-interval scheduling decisions here (run only).
    #[arg(long)]
    decision_log: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    target: Target,
    /// First instance seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    count: u64,
    /// Largest instance size.
    #[arg(long, default_value_t = 12)]
    requests: usize,
}

fn load(target: &Target) -> Result<ExperimentConfig> {
    let path = Path::new(&target.config);
    if !path.exists() {
        if let Some(cfg) = presets::by_name(&target.config) {
            return Ok(cfg);
        }
    }
    ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))
}

fn configured(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = load(&args.target)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
        if let Some(grid) = cfg.sweep.as_mut() {
            grid.seed.clear();
        }
    }
    if let Some(h) = args.horizon {
        cfg.horizon = h;
    }
    if let Some(p) = args.policy {
        cfg.policy.name = p;
        if let Some(grid) = cfg.sweep.as_mut() {
            grid.policy.clear();
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit_csv(csv: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, csv).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn run(args: RunArgs) -> Result<()> {
    let cfg = configured(&args)?;
    let opts = RunOptions {
        decision_log: args.decision_log.is_some(),
    };
    let r = run_experiment(&cfg, opts)?;
    if let Some(p) = &args.decision_log {
        fs::write(p, format_decision_log(&r.decisions, &r.hwa_names))
            .with_context(|| format!("writing {}", p.display()))?;
    }
    emit_csv(&to_csv(std::slice::from_ref(&r)), args.csv_out.as_deref())
}

fn sweep(args: RunArgs) -> Result<()> {
    if args.decision_log.is_some() {
        bail!("--decision-log applies to `run` only");
    }
    let cfg = configured(&args)?;
    let results = run_sweep(&cfg)?;
    emit_csv(&to_csv(&results), args.csv_out.as_deref())
}

fn validate(target: Target) -> Result<()> {
    let cfg = load(&target)?;
    cfg.validate()?;
    let traces = cfg.traces()?;
    let mut squash = cfg.clone();
    squash.policy.name = PolicyKind::Squash;
    let sim = Simulation::new(squash.sim_config(traces.clone())?)?;
    println!(
        "ok: {} cores, {} accelerators, {} channels x {} banks, horizon {}",
        traces.len(),
        cfg.hwas.len(),
        cfg.dram.channels,
        cfg.dram.banks_per_channel(),
        cfg.horizon
    );
    for h in sim.hwas() {
        match h.sdp {
            Some(s) => println!("  {}: short period, urgent for the last {} cycles", h.spec.name, s.upl),
            None => println!("  {}: long period", h.spec.name),
        }
    }
    Ok(())
}

fn oracle(args: OracleArgs) -> Result<bool> {
    let cfg = load(&args.target)?;
    let dram = DramConfig {
        channels: 1,
        ranks_per_channel: 1,
        banks_per_rank: cfg.dram.banks_per_channel().min(2) as u32,
        rows_per_bank: cfg.dram.rows_per_bank.min(16),
        columns_per_row: cfg.dram.columns_per_row.min(16),
        ..cfg.dram
    };
    dram.validate()?;
    let mismatches = cross_check(&dram, args.seed, args.count, args.requests)?;
    for m in mismatches.iter().take(10) {
        println!(
            "seed {} request {}: simulator {} reference {}",
            m.seed, m.request, m.simulated, m.reference
        );
    }
    println!(
        "{} instances, {} mismatching completions",
        args.count,
        mismatches.len()
    );
    Ok(mismatches.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a).map(|_| true),
        Command::Sweep(a) => sweep(a).map(|_| true),
        Command::Validate(t) => validate(t).map(|_| true),
        Command::Oracle(a) => oracle(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
