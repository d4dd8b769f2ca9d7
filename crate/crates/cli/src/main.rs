//! Command-line front end: simulate scenes, run filters, and sweep
//! Monte Carlo experiments over confusion levels.

use anyhow::{bail, Context, Result};
use ntype_gmphd_cli::{output, plot};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ntype_gmphd::scenario::{default_quad, Scenario};
use ntype_gmphd::sim::{run_experiment, run_filter, simulate_run, FilterMode};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "ntype-gmphd",
    version,
    about = "Multi-type GM-PHD tracking: simulation, filtering, and experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one run and write truth and measurement logs.
    Simulate(SimulateArgs),
    /// Filter one simulated run and write state estimates.
    Filter(FilterArgs),
    /// Monte Carlo sweep over confusion levels and filter modes.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario JSON file; the built-in four-type scene when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Seed override for all random streams.
    #[arg(long)]
    seed: Option<u64>,
}

impl CommonArgs {
    fn load_scenario(&self, confusion: Option<f64>) -> Result<Scenario> {
        let mut scenario = match &self.scenario {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading scenario {}", path.display()))?;
                Scenario::from_json(&text)
                    .with_context(|| format!("parsing scenario {}", path.display()))?
            }
            None => default_quad(),
        };
        if let Some(seed) = self.seed {
            scenario.rng_seed = seed;
        }
        if let Some(level) = confusion {
            scenario = scenario.with_confusion_level(level);
        }
        scenario.validate().context("invalid scenario")?;
        Ok(scenario)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Ntype,
    Independent,
    Both,
}

impl ModeArg {
    fn modes(self) -> Vec<FilterMode> {
        match self {
            ModeArg::Ntype => vec![FilterMode::Ntype],
            ModeArg::Independent => vec![FilterMode::Independent],
            ModeArg::Both => vec![FilterMode::Ntype, FilterMode::Independent],
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Confusion level applied to wires and off-diagonal detection entries.
    #[arg(long)]
    confusion: Option<f64>,
    /// Which Monte Carlo run to simulate.
    #[arg(long, default_value_t = 0)]
    run: u32,
}

#[derive(Args)]
struct FilterArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Confusion level applied to wires and off-diagonal detection entries.
    #[arg(long)]
    confusion: Option<f64>,
    /// Which Monte Carlo run to filter.
    #[arg(long, default_value_t = 0)]
    run: u32,
    /// Filter configuration to run.
    #[arg(long, value_enum, default_value_t = ModeArg::Ntype)]
    mode: ModeArg,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated confusion levels.
    #[arg(long, value_delimiter = ',', default_value = "0.3,0.6,0.9")]
    confusion: Vec<f64>,
    /// Monte Carlo runs per level.
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u32).range(1..))]
    mc_runs: u32,
    /// Filter configurations to compare.
    #[arg(long, value_enum, default_value_t = ModeArg::Both)]
    mode: ModeArg,
    /// Also draw SVG charts.
    #[arg(long)]
    plots: bool,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Filter(args) => cmd_filter(args),
        Command::Experiment(args) => cmd_experiment(args),
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let scenario = args.common.load_scenario(args.confusion)?;
    let sim = simulate_run(&scenario, args.run);
    println!(
        "wrote {}",
        output::write_truth_csv(&args.common.out, &sim.truth)?.display()
    );
    println!(
        "wrote {}",
        output::write_measurements_csv(&args.common.out, &sim.frames)?.display()
    );
    Ok(())
}

fn cmd_filter(args: FilterArgs) -> Result<()> {
    let scenario = args.common.load_scenario(args.confusion)?;
    let sim = simulate_run(&scenario, args.run);
    let frames: Vec<_> = sim.frames.iter().map(|f| f.frame.clone()).collect();
    for mode in args.mode.modes() {
        let filter = match mode {
            FilterMode::Ntype => scenario.ntype_filter(),
            FilterMode::Independent => scenario.independent_filter(),
        }?;
        let run = run_filter(&filter, &frames)?;
        println!(
            "wrote {}",
            output::write_estimates_csv(&args.common.out, mode, &run.extracted)?.display()
        );
        println!(
            "wrote {}",
            output::write_cardinality_csv(&args.common.out, mode, &run.expected_cardinality)?
                .display()
        );
    }
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> Result<()> {
    if args.confusion.is_empty() {
        bail!("at least one confusion level is required");
    }
    let scenario = args.common.load_scenario(None)?;
    let report = run_experiment(&scenario, &args.confusion, args.mc_runs, &args.mode.modes())?;

    for level in &report.levels {
        for outcome in &level.modes {
            println!(
                "confusion {:<12} {:>11}  mean OSPA {:>12}  std {}",
                output::sig9(level.confusion),
                outcome.mode.to_string(),
                output::sig9(outcome.mean_ospa),
                output::sig9(outcome.std_over_runs),
            );
        }
    }

    let out = &args.common.out;
    println!("wrote {}", output::write_runs_csv(out, &report)?.display());
    println!(
        "wrote {}",
        output::write_per_type_ospa_csv(out, &report)?.display()
    );
    println!(
        "wrote {}",
        output::write_summary_json(out, &report)?.display()
    );
    if args.plots {
        for path in plot::write_all(out, &report)? {
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}
