use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hhpim::workload::Scenario;
use hhpim_cli::{
    cmd_compare, cmd_gen_workload, cmd_lut, cmd_verify, CliError, CliResult, ExperimentSpec, VerifyOptions,
};

#[derive(Parser)]
#[command(
    name = "hhpim",
    version,
    about = "Placement optimizer and time-slice simulator for HH-PIM processors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the reference architecture's allocation LUT (memory utilization and E_task per t_constraint).
    Lut(ExperimentArgs),
    /// Simulate every architecture on every scenario and report energy savings.
    Compare(ExperimentArgs),
    /// Check the placement DP against exhaustive search on random instances.
    Verify(VerifyArgs),
    /// Write a scenario's arrival stream as CSV.
    GenWorkload(WorkloadArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML experiment file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Builtin name or architecture file, repeatable; the first is the reference.
    #[arg(long)]
    arch: Vec<String>,
    #[arg(long)]
    model: Vec<String>,
    #[arg(long)]
    scenario: Vec<Scenario>,
    #[arg(long)]
    slices: Option<usize>,
    #[arg(long)]
    max_per_slice: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Fixed number of t-grid steps instead of the calibrated count.
    #[arg(long)]
    resolution: Option<usize>,
    /// Share of each slice reserved for the optimizer.
    #[arg(long)]
    budget_fraction: Option<f64>,
    #[arg(long)]
    headroom: Option<f64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl ExperimentArgs {
    fn spec(&self) -> CliResult<ExperimentSpec> {
        let mut spec = match &self.config {
            Some(path) => ExperimentSpec::load(path)?,
            None => ExperimentSpec::default(),
        };
        if !self.arch.is_empty() {
            spec.archs = self.arch.clone();
        }
        if !self.model.is_empty() {
            spec.models = self.model.clone();
        }
        if !self.scenario.is_empty() {
            spec.scenarios = self.scenario.clone();
        }
        spec.slices = self.slices.unwrap_or(spec.slices);
        spec.max_per_slice = self.max_per_slice.unwrap_or(spec.max_per_slice);
        spec.seed = self.seed.unwrap_or(spec.seed);
        spec.resolution = self.resolution.or(spec.resolution);
        spec.budget_fraction = self.budget_fraction.unwrap_or(spec.budget_fraction);
        spec.headroom = self.headroom.unwrap_or(spec.headroom);
        Ok(spec)
    }
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 4)]
    max_n: usize,
    #[arg(long, default_value_t = 8)]
    max_k: u64,
    #[arg(long, default_value_t = 40)]
    max_steps: usize,
    #[arg(long, default_value_t = 500)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Relative error injected into one space's energy on the DP side.
    #[arg(long, hide = true)]
    perturb: Option<f64>,
}

#[derive(Args)]
struct WorkloadArgs {
    #[arg(long)]
    scenario: Scenario,
    #[arg(long, default_value_t = 50)]
    slices: usize,
    #[arg(long, default_value_t = 10)]
    max_per_slice: u32,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = "workload.csv")]
    out: PathBuf,
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Lut(args) => {
            for path in cmd_lut(&args.spec()?, &args.out)? {
                println!("{}", path.display());
            }
        }
        Command::Compare(args) => {
            let summary = cmd_compare(&args.spec()?, &args.out)?;
            println!("config_hash={} seed={}", summary.config_hash, summary.seed);
            for m in &summary.models {
                for s in &m.scenarios {
                    let row: Vec<String> = s.savings_pct.iter().map(|(b, v)| format!("{b} {v:.2}%")).collect();
                    println!("{:<16} {:<6} {}", m.model, s.scenario, row.join("  "));
                }
            }
            for (b, v) in &summary.average_savings_pct {
                println!("average savings vs {b}: {v:.2}%");
            }
        }
        Command::Verify(args) => {
            let report = cmd_verify(&VerifyOptions {
                max_n: args.max_n,
                max_k: args.max_k,
                max_steps: args.max_steps,
                trials: args.trials,
                seed: args.seed,
                perturb: args.perturb,
            });
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            for f in &report.failures {
                eprintln!("FAIL {f}");
            }
            println!(
                "{} trials, {} LUT entries checked, {} failures",
                report.trials,
                report.comparisons,
                report.failures.len()
            );
            if !report.passed() {
                return Err(CliError::Verify(format!("{} failures", report.failures.len())));
            }
        }
        Command::GenWorkload(args) => {
            let path = cmd_gen_workload(args.scenario, args.slices, args.max_per_slice, args.seed, &args.out)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
