use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use stackelberg_dr::{
    aggregate_stats, default_scenario, emit_outputs, load_scenario, run_trials, save_scenario,
    Mode, Result,
};

#[derive(Parser)]
#[command(
    name = "drsim",
    version,
    about = "Demand-response pricing game simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Both,
    Baseline,
    RtpV2g,
    RtpOnly,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Both => Mode::Both,
            ModeArg::Baseline => Mode::Baseline,
            ModeArg::RtpV2g => Mode::RtpV2g,
            ModeArg::RtpOnly => Mode::RtpOnly,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run Monte Carlo trials and write loads.csv, stats.csv and summary.json.
    Simulate {
        /// Scenario config (JSON). Defaults to the built-in scenario.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "both")]
        mode: ModeArg,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        #[arg(long)]
        max_rounds: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Worker threads; 0 uses one per core.
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Write the built-in scenario as a config file.
    DefaultConfig {
        #[arg(long, default_value = "scenario.json")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            scenario,
            trials,
            seed,
            mode,
            out_dir,
            max_rounds,
            epsilon,
            workers,
        } => {
            let mut s = match scenario {
                Some(path) => load_scenario(path)?,
                None => default_scenario(),
            };
            if let Some(v) = trials {
                s.trials = v;
            }
            if let Some(v) = seed {
                s.seed = v;
            }
            if let Some(v) = max_rounds {
                s.max_rounds = v;
            }
            if let Some(v) = epsilon {
                s.epsilon = v;
            }
            s.validate()?;

            let mode = Mode::from(mode);
            let results = run_trials(&s, mode, workers)?;
            let summary = aggregate_stats(&results, &s)?;
            emit_outputs(&summary, &results, &s, mode, &out_dir)?;

            if let (Some(b), Some(o)) = (&summary.baseline, &summary.optimized) {
                println!(
                    "peak {:.1} -> {:.1} kW, payments {:.1} -> {:.1}, cost {:.1} -> {:.1}",
                    b.peak_demand,
                    o.peak_demand,
                    b.total_payments,
                    o.total_payments,
                    b.generation_cost,
                    o.generation_cost
                );
            }
            let c = &summary.convergence;
            println!(
                "{}/{} trials converged (mean {:.1} rounds); outputs in {}",
                c.converged_trials,
                summary.trials,
                c.mean_rounds,
                out_dir.display()
            );
            if !c.non_converged.is_empty() {
                eprintln!("warning: trials without convergence: {:?}", c.non_converged);
            }
            Ok(())
        }
        Command::DefaultConfig { out } => save_scenario(&default_scenario(), out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
