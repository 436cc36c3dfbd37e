//! Command-line driver: run mechanisms on instance files, verify properties,
//! benchmark approximation ratios and probe the lower-bound families.

mod commands;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use budgetmech::suite::SuiteFamily;
use budgetmech::{MechanismKind, Num};

/// Exit status: 0 when every check passes, 1 on a property violation, 2 on
/// bad input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Violation,
}

#[derive(Parser)]
#[command(name = "budgetmech", version, about = "Budget-feasible truthful procurement mechanisms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a mechanism on an instance file at truthful bids.
    Run {
        mechanism: MechanismKind,
        instance: PathBuf,
        /// Draw one branch of a randomized mechanism instead of printing the
        /// distribution. Uses ChaCha8 seeded with `--seed`.
        #[arg(long)]
        sample: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run every property check on an instance file or a directory of them.
    Verify {
        path: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Generate a seeded random suite and report opt/value ratios.
    Bench {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value = "additive")]
        family: SuiteFamily,
        #[arg(long)]
        json: bool,
    },
    /// Probe a mechanism on the three-item lower-bound family.
    ProbeLb3 {
        #[arg(long, default_value_t = 32)]
        grid: u32,
        #[arg(long, default_value = "mech-k")]
        mech: MechanismKind,
    },
    /// Expected ratio of a mechanism under the two-item hard distribution.
    ProbeYao {
        #[arg(long, default_value_t = 100)]
        n: u32,
        #[arg(long, default_value = "1/100")]
        eps: Num,
        #[arg(long, default_value = "1")]
        budget: Num,
        #[arg(long, default_value = "mech-k")]
        mech: MechanismKind,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { mechanism, instance, sample, seed } => commands::run(mechanism, &instance, sample.then_some(seed)),
        Command::Verify { path, seed, json } => commands::verify(&path, seed, json),
        Command::Bench { seed, count, family, json } => commands::bench(seed, count, family, json),
        Command::ProbeLb3 { grid, mech } => commands::probe_lb3(grid, mech),
        Command::ProbeYao { n, eps, budget, mech } => commands::probe_yao(n, &eps, &budget, mech),
    };
    match result {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::Violation) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
