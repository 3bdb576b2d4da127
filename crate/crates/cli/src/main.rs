//! `halftest`: dataset generation, tester runs, learner experiments, oracle
//! cross-checks and timing benchmarks.

mod bench;
mod config;
mod exit;
mod learn;
mod oracle;
mod report;
mod sample;
mod test;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::exit::{Failure, Status};

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed; overrides the seeds in the configuration
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output file or directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a labeled dataset from the configured marginal and noise model
    Sample(sample::SampleArgs),
    /// Run one tester on a dataset and print its verdict
    Test(test::TestArgs),
    /// Run the tester-learner over the configured trials
    Learn,
    /// Compare library values against brute-force oracles on a dataset
    Oracle(oracle::OracleArgs),
    /// Time the main kernels
    Bench(bench::BenchArgs),
}

#[derive(Parser, Debug)]
#[command(name = "halftest", version, about = "Universal tester-learner for origin-centered halfspaces")]
struct Root {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

fn run(root: Root) -> Result<Status, Failure> {
    if let Some(jobs) = root.common.jobs {
        if jobs == 0 {
            return Err(Failure::usage(anyhow::anyhow!("--jobs must be at least 1")));
        }
        // Only fails if a pool was already built, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let c = &root.common;
    match root.command {
        Command::Sample(a) => sample::run(c, &a),
        Command::Test(a) => test::run(c, &a),
        Command::Learn => learn::run(c),
        Command::Oracle(a) => oracle::run(c, &a),
        Command::Bench(a) => bench::run(c, &a),
    }
}

fn main() -> ExitCode {
    let root = Root::parse();
    match run(root) {
        Ok(status) => status.code(),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            f.code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Root::command().debug_assert();
    }
}
