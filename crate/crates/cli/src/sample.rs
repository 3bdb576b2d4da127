use std::path::Path;

use anyhow::anyhow;
use clap::{Args, ValueEnum};
use halftest::distributions::{io, label_dataset, sample_marginal};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::exit::{Failure, OrUsage, Status};
use crate::report::{emit, write_atomic, Constants, Report};
use crate::Common;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Binary,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    /// Output format; inferred from the extension (`.bin` is binary) when absent
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Serialize)]
struct Summary<'a> {
    path: &'a Path,
    rows: usize,
    dim: usize,
    seed: u64,
}

pub fn run(c: &Common, a: &SampleArgs) -> Result<Status, Failure> {
    let path = c
        .config
        .as_deref()
        .ok_or_else(|| Failure::usage(anyhow!("sample needs --config")))?;
    let cfg = ExperimentConfig::load(path)?.with_seed(c.seed);
    let n = cfg
        .samples
        .ok_or_else(|| Failure::usage(anyhow!("samples must be set for sample")))?;
    let out = c
        .out
        .clone()
        .or_else(|| cfg.outputs.dataset.clone())
        .ok_or_else(|| Failure::usage(anyhow!("no output path: pass --out or set outputs.dataset")))?;
    let seed = cfg.seeds.first().copied().unwrap_or(0);
    let points = sample_marginal(&cfg.marginal, n, seed).or_usage()?;
    let ds = label_dataset(&points, &cfg.noise, seed).or_usage()?;

    let format = a.format.unwrap_or_else(|| {
        if out.extension().is_some_and(|e| e == "bin") {
            Format::Binary
        } else {
            Format::Csv
        }
    });
    let mut bytes = Vec::new();
    match format {
        Format::Csv => io::write_csv(&ds, &mut bytes),
        Format::Binary => io::write_binary(&ds, &mut bytes),
    }
    .or_usage()?;
    write_atomic(&out, &bytes)?;

    let tester = cfg.learner.as_ref().map(|l| l.tester.clone()).unwrap_or_default();
    let body = Summary {
        path: &out,
        rows: ds.len(),
        dim: ds.dim(),
        seed,
    };
    let report = Report::new("sample", &cfg, Constants::from(&tester), body);
    emit(&report.to_json()?)?;
    Ok(Status::Accept)
}
