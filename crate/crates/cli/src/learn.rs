use std::time::Instant;

use anyhow::anyhow;
use halftest::learner::{run_with_repetitions, LearnerStatus, RepeatedOutcome, SampleSource, SyntheticSource};
use halftest::rng::{purpose, stream_id, CtrRng};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::exit::{Failure, OrUsage, Status};
use crate::report::{emit, write_atomic, Constants, Report};
use crate::Common;

#[derive(Debug, Serialize)]
pub struct Trial {
    pub trial: usize,
    pub seed: u64,
    pub accepted: bool,
    /// Error of the output on a fresh evaluation sample.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    pub outcome: RepeatedOutcome,
    #[serde(skip)]
    pub wall_time: f64,
}

#[derive(Debug, Serialize)]
struct Aggregate {
    trials: usize,
    accepted: usize,
    acceptance_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_error: Option<f64>,
}

fn run_trial(cfg: &ExperimentConfig, trial: usize, seed: u64) -> anyhow::Result<Trial> {
    let mut learner = cfg.learner()?.clone();
    learner.seed = seed;
    let start = Instant::now();
    let mut source = SyntheticSource::new(cfg.marginal.clone(), cfg.noise.clone(), seed)?;
    let outcome = run_with_repetitions(&mut source, &learner)?;
    let wall_time = start.elapsed().as_secs_f64();

    let eval_seed = CtrRng::new(seed, stream_id(purpose::HARNESS, 0)).next_u64();
    let mut eval = SyntheticSource::new(cfg.marginal.clone(), cfg.noise.clone(), eval_seed)?;
    let error = match &outcome.w {
        Some(w) => Some(eval.draw(cfg.eval_samples)?.zero_one_error(w)),
        None => None,
    };
    let sigma = outcome.runs.iter().find_map(|r| match &r.status {
        LearnerStatus::Accepted { w, sigma_used, .. } if Some(w) == outcome.w.as_ref() => {
            Some(*sigma_used)
        }
        _ => None,
    });
    Ok(Trial {
        trial,
        seed,
        accepted: outcome.accepted,
        error,
        sigma,
        outcome,
        wall_time,
    })
}

pub fn run_trials(cfg: &ExperimentConfig) -> anyhow::Result<Vec<Trial>> {
    cfg.learner()?;
    let seeds = cfg.trial_seeds();
    seeds
        .par_iter()
        .enumerate()
        .map(|(i, &s)| run_trial(cfg, i, s))
        .collect()
}

fn csv_bytes(trials: &[Trial]) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["trial", "seed", "accepted", "error", "sigma", "wall_time"])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for t in trials {
        w.write_record([
            t.trial.to_string(),
            t.seed.to_string(),
            t.accepted.to_string(),
            opt(t.error),
            opt(t.sigma),
            format!("{:.3}", t.wall_time),
        ])?;
    }
    Ok(w.into_inner()?)
}

pub fn run(c: &Common) -> Result<Status, Failure> {
    let path = c
        .config
        .as_deref()
        .ok_or_else(|| Failure::usage(anyhow!("learn needs --config")))?;
    let cfg = ExperimentConfig::load(path)?.with_seed(c.seed);
    let constants = Constants::from(&cfg.learner().or_usage()?.tester);
    let trials = run_trials(&cfg).or_usage()?;

    let out_dir = c.out.clone().or_else(|| cfg.outputs.dir.clone());
    if let Some(dir) = &out_dir {
        for t in &trials {
            let r = Report::new("learn", &cfg, constants.clone(), t);
            let name = format!("trial_{:04}.json", t.trial);
            write_atomic(&dir.join(name), r.to_json()?.as_bytes())?;
        }
        let csv = csv_bytes(&trials).map_err(Failure::io)?;
        write_atomic(&dir.join("trials.csv"), &csv)?;
    }

    let accepted = trials.iter().filter(|t| t.accepted).count();
    let errors: Vec<f64> = trials.iter().filter_map(|t| t.error).collect();
    let agg = Aggregate {
        trials: trials.len(),
        accepted,
        acceptance_rate: accepted as f64 / trials.len() as f64,
        mean_error: (!errors.is_empty()).then(|| errors.iter().sum::<f64>() / errors.len() as f64),
        max_error: errors.iter().copied().reduce(f64::max),
    };
    let report = Report::new("learn", &cfg, constants, agg);
    let json = report.to_json()?;
    if let Some(dir) = &out_dir {
        write_atomic(&dir.join("summary.json"), json.as_bytes())?;
    }
    emit(&json)?;
    Ok(Status::Accept)
}
