use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, ValueEnum};
use halftest::distributions::Points;
use halftest::numerics::UnitVector;
use halftest::sos_hyper::hypercontractivity_test;
use halftest::testers::{
    local_disagreement_test, spectral_test, stationary_point_test, strip_probability,
    weak_anticoncentration_test, NoiseRegime, SpectralMode, TesterConfig,
};
use halftest::verdict::TesterVerdict;
use serde::Serialize;

use crate::exit::{Failure, OrUsage, Status};
use crate::report::{emit, read_dataset, read_file, Constants, Report};
use crate::Common;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TesterName {
    Spectral,
    Strip,
    Disagreement,
    Anticoncentration,
    Hypercontractivity,
    Stationary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Min,
    Max,
}

#[derive(Args, Debug)]
pub struct TestArgs {
    #[arg(value_enum)]
    tester: TesterName,
    /// Dataset (CSV or binary)
    #[arg(long)]
    data: PathBuf,
    /// Halfspace normal, comma separated; defaults to the first axis
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    w: Option<Vec<f64>>,
    /// Strip width
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    /// Angle for `disagreement`, threshold for `spectral`
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, value_enum, default_value_t = Mode::Min)]
    mode: Mode,
    /// Massart rate for `stationary`; agnostic when absent
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
}

#[derive(Serialize)]
struct Resolved<'a> {
    tester: TesterName,
    data: &'a PathBuf,
    w: &'a UnitVector,
    sigma: f64,
    theta: Option<f64>,
    mode: Mode,
    noise: NoiseRegime,
    cfg: &'a TesterConfig,
}

#[derive(Serialize)]
struct Body {
    verdict: TesterVerdict,
}

/// Tester configuration from `--config` (a `TesterConfig` JSON document),
/// with `--lambda`/`--gamma` overrides.
fn tester_config(c: &Common, a: &TestArgs) -> Result<TesterConfig, Failure> {
    let mut cfg = match &c.config {
        Some(p) => serde_json::from_slice(&read_file(p)?)
            .with_context(|| format!("parsing tester configuration {}", p.display()))
            .map_err(Failure::usage)?,
        None => TesterConfig::default(),
    };
    if let Some(l) = a.lambda {
        cfg.lambda = l;
    }
    if let Some(g) = a.gamma {
        cfg.gamma = g;
    }
    cfg.validate().or_usage()?;
    Ok(cfg)
}

/// Two-sided strip check: accepts iff `σ/K < Pr[|⟨w,x⟩| ≤ σ] ≤ 2σK`.
fn strip_test(points: &Points, w: &UnitVector, sigma: f64, cfg: &TesterConfig) -> Result<TesterVerdict, Failure> {
    let k = cfg.scale();
    let p = strip_probability(points, w, sigma).or_usage()?;
    let mut v = TesterVerdict::new("strip");
    v.diag("strip_probability", p)
        .diag("lower", sigma / k)
        .diag("upper", 2.0 * sigma * k);
    if p <= sigma / k {
        v.reject(format!("strip probability {p:.6} not above {:.6}", sigma / k));
    } else if p > 2.0 * sigma * k {
        v.reject(format!("strip probability {p:.6} exceeds {:.6}", 2.0 * sigma * k));
    }
    Ok(v)
}

pub fn run(c: &Common, a: &TestArgs) -> Result<Status, Failure> {
    let cfg = tester_config(c, a)?;
    let ds = read_dataset(&a.data)?;
    let points = ds.points();
    let w = match &a.w {
        Some(w) => UnitVector::normalize(w).context("--w").map_err(Failure::usage)?,
        None => UnitVector::axis(ds.dim(), 0),
    };
    let noise = match a.eta {
        Some(eta) => NoiseRegime::Massart { eta },
        None => NoiseRegime::Agnostic,
    };
    noise.validate().or_usage()?;
    let verdict = match a.tester {
        TesterName::Spectral => {
            let mode = match a.mode {
                Mode::Min => SpectralMode::Min,
                Mode::Max => SpectralMode::Max,
            };
            spectral_test(points, a.theta.unwrap_or(1.0), mode).or_usage()?
        }
        TesterName::Strip => strip_test(points, &w, a.sigma, &cfg)?,
        TesterName::Disagreement => {
            local_disagreement_test(points, &w, a.theta.unwrap_or(0.1), &cfg).or_usage()?
        }
        TesterName::Anticoncentration => {
            weak_anticoncentration_test(points, &w, a.sigma, &cfg).or_usage()?
        }
        TesterName::Hypercontractivity => {
            hypercontractivity_test(points, cfg.gamma, cfg.c_hyper, cfg.sdp_tol)
        }
        TesterName::Stationary => stationary_point_test(points, &w, a.sigma, noise, &cfg).or_usage()?,
    };
    let resolved = Resolved {
        tester: a.tester,
        data: &a.data,
        w: &w,
        sigma: a.sigma,
        theta: a.theta,
        mode: a.mode,
        noise,
        cfg: &cfg,
    };
    let accepted = verdict.accepted;
    let report = Report::new("test", &resolved, Constants::from(&cfg), Body { verdict });
    emit(&report.to_json()?)?;
    Ok(Status::from_accepted(accepted))
}
