use std::time::Instant;

use clap::Args;
use halftest::distributions::{label_dataset, sample_marginal, MarginalSpec, NoiseModel};
use halftest::learner::{run_once, LearnerConfig};
use halftest::numerics::{sym_eigendecompose, SymMatrix, UnitVector};
use halftest::rng::{purpose, stream_id, CtrRng};
use halftest::sos_hyper::hypercontractivity_test;
use halftest::surrogate::{psgd, PsgdConfig, RampParams};
use halftest::testers::{NoiseRegime, TesterConfig};
use serde::Serialize;

use crate::exit::{Failure, OrUsage, Status};
use crate::report::{emit, write_atomic, Constants, Report};
use crate::Common;

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Timed repetitions per case
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    /// Smaller problem sizes
    #[arg(long)]
    quick: bool,
}

#[derive(Debug, Serialize)]
struct Case {
    name: String,
    repeats: usize,
    min_seconds: f64,
    mean_seconds: f64,
}

#[derive(Serialize)]
struct Resolved {
    seed: u64,
    repeats: usize,
    quick: bool,
}

#[derive(Serialize)]
struct Body {
    cases: Vec<Case>,
}

fn time(name: String, repeats: usize, mut f: impl FnMut() -> anyhow::Result<()>) -> anyhow::Result<Case> {
    let mut t = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let s = Instant::now();
        f()?;
        t.push(s.elapsed().as_secs_f64());
    }
    Ok(Case {
        name,
        repeats,
        min_seconds: t.iter().copied().fold(f64::INFINITY, f64::min),
        mean_seconds: t.iter().sum::<f64>() / repeats as f64,
    })
}

fn cases(seed: u64, repeats: usize, quick: bool) -> anyhow::Result<Vec<Case>> {
    let s = if quick { 1 } else { 4 };
    let mut rng = CtrRng::new(seed, stream_id(purpose::HARNESS, 0));
    let mut out = Vec::new();

    let n = 16 * s;
    let mut m = SymMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            m.set(i, j, rng.normal());
        }
    }
    out.push(time(format!("eigen_n{n}"), repeats, || {
        sym_eigendecompose(&m)?;
        Ok(())
    })?);

    let d = 5;
    let target = UnitVector::axis(d, 0);
    let noise = NoiseModel::massart(0.1, target);
    let n = 500 * s;
    let pts = sample_marginal(&MarginalSpec::gaussian(d), n, seed)?;
    out.push(time(format!("sos_d{d}_n{n}"), repeats, || {
        let v = hypercontractivity_test(&pts, 1.0, 10.0, 1e-7);
        anyhow::ensure!(v.get("sdp_value").is_some(), "no certificate");
        Ok(())
    })?);

    let n = 2500 * s;
    let ds = label_dataset(&sample_marginal(&MarginalSpec::gaussian(d), n, seed)?, &noise, seed)?;
    let p = RampParams::new(0.05)?;
    out.push(time(format!("psgd_d{d}_n{n}_t100"), repeats, || {
        psgd(&ds, p, &PsgdConfig::default_for(0.05, 100, seed))?;
        Ok(())
    })?);

    let n = 5000 * s;
    let draw = |k: u64| -> anyhow::Result<_> {
        let pts = sample_marginal(&MarginalSpec::gaussian(d), n, seed + k)?;
        Ok(label_dataset(&pts, &noise, seed + k)?)
    };
    let (s1, s2) = (draw(1)?, draw(2)?);
    let mut cfg = LearnerConfig::new(NoiseRegime::Massart { eta: 0.1 }, 0.05, TesterConfig::new(3.0, 1.0));
    cfg.seed = seed;
    out.push(time(format!("learner_massart_d{d}_n{n}"), repeats, || {
        run_once(&s1, &s2, &cfg)?;
        Ok(())
    })?);
    Ok(out)
}

pub fn run(c: &Common, a: &BenchArgs) -> Result<Status, Failure> {
    if a.repeats == 0 {
        return Err(Failure::usage(anyhow::anyhow!("--repeats must be at least 1")));
    }
    let seed = c.seed.unwrap_or(0);
    let cases = cases(seed, a.repeats, a.quick).or_usage()?;
    if let Some(path) = &c.out {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut go = || -> anyhow::Result<Vec<u8>> {
            w.write_record(["case", "repeats", "min_seconds", "mean_seconds"])?;
            for k in &cases {
                w.write_record([
                    k.name.clone(),
                    k.repeats.to_string(),
                    format!("{:.6}", k.min_seconds),
                    format!("{:.6}", k.mean_seconds),
                ])?;
            }
            w.flush()?;
            Ok(w.get_ref().clone())
        };
        let bytes = go().map_err(Failure::io)?;
        write_atomic(path, &bytes)?;
    }
    let resolved = Resolved {
        seed,
        repeats: a.repeats,
        quick: a.quick,
    };
    let report = Report::new("bench", &resolved, Constants::from(&TesterConfig::new(3.0, 1.0)), Body { cases });
    emit(&report.to_json()?)?;
    Ok(Status::Accept)
}
