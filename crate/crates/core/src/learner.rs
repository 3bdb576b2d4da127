//! The end-to-end tester-learner: PSGD on the surrogate loss over a grid of
//! smoothing widths, a gradient filter on fresh samples, the structure and
//! disagreement testers, and selection of the best tested halfspace.

use std::f64::consts::FRAC_PI_4;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::{
    label_dataset, sample_marginal, Dataset, DistributionsError, MarginalSpec, NoiseModel,
};
use crate::numerics::UnitVector;
use crate::rng::{purpose, stream_id, CtrRng};
use crate::surrogate::{psgd, surrogate_gradient_norm, PsgdConfig, RampParams, SurrogateError};
use crate::testers::{
    local_disagreement_test, stationary_point_test, NoiseRegime, TesterConfig, TesterError,
};
use crate::verdict::TesterVerdict;

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("sample source exhausted: requested {requested}, available {available}")]
    InsufficientSamples { requested: usize, available: usize },
    #[error(transparent)]
    Distributions(#[from] DistributionsError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error(transparent)]
    Tester(#[from] TesterError),
}

pub type Result<T> = std::result::Result<T, LearnerError>;

/// How each PSGD run is started.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsgdInit {
    /// Normalized `E_{S₁}[y·x]`.
    LabelAverage,
    /// Uniform on the sphere.
    Random,
}

/// Per-σ PSGD settings. The step is `β = step_scale·σ^step_power`; a missing
/// batch size means full-batch steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsgdTemplate {
    pub iterations: usize,
    pub step_scale: f64,
    pub step_power: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    pub init: PsgdInit,
}

impl Default for PsgdTemplate {
    fn default() -> Self {
        Self {
            iterations: 100,
            step_scale: 2.0,
            step_power: 1.0,
            batch_size: None,
            init: PsgdInit::LabelAverage,
        }
    }
}

impl PsgdTemplate {
    pub fn step_size(&self, sigma: f64) -> f64 {
        self.step_scale * sigma.powf(self.step_power)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerConfig {
    pub lambda: f64,
    pub gamma: f64,
    pub eps: f64,
    pub delta: f64,
    pub noise: NoiseRegime,
    #[serde(default)]
    pub psgd: PsgdTemplate,
    pub tester: TesterConfig,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_n")]
    pub n1: usize,
    #[serde(default = "default_n")]
    pub n2: usize,
    /// Held-out sample used by the repetition wrapper to pick its output.
    #[serde(default = "default_n")]
    pub n_holdout: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_repetitions() -> usize {
    1
}

fn default_n() -> usize {
    100_000
}

impl LearnerConfig {
    pub fn new(noise: NoiseRegime, eps: f64, tester: TesterConfig) -> Self {
        Self {
            lambda: 1.0,
            gamma: tester.gamma,
            eps,
            delta: 1.0 / 3.0,
            noise,
            psgd: PsgdTemplate::default(),
            tester,
            repetitions: default_repetitions(),
            n1: default_n(),
            n2: default_n(),
            n_holdout: default_n(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LearnerError::InvalidConfig(m));
        if !(self.lambda >= 1.0) || !self.lambda.is_finite() {
            return bad(format!("lambda must be at least 1, got {}", self.lambda));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        self.noise.validate()?;
        self.tester.validate()?;
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if self.n1 == 0 || self.n2 == 0 {
            return bad("n1 and n2 must be at least 1".into());
        }
        if self.repetitions > 1 && self.n_holdout == 0 {
            return bad("n_holdout must be at least 1 when repeating".into());
        }
        let t = &self.psgd;
        if !(t.step_scale > 0.0) || !t.step_power.is_finite() {
            return bad("psgd step_scale must be positive".into());
        }
        if t.batch_size == Some(0) {
            return bad("psgd batch_size must be at least 1".into());
        }
        Ok(())
    }

    /// `K = C1·λ^C1` with the tester's `C1` and the learner's `λ`.
    pub fn scale(&self) -> f64 {
        self.tester.c1 * self.lambda.powf(self.tester.c1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaGrid {
    pub values: Vec<f64>,
    /// Gradient-norm threshold `A`.
    pub threshold: f64,
}

/// With `K = C1·λ^C1` and `E = ε/K`: Massart gives the single width
/// `E(1−2η)/(K(1+γ⁴))` and `A = (1−2η)/(Kγ⁴)`; agnostic gives a uniform
/// cover of `(0, 1/K]` with spacing at most `E/K`, starting one spacing above
/// zero, and `A = 1/(Kγ⁴)`.
pub fn make_sigma_grid(cfg: &LearnerConfig) -> SigmaGrid {
    let k = cfg.scale();
    let e = cfg.eps / k;
    let g4 = cfg.gamma.powi(4);
    match cfg.noise {
        NoiseRegime::Massart { eta } => SigmaGrid {
            values: vec![e * (1.0 - 2.0 * eta) / (k * (1.0 + g4))],
            threshold: (1.0 - 2.0 * eta) / (k * g4),
        },
        NoiseRegime::Agnostic => {
            let top = 1.0 / k;
            let spacing = e / k;
            let count = ((top / spacing) - 1e-9).ceil().max(1.0) as usize;
            SigmaGrid {
                values: (1..=count).map(|i| top * i as f64 / count as f64).collect(),
                threshold: 1.0 / (k * g4),
            }
        }
    }
}

/// A source of fresh iid labeled examples.
pub trait SampleSource {
    fn dim(&self) -> usize;
    fn draw(&mut self, n: usize) -> Result<Dataset>;
}

/// Samples from a marginal and noise model; draw `k` uses seeds derived from
/// `(seed, k)`.
#[derive(Debug, Clone)]
pub struct SyntheticSource {
    pub marginal: MarginalSpec,
    pub noise: NoiseModel,
    seed: u64,
    draws: u64,
}

impl SyntheticSource {
    pub fn new(marginal: MarginalSpec, noise: NoiseModel, seed: u64) -> Result<Self> {
        marginal.validate()?;
        noise.validate()?;
        if noise.target.dim() != marginal.dim {
            return Err(DistributionsError::DimMismatch {
                expected: marginal.dim,
                found: noise.target.dim(),
            }
            .into());
        }
        Ok(Self {
            marginal,
            noise,
            seed,
            draws: 0,
        })
    }
}

impl SampleSource for SyntheticSource {
    fn dim(&self) -> usize {
        self.marginal.dim
    }

    fn draw(&mut self, n: usize) -> Result<Dataset> {
        let mut rng = CtrRng::new(self.seed, stream_id(purpose::LEARNER, self.draws));
        self.draws += 1;
        let points = sample_marginal(&self.marginal, n, rng.next_u64())?;
        Ok(label_dataset(&points, &self.noise, rng.next_u64())?)
    }
}

/// Serves consecutive, disjoint chunks of a fixed dataset.
#[derive(Debug, Clone)]
pub struct DatasetSource {
    data: Dataset,
    offset: usize,
}

impl DatasetSource {
    pub fn new(data: Dataset) -> Self {
        Self { data, offset: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.data.len() - self.offset
    }
}

impl SampleSource for DatasetSource {
    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn draw(&mut self, n: usize) -> Result<Dataset> {
        if n == 0 || n > self.remaining() {
            return Err(LearnerError::InsufficientSamples {
                requested: n,
                available: self.remaining(),
            });
        }
        let idx: Vec<usize> = (self.offset..self.offset + n).collect();
        self.offset += n;
        Ok(self.data.select(&idx))
    }
}

/// What happened at one width of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaTrace {
    pub sigma: f64,
    pub iterates: usize,
    /// Smallest `‖∇L_σ(w; S₂)‖` among the iterates.
    pub best_gradient_norm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub survivor: Option<UnitVector>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub verdicts: Vec<TesterVerdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LearnerStatus {
    Rejected {
        stage: String,
        reason: String,
    },
    Accepted {
        w: UnitVector,
        empirical_error: f64,
        sigma_used: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerOutcome {
    #[serde(flatten)]
    pub status: LearnerStatus,
    pub grid: SigmaGrid,
    pub trace: Vec<SigmaTrace>,
}

impl LearnerOutcome {
    pub fn accepted(&self) -> bool {
        matches!(self.status, LearnerStatus::Accepted { .. })
    }

    pub fn hypothesis(&self) -> Option<&UnitVector> {
        match &self.status {
            LearnerStatus::Accepted { w, .. } => Some(w),
            LearnerStatus::Rejected { .. } => None,
        }
    }
}

fn label_average(ds: &Dataset) -> Option<UnitVector> {
    let mut m = vec![0.0; ds.dim()];
    for (x, y) in ds.iter() {
        for (mi, xi) in m.iter_mut().zip(x) {
            *mi += y * xi;
        }
    }
    UnitVector::normalize(&m).ok()
}

/// Step 2 for one width: PSGD on `S₁`.
fn run_psgd(s1: &Dataset, sigma: f64, index: usize, cfg: &LearnerConfig) -> Result<Vec<UnitVector>> {
    let t = &cfg.psgd;
    let init = match t.init {
        PsgdInit::LabelAverage => label_average(s1),
        PsgdInit::Random => None,
    };
    let pc = PsgdConfig {
        iterations: t.iterations,
        step_size: t.step_size(sigma),
        batch_size: t.batch_size.unwrap_or(usize::MAX),
        seed: CtrRng::new(cfg.seed, stream_id(purpose::PSGD, index as u64)).next_u64(),
        init,
    };
    Ok(psgd(s1, RampParams::new(sigma)?, &pc)?)
}

/// One run of steps 1–8 on the given samples.
pub fn run_once(s1: &Dataset, s2: &Dataset, cfg: &LearnerConfig) -> Result<LearnerOutcome> {
    cfg.validate()?;
    if s1.dim() != s2.dim() {
        return Err(DistributionsError::DimMismatch {
            expected: s1.dim(),
            found: s2.dim(),
        }
        .into());
    }
    let grid = make_sigma_grid(cfg);
    let a = grid.threshold;

    // Steps 2-5: candidates per width, filtered and pruned on S₂.
    let per_sigma: Vec<Result<(SigmaTrace, Option<UnitVector>)>> = grid
        .values
        .par_iter()
        .enumerate()
        .map(|(i, &sigma)| {
            let iterates = run_psgd(s1, sigma, i, cfg)?;
            let rp = RampParams::new(sigma)?;
            let mut best: Option<(f64, usize)> = None;
            for (j, w) in iterates.iter().enumerate() {
                let g = surrogate_gradient_norm(w, s2, rp)?;
                if best.map_or(true, |(b, _)| g < b) {
                    best = Some((g, j));
                }
            }
            let (g, j) = best.expect("PSGD returns its starting point");
            let survivor = (g <= a).then(|| iterates[j].clone());
            Ok((
                SigmaTrace {
                    sigma,
                    iterates: iterates.len(),
                    best_gradient_norm: g,
                    survivor: survivor.clone(),
                    verdicts: Vec::new(),
                },
                survivor,
            ))
        })
        .collect();
    let mut trace = Vec::with_capacity(per_sigma.len());
    let mut survivors = Vec::new();
    for r in per_sigma {
        let (t, s) = r?;
        survivors.push(s);
        trace.push(t);
    }
    let reject = |stage: &str, reason: String, grid: SigmaGrid, trace: Vec<SigmaTrace>| {
        Ok(LearnerOutcome {
            status: LearnerStatus::Rejected {
                stage: stage.to_string(),
                reason,
            },
            grid,
            trace,
        })
    };
    if let Some(t) = trace.iter().find(|t| t.survivor.is_none()) {
        let reason = format!(
            "no iterate at sigma {:.6} has gradient norm at most {:.6} (best {:.6})",
            t.sigma, a, t.best_gradient_norm
        );
        return reject("gradient_filter", reason, grid, trace);
    }
    let survivors: Vec<UnitVector> = survivors.into_iter().flatten().collect();

    // Steps 6-7: structural and disagreement tests per survivor.
    let g4 = cfg.gamma.powi(4);
    let tests: Vec<Result<Vec<TesterVerdict>>> = grid
        .values
        .par_iter()
        .zip(survivors.par_iter())
        .map(|(&sigma, w)| {
            let mut out = vec![stationary_point_test(s2.points(), w, sigma, cfg.noise, &cfg.tester)?];
            if out[0].accepted {
                let theta = ((1.0 + g4) * sigma / (a * g4)).min(FRAC_PI_4);
                for u in [w.clone(), -w] {
                    let v = local_disagreement_test(s2.points(), &u, theta, &cfg.tester)?;
                    let stop = !v.accepted;
                    out.push(v);
                    if stop {
                        break;
                    }
                }
            }
            Ok(out)
        })
        .collect();
    let mut failure = None;
    for (t, r) in trace.iter_mut().zip(tests) {
        t.verdicts = r?;
        if failure.is_none() {
            if let Some(v) = t.verdicts.iter().find(|v| !v.accepted) {
                let stage = if v.test == "stationary_point" {
                    "stationary"
                } else {
                    "disagreement"
                };
                failure = Some((
                    stage,
                    format!("sigma {:.6}: {}", t.sigma, v.reason.clone().unwrap_or_default()),
                ));
            }
        }
    }
    if let Some((stage, reason)) = failure {
        return reject(stage, reason, grid, trace);
    }

    // Step 8: smallest S₂ error over the survivors and their negations.
    let k = survivors.len();
    let mut best: Option<(f64, usize)> = None;
    for idx in 0..2 * k {
        let w = if idx < k { survivors[idx].clone() } else { -&survivors[idx - k] };
        let e = s2.zero_one_error(&w);
        if best.map_or(true, |(b, _)| e < b) {
            best = Some((e, idx));
        }
    }
    let (err, idx) = best.expect("at least one width");
    let w = if idx < k { survivors[idx].clone() } else { -&survivors[idx - k] };
    Ok(LearnerOutcome {
        status: LearnerStatus::Accepted {
            w,
            empirical_error: err,
            sigma_used: grid.values[idx % k],
        },
        grid,
        trace,
    })
}

/// A single run with `δ′ = 1/3`, drawing `S₁` and `S₂` from `source`.
pub fn universal_tester_learner(
    source: &mut dyn SampleSource,
    cfg: &LearnerConfig,
) -> Result<LearnerOutcome> {
    cfg.validate()?;
    let s1 = source.draw(cfg.n1)?;
    let s2 = source.draw(cfg.n2)?;
    run_once(&s1, &s2, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatedOutcome {
    pub accepted: bool,
    pub acceptance_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<UnitVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holdout_error: Option<f64>,
    pub runs: Vec<LearnerOutcome>,
}

/// Runs `cfg.repetitions` independent single runs and accepts iff at least
/// half of them accept. The output is the accepted hypothesis with the
/// smallest error on a separate held-out sample (ties by run order).
pub fn run_with_repetitions(
    source: &mut dyn SampleSource,
    cfg: &LearnerConfig,
) -> Result<RepeatedOutcome> {
    cfg.validate()?;
    let mut samples = Vec::with_capacity(cfg.repetitions);
    for _ in 0..cfg.repetitions {
        let s1 = source.draw(cfg.n1)?;
        let s2 = source.draw(cfg.n2)?;
        samples.push((s1, s2));
    }
    let holdout = if cfg.repetitions > 1 {
        Some(source.draw(cfg.n_holdout)?)
    } else {
        None
    };
    let runs: Vec<LearnerOutcome> = samples
        .par_iter()
        .map(|(s1, s2)| run_once(s1, s2, cfg))
        .collect::<Result<_>>()?;
    let acc = runs.iter().filter(|r| r.accepted()).count();
    let rate = acc as f64 / runs.len() as f64;
    let accepted = rate >= 0.5;
    let mut pick: Option<(f64, UnitVector)> = None;
    if accepted {
        for r in &runs {
            if let LearnerStatus::Accepted {
                w, empirical_error, ..
            } = &r.status
            {
                let e = holdout.as_ref().map_or(*empirical_error, |h| h.zero_one_error(w));
                if pick.as_ref().map_or(true, |(b, _)| e < *b) {
                    pick = Some((e, w.clone()));
                }
            }
        }
    }
    Ok(RepeatedOutcome {
        accepted,
        acceptance_rate: rate,
        holdout_error: pick.as_ref().map(|p| p.0),
        w: pick.map(|p| p.1),
        runs,
    })
}
