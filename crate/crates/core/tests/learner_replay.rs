use halftest::distributions::{CorruptionRule, MarginalSpec, NoiseModel};
use halftest::learner::{
    make_sigma_grid, universal_tester_learner, LearnerConfig, LearnerStatus, SampleSource,
    SyntheticSource,
};
use halftest::numerics::UnitVector;
use halftest::testers::{NoiseRegime, TesterConfig};

#[test]
fn accepted_hypothesis_is_the_replayed_argmin() {
    let target = UnitVector::normalize(&[0.6, -0.8, 0.3]).unwrap();
    let noise = NoiseModel::agnostic(CorruptionRule::RandomFraction { rate: 0.05 }, target);
    let mut cfg = LearnerConfig::new(NoiseRegime::Agnostic, 0.4, TesterConfig::new(3.0, 1.0));
    cfg.n1 = 20_000;
    cfg.n2 = 20_000;
    cfg.seed = 5;
    assert!(make_sigma_grid(&cfg).values.len() > 1);

    let spec = MarginalSpec::gaussian(3);
    let mut source = SyntheticSource::new(spec.clone(), noise.clone(), 5).unwrap();
    let out = universal_tester_learner(&mut source, &cfg).unwrap();
    let LearnerStatus::Accepted { w, empirical_error, sigma_used } = &out.status else {
        panic!("expected acceptance: {:?}", out.status);
    };

    // Same draws as the run: S₁ then S₂.
    let mut replay = SyntheticSource::new(spec, noise, 5).unwrap();
    let _s1 = replay.draw(cfg.n1).unwrap();
    let s2 = replay.draw(cfg.n2).unwrap();
    let survivors: Vec<UnitVector> = out.trace.iter().map(|t| t.survivor.clone().unwrap()).collect();
    let candidates: Vec<UnitVector> = survivors.iter().cloned().chain(survivors.iter().map(|w| -w)).collect();
    let errors: Vec<f64> = candidates.iter().map(|c| s2.zero_one_error(c)).collect();
    let best = errors.iter().copied().fold(f64::INFINITY, f64::min);
    let first = errors.iter().position(|&e| e == best).unwrap();
    assert_eq!(&candidates[first], w);
    assert_eq!(*empirical_error, best);
    assert_eq!(*sigma_used, out.grid.values[first % survivors.len()]);
}
