use halftest::distributions::{label_dataset, sample_marginal, MarginalSpec, NoiseModel};
use halftest::numerics::{norm2, UnitVector};
use halftest::surrogate::{
    psgd, smooth_ramp, smooth_ramp_derivative, surrogate_gradient, surrogate_loss, PsgdConfig,
    RampParams, RAMP_CURVATURE_BOUND,
};
use proptest::prelude::*;

proptest! {
    #[test]
    fn ramp_is_monotone(sigma in 1e-3f64..10.0) {
        let p = RampParams::new(sigma).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for k in 0..10_000 {
            let t = -sigma + 2.0 * sigma * k as f64 / 9_999.0;
            let l = smooth_ramp(t, p);
            prop_assert!(l >= prev);
            prev = l;
        }
    }

    #[test]
    fn curvature_is_bounded_on_each_piece(sigma in 1e-2f64..5.0) {
        let p = RampParams::new(sigma).unwrap();
        let h = 1e-5 * sigma;
        for k in 0..2_000 {
            let t = -sigma + 2.0 * sigma * k as f64 / 1_999.0;
            let knots = [sigma / 6.0, sigma / 2.0];
            if knots.iter().any(|c| (t.abs() - c).abs() < 2.0 * h) {
                continue;
            }
            let fd = (smooth_ramp_derivative(t + h, p) - smooth_ramp_derivative(t - h, p)) / (2.0 * h);
            prop_assert!(fd.abs() <= RAMP_CURVATURE_BOUND / (sigma * sigma));
        }
    }

    #[test]
    fn psgd_iterates_stay_on_the_sphere(
        seed in any::<u64>(),
        d in 2usize..7,
        batch in 1usize..64,
        sigma in 0.02f64..0.5,
    ) {
        let spec = MarginalSpec::gaussian(d);
        let noise = NoiseModel::massart(0.2, UnitVector::axis(d, 0));
        let ds = label_dataset(&sample_marginal(&spec, 200, seed).unwrap(), &noise, seed).unwrap();
        let mut cfg = PsgdConfig::default_for(sigma, 50, seed);
        cfg.batch_size = batch;
        cfg.step_size = sigma;
        for w in psgd(&ds, RampParams::new(sigma).unwrap(), &cfg).unwrap() {
            prop_assert!((norm2(w.as_slice()) - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn loss_is_a_probability_and_gradient_is_tangent(seed in any::<u64>(), d in 2usize..7, sigma in 0.01f64..1.0) {
        let spec = MarginalSpec::gaussian(d);
        let noise = NoiseModel::massart(0.3, UnitVector::axis(d, 1));
        let ds = label_dataset(&sample_marginal(&spec, 150, seed).unwrap(), &noise, seed).unwrap();
        let w = UnitVector::axis(d, 0);
        let p = RampParams::new(sigma).unwrap();
        let l = surrogate_loss(&w, &ds, p).unwrap();
        prop_assert!((0.0..=1.0).contains(&l));
        let g = surrogate_gradient(&w, &ds, p).unwrap();
        prop_assert!(w.dot(&g).abs() <= 1e-12 * (1.0 + norm2(&g)));
    }
}
