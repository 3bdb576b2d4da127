use halftest::distributions::{sample_marginal, MarginalKind, MarginalSpec, Points};
use halftest::rng::CtrRng;
use halftest::sos_hyper::{empirical_fourth_moment_tensor, hypercontractivity_test, solve_degree4_relaxation};
use proptest::prelude::*;

/// Applies the reflection `I − 2uuᵀ` for two random unit `u`.
fn rotate(points: &Points, r: &mut CtrRng) -> Points {
    let d = points.dim();
    let (u1, u2) = (r.unit_sphere(d), r.unit_sphere(d));
    points.map_rows(d, |x, out| {
        out.copy_from_slice(x);
        for u in [&u1, &u2] {
            let c: f64 = out.iter().zip(u.iter()).map(|(a, b)| a * b).sum();
            out.iter_mut().zip(u.iter()).for_each(|(o, ui)| *o -= 2.0 * c * ui);
        }
    })
}

fn value(points: &Points) -> f64 {
    solve_degree4_relaxation(&empirical_fourth_moment_tensor(points).unwrap(), 1e-9)
        .unwrap()
        .value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn value_is_rotation_invariant(seed in any::<u64>(), d in 2usize..5, n in 20usize..150) {
        let pts = sample_marginal(&MarginalSpec::new(MarginalKind::ProductLaplace, d), n, seed).unwrap();
        let mut r = CtrRng::new(seed, 9);
        let a = value(&pts);
        let b = value(&rotate(&pts, &mut r));
        prop_assert!((a - b).abs() <= 1e-5 * a.max(1.0), "{} vs {}", a, b);
    }

    #[test]
    fn value_bounds_every_direction(seed in any::<u64>(), d in 2usize..6, n in 10usize..120) {
        let pts = sample_marginal(&MarginalSpec::gaussian(d), n, seed).unwrap();
        let v = value(&pts);
        let mut r = CtrRng::new(seed, 10);
        for _ in 0..50 {
            let u = r.unit_sphere(d);
            let m4 = pts.rows()
                .map(|x| x.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>().powi(4))
                .sum::<f64>() / n as f64;
            prop_assert!(m4 <= v + 1e-6 * v.max(1.0));
        }
    }
}

#[test]
fn poincare_families_are_certified_in_dimension_six() {
    let n = 100_000;
    for kind in [MarginalKind::StandardGaussian, MarginalKind::ProductLaplace, MarginalKind::UniformCube] {
        let spec = MarginalSpec::new(kind.clone(), 6);
        let mut good = 0;
        for t in 0..20 {
            let pts = sample_marginal(&spec, n, 600 + t).unwrap();
            let v = hypercontractivity_test(&pts, 1.0, 10.0, 1e-7);
            good += (v.get("sdp_value").unwrap() <= 10.0) as usize;
        }
        assert!(good >= 18, "{kind:?}: {good}/20");
    }
}
