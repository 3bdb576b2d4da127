use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, ValueEnum};
use halftest::distributions::Dataset;
use halftest::numerics::{norm2, OrthogonalProjector, UnitVector};
use halftest::oracle::{
    brute_force_max_fourth_moment, empirical_strip_statistics, erm_halfspace,
    finite_difference_gradient, gaussian_strip_statistics, gradient_lower_bound_terms, StripQuery,
};
use halftest::rng::{purpose, stream_id, CtrRng};
use halftest::sos_hyper::{empirical_fourth_moment_tensor, solve_degree4_relaxation};
use halftest::surrogate::{surrogate_gradient, surrogate_loss, RampParams};
use halftest::testers::TesterConfig;
use serde::Serialize;
use serde_json::{json, Value};

use crate::exit::{Failure, OrUsage, Status};
use crate::report::{emit, read_dataset, Constants, Report};
use crate::Common;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    FourthMoment,
    Gradient,
    Erm,
    Structural,
    StripStats,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[arg(value_enum)]
    check: Check,
    /// Dataset (CSV or binary)
    #[arg(long)]
    data: PathBuf,
    /// Evaluation direction; random (from --seed) when absent
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    w: Option<Vec<f64>>,
    /// Reference direction for `structural`; the ERM direction when absent
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    w_star: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    /// Margin for `structural`; at least `σ/(2 tan θ)`
    #[arg(long)]
    alpha: Option<f64>,
    /// Massart rate for `structural`
    #[arg(long)]
    eta: Option<f64>,
    /// Band offset for `strip-stats`
    #[arg(long, default_value_t = 0.5)]
    offset: f64,
    /// Finite-difference step for `gradient`
    #[arg(long, default_value_t = 1e-6)]
    step: f64,
}

#[derive(Serialize)]
struct Resolved<'a> {
    check: Check,
    data: &'a PathBuf,
    seed: u64,
    w: &'a Option<Vec<f64>>,
    w_star: &'a Option<Vec<f64>>,
    sigma: f64,
    alpha: Option<f64>,
    eta: Option<f64>,
    offset: f64,
    step: f64,
}

#[derive(Serialize)]
struct Body {
    check: Check,
    pass: bool,
    tolerance: f64,
    oracle: Value,
    library: Value,
}

/// Relative tolerance of the gradient check.
pub const GRADIENT_TOL: f64 = 1e-5;
/// Slack allowed below the brute-force fourth moment.
pub const DOMINANCE_TOL: f64 = 1e-5;

fn unit(v: &[f64], what: &str) -> Result<UnitVector, Failure> {
    UnitVector::normalize(v).with_context(|| what.to_string()).map_err(Failure::usage)
}

fn direction(a: &Option<Vec<f64>>, d: usize, rng: &mut CtrRng, what: &str) -> Result<UnitVector, Failure> {
    match a {
        Some(v) => {
            let u = unit(v, what)?;
            if u.dim() != d {
                return Err(Failure::usage(anyhow::anyhow!("{what} has dimension {}, data has {d}", u.dim())));
            }
            Ok(u)
        }
        None => unit(&rng.unit_sphere(d), what),
    }
}

fn fourth_moment(ds: &Dataset, tol: f64) -> Result<Body, Failure> {
    let brute = brute_force_max_fourth_moment(ds.points()).or_usage()?;
    let t = empirical_fourth_moment_tensor(ds.points()).or_usage()?;
    let sos = solve_degree4_relaxation(&t, tol).or_usage()?;
    Ok(Body {
        check: Check::FourthMoment,
        pass: sos.value >= brute.value - DOMINANCE_TOL,
        tolerance: DOMINANCE_TOL,
        oracle: json!({
            "value": brute.value,
            "direction": brute.direction,
            "method": brute.method,
            "lower_bound_only": brute.lower_bound_only(),
        }),
        library: json!({ "sos_value": sos.value, "primal_value": sos.primal_value }),
    })
}

fn gradient(ds: &Dataset, w: &UnitVector, sigma: f64, step: f64) -> Result<Body, Failure> {
    let p = RampParams::new(sigma).or_usage()?;
    let g = surrogate_gradient(w, ds, p).or_usage()?;
    let fd = finite_difference_gradient(|u| surrogate_loss(u, ds, p).unwrap_or(f64::NAN), w, step)
        .or_usage()?;
    let diff: Vec<f64> = g.iter().zip(&fd).map(|(a, b)| a - b).collect();
    let rel = norm2(&diff) / norm2(&fd).max(1e-12);
    Ok(Body {
        check: Check::Gradient,
        pass: rel <= GRADIENT_TOL || norm2(&diff) <= 1e-12,
        tolerance: GRADIENT_TOL,
        oracle: json!({ "finite_difference": fd, "step": step }),
        library: json!({ "gradient": g, "relative_deviation": rel, "w": w }),
    })
}

fn erm(ds: &Dataset) -> Result<Body, Failure> {
    let r = erm_halfspace(ds).or_usage()?;
    let recomputed = ds.zero_one_error(&r.w);
    Ok(Body {
        check: Check::Erm,
        pass: (recomputed - r.opt).abs() <= 1e-12,
        tolerance: 1e-12,
        oracle: json!({ "opt": r.opt, "w": r.w, "method": r.method }),
        library: json!({ "zero_one_error": recomputed }),
    })
}

fn structural(ds: &Dataset, a: &OracleArgs, rng: &mut CtrRng) -> Result<Body, Failure> {
    let d = ds.dim();
    let w_star = match &a.w_star {
        Some(_) => direction(&a.w_star, d, rng, "--w-star")?,
        None => erm_halfspace(ds).or_usage()?.w,
    };
    let w = match &a.w {
        Some(_) => direction(&a.w, d, rng, "--w")?,
        None => {
            // A random tangent direction at angle 0.3 from w*.
            let proj = OrthogonalProjector::new(&w_star);
            let t = proj.lift(&rng.unit_sphere(d - 1));
            w_star.rotate_towards(&t, 0.3)
        }
    };
    let theta = w.angle_to(&w_star);
    let alpha = a.alpha.unwrap_or_else(|| (a.sigma / (2.0 * theta.tan())).max(0.5));
    let terms = gradient_lower_bound_terms(ds, &w, &w_star, a.sigma, alpha).or_usage()?;
    let p = RampParams::new(a.sigma).or_usage()?;
    let norm = norm2(&surrogate_gradient(&w, ds, p).or_usage()?);
    let mut pass = terms.agnostic_bound() <= norm;
    let massart = a.eta.map(|eta| terms.massart_bound(eta));
    if let Some(m) = massart {
        pass &= m <= norm;
    }
    Ok(Body {
        check: Check::Structural,
        pass,
        tolerance: 0.0,
        oracle: json!({
            "a1": terms.a1, "a2": terms.a2, "a3": terms.a3, "theta": terms.theta,
            "opt": terms.opt, "alpha": alpha,
            "agnostic_bound": terms.agnostic_bound(), "massart_bound": massart,
        }),
        library: json!({ "gradient_norm": norm, "w": w, "w_star": w_star }),
    })
}

fn strip_stats(ds: &Dataset, a: &OracleArgs, rng: &mut CtrRng) -> Result<Body, Failure> {
    let d = ds.dim();
    if d < 2 {
        return Err(Failure::usage(anyhow::anyhow!("strip-stats needs dimension at least 2")));
    }
    let w = direction(&a.w, d, rng, "--w")?;
    let v = OrthogonalProjector::new(&w).lift(&rng.unit_sphere(d - 1));
    let u = rng.unit_sphere(d);
    let u2 = rng.unit_sphere(d);
    let q = StripQuery {
        w: w.as_slice(),
        v: &v,
        u: &u,
        u_prime: &u2,
        sigma: a.sigma,
        offset: a.offset,
    };
    let emp = empirical_strip_statistics(ds.points(), &q).or_usage()?;
    let (mean, sd) = gaussian_strip_statistics(&q);
    let n = ds.len() as f64;
    let z: Vec<f64> = (0..4).map(|i| (emp[i] - mean[i]) / (sd[i] / n.sqrt()).max(1e-300)).collect();
    Ok(Body {
        check: Check::StripStats,
        pass: z.iter().all(|z| z.abs() <= 3.0),
        tolerance: 3.0,
        oracle: json!({ "gaussian": mean, "standard_error": sd.map(|s| s / n.sqrt()) }),
        library: json!({ "empirical": emp, "z_scores": z }),
    })
}

pub fn run(c: &Common, a: &OracleArgs) -> Result<Status, Failure> {
    let ds = read_dataset(&a.data)?;
    let seed = c.seed.unwrap_or(0);
    let mut rng = CtrRng::new(seed, stream_id(purpose::ORACLE, 0));
    let cfg = TesterConfig::default();
    let body = match a.check {
        Check::FourthMoment => fourth_moment(&ds, cfg.sdp_tol)?,
        Check::Gradient => {
            let w = direction(&a.w, ds.dim(), &mut rng, "--w")?;
            gradient(&ds, &w, a.sigma, a.step)?
        }
        Check::Erm => erm(&ds)?,
        Check::Structural => structural(&ds, a, &mut rng)?,
        Check::StripStats => strip_stats(&ds, a, &mut rng)?,
    };
    let resolved = Resolved {
        check: a.check,
        data: &a.data,
        seed,
        w: &a.w,
        w_star: &a.w_star,
        sigma: a.sigma,
        alpha: a.alpha,
        eta: a.eta,
        offset: a.offset,
        step: a.step,
    };
    let pass = body.pass;
    let report = Report::new("oracle", &resolved, Constants::from(&cfg), body);
    emit(&report.to_json()?)?;
    Ok(Status::from_accepted(pass))
}
