use rayon::prelude::*;
use serde::Serialize;

use super::simulate::{replication_rng, Sampler};
use crate::diagnostics::{full_singular_system, Functional, SingularSystem};
use crate::error::{Error, Result};
use crate::linop::LinOp;
use crate::solvers::{moment_estimate, solve_with_system, RegPolicy};

#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    pub ns: Vec<usize>,
    pub rmse: Vec<f64>,
    pub bias: Vec<f64>,
    /// Truncation level or ridge chosen at each `n`.
    pub regularization: Vec<f64>,
    /// Slope of `log RMSE` on `log n`; absent when some RMSE is zero.
    pub slope: Option<f64>,
    /// Standard error of the slope; absent with fewer than two
    /// replications or three points.
    pub slope_se: Option<f64>,
    pub reps: usize,
    pub seed: u64,
    pub truth: f64,
    pub flags: Vec<String>,
    /// `estimates[k][rep]` for `ns[k]`.
    #[serde(skip)]
    pub estimates: Vec<Vec<f64>>,
}

/// Least-squares line through `(x, y)`: `(slope, standard error)`. The
/// error needs at least three points.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Option<(f64, Option<f64>)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / sxx;
    let se = (n > 2).then(|| {
        let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
        (rss / (n - 2) as f64 / sxx).sqrt()
    });
    Some((slope, se))
}

/// Monte Carlo RMSE of the moment estimator `E_n[g] + calibration` across
/// sample sizes, against the quadrature truth `⟨r, 1⟩`.
pub fn rate_experiment(
    op: &LinOp,
    r: &Functional,
    policy: &RegPolicy,
    ns: &[usize],
    reps: usize,
    seed: u64,
) -> Result<RateFit> {
    let sys = full_singular_system(op)?;
    rate_experiment_with(op, &sys, r, policy, ns, reps, seed)
}

pub fn rate_experiment_with(
    op: &LinOp,
    sys: &SingularSystem,
    r: &Functional,
    policy: &RegPolicy,
    ns: &[usize],
    reps: usize,
    seed: u64,
) -> Result<RateFit> {
    let mut distinct = ns.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 || distinct[0] == 0 {
        return Err(Error::invalid("rate experiments need at least 3 distinct positive sample sizes"));
    }
    if reps == 0 {
        return Err(Error::invalid("rate experiments need at least one replication"));
    }
    let truth = r.value();
    let sampler = Sampler::new(op.codomain())?;
    let mut rmse = Vec::with_capacity(ns.len());
    let mut bias = Vec::with_capacity(ns.len());
    let mut regularization = Vec::with_capacity(ns.len());
    let mut estimates = Vec::with_capacity(ns.len());
    for (k, &n) in ns.iter().enumerate() {
        let sol = solve_with_system(sys, r, &policy.for_sample_size(n)).map_err(|e| {
            if e.is_identification() {
                Error::NotIdentified
            } else {
                e
            }
        })?;
        regularization.push(sol.truncation.map(|j| j as f64).or(sol.ridge).unwrap_or(f64::NAN));
        let est: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let mut rng = replication_rng(seed, ((k as u64) << 32) | rep as u64);
                let x = sampler.sample(n, &mut rng);
                moment_estimate(&sol.g, sol.calibration, &x.points).map(|m| m.estimate)
            })
            .collect::<Result<_>>()?;
        let mse = est.iter().map(|e| (e - truth).powi(2)).sum::<f64>() / reps as f64;
        rmse.push(mse.sqrt());
        bias.push(est.iter().sum::<f64>() / reps as f64 - truth);
        estimates.push(est);
    }
    let mut flags = Vec::new();
    let (slope, slope_se) = if rmse.iter().any(|e| *e <= 0.0) {
        flags.push("degenerate fit: zero RMSE".to_string());
        (None, None)
    } else {
        let lx: Vec<f64> = ns.iter().map(|n| (*n as f64).ln()).collect();
        let ly: Vec<f64> = rmse.iter().map(|e| e.ln()).collect();
        match fit_slope(&lx, &ly) {
            Some((s, se)) => (Some(s), se),
            None => (None, None),
        }
    };
    let slope_se = if reps < 2 {
        flags.push("slope standard error not available: single replication".to_string());
        None
    } else {
        slope_se
    };
    Ok(RateFit { ns: ns.to_vec(), rmse, bias, regularization, slope, slope_se, reps, seed, truth, flags, estimates })
}
