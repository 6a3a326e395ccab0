//! Finitely supported observations: the range of the adjoint is the
//! finite-dimensional row span of the conditional probabilities, which is
//! closed, so a functional is either regular or not identified at all.

use faer::Mat;

use super::{profile_of, Classification, Functional, SingularSystem, Thresholds, Verdict};
use crate::error::{Error, Result};
use crate::linop::{GridFunction, LinOp, WeightedSpace};

/// Relative residual below which a representer counts as in the row span.
pub const DISCRETE_SPAN_TOL: f64 = 1e-8;

/// Score operator of a finitely supported model from `p[j][k] = P(Z = z_j |
/// Z* = z*_k)` (columns sum to one) and latent weights, normalized to a
/// probability. Points are labeled by their index.
pub fn discrete_operator(p: &[Vec<f64>], weights_latent: &[f64]) -> Result<LinOp> {
    let m = p.len();
    let n = weights_latent.len();
    if m == 0 || n == 0 {
        return Err(Error::dims("discrete model needs at least one observed and one latent point"));
    }
    if p.iter().any(|row| row.len() != n) {
        return Err(Error::dims(format!("conditional probabilities must be {m}x{n}")));
    }
    if p.iter().flatten().chain(weights_latent).any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::invalid("probabilities and latent weights must be finite and nonnegative"));
    }
    for k in 0..n {
        let s: f64 = p.iter().map(|row| row[k]).sum();
        if (s - 1.0).abs() > 1e-8 {
            return Err(Error::invalid(format!("conditional probabilities for latent point {k} sum to {s}")));
        }
    }
    let total: f64 = weights_latent.iter().sum();
    if !(total > 0.0) {
        return Err(Error::invalid("latent weights sum to zero"));
    }
    let q: Vec<f64> = weights_latent.iter().map(|w| w / total).collect();
    let pz: Vec<f64> = p.iter().map(|row| row.iter().zip(&q).map(|(a, b)| a * b).sum()).collect();
    if pz.iter().any(|x| *x <= 0.0) {
        return Err(Error::ZeroMassObservation);
    }
    let domain = WeightedSpace::probability("G0", 1, (0..n).map(|k| k as f64).collect(), q.clone())?;
    let codomain = WeightedSpace::probability("P", 1, (0..m).map(|j| j as f64).collect(), pz.clone())?;
    LinOp::new(&domain, &codomain, Mat::from_fn(m, n, |j, k| p[j][k] * q[k] / pz[j]))
}

/// Verdict for a representer given by its values at the latent points.
pub fn classify_discrete(p: &[Vec<f64>], weights_latent: &[f64], r: &Functional) -> Result<Classification> {
    if r.representer.len() != weights_latent.len() {
        return Err(Error::dims(format!(
            "the representer must have {} values, got {}",
            weights_latent.len(),
            r.representer.len()
        )));
    }
    let op = discrete_operator(p, weights_latent)?;
    let domain = op.domain().clone();
    let sys = super::full_singular_system(&op)?;

    let rep = GridFunction::new(&domain, r.representer.values().to_vec())?.centered();
    let thresholds = Thresholds { tau_ident: DISCRETE_SPAN_TOL, ..Thresholds::default() };
    let d = if rep.norm() == 0.0 {
        zero_profile(&sys, &thresholds)
    } else {
        profile_of(&rep, &sys, &thresholds.beta_grid())?
    };
    let verdict = if d.null_mass <= DISCRETE_SPAN_TOL * d.representer_norm {
        Verdict::Regular
    } else {
        Verdict::Unidentified
    };
    Ok(Classification {
        functional: r.name.clone(),
        verdict,
        beta_star: None,
        mesh_stable: true,
        coarse_verdict: verdict,
        fine_verdict: verdict,
        coarse_diagnostics: d.clone(),
        diagnostics: d,
        thresholds,
    })
}

fn zero_profile(sys: &SingularSystem, t: &Thresholds) -> super::SourceDiagnostics {
    let k = sys.rank_cutoff();
    let betas = t.beta_grid();
    super::SourceDiagnostics {
        coefficients: vec![0.0; k],
        singular_values: sys.values()[..k].to_vec(),
        partial_sums: vec![vec![0.0; k]; betas.len()],
        betas,
        null_mass: 0.0,
        representer_norm: 0.0,
        fitted_decay: None,
        resolved: k,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rep(vals: Vec<f64>) -> Functional {
        let n = vals.len();
        let s = WeightedSpace::unit("s", n).unwrap();
        Functional::new("r", GridFunction::new(&s, vals).unwrap())
    }

    #[test]
    fn single_observed_value_identifies_nothing() {
        let p = vec![vec![1.0; 4]];
        let c = classify_discrete(&p, &[1.0; 4], &rep(vec![1.0, 2.0, 0.0, 1.0])).unwrap();
        assert_eq!(c.verdict, Verdict::Unidentified);
        let c = classify_discrete(&p, &[1.0; 4], &rep(vec![3.0; 4])).unwrap();
        assert_eq!(c.verdict, Verdict::Regular);
    }

    #[test]
    fn first_row_is_regular() {
        let p = vec![vec![0.2, 0.7, 0.5], vec![0.8, 0.3, 0.5]];
        let c = classify_discrete(&p, &[0.3, 0.3, 0.4], &rep(p[0].clone())).unwrap();
        assert_eq!(c.verdict, Verdict::Regular);
    }

    #[test]
    fn bad_columns_rejected() {
        let p = vec![vec![0.2, 0.7], vec![0.7, 0.3]];
        assert!(classify_discrete(&p, &[1.0, 1.0], &rep(vec![0.0, 1.0])).is_err());
    }
}
