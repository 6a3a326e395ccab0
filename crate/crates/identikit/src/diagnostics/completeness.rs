use serde::Serialize;

use crate::error::Result;
use crate::la;
use crate::linop::{mean_zero_basis, LinOp, TangentBasis};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompletenessReport {
    pub complete: bool,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub tol: f64,
}

/// `(λ_min > tol · λ_max, λ_min)` over the whole domain of `op`. A domain
/// larger than the codomain always has a null direction, so `λ_min = 0`.
pub fn completeness_check(op: &LinOp, tol: f64) -> Result<(bool, f64)> {
    let r = completeness_report(op, tol)?;
    Ok((r.complete, r.lambda_min))
}

pub fn completeness_report(op: &LinOp, tol: f64) -> Result<CompletenessReport> {
    report_against(op, tol, 0.0)
}

/// `reference` is a lower bound for the scale `λ_min` is compared with, so
/// that an operator that is zero up to round-off is not called complete.
fn report_against(op: &LinOp, tol: f64, reference: f64) -> Result<CompletenessReport> {
    let (_, s, _) = la::thin_svd(&op.symmetrized())?;
    let lambda_max = s.first().copied().unwrap_or(0.0);
    let lambda_min = if op.cols() > op.rows() { 0.0 } else { s.last().copied().unwrap_or(0.0) };
    let scale = lambda_max.max(reference);
    Ok(CompletenessReport { complete: lambda_min > tol * scale, lambda_min, lambda_max, tol })
}

/// Restricts to weighted-mean-zero directions first (the default tangent
/// space of a density). The scale is that of the unrestricted operator.
pub fn completeness_on_mean_zero(op: &LinOp, tol: f64) -> Result<CompletenessReport> {
    let (_, s, _) = la::thin_svd(&op.symmetrized())?;
    let basis = TangentBasis::new(&mean_zero_basis(op.domain()))?;
    report_against(&basis.restrict(op)?, tol, s.first().copied().unwrap_or(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::{build_score_from_joint, JointDensity, WeightedSpace};

    #[test]
    fn identity_complete_product_not() {
        let s = WeightedSpace::probability("p", 1, vec![0.0, 1.0, 2.0], vec![0.2, 0.3, 0.5]).unwrap();
        let (ok, lmin) = completeness_check(&LinOp::identity(&s), 1e-8).unwrap();
        assert!(ok && (lmin - 1.0).abs() < 1e-12);

        let z = WeightedSpace::unit("z", 3).unwrap();
        let jd = JointDensity::from_fn_normalized(&z, &s, |i, j| (i + 1) as f64 * (j + 2) as f64).unwrap();
        let op = build_score_from_joint(&jd).unwrap();
        let r = completeness_on_mean_zero(&op, 1e-8).unwrap();
        assert!(!r.complete);
        assert!(r.lambda_max < 1e-12);
    }
}
