use serde::Serialize;

use crate::error::Result;
use crate::la;
use crate::linop::{check_space, GridFunction, LinOp};

/// Default ridge relative to `‖l̇_η‖²_op`.
pub const DEFAULT_RIDGE: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct EfficientScore {
    /// `l̃_θ = l̇_θ − l̇_η b*`.
    #[serde(skip)]
    pub score: GridFunction,
    /// The nuisance direction `b*`.
    #[serde(skip)]
    pub nuisance: GridFunction,
    /// `‖l̃_θ‖²`.
    pub information: f64,
    pub ridge: f64,
    /// `(ridge, information)` at the ridge times 1, 10 and 100.
    pub sweep: Vec<(f64, f64)>,
    /// True when the information moves by more than a decade over the
    /// two-decade sweep, i.e. it is driven by the ridge and its limit is 0.
    pub vanishing: bool,
}

/// Efficient score by ridge-regularized least squares in the operator's
/// singular coordinates. `ridge = None` uses `1e-8 · ‖l̇_η‖²_op`.
pub fn efficient_score(score_theta: &GridFunction, score_eta: &LinOp, ridge: Option<f64>) -> Result<EfficientScore> {
    check_space(score_eta.codomain(), score_theta.space())?;
    let (u, s, v) = la::thin_svd(&score_eta.symmetrized())?;
    let smax = s.first().copied().unwrap_or(0.0);
    let tau = ridge.unwrap_or(DEFAULT_RIDGE * smax * smax).max(f64::MIN_POSITIVE);
    let wc = score_eta.codomain().weights();
    let wd = score_eta.domain().weights();
    let y: Vec<f64> = score_theta.values().iter().zip(wc).map(|(g, w)| g * w.sqrt()).collect();
    let uy = la::matvec_t(&u, &y);

    let info_at = |t: f64| -> f64 {
        // ‖(I − U diag(s²/(s²+t)) Uᵀ) y‖²
        let shrink: Vec<f64> = uy.iter().zip(&s).map(|(c, s)| c * s * s / (s * s + t)).collect();
        let fitted = la::matvec(&u, &shrink);
        y.iter().zip(&fitted).map(|(a, b)| (a - b).powi(2)).sum()
    };

    let coef: Vec<f64> = uy.iter().zip(&s).map(|(c, s)| c * s / (s * s + tau)).collect();
    let b_orth = la::matvec(&v, &coef);
    let b: Vec<f64> = b_orth.iter().zip(wd).map(|(x, w)| x / w.sqrt()).collect();
    let nuisance = GridFunction::new(score_eta.domain(), b)?;
    let fitted = score_eta.apply(&nuisance)?;
    let score = score_theta.combine(1.0, &fitted, -1.0)?;

    let sweep: Vec<(f64, f64)> = [1.0, 10.0, 100.0].iter().map(|m| (tau * m, info_at(tau * m))).collect();
    let information = sweep[0].1;
    let vanishing = if information > 0.0 { sweep[2].1 / information > 10.0 } else { true };
    Ok(EfficientScore { score, nuisance, information, ridge: tau, sweep, vanishing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::WeightedSpace;

    #[test]
    fn three_by_two_hand_least_squares() {
        let dom = WeightedSpace::unit("b", 2).unwrap();
        let cod = WeightedSpace::unit("z", 3).unwrap();
        let op = LinOp::from_rows(&dom, &cod, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let lt = GridFunction::new(&cod, vec![1.0, 1.0, 1.0]).unwrap();
        let e = efficient_score(&lt, &op, None).unwrap();
        assert!((e.information - 1.0).abs() < 1e-12);
        assert!((e.score.values()[2] - 1.0).abs() < 1e-15);
        assert!(e.score.values()[0].abs() < 1e-7);
        assert!(!e.vanishing);
    }

    #[test]
    fn score_in_range_has_vanishing_information() {
        let dom = WeightedSpace::unit("b", 2).unwrap();
        let cod = WeightedSpace::unit("z", 3).unwrap();
        let op = LinOp::from_rows(&dom, &cod, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        let lt = op.apply(&GridFunction::new(&dom, vec![0.3, -2.0]).unwrap()).unwrap();
        let e = efficient_score(&lt, &op, None).unwrap();
        assert!(e.information < 1e-12);
        assert!(e.vanishing);
        assert!(e.sweep.windows(2).all(|w| w[1].1 >= w[0].1));
    }
}
