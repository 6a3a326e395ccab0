use serde::Serialize;

use crate::diagnostics::{generalized_fisher_ratio, Functional, PowerGauge, SingularSystem};
use crate::error::{Error, Result};
use crate::linop::GridFunction;

/// Mass that clipping may remove at the largest `t` before the path is
/// declared to leave the model.
pub const MAX_CLIP: f64 = 0.2;

#[derive(Debug, Clone, Serialize)]
pub struct PathPoint {
    pub t: f64,
    /// `|φ(λ_t) − φ(λ₀)|`.
    pub delta_phi: f64,
    /// `‖(f_{λ_t} − f_{λ₀}) / f_{λ₀}‖ = ‖S b_t‖`.
    pub distance: f64,
    /// `distance² / t^{2ρ}`.
    pub ratio: f64,
    /// Mass removed by clipping `λ_t` at zero.
    pub clip_fraction: f64,
    /// `‖S b_t‖² / φ̇(b_t)^{2ρ}` from the diagnostics module.
    pub generalized_fisher_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PathReport {
    pub rho: f64,
    pub gauge: String,
    /// False when `r` has no coefficient beyond the first mode.
    pub attainable: bool,
    pub note: Option<String>,
    /// Mode index `J` (0-based) used for the direction `φ_J / |r_J|`.
    pub mode: Option<usize>,
    pub lambda_j: Option<f64>,
    pub r_j: Option<f64>,
    /// `log λ_J / log |r_J|`.
    pub mode_exponent: Option<f64>,
    pub points: Vec<PathPoint>,
    /// Condition (i): `C = min_t |Δφ| / t`.
    pub c: Option<f64>,
    /// `|Δφ| ≤ 1` at every `t`.
    pub upper_bound_holds: bool,
    /// Condition (ii): `ε = max_t distance² / t^{2ρ}`.
    pub epsilon: Option<f64>,
    /// Largest `ρ` whose ratio never exceeds its value at the largest `t`.
    pub rho_star: Option<f64>,
    /// Every generalized-Fisher ratio is at most `ε`.
    pub cross_check_holds: bool,
}

/// Perturbs `λ₀` along the last resolved singular mode that `r` loads on and
/// evaluates both conditions of the impossibility argument at each `t`.
///
/// On a probability domain `λ_t / λ₀ = max(1 + t b, 0)` renormalized to
/// mass one; otherwise `λ_t − λ₀ = t b`.
pub fn impossibility_path(sys: &SingularSystem, r: &Functional, rho: f64, ts: &[f64]) -> Result<PathReport> {
    if !(rho >= 1.0 && rho.is_finite()) {
        return Err(Error::invalid(format!("path exponent must be >= 1, got {rho}")));
    }
    let mut ts = ts.to_vec();
    if ts.is_empty() || ts.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::invalid("path parameters must be positive"));
    }
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let gauge = PowerGauge { rho };
    let rep = r.effective();
    let resolved = sys.rank_cutoff();
    if resolved == 0 {
        return Err(Error::RankZero);
    }
    let coef = sys.right_coefficients(&rep)?;
    let scale = coef[..resolved].iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let j = (0..resolved).rev().find(|&j| coef[j].abs() > 1e-12 * scale);
    let mut report = PathReport {
        rho,
        gauge: format!("power(rho={rho})"),
        attainable: false,
        note: None,
        mode: None,
        lambda_j: None,
        r_j: None,
        mode_exponent: None,
        points: Vec::new(),
        c: None,
        upper_bound_holds: true,
        epsilon: None,
        rho_star: None,
        cross_check_holds: true,
    };
    let j = match j {
        Some(j) if j > 0 => j,
        _ => {
            report.note = Some("conditions unattainable: I_{φ,ρ} > 0".into());
            return Ok(report);
        }
    };
    let (lj, rj) = (sys.values()[j], coef[j]);
    let b = sys.right(j).scaled(1.0 / rj.abs());
    let dom = sys.domain();
    let probability = dom.is_probability();
    let w = dom.weights();

    let mut points = Vec::with_capacity(ts.len());
    for &t in &ts {
        let (bt, clip) = if probability {
            let raw: Vec<f64> = b.values().iter().map(|x| 1.0 + t * x).collect();
            let clip: f64 = raw.iter().zip(w).map(|(x, w)| (-x).max(0.0) * w).sum();
            let kept: Vec<f64> = raw.iter().map(|x| x.max(0.0)).collect();
            let mass: f64 = kept.iter().zip(w).map(|(x, w)| x * w).sum();
            (GridFunction::new(dom, kept.iter().map(|x| x / mass - 1.0).collect())?, clip)
        } else {
            (b.scaled(t), 0.0)
        };
        let c = sys.right_coefficients(&bt)?;
        let distance = c.iter().zip(sys.values()).map(|(c, l)| (c * l).powi(2)).sum::<f64>().sqrt();
        let delta_phi = rep.inner(&bt)?.abs();
        points.push(PathPoint {
            t,
            delta_phi,
            distance,
            ratio: distance * distance / t.powf(2.0 * rho),
            clip_fraction: clip,
            generalized_fisher_ratio: generalized_fisher_ratio(r, sys, &bt, &gauge)?,
        });
    }
    if let Some(p) = points.last().filter(|p| p.clip_fraction > MAX_CLIP) {
        return Err(Error::PathLeavesModel { t: p.t, clip: p.clip_fraction });
    }
    let c = points.iter().map(|p| p.delta_phi / p.t).fold(f64::INFINITY, f64::min);
    let epsilon = points.iter().map(|p| p.ratio).fold(0.0, f64::max);
    let last = points.last().expect("nonempty");
    let r1 = |p: &PathPoint| (p.distance / p.t).powi(2).ln();
    let rho_star = points[..points.len() - 1]
        .iter()
        .filter(|p| p.t < last.t)
        .map(|p| 1.0 + (r1(last) - r1(p)) / (2.0 * (last.t / p.t).ln()))
        .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.min(x))));
    report.attainable = true;
    report.mode = Some(j);
    report.lambda_j = Some(lj);
    report.r_j = Some(rj);
    report.mode_exponent = Some(lj.ln() / rj.abs().ln());
    report.c = Some(c);
    report.upper_bound_holds = points.iter().all(|p| p.delta_phi <= 1.0);
    report.epsilon = Some(epsilon);
    report.rho_star = rho_star;
    report.cross_check_holds = points.iter().all(|p| p.generalized_fisher_ratio <= epsilon * (1.0 + 1e-9));
    report.points = points;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::full_singular_system;
    use crate::models::{synthetic_operator, SyntheticSpec};

    #[test]
    fn dyadic_sequence_single_mode() {
        let (op, r) = synthetic_operator(&SyntheticSpec::dyadic(10)).unwrap();
        let sys = full_singular_system(&op).unwrap();
        let rep = impossibility_path(&sys, &r, 1.0, &[0.1, 0.2, 0.4]).unwrap();
        assert_eq!(rep.mode, Some(9));
        for p in &rep.points {
            assert!((p.delta_phi - p.t).abs() < 1e-12);
            assert!((p.distance - p.t).abs() < 1e-12);
        }
        assert!((rep.rho_star.unwrap() - 1.0).abs() < 1e-9);
        assert!(rep.cross_check_holds);
    }

    #[test]
    fn first_mode_only_is_unattainable() {
        let (op, _) = synthetic_operator(&SyntheticSpec::dyadic(5)).unwrap();
        let sys = full_singular_system(&op).unwrap();
        let r = Functional::new("phi1", sys.right(0));
        let rep = impossibility_path(&sys, &r, 1.0, &[0.1, 0.2]).unwrap();
        assert!(!rep.attainable);
        assert!(rep.note.unwrap().contains("unattainable"));
    }
}
