use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    full_singular_system, plateaus, profile_of, Functional, SingularSystem, DELTA_CONV, TAU_IDENT,
};
use crate::error::{Error, Result};
use crate::linop::{GridFunction, LinOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegMethod {
    TruncatedSvd,
    Tikhonov,
}

/// How the regularization parameter is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum Selection {
    /// Truncation index `J` (rounded) or ridge `τ`.
    Fixed { parameter: f64 },
    /// Smallest `J` (largest `τ`) with relative residual at most `target`.
    Discrepancy { target: f64 },
    /// Discrepancy with `target = scale / √n` for a sample of size `n`;
    /// resolved by [`RegPolicy::for_sample_size`].
    NoiseLevel { scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegPolicy {
    pub method: RegMethod,
    pub selection: Selection,
}

impl Default for RegPolicy {
    fn default() -> Self {
        RegPolicy { method: RegMethod::TruncatedSvd, selection: Selection::Discrepancy { target: 1e-3 } }
    }
}

impl RegPolicy {
    pub fn truncated(j: usize) -> Self {
        RegPolicy { method: RegMethod::TruncatedSvd, selection: Selection::Fixed { parameter: j as f64 } }
    }

    pub fn tikhonov(tau: f64) -> Self {
        RegPolicy { method: RegMethod::Tikhonov, selection: Selection::Fixed { parameter: tau } }
    }

    /// Turns a noise-level rule into a discrepancy target for `n` samples.
    pub fn for_sample_size(&self, n: usize) -> RegPolicy {
        match self.selection {
            Selection::NoiseLevel { scale } => RegPolicy {
                method: self.method,
                selection: Selection::Discrepancy { target: scale / (n.max(1) as f64).sqrt() },
            },
            _ => *self,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentSolution {
    /// Solution on the observation space.
    #[serde(skip)]
    pub g: GridFunction,
    /// `‖S*g − r‖ / ‖r‖`, with `r − calibration` when defined up to a constant.
    pub residual: f64,
    pub g_norm: f64,
    /// The β = 1 source-norm sums do not plateau, so `‖g‖` grows without
    /// bound as regularization is relaxed.
    pub irregular: bool,
    pub flags: Vec<String>,
    /// Added to `E[g(Z)]` to get the functional's value.
    pub calibration: f64,
    pub policy: RegPolicy,
    /// Truncation index used (TruncatedSvd).
    pub truncation: Option<usize>,
    /// Ridge used (Tikhonov).
    pub ridge: Option<f64>,
}

/// Regularized solution of `S*g = r` for the score operator `op`.
pub fn solve_adjoint_equation(op: &LinOp, r: &Functional, policy: &RegPolicy) -> Result<MomentSolution> {
    let sys = full_singular_system(op)?;
    solve_with_system(&sys, r, policy)
}

/// Same as [`solve_adjoint_equation`] with a precomputed singular system.
///
/// A functional defined up to a constant is solved for `r − calibration`,
/// so that `E[g(Z)] + calibration` is its value.
pub fn solve_with_system(sys: &SingularSystem, r: &Functional, policy: &RegPolicy) -> Result<MomentSolution> {
    let centered = profile_of(&r.effective(), sys, &[1.0])?;
    if centered.null_mass > TAU_IDENT * centered.representer_norm {
        return Err(Error::NullSpaceMass);
    }
    let rep = if r.defined_up_to_constant {
        r.representer.map(|v| v - r.calibration_constant)
    } else {
        r.representer.clone()
    };
    let d = profile_of(&rep, sys, &[1.0])?;
    let rnorm = d.representer_norm;
    let k = d.resolved;
    let lam = &d.singular_values;
    let rc = &d.coefficients;
    let null2 = d.null_mass * d.null_mass;
    let rel = |res2: f64| if rnorm > 0.0 { res2.max(0.0).sqrt() / rnorm } else { 0.0 };

    let (coef, truncation, ridge) = match policy.method {
        RegMethod::TruncatedSvd => {
            // tail[j] = Σ_{i ≥ j} r_i²
            let mut tail = vec![0.0; k + 1];
            for j in (0..k).rev() {
                tail[j] = tail[j + 1] + rc[j] * rc[j];
            }
            let j = match policy.selection {
                Selection::Fixed { parameter } => {
                    let j = parameter.round();
                    if !(j >= 1.0 && j as usize <= k) {
                        return Err(Error::invalid(format!("truncation index {parameter} outside 1..={k}")));
                    }
                    j as usize
                }
                Selection::NoiseLevel { .. } => return Err(noise_level_unresolved()),
                Selection::Discrepancy { target } => {
                    (1..=k).find(|&j| rel(tail[j] + null2) <= target).unwrap_or(k)
                }
            };
            let c: Vec<f64> = (0..k).map(|i| if i < j { rc[i] / lam[i] } else { 0.0 }).collect();
            (c, Some(j), None)
        }
        RegMethod::Tikhonov => {
            let coef_at = |tau: f64| -> Vec<f64> { (0..k).map(|i| lam[i] * rc[i] / (lam[i] * lam[i] + tau)).collect() };
            let res_at = |tau: f64| -> f64 {
                let s: f64 = (0..k).map(|i| (tau * rc[i] / (lam[i] * lam[i] + tau)).powi(2)).sum();
                rel(s + null2)
            };
            let tau = match policy.selection {
                Selection::Fixed { parameter } => {
                    if !(parameter > 0.0 && parameter.is_finite()) {
                        return Err(Error::invalid(format!("ridge must be positive, got {parameter}")));
                    }
                    parameter
                }
                Selection::NoiseLevel { .. } => return Err(noise_level_unresolved()),
                Selection::Discrepancy { target } => {
                    let l2 = sys.lambda_max().powi(2);
                    // largest τ on a log grid meeting the target; the residual is monotone in τ
                    (0..=320)
                        .map(|i| l2 * 10f64.powf(2.0 - i as f64 / 20.0))
                        .find(|&t| res_at(t) <= target)
                        .unwrap_or(l2 * 1e-14)
                }
            };
            (coef_at(tau), None, Some(tau))
        }
    };

    let g = sys.synthesize_left(&coef);
    let g_norm = coef.iter().map(|c| c * c).sum::<f64>().sqrt();
    // S*g = Σ λ_j c_j φ_j, evaluated on the grid
    let lc: Vec<f64> = coef.iter().zip(lam).map(|(c, l)| c * l).collect();
    let residual = rel(sys.synthesize_right(&lc).combine(1.0, &rep, -1.0)?.norm().powi(2));

    let irregular = !centered.partial_sum_curve(1.0).is_some_and(|c| plateaus(c, DELTA_CONV));
    let flags = if irregular { vec!["irregular: norm-divergent".to_string()] } else { vec![] };
    Ok(MomentSolution {
        g,
        residual,
        g_norm,
        irregular,
        flags,
        calibration: if r.defined_up_to_constant { r.calibration_constant } else { 0.0 },
        policy: *policy,
        truncation,
        ridge,
    })
}

fn noise_level_unresolved() -> Error {
    Error::invalid("noise-level selection needs a sample size; call RegPolicy::for_sample_size")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub estimate: f64,
    pub se: f64,
    /// Samples used (inside the grid).
    pub n: usize,
    /// Samples outside the grid, excluded.
    pub outside: usize,
}

/// Largest fraction of samples allowed outside the observation grid.
pub const MAX_OUTSIDE_FRACTION: f64 = 0.01;

/// Sample mean of `g` at the observations plus `calibration`, with its
/// standard error. `samples` holds points row-major in the dimension of
/// `g`'s space. Values between nodes are interpolated multilinearly on
/// tensor grids; off-tensor spaces require exact node matches.
pub fn moment_estimate(g: &GridFunction, calibration: f64, samples: &[f64]) -> Result<MomentEstimate> {
    let space = g.space();
    let d = space.dim();
    if samples.len() % d != 0 {
        return Err(Error::dims(format!("{} sample coordinates in dimension {d}", samples.len())));
    }
    let n = samples.len() / d;
    if n == 0 {
        return Err(Error::invalid("no samples"));
    }
    let interp = Interpolator::new(g);
    let mut vals = Vec::with_capacity(n);
    for p in samples.chunks(d) {
        if let Some(v) = interp.eval(p) {
            vals.push(v);
        }
    }
    let outside = n - vals.len();
    if outside as f64 > MAX_OUTSIDE_FRACTION * n as f64 || vals.is_empty() {
        return Err(Error::GridDoesNotCover { outside, n });
    }
    let m = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / m;
    let var = if vals.len() > 1 { vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0) } else { 0.0 };
    Ok(MomentEstimate { estimate: mean + calibration, se: (var / m).sqrt(), n: vals.len(), outside })
}

/// Multilinear interpolation on a (possibly partially dropped) tensor grid.
pub struct Interpolator<'a> {
    g: &'a GridFunction,
}

impl<'a> Interpolator<'a> {
    pub fn new(g: &'a GridFunction) -> Self {
        Interpolator { g }
    }

    /// `None` outside the grid's bounding box. Dropped tensor nodes count
    /// as zero.
    pub fn eval(&self, p: &[f64]) -> Option<f64> {
        let space = self.g.space();
        let v = self.g.values();
        let Some(t) = space.axes() else {
            return (0..space.len())
                .find(|&i| space.node(i).iter().zip(p).all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + a.abs())))
                .map(|i| v[i]);
        };
        let d = t.axes.len();
        let mut lo = Vec::with_capacity(d);
        let mut frac = Vec::with_capacity(d);
        for (ax, &x) in t.axes.iter().zip(p) {
            let (first, last) = (ax[0], ax[ax.len() - 1]);
            let tol = 1e-12 * (1.0 + first.abs().max(last.abs()));
            if !(x >= first - tol && x <= last + tol) {
                return None;
            }
            if ax.len() == 1 {
                lo.push(0);
                frac.push(0.0);
                continue;
            }
            let i = ax.partition_point(|&a| a <= x).clamp(1, ax.len() - 1) - 1;
            let f = ((x - ax[i]) / (ax[i + 1] - ax[i])).clamp(0.0, 1.0);
            lo.push(i);
            frac.push(f);
        }
        let mut acc = 0.0;
        let mut multi = vec![0usize; d];
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            for k in 0..d {
                let up = (corner >> k) & 1 == 1;
                let f = if up { frac[k] } else { 1.0 - frac[k] };
                if f == 0.0 {
                    w = 0.0;
                    break;
                }
                w *= f;
                multi[k] = lo[k] + up as usize;
            }
            if w == 0.0 {
                continue;
            }
            if let Some(i) = t.index[t.flat(&multi)] {
                acc += w * v[i];
            }
        }
        Some(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::{Axis, WeightedSpace};

    #[test]
    fn identity_solves_exactly() {
        let s = WeightedSpace::probability("p", 1, vec![0.0, 1.0, 2.0], vec![0.2, 0.3, 0.5]).unwrap();
        let op = LinOp::identity(&s);
        let r = Functional::new("r", GridFunction::new(&s, vec![1.0, -2.0, 0.5]).unwrap());
        let sol = solve_adjoint_equation(&op, &r, &RegPolicy::default()).unwrap();
        assert!(sol.residual < 1e-14);
        for (a, b) in sol.g.values().iter().zip(r.representer.values()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn bilinear_interpolation_is_exact_on_bilinear_functions() {
        let s = WeightedSpace::tensor("xy", &[Axis::trapezoid(0.0, 1.0, 5).unwrap(), Axis::trapezoid(-1.0, 1.0, 7).unwrap()])
            .unwrap();
        let g = GridFunction::from_fn(&s, |x| 1.0 + 2.0 * x[0] - x[1] + 3.0 * x[0] * x[1]);
        let it = Interpolator::new(&g);
        for p in [[0.13, 0.4], [0.99, -0.77], [0.0, 1.0]] {
            let want = 1.0 + 2.0 * p[0] - p[1] + 3.0 * p[0] * p[1];
            assert!((it.eval(&p).unwrap() - want).abs() < 1e-13);
        }
        assert!(it.eval(&[1.1, 0.0]).is_none());
    }

    #[test]
    fn coverage_contract() {
        let s = WeightedSpace::tensor("x", &[Axis::trapezoid(0.0, 1.0, 3).unwrap()]).unwrap();
        let g = GridFunction::constant(&s, 2.0);
        let e = moment_estimate(&g, 0.5, &[0.1, 0.2, 0.9]).unwrap();
        assert_eq!((e.estimate, e.se), (2.5, 0.0));
        let mut xs = vec![0.5; 98];
        xs.extend([3.0, 4.0]);
        assert!(matches!(moment_estimate(&g, 0.0, &xs), Err(Error::GridDoesNotCover { .. })));
    }
}
