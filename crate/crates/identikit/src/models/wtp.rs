//! Willingness to pay from a single binary offer: `Y = 1(W > V)` with the
//! offer `V` drawn independently of the latent valuation `W`.

use serde::{Deserialize, Serialize};

use crate::diagnostics::Functional;
use crate::error::{Error, Result};
use crate::linop::{build_score_from_joint, Axis, GridFunction, JointDensity, LinOp, TrimReport, WeightedSpace};

/// Relative tolerance for the build-time check of the closed-form solution.
pub const WTP_VALIDATION_TOL: f64 = 1e-6;

/// Successive-increment ratio above which a regularity integral is
/// reported as divergent.
pub const DIVERGENCE_RATIO: f64 = 0.75;

/// A density on `[0, upper]`, normalized on whatever grid it is used with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Density1 {
    Uniform,
    /// Proportional to `|x − point|^exponent`.
    VanishingAt { point: f64, exponent: f64 },
}

impl Density1 {
    /// Unnormalized density.
    fn raw(&self, x: f64) -> f64 {
        match self {
            Density1::Uniform => 1.0,
            Density1::VanishingAt { point, exponent } => (x - point).abs().powf(*exponent),
        }
    }

    /// Normalizing constant on `[0, upper]` in closed form.
    fn mass(&self, upper: f64) -> f64 {
        match self {
            Density1::Uniform => upper,
            Density1::VanishingAt { point, exponent } => {
                let q = exponent + 1.0;
                let p = *point;
                if p <= 0.0 {
                    ((upper - p).powf(q) - (-p).powf(q)) / q
                } else if p >= upper {
                    (p.powf(q) - (p - upper).powf(q)) / q
                } else {
                    (p.powf(q) + (upper - p).powf(q)) / q
                }
            }
        }
    }

    pub fn density(&self, x: f64, upper: f64) -> f64 {
        if !(0.0..=upper).contains(&x) {
            return 0.0;
        }
        self.raw(x) / self.mass(upper)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WtpSpec {
    pub w_max: f64,
    pub v_max: f64,
    pub w_density: Density1,
    pub v_density: Density1,
    /// Common lattice spacing of the valuation and offer grids.
    pub h: f64,
}

impl WtpSpec {
    /// `W ~ U[0,1]`, `V ~ U[0,2]`.
    pub fn uniform(h: f64) -> Self {
        WtpSpec { w_max: 1.0, v_max: 2.0, w_density: Density1::Uniform, v_density: Density1::Uniform, h }
    }

    /// `W ~ U[0,1]` and an offer density on `[0,1]` vanishing quadratically at 1/2.
    pub fn vanishing(h: f64) -> Self {
        WtpSpec {
            w_max: 1.0,
            v_max: 1.0,
            w_density: Density1::Uniform,
            v_density: Density1::VanishingAt { point: 0.5, exponent: 2.0 },
            h,
        }
    }

    pub fn f_v(&self, v: f64) -> f64 {
        self.v_density.density(v, self.v_max)
    }
}

#[derive(Debug, Clone)]
pub struct WtpModel {
    pub spec: WtpSpec,
    /// From the valuation law to the law of `(Y, V)`.
    pub op: LinOp,
    /// Offer nodes with zero density are dropped.
    pub trim: TrimReport,
    /// Normalized offer density on the full offer lattice.
    f_v_nodes: Vec<f64>,
}

fn lattice(upper: f64, h: f64) -> Result<Axis> {
    let cells = upper / h;
    let n = cells.round();
    if !(h > 0.0) || (cells - n).abs() > 1e-9 * cells.max(1.0) || n < 2.0 {
        return Err(Error::invalid(format!("spacing {h} does not divide [0, {upper}] into at least 2 cells")));
    }
    Axis::trapezoid(0.0, upper, n as usize + 1)
}

fn normalized(axis: &Axis, d: &Density1, upper: f64) -> Vec<f64> {
    let raw: Vec<f64> = axis.nodes.iter().map(|x| d.density(*x, upper)).collect();
    let m: f64 = raw.iter().zip(&axis.weights).map(|(f, w)| f * w).sum();
    raw.into_iter().map(|f| f / m).collect()
}

pub fn wtp_model(spec: &WtpSpec) -> Result<WtpModel> {
    if !(spec.w_max > 0.0 && spec.v_max > 0.0) {
        return Err(Error::invalid("valuation and offer ranges must be positive"));
    }
    let wa = lattice(spec.w_max, spec.h)?;
    let va = lattice(spec.v_max, spec.h)?;
    let fw = normalized(&wa, &spec.w_density, spec.w_max);
    let fv = normalized(&va, &spec.v_density, spec.v_max);
    let latent = WeightedSpace::tensor("valuation", &[wa])?;
    let obs = WeightedSpace::tensor("offer", &[Axis::discrete(vec![0.0, 1.0], vec![1.0, 1.0])?, va.clone()])?;
    let nv = va.len();
    let tie = 1e-9 * spec.h;
    let jd = JointDensity::from_fn_normalized(&obs, &latent, |i, j| {
        let (y, v) = (obs.node(i)[0], obs.node(i)[1]);
        let w = latent.node(j)[0];
        // a tie splits the offer's quadrature cell; at the ends of the offer
        // range the cell lies entirely on one side
        let p1 = if (w - v).abs() < tie {
            if v < tie {
                0.0
            } else if v > spec.v_max - tie {
                1.0
            } else {
                0.5
            }
        } else if w > v {
            1.0
        } else {
            0.0
        };
        let p = if y > 0.5 { p1 } else { 1.0 - p1 };
        p * fv[i % nv] * fw[j]
    })?;
    let (jd, trim) = jd.trimmed(1e-12)?;
    let op = build_score_from_joint(&jd)?;
    let model = WtpModel { spec: spec.clone(), op, trim, f_v_nodes: fv };
    if model.trim.dropped > 0 {
        // the closed form has a pole at a zero of f_V, nothing to check
        return Ok(model);
    }
    // the closed-form solution must reproduce a linear representer exactly
    let (g, c) = wtp_solution_g(&model, &|w| w)?;
    let back = crate::linop::adjoint(&model.op).apply(&g)?;
    let target = GridFunction::from_fn(model.op.domain(), |x| x[0] - c);
    let err = back.combine(1.0, &target, -1.0)?.norm() / target.norm().max(1e-300);
    if err > WTP_VALIDATION_TOL {
        return Err(Error::Numerical(format!("closed-form WTP solution misses its target by {err:.3e}")));
    }
    Ok(model)
}

fn derivative(r: &dyn Fn(f64) -> f64, x: f64, lo: f64, hi: f64) -> f64 {
    let d = 1e-6 * (hi - lo).max(1.0);
    let a = (x - d).max(lo);
    let b = (x + d).min(hi);
    (r(b) - r(a)) / (b - a)
}

/// Rejects a representer with a jump on `[a, b]`: the largest increment on a
/// grid must shrink when the grid is refined eightfold.
pub fn check_absolutely_continuous(r: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Result<()> {
    let max_jump = |n: usize| -> f64 {
        let h = (b - a) / n as f64;
        (0..n).map(|i| (r(a + h * (i + 1) as f64) - r(a + h * i as f64)).abs()).fold(0.0, f64::max)
    };
    let coarse = max_jump(256);
    let fine = max_jump(2048);
    if coarse > 0.0 && fine > 0.5 * coarse {
        return Err(Error::NotAbsolutelyContinuous);
    }
    Ok(())
}

/// `g(y, v) = (2y − 1) r'(v) / (2 f_V(v))` on the observation space, with
/// `f_V` normalized on the offer lattice, and the
/// calibration `(r(0) + r(v_max)) / 2`, so that `E[g | W = w] = r(w) − c`.
pub fn wtp_solution_g(model: &WtpModel, r: &dyn Fn(f64) -> f64) -> Result<(GridFunction, f64)> {
    let vmax = model.spec.v_max;
    check_absolutely_continuous(r, 0.0, vmax)?;
    let h = model.spec.h;
    let g = GridFunction::from_fn(model.op.codomain(), |z| {
        let (y, v) = (z[0], z[1]);
        let f = model.f_v_nodes[((v / h).round() as usize).min(model.f_v_nodes.len() - 1)];
        (2.0 * y - 1.0) * derivative(r, v, 0.0, vmax) / (2.0 * f)
    });
    if g.values().iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("offer density vanishes on a kept node".into()));
    }
    Ok((g, 0.5 * (r(0.0) + r(vmax))))
}

/// `E[r(W)]` as a functional on the valuation law, defined up to the
/// calibration constant of the closed-form solution.
pub fn wtp_functional(model: &WtpModel, name: &str, r: &dyn Fn(f64) -> f64) -> Result<Functional> {
    check_absolutely_continuous(r, 0.0, model.spec.v_max)?;
    let rep = GridFunction::from_fn(model.op.domain(), |x| r(x[0]));
    Ok(Functional::up_to_constant(name, rep, 0.5 * (r(0.0) + r(model.spec.v_max))))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    /// `∫ r'² / f_V` at 256, 512 and 1024 midpoint cells.
    pub values: [f64; 3],
    /// `(I₃ − I₂) / (I₂ − I₁)`.
    pub increment_ratio: f64,
    pub divergent: bool,
}

/// Finiteness of `∫₀^{v_max} r'(v)² / f_V(v) dv`, which is `4 E[g²]` for the
/// closed-form solution, judged from three midpoint resolutions.
pub fn wtp_regularity(spec: &WtpSpec, r: &dyn Fn(f64) -> f64) -> RegularityReport {
    let vmax = spec.v_max;
    let integral = |n: usize| -> f64 {
        let h = vmax / n as f64;
        (0..n)
            .map(|i| {
                let v = h * (i as f64 + 0.5);
                let f = spec.f_v(v);
                if f > 0.0 {
                    derivative(r, v, 0.0, vmax).powi(2) / f * h
                } else {
                    f64::INFINITY
                }
            })
            .sum()
    };
    let values = [integral(256), integral(512), integral(1024)];
    let d1 = values[1] - values[0];
    let d2 = values[2] - values[1];
    let scale = values[2].abs().max(1e-300);
    let (increment_ratio, divergent) = if !values.iter().all(|v| v.is_finite()) {
        (f64::INFINITY, true)
    } else if d1.abs() <= 1e-12 * scale {
        (0.0, d2.abs() > 1e-12 * scale)
    } else {
        let q = d2 / d1;
        (q, q > DIVERGENCE_RATIO)
    };
    RegularityReport { values, increment_ratio, divergent }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_model_builds_and_mean_is_half() {
        let m = wtp_model(&WtpSpec::uniform(0.02)).unwrap();
        let f = wtp_functional(&m, "mean", &|w| w).unwrap();
        assert!((f.value() - 0.5).abs() < 1e-12);
        let (g, c) = wtp_solution_g(&m, &|w| w).unwrap();
        assert!((c - 1.0).abs() < 1e-12);
        // E[g] + c is the mean valuation
        let eg = g.mean();
        assert!((eg + c - 0.5).abs() < 1e-9, "{}", eg + c);
    }

    #[test]
    fn jump_is_rejected() {
        let m = wtp_model(&WtpSpec::uniform(0.05)).unwrap();
        let r = |w: f64| if w > 0.3 { 1.0 } else { 0.0 };
        assert!(matches!(wtp_solution_g(&m, &r), Err(Error::NotAbsolutelyContinuous)));
    }

    #[test]
    fn regularity_converges_or_diverges() {
        assert!(!wtp_regularity(&WtpSpec::uniform(0.01), &|w| w).divergent);
        assert!(wtp_regularity(&WtpSpec::vanishing(0.01), &|w| w).divergent);
    }

    #[test]
    fn vanishing_density_is_normalized() {
        let d = Density1::VanishingAt { point: 0.5, exponent: 2.0 };
        assert!((d.density(0.0, 1.0) - 3.0).abs() < 1e-12);
        let axis = Axis::midpoint(0.0, 1.0, 4000).unwrap();
        assert!((axis.integrate(|x| d.density(x, 1.0)) - 1.0).abs() < 1e-6);
    }
}
