//! Random-coefficient binary choice on the circle: `Y = 1(cos(θ_x − s) ≥ 0)`
//! with a latent direction `s` and an observed covariate direction `θ_x`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::diagnostics::Functional;
use crate::error::{Error, Result};
use crate::linop::{build_score_from_joint, Axis, GridFunction, JointDensity, LinOp, WeightedSpace};

/// `|cos| below this counts as a tie and gets probability one half.
const TIE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircleSpec {
    /// Nodes on each circle; must be even.
    pub n: usize,
    /// Concentration of the von Mises latent law around 0 (0 = uniform).
    #[serde(default)]
    pub latent_kappa: f64,
    /// Concentration of the covariate law (0 = uniform).
    #[serde(default)]
    pub covariate_kappa: f64,
}

impl CircleSpec {
    pub fn uniform(n: usize) -> Self {
        CircleSpec { n, latent_kappa: 0.0, covariate_kappa: 0.0 }
    }
}

fn von_mises(axis: &Axis, kappa: f64) -> Vec<f64> {
    let raw: Vec<f64> = axis.nodes.iter().map(|t| (kappa * t.cos()).exp()).collect();
    let mass: f64 = raw.iter().zip(&axis.weights).map(|(f, w)| f * w).sum();
    raw.into_iter().map(|f| f / mass).collect()
}

fn choice_prob(y: f64, theta_x: f64, s: f64) -> f64 {
    let c = (theta_x - s).cos();
    let p1 = if c.abs() < TIE {
        0.5
    } else if c > 0.0 {
        1.0
    } else {
        0.0
    };
    if y > 0.5 {
        p1
    } else {
        1.0 - p1
    }
}

/// Score operator from the latent direction law to the law of `(Y, θ_x)`.
/// The observation space is the tensor grid `{0, 1} × circle`.
pub fn circle_rc_operator(spec: &CircleSpec) -> Result<LinOp> {
    if spec.n < 4 {
        return Err(Error::invalid("circle grid needs at least 4 nodes"));
    }
    if spec.n % 2 == 1 {
        return Err(Error::OddGrid);
    }
    let circle = Axis::periodic(2.0 * PI, spec.n)?;
    let latent = WeightedSpace::tensor("circle", &[circle.clone()])?;
    let obs = WeightedSpace::tensor("choice", &[Axis::discrete(vec![0.0, 1.0], vec![1.0, 1.0])?, circle.clone()])?;
    let lam = von_mises(&circle, spec.latent_kappa);
    let fx = von_mises(&circle, spec.covariate_kappa);
    let n = spec.n;
    let jd = JointDensity::from_fn_normalized(&obs, &latent, |i, j| {
        let z = obs.node(i);
        choice_prob(z[0], z[1], latent.node(j)[0]) * fx[i % n] * lam[j]
    })?;
    build_score_from_joint(&jd)
}

/// `cos(kθ)` (`sine = false`) or `sin(kθ)` on a circle space.
pub fn harmonic(space: &crate::linop::Space, k: usize, sine: bool) -> GridFunction {
    let k = k as f64;
    GridFunction::from_fn(space, |x| if sine { (k * x[0]).sin() } else { (k * x[0]).cos() })
}

/// Closed-form singular value of the odd harmonic `k` under uniform laws on
/// an `n`-node grid; zero for even `k > 0`.
pub fn circle_singular_value(n: usize, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k % 2 == 0 {
        return 0.0;
    }
    let x = PI * k as f64 / n as f64;
    // a multiple of 4 puts nodes on the tie line, which halves their weight
    if n % 4 == 0 {
        2.0 / (n as f64 * x.tan())
    } else {
        2.0 / (n as f64 * x.sin())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CircleFunctional {
    /// `sin 3θ`, a single odd harmonic.
    Sin3,
    /// `Σ_{k odd} 4 k⁻³ sin kθ`.
    SmoothOdd,
    /// `1(0 ≤ θ < π)`: odd harmonics only, with `1/k` coefficients.
    HalfArc,
    /// `1(0 ≤ θ < π/2)`: has even harmonics.
    QuarterArc,
}

impl CircleFunctional {
    pub fn name(&self) -> &'static str {
        match self {
            CircleFunctional::Sin3 => "sin3",
            CircleFunctional::SmoothOdd => "smooth_odd",
            CircleFunctional::HalfArc => "half_arc",
            CircleFunctional::QuarterArc => "quarter_arc",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        [Self::Sin3, Self::SmoothOdd, Self::HalfArc, Self::QuarterArc].into_iter().find(|f| f.name() == name)
    }
}

/// Representer of a named functional on the operator's domain.
pub fn circle_functional(op: &LinOp, which: CircleFunctional) -> Functional {
    let space = op.domain();
    let n = space.len();
    let h = 2.0 * PI / n as f64;
    let arc = |len: f64| {
        // index-based so that node counts are exact
        let m = (len / h).round() as usize;
        GridFunction::new(space, (0..n).map(|i| if i < m { 1.0 } else { 0.0 }).collect()).expect("length matches")
    };
    let rep = match which {
        CircleFunctional::Sin3 => harmonic(space, 3, true),
        CircleFunctional::SmoothOdd => GridFunction::from_fn(space, |x| {
            (1..n / 2).step_by(2).map(|k| 4.0 / (k as f64).powi(3) * (k as f64 * x[0]).sin()).sum()
        }),
        CircleFunctional::HalfArc => arc(PI),
        CircleFunctional::QuarterArc => arc(PI / 2.0),
    };
    Functional::new(which.name(), rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odd_grid_rejected() {
        assert!(matches!(circle_rc_operator(&CircleSpec::uniform(33)), Err(Error::OddGrid)));
    }

    #[test]
    fn harmonics_match_closed_form() {
        for n in [32usize, 34] {
            let op = circle_rc_operator(&CircleSpec::uniform(n)).unwrap();
            for k in 1..8 {
                for sine in [false, true] {
                    let b = harmonic(op.domain(), k, sine);
                    let ratio = op.apply(&b).unwrap().norm() / b.norm();
                    assert!((ratio - circle_singular_value(n, k)).abs() < 1e-12, "n={n} k={k}");
                }
            }
        }
    }

    #[test]
    fn arcs_have_expected_parity() {
        let op = circle_rc_operator(&CircleSpec::uniform(16)).unwrap();
        let half = circle_functional(&op, CircleFunctional::HalfArc).representer;
        let quarter = circle_functional(&op, CircleFunctional::QuarterArc).representer;
        let c2 = harmonic(op.domain(), 2, false);
        let s2 = harmonic(op.domain(), 2, true);
        assert!(half.inner(&c2).unwrap().abs() < 1e-14 && half.inner(&s2).unwrap().abs() < 1e-14);
        assert!(quarter.inner(&c2).unwrap().abs() + quarter.inner(&s2).unwrap().abs() > 0.1);
    }
}
