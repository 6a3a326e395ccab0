//! Diagonal sequence models: `S e_j = λ_j e_j` with a representer given by
//! its coefficients. Handy for exercising the classifier and path code on
//! a singular system known in closed form.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::diagnostics::Functional;
use crate::error::{Error, Result};
use crate::linop::{GridFunction, LinOp, WeightedSpace};

/// A decaying sequence indexed from `j = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decay {
    /// `ratio^j`.
    Geometric(f64),
    /// `j^(-exponent)`.
    Power(f64),
    /// Explicit values.
    Values(Vec<f64>),
}

impl Decay {
    pub fn values(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            Decay::Geometric(r) => Ok((1..=n).map(|j| r.powi(j as i32)).collect()),
            Decay::Power(p) => Ok((1..=n).map(|j| (j as f64).powf(-p)).collect()),
            Decay::Values(v) if v.len() == n => Ok(v.clone()),
            Decay::Values(v) => Err(Error::dims(format!("{} values for a sequence of length {n}", v.len()))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n: usize,
    pub singular_values: Decay,
    pub representer: Decay,
}

impl SyntheticSpec {
    /// `λ_j = r_j = 2^{-j}`.
    pub fn dyadic(n: usize) -> Self {
        SyntheticSpec { n, singular_values: Decay::Geometric(0.5), representer: Decay::Geometric(0.5) }
    }
}

/// The diagonal operator on unit-weight coefficient spaces and the
/// functional with the given representer coefficients.
pub fn synthetic_operator(spec: &SyntheticSpec) -> Result<(LinOp, Functional)> {
    if spec.n == 0 {
        return Err(Error::invalid("sequence model needs n >= 1"));
    }
    let lam = spec.singular_values.values(spec.n)?;
    if lam.iter().any(|l| !(l.is_finite() && *l >= 0.0)) || lam.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::invalid("singular values must be nonnegative and nonincreasing"));
    }
    let dom = WeightedSpace::unit("coefficients", spec.n)?;
    let cod = WeightedSpace::unit("data", spec.n)?;
    let m = Mat::from_fn(spec.n, spec.n, |i, j| if i == j { lam[i] } else { 0.0 });
    let op = LinOp::new(&dom, &cod, m)?;
    let r = GridFunction::new(&dom, spec.representer.values(spec.n)?)?;
    Ok((op, Functional::new("r", r)))
}
