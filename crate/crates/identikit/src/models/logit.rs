//! Mixed multinomial logit with a random coefficient vector `β ~ η₀` and a
//! finite covariate support.

use serde::{Deserialize, Serialize};

use super::GridSpec;
use crate::diagnostics::Functional;
use crate::error::{Error, Result};
use crate::linop::{build_score_from_joint, Axis, GridFunction, JointDensity, LinOp, WeightedSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientLaw {
    StandardNormal,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixedLogitSpec {
    /// `θ₀y` for the inside alternatives `y = 1..J`; alternative 0 has 0.
    pub intercepts: Vec<f64>,
    /// Each profile lists `x_y` for `y = 1..J`, `K` entries each, row-major.
    pub profiles: Vec<Vec<f64>>,
    /// Defaults to uniform over profiles.
    #[serde(default)]
    pub profile_probs: Option<Vec<f64>>,
    /// One grid per coefficient.
    pub beta: Vec<GridSpec>,
    pub eta0: CoefficientLaw,
}

impl MixedLogitSpec {
    /// Binary choice with one coefficient: `n_profiles` scalar covariates
    /// evenly spread on `[−3, 3]` and a standard normal coefficient on `[−3, 3]`.
    pub fn binary(n_profiles: usize, n_beta: usize) -> Self {
        let profiles = (0..n_profiles)
            .map(|i| vec![-3.0 + 6.0 * i as f64 / (n_profiles.max(2) - 1) as f64])
            .collect();
        MixedLogitSpec {
            intercepts: vec![0.0],
            profiles,
            profile_probs: None,
            beta: vec![GridSpec::new(-3.0, 3.0, n_beta)],
            eta0: CoefficientLaw::StandardNormal,
        }
    }

    pub fn alternatives(&self) -> usize {
        self.intercepts.len()
    }

    pub fn coefficients(&self) -> usize {
        self.beta.len()
    }

    fn validate(&self) -> Result<()> {
        let (j, k) = (self.alternatives(), self.coefficients());
        if j == 0 || k == 0 {
            return Err(Error::invalid("mixed logit needs at least one inside alternative and one coefficient"));
        }
        if self.profiles.is_empty() {
            return Err(Error::invalid("mixed logit needs at least one covariate profile"));
        }
        if let Some(p) = self.profiles.iter().find(|p| p.len() != j * k) {
            return Err(Error::dims(format!("profile has {} entries, expected J*K = {}", p.len(), j * k)));
        }
        if let Some(p) = &self.profile_probs {
            if p.len() != self.profiles.len() || p.iter().any(|x| !(*x >= 0.0)) {
                return Err(Error::invalid("profile probabilities must be nonnegative, one per profile"));
            }
            if (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::invalid("profile probabilities must sum to 1"));
            }
        }
        Ok(())
    }

    /// `P(y | profile, β)` for `y = 0..J`.
    pub fn choice_probs(&self, profile: &[f64], beta: &[f64]) -> Vec<f64> {
        let k = self.coefficients();
        let mut u: Vec<f64> = std::iter::once(0.0)
            .chain(self.intercepts.iter().enumerate().map(|(y, t)| {
                t + profile[y * k..(y + 1) * k].iter().zip(beta).map(|(x, b)| x * b).sum::<f64>()
            }))
            .collect();
        let m = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in &mut u {
            *v = (*v - m).exp();
            total += *v;
        }
        u.iter().map(|v| v / total).collect()
    }
}

/// Score operator from the coefficient grid to the `(y, profile)` space.
/// Observation nodes are `(y, profile index)`.
pub fn mixed_logit_operator(spec: &MixedLogitSpec) -> Result<LinOp> {
    spec.validate()?;
    let axes: Vec<Axis> = spec.beta.iter().map(|g| g.axis()).collect::<Result<_>>()?;
    let latent = WeightedSpace::tensor("coefficients", &axes)?;
    let eta: Vec<f64> = (0..latent.len())
        .map(|i| match spec.eta0 {
            CoefficientLaw::StandardNormal => (-0.5 * latent.node(i).iter().map(|b| b * b).sum::<f64>()).exp(),
            CoefficientLaw::Uniform => 1.0,
        })
        .collect();
    let np = spec.profiles.len();
    let nu = spec.profile_probs.clone().unwrap_or_else(|| vec![1.0 / np as f64; np]);
    let ny = spec.alternatives() + 1;
    let obs = WeightedSpace::tensor(
        "choices",
        &[
            Axis::discrete((0..ny).map(|y| y as f64).collect(), vec![1.0; ny])?,
            Axis::discrete((0..np).map(|p| p as f64).collect(), nu)?,
        ],
    )?;
    let probs: Vec<Vec<f64>> = (0..latent.len())
        .flat_map(|j| spec.profiles.iter().map(move |p| (j, p)))
        .map(|(j, p)| spec.choice_probs(p, latent.node(j)))
        .collect();
    let jd = JointDensity::from_fn_normalized(&obs, &latent, |i, j| {
        let (y, p) = (i / np, i % np);
        probs[j * np + p][y] * eta[j]
    })?;
    let (jd, _) = jd.trimmed(1e-300)?;
    build_score_from_joint(&jd)
}

/// Named functionals: `cdf_at_<b>` is `1(β₁ ≤ b)`, `choice_prob` is the
/// probability of alternative 1 at the first profile, `mean_beta` is `β₁`.
pub fn logit_functional(spec: &MixedLogitSpec, op: &LinOp, name: &str) -> Result<Functional> {
    let dom = op.domain();
    let rep = if let Some(b) = name.strip_prefix("cdf_at_") {
        let b0: f64 = b.parse().map_err(|_| Error::invalid(format!("cannot read a threshold from '{name}'")))?;
        GridFunction::from_fn(dom, |z| if z[0] <= b0 { 1.0 } else { 0.0 })
    } else if name == "choice_prob" {
        GridFunction::from_fn(dom, |z| spec.choice_probs(&spec.profiles[0], z)[1])
    } else if name == "mean_beta" {
        GridFunction::from_fn(dom, |z| z[0])
    } else {
        return Err(Error::invalid(format!("unknown mixed_logit functional '{name}'")));
    };
    Ok(Functional::new(name, rep))
}
