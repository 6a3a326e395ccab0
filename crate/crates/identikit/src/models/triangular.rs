//! Triangular random-coefficient model on the reduced-form slopes:
//! `Y₁ = π₁ X`, `Y₂ = δ X` with `(π₁, δ) ~ G₀` and a discrete instrument
//! `X`. The structural effect is `γ = π₁ / δ`.

use faer::Mat;
use serde::{Deserialize, Serialize};

use super::GridSpec;
use crate::diagnostics::{legendre_dictionary, Functional, Probe};
use crate::error::{Error, Result};
use crate::linop::{build_score_from_joint, GridFunction, JointDensity, LinOp, Space, TrimReport, WeightedSpace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriangularSpec {
    pub pi1: GridSpec,
    pub delta: GridSpec,
    pub x_support: Vec<f64>,
    pub x_probs: Vec<f64>,
}

impl TriangularSpec {
    /// Both slopes on `[−1, 1]`: the grid straddles `δ = 0` and `π₁ = 0`.
    /// An even `n` keeps zero off the grid.
    pub fn straddling(n: usize) -> Self {
        TriangularSpec {
            pi1: GridSpec::new(-1.0, 1.0, n),
            delta: GridSpec::new(-1.0, 1.0, n),
            x_support: vec![1.0, 2.0],
            x_probs: vec![0.5, 0.5],
        }
    }

    /// First stage bounded away from zero: `δ ∈ [0.5, 1.5]`.
    pub fn monotone(n: usize) -> Self {
        TriangularSpec { delta: GridSpec::new(0.5, 1.5, n), ..Self::straddling(n) }
    }

    fn validate(&self) -> Result<()> {
        if self.x_support.is_empty() || self.x_support.len() != self.x_probs.len() {
            return Err(Error::invalid("instrument support and probabilities must match and be nonempty"));
        }
        if self.x_probs.iter().any(|p| !(*p > 0.0)) || (self.x_probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("instrument probabilities must be positive and sum to 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TriangularModel {
    pub spec: TriangularSpec,
    /// Point-observation score operator; each latent node generates one
    /// observation `(π₁x, δx, x)` per instrument value.
    pub op: LinOp,
    pub ame: Functional,
    pub ppame: Functional,
    pub excluded_zero_delta: usize,
    pub warnings: Vec<String>,
}

fn latent_space(spec: &TriangularSpec) -> Result<(Space, usize)> {
    let full = WeightedSpace::tensor("slopes", &[spec.pi1.axis()?, spec.delta.axis()?])?;
    let tol = 1e-12 * spec.delta.hi.abs().max(spec.delta.lo.abs()).max(1.0);
    let keep: Vec<usize> = (0..full.len()).filter(|&i| full.node(i)[1].abs() > tol).collect();
    if keep.is_empty() {
        return Err(Error::invalid("every slope node has δ = 0"));
    }
    let excluded = full.len() - keep.len();
    let mass: f64 = keep.iter().map(|&i| full.weights()[i]).sum();
    let w = keep.iter().map(|&i| full.weights()[i] / mass).collect();
    Ok((full.subset(&keep, "slopes", Some(w), true)?, excluded))
}

/// Score operator and the two average-effect functionals. `G₀` is uniform
/// on the slope grid; nodes with `δ = 0` are excluded (the effect has a pole).
pub fn triangular_functionals(spec: &TriangularSpec) -> Result<TriangularModel> {
    spec.validate()?;
    let (latent, excluded) = latent_space(spec)?;
    let nx = spec.x_support.len();
    let n = latent.len();
    let mut nodes = Vec::with_capacity(3 * n * nx);
    for k in 0..n {
        let (p, d) = (latent.node(k)[0], latent.node(k)[1]);
        for &x in &spec.x_support {
            nodes.extend_from_slice(&[p * x, d * x, x]);
        }
    }
    let obs = WeightedSpace::new("reduced_form", 3, nodes, vec![1.0; n * nx])?;
    let eta = 1.0 / latent.total_mass();
    let values = Mat::from_fn(n * nx, n, |i, j| if i / nx == j { spec.x_probs[i % nx] * eta } else { 0.0 });
    let op = build_score_from_joint(&JointDensity::new(&obs, &latent, values)?)?;
    let dom = op.domain();
    let ame = Functional::new("ame", GridFunction::from_fn(dom, |z| z[0] / z[1]));
    let ppame = Functional::new("ppame", GridFunction::from_fn(dom, |z| if z[0] * z[1] > 0.0 { 1.0 } else { 0.0 }));
    let mut warnings = Vec::new();
    if excluded > 0 {
        warnings.push(format!("{excluded} slope node(s) with δ = 0 excluded"));
    }
    Ok(TriangularModel { spec: spec.clone(), op, ame, ppame, excluded_zero_delta: excluded, warnings })
}

/// `sin(π₁) cos(δ)`, a smooth functional for comparison.
pub fn triangular_smooth_functional(model: &TriangularModel) -> Functional {
    Functional::new("smooth", GridFunction::from_fn(model.op.domain(), |z| z[0].sin() * z[1].cos()))
}

/// Legendre polynomials in `(y₁, y₂)` over the observation box, ordered by
/// total degree. The instrument coordinate is not used.
pub fn triangular_probe_dictionary(model: &TriangularModel, count: usize) -> Vec<Probe> {
    let cod = model.op.codomain();
    let mut bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); 3];
    for i in 0..cod.len() {
        for (k, b) in bounds.iter_mut().enumerate() {
            let v = cod.node(i)[k];
            b.0 = b.0.min(v);
            b.1 = b.1.max(v);
        }
    }
    for b in &mut bounds {
        if b.1 <= b.0 {
            b.1 = b.0 + 1.0;
        }
    }
    legendre_dictionary(&bounds, &[count, count, 0], count)
}

/// Forward operator with the continuous outcomes binned on a `bins × bins`
/// grid per instrument value; empty cells are dropped. Used for
/// completeness checks only.
pub fn triangular_binned_operator(spec: &TriangularSpec, bins: usize) -> Result<(LinOp, TrimReport)> {
    spec.validate()?;
    if bins == 0 {
        return Err(Error::invalid("need at least one bin"));
    }
    let (latent, _) = latent_space(spec)?;
    let nx = spec.x_support.len();
    let xmax = spec.x_support.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let span = |g: &GridSpec| g.lo.abs().max(g.hi.abs()) * xmax;
    let (s1, s2) = (span(&spec.pi1).max(1e-300), span(&spec.delta).max(1e-300));
    let bin = |v: f64, s: f64| (((v + s) / (2.0 * s) * bins as f64).floor() as usize).min(bins - 1);
    let mut nodes = Vec::with_capacity(3 * bins * bins * nx);
    for a in 0..bins {
        for b in 0..bins {
            for &x in &spec.x_support {
                let c = |i: usize, s: f64| -s + (i as f64 + 0.5) * 2.0 * s / bins as f64;
                nodes.extend_from_slice(&[c(a, s1), c(b, s2), x]);
            }
        }
    }
    let obs = WeightedSpace::new("binned", 3, nodes, vec![1.0; bins * bins * nx])?;
    let eta = 1.0 / latent.total_mass();
    let mut values = Mat::zeros(obs.len(), latent.len());
    for j in 0..latent.len() {
        let (p, d) = (latent.node(j)[0], latent.node(j)[1]);
        for (xi, &x) in spec.x_support.iter().enumerate() {
            let cell = (bin(p * x, s1) * bins + bin(d * x, s2)) * nx + xi;
            values[(cell, j)] += spec.x_probs[xi] * eta;
        }
    }
    let (jd, trim) = JointDensity::new(&obs, &latent, values)?.trimmed(0.0)?;
    Ok((build_score_from_joint(&jd)?, trim))
}
