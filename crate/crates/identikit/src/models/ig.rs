//! Mixtures of inverse-Gaussian first-passage times: two durations share a
//! latent drift `α` and barrier `β` drawn from `λ₀`.

use faer::Mat;
use serde::{Deserialize, Serialize};

use super::GridSpec;
use crate::diagnostics::Functional;
use crate::error::{Error, Result};
use crate::linop::{adjoint, Axis, GridFunction, LinOp, Space, WeightedSpace};

/// First-passage density of a Brownian motion with drift `α` through `β > 0`.
pub fn ig_density(t: f64, alpha: f64, beta: f64) -> f64 {
    let z = beta - alpha * t;
    beta / (2.0 * std::f64::consts::PI * t * t * t).sqrt() * (-z * z / (2.0 * t)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Heterogeneity {
    /// `∝ exp(−α²/2) β² exp(−2β)`.
    GaussianGamma,
    Uniform,
}

impl Heterogeneity {
    fn raw(&self, alpha: f64, beta: f64) -> f64 {
        match self {
            Heterogeneity::GaussianGamma => (-0.5 * alpha * alpha).exp() * beta * beta * (-2.0 * beta).exp(),
            Heterogeneity::Uniform => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IgMixtureSpec {
    /// Drift grid; must be symmetric about zero (`lo = −hi`).
    pub alpha: GridSpec,
    pub beta: GridSpec,
    /// One axis of the square duration grid.
    pub t: GridSpec,
    pub lambda0: Heterogeneity,
}

impl IgMixtureSpec {
    pub fn default_with(n_alpha: usize, n_beta: usize, n_t: usize) -> Self {
        IgMixtureSpec {
            alpha: GridSpec::new(-2.0, 2.0, n_alpha),
            beta: GridSpec::new(0.2, 3.0, n_beta),
            t: GridSpec::new(0.2, 5.0, n_t),
            lambda0: Heterogeneity::GaussianGamma,
        }
    }

    fn validate(&self) -> Result<()> {
        if (self.alpha.lo + self.alpha.hi).abs() > 1e-12 * self.alpha.hi.abs().max(1.0) {
            return Err(Error::invalid("the drift grid must be symmetric about zero"));
        }
        if !(self.beta.lo > 0.0) {
            return Err(Error::invalid("barrier nodes must be positive"));
        }
        if !(self.t.lo > 0.0 && self.t.hi > self.t.lo && self.t.hi.is_finite()) {
            return Err(Error::invalid("durations need 0 < t_min < t_max < inf"));
        }
        Ok(())
    }

    /// Trapezoid drift axis with nodes mirrored exactly.
    fn alpha_axis(&self) -> Result<Axis> {
        let g = self.alpha;
        if g.n == 1 {
            return Ok(Axis { nodes: vec![0.0], weights: vec![1.0] });
        }
        let mut a = Axis::trapezoid(g.lo, g.hi, g.n)?;
        let n = a.nodes.len();
        for i in 0..n / 2 {
            a.nodes[n - 1 - i] = -a.nodes[i];
        }
        if n % 2 == 1 {
            a.nodes[n / 2] = 0.0;
        }
        Ok(a)
    }

}

/// Built model: the operator plus the raw grids it came from.
#[derive(Debug, Clone)]
pub struct IgModel {
    pub op: LinOp,
    /// `λ₀` as a density against the product weights `π` of the latent grid.
    pub lambda0: Vec<f64>,
    /// Latent index of each node's mirror `(−α, β)`.
    pub mirror: Vec<usize>,
    /// Duration nodes dropped because `f_λ₀` underflowed there.
    pub dropped: usize,
    /// Global normalizing constant of the truncated duration density.
    pub c_l: f64,
}

struct Grids {
    latent: Space,
    pi: Vec<f64>,
    lambda0: Vec<f64>,
    mirror: Vec<usize>,
    t: Axis,
}

fn grids(spec: &IgMixtureSpec) -> Result<Grids> {
    spec.validate()?;
    let aa = spec.alpha_axis()?;
    let ba = spec.beta.axis()?;
    let t = spec.t.axis()?;
    let latent = WeightedSpace::tensor("drift_barrier", &[aa.clone(), ba.clone()])?;
    let pi = latent.weights().to_vec();
    let raw: Vec<f64> = (0..latent.len()).map(|i| spec.lambda0.raw(latent.node(i)[0], latent.node(i)[1])).collect();
    let mass: f64 = raw.iter().zip(&pi).map(|(l, p)| l * p).sum();
    let lambda0 = raw.into_iter().map(|l| l / mass).collect();
    let nb = ba.len();
    let na = aa.len();
    let mirror = (0..latent.len()).map(|i| (na - 1 - i / nb) * nb + i % nb).collect();
    Ok(Grids { latent, pi, lambda0, mirror, t })
}

/// `F[t, ℓ] = f(t; α_ℓ, β_ℓ)` for one duration axis.
fn kernel_matrix(t: &Axis, latent: &Space) -> Mat<f64> {
    Mat::from_fn(t.len(), latent.len(), |i, l| {
        let z = latent.node(l);
        ig_density(t.nodes[i], z[0], z[1])
    })
}

/// Score operator from the `(α, β)` grid to the `T²` grid. The latent law
/// is `λ₀ π` and the duration law is the mixture restricted to `T²` with one
/// global normalizing constant.
pub fn ig_operator(spec: &IgMixtureSpec) -> Result<IgModel> {
    let g = grids(spec)?;
    let f = kernel_matrix(&g.t, &g.latent);
    let nt = g.t.len();
    let nl = g.latent.len();
    let mass: Vec<f64> = g.lambda0.iter().zip(&g.pi).map(|(l, p)| l * p).collect();
    let obs_full = WeightedSpace::tensor("durations", &[g.t.clone(), g.t.clone()])?;
    // unnormalized mixture density at every duration pair
    let mix: Vec<f64> = (0..nt * nt)
        .map(|k| {
            let (i, j) = (k / nt, k % nt);
            (0..nl).map(|l| f[(i, l)] * f[(j, l)] * mass[l]).sum()
        })
        .collect();
    let top = mix.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..nt * nt).filter(|&k| mix[k] > 1e-300 && mix[k] > 1e-14 * top).collect();
    if keep.is_empty() {
        return Err(Error::ZeroMassObservation);
    }
    let dropped = nt * nt - keep.len();
    let wt = obs_full.weights();
    let c_l: f64 = keep.iter().map(|&k| mix[k] * wt[k]).sum();
    let cod_w: Vec<f64> = keep.iter().map(|&k| mix[k] * wt[k] / c_l).collect();
    let matrix = Mat::from_fn(keep.len(), nl, |r, l| {
        let k = keep[r];
        f[(k / nt, l)] * f[(k % nt, l)] * mass[l] / mix[k]
    });
    let codomain = obs_full.subset(&keep, "P", Some(cod_w), true)?;
    let domain = g.latent.reweighted("G0", mass, true)?;
    let op = LinOp::new(&domain, &codomain, matrix)?;
    Ok(IgModel { op, lambda0: g.lambda0, mirror: g.mirror, dropped, c_l })
}

/// Largest relative deviation from `f(t;α,β) = e^{2αβ} f(t;−α,β)` over all
/// duration and latent nodes.
pub fn ig_reflection_error(spec: &IgMixtureSpec) -> Result<f64> {
    let g = grids(spec)?;
    let mut worst = 0.0f64;
    for l in 0..g.latent.len() {
        let z = g.latent.node(l);
        for &t in &g.t.nodes {
            let lhs = ig_density(t, z[0], z[1]);
            let rhs = (2.0 * z[0] * z[1]).exp() * ig_density(t, -z[0], z[1]);
            let scale = lhs.abs().max(rhs.abs());
            if scale > 0.0 {
                worst = worst.max((lhs - rhs).abs() / scale);
            }
        }
    }
    Ok(worst)
}

/// `b = C / ((1 + e^{4αβ}) λ₀)` for `C` odd in `α`: the perturbation
/// `δλ = b λ₀` satisfies `δλ(α, β) = −e^{−4αβ} δλ(−α, β)`, which cancels
/// the mixture at every duration pair.
pub fn ig_null_direction(spec: &IgMixtureSpec, c_odd: &dyn Fn(f64, f64) -> f64) -> Result<Vec<f64>> {
    let g = grids(spec)?;
    let n = g.latent.len();
    let c: Vec<f64> = (0..n).map(|l| c_odd(g.latent.node(l)[0], g.latent.node(l)[1])).collect();
    let scale = c.iter().map(|x| x.abs()).fold(0.0, f64::max);
    for l in 0..n {
        if (c[l] + c[g.mirror[l]]).abs() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::invalid("C must be odd in the drift"));
        }
    }
    Ok((0..n)
        .map(|l| {
            let z = g.latent.node(l);
            c[l] / ((1.0 + (4.0 * z[0] * z[1]).exp()) * g.lambda0[l])
        })
        .collect())
}

/// The default odd profile `α³ exp(−α² − β)`.
pub fn default_odd_profile(alpha: f64, beta: f64) -> f64 {
    alpha.powi(3) * (-alpha * alpha - beta).exp()
}

/// Matrix-free score operator for latent grids too large to store densely.
/// `S b = (F diag(b λ₀ π) Fᵀ) / (F diag(λ₀ π) Fᵀ)` entrywise on `T²`.
pub struct IgFactored {
    f: Mat<f64>,
    mass: Vec<f64>,
    t_weights: Vec<f64>,
    denom: Mat<f64>,
    c_l: f64,
}

impl IgFactored {
    pub fn new(spec: &IgMixtureSpec) -> Result<Self> {
        let g = grids(spec)?;
        let f = kernel_matrix(&g.t, &g.latent);
        let mass: Vec<f64> = g.lambda0.iter().zip(&g.pi).map(|(l, p)| l * p).collect();
        let denom = Self::gram(&f, &mass);
        let nt = g.t.len();
        let mut c_l = 0.0;
        for i in 0..nt {
            for j in 0..nt {
                c_l += denom[(i, j)] * g.t.weights[i] * g.t.weights[j];
            }
        }
        if (0..nt).any(|i| (0..nt).any(|j| !(denom[(i, j)] > 0.0))) {
            return Err(Error::ZeroMassObservation);
        }
        Ok(IgFactored { f, mass, t_weights: g.t.weights, denom, c_l })
    }

    fn gram(f: &Mat<f64>, d: &[f64]) -> Mat<f64> {
        let scaled = Mat::from_fn(f.nrows(), f.ncols(), |i, l| f[(i, l)] * d[l]);
        &scaled * f.transpose()
    }

    pub fn latent_len(&self) -> usize {
        self.mass.len()
    }

    /// `S b` on the `T²` grid, row-major.
    pub fn apply(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.mass.len() {
            return Err(Error::dims("perturbation does not match the latent grid"));
        }
        let d: Vec<f64> = b.iter().zip(&self.mass).map(|(b, m)| b * m).collect();
        let num = Self::gram(&self.f, &d);
        let nt = self.t_weights.len();
        Ok((0..nt * nt).map(|k| num[(k / nt, k % nt)] / self.denom[(k / nt, k % nt)]).collect())
    }

    /// `‖S b‖_P / ‖b‖_G0`.
    pub fn norm_ratio(&self, b: &[f64]) -> Result<f64> {
        let sb = self.apply(b)?;
        let nt = self.t_weights.len();
        let num: f64 = (0..nt * nt)
            .map(|k| {
                let (i, j) = (k / nt, k % nt);
                sb[k] * sb[k] * self.denom[(i, j)] * self.t_weights[i] * self.t_weights[j] / self.c_l
            })
            .sum();
        let den: f64 = b.iter().zip(&self.mass).map(|(b, m)| b * b * m).sum();
        Ok((num / den).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureReport {
    /// Largest `|h(α) − h(−α)|` relative to the same expression with `|g|`.
    pub max_asymmetry: f64,
    /// Largest `|Δh / Δ(α²)|` between neighbouring nonnegative drift nodes.
    pub max_slope_in_alpha_sq: f64,
    pub even: bool,
}

/// Checks that `h = e^{−2αβ} S*g / β²` is even in `α`.
pub fn ig_adjoint_structure_check(model: &IgModel, g: &GridFunction) -> Result<StructureReport> {
    let adj = adjoint(&model.op);
    let sg = adj.apply(g)?;
    let sabs = adj.apply(&g.map(f64::abs))?;
    let dom = model.op.domain();
    let h = |v: &GridFunction, l: usize| {
        let z = dom.node(l);
        (-2.0 * z[0] * z[1]).exp() * v.values()[l] / (z[1] * z[1])
    };
    let mut max_asymmetry = 0.0f64;
    for l in 0..dom.len() {
        let m = model.mirror[l];
        let scale = h(&sabs, l) + h(&sabs, m);
        if scale > 0.0 {
            max_asymmetry = max_asymmetry.max((h(&sg, l) - h(&sg, m)).abs() / scale);
        }
    }
    let mut max_slope = 0.0f64;
    // drift is the outer tensor axis, so the next drift node is one row down
    let nb = dom.len() / dom.axes().map(|a| a.axes[0].len()).unwrap_or(1);
    for l in 0..dom.len() {
        let next = l + nb;
        if next < dom.len() && dom.node(l)[0] >= 0.0 {
            let (a0, a1) = (dom.node(l)[0], dom.node(next)[0]);
            let dq = a1 * a1 - a0 * a0;
            if dq.abs() > 0.0 {
                max_slope = max_slope.max(((h(&sg, next) - h(&sg, l)) / dq).abs());
            }
        }
    }
    Ok(StructureReport { max_asymmetry, max_slope_in_alpha_sq: max_slope, even: max_asymmetry <= 1e-8 })
}

/// Mean-zero differences of mirror-pair indicators: a basis for the
/// perturbations that are symmetric in the drift.
pub fn symmetric_tangent(model: &IgModel) -> Vec<GridFunction> {
    let dom = model.op.domain();
    let w = dom.weights();
    let mut pairs: Vec<usize> = (0..dom.len()).filter(|&l| model.mirror[l] >= l).collect();
    pairs.sort_unstable();
    let indicator = |l: usize| {
        let mut v = vec![0.0; dom.len()];
        v[l] = 1.0;
        v[model.mirror[l]] = 1.0;
        let m = if model.mirror[l] == l { w[l] } else { w[l] + w[model.mirror[l]] };
        (v, m)
    };
    let (first, m0) = indicator(pairs[0]);
    pairs[1..]
        .iter()
        .map(|&l| {
            let (v, m) = indicator(l);
            let vals = v.iter().zip(&first).map(|(a, b)| m0 * a - m * b).collect();
            GridFunction::new(dom, vals).expect("length matches")
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IgFunctional {
    MeanDrift,
    MeanBarrier,
}

impl IgFunctional {
    pub fn name(&self) -> &'static str {
        match self {
            IgFunctional::MeanDrift => "mean_drift",
            IgFunctional::MeanBarrier => "mean_barrier",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        [Self::MeanDrift, Self::MeanBarrier].into_iter().find(|f| f.name() == name)
    }
}

pub fn ig_functional(model: &IgModel, which: IgFunctional) -> Functional {
    let k = match which {
        IgFunctional::MeanDrift => 0,
        IgFunctional::MeanBarrier => 1,
    };
    Functional::new(which.name(), GridFunction::from_fn(model.op.domain(), |z| z[k]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> IgMixtureSpec {
        IgMixtureSpec::default_with(8, 5, 12)
    }

    #[test]
    fn reflection_holds() {
        assert!(ig_reflection_error(&small()).unwrap() < 1e-12);
    }

    #[test]
    fn constants_map_to_constants() {
        let m = ig_operator(&small()).unwrap();
        let one = GridFunction::constant(m.op.domain(), 1.0);
        for v in m.op.apply(&one).unwrap().values() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn null_direction_dense_and_factored() {
        let spec = small();
        let m = ig_operator(&spec).unwrap();
        let b = ig_null_direction(&spec, &default_odd_profile).unwrap();
        let bf = GridFunction::new(m.op.domain(), b.clone()).unwrap();
        assert!(m.op.apply(&bf).unwrap().norm() / bf.norm() < 1e-12);
        let fac = IgFactored::new(&spec).unwrap();
        assert!(fac.norm_ratio(&b).unwrap() < 1e-12);
        // a generic direction is not annihilated
        let other: Vec<f64> = (0..b.len()).map(|i| (i as f64).sin()).collect();
        assert!(fac.norm_ratio(&other).unwrap() > 1e-3);
        let zero = ig_null_direction(&spec, &|_, _| 0.0).unwrap();
        assert!(zero.iter().all(|x| *x == 0.0));
        assert!(ig_null_direction(&spec, &|a, _| a * a).is_err());
    }

    #[test]
    fn single_point_grid_gives_constants() {
        let spec = IgMixtureSpec {
            alpha: GridSpec::new(0.0, 0.0, 1),
            beta: GridSpec::new(1.0, 1.0, 1),
            t: GridSpec::new(0.5, 3.0, 6),
            lambda0: Heterogeneity::Uniform,
        };
        let m = ig_operator(&spec).unwrap();
        let b = GridFunction::constant(m.op.domain(), 2.5);
        assert!(m.op.apply(&b).unwrap().values().iter().all(|v| (v - 2.5).abs() < 1e-12));
    }

    #[test]
    fn adjoint_structure_is_even() {
        let m = ig_operator(&small()).unwrap();
        let g = GridFunction::from_fn(m.op.codomain(), |t| (3.0 * t[0]).sin() - t[1]);
        let rep = ig_adjoint_structure_check(&m, &g).unwrap();
        assert!(rep.even, "{}", rep.max_asymmetry);
    }
}
