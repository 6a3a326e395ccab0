use faer::Mat;
use serde::Serialize;

use super::{LinOp, Space};
use crate::error::{Error, Result};

/// Tolerance on the double-weighted mass of a joint density.
pub const JOINT_MASS_TOL: f64 = 1e-4;

/// Joint density of `(Z, Z*)` on `obs × latent`, one entry per pair of nodes,
/// with respect to the product of the two spaces' weights.
#[derive(Debug, Clone)]
pub struct JointDensity {
    obs: Space,
    latent: Space,
    values: Mat<f64>,
}

/// Observation nodes removed by [`JointDensity::trimmed`].
#[derive(Debug, Clone, Default, Serialize, PartialEq)]
pub struct TrimReport {
    /// Indices (into the original observation grid) that were kept.
    pub kept: Vec<usize>,
    pub dropped: usize,
    /// Probability mass of the dropped nodes.
    pub dropped_mass: f64,
}

impl JointDensity {
    pub fn new(obs: &Space, latent: &Space, values: Mat<f64>) -> Result<Self> {
        if values.nrows() != obs.len() || values.ncols() != latent.len() {
            return Err(Error::dims("joint density must be obs-nodes x latent-nodes"));
        }
        for j in 0..values.ncols() {
            if values.col(j).iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::invalid("joint density entries must be finite and nonnegative"));
            }
        }
        let jd = JointDensity { obs: obs.clone(), latent: latent.clone(), values };
        let mass = jd.total_mass();
        if (mass - 1.0).abs() > JOINT_MASS_TOL {
            return Err(Error::invalid(format!("joint density has mass {mass}, expected 1")));
        }
        if jd.latent_marginal().iter().any(|m| *m <= 0.0) {
            return Err(Error::invalid("a latent node has zero marginal mass"));
        }
        Ok(jd)
    }

    /// Builds the joint from a function of `(obs node, latent node)` and
    /// rescales it to unit mass. Useful when the density is only known up
    /// to a constant.
    pub fn from_fn_normalized(
        obs: &Space,
        latent: &Space,
        f: impl Fn(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut values = Mat::from_fn(obs.len(), latent.len(), f);
        let wz = obs.weights();
        let ws = latent.weights();
        let mut mass = 0.0;
        for j in 0..values.ncols() {
            for i in 0..values.nrows() {
                mass += values[(i, j)] * wz[i] * ws[j];
            }
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::invalid("joint density has no mass"));
        }
        for j in 0..values.ncols() {
            for i in 0..values.nrows() {
                values[(i, j)] /= mass;
            }
        }
        Self::new(obs, latent, values)
    }

    pub fn obs(&self) -> &Space {
        &self.obs
    }

    pub fn latent(&self) -> &Space {
        &self.latent
    }

    pub fn values(&self) -> &Mat<f64> {
        &self.values
    }

    pub fn total_mass(&self) -> f64 {
        self.obs_marginal().iter().zip(self.obs.weights()).map(|(f, w)| f * w).sum()
    }

    /// `f_Z(z) = Σ_{z*} f(z, z*) w_{z*}`.
    pub fn obs_marginal(&self) -> Vec<f64> {
        let ws = self.latent.weights();
        (0..self.values.nrows())
            .map(|i| (0..self.values.ncols()).map(|j| self.values[(i, j)] * ws[j]).sum())
            .collect()
    }

    /// `λ(z*) = Σ_z f(z, z*) w_z`.
    pub fn latent_marginal(&self) -> Vec<f64> {
        let wz = self.obs.weights();
        (0..self.values.ncols())
            .map(|j| self.values.col(j).iter().zip(wz).map(|(f, w)| f * w).sum())
            .collect()
    }

    /// Drops observation nodes whose marginal density is below
    /// `rel_tol · max f_Z`. The returned joint is not renormalized, so the
    /// dropped mass must stay within the joint mass tolerance.
    pub fn trimmed(&self, rel_tol: f64) -> Result<(JointDensity, TrimReport)> {
        let fz = self.obs_marginal();
        let max = fz.iter().cloned().fold(0.0, f64::max);
        let wz = self.obs.weights();
        let mut kept = Vec::new();
        let mut dropped_mass = 0.0;
        for (i, &f) in fz.iter().enumerate() {
            if f > rel_tol * max {
                kept.push(i);
            } else {
                dropped_mass += f * wz[i];
            }
        }
        let dropped = fz.len() - kept.len();
        if dropped == 0 {
            return Ok((self.clone(), TrimReport { kept, dropped, dropped_mass }));
        }
        let obs = self.obs.subset(&kept, self.obs.label(), None, false)?;
        let values = Mat::from_fn(kept.len(), self.values.ncols(), |i, j| self.values[(kept[i], j)]);
        let jd = JointDensity::new(&obs, &self.latent, values)?;
        Ok((jd, TrimReport { kept, dropped, dropped_mass }))
    }
}

/// Conditional-mean score operator of an information-loss model:
/// `(Sb)(z) = Σ_{z*} b(z*) f(z,z*) w_{z*} / f_Z(z)`.
///
/// The domain carries the latent law (label `"G0"`, weights `λ(z*) w_{z*}`)
/// and the codomain the observation law (label `"P"`, weights `f_Z(z) w_z`),
/// so the weighted adjoint is `E[g(Z) | Z* = z*]`. The joint is rescaled to
/// exact unit mass first.
pub fn build_score_from_joint(j: &JointDensity) -> Result<LinOp> {
    let mass = j.total_mass();
    let fz: Vec<f64> = j.obs_marginal().iter().map(|f| f / mass).collect();
    if fz.iter().any(|f| *f <= 0.0) {
        return Err(Error::ZeroMassObservation);
    }
    let ws = j.latent.weights();
    let lam: Vec<f64> = j.latent_marginal().iter().map(|l| l / mass).collect();
    let matrix = Mat::from_fn(fz.len(), ws.len(), |i, k| j.values[(i, k)] / mass * ws[k] / fz[i]);
    let dom_w: Vec<f64> = lam.iter().zip(ws).map(|(l, w)| l * w).collect();
    let cod_w: Vec<f64> = fz.iter().zip(j.obs.weights()).map(|(f, w)| f * w).collect();
    let domain = j.latent.reweighted("G0", normalize(dom_w), true)?;
    let codomain = j.obs.reweighted("P", normalize(cod_w), true)?;
    LinOp::new(&domain, &codomain, matrix)
}

fn normalize(mut w: Vec<f64>) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    for x in &mut w {
        *x /= s;
    }
    w
}
