use serde::Serialize;

use super::SingularSystem;
use crate::error::{Error, Result};
use crate::linop::GridFunction;

/// Default β grid for source-norm partial sums.
pub const DEFAULT_BETAS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// A smooth functional through its Riesz representer on the domain.
#[derive(Debug, Clone)]
pub struct Functional {
    pub name: String,
    pub representer: GridFunction,
    /// Representers on mean-zero tangent spaces are only determined up to
    /// an additive constant; when set, diagnostics use the centered version.
    pub defined_up_to_constant: bool,
    /// Added to moment estimates when the representer was centered.
    pub calibration_constant: f64,
}

impl Functional {
    pub fn new(name: &str, representer: GridFunction) -> Self {
        Functional { name: name.to_string(), representer, defined_up_to_constant: false, calibration_constant: 0.0 }
    }

    pub fn up_to_constant(name: &str, representer: GridFunction, calibration_constant: f64) -> Self {
        Functional { name: name.to_string(), representer, defined_up_to_constant: true, calibration_constant }
    }

    /// The representer diagnostics should see.
    pub fn effective(&self) -> GridFunction {
        if self.defined_up_to_constant {
            self.representer.centered()
        } else {
            self.representer.clone()
        }
    }

    /// `⟨r, 1⟩` on the domain: the value of the functional at the reference
    /// law when the domain carries that law.
    pub fn value(&self) -> f64 {
        self.representer.mean() * self.representer.space().total_mass()
    }

    pub fn scaled(&self, c: f64) -> Functional {
        Functional { representer: self.representer.scaled(c), calibration_constant: c * self.calibration_constant, ..self.clone() }
    }
}

/// Source-condition profile of a representer against a singular system.
#[derive(Debug, Clone, Serialize)]
pub struct SourceDiagnostics {
    /// `r_j = ⟨r, φ_j⟩` over the resolved range.
    pub coefficients: Vec<f64>,
    /// Resolved singular values, for reference.
    pub singular_values: Vec<f64>,
    pub betas: Vec<f64>,
    /// `partial_sums[b][J-1] = Σ_{j≤J} λ_j^{-2β_b} r_j²`.
    pub partial_sums: Vec<Vec<f64>>,
    /// Norm of the part of `r` outside the resolved span.
    pub null_mass: f64,
    pub representer_norm: f64,
    /// Slope of `log r_j²` on `log λ_j` over resolved, nonzero coefficients.
    pub fitted_decay: Option<f64>,
    pub resolved: usize,
}

impl SourceDiagnostics {
    pub fn partial_sum_curve(&self, beta: f64) -> Option<&[f64]> {
        self.betas.iter().position(|b| (b - beta).abs() < 1e-12).map(|i| self.partial_sums[i].as_slice())
    }

    /// `null_mass / ‖r‖`, zero for the zero representer.
    pub fn relative_null_mass(&self) -> f64 {
        if self.representer_norm > 0.0 {
            self.null_mass / self.representer_norm
        } else {
            0.0
        }
    }
}

/// Fraction of the total contributed by the last quarter of the curve,
/// `(S_J − S_{J−⌈J/4⌉}) / S_J`; zero for an all-zero curve.
pub fn last_quarter_growth(curve: &[f64]) -> f64 {
    let n = curve.len();
    if n == 0 {
        return 0.0;
    }
    let total = curve[n - 1];
    if total <= 0.0 {
        return 0.0;
    }
    let q = n.div_ceil(4);
    let before = if n > q { curve[n - 1 - q] } else { 0.0 };
    (total - before) / total
}

/// Plateau test: the last-quarter increment must be strictly below
/// `delta · total`. A tie counts as no plateau.
pub fn plateaus(curve: &[f64], delta: f64) -> bool {
    let n = curve.len();
    if n == 0 || curve[n - 1] <= 0.0 {
        return true;
    }
    last_quarter_growth(curve) < delta
}

pub fn source_norm_profile(r: &Functional, sys: &SingularSystem, betas: &[f64]) -> Result<SourceDiagnostics> {
    profile_of(&r.effective(), sys, betas)
}

pub(crate) fn profile_of(rep: &GridFunction, sys: &SingularSystem, betas: &[f64]) -> Result<SourceDiagnostics> {
    if let Some(b) = betas.iter().find(|b| !(0.0..=1.0).contains(*b)) {
        return Err(Error::invalid(format!("β = {b} is outside [0, 1]")));
    }
    let resolved = sys.rank_cutoff();
    if resolved == 0 {
        return Err(Error::RankZero);
    }
    let all = sys.right_coefficients(rep)?;
    let coefficients = all[..resolved].to_vec();
    let lambdas = sys.values()[..resolved].to_vec();
    let projection = sys.synthesize_right(&coefficients);
    let residual = rep.combine(1.0, &projection, -1.0)?;
    let null_mass = residual.norm();
    let representer_norm = rep.norm();

    let partial_sums = betas
        .iter()
        .map(|&beta| {
            let mut acc = 0.0;
            coefficients
                .iter()
                .zip(&lambdas)
                .map(|(r, l)| {
                    acc += r * r * l.powf(-2.0 * beta);
                    acc
                })
                .collect()
        })
        .collect();

    let floor = 1e-14 * representer_norm.max(f64::MIN_POSITIVE);
    let pts: Vec<(f64, f64)> = coefficients
        .iter()
        .zip(&lambdas)
        .filter(|(r, _)| r.abs() > floor)
        .map(|(r, l)| (l.ln(), (r * r).ln()))
        .collect();
    let fitted_decay = slope(&pts);

    Ok(SourceDiagnostics {
        coefficients,
        singular_values: lambdas,
        betas: betas.to_vec(),
        partial_sums,
        null_mass,
        representer_norm,
        fitted_decay,
        resolved,
    })
}

/// Least-squares slope; `None` with fewer than two distinct abscissae.
pub(crate) fn slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 1e-300 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}
