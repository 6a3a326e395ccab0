use serde::{Deserialize, Serialize};

use super::source::{plateaus, profile_of, DEFAULT_BETAS};
use super::{Functional, SingularSystem, SourceDiagnostics, TAU_NULL};
use crate::error::Result;

pub const TAU_IDENT: f64 = 1e-4;
pub const DELTA_CONV: f64 = 0.01;

/// Thresholds shared by the classifier and the reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    pub tau_null: f64,
    pub tau_ident: f64,
    pub delta_conv: f64,
    pub betas: Vec<f64>,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { tau_null: TAU_NULL, tau_ident: TAU_IDENT, delta_conv: DELTA_CONV, betas: DEFAULT_BETAS.to_vec() }
    }
}

impl Thresholds {
    /// β grid with 1 always present, sorted and deduplicated.
    pub fn beta_grid(&self) -> Vec<f64> {
        let mut b = self.betas.clone();
        b.push(1.0);
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
        b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Regular,
    Irregular,
    Unidentified,
}

#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub functional: String,
    pub verdict: Verdict,
    /// Largest β whose partial sums plateau at both resolutions; only set
    /// for irregular verdicts.
    pub beta_star: Option<f64>,
    pub mesh_stable: bool,
    pub coarse_verdict: Verdict,
    pub fine_verdict: Verdict,
    /// Fine-resolution diagnostics.
    pub diagnostics: SourceDiagnostics,
    pub coarse_diagnostics: SourceDiagnostics,
    pub thresholds: Thresholds,
}

/// Verdict at a single resolution.
pub fn verdict_of(d: &SourceDiagnostics, t: &Thresholds) -> Verdict {
    if d.null_mass > t.tau_ident * d.representer_norm {
        return Verdict::Unidentified;
    }
    match d.partial_sum_curve(1.0) {
        Some(c) if plateaus(c, t.delta_conv) => Verdict::Regular,
        _ => Verdict::Irregular,
    }
}

fn plateau_betas(d: &SourceDiagnostics, t: &Thresholds) -> Vec<f64> {
    d.betas
        .iter()
        .zip(&d.partial_sums)
        .filter(|(_, c)| plateaus(c, t.delta_conv))
        .map(|(b, _)| *b)
        .collect()
}

/// Two-resolution classification. The final verdict is the fine system's;
/// disagreement sets `mesh_stable = false` instead of failing.
pub fn classify_functional(
    r: &Functional,
    sys_coarse: &SingularSystem,
    sys_fine: &SingularSystem,
    thresholds: &Thresholds,
) -> Result<Classification> {
    classify_with(r, sys_coarse, sys_fine, thresholds)
}

/// Same as [`classify_functional`], for a functional given on each
/// resolution's own domain.
pub fn classify_pair(
    r_coarse: &Functional,
    r_fine: &Functional,
    sys_coarse: &SingularSystem,
    sys_fine: &SingularSystem,
    thresholds: &Thresholds,
) -> Result<Classification> {
    let betas = thresholds.beta_grid();
    let dc = profile_of(&r_coarse.effective(), sys_coarse, &betas)?;
    let df = profile_of(&r_fine.effective(), sys_fine, &betas)?;
    Ok(assemble(&r_fine.name, dc, df, thresholds))
}

fn classify_with(
    r: &Functional,
    sys_coarse: &SingularSystem,
    sys_fine: &SingularSystem,
    thresholds: &Thresholds,
) -> Result<Classification> {
    classify_pair(r, r, sys_coarse, sys_fine, thresholds)
}

pub(crate) fn assemble(name: &str, dc: SourceDiagnostics, df: SourceDiagnostics, thresholds: &Thresholds) -> Classification {
    let coarse_verdict = verdict_of(&dc, thresholds);
    let fine_verdict = verdict_of(&df, thresholds);
    let verdict = fine_verdict;
    let beta_star = if verdict == Verdict::Irregular {
        let pc = plateau_betas(&dc, thresholds);
        plateau_betas(&df, thresholds)
            .into_iter()
            .filter(|b| pc.iter().any(|c| (c - b).abs() < 1e-12))
            .fold(None, |acc: Option<f64>, b| Some(acc.map_or(b, |a| a.max(b))))
    } else {
        None
    };
    Classification {
        functional: name.to_string(),
        verdict,
        beta_star,
        mesh_stable: coarse_verdict == fine_verdict,
        coarse_verdict,
        fine_verdict,
        diagnostics: df,
        coarse_diagnostics: dc,
        thresholds: thresholds.clone(),
    }
}
