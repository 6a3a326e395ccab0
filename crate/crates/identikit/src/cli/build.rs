//! From a model config to operators and functionals on both meshes.

use serde::Serialize;

use super::config::{FunctionalSpec, ModelConfig, RunConfig};
use crate::diagnostics::{discrete_operator, Functional};
use crate::error::{Error, Result};
use crate::linop::{GridFunction, LinOp};
use crate::models::triangular::triangular_smooth_functional;
use crate::models::{
    circle_functional, circle_rc_operator, ig_functional, ig_operator, logit_functional, mixed_logit_operator,
    synthetic_operator, triangular_functionals, wtp_functional, wtp_model, CircleFunctional, CircleSpec, Decay,
    IgFunctional, IgMixtureSpec, MixedLogitSpec, SyntheticSpec, TriangularSpec, WtpSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    Coarse,
    Fine,
}

impl Resolution {
    pub fn label(self) -> &'static str {
        match self {
            Resolution::Coarse => "coarse",
            Resolution::Fine => "fine",
        }
    }
}

/// One resolution of a model with an operator.
pub struct Mesh {
    pub resolution: Resolution,
    pub op: LinOp,
    pub functionals: Vec<Functional>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeshSummary {
    pub resolution: Resolution,
    pub domain: String,
    pub domain_points: usize,
    pub codomain: String,
    pub codomain_points: usize,
    pub notes: Vec<String>,
}

impl Mesh {
    pub fn summary(&self) -> MeshSummary {
        MeshSummary {
            resolution: self.resolution,
            domain: self.op.domain().label().to_string(),
            domain_points: self.op.cols(),
            codomain: self.op.codomain().label().to_string(),
            codomain_points: self.op.rows(),
            notes: self.notes.clone(),
        }
    }

    pub fn functional(&self, name: &str) -> Result<&Functional> {
        self.functionals
            .iter()
            .find(|f| f.name == name)
            .ok_or_else(|| Error::invalid(format!("config: functional \"{name}\" is not in the functional list")))
    }
}

/// `r(w)` for the named WTP functionals.
pub fn wtp_representer(name: &str) -> Option<fn(f64) -> f64> {
    match name {
        "mean" => Some(|w| w),
        "mean_square" => Some(|w| w * w),
        _ => None,
    }
}

fn circle_spec(s: &CircleSpec, f: usize, res: Resolution) -> CircleSpec {
    match res {
        Resolution::Coarse => s.clone(),
        Resolution::Fine => CircleSpec { n: s.n * f, ..s.clone() },
    }
}

fn ig_spec(s: &IgMixtureSpec, f: usize, res: Resolution) -> IgMixtureSpec {
    match res {
        Resolution::Coarse => s.clone(),
        Resolution::Fine => IgMixtureSpec {
            alpha: s.alpha.refined(f),
            beta: s.beta.refined(f),
            t: s.t.refined(f),
            lambda0: s.lambda0,
        },
    }
}

fn logit_spec(s: &MixedLogitSpec, f: usize, res: Resolution) -> MixedLogitSpec {
    match res {
        Resolution::Coarse => s.clone(),
        Resolution::Fine => MixedLogitSpec { beta: s.beta.iter().map(|g| g.refined(f)).collect(), ..s.clone() },
    }
}

fn triangular_spec(s: &TriangularSpec, f: usize, res: Resolution) -> TriangularSpec {
    match res {
        Resolution::Coarse => s.clone(),
        Resolution::Fine => TriangularSpec { pi1: s.pi1.refined(f), delta: s.delta.refined(f), ..s.clone() },
    }
}

fn wtp_spec(s: &WtpSpec, f: usize, res: Resolution) -> WtpSpec {
    match res {
        Resolution::Coarse => s.clone(),
        Resolution::Fine => WtpSpec { h: s.h / f as f64, ..s.clone() },
    }
}

fn synthetic_spec(s: &SyntheticSpec, f: usize, res: Resolution, notes: &mut Vec<String>) -> SyntheticSpec {
    let explicit = matches!(s.singular_values, Decay::Values(_)) || matches!(s.representer, Decay::Values(_));
    match res {
        Resolution::Coarse => s.clone(),
        Resolution::Fine if explicit => {
            notes.push("explicit sequences are not refined; the fine mesh repeats the coarse one".into());
            s.clone()
        }
        Resolution::Fine => SyntheticSpec { n: s.n * f, ..s.clone() },
    }
}

fn table(op: &LinOp, spec: &FunctionalSpec, res: Resolution) -> Result<Option<Functional>> {
    let FunctionalSpec::Table(t) = spec else {
        return Ok(None);
    };
    let values = match res {
        Resolution::Coarse => t.coarse.clone(),
        Resolution::Fine => t.fine.clone().unwrap_or_else(|| t.coarse.clone()),
    };
    if values.len() != op.cols() {
        return Err(Error::invalid(format!(
            "config: functional \"{}\" has {} {} values, the domain has {} points",
            t.name,
            values.len(),
            res.label(),
            op.cols()
        )));
    }
    let g = GridFunction::new(op.domain(), values)?;
    Ok(Some(match t.calibration {
        Some(c) => Functional::up_to_constant(&t.name, g, c),
        None => Functional::new(&t.name, g),
    }))
}

fn unknown(model: &str, name: &str) -> Error {
    Error::invalid(format!("config: unknown {model} functional \"{name}\""))
}

/// Builds one resolution. Euler models have no score operator here and are
/// handled by the commands directly.
pub fn build_mesh(cfg: &RunConfig, res: Resolution) -> Result<Mesh> {
    let f = cfg.grids.fine_factor;
    let mut notes = Vec::new();
    let specs = &cfg.functionals;
    let resolve = |op: &LinOp, by_name: &dyn Fn(&str) -> Result<Functional>| -> Result<Vec<Functional>> {
        specs
            .iter()
            .map(|s| match table(op, s, res)? {
                Some(t) => Ok(t),
                None => by_name(s.name()),
            })
            .collect()
    };
    let (op, functionals) = match &cfg.model {
        ModelConfig::CircleRc(s) => {
            let op = circle_rc_operator(&circle_spec(s, f, res))?;
            let fs = resolve(&op, &|n| {
                CircleFunctional::parse(n).map(|w| circle_functional(&op, w)).ok_or_else(|| unknown("circle_rc", n))
            })?;
            (op, fs)
        }
        ModelConfig::IgMixture(s) => {
            let m = ig_operator(&ig_spec(s, f, res))?;
            if m.dropped > 0 {
                notes.push(format!("{} duration node(s) dropped where the mixture density underflows", m.dropped));
            }
            let fs = resolve(&m.op, &|n| {
                IgFunctional::parse(n).map(|w| ig_functional(&m, w)).ok_or_else(|| unknown("ig_mixture", n))
            })?;
            (m.op.clone(), fs)
        }
        ModelConfig::MixedLogit(s) => {
            let spec = logit_spec(s, f, res);
            let op = mixed_logit_operator(&spec)?;
            let fs = resolve(&op, &|n| logit_functional(&spec, &op, n))?;
            (op, fs)
        }
        ModelConfig::TriangularRc(s) => {
            let m = triangular_functionals(&triangular_spec(s, f, res))?;
            notes.extend(m.warnings.iter().cloned());
            let fs = resolve(&m.op, &|n| match n {
                "ame" => Ok(m.ame.clone()),
                "ppame" => Ok(m.ppame.clone()),
                "smooth" => Ok(triangular_smooth_functional(&m)),
                _ => Err(unknown("triangular_rc", n)),
            })?;
            (m.op.clone(), fs)
        }
        ModelConfig::Wtp(s) => {
            let m = wtp_model(&wtp_spec(s, f, res))?;
            if m.trim.dropped > 0 {
                notes.push(format!("{} zero-mass observation node(s) dropped", m.trim.dropped));
            }
            let fs = resolve(&m.op, &|n| match wtp_representer(n) {
                Some(r) => wtp_functional(&m, n, &r),
                None => Err(unknown("wtp", n)),
            })?;
            (m.op.clone(), fs)
        }
        ModelConfig::Discrete(d) => {
            if res == Resolution::Fine {
                notes.push("finitely supported model: the fine mesh repeats the coarse one".into());
            }
            let op = discrete_operator(&d.p, &d.latent_weights)?;
            let fs = resolve(&op, &|n| Err(unknown("discrete", n)))?;
            (op, fs)
        }
        ModelConfig::SyntheticSequence(s) => {
            let (op, r) = synthetic_operator(&synthetic_spec(s, f, res, &mut notes))?;
            let fs = resolve(&op, &|n| if n == "r" { Ok(r.clone()) } else { Err(unknown("synthetic_sequence", n)) })?;
            (op, fs)
        }
        ModelConfig::Euler(_) => {
            return Err(Error::invalid("config: the euler model has no score operator to build"));
        }
    };
    Ok(Mesh { resolution: res, op, functionals, notes })
}
