//! The example models. Each builder returns a score operator on
//! configurable grids; the named functionals and model-specific identities
//! live next to it.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linop::Axis;

pub mod circle;
pub mod euler;
pub mod ig;
pub mod logit;
pub mod synthetic;
pub mod triangular;
pub mod wtp;

pub use circle::{circle_functional, circle_rc_operator, circle_singular_value, harmonic, CircleFunctional, CircleSpec};
pub use euler::{
    aara_pipeline, crra_lognormal_spec, euler_discount_check, planted_positive, planted_spectrum, AaraReport,
    AaraSpec, DiscountCandidate, DiscountReport, EulerSpec,
};
pub use ig::{
    default_odd_profile, ig_adjoint_structure_check, ig_density, ig_functional, ig_null_direction, ig_operator,
    ig_reflection_error, symmetric_tangent, Heterogeneity, IgFactored, IgFunctional, IgMixtureSpec, IgModel,
    StructureReport,
};
pub use logit::{logit_functional, mixed_logit_operator, CoefficientLaw, MixedLogitSpec};
pub use synthetic::{synthetic_operator, Decay, SyntheticSpec};
pub use triangular::{
    triangular_binned_operator, triangular_functionals, triangular_probe_dictionary, TriangularModel,
    TriangularSpec,
};
pub use wtp::{
    check_absolutely_continuous, wtp_functional, wtp_model, wtp_regularity, wtp_solution_g, Density1,
    RegularityReport, WtpModel, WtpSpec,
};

/// An evenly spaced grid `[lo, hi]` with `n` trapezoid nodes; `n = 1` is the
/// single point `lo` with unit weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, n: usize) -> Self {
        GridSpec { lo, hi, n }
    }

    pub fn axis(&self) -> Result<Axis> {
        if self.n == 1 {
            return Ok(Axis { nodes: vec![self.lo], weights: vec![1.0] });
        }
        Axis::trapezoid(self.lo, self.hi, self.n)
    }

    /// Same range, `factor` times the number of intervals.
    pub fn refined(&self, factor: usize) -> GridSpec {
        if self.n <= 1 {
            return *self;
        }
        GridSpec { n: (self.n - 1) * factor + 1, ..*self }
    }
}
