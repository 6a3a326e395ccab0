//! Singular systems, source-condition profiles, identification verdicts,
//! classical and generalized Fisher information, efficient scores and
//! completeness checks.

mod classify;
mod completeness;
mod discrete;
mod efficient;
mod fisher;
mod generalized;
mod probe;
pub mod report;
mod source;
mod svd;

pub use classify::{
    classify_functional, classify_pair, verdict_of, Classification, Thresholds, Verdict, DELTA_CONV, TAU_IDENT,
};
pub use completeness::{completeness_check, completeness_on_mean_zero, completeness_report, CompletenessReport};
pub use discrete::{classify_discrete, discrete_operator, DISCRETE_SPAN_TOL};
pub use efficient::{efficient_score, EfficientScore};
pub use fisher::{
    fisher_information, fisher_information_with, generalized_fisher_ratio, ExpGauge, FisherInfo, Gauge, GaugeSpec,
    LogGauge, PowerGauge,
};
pub use generalized::{generalized_fisher, generalized_fisher_detail, GeneralizedFisher, DEFAULT_STARTS};
pub use probe::{
    adjoint_smoothness_probe, legendre_dictionary, modulus_of_continuity, projection_residuals, Probe, ProbeReport,
    ProbeRow, TREND_BOUND,
};
pub use source::{last_quarter_growth, plateaus, source_norm_profile, Functional, SourceDiagnostics, DEFAULT_BETAS};
pub use svd::{full_singular_system, singular_system, singular_system_with, SingularSystem, TAU_NULL};

pub(crate) use source::profile_of;
