use serde::{Deserialize, Serialize};

use super::source::profile_of;
use super::{Functional, SingularSystem, TAU_IDENT};
use crate::error::{Error, Result};
use crate::linop::GridFunction;

/// Classical semiparametric Fisher information with the flags that explain
/// a zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FisherInfo {
    pub value: f64,
    /// The representer has mass on the numerical null space.
    pub unidentified: bool,
    /// The representer is zero on the resolved span (infimum over an empty
    /// set); `value` is reported as +∞.
    pub annihilated: bool,
}

/// `1 / Σ_{j<cutoff} (r_j/λ_j)²`, or 0 when the null mass exceeds
/// `τ_ident · ‖r‖`.
pub fn fisher_information(r: &Functional, sys: &SingularSystem) -> Result<FisherInfo> {
    fisher_information_with(r, sys, TAU_IDENT)
}

pub fn fisher_information_with(r: &Functional, sys: &SingularSystem, tau_ident: f64) -> Result<FisherInfo> {
    let d = profile_of(&r.effective(), sys, &[1.0])?;
    if d.null_mass > tau_ident * d.representer_norm {
        return Ok(FisherInfo { value: 0.0, unidentified: true, annihilated: false });
    }
    let s: f64 = d.coefficients.iter().zip(&d.singular_values).map(|(r, l)| (r / l).powi(2)).sum();
    if s == 0.0 {
        return Ok(FisherInfo { value: f64::INFINITY, unidentified: false, annihilated: true });
    }
    Ok(FisherInfo { value: 1.0 / s, unidentified: false, annihilated: false })
}

/// Increasing gauge `ψ` with `ψ(0) = 0` used in the generalized information.
pub trait Gauge: Send + Sync {
    fn name(&self) -> String;
    fn psi(&self, x: f64) -> f64;
    fn log_psi(&self, x: f64) -> f64 {
        self.psi(x).ln()
    }
    /// `ψ'(x) / ψ(x)`.
    fn dlog_psi(&self, x: f64) -> f64;
    /// Whether `ψ(x)/x` is nondecreasing on `(0, 1]`. When it is, the best
    /// point along a ray is as far out as the constraints allow.
    fn ratio_monotone(&self) -> bool;
}

/// `ψ(ε) = ε^ρ`, `ρ ≥ 1`.
#[derive(Debug, Clone, Copy)]
pub struct PowerGauge {
    pub rho: f64,
}

impl Gauge for PowerGauge {
    fn name(&self) -> String {
        format!("power(rho={})", self.rho)
    }
    fn psi(&self, x: f64) -> f64 {
        x.powf(self.rho)
    }
    fn log_psi(&self, x: f64) -> f64 {
        self.rho * x.ln()
    }
    fn dlog_psi(&self, x: f64) -> f64 {
        self.rho / x
    }
    fn ratio_monotone(&self) -> bool {
        self.rho >= 1.0
    }
}

/// `ψ(ε) = exp(ε) − 1`.
#[derive(Debug, Clone, Copy)]
pub struct ExpGauge;

impl Gauge for ExpGauge {
    fn name(&self) -> String {
        "exp".into()
    }
    fn psi(&self, x: f64) -> f64 {
        x.exp_m1()
    }
    fn dlog_psi(&self, x: f64) -> f64 {
        x.exp() / x.exp_m1()
    }
    fn ratio_monotone(&self) -> bool {
        true
    }
}

/// `ψ(ε) = exp(−1/ε^a)`, for severely ill-posed problems.
#[derive(Debug, Clone, Copy)]
pub struct LogGauge {
    pub a: f64,
}

impl Gauge for LogGauge {
    fn name(&self) -> String {
        format!("log(a={})", self.a)
    }
    fn psi(&self, x: f64) -> f64 {
        (-x.powf(-self.a)).exp()
    }
    fn log_psi(&self, x: f64) -> f64 {
        -x.powf(-self.a)
    }
    fn dlog_psi(&self, x: f64) -> f64 {
        self.a * x.powf(-self.a - 1.0)
    }
    fn ratio_monotone(&self) -> bool {
        self.a >= 1.0
    }
}

/// Serializable choice of built-in gauge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum GaugeSpec {
    Power { rho: f64 },
    Exponential,
    LogType { a: f64 },
}

impl GaugeSpec {
    pub fn build(&self) -> Result<Box<dyn Gauge>> {
        match *self {
            GaugeSpec::Power { rho } if rho >= 1.0 && rho.is_finite() => Ok(Box::new(PowerGauge { rho })),
            GaugeSpec::Power { rho } => Err(Error::invalid(format!("power gauge needs rho >= 1, got {rho}"))),
            GaugeSpec::Exponential => Ok(Box::new(ExpGauge)),
            GaugeSpec::LogType { a } if a > 0.0 => Ok(Box::new(LogGauge { a })),
            GaugeSpec::LogType { a } => Err(Error::invalid(format!("log gauge needs a > 0, got {a}"))),
        }
    }
}

/// `‖Sb‖² / ψ(φ̇(b)²)` for a direction on the domain, evaluated through the
/// singular system (`‖Sb‖² = Σ λ_j² ⟨b,φ_j⟩²`).
pub fn generalized_fisher_ratio(r: &Functional, sys: &SingularSystem, b: &GridFunction, gauge: &dyn Gauge) -> Result<f64> {
    let c = sys.right_coefficients(b)?;
    let sb2: f64 = c.iter().zip(sys.values()).map(|(c, l)| (c * l).powi(2)).sum();
    let phi = r.effective().inner(b)?;
    Ok(sb2 / gauge.psi(phi * phi))
}
