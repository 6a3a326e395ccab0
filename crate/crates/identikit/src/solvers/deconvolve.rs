//! Deconvolution of the multiplicative measurement-error equation
//! `r(c*) = ∫ f_ε(c/c*) w(c) dc` on a uniform grid in `τ = log c`.
//!
//! With `x(τ) = e^{−τ} r(e^τ)`, `K(u) = e^u f_ε(e^u)` and `y(z) = w(e^z)`
//! the equation reads `x(τ) = ∫ K(z − τ) y(z) dz`, so for symmetric `K` the
//! solution is `ŷ = x̂ / K̂`.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use libm::erf;

use crate::error::{Error, Result};
use crate::linop::{GridFunction, WeightedSpace};

/// Frequencies with `|K̂| < EPS_K · max |K̂|` are dropped.
pub const EPS_K: f64 = 1e-8;
/// Clipped energy fraction above which the problem is flagged.
pub const SEVERE_CLIP: f64 = 0.1;
/// Symmetry tolerance on `K`, relative to its maximum.
pub const SYMMETRY_TOL: f64 = 1e-6;

/// Uniform periodic grid `τ_i = tau_min + i·h`, `h = (tau_max − tau_min)/n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogGrid {
    pub tau_min: f64,
    pub tau_max: f64,
    pub n: usize,
}

impl LogGrid {
    pub fn spacing(&self) -> f64 {
        (self.tau_max - self.tau_min) / self.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n).map(|i| self.tau_min + i as f64 * h).collect()
    }

    /// Grid for a lognormal variable with log-mean `mu` and log-sd `s`:
    /// the `[1e-6, 1 − 1e-6]` quantile range, padded by four kernel
    /// standard deviations plus a taper zone of width `taper_width(kernel_sd)`
    /// on each side.
    pub fn for_lognormal(mu: f64, s: f64, kernel_sd: f64, n: usize) -> LogGrid {
        let z = 4.753_424_308_822_899; // Φ⁻¹(1 − 1e-6)
        let pad = 4.0 * kernel_sd + taper_width(kernel_sd);
        LogGrid { tau_min: mu - z * s - pad, tau_max: mu + z * s + pad, n }
    }
}

fn taper_scale(kernel_sd: f64) -> f64 {
    (2.0 * kernel_sd).max(1e-3)
}

/// Room needed by the smooth window outside the padded core.
pub fn taper_width(kernel_sd: f64) -> f64 {
    10.0 * taper_scale(kernel_sd)
}

/// Density of the multiplicative error `ε`.
#[derive(Clone)]
pub enum ErrorDensity {
    /// `log ε ~ N(0, σ²)`; `K̂(t) = exp(−σ²t²/2)` in closed form.
    LogNormal { sigma: f64 },
    /// Any density on `(0, ∞)`; `K̂` from the FFT of sampled `K`.
    Custom { density: Arc<dyn Fn(f64) -> f64 + Send + Sync>, log_sd: f64 },
}

impl std::fmt::Debug for ErrorDensity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ErrorDensity::LogNormal { sigma } => write!(f, "LogNormal {{ sigma: {sigma} }}"),
            ErrorDensity::Custom { log_sd, .. } => write!(f, "Custom {{ log_sd: {log_sd} }}"),
        }
    }
}

impl ErrorDensity {
    pub fn density(&self, e: f64) -> f64 {
        match self {
            ErrorDensity::LogNormal { sigma } => {
                if e <= 0.0 {
                    return 0.0;
                }
                let u = e.ln() / sigma;
                (-0.5 * u * u).exp() / (e * sigma * (2.0 * PI).sqrt())
            }
            ErrorDensity::Custom { density, .. } => density(e),
        }
    }

    /// `K(u) = e^u f_ε(e^u)`, the density of `log ε`.
    pub fn kernel(&self, u: f64) -> f64 {
        match self {
            ErrorDensity::LogNormal { sigma } => {
                let z = u / sigma;
                (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
            }
            _ => u.exp() * self.density(u.exp()),
        }
    }

    /// Standard deviation of `log ε`.
    pub fn log_sd(&self) -> f64 {
        match self {
            ErrorDensity::LogNormal { sigma } => *sigma,
            ErrorDensity::Custom { log_sd, .. } => *log_sd,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Deconvolution {
    /// `w(c)` at `c = e^τ`, on a space with Lebesgue weights `h·c`.
    #[serde(skip)]
    pub w: GridFunction,
    pub grid: LogGrid,
    pub clipped_energy: f64,
    pub clipped_frequencies: usize,
    pub severely_ill_posed: bool,
    /// `[τ_lo, τ_hi]` where the input was not tapered.
    pub core: (f64, f64),
}

impl Deconvolution {
    /// `y(τ) = w(e^τ)` on the grid.
    pub fn y(&self) -> &[f64] {
        self.w.values()
    }
}

/// Checks `|K(u) − K(−u)| ≤ 1e-6 · max K` over the grid's offsets.
pub fn check_kernel_symmetry(err: &ErrorDensity, grid: &LogGrid) -> Result<()> {
    let h = grid.spacing();
    let half = grid.n / 2;
    let ks: Vec<(f64, f64)> = (0..=half).map(|j| (err.kernel(j as f64 * h), err.kernel(-(j as f64) * h))).collect();
    let max = ks.iter().map(|(a, b)| a.max(*b)).fold(0.0, f64::max);
    if !(max > 0.0 && max.is_finite()) {
        return Err(Error::invalid("error density kernel vanishes on the grid"));
    }
    if ks.iter().any(|(a, b)| (a - b).abs() > SYMMETRY_TOL * max) {
        return Err(Error::KernelAsymmetric);
    }
    Ok(())
}

/// Solves for `w` given `r_chi` on `(0, ∞)`. Input outside the core
/// `[tau_min + pad, tau_max − pad]` (pad = taper zone) is smoothly windowed
/// to zero so the periodic FFT sees a decaying function.
pub fn deconvolve_multiplicative(
    r_chi: &dyn Fn(f64) -> f64,
    err: &ErrorDensity,
    grid: &LogGrid,
) -> Result<Deconvolution> {
    let n = grid.n;
    if n < 256 || !n.is_power_of_two() {
        return Err(Error::invalid(format!("fft size must be a power of two >= 256, got {n}")));
    }
    if !(grid.tau_max > grid.tau_min) {
        return Err(Error::invalid("log grid must have tau_max > tau_min"));
    }
    check_kernel_symmetry(err, grid)?;
    let h = grid.spacing();
    let taus = grid.nodes();
    let sd = err.log_sd();
    let scale = taper_scale(sd);
    let core = (grid.tau_min + taper_width(sd), grid.tau_max - taper_width(sd));
    let window = |t: f64| -> f64 {
        if core.0 >= core.1 {
            return 1.0;
        }
        let a = core.0 - 4.0 * scale;
        let b = core.1 + 4.0 * scale;
        0.5 * (erf((t - a) / scale) - erf((t - b) / scale))
    };
    let mut buf: Vec<Complex<f64>> = taus
        .iter()
        .map(|&t| {
            let x = (-t).exp() * r_chi(t.exp());
            Complex::new(if x == 0.0 { 0.0 } else { x * window(t) }, 0.0)
        })
        .collect();
    if buf.iter().any(|c| !c.re.is_finite()) {
        return Err(Error::invalid("r_chi is not finite on the log grid"));
    }

    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(n).process(&mut buf);

    let khat = kernel_transform(err, grid, &mut planner);
    let kmax = khat.iter().cloned().fold(0.0, |m: f64, k| m.max(k.abs()));
    let total: f64 = buf.iter().map(|c| c.norm_sqr()).sum();
    let mut clipped = 0.0;
    let mut clipped_frequencies = 0;
    for (c, k) in buf.iter_mut().zip(&khat) {
        if k.abs() < EPS_K * kmax {
            clipped += c.norm_sqr();
            clipped_frequencies += 1;
            *c = Complex::new(0.0, 0.0);
        } else {
            *c /= *k;
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let y: Vec<f64> = buf.iter().map(|c| c.re / n as f64).collect();
    let clipped_energy = if total > 0.0 { clipped / total } else { 0.0 };

    let cs: Vec<f64> = taus.iter().map(|t| t.exp()).collect();
    let weights: Vec<f64> = cs.iter().map(|c| h * c).collect();
    let space = WeightedSpace::new("dc", 1, cs, weights)?;
    Ok(Deconvolution {
        w: GridFunction::new(&space, y)?,
        grid: *grid,
        clipped_energy,
        clipped_frequencies,
        severely_ill_posed: clipped_energy > SEVERE_CLIP,
        core,
    })
}

/// `K̂(t_k) = ∫ K(u) e^{−i t_k u} du` at the DFT frequencies (real for
/// symmetric K).
fn kernel_transform(err: &ErrorDensity, grid: &LogGrid, planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let n = grid.n;
    let h = grid.spacing();
    match err {
        ErrorDensity::LogNormal { sigma } => (0..n)
            .map(|k| {
                let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
                let t = 2.0 * PI * kk / (n as f64 * h);
                (-0.5 * sigma * sigma * t * t).exp()
            })
            .collect(),
        ErrorDensity::Custom { .. } => {
            let mut buf: Vec<Complex<f64>> = (0..n)
                .map(|j| {
                    let jj = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
                    Complex::new(h * err.kernel(jj * h), 0.0)
                })
                .collect();
            planner.plan_fft_forward(n).process(&mut buf);
            buf.iter().map(|c| c.re).collect()
        }
    }
}

/// `∫ f_ε(c/c*) w(c) dc` at `c* = e^τ` for every grid node, by direct
/// quadrature on the grid (no FFT): `e^τ · h Σ_z K(z − τ) y(z)`.
pub fn forward_convolve(dec: &Deconvolution, err: &ErrorDensity) -> Vec<f64> {
    let taus = dec.grid.nodes();
    let h = dec.grid.spacing();
    let y = dec.y();
    let reach = 12.0 * err.log_sd();
    taus.iter()
        .map(|&t| {
            let s: f64 = taus
                .iter()
                .zip(y)
                .filter(|(z, _)| (**z - t).abs() <= reach)
                .map(|(z, yz)| err.kernel(z - t) * yz)
                .sum();
            t.exp() * h * s
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_in_zero_out() {
        let g = LogGrid { tau_min: -5.0, tau_max: 5.0, n: 256 };
        let d = deconvolve_multiplicative(&|_| 0.0, &ErrorDensity::LogNormal { sigma: 0.2 }, &g).unwrap();
        assert!(d.y().iter().all(|v| *v == 0.0));
        assert_eq!(d.clipped_energy, 0.0);
    }

    #[test]
    fn size_and_symmetry_contracts() {
        let err = ErrorDensity::LogNormal { sigma: 0.2 };
        assert!(deconvolve_multiplicative(&|_| 0.0, &err, &LogGrid { tau_min: -1.0, tau_max: 1.0, n: 300 }).is_err());
        let skew = ErrorDensity::Custom {
            density: Arc::new(|e: f64| if e > 0.0 { (-(e.ln() - 0.1).powi(2) / 0.08).exp() / (e * (0.08 * PI).sqrt()) } else { 0.0 }),
            log_sd: 0.2,
        };
        let g = LogGrid { tau_min: -5.0, tau_max: 5.0, n: 256 };
        assert!(matches!(deconvolve_multiplicative(&|_| 1.0, &skew, &g), Err(Error::KernelAsymmetric)));
    }
}
