//! Consumption Euler equation `θ₀ A η₀ = η₀` with a positive pricing operator
//! `A`, the eigenfunction route to the discount factor, and the measurement
//! layer `C = C* ε` used for the representer of a preference functional.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::la;
use crate::linop::{adjoint, Axis, GridFunction, LinOp, Space, WeightedSpace};
use crate::solvers::{deconvolve_multiplicative, forward_convolve, ErrorDensity, LogGrid};

/// `|⟨η₀, g₀⟩| ≤ this · ‖η₀‖‖g₀‖` fails the identification condition.
pub const IDENT_INNER_TOL: f64 = 1e-8;
/// Imaginary parts below this fraction of the modulus count as real.
pub const REAL_TOL: f64 = 1e-10;
/// Relative inner products below this pass the orthogonality test.
pub const ORTHO_TOL: f64 = 1e-3;

/// Pricing operator, its planted eigenpair and the consumption law.
#[derive(Debug, Clone)]
pub struct EulerSpec {
    /// Acts on functions of consumption; domain and codomain carry `μ`.
    pub a: LinOp,
    pub eta0: GridFunction,
    pub theta0: f64,
}

impl EulerSpec {
    pub fn grid(&self) -> &Space {
        self.a.domain()
    }

    /// `‖θ₀ A η₀ − η₀‖ / ‖η₀‖`.
    pub fn planted_residual(&self) -> Result<f64> {
        let a_eta = self.a.apply(&self.eta0)?;
        Ok(a_eta.combine(self.theta0, &self.eta0, -1.0)?.norm() / self.eta0.norm())
    }

    /// Same operator with `η₀` replaced by its component orthogonal to the
    /// leading eigenfunction of `A*`, which breaks the identification
    /// condition by construction.
    pub fn orthogonalized(&self) -> Result<EulerSpec> {
        let report = euler_discount_check(self)?;
        let lead = report
            .candidates
            .iter()
            .max_by(|a, b| a.rho.partial_cmp(&b.rho).unwrap())
            .ok_or(Error::NoDiscountCandidate)?;
        let g0 = &lead.g0;
        let c = self.eta0.inner(g0)? / g0.inner(g0)?;
        Ok(EulerSpec { eta0: self.eta0.combine(1.0, g0, -c)?, ..self.clone() })
    }
}

fn check_planted(grid: &Space, theta0: f64, eta0: &GridFunction) -> Result<()> {
    if !(theta0 > 0.0 && theta0 < 1.0) {
        return Err(Error::invalid(format!("discount factor must lie in (0, 1), got {theta0}")));
    }
    if !grid.same_as(eta0.space()) {
        return Err(Error::SpaceMismatch);
    }
    if eta0.values().iter().any(|v| !(*v > 0.0)) {
        return Err(Error::invalid("planted eigenfunction must be strictly positive"));
    }
    Ok(())
}

/// Perron root and vector of an entrywise positive matrix.
fn perron(b: &Mat<f64>) -> (f64, Vec<f64>) {
    let n = b.nrows();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut rho = 0.0;
    for _ in 0..10_000 {
        let w = la::matvec(b, &v);
        let norm = la::norm2(&w);
        let next: Vec<f64> = w.iter().map(|x| x / norm).collect();
        let change = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        rho = norm;
        if change < 1e-15 {
            break;
        }
    }
    (rho, v)
}

/// Positive `A = c · D B D⁻¹` with `B` random positive, `D = diag(η₀ / v)`
/// and `v` the Perron vector of `B`, scaled so that `A η₀ = η₀ / θ₀`.
pub fn planted_positive(grid: &Space, theta0: f64, eta0: &GridFunction, seed: u64) -> Result<EulerSpec> {
    check_planted(grid, theta0, eta0)?;
    let n = grid.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = Mat::from_fn(n, n, |_, _| rng.gen_range(0.5..1.5));
    let (rho_b, v) = perron(&b);
    let e = eta0.values();
    let c = 1.0 / (theta0 * rho_b);
    let a = Mat::from_fn(n, n, |i, j| c * e[i] / v[i] * b[(i, j)] * v[j] / e[j]);
    Ok(EulerSpec { a: LinOp::new(grid, grid, a)?, eta0: eta0.clone(), theta0 })
}

/// `A = V Λ V⁻¹` with `V`'s first column `η₀` and the rest random. The
/// listed eigenvalues come first; the remaining ones are drawn from
/// `(−0.3, 0.3)`. `θ₀ = 1 / eigenvalues[0]`.
pub fn planted_spectrum(grid: &Space, eigenvalues: &[f64], eta0: &GridFunction, seed: u64) -> Result<EulerSpec> {
    let n = grid.len();
    if eigenvalues.is_empty() || eigenvalues.len() > n {
        return Err(Error::invalid("need between 1 and n prescribed eigenvalues"));
    }
    let theta0 = 1.0 / eigenvalues[0];
    check_planted(grid, theta0, eta0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lam: Vec<f64> = (0..n).map(|i| eigenvalues.get(i).copied().unwrap_or_else(|| rng.gen_range(-0.3..0.3))).collect();
    let e = eta0.values();
    let v = Mat::from_fn(n, n, |i, j| if j == 0 { e[i] } else { rng.gen_range(-1.0..1.0) });
    // Aᵀ solves Vᵀ Aᵀ = (V Λ)ᵀ
    let vt = v.transpose().to_owned();
    let mut a = Mat::zeros(n, n);
    for i in 0..n {
        let rhs: Vec<f64> = (0..n).map(|k| v[(i, k)] * lam[k]).collect();
        let row = la::lu_solve(&vt, &rhs);
        for (j, x) in row.into_iter().enumerate() {
            a[(i, j)] = x;
        }
    }
    Ok(EulerSpec { a: LinOp::new(grid, grid, a)?, eta0: eta0.clone(), theta0 })
}

/// Pricing operator built from a Gaussian copula of `(log C_t, log C_{t+1})`
/// with correlation `corr` and a pricing kernel `m(c', c)`:
/// `(Aη)(c) = E[m(C_{t+1}, c) η(C_{t+1}) | C_t = c]`. Its eigenpair is only
/// known numerically.
pub fn copula_operator(grid: &Space, corr: f64, kernel: &dyn Fn(f64, f64) -> f64) -> Result<LinOp> {
    if !(corr.abs() < 1.0) {
        return Err(Error::invalid("copula correlation must lie in (−1, 1)"));
    }
    let n = grid.len();
    let logs: Vec<f64> = (0..n).map(|i| grid.node(i)[0].ln()).collect();
    let mean = logs.iter().zip(grid.weights()).map(|(l, w)| l * w).sum::<f64>() / grid.total_mass();
    let var = logs.iter().zip(grid.weights()).map(|(l, w)| (l - mean).powi(2) * w).sum::<f64>() / grid.total_mass();
    let sd = var.sqrt().max(1e-12);
    let cond_sd = sd * (1.0 - corr * corr).sqrt();
    let w = grid.weights();
    let mut a = Mat::zeros(n, n);
    for i in 0..n {
        let m = mean + corr * (logs[i] - mean);
        // P(j | i) ∝ conditional / marginal normal density at log c_j, times μ_j
        let dens: Vec<f64> = (0..n)
            .map(|j| {
                let cond = -0.5 * ((logs[j] - m) / cond_sd).powi(2) - cond_sd.ln();
                let marg = -0.5 * ((logs[j] - mean) / sd).powi(2) - sd.ln();
                (cond - marg).exp() * w[j]
            })
            .collect();
        let total: f64 = dens.iter().sum();
        for j in 0..n {
            a[(i, j)] = dens[j] / total * kernel(grid.node(j)[0], grid.node(i)[0]);
        }
    }
    LinOp::new(grid, grid, a)
}

#[derive(Debug, Clone, Serialize)]
pub struct DiscountCandidate {
    /// `1 / ρ`.
    pub theta: f64,
    /// Real eigenvalue of `A*` above one.
    pub rho: f64,
    /// `⟨η₀, g₀⟩` with `‖g₀‖ = 1`.
    pub inner: f64,
    pub identified: bool,
    /// `E[η₀ g]` for `g = g₀ / ⟨A η₀, g₀⟩`; absent when not identified.
    pub moment: Option<f64>,
    pub moment_error: Option<f64>,
    #[serde(skip)]
    pub g0: GridFunction,
    #[serde(skip)]
    pub g: Option<GridFunction>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiscountReport {
    pub candidates: Vec<DiscountCandidate>,
    /// The only candidate passing the identification condition, if unique.
    pub selected: Option<usize>,
    pub planted_theta: f64,
    pub planted_residual: f64,
}

impl DiscountReport {
    pub fn selected_theta(&self) -> Option<f64> {
        self.selected.map(|i| self.candidates[i].theta)
    }
}

/// Real eigenvectors (unit `μ`-norm, positive mean) of `m` for real
/// eigenvalues accepted by `keep`.
fn real_eigenpairs(m: &Mat<f64>, space: &Space, keep: impl Fn(f64) -> bool) -> Result<Vec<(f64, GridFunction)>> {
    let (vals, re, im) = la::eigen(m)?;
    let mut out = Vec::new();
    for (k, &(r, i)) in vals.iter().enumerate() {
        if i.abs() > REAL_TOL * r.abs().max(f64::MIN_POSITIVE) || !keep(r) {
            continue;
        }
        // undo an arbitrary complex phase through the largest entry
        let n = re.nrows();
        let p = (0..n).max_by(|&a, &b| {
            let ma = re[(a, k)].hypot(im[(a, k)]);
            let mb = re[(b, k)].hypot(im[(b, k)]);
            ma.partial_cmp(&mb).unwrap()
        });
        let p = p.unwrap_or(0);
        let (pr, pi) = (re[(p, k)], im[(p, k)]);
        let modulus = pr.hypot(pi);
        let vals: Vec<f64> = (0..n).map(|j| (re[(j, k)] * pr + im[(j, k)] * pi) / modulus).collect();
        let mut g = GridFunction::new(space, vals)?;
        let norm = g.norm();
        let sign = if g.mean() < 0.0 { -1.0 } else { 1.0 };
        g = g.scaled(sign / norm);
        out.push((r, g));
    }
    out.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    Ok(out)
}

/// Candidates `θ = 1/ρ` from the real eigenvalues `ρ > 1` of `A*`.
pub fn euler_discount_check(spec: &EulerSpec) -> Result<DiscountReport> {
    let astar = adjoint(&spec.a);
    let pairs = real_eigenpairs(astar.matrix(), spec.grid(), |r| r > 1.0)?;
    if pairs.is_empty() {
        return Err(Error::NoDiscountCandidate);
    }
    let a_eta = spec.a.apply(&spec.eta0)?;
    let eta_norm = spec.eta0.norm();
    let mut candidates = Vec::new();
    for (rho, g0) in pairs {
        let inner = spec.eta0.inner(&g0)?;
        let identified = inner.abs() > IDENT_INNER_TOL * eta_norm * g0.norm();
        let theta = 1.0 / rho;
        let (moment, g) = if identified {
            let g = g0.scaled(1.0 / a_eta.inner(&g0)?);
            (Some(spec.eta0.inner(&g)?), Some(g))
        } else {
            (None, None)
        };
        candidates.push(DiscountCandidate {
            theta,
            rho,
            inner,
            identified,
            moment,
            moment_error: moment.map(|m| (m - theta).abs()),
            g0,
            g,
        });
    }
    let ok: Vec<usize> = (0..candidates.len()).filter(|&i| candidates[i].identified).collect();
    Ok(DiscountReport {
        selected: if ok.len() == 1 { Some(ok[0]) } else { None },
        candidates,
        planted_theta: spec.theta0,
        planted_residual: spec.planted_residual()?,
    })
}

/// Lognormal latent consumption, lognormal multiplicative measurement error
/// and CRRA marginal utility `u̇₀(c) = c^{−a}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AaraSpec {
    /// Mean of `log C*`.
    pub mu: f64,
    /// Standard deviation of `log C*`.
    pub s: f64,
    /// Standard deviation of `log ε`.
    pub sigma: f64,
    /// Relative risk aversion.
    pub a: f64,
    pub fft_n: usize,
}

impl Default for AaraSpec {
    fn default() -> Self {
        AaraSpec { mu: 0.0, s: 0.5, sigma: 0.2, a: 2.0, fft_n: 4096 }
    }
}

impl AaraSpec {
    fn latent_density(&self, c: f64) -> f64 {
        let z = (c.ln() - self.mu) / self.s;
        (-0.5 * z * z).exp() / (c * self.s * (2.0 * std::f64::consts::PI).sqrt())
    }

    /// `d(c) = ∂ log f*(c) / ∂c`.
    pub fn score(&self, c: f64) -> f64 {
        -(1.0 + (c.ln() - self.mu) / (self.s * self.s)) / c
    }

    pub fn marginal_utility(&self, c: f64) -> f64 {
        c.powf(-self.a)
    }

    /// `r_χ(c) = d(c) / u̇₀(c)`.
    pub fn r_chi(&self, c: f64) -> f64 {
        self.score(c) / self.marginal_utility(c)
    }

    /// `a · E[1/C*]`, the value of `E[log u̇₀(C*) d(C*)]`.
    pub fn oracle(&self) -> f64 {
        self.a * (-self.mu + 0.5 * self.s * self.s).exp()
    }

    /// Standard deviation of `log C`.
    pub fn observed_sd(&self) -> f64 {
        self.s.hypot(self.sigma)
    }

    /// `E[u̇₀(C*) | C = c]` in closed form.
    pub fn projected_marginal_utility(&self, c: f64) -> f64 {
        let (s2, e2) = (self.s * self.s, self.sigma * self.sigma);
        let m = self.mu + s2 / (s2 + e2) * (c.ln() - self.mu);
        let v = s2 * e2 / (s2 + e2);
        (-self.a * m + 0.5 * self.a * self.a * v).exp()
    }
}

/// Consumption grid for the observed `C` (`n` nodes, trapezoid in `log c`
/// over ±5 sd, weights the lognormal law) with `A` planted around the
/// projected marginal utility `η₀ = E[u̇₀(C*) | C]`.
pub fn crra_lognormal_spec(aara: &AaraSpec, theta0: f64, n: usize, seed: u64) -> Result<EulerSpec> {
    let sd = aara.observed_sd();
    let ax = Axis::trapezoid(aara.mu - 5.0 * sd, aara.mu + 5.0 * sd, n)?;
    let dens: Vec<f64> = ax
        .nodes
        .iter()
        .zip(&ax.weights)
        .map(|(l, w)| (-0.5 * ((l - aara.mu) / sd).powi(2)).exp() * w)
        .collect();
    let total: f64 = dens.iter().sum();
    let nodes: Vec<f64> = ax.nodes.iter().map(|l| l.exp()).collect();
    let grid = WeightedSpace::probability("consumption", 1, nodes, dens.iter().map(|d| d / total).collect())?;
    let eta0 = GridFunction::from_fn(&grid, |c| aara.projected_marginal_utility(c[0]));
    planted_positive(&grid, theta0, &eta0, seed)
}

#[derive(Debug, Clone, Serialize)]
pub struct AaraReport {
    pub spec: AaraSpec,
    /// `E[d(C*)]` by quadrature on the latent grid.
    pub mean_score: f64,
    /// `E[r_χ(C*) u̇₀(C*)]`, the same quantity through the representer.
    pub consistency: f64,
    /// `E[log u̇₀(C*) d(C*)]` by direct quadrature.
    pub quadrature_value: f64,
    /// `E[u̇₀ log u̇₀ (C*) · E[w(C) | C*]]` through the deconvolved `w`.
    pub pipeline_value: f64,
    pub oracle: f64,
    pub pipeline_rel_error: f64,
    pub clipped_energy: f64,
    pub clipped_frequencies: usize,
    /// `⟨w, η⟩ / (‖w‖‖η‖)` for each eigenfunction `η` of `A` at `1/θ₀`.
    pub orthogonality: Vec<f64>,
    pub orthogonal: bool,
}

/// Runs the representer pipeline for `χ = E[log u̇₀(C*) d(C*)]`:
/// `w` solves `E[w(C) | C*] = r_χ(C*)` by multiplicative deconvolution, and
/// when an Euler spec is given `w` is tested for orthogonality against the
/// eigenfunctions of `A` at `1/θ₀`.
pub fn aara_pipeline(spec: &AaraSpec, euler: Option<&EulerSpec>) -> Result<AaraReport> {
    if !(spec.s > 0.0 && spec.sigma > 0.0) {
        return Err(Error::invalid("latent and error log-sds must be positive"));
    }
    let grid = LogGrid::for_lognormal(spec.mu, spec.s, spec.sigma, spec.fft_n);
    let err = ErrorDensity::LogNormal { sigma: spec.sigma };
    // ∫ f_ε(c/c*) w(c) dc = c* E[w(C) | C*], hence the extra factor c*
    let dec = deconvolve_multiplicative(&|c| c * spec.r_chi(c), &err, &grid)?;
    if dec.severely_ill_posed {
        return Err(Error::SeverelyIllPosed);
    }
    let taus = grid.nodes();
    let h = grid.spacing();
    let fwd = forward_convolve(&dec, &err);
    let (lo, hi) = dec.core;
    let mut mean_score = 0.0;
    let mut consistency = 0.0;
    let mut quadrature_value = 0.0;
    let mut pipeline_value = 0.0;
    for (i, &t) in taus.iter().enumerate() {
        if t < lo || t > hi {
            continue;
        }
        let c = t.exp();
        let mass = spec.latent_density(c) * c * h;
        let u = spec.marginal_utility(c);
        let d = spec.score(c);
        mean_score += d * mass;
        consistency += spec.r_chi(c) * u * mass;
        quadrature_value += u.ln() * d * mass;
        pipeline_value += u * u.ln() * (fwd[i] / c) * mass;
    }
    let oracle = spec.oracle();
    let mut orthogonality = Vec::new();
    if let Some(e) = euler {
        let target = 1.0 / e.theta0;
        let etas = real_eigenpairs(e.a.matrix(), e.grid(), |r| (r - target).abs() <= 1e-8 * target)?;
        let wc = GridFunction::from_fn(e.grid(), |c| interpolate(&taus, dec.y(), c[0].ln()));
        for (_, eta) in etas {
            orthogonality.push(wc.inner(&eta)? / (wc.norm() * eta.norm()));
        }
    }
    Ok(AaraReport {
        spec: *spec,
        mean_score,
        consistency,
        quadrature_value,
        pipeline_value,
        oracle,
        pipeline_rel_error: (pipeline_value - oracle).abs() / oracle.abs(),
        clipped_energy: dec.clipped_energy,
        clipped_frequencies: dec.clipped_frequencies,
        orthogonal: orthogonality.iter().all(|x| x.abs() <= ORTHO_TOL),
        orthogonality,
    })
}

/// Linear interpolation on an increasing grid, clamped at the ends.
fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let n = xs.len();
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let k = xs.partition_point(|v| *v <= x) - 1;
    let t = (x - xs[k]) / (xs[k + 1] - xs[k]);
    ys[k] * (1.0 - t) + ys[k + 1] * t
}
