//! Finite-resolution smoothness probes of the adjoint: how rough `S*g` is
//! on the latent grid, and how well its span approximates a representer.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::la;
use crate::linop::{GridFunction, LinOp};

/// Largest ratio of moduli between consecutive resolutions that still
/// counts as bounded. A jump doubles the modulus at every halving of the
/// mesh; a Lipschitz function keeps it roughly fixed.
pub const TREND_BOUND: f64 = 1.5;

/// Relative singular-value cutoff used when projecting onto a dictionary span.
const SPAN_CUTOFF: f64 = 1e-10;

/// A function of an observation point, resampled onto whatever grid an
/// adjoint lives on.
#[derive(Clone)]
pub struct Probe {
    pub name: String,
    f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl fmt::Debug for Probe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Probe({})", self.name)
    }
}

impl Probe {
    pub fn new(name: impl Into<String>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Probe { name: name.into(), f: Arc::new(f) }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    /// Nodal values on the domain of `adjoint` (the observation space).
    pub fn sample(&self, adjoint: &LinOp) -> GridFunction {
        GridFunction::from_fn(adjoint.domain(), |x| self.eval(x))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeRow {
    pub name: String,
    /// Modulus of `S*g` at each resolution.
    pub moduli: Vec<f64>,
    /// Largest ratio of consecutive moduli.
    pub trend: f64,
    pub bounded: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    /// Latent node counts, one per resolution.
    pub resolutions: Vec<usize>,
    pub rows: Vec<ProbeRow>,
    pub all_bounded: bool,
}

/// Largest jump between adjacent nodes divided by their spacing, along
/// every axis of a tensor grid (or along the sorted nodes of a 1-d space).
pub fn modulus_of_continuity(f: &GridFunction) -> f64 {
    let space = f.space();
    let v = f.values();
    let mut best = 0.0f64;
    if let Some(t) = space.axes() {
        let shape = t.shape();
        let d = shape.len();
        let total: usize = shape.iter().product();
        let mut strides = vec![1usize; d];
        for k in (0..d.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * shape[k + 1];
        }
        for flat in 0..total {
            let Some(i) = t.index[flat] else { continue };
            for k in 0..d {
                let pos = (flat / strides[k]) % shape[k];
                if pos + 1 >= shape[k] {
                    continue;
                }
                let Some(j) = t.index[flat + strides[k]] else { continue };
                let h = (t.axes[k][pos + 1] - t.axes[k][pos]).abs();
                if h > 0.0 {
                    best = best.max((v[j] - v[i]).abs() / h);
                }
            }
        }
    } else if space.dim() == 1 {
        let mut order: Vec<usize> = (0..space.len()).collect();
        order.sort_by(|&a, &b| space.node(a)[0].partial_cmp(&space.node(b)[0]).unwrap());
        for w in order.windows(2) {
            let h = space.node(w[1])[0] - space.node(w[0])[0];
            if h > 0.0 {
                best = best.max((v[w[1]] - v[w[0]]).abs() / h);
            }
        }
    }
    best
}

/// Moduli of `S*g` for every dictionary element across resolutions.
/// `adjoints` are `S*` operators (observation space to latent space),
/// coarsest first.
pub fn adjoint_smoothness_probe(adjoints: &[LinOp], dictionary: &[Probe]) -> Result<ProbeReport> {
    if dictionary.is_empty() {
        return Err(Error::invalid("dictionary empty"));
    }
    if adjoints.len() < 2 {
        return Err(Error::invalid("smoothness probe needs at least two resolutions"));
    }
    let rows: Vec<ProbeRow> = dictionary
        .iter()
        .map(|g| {
            let moduli: Vec<f64> = adjoints
                .iter()
                .map(|a| {
                    let sg = a.apply(&g.sample(a)).expect("probe sampled on the adjoint's domain");
                    modulus_of_continuity(&sg)
                })
                .collect();
            let trend = moduli
                .windows(2)
                .map(|w| match (w[0], w[1]) {
                    (a, b) if a > 0.0 => b / a,
                    (_, b) if b == 0.0 => 1.0,
                    _ => f64::INFINITY,
                })
                .fold(0.0, f64::max);
            ProbeRow { name: g.name.clone(), moduli, bounded: trend <= TREND_BOUND, trend }
        })
        .collect();
    Ok(ProbeReport {
        resolutions: adjoints.iter().map(|a| a.codomain().len()).collect(),
        all_bounded: rows.iter().all(|r| r.bounded),
        rows,
    })
}

/// Relative residual `‖r − Π_m r‖/‖r‖` of the weighted projection of
/// `target` onto `span{S*g_1, …, S*g_m}` for each `m` in `sizes`.
pub fn projection_residuals(adjoint: &LinOp, dictionary: &[Probe], sizes: &[usize], target: &GridFunction) -> Result<Vec<f64>> {
    if dictionary.is_empty() {
        return Err(Error::invalid("dictionary empty"));
    }
    crate::linop::check_space(adjoint.codomain(), target.space())?;
    if let Some(m) = sizes.iter().find(|&&m| m == 0 || m > dictionary.len()) {
        return Err(Error::invalid(format!("dictionary size {m} outside 1..={}", dictionary.len())));
    }
    let w = adjoint.codomain().weights();
    let sw: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
    let columns: Vec<Vec<f64>> = dictionary
        .iter()
        .take(sizes.iter().copied().max().unwrap_or(0))
        .map(|g| {
            let sg = adjoint.apply_values(g.sample(adjoint).values());
            sg.iter().zip(&sw).map(|(v, s)| v * s).collect()
        })
        .collect();
    let y: Vec<f64> = target.values().iter().zip(&sw).map(|(v, s)| v * s).collect();
    let ny = la::norm2(&y);
    if ny == 0.0 {
        return Ok(vec![0.0; sizes.len()]);
    }
    sizes
        .iter()
        .map(|&m| {
            let a = faer::Mat::from_fn(y.len(), m, |i, j| columns[j][i]);
            let (u, s, _) = la::thin_svd(&a)?;
            let smax = s.first().copied().unwrap_or(0.0);
            let keep = s.iter().take_while(|&&x| x > SPAN_CUTOFF * smax).count();
            let mut fit = vec![0.0; y.len()];
            for j in 0..keep {
                let c: f64 = (0..y.len()).map(|i| u[(i, j)] * y[i]).sum();
                for (i, f) in fit.iter_mut().enumerate() {
                    *f += c * u[(i, j)];
                }
            }
            let res: f64 = y.iter().zip(&fit).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            Ok(res / ny)
        })
        .collect()
}

fn legendre(n: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return p0;
    }
    for k in 1..n {
        let p2 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p0) / (k + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Tensor-product Legendre polynomials on the box `bounds`, ordered by total
/// degree (then lexicographically), with per-axis degree caps. Returns the
/// first `count`.
pub fn legendre_dictionary(bounds: &[(f64, f64)], caps: &[usize], count: usize) -> Vec<Probe> {
    let d = bounds.len();
    assert_eq!(caps.len(), d, "one degree cap per axis");
    let mut out = Vec::with_capacity(count);
    let max_total: usize = caps.iter().sum();
    'outer: for total in 0..=max_total {
        let mut multi = vec![0usize; d];
        loop {
            if multi.iter().sum::<usize>() == total {
                let degs = multi.clone();
                let b = bounds.to_vec();
                let name = format!("P{degs:?}");
                out.push(Probe::new(name, move |x: &[f64]| {
                    degs.iter()
                        .zip(&b)
                        .zip(x)
                        .map(|((&n, &(lo, hi)), &xi)| legendre(n, (2.0 * xi - lo - hi) / (hi - lo)))
                        .product()
                }));
                if out.len() == count {
                    break 'outer;
                }
            }
            // odometer over 0..=caps[k], last axis fastest
            let mut k = d;
            loop {
                if k == 0 {
                    continue 'outer;
                }
                k -= 1;
                if multi[k] < caps[k] {
                    multi[k] += 1;
                    for m in multi.iter_mut().skip(k + 1) {
                        *m = 0;
                    }
                    break;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::{Axis, WeightedSpace};

    #[test]
    fn legendre_values() {
        assert!((legendre(2, 0.5) - (-0.125)).abs() < 1e-15);
        assert!((legendre(3, 1.0) - 1.0).abs() < 1e-15);
        let dict = legendre_dictionary(&[(0.0, 1.0), (0.0, 1.0)], &[3, 3], 6);
        let names: Vec<_> = dict.iter().map(|p| p.name.clone()).collect();
        assert_eq!(names, ["P[0, 0]", "P[0, 1]", "P[1, 0]", "P[0, 2]", "P[1, 1]", "P[2, 0]"]);
    }

    #[test]
    fn modulus_sees_jumps() {
        for n in [50, 100] {
            let s = WeightedSpace::tensor("x", &[Axis::trapezoid(0.0, 1.0, n).unwrap()]).unwrap();
            let step = GridFunction::from_fn(&s, |x| if x[0] < 0.5 { 0.0 } else { 1.0 });
            let h = 1.0 / (n - 1) as f64;
            assert!((modulus_of_continuity(&step) - 1.0 / h).abs() < 1e-9);
            let line = GridFunction::from_fn(&s, |x| 3.0 * x[0]);
            assert!((modulus_of_continuity(&line) - 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn identity_span_residuals() {
        let s = WeightedSpace::tensor("x", &[Axis::trapezoid(-1.0, 1.0, 41).unwrap()]).unwrap();
        let op = LinOp::identity(&s);
        let dict = legendre_dictionary(&[(-1.0, 1.0)], &[10], 6);
        let quad = GridFunction::from_fn(&s, |x| 1.0 + x[0] * x[0]);
        let res = projection_residuals(&op, &dict, &[1, 3], &quad).unwrap();
        assert!(res[0] > 0.1 && res[1] < 1e-12);
        assert!(projection_residuals(&op, &[], &[1], &quad).is_err());
    }
}
