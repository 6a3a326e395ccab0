//! Generalized Fisher information `inf ‖Sb‖² / ψ(φ̇(b)²)` over
//! `{‖b‖ ≤ 1, 0 < |φ̇(b)| ≤ 1}`.
//!
//! In singular coordinates write `b = t·u` with `‖u‖ = 1`, `q = Σ λ_j² u_j²`
//! and `s = ⟨r, u⟩`. For a fixed ray the objective is
//! `(q/s²) · x/ψ(x)` with `x = t²s² ∈ (0, min(s², 1)]`, so the search is over
//! the unit sphere only. Stationary points of that problem have the form
//! `u ∝ r_j / (λ_j² + ν)`, which gives a one-parameter family used to seed
//! projected gradient descent on the sphere.

use serde::Serialize;

use super::fisher::Gauge;
use super::source::profile_of;
use super::{Functional, SingularSystem, TAU_IDENT};
use crate::error::{Error, Result};

pub const DEFAULT_STARTS: usize = 32;

#[derive(Debug, Clone, Serialize)]
pub struct GeneralizedFisher {
    pub value: f64,
    pub gauge: String,
    /// Minimizing direction in singular coordinates (already scaled by `t`).
    pub minimizer: Vec<f64>,
    /// `φ̇` at the minimizer.
    pub phi_dot: f64,
    pub unidentified: bool,
    pub starts: usize,
}

pub fn generalized_fisher(r: &Functional, sys: &SingularSystem, gauge: &dyn Gauge, starts: usize) -> Result<f64> {
    generalized_fisher_detail(r, sys, gauge, starts, TAU_IDENT).map(|g| g.value)
}

struct Problem<'a> {
    lam2: Vec<f64>,
    r: Vec<f64>,
    gauge: &'a dyn Gauge,
}

impl Problem<'_> {
    /// `log min_{0<x≤X} x/ψ(x)`, its derivative in `X`, and the minimizing x.
    fn log_h(&self, big_x: f64) -> (f64, f64, f64) {
        let at_edge = big_x.ln() - self.gauge.log_psi(big_x);
        let d_edge = 1.0 / big_x - self.gauge.dlog_psi(big_x);
        if self.gauge.ratio_monotone() {
            return (at_edge, d_edge, big_x);
        }
        let f = |lx: f64| lx - self.gauge.log_psi(lx.exp());
        let (hi, lo) = (big_x.ln(), big_x.ln() - 40.0);
        let n = 400;
        let mut best = (f(hi), hi);
        for i in 0..n {
            let lx = lo + (hi - lo) * i as f64 / n as f64;
            let v = f(lx);
            if v < best.0 {
                best = (v, lx);
            }
        }
        let step = (hi - lo) / n as f64;
        let (mut a, mut b) = ((best.1 - step).max(lo), (best.1 + step).min(hi));
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if f(c) < f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let lx = 0.5 * (a + b);
        let v = f(lx);
        if v < at_edge - 1e-14 * at_edge.abs().max(1.0) {
            (v, 0.0, lx.exp())
        } else {
            (at_edge, d_edge, big_x)
        }
    }

    /// Log objective and its Euclidean gradient at a unit vector.
    fn eval(&self, u: &[f64]) -> (f64, Vec<f64>) {
        let q: f64 = u.iter().zip(&self.lam2).map(|(u, l)| l * u * u).sum();
        let s: f64 = u.iter().zip(&self.r).map(|(u, r)| u * r).sum();
        if s == 0.0 || q == 0.0 {
            let val = if q == 0.0 && s != 0.0 { f64::NEG_INFINITY } else { f64::INFINITY };
            return (val, vec![0.0; u.len()]);
        }
        let x = (s * s).min(1.0);
        let (lh, dlh, _) = self.log_h(x);
        let val = q.ln() - (s * s).ln() + lh;
        let extra = if s * s < 1.0 { dlh * 2.0 * s } else { 0.0 };
        let grad = u
            .iter()
            .zip(&self.lam2)
            .zip(&self.r)
            .map(|((u, l), r)| 2.0 * l * u / q - 2.0 * r / s + extra * r)
            .collect();
        (val, grad)
    }

    /// Optimal `t` along the ray through `u`.
    fn scale(&self, u: &[f64]) -> f64 {
        let s: f64 = u.iter().zip(&self.r).map(|(u, r)| u * r).sum();
        let (_, _, x) = self.log_h((s * s).min(1.0));
        x.sqrt() / s.abs()
    }
}

fn normalize(v: &mut [f64]) -> bool {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(n > 0.0 && n.is_finite()) {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= n);
    true
}

fn descend(p: &Problem, mut u: Vec<f64>) -> (f64, Vec<f64>) {
    let (mut val, mut grad) = p.eval(&u);
    if !val.is_finite() {
        return (val, u);
    }
    let mut eta: f64 = 1.0;
    for _ in 0..4000 {
        let gu: f64 = grad.iter().zip(&u).map(|(g, u)| g * u).sum();
        let gr: Vec<f64> = grad.iter().zip(&u).map(|(g, u)| g - gu * u).collect();
        let gn2: f64 = gr.iter().map(|x| x * x).sum();
        if gn2.sqrt() < 1e-13 {
            break;
        }
        eta = (eta * 4.0).min(1e6);
        let mut moved = false;
        while eta > 1e-20 {
            let mut cand: Vec<f64> = u.iter().zip(&gr).map(|(u, g)| u - eta * g).collect();
            if normalize(&mut cand) {
                let (cv, cg) = p.eval(&cand);
                if cv <= val - 1e-4 * eta * gn2 {
                    u = cand;
                    val = cv;
                    grad = cg;
                    moved = true;
                    break;
                }
            }
            eta *= 0.5;
        }
        if !moved {
            break;
        }
    }
    (val, u)
}

pub fn generalized_fisher_detail(
    r: &Functional,
    sys: &SingularSystem,
    gauge: &dyn Gauge,
    starts: usize,
    tau_ident: f64,
) -> Result<GeneralizedFisher> {
    let d = profile_of(&r.effective(), sys, &[1.0])?;
    if d.null_mass > tau_ident * d.representer_norm {
        return Ok(GeneralizedFisher {
            value: 0.0,
            gauge: gauge.name(),
            minimizer: vec![],
            phi_dot: 0.0,
            unidentified: true,
            starts: 0,
        });
    }
    if d.coefficients.iter().all(|c| *c == 0.0) {
        return Err(Error::Annihilated);
    }
    let p = Problem {
        lam2: d.singular_values.iter().map(|l| l * l).collect(),
        r: d.coefficients.clone(),
        gauge,
    };
    let k = p.r.len();
    let lmin2 = p.lam2.iter().cloned().fold(f64::INFINITY, f64::min);
    let lmax2 = p.lam2.iter().cloned().fold(0.0, f64::max);

    // Stationary family u(ν) ∝ r / (λ² + ν).
    let family = |nu: f64| -> Option<Vec<f64>> {
        let mut u: Vec<f64> = p.r.iter().zip(&p.lam2).map(|(r, l)| r / (l + nu)).collect();
        normalize(&mut u).then_some(u)
    };
    let mut nus = vec![0.0];
    for i in 0..=120 {
        let e = -30.0 + 40.0 * i as f64 / 120.0;
        nus.push(lmax2 * 10f64.powf(e));
        let frac = 10f64.powf(-(i as f64) / 8.0);
        nus.push(-lmin2 * (1.0 - frac));
    }
    let mut candidates: Vec<(f64, Vec<f64>)> = nus
        .into_iter()
        .filter_map(family)
        .map(|u| (p.eval(&u).0, u))
        .filter(|(v, _)| !v.is_nan())
        .collect();
    candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    candidates.truncate(4);

    // Singular-direction seeds, best single modes first.
    let mut modes: Vec<(f64, usize)> = (0..k)
        .filter(|&j| p.r[j] != 0.0)
        .map(|j| {
            let mut e = vec![0.0; k];
            e[j] = 1.0;
            (p.eval(&e).0, j)
        })
        .collect();
    modes.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut seeds: Vec<Vec<f64>> = candidates.into_iter().map(|c| c.1).collect();
    for &(_, j) in modes.iter().take(starts.saturating_sub(seeds.len()).max(1)) {
        let mut e = vec![0.0; k];
        e[j] = 1.0;
        seeds.push(e);
    }

    let mut best: Option<(f64, Vec<f64>)> = None;
    let n_seeds = seeds.len();
    for seed in seeds {
        let (v, u) = descend(&p, seed);
        if v.is_finite() && best.as_ref().map_or(true, |b| v < b.0) {
            best = Some((v, u));
        }
    }
    let (lv, u) = best.ok_or_else(|| Error::Numerical("generalized Fisher search found no finite value".into()))?;
    let t = p.scale(&u);
    let minimizer: Vec<f64> = u.iter().map(|x| t * x).collect();
    let phi_dot: f64 = minimizer.iter().zip(&p.r).map(|(b, r)| b * r).sum();
    Ok(GeneralizedFisher { value: lv.exp(), gauge: gauge.name(), minimizer, phi_dot, unidentified: false, starts: n_seeds })
}
