//! One-dimensional quadrature rules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nodes and weights of a one-dimensional rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Axis {
    /// Composite trapezoid rule on `n` equally spaced nodes including both
    /// endpoints.
    pub fn trapezoid(a: f64, b: f64, n: usize) -> Result<Axis> {
        if n < 2 || !(b > a) {
            return Err(Error::invalid(format!("trapezoid rule needs n >= 2 and a < b (n={n}, a={a}, b={b})")));
        }
        let h = (b - a) / (n - 1) as f64;
        let nodes = (0..n).map(|i| a + h * i as f64).collect();
        let mut weights = vec![h; n];
        weights[0] = h / 2.0;
        weights[n - 1] = h / 2.0;
        Ok(Axis { nodes, weights })
    }

    /// Midpoint rule: `n` cell centres of width `(b-a)/n`.
    pub fn midpoint(a: f64, b: f64, n: usize) -> Result<Axis> {
        if n < 1 || !(b > a) {
            return Err(Error::invalid("midpoint rule needs n >= 1 and a < b"));
        }
        let h = (b - a) / n as f64;
        Ok(Axis {
            nodes: (0..n).map(|i| a + h * (i as f64 + 0.5)).collect(),
            weights: vec![h; n],
        })
    }

    /// `n` equally spaced points on a circle of the given period, starting
    /// at zero, each with weight `period / n`.
    pub fn periodic(period: f64, n: usize) -> Result<Axis> {
        if n < 1 {
            return Err(Error::invalid("periodic rule needs n >= 1"));
        }
        let h = period / n as f64;
        Ok(Axis { nodes: (0..n).map(|i| h * i as f64).collect(), weights: vec![h; n] })
    }

    /// Gauss–Legendre rule on `[a, b]`, nodes ascending.
    pub fn gauss_legendre(a: f64, b: f64, n: usize) -> Result<Axis> {
        if n < 1 || !(b > a) {
            return Err(Error::invalid("Gauss-Legendre rule needs n >= 1 and a < b"));
        }
        let (x, w) = legendre_nodes(n);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        Ok(Axis {
            nodes: x.iter().map(|t| mid + half * t).collect(),
            weights: w.iter().map(|w| half * w).collect(),
        })
    }

    /// Discrete support points with given probabilities.
    pub fn discrete(nodes: Vec<f64>, probs: Vec<f64>) -> Result<Axis> {
        if nodes.len() != probs.len() || nodes.is_empty() {
            return Err(Error::invalid("discrete axis needs matching, nonempty nodes and probabilities"));
        }
        Ok(Axis { nodes, weights: probs })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integral of `f` under the rule.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }
}

/// Newton iteration on Legendre polynomials from the Chebyshev initial guess.
fn legendre_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_eval(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre_eval(n, z);
        dp = if d != 0.0 { d } else { dp };
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// `(P_n(z), P_n'(z))` by the three-term recurrence.
fn legendre_eval(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_high_degree_polynomials() {
        let rule = Axis::gauss_legendre(-1.0, 2.0, 6).unwrap();
        // degree 11 is the limit for 6 nodes
        let got = rule.integrate(|x| x.powi(11) - 3.0 * x.powi(4));
        let exact = (2f64.powi(12) - 1.0) / 12.0 - 3.0 * (2f64.powi(5) + 1.0) / 5.0;
        assert!((got - exact).abs() < 1e-10 * exact.abs());
    }

    #[test]
    fn trapezoid_integrates_lines_exactly() {
        let rule = Axis::trapezoid(0.0, 3.0, 7).unwrap();
        assert!((rule.integrate(|x| 2.0 * x + 1.0) - 12.0).abs() < 1e-13);
        assert!((rule.weights.iter().sum::<f64>() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn odd_gauss_rule_has_centre_node() {
        let rule = Axis::gauss_legendre(-1.0, 1.0, 5).unwrap();
        assert!(rule.nodes[2].abs() < 1e-15);
        assert!((rule.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }
}
