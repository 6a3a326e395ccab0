//! Weighted inner-product spaces, grid functions and dense operators.
//!
//! A [`WeightedSpace`] is a quadrature grid: nodes in `R^d` with positive
//! weights. It stands in for an `L2` space, with `⟨f, g⟩ = Σ wᵢ fᵢ gᵢ`.
//! Operators between spaces are dense matrices whose adjoints are taken in
//! the weighted inner products, so `S*` of a conditional-mean operator is the
//! reverse conditional mean.

mod container;
mod joint;
mod operator;
pub mod quadrature;
mod tangent;

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

pub use container::{read_operator, read_space, write_operator, write_space, MAGIC};
pub use joint::{build_score_from_joint, JointDensity, TrimReport};
pub use operator::{adjoint, information_operator, LinOp};
pub use quadrature::Axis;
pub use tangent::{indicator_difference_basis, mean_zero_basis, restrict_tangent, TangentBasis};

/// Hard cap on nodes along any one tensor axis.
pub const MAX_AXIS_NODES: usize = 4096;

/// Tolerance on the total mass of a probability space.
pub const PROBABILITY_MASS_TOL: f64 = 1e-6;

/// Shared handle to an immutable space.
pub type Space = Arc<WeightedSpace>;

/// Per-axis coordinates of a tensor-product grid. `index` maps the
/// row-major tensor position (last axis fastest) to the node index, or
/// `None` where a node was dropped.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensorAxes {
    pub axes: Vec<Vec<f64>>,
    pub index: Vec<Option<usize>>,
}

impl TensorAxes {
    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }

    /// Row-major position of a multi-index.
    pub fn flat(&self, multi: &[usize]) -> usize {
        let mut pos = 0;
        for (k, &i) in multi.iter().enumerate() {
            pos = pos * self.axes[k].len() + i;
        }
        pos
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSpace {
    label: String,
    dim: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    probability: bool,
    axes: Option<TensorAxes>,
}

impl WeightedSpace {
    /// A space from row-major node coordinates (`n * dim` values) and weights.
    pub fn new(label: &str, dim: usize, nodes: Vec<f64>, weights: Vec<f64>) -> Result<Space> {
        Self::build(label, dim, nodes, weights, false, None)
    }

    /// Like [`WeightedSpace::new`] but the weights must sum to one.
    pub fn probability(label: &str, dim: usize, nodes: Vec<f64>, weights: Vec<f64>) -> Result<Space> {
        Self::build(label, dim, nodes, weights, true, None)
    }

    /// `n` points `0, 1, …, n-1` with unit weights; the coefficient space of
    /// a sequence model.
    pub fn unit(label: &str, n: usize) -> Result<Space> {
        let nodes = (0..n).map(|i| i as f64).collect();
        let axes = TensorAxes {
            axes: vec![(0..n).map(|i| i as f64).collect()],
            index: (0..n).map(Some).collect(),
        };
        Self::build(label, 1, nodes, vec![1.0; n], false, Some(axes))
    }

    /// Tensor product of one-dimensional rules, row-major with the last axis
    /// varying fastest. Weights multiply.
    pub fn tensor(label: &str, axes: &[Axis]) -> Result<Space> {
        if axes.is_empty() {
            return Err(Error::invalid("tensor grid needs at least one axis"));
        }
        for a in axes {
            if a.nodes.len() > MAX_AXIS_NODES {
                return Err(Error::invalid(format!(
                    "axis has {} nodes; the cap is {MAX_AXIS_NODES}",
                    a.nodes.len()
                )));
            }
        }
        let dim = axes.len();
        let total: usize = axes.iter().map(|a| a.nodes.len()).product();
        let mut nodes = Vec::with_capacity(total * dim);
        let mut weights = Vec::with_capacity(total);
        let mut multi = vec![0usize; dim];
        for _ in 0..total {
            let mut w = 1.0;
            for (k, a) in axes.iter().enumerate() {
                nodes.push(a.nodes[multi[k]]);
                w *= a.weights[multi[k]];
            }
            weights.push(w);
            for k in (0..dim).rev() {
                multi[k] += 1;
                if multi[k] < axes[k].nodes.len() {
                    break;
                }
                multi[k] = 0;
            }
        }
        let tensor = TensorAxes {
            axes: axes.iter().map(|a| a.nodes.clone()).collect(),
            index: (0..total).map(Some).collect(),
        };
        Self::build(label, dim, nodes, weights, false, Some(tensor))
    }

    fn build(
        label: &str,
        dim: usize,
        nodes: Vec<f64>,
        weights: Vec<f64>,
        probability: bool,
        axes: Option<TensorAxes>,
    ) -> Result<Space> {
        if dim == 0 {
            return Err(Error::invalid("space dimension must be at least 1"));
        }
        if nodes.len() != weights.len() * dim {
            return Err(Error::dims(format!(
                "{} node coordinates for {} weights in dimension {dim}",
                nodes.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::invalid(format!("weights must be positive and finite, got {w}")));
        }
        if nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("node coordinates must be finite"));
        }
        if probability {
            let mass: f64 = weights.iter().sum();
            if (mass - 1.0).abs() > PROBABILITY_MASS_TOL {
                return Err(Error::invalid(format!(
                    "probability space '{label}' has total mass {mass}"
                )));
            }
        }
        Ok(Arc::new(WeightedSpace {
            label: label.to_string(),
            dim,
            nodes,
            weights,
            probability,
            axes,
        }))
    }

    /// Same nodes (and tensor layout), new weights.
    pub fn reweighted(&self, label: &str, weights: Vec<f64>, probability: bool) -> Result<Space> {
        if weights.len() != self.len() {
            return Err(Error::dims("reweighting needs one weight per node"));
        }
        Self::build(label, self.dim, self.nodes.clone(), weights, probability, self.axes.clone())
    }

    /// Sub-space on the listed nodes, in the given order. The tensor layout is
    /// kept with dropped positions marked absent.
    pub fn subset(&self, keep: &[usize], label: &str, weights: Option<Vec<f64>>, probability: bool) -> Result<Space> {
        let mut nodes = Vec::with_capacity(keep.len() * self.dim);
        for &i in keep {
            nodes.extend_from_slice(self.node(i));
        }
        let weights = weights.unwrap_or_else(|| keep.iter().map(|&i| self.weights[i]).collect());
        let axes = self.axes.as_ref().map(|t| {
            let mut old_to_new = vec![None; self.len()];
            for (new, &old) in keep.iter().enumerate() {
                old_to_new[old] = Some(new);
            }
            TensorAxes {
                axes: t.axes.clone(),
                index: t.index.iter().map(|o| o.and_then(|i| old_to_new[i])).collect(),
            }
        });
        Self::build(label, self.dim, nodes, weights, probability, axes)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_probability(&self) -> bool {
        self.probability
    }

    pub fn axes(&self) -> Option<&TensorAxes> {
        self.axes.as_ref()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Structural equality: same label, nodes and weights.
    pub fn same_as(&self, other: &WeightedSpace) -> bool {
        std::ptr::eq(self, other)
            || (self.dim == other.dim
                && self.label == other.label
                && self.nodes == other.nodes
                && self.weights == other.weights)
    }
}

/// A function sampled on the nodes of a space.
#[derive(Debug, Clone)]
pub struct GridFunction {
    space: Space,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(space: &Space, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::dims(format!(
                "{} values for a space with {} nodes",
                values.len(),
                space.len()
            )));
        }
        Ok(GridFunction { space: space.clone(), values })
    }

    pub fn from_fn(space: &Space, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let values = (0..space.len()).map(|i| f(space.node(i))).collect();
        GridFunction { space: space.clone(), values }
    }

    pub fn constant(space: &Space, c: f64) -> Self {
        GridFunction { space: space.clone(), values: vec![c; space.len()] }
    }

    pub fn zeros(space: &Space) -> Self {
        Self::constant(space, 0.0)
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.values
            .iter()
            .zip(self.space.weights())
            .map(|(v, w)| w * v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Weighted mean `Σ wᵢfᵢ / Σ wᵢ`.
    pub fn mean(&self) -> f64 {
        let w = self.space.weights();
        self.values.iter().zip(w).map(|(v, w)| v * w).sum::<f64>() / self.space.total_mass()
    }

    /// The function minus its weighted mean.
    pub fn centered(&self) -> GridFunction {
        let m = self.mean();
        self.map(|v| v - m)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction { space: self.space.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn scaled(&self, c: f64) -> GridFunction {
        self.map(|v| c * v)
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &GridFunction, b: f64) -> Result<GridFunction> {
        check_space(&self.space, &other.space)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Ok(GridFunction { space: self.space.clone(), values })
    }

    pub fn inner(&self, other: &GridFunction) -> Result<f64> {
        inner(&self.space, self, other)
    }
}

pub(crate) fn check_space(a: &WeightedSpace, b: &WeightedSpace) -> Result<()> {
    if a.same_as(b) {
        Ok(())
    } else {
        Err(Error::SpaceMismatch)
    }
}

/// `Σᵢ wᵢ fᵢ gᵢ`.
pub fn inner(space: &WeightedSpace, f: &GridFunction, g: &GridFunction) -> Result<f64> {
    check_space(space, &f.space)?;
    check_space(space, &g.space)?;
    Ok(space
        .weights
        .iter()
        .zip(f.values.iter().zip(&g.values))
        .map(|(w, (a, b))| w * a * b)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_inner_product() {
        let s = WeightedSpace::new("μ", 1, vec![0.0, 1.0], vec![0.3, 0.7]).unwrap();
        let f = GridFunction::new(&s, vec![2.0, 4.0]).unwrap();
        let g = GridFunction::constant(&s, 1.0);
        assert!((inner(&s, &f, &g).unwrap() - 3.4).abs() < 1e-15);
    }

    #[test]
    fn orthogonal_pair() {
        let s = WeightedSpace::probability("P", 1, vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        let f = GridFunction::new(&s, vec![1.0, -1.0]).unwrap();
        let g = GridFunction::constant(&s, 1.0);
        assert_eq!(inner(&s, &f, &g).unwrap(), 0.0);
        assert!((inner(&s, &g, &g).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mismatched_spaces_are_rejected() {
        let a = WeightedSpace::new("a", 1, vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
        let b = WeightedSpace::new("b", 1, vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
        let f = GridFunction::constant(&a, 1.0);
        let g = GridFunction::constant(&b, 1.0);
        let err = inner(&a, &f, &g).unwrap_err();
        assert_eq!(err.to_string(), "space mismatch");
    }

    #[test]
    fn nonpositive_weights_rejected() {
        assert!(WeightedSpace::new("x", 1, vec![0.0], vec![0.0]).is_err());
        assert!(WeightedSpace::probability("x", 1, vec![0.0, 1.0], vec![0.5, 0.4]).is_err());
    }

    #[test]
    fn tensor_layout_is_row_major() {
        let a = Axis { nodes: vec![0.0, 1.0], weights: vec![1.0, 2.0] };
        let b = Axis { nodes: vec![10.0, 20.0, 30.0], weights: vec![1.0, 1.0, 3.0] };
        let s = WeightedSpace::tensor("t", &[a, b]).unwrap();
        assert_eq!(s.len(), 6);
        assert_eq!(s.node(4), &[1.0, 20.0]);
        assert_eq!(s.weights()[5], 6.0);
        assert_eq!(s.axes().unwrap().flat(&[1, 2]), 5);
    }
}
