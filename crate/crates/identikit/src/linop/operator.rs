use faer::Mat;

use super::{check_space, GridFunction, Space};
use crate::error::{Error, Result};
use crate::la;

/// Dense operator from `domain` to `codomain`; `matrix` is
/// codomain-nodes × domain-nodes and acts on nodal values.
#[derive(Debug, Clone)]
pub struct LinOp {
    domain: Space,
    codomain: Space,
    matrix: Mat<f64>,
}

impl LinOp {
    pub fn new(domain: &Space, codomain: &Space, matrix: Mat<f64>) -> Result<Self> {
        if matrix.nrows() != codomain.len() || matrix.ncols() != domain.len() {
            return Err(Error::dims(format!(
                "matrix is {}x{} but spaces have {} (codomain) and {} (domain) nodes",
                matrix.nrows(),
                matrix.ncols(),
                codomain.len(),
                domain.len()
            )));
        }
        if (0..matrix.ncols()).any(|j| matrix.col(j).iter().any(|x| !x.is_finite())) {
            return Err(Error::invalid("operator matrix has non-finite entries"));
        }
        Ok(LinOp { domain: domain.clone(), codomain: codomain.clone(), matrix })
    }

    /// Matrix given row by row.
    pub fn from_rows(domain: &Space, codomain: &Space, row_major: &[f64]) -> Result<Self> {
        let (m, n) = (codomain.len(), domain.len());
        if row_major.len() != m * n {
            return Err(Error::dims("row-major data does not match the spaces"));
        }
        Self::new(domain, codomain, Mat::from_fn(m, n, |i, j| row_major[i * n + j]))
    }

    pub fn identity(space: &Space) -> Self {
        let n = space.len();
        LinOp {
            domain: space.clone(),
            codomain: space.clone(),
            matrix: Mat::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 }),
        }
    }

    pub fn domain(&self) -> &Space {
        &self.domain
    }

    pub fn codomain(&self) -> &Space {
        &self.codomain
    }

    pub fn matrix(&self) -> &Mat<f64> {
        &self.matrix
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn apply(&self, b: &GridFunction) -> Result<GridFunction> {
        check_space(&self.domain, b.space())?;
        GridFunction::new(&self.codomain, la::matvec(&self.matrix, b.values()))
    }

    /// Apply to raw nodal values, skipping the space check.
    pub fn apply_values(&self, b: &[f64]) -> Vec<f64> {
        la::matvec(&self.matrix, b)
    }

    /// Adjoint applied to raw codomain values without forming `S*`.
    pub fn adjoint_apply_values(&self, g: &[f64]) -> Vec<f64> {
        let wc = self.codomain.weights();
        let scaled: Vec<f64> = g.iter().zip(wc).map(|(g, w)| g * w).collect();
        la::matvec_t(&self.matrix, &scaled)
            .into_iter()
            .zip(self.domain.weights())
            .map(|(v, w)| v / w)
            .collect()
    }

    /// `self ∘ inner`: first `inner`, then `self`.
    pub fn compose(&self, inner: &LinOp) -> Result<LinOp> {
        check_space(&self.domain, &inner.codomain)?;
        Ok(LinOp {
            domain: inner.domain.clone(),
            codomain: self.codomain.clone(),
            matrix: &self.matrix * &inner.matrix,
        })
    }

    /// `D_c^{1/2} A D_d^{-1/2}`: the matrix of the operator in orthonormal
    /// coordinates, whose ordinary SVD is the weighted SVD of the operator.
    pub fn symmetrized(&self) -> Mat<f64> {
        let wc = self.codomain.weights();
        let wd = self.domain.weights();
        Mat::from_fn(self.rows(), self.cols(), |i, j| {
            self.matrix[(i, j)] * wc[i].sqrt() / wd[j].sqrt()
        })
    }

    /// Matrix entries in row-major order.
    pub fn row_major(&self) -> Vec<f64> {
        let (m, n) = (self.rows(), self.cols());
        let mut out = Vec::with_capacity(m * n);
        for i in 0..m {
            for j in 0..n {
                out.push(self.matrix[(i, j)]);
            }
        }
        out
    }
}

/// Weighted adjoint: `A*_{ij} = A_{ji} · w^cod_j / w^dom_i`.
pub fn adjoint(op: &LinOp) -> LinOp {
    let wc = op.codomain.weights();
    let wd = op.domain.weights();
    let matrix = Mat::from_fn(op.cols(), op.rows(), |i, j| op.matrix[(j, i)] * wc[j] / wd[i]);
    LinOp { domain: op.codomain.clone(), codomain: op.domain.clone(), matrix }
}

/// `S*S` on the domain of `op`.
pub fn information_operator(op: &LinOp) -> LinOp {
    let star = adjoint(op);
    LinOp {
        domain: op.domain.clone(),
        codomain: op.domain.clone(),
        matrix: &star.matrix * &op.matrix,
    }
}
