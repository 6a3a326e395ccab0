use faer::Mat;

use crate::error::{Error, Result};
use crate::la;
use crate::linop::{check_space, GridFunction, LinOp, Space};

/// Default relative cutoff below which singular values count as zero.
pub const TAU_NULL: f64 = 1e-10;

/// Weighted singular system `S φ_j = λ_j ψ_j`, `S* ψ_j = λ_j φ_j`.
///
/// Sign convention: the largest-magnitude entry of each `φ_j` is positive.
#[derive(Debug, Clone)]
pub struct SingularSystem {
    domain: Space,
    codomain: Space,
    values: Vec<f64>,
    /// domain-nodes × k, columns are φ_j.
    right: Mat<f64>,
    /// codomain-nodes × k, columns are ψ_j.
    left: Mat<f64>,
    rank_cutoff: usize,
    tau_null: f64,
    /// True when all `min(m, n)` triples were kept.
    complete: bool,
}

/// Top-`k` weighted singular triples with the default cutoff.
pub fn singular_system(op: &LinOp, k: usize) -> Result<SingularSystem> {
    singular_system_with(op, k, TAU_NULL)
}

/// Full singular system (all `min(m, n)` triples).
pub fn full_singular_system(op: &LinOp) -> Result<SingularSystem> {
    singular_system(op, op.rows().min(op.cols()))
}

pub fn singular_system_with(op: &LinOp, k: usize, tau_null: f64) -> Result<SingularSystem> {
    let p = op.rows().min(op.cols());
    if k > p {
        return Err(Error::invalid(format!(
            "requested {k} singular triples but the operator has at most {p}"
        )));
    }
    let (u, s, v) = la::thin_svd(&op.symmetrized())?;
    let wd = op.domain().weights();
    let wc = op.codomain().weights();
    let mut right = Mat::from_fn(op.cols(), k, |i, j| v[(i, j)] / wd[i].sqrt());
    let mut left = Mat::from_fn(op.rows(), k, |i, j| u[(i, j)] / wc[i].sqrt());
    for j in 0..k {
        let mut best = 0.0f64;
        let mut sign = 1.0;
        for i in 0..right.nrows() {
            let x = right[(i, j)];
            if x.abs() > best {
                best = x.abs();
                sign = x.signum();
            }
        }
        if sign < 0.0 {
            for i in 0..right.nrows() {
                right[(i, j)] = -right[(i, j)];
            }
            for i in 0..left.nrows() {
                left[(i, j)] = -left[(i, j)];
            }
        }
    }
    let values: Vec<f64> = s[..k].to_vec();
    let max = s.first().copied().unwrap_or(0.0);
    let rank_cutoff = values.iter().take_while(|&&l| l >= tau_null * max && l > 0.0).count();
    Ok(SingularSystem {
        domain: op.domain().clone(),
        codomain: op.codomain().clone(),
        values,
        right,
        left,
        rank_cutoff,
        tau_null,
        complete: k == p,
    })
}

impl SingularSystem {
    /// Builds a system from explicit parts. `right` and `left` hold the
    /// singular vectors as columns; they must be weighted-orthonormal.
    pub fn from_parts(
        domain: &Space,
        codomain: &Space,
        values: Vec<f64>,
        right: Mat<f64>,
        left: Mat<f64>,
        tau_null: f64,
    ) -> Result<Self> {
        let k = values.len();
        if right.ncols() != k || left.ncols() != k || right.nrows() != domain.len() || left.nrows() != codomain.len() {
            return Err(Error::dims("singular system parts do not match"));
        }
        if values.windows(2).any(|w| w[1] > w[0]) || values.iter().any(|v| *v < 0.0) {
            return Err(Error::invalid("singular values must be nonnegative and nonincreasing"));
        }
        let max = values.first().copied().unwrap_or(0.0);
        let rank_cutoff = values.iter().take_while(|&&l| l >= tau_null * max && l > 0.0).count();
        let complete = k == domain.len().min(codomain.len());
        Ok(SingularSystem {
            domain: domain.clone(),
            codomain: codomain.clone(),
            values,
            right,
            left,
            rank_cutoff,
            tau_null,
            complete,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn lambda_max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Number of resolved triples: `λ_j ≥ τ_null · λ_max` for `j < rank_cutoff`.
    pub fn rank_cutoff(&self) -> usize {
        self.rank_cutoff
    }

    pub fn tau_null(&self) -> f64 {
        self.tau_null
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn domain(&self) -> &Space {
        &self.domain
    }

    pub fn codomain(&self) -> &Space {
        &self.codomain
    }

    pub fn right_matrix(&self) -> &Mat<f64> {
        &self.right
    }

    pub fn left_matrix(&self) -> &Mat<f64> {
        &self.left
    }

    /// `φ_j` on the domain.
    pub fn right(&self, j: usize) -> GridFunction {
        let v = (0..self.right.nrows()).map(|i| self.right[(i, j)]).collect();
        GridFunction::new(&self.domain, v).expect("length matches")
    }

    /// `ψ_j` on the codomain.
    pub fn left(&self, j: usize) -> GridFunction {
        let v = (0..self.left.nrows()).map(|i| self.left[(i, j)]).collect();
        GridFunction::new(&self.codomain, v).expect("length matches")
    }

    /// `⟨b, φ_j⟩` for every kept `j`.
    pub fn right_coefficients(&self, b: &GridFunction) -> Result<Vec<f64>> {
        check_space(&self.domain, b.space())?;
        let wb: Vec<f64> = b.values().iter().zip(self.domain.weights()).map(|(v, w)| v * w).collect();
        Ok(la::matvec_t(&self.right, &wb))
    }

    /// `⟨g, ψ_j⟩` for every kept `j`.
    pub fn left_coefficients(&self, g: &GridFunction) -> Result<Vec<f64>> {
        check_space(&self.codomain, g.space())?;
        let wg: Vec<f64> = g.values().iter().zip(self.codomain.weights()).map(|(v, w)| v * w).collect();
        Ok(la::matvec_t(&self.left, &wg))
    }

    /// `Σ_j c_j φ_j`.
    pub fn synthesize_right(&self, c: &[f64]) -> GridFunction {
        let mut full = vec![0.0; self.len()];
        full[..c.len()].copy_from_slice(c);
        GridFunction::new(&self.domain, la::matvec(&self.right, &full)).expect("length matches")
    }

    /// `Σ_j c_j ψ_j`.
    pub fn synthesize_left(&self, c: &[f64]) -> GridFunction {
        let mut full = vec![0.0; self.len()];
        full[..c.len()].copy_from_slice(c);
        GridFunction::new(&self.codomain, la::matvec(&self.left, &full)).expect("length matches")
    }

    /// Orthonormal basis of the numerical null space of `S` inside the kept
    /// triples, i.e. the `φ_j` with `j ≥ rank_cutoff`. When the domain is
    /// larger than the codomain the remaining null directions are not
    /// represented here; use projections onto the resolved span instead.
    pub fn null_vectors(&self) -> Vec<GridFunction> {
        (self.rank_cutoff..self.len()).map(|j| self.right(j)).collect()
    }
}
