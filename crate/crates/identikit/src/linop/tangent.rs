use faer::Mat;

use super::{check_space, GridFunction, LinOp, Space, WeightedSpace};
use crate::error::{Error, Result};
use crate::la;

/// Largest Gram-matrix condition number accepted for a tangent basis.
pub const MAX_GRAM_CONDITION: f64 = 1e10;

/// A finite tangent space, given by a basis of directions on an operator's
/// domain and treated as the whole tangent space (no closure is taken).
///
/// The basis is orthonormalized through the eigendecomposition of its Gram
/// matrix, so the coefficient space carries unit weights and its Euclidean
/// inner product equals the Gram-induced one on the original span.
#[derive(Debug, Clone)]
pub struct TangentBasis {
    domain: Space,
    coefficients: Space,
    /// Orthonormal frame, domain-nodes × k.
    lift: Mat<f64>,
    condition: f64,
}

impl TangentBasis {
    pub fn new(basis: &[GridFunction]) -> Result<Self> {
        let first = basis.first().ok_or(Error::DegenerateTangentBasis)?;
        let domain = first.space().clone();
        for b in basis {
            check_space(&domain, b.space())?;
        }
        let k = basis.len();
        let n = domain.len();
        let w = domain.weights();
        let gram = Mat::from_fn(k, k, |a, b| {
            let (fa, fb) = (basis[a].values(), basis[b].values());
            (0..n).map(|i| w[i] * fa[i] * fb[i]).sum()
        });
        let (vals, vecs) = la::sym_eigen(&gram)?;
        let (lo, hi) = (vals[0], vals[k - 1]);
        if !(hi > 0.0) || !(lo > 0.0) || hi / lo >= MAX_GRAM_CONDITION {
            return Err(Error::DegenerateTangentBasis);
        }
        // lift[:, m] = Σ_a basis_a V[a, m] / sqrt(val_m)
        let lift = Mat::from_fn(n, k, |i, m| {
            let s: f64 = (0..k).map(|a| basis[a].values()[i] * vecs[(a, m)]).sum();
            s / vals[m].sqrt()
        });
        let coefficients = WeightedSpace::unit("tangent", k)?;
        Ok(TangentBasis { domain, coefficients, lift, condition: hi / lo })
    }

    pub fn dim(&self) -> usize {
        self.lift.ncols()
    }

    pub fn domain(&self) -> &Space {
        &self.domain
    }

    pub fn coefficient_space(&self) -> &Space {
        &self.coefficients
    }

    pub fn gram_condition(&self) -> f64 {
        self.condition
    }

    /// Orthonormal frame element `m` as a function on the domain.
    pub fn frame(&self, m: usize) -> GridFunction {
        let v = (0..self.lift.nrows()).map(|i| self.lift[(i, m)]).collect();
        GridFunction::new(&self.domain, v).expect("frame length matches domain")
    }

    /// Coefficients to a domain function.
    pub fn lift(&self, c: &GridFunction) -> Result<GridFunction> {
        check_space(&self.coefficients, c.space())?;
        GridFunction::new(&self.domain, la::matvec(&self.lift, c.values()))
    }

    /// Orthogonal projection of a domain function onto the span, in
    /// coefficients.
    pub fn project(&self, b: &GridFunction) -> Result<GridFunction> {
        check_space(&self.domain, b.space())?;
        let wb: Vec<f64> = b.values().iter().zip(self.domain.weights()).map(|(v, w)| v * w).collect();
        GridFunction::new(&self.coefficients, la::matvec_t(&self.lift, &wb))
    }

    /// `S ∘ B` on the coefficient space.
    pub fn restrict(&self, op: &LinOp) -> Result<LinOp> {
        check_space(op.domain(), &self.domain)?;
        LinOp::new(&self.coefficients, op.codomain(), op.matrix() * &self.lift)
    }
}

/// Restricts `op` to the span of `basis`; see [`TangentBasis`].
pub fn restrict_tangent(op: &LinOp, basis: &[GridFunction]) -> Result<LinOp> {
    TangentBasis::new(basis)?.restrict(op)
}

/// Orthonormal basis of the weighted-mean-zero functions (`n - 1` of them),
/// from a Householder reflection in square-root-weight coordinates.
pub fn mean_zero_basis(space: &Space) -> Vec<GridFunction> {
    let n = space.len();
    let sw: Vec<f64> = space.weights().iter().map(|w| w.sqrt()).collect();
    let norm = la::norm2(&sw);
    let u: Vec<f64> = sw.iter().map(|x| x / norm).collect();
    // H = I - 2 v vᵀ maps e_0 to u; columns 1.. are orthonormal and ⟂ u.
    let mut v = u.clone();
    v[0] -= 1.0;
    let vn = la::norm2(&v);
    (1..n)
        .map(|k| {
            let vals = (0..n)
                .map(|i| {
                    let e = if i == k { 1.0 } else { 0.0 };
                    let h = if vn > 0.0 { e - 2.0 * v[i] * v[k] / (vn * vn) } else { e };
                    h / sw[i]
                })
                .collect();
            GridFunction::new(space, vals).expect("length matches")
        })
        .collect()
}

/// Mean-zero differences of neighbouring indicators,
/// `f_i = w_{i+1}·1_i − w_i·1_{i+1}`.
pub fn indicator_difference_basis(space: &Space) -> Vec<GridFunction> {
    let n = space.len();
    let w = space.weights();
    (0..n.saturating_sub(1))
        .map(|i| {
            let mut vals = vec![0.0; n];
            vals[i] = w[i + 1];
            vals[i + 1] = -w[i];
            GridFunction::new(space, vals).expect("length matches")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space() -> Space {
        WeightedSpace::probability("G0", 1, vec![0.0, 1.0, 2.0, 3.0], vec![0.1, 0.2, 0.3, 0.4]).unwrap()
    }

    #[test]
    fn mean_zero_basis_is_orthonormal_and_centered() {
        let s = space();
        let b = mean_zero_basis(&s);
        assert_eq!(b.len(), 3);
        for (i, f) in b.iter().enumerate() {
            assert!(f.mean().abs() < 1e-14);
            for (j, g) in b.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((f.inner(g).unwrap() - want).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn indicator_differences_have_codimension_one() {
        let s = space();
        let basis = indicator_difference_basis(&s);
        let op = LinOp::identity(&s);
        let r = restrict_tangent(&op, &basis).unwrap();
        assert_eq!(r.cols(), 3);
    }

    #[test]
    fn dependent_basis_is_degenerate() {
        let s = space();
        let f = GridFunction::new(&s, vec![1.0, -1.0, 0.0, 0.0]).unwrap();
        let err = TangentBasis::new(&[f.clone(), f.scaled(2.0)]).unwrap_err();
        assert_eq!(err.to_string(), "degenerate tangent basis");
    }

    #[test]
    fn lift_and_project_round_trip() {
        let s = space();
        let t = TangentBasis::new(&indicator_difference_basis(&s)).unwrap();
        let c = GridFunction::new(t.coefficient_space(), vec![0.5, -1.0, 2.0]).unwrap();
        let back = t.project(&t.lift(&c).unwrap()).unwrap();
        for (a, b) in back.values().iter().zip(c.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
