//! Identification diagnostics for semiparametric models.
//!
//! The crate discretizes score operators on weighted quadrature grids,
//! computes their weighted singular systems, and uses them to sort smooth
//! functionals of a model into regularly identified, irregularly identified
//! and unidentified. On top of that sit Fisher and generalized Fisher
//! information, regularized solvers for the adjoint moment equation
//! `S* g = r`, a catalog of worked models, and a Monte Carlo harness that
//! measures convergence rates of the resulting moment estimators.
//!
//! Layout:
//!
//! * [`linop`]: weighted spaces, grid functions, dense operators.
//! * [`diagnostics`]: singular systems, source norms, classification,
//!   Fisher information, completeness and smoothness probes.
//! * [`solvers`]: adjoint-equation solvers and multiplicative deconvolution.
//! * [`models`]: the example models.
//! * [`mc`]: sampling, rate experiments, impossibility paths.
//! * [`cli`]: the config-driven front end used by the `identikit` binary.

pub mod cli;
pub mod diagnostics;
pub mod error;
pub(crate) mod la;
pub mod linop;
pub mod mc;
pub mod models;
pub mod solvers;

pub use error::{Error, Result};
