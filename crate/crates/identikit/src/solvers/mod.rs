//! Regularized adjoint moment equations and multiplicative deconvolution.

mod deconvolve;
mod moment;

pub use deconvolve::{
    check_kernel_symmetry, deconvolve_multiplicative, forward_convolve, taper_width, Deconvolution, ErrorDensity,
    LogGrid, EPS_K, SEVERE_CLIP,
};
pub use moment::{
    moment_estimate, solve_adjoint_equation, solve_with_system, Interpolator, MomentEstimate, MomentSolution,
    RegMethod, RegPolicy, Selection, MAX_OUTSIDE_FRACTION,
};
