//! CSV exports of spectra and partial sums. Classification reports are the
//! serde serialization of [`Classification`].

use std::fmt::Write;

use super::{Classification, SingularSystem};

/// `resolution,index,value,resolved` with one row per kept triple.
pub fn singular_values_csv(systems: &[(&str, &SingularSystem)]) -> String {
    let mut out = String::from("resolution,index,value,resolved\n");
    for (name, sys) in systems {
        for (j, v) in sys.values().iter().enumerate() {
            let _ = writeln!(out, "{name},{},{v:e},{}", j + 1, j < sys.rank_cutoff());
        }
    }
    out
}

/// `functional,resolution,beta,J,partial_sum` for both resolutions.
pub fn partial_sums_csv(classes: &[Classification]) -> String {
    let mut out = String::from("functional,resolution,beta,J,partial_sum\n");
    for c in classes {
        for (res, d) in [("coarse", &c.coarse_diagnostics), ("fine", &c.diagnostics)] {
            for (beta, curve) in d.betas.iter().zip(&d.partial_sums) {
                for (j, s) in curve.iter().enumerate() {
                    let _ = writeln!(out, "{},{res},{beta},{},{s:e}", c.functional, j + 1);
                }
            }
        }
    }
    out
}
