//! Closed-form conformal utilities in the unit disk.

mod branch;
mod slit;

pub use branch::BranchedValue;
pub use slit::{slit_map, SlitMap};

use num_complex::Complex64;

use crate::error::{Error, Result};

fn check_pair(w1: Complex64, w2: Complex64) -> Result<()> {
    if (w1 - w2).norm() == 0.0 {
        return Err(Error::Singularity(format!("coincident points {w1}")));
    }
    if w1.norm() > 1.0 || w2.norm() > 1.0 {
        return Err(Error::Domain("points must lie in the closed unit disk".into()));
    }
    if w1.norm() == 1.0 && w2.norm() == 1.0 {
        return Err(Error::Domain("at most one point may lie on the boundary".into()));
    }
    Ok(())
}

/// Dirichlet Green's function of the disk, `log|1 - w1 w̄2| - log|w1 - w2|`.
pub fn green(w1: Complex64, w2: Complex64) -> Result<f64> {
    check_pair(w1, w2)?;
    Ok((1.0 - w1 * w2.conj()).norm().ln() - (w1 - w2).norm().ln())
}

/// Complex Green's function `G⁺ = ½ log[(1 - w1 w̄2)/(w1 - w2)]` on the principal
/// sheet; `2 Re G⁺ = G`.
pub fn green_complex(w1: Complex64, w2: Complex64) -> Result<Complex64> {
    check_pair(w1, w2)?;
    Ok(0.5 * ((1.0 - w1 * w2.conj()).ln() - (w1 - w2).ln()))
}

/// `G⁺` on the sheet fixed by a continued `log(w1 - w2)`.
/// `1 - w1 w̄2` has positive real part inside the disk, so its principal
/// logarithm is already continuous.
pub fn green_complex_on_sheet(w1: Complex64, w2: Complex64, log_diff: BranchedValue) -> Complex64 {
    0.5 * ((1.0 - w1 * w2.conj()).ln() - log_diff.log())
}

/// Pre-Schwarzian `f''/f'`.
pub fn pre_schwarzian(fp: Complex64, fpp: Complex64) -> Result<Complex64> {
    if fp.norm() == 0.0 {
        return Err(Error::Singularity("degenerate map: f' = 0".into()));
    }
    Ok(fpp / fp)
}

/// Schwarzian `f'''/f' - (3/2)(f''/f')²`.
pub fn schwarzian(fp: Complex64, fpp: Complex64, fppp: Complex64) -> Result<Complex64> {
    let n = pre_schwarzian(fp, fpp)?;
    Ok(fppp / fp - 1.5 * n * n)
}
