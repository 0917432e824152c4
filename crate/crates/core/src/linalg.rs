//! Small dense symmetric positive-definite solves.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Systems whose estimated condition number exceeds this are rejected.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Solves `a x = b` for symmetric positive-definite `a` via Cholesky.
///
/// The squared ratio of the extreme Cholesky diagonal entries is a lower
/// bound on the 2-norm condition number and is used as the guard.
pub fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if a.nrows() != a.ncols() || a.nrows() != b.len() {
        return Err(Error::InvalidInput(format!(
            "system shape {}x{} with rhs of length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Singular("non-finite entries in linear system".into()));
    }
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular("matrix is not positive definite".into()))?;
    let l = chol.l_dirty();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..l.nrows() {
        let d = l[(i, i)].abs();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    let cond = (hi / lo).powi(2);
    if !(cond <= CONDITION_LIMIT) {
        return Err(Error::Singular(format!(
            "condition estimate {cond:.3e} exceeds {CONDITION_LIMIT:e}"
        )));
    }
    Ok(chol.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let a = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let b = DVector::from_vec(vec![1.0, 2.0]);
        let x = solve_spd(&a, &b).unwrap();
        // Cramer: det = 11
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-14);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_singular_and_ill_conditioned() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 1.0]);
        assert!(matches!(solve_spd(&a, &b), Err(Error::Singular(_))));
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-14]);
        assert!(matches!(solve_spd(&a, &b), Err(Error::Singular(_))));
    }
}
