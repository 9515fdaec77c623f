//! Small dense symmetric solves.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

const JITTER: [f64; 5] = [1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

/// Cholesky factor of a symmetric positive definite matrix. On failure the
/// diagonal is lifted by 1e-10 .. 1e-6 (relative to its mean magnitude)
/// before giving up with a rank error.
pub fn cholesky(a: &Matrix) -> Result<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(a.clone()) {
        return Ok(c);
    }
    let n = a.nrows();
    let scale = (a.diagonal().iter().map(|d| d.abs()).sum::<f64>() / n.max(1) as f64).max(1.0);
    for jitter in JITTER {
        let mut lifted = a.clone();
        for i in 0..n {
            lifted[(i, i)] += jitter * scale;
        }
        if let Some(c) = Cholesky::new(lifted) {
            return Ok(c);
        }
    }
    Err(Error::Rank(format!("{n}x{n} matrix is not positive definite")))
}

pub fn solve_spd(a: &Matrix, b: &Vector) -> Result<Vector> {
    Ok(cholesky(a)?.solve(b))
}

pub fn inverse_spd(a: &Matrix) -> Result<Matrix> {
    Ok(cholesky(a)?.inverse())
}

/// `‖a − b‖_F / ‖b‖_F`
pub fn frobenius_relative(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).norm() / b.norm()
}
