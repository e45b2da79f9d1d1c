//! Sparse direct solves.

use faer::prelude::*;
use faer::Col;

use crate::error::{EdgError, Result};
use crate::sparse::CsrMatrix;

/// Largest accepted `||Ax - b|| / ||b||`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

const REFINEMENT_STEPS: usize = 4;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Relative residual `||Ax - b|| / ||b||`, or the absolute residual when
/// `b = 0`.
pub fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let mut r = a.matvec(x);
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri -= bi);
    let nb = norm(b);
    if nb > 0.0 {
        norm(&r) / nb
    } else {
        norm(&r)
    }
}

/// `1 / max_j |a_ij|` for every row.
fn row_scales(a: &CsrMatrix) -> Result<Vec<f64>> {
    (0..a.nrows())
        .map(|i| {
            let m = a.row(i).1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if m > 0.0 && m.is_finite() {
                Ok(1.0 / m)
            } else {
                Err(EdgError::FactorizationFailure(format!("row {i} is zero or not finite")))
            }
        })
        .collect()
}

fn scaled_residual_norm(a: &CsrMatrix, x: &[f64], b: &[f64], scales: &[f64]) -> f64 {
    let r = a.matvec(x);
    r.iter()
        .zip(b)
        .zip(scales)
        .map(|((ri, bi), s)| (s * (ri - bi)).abs())
        .fold(0.0, f64::max)
}

/// Solves `A x = b` by row-equilibrated sparse LU with partial pivoting,
/// followed by iterative refinement on the equilibrated residual. Returns
/// `x` and the final relative residual.
pub fn sparse_solve_with_residual(a: &CsrMatrix, b: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(EdgError::InvalidArgument(format!(
            "cannot solve a {}x{} system with a right-hand side of length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    if n == 0 {
        return Ok((Vec::new(), 0.0));
    }
    let scales = row_scales(a)?;
    let scaled = a.scale_rows(&scales);
    let lu = scaled
        .to_faer()
        .sp_lu()
        .map_err(|e| EdgError::FactorizationFailure(format!("{e:?}")))?;
    let solve = |rhs: &[f64]| -> Vec<f64> {
        let c = Col::<f64>::from_fn(n, |i| scales[i] * rhs[i]);
        let x = lu.solve(&c);
        (0..n).map(|i| x[i]).collect()
    };
    let mut x = solve(b);
    let mut row_res = scaled_residual_norm(a, &x, b, &scales);
    for _ in 0..REFINEMENT_STEPS {
        if !row_res.is_finite() || row_res == 0.0 {
            break;
        }
        let mut r = a.matvec(&x);
        r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
        let dx = solve(&r);
        let candidate: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
        let candidate_res = scaled_residual_norm(a, &candidate, b, &scales);
        if candidate_res >= 0.5 * row_res {
            if candidate_res < row_res {
                x = candidate;
            }
            break;
        }
        x = candidate;
        row_res = candidate_res;
    }
    let res = relative_residual(a, &x, b);
    if !res.is_finite() || res > RESIDUAL_TOLERANCE {
        return Err(EdgError::FactorizationFailure(format!(
            "relative residual {res:e} exceeds {RESIDUAL_TOLERANCE:e}; the matrix is numerically singular"
        )));
    }
    Ok((x, res))
}

/// Solves `A x = b`; fails unless `||Ax - b|| / ||b|| <= 1e-10`.
pub fn sparse_solve(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    sparse_solve_with_residual(a, b).map(|(x, _)| x)
}
