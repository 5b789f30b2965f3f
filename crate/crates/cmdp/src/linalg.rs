//! Dense LU factorization with partial pivoting.
//!
//! All linear systems in this crate are small (a few hundred unknowns at
//! most) and dense, so a plain in-place LU with row pivoting is the right
//! tool. Solutions are residual-checked against the original system.

use ndarray::{Array1, Array2};
use thiserror::Error;

/// Pivot magnitudes below this are treated as exact zeros.
pub const PIVOT_TOL: f64 = 1e-10;
/// Relative residual bound for an accepted solution.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is singular to working precision (elimination column {column})")]
    Singular { column: usize },
    #[error("solution residual {residual} exceeds tolerance {bound}")]
    ResidualTooLarge { residual: f64, bound: f64 },
    #[error("matrix is {rows}x{cols}, rhs has length {rhs}")]
    DimensionMismatch { rows: usize, cols: usize, rhs: usize },
}

/// LU factors of a square matrix, reusable across right-hand sides.
struct LuFactors {
    /// Unit-lower factors below the diagonal, upper factors on and above.
    lu: Array2<f64>,
    /// `swaps[k]` is the row exchanged with row `k` during elimination.
    swaps: Vec<usize>,
}

impl LuFactors {
    fn factor(a: &Array2<f64>) -> Result<Self, LinalgError> {
        let n = a.nrows();
        let mut lu = a.clone();
        let mut swaps = Vec::with_capacity(n);
        for col in 0..n {
            // Partial pivot: largest magnitude on or below the diagonal.
            let mut pivot_row = col;
            let mut pivot_mag = lu[[col, col]].abs();
            for r in col + 1..n {
                let mag = lu[[r, col]].abs();
                if mag > pivot_mag {
                    pivot_mag = mag;
                    pivot_row = r;
                }
            }
            if !pivot_mag.is_finite() || pivot_mag < PIVOT_TOL {
                return Err(LinalgError::Singular { column: col });
            }
            if pivot_row != col {
                for c in 0..n {
                    lu.swap([col, c], [pivot_row, c]);
                }
            }
            swaps.push(pivot_row);
            let pivot = lu[[col, col]];
            for r in col + 1..n {
                let factor = lu[[r, col]] / pivot;
                lu[[r, col]] = factor;
                if factor == 0.0 {
                    continue;
                }
                for c in col + 1..n {
                    lu[[r, c]] -= factor * lu[[col, c]];
                }
            }
        }
        Ok(Self { lu, swaps })
    }

    /// Overwrites `x` with the solution of `a x = x_in`.
    fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.swaps.len();
        for (col, &swap) in self.swaps.iter().enumerate() {
            x.swap(col, swap);
        }
        // Forward substitution with the unit-lower factors.
        for col in 0..n {
            let xc = x[col];
            if xc == 0.0 {
                continue;
            }
            for r in col + 1..n {
                x[r] -= self.lu[[r, col]] * xc;
            }
        }
        // Back substitution on the upper triangle.
        for col in (0..n).rev() {
            x[col] /= self.lu[[col, col]];
            let xc = x[col];
            for r in 0..col {
                x[r] -= self.lu[[r, col]] * xc;
            }
        }
    }
}

fn infinity_norm(a: &Array2<f64>) -> f64 {
    let mut norm: f64 = 0.0;
    for row in a.outer_iter() {
        let s: f64 = row.iter().map(|v| v.abs()).sum();
        norm = norm.max(s);
    }
    norm
}

fn check_residual(a: &Array2<f64>, a_norm: f64, x: &[f64], b: &[f64]) -> Result<(), LinalgError> {
    let x_norm = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let bound = RESIDUAL_TOL * 1.0f64.max(a_norm * x_norm);
    let mut residual: f64 = 0.0;
    for i in 0..a.nrows() {
        let mut acc = -b[i];
        for (j, &xj) in x.iter().enumerate() {
            acc += a[[i, j]] * xj;
        }
        residual = residual.max(acc.abs());
    }
    if !residual.is_finite() || residual > bound {
        return Err(LinalgError::ResidualTooLarge { residual, bound });
    }
    Ok(())
}

/// Solves `a x = b` by LU with partial pivoting and verifies the residual
/// `max_i |(a x - b)_i| <= RESIDUAL_TOL * max(1, |a|_inf * |x|_inf)`.
pub fn solve(a: &Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>, LinalgError> {
    let (n, m) = a.dim();
    if n != m || b.len() != n {
        return Err(LinalgError::DimensionMismatch {
            rows: n,
            cols: m,
            rhs: b.len(),
        });
    }
    if n == 0 {
        return Ok(Array1::zeros(0));
    }
    let factors = LuFactors::factor(a)?;
    let mut x = b.to_vec();
    factors.solve_in_place(&mut x);
    check_residual(a, infinity_norm(a), &x, b.as_slice().expect("contiguous"))?;
    Ok(Array1::from_vec(x))
}

/// Solves `a x = b` for every column of `b` off one factorization, with the
/// same per-column residual guarantee as [`solve`].
pub fn solve_columns(a: &Array2<f64>, b: &Array2<f64>) -> Result<Array2<f64>, LinalgError> {
    let (n, m) = a.dim();
    if n != m || b.nrows() != n {
        return Err(LinalgError::DimensionMismatch {
            rows: n,
            cols: m,
            rhs: b.nrows(),
        });
    }
    let mut out = Array2::zeros((n, b.ncols()));
    if n == 0 {
        return Ok(out);
    }
    let factors = LuFactors::factor(a)?;
    let a_norm = infinity_norm(a);
    let mut col = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for j in 0..b.ncols() {
        for r in 0..n {
            rhs[r] = b[[r, j]];
        }
        col.copy_from_slice(&rhs);
        factors.solve_in_place(&mut col);
        check_residual(a, a_norm, &col, &rhs)?;
        for r in 0..n {
            out[[r, j]] = col[r];
        }
    }
    Ok(out)
}
