//! Small linear-algebra kernels for the exact evaluators.

use alloc::vec::Vec;

/// Systems with more unknowns than this are solved iteratively.
pub const DENSE_LIMIT: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is numerically singular")]
    Singular,
    #[error("iterative solve did not reach the residual target after {0} sweeps")]
    NotConverged(usize),
}

/// Sparse row: `(column, coefficient)` pairs.
pub type SparseRow = Vec<(usize, f64)>;

/// Solves `(I - M) x = rhs` where `M` is a substochastic matrix given by rows.
///
/// Dense LU with partial pivoting up to [`DENSE_LIMIT`] unknowns,
/// Gauss–Seidel beyond.
pub fn solve_identity_minus(rows: &[SparseRow], rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let n = rhs.len();
    if n <= DENSE_LIMIT {
        let mut a = alloc::vec![0.0; n * n];
        for (i, row) in rows.iter().enumerate() {
            a[i * n + i] += 1.0;
            for &(j, w) in row {
                a[i * n + j] -= w;
            }
        }
        lu_solve(n, a, rhs.to_vec())
    } else {
        gauss_seidel(rows, rhs, 1e-12, 1_000_000)
    }
}

/// Solves `A x = b` in place (`a` row-major, `n × n`).
pub fn lu_solve(n: usize, mut a: Vec<f64>, mut b: Vec<f64>) -> Result<Vec<f64>, LinalgError> {
    for col in 0..n {
        let (piv, max) =
            (col..n)
                .map(|r| (r, a[r * n + col].abs()))
                .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if max <= 1e-300 {
            return Err(LinalgError::Singular);
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            a[r * n + col] = 0.0;
            for k in col + 1..n {
                a[r * n + k] -= f * a[col * n + k];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = alloc::vec![0.0; n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for k in r + 1..n {
            s -= a[r * n + k] * x[k];
        }
        x[r] = s / a[r * n + r];
    }
    Ok(x)
}

/// Gauss–Seidel for `(I - M) x = rhs`, stopping when the max-norm update
/// falls below `tol`.
pub fn gauss_seidel(rows: &[SparseRow], rhs: &[f64], tol: f64, max_sweeps: usize) -> Result<Vec<f64>, LinalgError> {
    let n = rhs.len();
    let mut x = alloc::vec![0.0; n];
    for _ in 0..max_sweeps {
        let mut delta = 0.0f64;
        for i in 0..n {
            let mut diag = 1.0;
            let mut s = rhs[i];
            for &(j, w) in &rows[i] {
                if j == i {
                    diag -= w;
                } else {
                    s += w * x[j];
                }
            }
            if diag.abs() <= 1e-300 {
                return Err(LinalgError::Singular);
            }
            let v = s / diag;
            delta = delta.max((v - x[i]).abs());
            x[i] = v;
        }
        if delta <= tol {
            return Ok(x);
        }
    }
    Err(LinalgError::NotConverged(max_sweeps))
}
