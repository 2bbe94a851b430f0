//! Small dense linear algebra: LU with partial pivoting and Householder
//! least squares. The solvers in this crate work with systems of a few
//! hundred unknowns at most, so plain row-major kernels are plenty.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("matrix is singular to working precision (pivot {pivot:e} at column {col})")]
    Singular { col: usize, pivot: f64 },
    #[error("least-squares system is rank deficient (column {col})")]
    RankDeficient { col: usize },
}

/// Solve `A x = b` in place by LU with partial pivoting. `a` is `n × n`
/// row-major and is overwritten; `b` becomes the solution.
pub fn lu_solve(a: &mut [f64], b: &mut [f64], n: usize) -> Result<(), LinalgError> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_val = a[col * n + col].abs();
        for row in col + 1..n {
            let v = a[row * n + col].abs();
            if v > pivot_val {
                pivot_val = v;
                pivot_row = row;
            }
        }
        if pivot_val == 0.0 {
            return Err(LinalgError::Singular { col, pivot: pivot_val });
        }
        if pivot_row != col {
            for k in 0..n {
                a.swap(col * n + k, pivot_row * n + k);
            }
            b.swap(col, pivot_row);
        }
        let inv = 1.0 / a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] * inv;
            if factor == 0.0 {
                continue;
            }
            a[row * n + col] = 0.0;
            for k in col + 1..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            b[row] -= factor * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut sum = b[col];
        for k in col + 1..n {
            sum -= a[col * n + k] * b[k];
        }
        b[col] = sum / a[col * n + col];
    }
    Ok(())
}

/// Least-squares solution of an overdetermined `A x ≈ b` (`m ≥ n`) by
/// Householder QR. `a` is `m × n` row-major; both inputs are overwritten.
pub fn lstsq(a: &mut [f64], b: &mut [f64], m: usize, n: usize) -> Result<Vec<f64>, LinalgError> {
    assert_eq!(a.len(), m * n);
    assert_eq!(b.len(), m);
    assert!(m >= n);
    for col in 0..n {
        // Householder vector for column `col`, rows col..m.
        let mut norm2 = 0.0;
        for row in col..m {
            norm2 += a[row * n + col] * a[row * n + col];
        }
        let norm = norm2.sqrt();
        if norm == 0.0 {
            return Err(LinalgError::RankDeficient { col });
        }
        let alpha = if a[col * n + col] >= 0.0 { -norm } else { norm };
        let mut v = vec![0.0; m - col];
        v[0] = a[col * n + col] - alpha;
        for row in col + 1..m {
            v[row - col] = a[row * n + col];
        }
        let vtv: f64 = v.iter().map(|x| x * x).sum();
        if vtv == 0.0 {
            return Err(LinalgError::RankDeficient { col });
        }
        a[col * n + col] = alpha;
        for row in col + 1..m {
            a[row * n + col] = 0.0;
        }
        for k in col + 1..n {
            let mut dot = 0.0;
            for row in col..m {
                dot += v[row - col] * a[row * n + k];
            }
            let scale = 2.0 * dot / vtv;
            for row in col..m {
                a[row * n + k] -= scale * v[row - col];
            }
        }
        let mut dot = 0.0;
        for row in col..m {
            dot += v[row - col] * b[row];
        }
        let scale = 2.0 * dot / vtv;
        for row in col..m {
            b[row] -= scale * v[row - col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut sum = b[col];
        for k in col + 1..n {
            sum -= a[col * n + k] * x[k];
        }
        let diag = a[col * n + col];
        if diag == 0.0 {
            return Err(LinalgError::RankDeficient { col });
        }
        x[col] = sum / diag;
    }
    Ok(x)
}
