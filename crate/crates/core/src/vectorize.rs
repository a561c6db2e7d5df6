//! Column-major vectorization, strict-upper skew vectorization, and the
//! duplication/commutation matrices of Kronecker calculus.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::linalg::{is_skew, Matrix, Vector};

/// Stacks the columns of `z`.
pub fn vec(z: &Matrix) -> Vector {
    Vector::from_column_slice(z.as_slice())
}

/// Inverse of [`vec`].
pub fn unvec(v: &Vector, rows: usize, cols: usize) -> Result<Matrix> {
    if v.len() != rows * cols {
        return Err(Error::Dimension(format!(
            "cannot reshape length {} into {rows}x{cols}",
            v.len()
        )));
    }
    Ok(Matrix::from_column_slice(rows, cols, v.as_slice()))
}

/// Length of `veck` for an `m×m` skew matrix.
pub fn veck_len(m: usize) -> usize {
    m * m.saturating_sub(1) / 2
}

/// Strict upper triangle of a skew matrix, column by column.
pub fn veck(omega: &Matrix) -> Result<Vector> {
    if omega.nrows() != omega.ncols() {
        return Err(Error::Dimension("veck needs a square matrix".into()));
    }
    if !is_skew(omega, 1e-12) {
        return Err(Error::Invariant("veck input is not skew-symmetric".into()));
    }
    let m = omega.nrows();
    let mut out = Vector::zeros(veck_len(m));
    let mut l = 0;
    for j in 0..m {
        for i in 0..j {
            out[l] = omega[(i, j)];
            l += 1;
        }
    }
    Ok(out)
}

/// Inverse of [`veck`].
pub fn unveck(v: &Vector, m: usize) -> Result<Matrix> {
    if v.len() != veck_len(m) {
        return Err(Error::Dimension(format!(
            "veck vector of length {} does not match size {m}",
            v.len()
        )));
    }
    let mut out = Matrix::zeros(m, m);
    let mut l = 0;
    for j in 0..m {
        for i in 0..j {
            out[(i, j)] = v[l];
            out[(j, i)] = -v[l];
            l += 1;
        }
    }
    Ok(out)
}

/// Duplication matrix `D` with `vec(Ω) = D·veck(Ω)` for `m×m` skew Ω.
pub fn duplication_matrix(m: usize) -> Matrix {
    let mut d = Matrix::zeros(m * m, veck_len(m));
    let mut l = 0;
    for j in 0..m {
        for i in 0..j {
            d[(i + j * m, l)] = 1.0;
            d[(j + i * m, l)] = -1.0;
            l += 1;
        }
    }
    d
}

/// Process-wide cache of duplication matrices keyed by size.
pub fn duplication_matrix_cached(m: usize) -> Arc<Matrix> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Matrix>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(m)
        .or_insert_with(|| Arc::new(duplication_matrix(m)))
        .clone()
}

/// Commutation matrix `P` with `vec(Zᵀ) = P·vec(Z)` for `Z` of size `p×q`.
pub fn commutation_matrix(p: usize, q: usize) -> Matrix {
    let mut k = Matrix::zeros(p * q, p * q);
    for i in 0..p {
        for j in 0..q {
            k[(j + i * q, i + j * p)] = 1.0;
        }
    }
    k
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    a.kronecker(b)
}
