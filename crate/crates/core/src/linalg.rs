//! Dense kernels: symmetric/skew parts, SPD wrappers and the symmetric
//! Lyapunov solver used by every projection and Hessian.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Dense column-major real matrix.
pub type Matrix = DMatrix<f64>;
/// Dense real column vector.
pub type Vector = DVector<f64>;

fn require_square(a: &Matrix, what: &str) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!(
            "{what} needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

/// Symmetric part `(A + Aᵀ)/2`.
pub fn sym(a: &Matrix) -> Result<Matrix> {
    require_square(a, "sym")?;
    Ok(sym_part(a))
}

/// Skew-symmetric part `(A − Aᵀ)/2`.
pub fn skew(a: &Matrix) -> Result<Matrix> {
    require_square(a, "skew")?;
    Ok(skew_part(a))
}

pub(crate) fn sym_part(a: &Matrix) -> Matrix {
    debug_assert_eq!(a.nrows(), a.ncols());
    (a + a.transpose()) * 0.5
}

pub(crate) fn skew_part(a: &Matrix) -> Matrix {
    debug_assert_eq!(a.nrows(), a.ncols());
    (a - a.transpose()) * 0.5
}

/// Frobenius inner product `tr(AᵀB)`.
pub fn frob_inner(a: &Matrix, b: &Matrix) -> f64 {
    a.dot(b)
}

/// `‖A − Aᵀ‖_F ≤ tol·max(‖A‖_F, tiny)`.
pub fn is_symmetric(a: &Matrix, tol: f64) -> bool {
    a.nrows() == a.ncols() && (a - a.transpose()).norm() <= tol * a.norm().max(f64::MIN_POSITIVE)
}

/// `‖A + Aᵀ‖_F ≤ tol·max(‖A‖_F, tiny)`.
pub fn is_skew(a: &Matrix, tol: f64) -> bool {
    a.nrows() == a.ncols() && (a + a.transpose()).norm() <= tol * a.norm().max(f64::MIN_POSITIVE)
}

/// Symmetric positive definite matrix together with its Cholesky factor.
#[derive(Debug, Clone)]
pub struct SpdMatrix {
    mat: Matrix,
    chol: Cholesky<f64, Dyn>,
}

impl SpdMatrix {
    /// Validates symmetry (relative 1e-12) and definiteness.
    pub fn new(m: Matrix) -> Result<Self> {
        require_square(&m, "SpdMatrix")?;
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invariant("non-finite entry in SPD candidate".into()));
        }
        if !is_symmetric(&m, 1e-12) {
            return Err(Error::Invariant("matrix is not symmetric".into()));
        }
        let mat = sym_part(&m);
        let chol = Cholesky::new(mat.clone())
            .ok_or_else(|| Error::Definiteness("Cholesky factorization failed".into()))?;
        Ok(Self { mat, chol })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Solves `M·Out = Y`.
    pub fn solve(&self, y: &Matrix) -> Matrix {
        self.chol.solve(y)
    }

    /// `M·Y`.
    pub fn apply(&self, y: &Matrix) -> Matrix {
        &self.mat * y
    }

    /// Smallest and largest eigenvalue.
    pub fn eigen_range(&self) -> (f64, f64) {
        let ev = self.mat.clone().symmetric_eigenvalues();
        (ev.min(), ev.max())
    }
}

/// Solver for `CΩ + ΩC = R` with a fixed SPD coefficient, based on one
/// symmetric eigendecomposition `C = QΛQᵀ`.
#[derive(Debug, Clone)]
pub struct LyapunovSolver {
    q: Matrix,
    lambda: Vector,
    coeff: Matrix,
}

impl LyapunovSolver {
    /// Builds the solver; `c` is symmetrized first.
    pub fn new(c: &Matrix) -> Result<Self> {
        require_square(c, "Lyapunov coefficient")?;
        if !is_symmetric(c, 1e-8) {
            return Err(Error::Invariant(
                "Lyapunov coefficient is not symmetric".into(),
            ));
        }
        let coeff = sym_part(c);
        let eig = coeff.clone().symmetric_eigen();
        let lmax = eig.eigenvalues.max();
        let lmin = eig.eigenvalues.min();
        let floor = f64::EPSILON * lmax.abs() * coeff.nrows() as f64;
        if !(lmin > floor) {
            return Err(Error::Definiteness(format!(
                "Lyapunov coefficient has eigenvalue {lmin:.3e} (largest {lmax:.3e})"
            )));
        }
        Ok(Self {
            q: eig.eigenvectors,
            lambda: eig.eigenvalues,
            coeff,
        })
    }

    pub fn coefficient(&self) -> &Matrix {
        &self.coeff
    }

    pub fn dim(&self) -> usize {
        self.coeff.nrows()
    }

    /// Solves `CΩ + ΩC = R`.
    pub fn solve(&self, r: &Matrix) -> Matrix {
        let mut t = self.q.transpose() * r * &self.q;
        let m = self.lambda.len();
        for j in 0..m {
            for i in 0..m {
                t[(i, j)] /= self.lambda[i] + self.lambda[j];
            }
        }
        &self.q * t * self.q.transpose()
    }

    /// Solves with a skew right-hand side and returns an exactly skew Ω.
    pub fn solve_skew(&self, r: &Matrix) -> Matrix {
        skew_part(&self.solve(r))
    }
}

/// Solves `CΩ + ΩC = R`. When `R` is skew the output is skew-projected.
pub fn solve_lyapunov_spd(c: &SpdMatrix, r: &Matrix) -> Result<Matrix> {
    if r.shape() != c.matrix().shape() {
        return Err(Error::Dimension(format!(
            "right-hand side is {}x{}, coefficient is {}x{}",
            r.nrows(),
            r.ncols(),
            c.dim(),
            c.dim()
        )));
    }
    let solver = LyapunovSolver::new(c.matrix())?;
    if is_skew(r, 1e-12) {
        Ok(solver.solve_skew(r))
    } else {
        Ok(solver.solve(r))
    }
}

/// `‖CΩ + ΩC − R‖_F`.
pub fn lyapunov_residual(c: &Matrix, omega: &Matrix, r: &Matrix) -> f64 {
    (c * omega + omega * c - r).norm()
}

/// Inverse square root of a symmetric positive definite matrix.
pub(crate) fn inv_sqrt_spd(a: &Matrix) -> Result<Matrix> {
    let eig = sym_part(a).symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::Definiteness(
            "inverse square root of a non-SPD matrix".into(),
        ));
    }
    let d = eig.eigenvalues.map(|l| 1.0 / l.sqrt());
    Ok(&eig.eigenvectors * Matrix::from_diagonal(&d) * eig.eigenvectors.transpose())
}

/// 2-norm condition number from the singular values.
pub fn condition_number(a: &Matrix) -> f64 {
    let sv = a.clone().singular_values();
    let smin = sv.min();
    if smin == 0.0 {
        f64::INFINITY
    } else {
        sv.max() / smin
    }
}

/// `max(σ₁/σ_r, σ₁², σ_r⁻²)` over the singular values of `a`, the spread
/// the canonical-like metric inherits from a point.
pub fn metric_conditioning(a: &Matrix) -> f64 {
    let sv = a.clone().singular_values();
    let (smin, smax) = (sv.min(), sv.max());
    if smin == 0.0 {
        f64::INFINITY
    } else {
        (smax / smin).max(smax * smax).max(1.0 / (smin * smin))
    }
}
