//! Newton equation `Hess f(X)[Z] = −grad f(X)`.
//!
//! The direct path vectorizes the equivalent saddle-point system
//!
//! ```text
//! [A B; C 0][vec Z; veck Ω] = [g; 0]
//! ```
//!
//! for Euclidean-type metrics. The Krylov path runs MINRES on the Hessian
//! operator itself, using the metric inner product throughout.

use crate::error::{Error, Result};
use crate::hessian::HessianOperator;
use crate::linalg::{Matrix, Vector};
use crate::manifold::TangentVector;
use crate::metrics::Metric;
use crate::vectorize::{duplication_matrix_cached, unvec, unveck, vec, veck_len};

/// How the first block row is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaddleVariant {
    /// `A = I⊗M⁻¹∇²f̄ − Ωᵀ⊗M⁻¹J`, `g = −vec(M⁻¹∇f̄)`.
    Inverse,
    /// First row multiplied by `M`, second by 2, giving a symmetric
    /// system with `C = Bᵀ`.
    MetricFree,
}

/// Dense blocks of the saddle-point system.
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub g: Vector,
    pub variant: SaddleVariant,
}

impl SaddleSystem {
    /// Assembles the blocks at the operator's point. Canonical-like
    /// metrics are rejected.
    pub fn assemble(op: &HessianOperator<'_>, variant: SaddleVariant) -> Result<Self> {
        if op.metric_at().metric().is_canonical() {
            return Err(Error::WrongMetric(
                "no saddle-point system for the canonical-like metric".into(),
            ));
        }
        let point = op.point();
        let (rows, cols) = point.matrix().shape();
        let dim = rows * cols;
        let at = op.metric_at();
        let mut a = Matrix::zeros(dim, dim);
        let mut e = Matrix::zeros(rows, cols);
        for idx in 0..dim {
            let (i, j) = (idx % rows, idx / rows);
            e[(i, j)] = 1.0;
            let col = match variant {
                SaddleVariant::Inverse => op.psi(&e),
                SaddleVariant::MetricFree => op.psi_unweighted(&e),
            };
            e[(i, j)] = 0.0;
            a.column_mut(idx).copy_from_slice(col.as_slice());
        }

        let d = duplication_matrix_cached(cols);
        let nskew = veck_len(cols);
        let jx = point.jx();
        let left = match variant {
            SaddleVariant::Inverse => at.minv_jx().clone(),
            SaddleVariant::MetricFree => jx.clone(),
        };
        // Column l of (I⊗L)D is vec(L·unvec(D_l)).
        let mut b = Matrix::zeros(dim, nskew);
        for l in 0..nskew {
            let om = unvec(&d.column(l).into_owned(), cols, cols)?;
            b.column_mut(l)
                .copy_from_slice((&left * om * -2.0).as_slice());
        }
        let c = match variant {
            SaddleVariant::Inverse => -d.transpose() * kron_identity_left(cols, &jx.transpose()),
            SaddleVariant::MetricFree => b.transpose(),
        };
        let g = match variant {
            SaddleVariant::Inverse => -vec(op.minv_egrad()),
            SaddleVariant::MetricFree => -vec(op.egrad()),
        };
        Ok(Self {
            a,
            b,
            c,
            g,
            variant,
        })
    }

    /// Variant suited to a metric: `MetricFree` for a general weight,
    /// `Inverse` for `M = I`.
    pub fn default_variant(metric: &Metric) -> SaddleVariant {
        match metric {
            Metric::Weighted(_) => SaddleVariant::MetricFree,
            _ => SaddleVariant::Inverse,
        }
    }
}

fn kron_identity_left(p: usize, b: &Matrix) -> Matrix {
    Matrix::identity(p, p).kronecker(b)
}

/// Output of the direct solver.
#[derive(Debug, Clone)]
pub struct DirectSolution {
    pub z: TangentVector,
    /// Multiplier `Ω` of the saddle formulation.
    pub omega: Matrix,
    /// Number of right-hand sides solved with `A`.
    pub a_solves: usize,
    pub report: NewtonSolveReport,
}

/// Solves the Newton equation through the saddle-point system:
/// `y = A⁻¹g`, `ω = (CA⁻¹B)⁻¹Cy`, `z = y − A⁻¹Bω`.
pub fn solve_newton_direct(op: &HessianOperator<'_>) -> Result<DirectSolution> {
    let variant = SaddleSystem::default_variant(op.metric_at().metric());
    solve_newton_direct_with(op, variant)
}

pub fn solve_newton_direct_with(
    op: &HessianOperator<'_>,
    variant: SaddleVariant,
) -> Result<DirectSolution> {
    let sys = SaddleSystem::assemble(op, variant)?;
    let (rows, cols) = op.point().matrix().shape();
    let lu = sys.a.clone().lu();
    let mut a_solves = 0;
    let mut solve = |rhs: &Matrix| -> Result<Matrix> {
        a_solves += rhs.ncols();
        lu.solve(rhs)
            .ok_or_else(|| Error::DirectSolve("A block is singular".into()))
    };
    let y = solve(&Matrix::from_column_slice(sys.g.len(), 1, sys.g.as_slice()))?;
    let ainv_b = solve(&sys.b)?;
    let schur = &sys.c * &ainv_b;
    let omega = schur
        .lu()
        .solve(&(&sys.c * &y))
        .ok_or_else(|| Error::DirectSolve("Schur complement is singular".into()))?;
    let z = &y - ainv_b * &omega;
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::DirectSolve("non-finite solution".into()));
    }
    let z = unvec(&z.column(0).into_owned(), rows, cols)?;
    let omega = unveck(&omega.column(0).into_owned(), cols)?;
    let at = op.metric_at();
    let residual = at.norm(&(op.apply(&z) + op.gradient()));
    let report = NewtonSolveReport {
        method: SolveMethod::Direct,
        iterations: a_solves,
        residual_norm: residual,
        forcing_target: 0.0,
        status: SolveStatus::Converged,
    };
    Ok(DirectSolution {
        z: TangentVector::from_projection(z),
        omega,
        a_solves,
        report,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Direct,
    Krylov,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    /// Inner iteration cap hit; the last iterate is returned.
    CapReached,
    /// The Krylov space was exhausted before the target was met.
    Stagnated,
}

#[derive(Debug, Clone)]
pub struct NewtonSolveReport {
    pub method: SolveMethod,
    pub iterations: usize,
    /// Metric norm of `Hess f[Z] + grad f`.
    pub residual_norm: f64,
    pub forcing_target: f64,
    pub status: SolveStatus,
}

/// Forcing target `min{η, ‖grad‖^μ}·‖grad‖`.
pub fn forcing_target(grad_norm: f64, eta: f64, mu: f64) -> f64 {
    eta.min(grad_norm.powf(mu)) * grad_norm
}

/// MINRES on `Hess f(X)[Z] = −grad f(X)` in the metric inner product.
/// Every operator output is projected back onto the tangent space, and
/// Lanczos vectors are fully reorthogonalized.
pub fn solve_newton_krylov(
    op: &HessianOperator<'_>,
    eta: f64,
    mu: f64,
    max_inner: usize,
) -> (TangentVector, NewtonSolveReport) {
    let at = op.metric_at();
    let ip = |a: &Matrix, b: &Matrix| at.inner(a, b);
    let apply = |v: &Matrix| at.project(&op.apply(v)).into_matrix();
    let b = -op.gradient();
    let shape = b.shape();
    let beta1 = ip(&b, &b).max(0.0).sqrt();
    let target = forcing_target(beta1, eta, mu);
    let mut report = NewtonSolveReport {
        method: SolveMethod::Krylov,
        iterations: 0,
        residual_norm: beta1,
        forcing_target: target,
        status: SolveStatus::Converged,
    };
    let mut x = Matrix::zeros(shape.0, shape.1);
    if beta1 == 0.0 || beta1 <= target {
        return (TangentVector::from_projection(x), report);
    }
    let true_residual = |x: &Matrix| {
        let r = apply(x) + op.gradient();
        ip(&r, &r).max(0.0).sqrt()
    };

    let eps = f64::EPSILON;
    let mut r1 = b.clone();
    let mut r2 = b.clone();
    let mut y = b.clone();
    let mut w = Matrix::zeros(shape.0, shape.1);
    let mut w2 = w.clone();
    let mut oldb = 0.0;
    let mut beta = beta1;
    let mut dbar = 0.0;
    let mut epsln = 0.0;
    let mut phibar = beta1;
    let mut cs = -1.0;
    let mut sn = 0.0;
    let mut status = SolveStatus::CapReached;
    let mut basis: Vec<Matrix> = Vec::new();

    for itn in 1..=max_inner {
        report.iterations = itn;
        let v = &y / beta;
        y = apply(&v);
        if itn >= 2 {
            y -= &r1 * (beta / oldb);
        }
        let alfa = ip(&v, &y);
        y -= &r2 * (alfa / beta);
        basis.push(v.clone());
        for q in &basis {
            let c = ip(q, &y);
            y -= q * c;
        }
        r1 = std::mem::replace(&mut r2, y.clone());
        oldb = beta;
        beta = ip(&r2, &r2).max(0.0).sqrt();

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(eps);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        let w1 = std::mem::replace(&mut w2, w.clone());
        w = (&v - &w1 * oldeps - &w2 * delta) / gamma;
        x += &w * phi;

        if phibar <= target {
            let r = true_residual(&x);
            if r <= target {
                report.residual_norm = r;
                report.status = SolveStatus::Converged;
                return (
                    TangentVector::from_projection(at.project(&x).into_matrix()),
                    report,
                );
            }
        }
        if beta <= eps * beta1 {
            status = SolveStatus::Stagnated;
            break;
        }
    }
    let x = at.project(&x).into_matrix();
    let r = true_residual(&x);
    report.residual_norm = r;
    report.status = if r <= target {
        SolveStatus::Converged
    } else {
        status
    };
    (TangentVector::from_projection(x), report)
}

/// Checks the two equations of the saddle formulation for a pair `(Z, Ω)`:
/// `Ψ(Z) + M⁻¹DF*(Ω) = −M⁻¹∇f̄` and `DF(Z) = 0`. Returns both relative
/// residuals.
pub fn saddle_residuals(op: &HessianOperator<'_>, z: &Matrix, omega: &Matrix) -> (f64, f64) {
    let at = op.metric_at();
    let lhs = op.psi(z) + at.minv_apply(&(op.point().jx() * omega * -2.0));
    let rhs = -op.minv_egrad();
    let first = (&lhs - &rhs).norm() / rhs.norm().max(f64::MIN_POSITIVE);
    let s = -(op.point().jx().transpose() * z);
    let second =
        (&s - s.transpose()).norm() / (op.point().jx().norm() * z.norm()).max(f64::MIN_POSITIVE);
    (first, second)
}
