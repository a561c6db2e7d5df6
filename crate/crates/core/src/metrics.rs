//! Tractable metrics `g_X(Z₁, Z₂) = ⟨Z₁, M_X Z₂⟩`.
//!
//! Three families are provided:
//!
//! * canonical-like, `M_X = (1/ρ)JXXᵀJᵀ + Π_X^⊥` with inverse
//!   `ρXXᵀ + P_X P_Xᵀ`;
//! * Euclidean, `M_X = I`;
//! * weighted Euclidean, `M_X = M` for a fixed SPD `M`.
//!
//! For every metric the normal space at `X` is `{M_X⁻¹JXΩ : Ω skew}`, and
//! the orthogonal projection is `Y − M_X⁻¹JXΩ` where Ω solves
//! `LΩ + ΩL = 2 skew(XᵀJᵀY)` with `L = XᵀJᵀM_X⁻¹JX`. For the
//! canonical-like metric `L = ρI` and everything is closed form.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{skew_part, sym_part, LyapunovSolver, Matrix, SpdMatrix};
use crate::manifold::{j_left, SymplecticPoint, TangentVector, TANGENT_TOL};

/// A Riemannian metric on the manifold.
#[derive(Debug, Clone)]
pub enum Metric {
    CanonicalLike { rho: f64 },
    Euclidean,
    Weighted(Arc<SpdMatrix>),
}

impl Metric {
    pub fn canonical(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::Config(format!(
                "canonical-like metric needs rho > 0, got {rho}"
            )));
        }
        Ok(Metric::CanonicalLike { rho })
    }

    pub fn euclidean() -> Self {
        Metric::Euclidean
    }

    pub fn weighted(m: SpdMatrix) -> Self {
        Metric::Weighted(Arc::new(m))
    }

    /// Short scheme label: `c`, `e` or `M`.
    pub fn label(&self) -> &'static str {
        match self {
            Metric::CanonicalLike { .. } => "c",
            Metric::Euclidean => "e",
            Metric::Weighted(_) => "M",
        }
    }

    pub fn is_canonical(&self) -> bool {
        matches!(self, Metric::CanonicalLike { .. })
    }

    /// Evaluates point-dependent quantities once.
    pub fn at<'a>(&'a self, point: &'a SymplecticPoint) -> Result<MetricAt<'a>> {
        if let Metric::Weighted(m) = self {
            if m.dim() != point.matrix().nrows() {
                return Err(Error::Dimension(format!(
                    "weight matrix is {}x{}, point has {} rows",
                    m.dim(),
                    m.dim(),
                    point.matrix().nrows()
                )));
            }
        }
        let minv_jx = match self {
            Metric::CanonicalLike { rho } => j_right(point.matrix()) * *rho,
            Metric::Euclidean => point.jx().clone(),
            Metric::Weighted(m) => m.solve(point.jx()),
        };
        let lyap = match self {
            Metric::CanonicalLike { .. } => None,
            _ => {
                let l = point.jx().transpose() * &minv_jx;
                Some(LyapunovSolver::new(&sym_part(&l))?)
            }
        };
        Ok(MetricAt {
            metric: self,
            point,
            minv_jx,
            lyap,
        })
    }
}

fn j_right(a: &Matrix) -> Matrix {
    crate::manifold::j_right(a)
}

/// A metric evaluated at a point, with cached `M⁻¹JX` and the Lyapunov
/// eigendecomposition.
#[derive(Debug, Clone)]
pub struct MetricAt<'a> {
    metric: &'a Metric,
    point: &'a SymplecticPoint,
    minv_jx: Matrix,
    lyap: Option<LyapunovSolver>,
}

impl<'a> MetricAt<'a> {
    pub fn metric(&self) -> &'a Metric {
        self.metric
    }

    pub fn point(&self) -> &'a SymplecticPoint {
        self.point
    }

    /// `M_X⁻¹JX`.
    pub fn minv_jx(&self) -> &Matrix {
        &self.minv_jx
    }

    /// `L = XᵀJᵀM_X⁻¹JX`.
    pub fn lyapunov_coefficient(&self) -> Matrix {
        match (&self.lyap, self.metric) {
            (Some(l), _) => l.coefficient().clone(),
            (None, Metric::CanonicalLike { rho }) => {
                let m = self.point.matrix().ncols();
                Matrix::identity(m, m) * *rho
            }
            _ => unreachable!("non-canonical metrics always carry a solver"),
        }
    }

    /// Solves `LΩ + ΩL = R` for skew `R`.
    pub fn lyapunov_solve(&self, r: &Matrix) -> Matrix {
        match (&self.lyap, self.metric) {
            (Some(l), _) => l.solve_skew(r),
            (None, Metric::CanonicalLike { rho }) => skew_part(r) * (0.5 / rho),
            _ => unreachable!("non-canonical metrics always carry a solver"),
        }
    }

    /// `Ω_{X,Y}` solving `LΩ + ΩL = 2 skew(XᵀJᵀY)`.
    pub fn omega(&self, y: &Matrix) -> Matrix {
        let r = skew_part(&self.point.xt_jt(y)) * 2.0;
        self.lyapunov_solve(&r)
    }

    /// `g(Z₁, Z₂)`.
    pub fn inner(&self, z1: &Matrix, z2: &Matrix) -> f64 {
        match self.metric {
            Metric::CanonicalLike { rho } => {
                let a = self.point.xt_jt(z1);
                let b = self.point.xt_jt(z2);
                a.dot(&b) / rho + z1.dot(&self.point.apply_pi_perp(z2))
            }
            Metric::Euclidean => z1.dot(z2),
            Metric::Weighted(m) => z1.dot(&m.apply(z2)),
        }
    }

    /// Validates tangency of both arguments before evaluating.
    pub fn checked_inner(&self, z1: &Matrix, z2: &Matrix) -> Result<f64> {
        for z in [z1, z2] {
            let res = self.point.tangency_residual(z);
            if res > TANGENT_TOL * (1.0 + z.norm()) {
                return Err(Error::Invariant(format!(
                    "inner: argument not tangent ({res:.3e})"
                )));
            }
        }
        Ok(self.inner(z1, z2))
    }

    pub fn norm(&self, z: &Matrix) -> f64 {
        self.inner(z, z).max(0.0).sqrt()
    }

    /// `M_X Y`.
    pub fn apply_m(&self, y: &Matrix) -> Matrix {
        match self.metric {
            Metric::CanonicalLike { rho } => {
                self.point.jx() * self.point.xt_jt(y) / *rho + self.point.apply_pi_perp(y)
            }
            Metric::Euclidean => y.clone(),
            Metric::Weighted(m) => m.apply(y),
        }
    }

    /// `M_X⁻¹ Y`.
    pub fn minv_apply(&self, y: &Matrix) -> Matrix {
        match self.metric {
            Metric::CanonicalLike { rho } => {
                let x = self.point.matrix();
                x * (x.transpose() * y) * *rho + self.point.apply_ppt(y)
            }
            Metric::Euclidean => y.clone(),
            Metric::Weighted(m) => m.solve(y),
        }
    }

    /// Orthogonal projection onto the tangent space.
    pub fn project(&self, y: &Matrix) -> TangentVector {
        TangentVector::from_projection(self.project_matrix(y))
    }

    pub(crate) fn project_matrix(&self, y: &Matrix) -> Matrix {
        match self.metric {
            Metric::CanonicalLike { .. } => {
                let s = skew_part(&self.point.xt_jt(y));
                y - self.point.matrix() * j_left(&s)
            }
            _ => {
                // One refinement step; L has condition number near κ(X)².
                let p = y - &self.minv_jx * self.omega(y);
                &p - &self.minv_jx * self.omega(&p)
            }
        }
    }

    /// Riemannian gradient from the ambient gradient.
    pub fn gradient(&self, egrad: &Matrix) -> TangentVector {
        let g = match self.metric {
            Metric::CanonicalLike { rho } => {
                let x = self.point.matrix();
                let w = x.transpose() * egrad;
                // ρ X J sym(Jᵀ XᵀG)
                let s = sym_part(&crate::manifold::jt_left(&w));
                x * j_left(&s) * *rho + self.point.apply_ppt(egrad)
            }
            _ => self.project_matrix(&self.minv_apply(egrad)),
        };
        TangentVector::from_projection(g)
    }
}

/// `g_X(Z₁, Z₂)`.
pub fn inner(metric: &Metric, point: &SymplecticPoint, z1: &Matrix, z2: &Matrix) -> Result<f64> {
    metric.at(point)?.checked_inner(z1, z2)
}

/// `‖Z‖_X`.
pub fn norm(metric: &Metric, point: &SymplecticPoint, z: &Matrix) -> Result<f64> {
    Ok(metric.at(point)?.norm(z))
}

/// `M_X⁻¹ Y`.
pub fn minv_apply(metric: &Metric, point: &SymplecticPoint, y: &Matrix) -> Result<Matrix> {
    Ok(metric.at(point)?.minv_apply(y))
}

/// Orthogonal projection of an ambient matrix onto the tangent space.
pub fn project_tangent(
    metric: &Metric,
    point: &SymplecticPoint,
    y: &Matrix,
) -> Result<TangentVector> {
    Ok(metric.at(point)?.project(y))
}

/// Riemannian gradient of `cost` at `point`.
pub fn riemannian_gradient(
    metric: &Metric,
    point: &SymplecticPoint,
    cost: &dyn crate::problems::CostFunction,
) -> Result<TangentVector> {
    let egrad = cost.gradient(point.matrix());
    Ok(metric.at(point)?.gradient(&egrad))
}
