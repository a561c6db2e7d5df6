//! Riemannian Hessians.
//!
//! * Canonical-like metric: explicit matrix formula built only from
//!   products with `X`, `JX`, `P_X` and `P_Xᵀ`. The orthogonal-complement
//!   frame never appears; every `JX_⊥X_⊥ᵀJᵀ` is replaced by `P_X P_Xᵀ`.
//! * Weighted Euclidean metric (and `M = I`):
//!   `M⁻¹(∇²f̄[Z] − JZΩ − JXΘ)` with two coupled Lyapunov solves sharing
//!   one eigendecomposition.
//!
//! [`oracle`] holds the directional-derivative lemmas in closed form and a
//! finite-difference assembly of the general connection-based formula,
//! used to validate both paths.

use crate::error::{Error, Result};
use crate::linalg::{skew_part, sym_part, LyapunovSolver, Matrix};
use crate::manifold::{j_left, j_right, jt_left, SymplecticPoint, TangentVector};
use crate::metrics::{Metric, MetricAt};
use crate::problems::CostFunction;

struct CanonicalCache {
    rho: f64,
    /// `P_Xᵀ∇f̄`
    pt_g: Matrix,
    /// `Xᵀ∇f̄`
    xt_g: Matrix,
    /// `J_{2k} sym(J_{2k}ᵀ Xᵀ∇f̄)`
    j_sym_jt_w: Matrix,
    /// `skew(J_{2k}ᵀ Xᵀ∇f̄)`
    skew_jt_w: Matrix,
}

/// Hessian of a cost at a fixed point under a fixed metric.
pub struct HessianOperator<'a> {
    at: MetricAt<'a>,
    cost: &'a dyn CostFunction,
    egrad: Matrix,
    minv_egrad: Matrix,
    grad: Matrix,
    omega: Matrix,
    canon: Option<CanonicalCache>,
}

impl<'a> HessianOperator<'a> {
    pub fn new(
        metric: &'a Metric,
        point: &'a SymplecticPoint,
        cost: &'a dyn CostFunction,
    ) -> Result<Self> {
        let at = metric.at(point)?;
        let egrad = cost.gradient(point.matrix());
        Ok(Self::with_gradient(at, cost, egrad))
    }

    /// Reuses an already evaluated metric and ambient gradient.
    pub fn with_gradient(at: MetricAt<'a>, cost: &'a dyn CostFunction, egrad: Matrix) -> Self {
        let minv_egrad = at.minv_apply(&egrad);
        let grad = at.gradient(&egrad).into_matrix();
        let omega = at.omega(&minv_egrad);
        let canon = match at.metric() {
            Metric::CanonicalLike { rho } => {
                let point = at.point();
                let xt_g = point.matrix().transpose() * &egrad;
                let jt_w = jt_left(&xt_g);
                Some(CanonicalCache {
                    rho: *rho,
                    pt_g: point.apply_pt(&egrad),
                    j_sym_jt_w: j_left(&sym_part(&jt_w)),
                    skew_jt_w: skew_part(&jt_w),
                    xt_g,
                })
            }
            _ => None,
        };
        Self {
            at,
            cost,
            egrad,
            minv_egrad,
            grad,
            omega,
            canon,
        }
    }

    pub fn metric_at(&self) -> &MetricAt<'a> {
        &self.at
    }

    pub fn point(&self) -> &'a SymplecticPoint {
        self.at.point()
    }

    pub fn cost(&self) -> &'a dyn CostFunction {
        self.cost
    }

    /// Ambient gradient `∇f̄(X)`.
    pub fn egrad(&self) -> &Matrix {
        &self.egrad
    }

    /// `M_X⁻¹∇f̄(X)`.
    pub fn minv_egrad(&self) -> &Matrix {
        &self.minv_egrad
    }

    /// Riemannian gradient.
    pub fn gradient(&self) -> &Matrix {
        &self.grad
    }

    /// `Ω_{X, M⁻¹∇f̄}`.
    pub fn omega(&self) -> &Matrix {
        &self.omega
    }

    /// Applies the Hessian of the operator's metric.
    pub fn apply(&self, z: &Matrix) -> Matrix {
        match self.canon {
            Some(ref c) => self.canonical_impl(c, z),
            None => self.weighted_impl(z),
        }
    }

    pub fn apply_tangent(&self, z: &TangentVector) -> TangentVector {
        TangentVector::from_projection(self.apply(z.matrix()))
    }

    /// Canonical-like Hessian; errors for other metrics.
    pub fn hess_canonical(&self, z: &Matrix) -> Result<Matrix> {
        match self.canon {
            Some(ref c) => Ok(self.canonical_impl(c, z)),
            None => Err(Error::WrongMetric(
                "hess_canonical needs the canonical-like metric".into(),
            )),
        }
    }

    /// Weighted Euclidean (or Euclidean) Hessian; errors for the
    /// canonical-like metric.
    pub fn hess_weighted(&self, z: &Matrix) -> Result<Matrix> {
        match self.canon {
            Some(_) => Err(Error::WrongMetric(
                "hess_weighted needs a Euclidean-type metric".into(),
            )),
            None => Ok(self.weighted_impl(z)),
        }
    }

    /// `Hess f(X)[Z, U] = g(U, Hess f(X)[Z])`. For Euclidean-type metrics
    /// this is `tr(Uᵀ(∇²f̄[Z] − JZΩ))`, the normal term dropping out.
    pub fn quadratic_form(&self, z: &Matrix, u: &Matrix) -> f64 {
        match self.canon {
            Some(_) => self.at.inner(u, &self.apply(z)),
            None => {
                let x = self.point().matrix();
                let t = self.cost.hessian_apply(x, z) - j_left(z) * &self.omega;
                u.dot(&t)
            }
        }
    }

    /// `Ψ(Y) = M⁻¹∇²f̄[Y] − M⁻¹JYΩ`.
    pub fn psi(&self, y: &Matrix) -> Matrix {
        self.at.minv_apply(&self.psi_unweighted(y))
    }

    /// `M·Ψ(Y) = ∇²f̄[Y] − JYΩ`.
    pub fn psi_unweighted(&self, y: &Matrix) -> Matrix {
        let x = self.point().matrix();
        self.cost.hessian_apply(x, y) - j_left(y) * &self.omega
    }

    fn weighted_impl(&self, z: &Matrix) -> Matrix {
        let w = self.psi(z);
        let theta = self.at.omega(&w);
        w - self.at.minv_jx() * theta
    }

    fn canonical_impl(&self, c: &CanonicalCache, z: &Matrix) -> Matrix {
        let point = self.point();
        let x = point.matrix();
        let jx = point.jx();
        let g = &self.egrad;
        let rho = c.rho;
        let h = self.cost.hessian_apply(x, z);
        let zt_g = z.transpose() * g;

        // Terms inside the canonical projection.
        let mut inner = self.at.minv_apply(&h);
        inner -= z * j_left(&c.skew_jt_w) * rho;
        // 2 sym(Â)∇f̄ with Â = ρXZᵀ − 2 skew(XJZᵀ)JᵀP_Xᵀ.
        let v = jt_left(&c.pt_g);
        inner += x * &zt_g * rho;
        inner -= x * j_left(&(z.transpose() * &v)) + z * j_left(&(x.transpose() * &v));
        inner += z * &c.xt_g * rho;
        let s_g = x * j_left(&zt_g) + z * j_left(&c.xt_g);
        inner += point.apply_p(&j_left(&s_g));
        // ρ X sym(XᵀJZ ∇f̄ᵀXJ − Zᵀ∇f̄).
        let xt_jz = -(jx.transpose() * z);
        let term = xt_jz * j_right(&c.xt_g.transpose()) - &zt_g;
        inner += x * sym_part(&term) * rho;
        let first = self.at.project(&inner).into_matrix();

        // Terms under the oblique projector.
        let zt_jx = z.transpose() * jx;
        let mut outer = point.apply_pt(&j_left(
            &(z * sym_part(&j_right(&c.xt_g.transpose())) + &c.pt_g * &zt_jx / rho),
        ));
        outer -= jx * j_left(&sym_part(&(z.transpose() * &c.pt_g)));
        let a = j_left(&(-(jx.transpose() * &c.pt_g))) + &c.j_sym_jt_w * rho;
        outer -= z * skew_part(&a);
        outer -= &c.pt_g * skew_part(&(point.xtx_inv() * (x.transpose() * z)));
        first + point.apply_p(&outer)
    }
}

/// Canonical-like Hessian in the square case `k = n`, where `P_X = 0`.
pub fn hess_canonical_square(
    rho: f64,
    point: &SymplecticPoint,
    cost: &dyn CostFunction,
    z: &Matrix,
) -> Result<Matrix> {
    let dims = point.dims();
    if dims.k != dims.n {
        return Err(Error::Dimension(
            "the square-case formula needs k = n".into(),
        ));
    }
    let metric = Metric::canonical(rho)?;
    let at = metric.at(point)?;
    let x = point.matrix();
    let g = cost.gradient(x);
    let h = cost.hessian_apply(x, z);
    let w = x.transpose() * &g;
    let mut t = x * (x.transpose() * &h) * rho;
    t -= z * j_left(&skew_part(&jt_left(&w))) * rho;
    t += (x * (z.transpose() * &g) + z * &w) * rho;
    let xt_jz = -(point.jx().transpose() * z);
    t += x * sym_part(&(xt_jz * j_right(&w.transpose()) - z.transpose() * &g)) * rho;
    Ok(at.project(&t).into_matrix())
}

/// Euclidean-metric Hessian through its own pair of Lyapunov equations
/// with coefficient `XᵀX`:
/// `∇²f̄[Z] − JZΩ − JXΘ`.
pub fn hess_euclidean_direct(
    point: &SymplecticPoint,
    cost: &dyn CostFunction,
    z: &Matrix,
) -> Result<Matrix> {
    let x = point.matrix();
    let solver = LyapunovSolver::new(point.xtx())?;
    let g = cost.gradient(x);
    let h = cost.hessian_apply(x, z);
    let jt = |a: &Matrix| jt_left(a);
    let xt_jt_g = x.transpose() * jt(&g);
    let omega = solver.solve_skew(&(skew_part(&xt_jt_g) * 2.0));
    let rhs = skew_part(&(x.transpose() * jt(&h) - x.transpose() * z * &omega)) * 2.0;
    let theta = solver.solve_skew(&rhs);
    Ok(h - j_left(z) * &omega - j_left(x) * theta)
}

/// Closed-form directional derivatives and finite-difference assemblies.
/// Diagnostics only: dense `2n×2n` matrices are formed throughout.
pub mod oracle {
    use super::*;
    use crate::linalg::Vector;
    use crate::manifold::poisson;
    use crate::retraction::sr_raw;

    /// Dense `M_X` for an arbitrary full-rank ambient `X`.
    pub fn metric_matrix(metric: &Metric, x: &Matrix) -> Matrix {
        let m = x.nrows();
        match metric {
            Metric::CanonicalLike { rho } => {
                let jx = j_left(x);
                let xtx_inv = (x.transpose() * x).try_inverse().expect("full-rank X");
                &jx * jx.transpose() / *rho + Matrix::identity(m, m) - x * xtx_inv * x.transpose()
            }
            Metric::Euclidean => Matrix::identity(m, m),
            Metric::Weighted(w) => w.matrix().clone(),
        }
    }

    fn kron_lyapunov(l: &Matrix, r: &Matrix) -> Matrix {
        let m = l.nrows();
        let id = Matrix::identity(m, m);
        let big = id.kronecker(l) + l.transpose().kronecker(&id);
        let x = big
            .lu()
            .solve(&Vector::from_column_slice(r.as_slice()))
            .expect("nonsingular");
        Matrix::from_column_slice(m, m, x.as_slice())
    }

    /// Orthogonal projection with a dense metric matrix and a
    /// Kronecker-solved Lyapunov equation.
    pub fn dense_projection(mmat: &Matrix, x: &Matrix, y: &Matrix) -> Matrix {
        let minv = mmat.clone().try_inverse().expect("spd metric");
        let jx = j_left(x);
        let minv_jx = &minv * &jx;
        let l = jx.transpose() * &minv_jx;
        let r = skew_part(&(jx.transpose() * y)) * 2.0;
        let om = kron_lyapunov(&sym_part(&l), &r);
        y - minv_jx * om
    }

    /// Riemannian gradient from dense building blocks at ambient `X`.
    pub fn dense_gradient(metric: &Metric, cost: &dyn CostFunction, x: &Matrix) -> Matrix {
        let mm = metric_matrix(metric, x);
        let minv = mm.clone().try_inverse().expect("spd metric");
        dense_projection(&mm, x, &(minv * cost.gradient(x)))
    }

    fn fd_step(x: &Matrix, z: &Matrix) -> f64 {
        f64::EPSILON.powf(0.2) * x.norm() / z.norm().max(f64::MIN_POSITIVE)
    }

    /// Central difference with one Richardson step, `(4D(t/2) − D(t))/3`.
    fn central(f: impl Fn(f64) -> Matrix, t: f64) -> Matrix {
        let d = |h: f64| (f(h) - f(-h)) / (2.0 * h);
        (d(0.5 * t) * 4.0 - d(t)) / 3.0
    }

    fn curve(x: &SymplecticPoint, z: &Matrix, t: f64) -> Matrix {
        sr_raw(x, &(z * t)).expect("SR curve defined near 0")
    }

    /// `D_V M_X` by central differences along the ambient line `X + tV`.
    pub fn fd_metric_derivative(metric: &Metric, x: &Matrix, v: &Matrix) -> Matrix {
        central(|t| metric_matrix(metric, &(x + v * t)), fd_step(x, v))
    }

    /// `𝒳(Z,U)` with entries `⟨Z, D_{E_ij}M(U)⟩` over the ambient basis.
    pub fn fd_index_raising(metric: &Metric, x: &Matrix, z: &Matrix, u: &Matrix) -> Matrix {
        let (r, c) = x.shape();
        let mut out = Matrix::zeros(r, c);
        if !metric.is_canonical() {
            return out;
        }
        for j in 0..c {
            for i in 0..r {
                let mut e = Matrix::zeros(r, c);
                e[(i, j)] = 1.0;
                let dm = fd_metric_derivative(metric, x, &e);
                out[(i, j)] = z.dot(&(dm * u));
            }
        }
        out
    }

    /// Finite-difference assembly of the connection-based Hessian
    /// `P(D_Z grad + M⁻¹K(Z, grad))`.
    pub fn fd_hessian(
        metric: &Metric,
        cost: &dyn CostFunction,
        point: &SymplecticPoint,
        z: &Matrix,
    ) -> Matrix {
        let x = point.matrix();
        let dgrad = central(
            |t| dense_gradient(metric, cost, &curve(point, z, t)),
            fd_step(x, z),
        );
        let grad = dense_gradient(metric, cost, x);
        let mm = metric_matrix(metric, x);
        let minv = mm.clone().try_inverse().expect("spd metric");
        let kmat = (fd_metric_derivative(metric, x, z) * &grad
            + fd_metric_derivative(metric, x, &grad) * z
            - fd_index_raising(metric, x, z, &grad))
            * 0.5;
        dense_projection(&mm, x, &(dgrad + minv * kmat))
    }

    /// `D_Z P_{X,c}(Y) = −XJ skew(ZᵀJᵀY) − ZJ skew(XᵀJᵀY)`.
    pub fn dproj_canonical(x: &Matrix, z: &Matrix, y: &Matrix) -> Matrix {
        let jy = jt_left(y);
        -(x * j_left(&skew_part(&(z.transpose() * &jy))))
            - z * j_left(&skew_part(&(x.transpose() * &jy)))
    }

    /// Dense `D_Z M_{X,c,ρ} = 2 sym((1/ρ)JXZᵀJᵀ − Π^⊥Z(XᵀX)⁻¹Xᵀ)`.
    pub fn dmetric_canonical(rho: f64, x: &Matrix, z: &Matrix) -> Matrix {
        let m = x.nrows();
        let j = poisson(m / 2);
        let xtx_inv = (x.transpose() * x).try_inverse().expect("full rank");
        let pi = Matrix::identity(m, m) - x * &xtx_inv * x.transpose();
        let n = &j * x * z.transpose() * j.transpose() / rho - pi * z * xtx_inv * x.transpose();
        &n + n.transpose()
    }

    /// `𝒳(Z,U) = (2/ρ)Jᵀ sym(UZᵀ) JX − 2Π^⊥ sym(UZᵀ) X(XᵀX)⁻¹`.
    pub fn index_raising_canonical(rho: f64, x: &Matrix, z: &Matrix, u: &Matrix) -> Matrix {
        let xtx_inv = (x.transpose() * x).try_inverse().expect("full rank");
        let symuz = |v: &Matrix| (u * (z.transpose() * v) + z * (u.transpose() * v)) * 0.5;
        let jx = j_left(x);
        let pi = |v: &Matrix| v - x * (&xtx_inv * (x.transpose() * v));
        jt_left(&symuz(&jx)) * (2.0 / rho) - pi(&symuz(&(x * &xtx_inv))) * 2.0
    }

    /// Closed form of `K(Z,U)` for tangent `Z, U`.
    pub fn k_canonical(rho: f64, x: &Matrix, z: &Matrix, u: &Matrix) -> Matrix {
        let xtx_inv = (x.transpose() * x).try_inverse().expect("full rank");
        let jx = j_left(x);
        let pi = |v: &Matrix| v - x * (&xtx_inv * (x.transpose() * v));
        let s = skew_part(&(z.transpose() * jt_left(u)));
        let sym_zu_jx = (z * (u.transpose() * &jx) + u * (z.transpose() * &jx)) * 0.5;
        let first = j_left(&(x * s + sym_zu_jx * 2.0)) / rho;
        first
            - pi(u) * skew_part(&(&xtx_inv * (x.transpose() * z)))
            - pi(z) * skew_part(&(&xtx_inv * (x.transpose() * u)))
            - x * &xtx_inv * sym_part(&(z.transpose() * pi(u)))
    }

    /// `D_Z P_{X,M}(Y) = −M⁻¹J(ZΩ + XΞ)` with Ξ from its Lyapunov equation.
    pub fn dproj_weighted(
        metric: &Metric,
        point: &SymplecticPoint,
        z: &Matrix,
        y: &Matrix,
    ) -> Result<Matrix> {
        if metric.is_canonical() {
            return Err(Error::WrongMetric("weighted projection derivative".into()));
        }
        let at = metric.at(point)?;
        let om = at.omega(y);
        let x = point.matrix();
        let s = sym_part(&(point.jx().transpose() * at.minv_apply(&j_left(z))));
        let rhs = skew_part(&(z.transpose() * jt_left(y) + om.transpose() * s * 2.0)) * 2.0;
        let xi = at.lyapunov_solve(&rhs);
        Ok(-at.minv_apply(&j_left(&(z * om + x * xi))))
    }

    /// Connection-based Hessian assembled from the closed-form lemmas:
    /// `P_c(M⁻¹∇²f̄[Z] + D_ZP(M⁻¹∇f̄) − M⁻¹D_ZM(M⁻¹∇f̄) + M⁻¹K(Z, grad))`.
    pub fn lemma_hessian_canonical(
        rho: f64,
        cost: &dyn CostFunction,
        point: &SymplecticPoint,
        z: &Matrix,
    ) -> Result<Matrix> {
        let metric = Metric::canonical(rho)?;
        let at = metric.at(point)?;
        let x = point.matrix();
        let g = cost.gradient(x);
        let minv_g = at.minv_apply(&g);
        let grad = at.gradient(&g).into_matrix();
        let h = cost.hessian_apply(x, z);
        let t = at.minv_apply(&h) + dproj_canonical(x, z, &minv_g)
            - at.minv_apply(&(dmetric_canonical(rho, x, z) * &minv_g))
            + at.minv_apply(&k_canonical(rho, x, z, &grad));
        Ok(at.project(&t).into_matrix())
    }

    /// A closed-form result next to its finite-difference counterpart.
    #[derive(Debug, Clone)]
    pub struct LemmaCheck {
        pub name: &'static str,
        pub closed_form: Matrix,
        pub finite_difference: Matrix,
    }

    impl LemmaCheck {
        pub fn relative_error(&self) -> f64 {
            (&self.closed_form - &self.finite_difference).norm()
                / self.closed_form.norm().max(1e-300)
        }
    }

    /// Checks every directional-derivative lemma at `(X, Z)` with auxiliary
    /// ambient `Y`, tangent `U`, canonical parameter `rho` and weighted metric.
    pub fn lemma_checks(
        point: &SymplecticPoint,
        z: &Matrix,
        u: &Matrix,
        y: &Matrix,
        rho: f64,
        weighted: &Metric,
    ) -> Result<Vec<LemmaCheck>> {
        let x = point.matrix();
        let t = fd_step(x, z);
        let canon = Metric::canonical(rho)?;
        let eucl = Metric::euclidean();
        let mut out = Vec::new();

        let proj_c = |xx: &Matrix| {
            let s = skew_part(&(j_left(xx).transpose() * y));
            y - xx * j_left(&s)
        };
        out.push(LemmaCheck {
            name: "canonical projection derivative",
            closed_form: dproj_canonical(x, z, y),
            finite_difference: central(|s| proj_c(&curve(point, z, s)), t),
        });

        out.push(LemmaCheck {
            name: "canonical metric derivative",
            closed_form: dmetric_canonical(rho, x, z),
            finite_difference: central(|s| metric_matrix(&canon, &curve(point, z, s)), t),
        });

        let pe = eucl.at(point)?;
        out.push(LemmaCheck {
            name: "index raising",
            closed_form: pe
                .project(&index_raising_canonical(rho, x, z, u))
                .into_matrix(),
            finite_difference: pe.project(&fd_index_raising(&canon, x, z, u)).into_matrix(),
        });

        let kfd = (fd_metric_derivative(&canon, x, z) * u + fd_metric_derivative(&canon, x, u) * z
            - fd_index_raising(&canon, x, z, u))
            * 0.5;
        out.push(LemmaCheck {
            name: "K mapping",
            closed_form: pe.project(&k_canonical(rho, x, z, u)).into_matrix(),
            finite_difference: pe.project(&kfd).into_matrix(),
        });

        let wm = metric_matrix(weighted, x);
        out.push(LemmaCheck {
            name: "weighted projection derivative",
            closed_form: dproj_weighted(weighted, point, z, y)?,
            finite_difference: central(|s| dense_projection(&wm, &curve(point, z, s), y), t),
        });
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::oracle::*;
    use super::*;
    use crate::linalg::SpdMatrix;
    use crate::manifold::{random_point, ManifoldDims};
    use crate::problems::{least_squares_instance, quartic_instance, trace_instance};
    use crate::random::{gaussian_matrix, seeded};

    fn spd(m: usize, seed: u64) -> Metric {
        let b = gaussian_matrix(&mut seeded(seed), m, m);
        Metric::weighted(SpdMatrix::new(&b * b.transpose() + Matrix::identity(m, m)).unwrap())
    }

    fn rel(a: &Matrix, b: &Matrix) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn lemmas_match_finite_differences() {
        let dims = ManifoldDims::new(4, 2).unwrap();
        let x = random_point(dims, 3).unwrap();
        let e = Metric::euclidean();
        let at = e.at(&x).unwrap();
        let mut rng = seeded(4);
        let z = at.project(&gaussian_matrix(&mut rng, 8, 4)).into_matrix();
        let u = at.project(&gaussian_matrix(&mut rng, 8, 4)).into_matrix();
        let y = gaussian_matrix(&mut rng, 8, 4);
        for c in lemma_checks(&x, &z, &u, &y, 0.8, &spd(8, 5)).unwrap() {
            assert!(
                c.relative_error() <= 1e-5,
                "{}: {:.3e}",
                c.name,
                c.relative_error()
            );
        }
    }

    #[test]
    fn canonical_matches_lemma_assembly_and_fd() {
        let p = least_squares_instance(4, 2, 7).unwrap();
        let x = random_point(p.dims, 8).unwrap();
        for rho in [1.0, 0.4] {
            let metric = Metric::canonical(rho).unwrap();
            let op = HessianOperator::new(&metric, &x, p.cost.as_ref()).unwrap();
            let z = op
                .metric_at()
                .project(&gaussian_matrix(&mut seeded(9), 8, 4))
                .into_matrix();
            let h = op.hess_canonical(&z).unwrap();
            let lemma = lemma_hessian_canonical(rho, p.cost.as_ref(), &x, &z).unwrap();
            assert!(
                rel(&h, &lemma) <= 1e-10,
                "lemma path {:.3e}",
                rel(&h, &lemma)
            );
            let fd = fd_hessian(&metric, p.cost.as_ref(), &x, &z);
            assert!(rel(&h, &fd) <= 1e-5, "fd {:.3e}", rel(&h, &fd));
        }
    }

    #[test]
    fn weighted_matches_fd() {
        let p = trace_instance(4, 2, 1).unwrap();
        let x = random_point(p.dims, 2).unwrap();
        for metric in [Metric::euclidean(), spd(8, 3)] {
            let op = HessianOperator::new(&metric, &x, p.cost.as_ref()).unwrap();
            let z = op
                .metric_at()
                .project(&gaussian_matrix(&mut seeded(5), 8, 4))
                .into_matrix();
            let h = op.hess_weighted(&z).unwrap();
            let fd = fd_hessian(&metric, p.cost.as_ref(), &x, &z);
            assert!(
                rel(&h, &fd) <= 1e-5,
                "{} {:.3e}",
                metric.label(),
                rel(&h, &fd)
            );
        }
    }

    #[test]
    fn euclidean_reduction_and_square_case() {
        let p = least_squares_instance(5, 2, 2).unwrap();
        let x = random_point(p.dims, 6).unwrap();
        let e = Metric::euclidean();
        let op = HessianOperator::new(&e, &x, p.cost.as_ref()).unwrap();
        let z = op
            .metric_at()
            .project(&gaussian_matrix(&mut seeded(1), 10, 4))
            .into_matrix();
        let a = op.apply(&z);
        let b = hess_euclidean_direct(&x, p.cost.as_ref(), &z).unwrap();
        assert!(rel(&a, &b) <= 1e-12);

        let q = quartic_instance(3, 4).unwrap();
        let xs = random_point(q.dims, 5).unwrap();
        let c = Metric::canonical(1.3).unwrap();
        let op = HessianOperator::new(&c, &xs, q.cost.as_ref()).unwrap();
        let z = op
            .metric_at()
            .project(&gaussian_matrix(&mut seeded(2), 6, 6))
            .into_matrix();
        let a = op.apply(&z);
        let b = hess_canonical_square(1.3, &xs, q.cost.as_ref(), &z).unwrap();
        assert!(rel(&a, &b) <= 1e-12, "{:.3e}", rel(&a, &b));
    }

    #[test]
    fn wrong_metric_rejected() {
        let p = trace_instance(3, 1, 1).unwrap();
        let x = random_point(p.dims, 1).unwrap();
        let e = Metric::euclidean();
        let op = HessianOperator::new(&e, &x, p.cost.as_ref()).unwrap();
        assert!(matches!(
            op.hess_canonical(&Matrix::zeros(6, 2)),
            Err(Error::WrongMetric(_))
        ));
        let c = Metric::canonical(1.0).unwrap();
        let op = HessianOperator::new(&c, &x, p.cost.as_ref()).unwrap();
        assert!(matches!(
            op.hess_weighted(&Matrix::zeros(6, 2)),
            Err(Error::WrongMetric(_))
        ));
    }

    #[test]
    fn self_adjoint_and_bilinear_form() {
        let p = least_squares_instance(4, 2, 3).unwrap();
        let x = random_point(p.dims, 4).unwrap();
        let mut rng = seeded(6);
        for metric in [
            Metric::canonical(0.6).unwrap(),
            Metric::euclidean(),
            spd(8, 7),
        ] {
            let op = HessianOperator::new(&metric, &x, p.cost.as_ref()).unwrap();
            let at = op.metric_at();
            let z = at.project(&gaussian_matrix(&mut rng, 8, 4)).into_matrix();
            let u = at.project(&gaussian_matrix(&mut rng, 8, 4)).into_matrix();
            let hz = op.apply(&z);
            let hu = op.apply(&u);
            assert!(x.tangency_residual(&hz) <= 1e-8 * (1.0 + hz.norm()));
            let a = at.inner(&hz, &u);
            let b = at.inner(&z, &hu);
            let scale = at.norm(&z) * at.norm(&u) * (1.0 + op.egrad().norm());
            assert!((a - b).abs() <= 1e-9 * scale, "{} {a} {b}", metric.label());
            let q = op.quadratic_form(&z, &u);
            assert!((q - a).abs() <= 1e-10 * scale, "{} {q} {a}", metric.label());
        }
    }
}
