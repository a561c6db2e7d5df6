//! The symplectic Stiefel manifold `Sp(2k,2n) = {X ∈ R^{2n×2k} : XᵀJX = J}`.
//!
//! `J_{2m} = [0 I_m; −I_m 0]` is never materialized on hot paths; see
//! [`apply_j`] and friends. A [`SymplecticPoint`] caches the small
//! quantities needed by projections and Hessians (`XᵀX`, its inverse,
//! `JX`) and lazily builds the dense oblique projector and the normalized
//! orthogonal-complement frame for diagnostics.

use std::ops::Deref;
use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{inv_sqrt_spd, sym_part, Matrix};
use crate::random::gaussian_matrix;
use crate::sr::sr_decompose;

/// Default feasibility tolerance for constructing a point.
pub const FEAS_TOL: f64 = 1e-8;

/// Problem dimensions `(n, k)` with `1 ≤ k ≤ n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ManifoldDims {
    pub n: usize,
    pub k: usize,
}

impl ManifoldDims {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::Dimension(format!(
                "need 1 <= k <= n, got n={n}, k={k}"
            )));
        }
        Ok(Self { n, k })
    }

    /// `4nk − k(2k−1)`.
    pub fn manifold_dim(&self) -> usize {
        4 * self.n * self.k - self.k * (2 * self.k - 1)
    }

    /// Ambient dimension `4nk`.
    pub fn ambient_dim(&self) -> usize {
        4 * self.n * self.k
    }

    fn of(x: &Matrix) -> Result<Self> {
        if x.nrows() % 2 != 0 || x.ncols() % 2 != 0 {
            return Err(Error::Dimension(format!(
                "expected a 2n x 2k matrix, got {}x{}",
                x.nrows(),
                x.ncols()
            )));
        }
        Self::new(x.nrows() / 2, x.ncols() / 2)
    }
}

/// Dense Poisson matrix `J_{2m}`.
pub fn poisson(m: usize) -> Matrix {
    let mut j = Matrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        j[(i, m + i)] = 1.0;
        j[(m + i, i)] = -1.0;
    }
    j
}

/// `J·A`: bottom block row on top, negated top block row below.
pub fn apply_j(a: &Matrix) -> Result<Matrix> {
    if a.nrows() % 2 != 0 {
        return Err(Error::Dimension(format!(
            "apply_J needs an even row count, got {}",
            a.nrows()
        )));
    }
    Ok(j_left(a))
}

/// `Jᵀ·A`.
pub fn apply_jt(a: &Matrix) -> Result<Matrix> {
    if a.nrows() % 2 != 0 {
        return Err(Error::Dimension(format!(
            "apply_J^T needs an even row count, got {}",
            a.nrows()
        )));
    }
    Ok(jt_left(a))
}

pub(crate) fn j_left(a: &Matrix) -> Matrix {
    let m = a.nrows() / 2;
    let c = a.ncols();
    let mut out = Matrix::zeros(2 * m, c);
    out.rows_mut(0, m).copy_from(&a.rows(m, m));
    out.rows_mut(m, m).copy_from(&(-a.rows(0, m)));
    out
}

pub(crate) fn jt_left(a: &Matrix) -> Matrix {
    let m = a.nrows() / 2;
    let c = a.ncols();
    let mut out = Matrix::zeros(2 * m, c);
    out.rows_mut(0, m).copy_from(&(-a.rows(m, m)));
    out.rows_mut(m, m).copy_from(&a.rows(0, m));
    out
}

/// `A·J`.
pub(crate) fn j_right(a: &Matrix) -> Matrix {
    let m = a.ncols() / 2;
    let r = a.nrows();
    let mut out = Matrix::zeros(r, 2 * m);
    out.columns_mut(0, m).copy_from(&(-a.columns(m, m)));
    out.columns_mut(m, m).copy_from(&a.columns(0, m));
    out
}

/// `A·Jᵀ`.
#[cfg(test)]
pub(crate) fn jt_right(a: &Matrix) -> Matrix {
    let m = a.ncols() / 2;
    let r = a.nrows();
    let mut out = Matrix::zeros(r, 2 * m);
    out.columns_mut(0, m).copy_from(&a.columns(m, m));
    out.columns_mut(m, m).copy_from(&(-a.columns(0, m)));
    out
}

/// `‖XᵀJX − J‖_F`.
pub fn feasibility(x: &Matrix) -> f64 {
    let k = x.ncols() / 2;
    let g = x.transpose() * j_left(x);
    (g - poisson(k)).norm()
}

/// The point `[I_{n,k} 0; 0 I_{n,k}]`.
pub fn canonical_matrix(dims: ManifoldDims) -> Matrix {
    let ManifoldDims { n, k } = dims;
    let mut e = Matrix::zeros(2 * n, 2 * k);
    for i in 0..k {
        e[(i, i)] = 1.0;
        e[(n + i, k + i)] = 1.0;
    }
    e
}

/// A feasible point with cached derived quantities.
#[derive(Debug)]
pub struct SymplecticPoint {
    x: Matrix,
    dims: ManifoldDims,
    xtx: Matrix,
    xtx_inv: Matrix,
    jx: Matrix,
    projector: OnceLock<Matrix>,
    frame: OnceLock<std::result::Result<Matrix, Error>>,
}

impl Clone for SymplecticPoint {
    fn clone(&self) -> Self {
        Self::build(self.x.clone(), self.dims).expect("cloning a valid point")
    }
}

impl SymplecticPoint {
    /// Validates feasibility against [`FEAS_TOL`].
    pub fn new(x: Matrix) -> Result<Self> {
        Self::with_tolerance(x, FEAS_TOL)
    }

    pub fn with_tolerance(x: Matrix, feas_tol: f64) -> Result<Self> {
        let dims = ManifoldDims::of(&x)?;
        let feas = feasibility(&x);
        if !(feas <= feas_tol) {
            return Err(Error::Invariant(format!(
                "point is not symplectic: feasibility {feas:.3e} > {feas_tol:.1e}"
            )));
        }
        Self::build(x, dims)
    }

    fn build(x: Matrix, dims: ManifoldDims) -> Result<Self> {
        let xtx = sym_part(&(x.transpose() * &x));
        let xtx_inv = xtx
            .clone()
            .cholesky()
            .map(|c| sym_part(&c.inverse()))
            .ok_or_else(|| Error::Definiteness("XᵀX is singular".into()))?;
        let jx = j_left(&x);
        Ok(Self {
            x,
            dims,
            xtx,
            xtx_inv,
            jx,
            projector: OnceLock::new(),
            frame: OnceLock::new(),
        })
    }

    /// `[I_{n,k} 0; 0 I_{n,k}]`.
    pub fn canonical(dims: ManifoldDims) -> Self {
        Self::build(canonical_matrix(dims), dims).expect("canonical point is valid")
    }

    pub fn matrix(&self) -> &Matrix {
        &self.x
    }

    pub fn into_matrix(self) -> Matrix {
        self.x
    }

    pub fn dims(&self) -> ManifoldDims {
        self.dims
    }

    pub fn xtx(&self) -> &Matrix {
        &self.xtx
    }

    pub fn xtx_inv(&self) -> &Matrix {
        &self.xtx_inv
    }

    /// `J_{2n}X`.
    pub fn jx(&self) -> &Matrix {
        &self.jx
    }

    pub fn feasibility(&self) -> f64 {
        feasibility(&self.x)
    }

    /// `XᵀJᵀY = (JX)ᵀY`.
    pub fn xt_jt(&self, y: &Matrix) -> Matrix {
        self.jx.transpose() * y
    }

    /// `P_X Y = Y − X J_{2k} (XᵀJᵀY)`.
    pub fn apply_p(&self, y: &Matrix) -> Matrix {
        y - &self.x * j_left(&self.xt_jt(y))
    }

    /// `P_Xᵀ Y = Y + J X J_{2k} XᵀY`.
    pub fn apply_pt(&self, y: &Matrix) -> Matrix {
        y + &self.jx * j_left(&(self.x.transpose() * y))
    }

    /// `P_X P_Xᵀ Y`, which equals `J X_⊥ X_⊥ᵀ Jᵀ Y`.
    pub fn apply_ppt(&self, y: &Matrix) -> Matrix {
        self.apply_p(&self.apply_pt(y))
    }

    /// `Π^⊥ Y = Y − X(XᵀX)⁻¹XᵀY`.
    pub fn apply_pi_perp(&self, y: &Matrix) -> Matrix {
        y - &self.x * (&self.xtx_inv * (self.x.transpose() * y))
    }

    /// Dense `P_X = I − XJ_{2k}XᵀJᵀ`, built on first use.
    pub fn oblique_projector(&self) -> &Matrix {
        self.projector.get_or_init(|| {
            let m = self.x.nrows();
            self.apply_p(&Matrix::identity(m, m))
        })
    }

    /// `X_⊥` with `XᵀX_⊥ = 0`, normalized so that
    /// `(X_⊥(X_⊥ᵀJX_⊥)⁻¹)ᵀ(X_⊥(X_⊥ᵀJX_⊥)⁻¹) = I`. Built on first use.
    pub fn xperp_frame(&self) -> Result<&Matrix> {
        self.frame
            .get_or_init(|| build_frame(&self.x))
            .as_ref()
            .map_err(|e| e.clone())
    }

    /// `‖XᵀJZ + ZᵀJX‖_F`.
    pub fn tangency_residual(&self, z: &Matrix) -> f64 {
        dfx_matrix(self, z).norm()
    }
}

fn build_frame(x: &Matrix) -> Result<Matrix> {
    let m = x.nrows();
    let c = x.ncols();
    if c == m {
        return Ok(Matrix::zeros(m, 0));
    }
    let mut aug = Matrix::zeros(m, c + m);
    aug.columns_mut(0, c).copy_from(x);
    aug.columns_mut(c, m).copy_from(&Matrix::identity(m, m));
    let q = aug.qr().q();
    let x0 = q.columns(c, m - c).into_owned();
    let ortho = (x.transpose() * &x0).norm();
    if ortho > 1e-8 * x.norm() {
        return Err(Error::Frame(format!(
            "complement basis not orthogonal ({ortho:.3e})"
        )));
    }
    let sigma = x0.transpose() * j_left(&x0);
    let gram = &sigma * sigma.transpose();
    let t = inv_sqrt_spd(&gram).map_err(|_| Error::Frame("X_⊥ᵀJX_⊥ is singular".into()))?;
    Ok(x0 * t)
}

/// An ambient matrix certified to lie in the tangent space at some point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector(Matrix);

/// Tangency tolerance `‖XᵀJZ + ZᵀJX‖_F ≤ TANGENT_TOL·(1+‖Z‖_F)`.
pub const TANGENT_TOL: f64 = 1e-8;

impl TangentVector {
    /// Checks the tangency residual.
    pub fn new(point: &SymplecticPoint, z: Matrix) -> Result<Self> {
        if z.shape() != point.matrix().shape() {
            return Err(Error::Dimension(
                "tangent vector shape differs from point".into(),
            ));
        }
        let res = point.tangency_residual(&z);
        if res > TANGENT_TOL * (1.0 + z.norm()) {
            return Err(Error::Invariant(format!("not tangent: residual {res:.3e}")));
        }
        Ok(Self(z))
    }

    /// Wraps a matrix produced by a projection.
    pub(crate) fn from_projection(z: Matrix) -> Self {
        Self(z)
    }

    pub fn zeros(point: &SymplecticPoint) -> Self {
        let (r, c) = point.matrix().shape();
        Self(Matrix::zeros(r, c))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

impl Deref for TangentVector {
    type Target = Matrix;
    fn deref(&self) -> &Matrix {
        &self.0
    }
}

pub(crate) fn dfx_matrix(point: &SymplecticPoint, z: &Matrix) -> Matrix {
    // XᵀJZ = −(JX)ᵀZ and ZᵀJX = −(XᵀJZ)ᵀ.
    let s = -(point.jx().transpose() * z);
    &s - s.transpose()
}

/// `D F_X(Z) = XᵀJZ + ZᵀJX`.
pub fn dfx(point: &SymplecticPoint, z: &Matrix) -> Result<Matrix> {
    if z.shape() != point.matrix().shape() {
        return Err(Error::Dimension("dfx: shape mismatch".into()));
    }
    Ok(dfx_matrix(point, z))
}

/// `D F_X^*(Ω) = 2JᵀXΩ`.
pub fn dfx_adjoint(point: &SymplecticPoint, omega: &Matrix) -> Result<Matrix> {
    let c = point.matrix().ncols();
    if omega.shape() != (c, c) {
        return Err(Error::Dimension("dfx_adjoint: Ω has the wrong size".into()));
    }
    if !crate::linalg::is_skew(omega, 1e-12) {
        return Err(Error::Invariant(
            "dfx_adjoint: Ω is not skew-symmetric".into(),
        ));
    }
    Ok(point.jx() * omega * -2.0)
}

/// Random feasible point: symplectic factor of a Gaussian matrix.
/// Retries up to five draws on SR breakdown.
pub fn random_point(dims: ManifoldDims, seed: u64) -> Result<SymplecticPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_point_with(dims, &mut rng)
}

/// As [`random_point`] with a caller-supplied generator.
pub fn random_point_with<R: rand::Rng + ?Sized>(
    dims: ManifoldDims,
    rng: &mut R,
) -> Result<SymplecticPoint> {
    let mut last = None;
    for _ in 0..5 {
        let a = gaussian_matrix(rng, 2 * dims.n, 2 * dims.k);
        match sr_decompose(&a) {
            Ok(f) => return SymplecticPoint::with_tolerance(f.s, 1e-9),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap_or_else(|| Error::Invariant("random point generation failed".into())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j_action() {
        let i2 = Matrix::identity(2, 2);
        assert_eq!(
            apply_j(&i2).unwrap(),
            Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])
        );
        let a = Matrix::from_fn(6, 3, |i, j| (i * 3 + j) as f64);
        assert_eq!(apply_j(&apply_j(&a).unwrap()).unwrap(), -&a);
        assert_eq!(apply_jt(&apply_j(&a).unwrap()).unwrap(), a);
        assert_eq!(apply_j(&a).unwrap(), poisson(3) * &a);
        let b = Matrix::from_fn(3, 4, |i, j| (i + 5 * j) as f64);
        assert_eq!(j_right(&b), &b * poisson(2));
        assert_eq!(jt_right(&b), &b * poisson(2).transpose());
        assert!(matches!(
            apply_j(&Matrix::zeros(3, 1)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn feasibility_examples() {
        let dims = ManifoldDims::new(4, 2).unwrap();
        assert_eq!(feasibility(&canonical_matrix(dims)), 0.0);
        let a = 3.7;
        let x = Matrix::from_row_slice(2, 2, &[a, 0.0, 0.0, 1.0 / a]);
        assert!(feasibility(&x) < 1e-15);
        let n = 3;
        let two = Matrix::identity(2 * n, 2 * n) * 2.0;
        let want = 3.0 * (2.0 * n as f64).sqrt();
        assert!((feasibility(&two) - want).abs() < 1e-14);
    }

    #[test]
    fn dims() {
        let d = ManifoldDims::new(5, 2).unwrap();
        assert_eq!(d.manifold_dim(), 40 - 6);
        assert!(ManifoldDims::new(2, 3).is_err());
        assert!(ManifoldDims::new(2, 0).is_err());
    }

    #[test]
    fn projector_square_case_is_zero() {
        let x = random_point(ManifoldDims::new(3, 3).unwrap(), 4).unwrap();
        assert!(x.oblique_projector().amax() < 1e-10);
        assert_eq!(x.xperp_frame().unwrap().ncols(), 0);
    }

    #[test]
    fn projector_idempotent_and_tangent() {
        let x = random_point(ManifoldDims::new(5, 2).unwrap(), 11).unwrap();
        let p = x.oblique_projector();
        assert!((p * p - p).norm() <= 1e-12 * p.norm().max(1.0));
        let e = SymplecticPoint::canonical(ManifoldDims::new(5, 2).unwrap());
        for s in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let y = gaussian_matrix(&mut rng, 10, 4);
            assert!(e.tangency_residual(&e.apply_p(&y)) <= 1e-10);
        }
        let omega = Matrix::from_row_slice(
            4,
            4,
            &[
                0.0, 1.0, -2.0, 0.5, -1.0, 0.0, 0.3, 1.0, 2.0, -0.3, 0.0, -0.7, -0.5, -1.0, 0.7,
                0.0,
            ],
        );
        let normal = x.matrix() * poisson(2) * omega;
        assert!(x.apply_p(&normal).norm() <= 1e-10 * normal.norm());
    }

    #[test]
    fn frame_properties() {
        let x = random_point(ManifoldDims::new(4, 1).unwrap(), 3).unwrap();
        let xp = x.xperp_frame().unwrap();
        assert_eq!(xp.ncols(), 6);
        assert!((x.matrix().transpose() * xp).norm() <= 1e-10);
        let s = xp.transpose() * poisson(4) * xp;
        let w = xp * s.try_inverse().unwrap();
        assert!((w.transpose() * &w - Matrix::identity(6, 6)).norm() <= 1e-8);
        let lhs = poisson(4) * xp * xp.transpose() * poisson(4).transpose();
        let p = x.oblique_projector();
        assert!((lhs - p * p.transpose()).norm() <= 1e-8);
    }

    #[test]
    fn dfx_and_adjoint() {
        let x = random_point(ManifoldDims::new(3, 2).unwrap(), 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let z = gaussian_matrix(&mut rng, 6, 4);
        let a = gaussian_matrix(&mut rng, 4, 4);
        let om = (&a - a.transpose()) * 0.5;
        let j6 = poisson(3);
        let want = x.matrix().transpose() * &j6 * &z + z.transpose() * &j6 * x.matrix();
        assert!((dfx(&x, &z).unwrap() - want).norm() < 1e-13);
        let lhs = dfx(&x, &z).unwrap().dot(&om);
        let rhs = z.dot(&dfx_adjoint(&x, &om).unwrap());
        assert!((lhs - rhs).abs() <= 1e-13 * lhs.abs().max(1.0));
        assert!(dfx_adjoint(&x, &a).is_err());
        // Tangent input is annihilated.
        let zt = x.apply_p(&z);
        assert!(dfx(&x, &zt).unwrap().norm() <= 1e-12);
        // Normal direction JXΩ₀.
        let zn = x.jx() * &om;
        let want = x.matrix().transpose() * &j6 * &zn + zn.transpose() * &j6 * x.matrix();
        assert!((dfx(&x, &zn).unwrap() - want).norm() <= 1e-12);
    }

    #[test]
    fn parameterization_is_tangent() {
        let dims = ManifoldDims::new(4, 2).unwrap();
        let x = random_point(dims, 21).unwrap();
        let xp = x.xperp_frame().unwrap().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w0 = gaussian_matrix(&mut rng, 4, 4);
        let w = (&w0 + w0.transpose()) * 0.5;
        let kk = gaussian_matrix(&mut rng, 4, 4);
        let z = x.matrix() * poisson(2) * w + poisson(4) * xp * kk;
        assert!(dfx(&x, &z).unwrap().norm() <= 1e-10);
    }

    #[test]
    fn random_points_deterministic_and_feasible() {
        let dims = ManifoldDims::new(20, 4).unwrap();
        let a = random_point(dims, 5).unwrap();
        let b = random_point(dims, 5).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        let mut worst: f64 = 0.0;
        for s in 0..100 {
            worst = worst.max(random_point(dims, s).unwrap().feasibility());
        }
        assert!(worst <= 1e-9, "worst feasibility {worst}");
    }

    #[test]
    fn infeasible_rejected() {
        let x = Matrix::identity(4, 2) * 2.0;
        assert!(matches!(SymplecticPoint::new(x), Err(Error::Invariant(_))));
    }
}
