//! Cost functions and seeded instance generators.
//!
//! Generators reproduce the structure of the classical test families
//! (block-symplectic least-squares data, trace minimization with a known
//! symplectic spectrum, a quartic trace cost) using this crate's own
//! ChaCha8 stream. They are not bit-compatible with any other tool's
//! random numbers.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{condition_number, is_symmetric, sym_part, Matrix, SpdMatrix};
use crate::manifold::{j_left, jt_left, ManifoldDims, SymplecticPoint};
use crate::random::{gaussian_matrix, seeded, uniform_matrix};
use crate::sr::sr_decompose;

/// A smooth cost on the ambient space restricted to the manifold.
pub trait CostFunction: Send + Sync {
    fn value(&self, x: &Matrix) -> f64;

    /// Euclidean gradient `∇f̄(X)`.
    fn gradient(&self, x: &Matrix) -> Matrix;

    /// Euclidean Hessian action `∇²f̄(X)[Z]`.
    fn hessian_apply(&self, x: &Matrix, z: &Matrix) -> Matrix;

    /// `H` with `∇²f̄(X)[Z] = HZ` for every `X`, when such a matrix exists.
    fn constant_hessian(&self) -> Option<&Matrix> {
        None
    }

    fn name(&self) -> &str;
}

/// `f(X) = ½‖AX − B‖²_F`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    a: Matrix,
    b: Matrix,
    ata: Matrix,
    atb: Matrix,
}

impl LeastSquares {
    /// Rejects `A` with condition number above `1e14`.
    pub fn new(a: Matrix, b: Matrix) -> Result<Self> {
        if a.nrows() != a.ncols() || a.nrows() != b.nrows() {
            return Err(Error::Dimension(format!(
                "least squares needs square A matching B, got A {}x{}, B {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols()
            )));
        }
        let cond = condition_number(&a);
        if !(cond <= 1e14) {
            return Err(Error::IllConditioned(format!(
                "condition number of A is {cond:.3e}"
            )));
        }
        let ata = sym_part(&(a.transpose() * &a));
        let atb = a.transpose() * &b;
        Ok(Self { a, b, ata, atb })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    /// `JᵀAᵀJB`, the exact minimizer when `A` and `B` are symplectic.
    pub fn symplectic_minimizer(&self) -> Matrix {
        jt_left(&(self.a.transpose() * j_left(&self.b)))
    }
}

impl CostFunction for LeastSquares {
    fn value(&self, x: &Matrix) -> f64 {
        0.5 * (&self.a * x - &self.b).norm_squared()
    }

    fn gradient(&self, x: &Matrix) -> Matrix {
        &self.ata * x - &self.atb
    }

    fn hessian_apply(&self, _x: &Matrix, z: &Matrix) -> Matrix {
        &self.ata * z
    }

    fn constant_hessian(&self) -> Option<&Matrix> {
        Some(&self.ata)
    }

    fn name(&self) -> &str {
        "least-squares"
    }
}

/// `f(X) = ½ tr(XᵀAX)` with SPD `A`.
#[derive(Debug, Clone)]
pub struct Trace {
    a: Matrix,
}

impl Trace {
    pub fn new(a: SpdMatrix) -> Self {
        Self {
            a: a.matrix().clone(),
        }
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }
}

impl CostFunction for Trace {
    fn value(&self, x: &Matrix) -> f64 {
        0.5 * x.dot(&(&self.a * x))
    }

    fn gradient(&self, x: &Matrix) -> Matrix {
        &self.a * x
    }

    fn hessian_apply(&self, _x: &Matrix, z: &Matrix) -> Matrix {
        &self.a * z
    }

    fn constant_hessian(&self) -> Option<&Matrix> {
        Some(&self.a)
    }

    fn name(&self) -> &str {
        "trace"
    }
}

/// `f(X) = ½ tr(XᵀAX XᵀBX)` on the square case `k = n`.
#[derive(Debug, Clone)]
pub struct QuarticTrace {
    a: Matrix,
    b: Matrix,
}

impl QuarticTrace {
    pub fn new(a: SpdMatrix, b: SpdMatrix) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::Dimension("A and B must have the same size".into()));
        }
        Ok(Self {
            a: a.matrix().clone(),
            b: b.matrix().clone(),
        })
    }
}

impl CostFunction for QuarticTrace {
    fn value(&self, x: &Matrix) -> f64 {
        let xa = x.transpose() * &self.a * x;
        let xb = x.transpose() * &self.b * x;
        0.5 * xa.dot(&xb.transpose())
    }

    fn gradient(&self, x: &Matrix) -> Matrix {
        let ax = &self.a * x;
        let bx = &self.b * x;
        let xax = x.transpose() * &ax;
        let xbx = x.transpose() * &bx;
        &bx * xax + &ax * xbx
    }

    fn hessian_apply(&self, x: &Matrix, z: &Matrix) -> Matrix {
        let ax = &self.a * x;
        let bx = &self.b * x;
        let az = &self.a * z;
        let bz = &self.b * z;
        let xax = x.transpose() * &ax;
        let xbx = x.transpose() * &bx;
        &bz * &xax
            + &az * &xbx
            + &bx * (z.transpose() * &ax)
            + &bx * (ax.transpose() * z)
            + &ax * (bx.transpose() * z)
            + &ax * (z.transpose() * &bx)
    }

    fn name(&self) -> &str {
        "quartic-trace"
    }
}

/// A cost together with its starting point and any known optimum.
#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub dims: ManifoldDims,
    pub cost: Arc<dyn CostFunction>,
    pub x0: Matrix,
    /// The unique minimizer, when known.
    pub known_minimizer: Option<Matrix>,
    /// The minimal value, when known.
    pub known_min_value: Option<f64>,
    /// Weight for the weighted Euclidean metric, usually the constant Hessian.
    pub weight: Option<SpdMatrix>,
    /// Free-form note carried into reports.
    pub note: Option<String>,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("dims", &self.dims)
            .field("known_min_value", &self.known_min_value)
            .finish_non_exhaustive()
    }
}

impl Problem {
    pub fn start(&self) -> Result<SymplecticPoint> {
        SymplecticPoint::new(self.x0.clone())
    }

    /// `‖X − X_min‖_F / ‖X_min‖_F` when the minimizer is known.
    pub fn relative_distance(&self, x: &Matrix) -> Option<f64> {
        self.known_minimizer
            .as_ref()
            .map(|xm| (x - xm).norm() / xm.norm())
    }
}

/// Symplectic factor of a Gaussian `rows×cols` matrix.
fn random_symplectic<R: rand::Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Result<Matrix> {
    let mut last = None;
    for _ in 0..5 {
        match sr_decompose(&gaussian_matrix(rng, 2 * n, 2 * k)) {
            Ok(f) => return Ok(f.s),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// `[I S₁; S₂ I + S₂S₁]`, symplectic whenever `S₁`, `S₂` are symmetric.
pub fn block_symplectic(s1: &Matrix, s2: &Matrix) -> Matrix {
    let n = s1.nrows();
    let mut s = Matrix::zeros(2 * n, 2 * n);
    s.view_mut((0, 0), (n, n))
        .copy_from(&Matrix::identity(n, n));
    s.view_mut((0, n), (n, n)).copy_from(s1);
    s.view_mut((n, 0), (n, n)).copy_from(s2);
    s.view_mut((n, n), (n, n))
        .copy_from(&(Matrix::identity(n, n) + s2 * s1));
    s
}

/// Symplectic least-squares instance: `A = [I A₁; A₂ I + A₂A₁]` with
/// `A_i = 0.1(Ã_i + Ã_iᵀ)`, `Ã_i` uniform on `[0,1)`; `B` and `X₀` are
/// symplectic factors of Gaussian matrices. The minimizer is `JᵀAᵀJB`.
pub fn least_squares_instance(n: usize, k: usize, seed: u64) -> Result<Problem> {
    ManifoldDims::new(n, k)?;
    let mut rng = seeded(seed);
    let a1 = uniform_matrix(&mut rng, n, n);
    let a2 = uniform_matrix(&mut rng, n, n);
    let a = block_symplectic(
        &((&a1 + a1.transpose()) * 0.1),
        &((&a2 + a2.transpose()) * 0.1),
    );
    let b = random_symplectic(&mut rng, n, k)?;
    let x0 = random_symplectic(&mut seeded(seed ^ 0x9e37_79b9_7f4a_7c15), n, k)?;
    least_squares_problem(a, b, x0)
}

/// Least-squares problem from user data. When `A` and `B` are symplectic
/// the minimizer `JᵀAᵀJB` is recorded.
pub fn least_squares_problem(a: Matrix, b: Matrix, x0: Matrix) -> Result<Problem> {
    let dims = ManifoldDims::new(a.nrows() / 2, b.ncols() / 2)?;
    let ls = LeastSquares::new(a, b)?;
    let known = if crate::manifold::feasibility(ls.a()) <= 1e-10 * ls.a().norm_squared()
        && crate::manifold::feasibility(ls.b()) <= 1e-10 * ls.b().norm_squared().max(1.0)
    {
        Some(ls.symplectic_minimizer())
    } else {
        None
    };
    let weight = SpdMatrix::new(ls.constant_hessian().expect("constant").clone()).ok();
    let known_min_value = known.as_ref().map(|_| 0.0);
    Ok(Problem {
        name: "least-squares".into(),
        dims,
        cost: Arc::new(ls),
        x0,
        known_minimizer: known,
        known_min_value,
        weight,
        note: None,
    })
}

/// Random symmetric positive definite matrix whose eigenvalues are
/// geometrically spaced between 1 and `rc`, mixed by `rotations` random
/// Givens rotations. Structural analog of a "random symmetric with given
/// reciprocal condition number" generator.
pub fn random_spd_with_condition<R: rand::Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    rc: f64,
    rotations: usize,
) -> Matrix {
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        let t = if n > 1 {
            i as f64 / (n - 1) as f64
        } else {
            0.0
        };
        m[(i, i)] = rc.powf(t);
    }
    for _ in 0..rotations {
        if n < 2 {
            break;
        }
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let theta = rng.random::<f64>() * std::f64::consts::TAU;
        let (s, c) = theta.sin_cos();
        // m ← G m Gᵀ on rows/cols i, j.
        for col in 0..n {
            let (a, b) = (m[(i, col)], m[(j, col)]);
            m[(i, col)] = c * a - s * b;
            m[(j, col)] = s * a + c * b;
        }
        for row in 0..n {
            let (a, b) = (m[(row, i)], m[(row, j)]);
            m[(row, i)] = c * a - s * b;
            m[(row, j)] = s * a + c * b;
        }
    }
    sym_part(&m)
}

/// Trace instance `A = SᵀD̃S` with `D̃ = diag(1..n, 1..n)` and block
/// symplectic `S`. Symplectic eigenvalues of `A` are `1, …, n`, so the
/// minimal value is `k(k+1)/2`. The start is `[I_{n,k} 0; 0 I_{n,k}]`.
pub fn trace_instance(n: usize, k: usize, seed: u64) -> Result<Problem> {
    let dims = ManifoldDims::new(n, k)?;
    let mut rng = seeded(seed);
    let rot = 3 * n / 2 + 1;
    let s1 = random_spd_with_condition(&mut rng, n, 0.1, rot);
    let s2 = random_spd_with_condition(&mut rng, n, 0.01, rot);
    let s = block_symplectic(&s1, &s2);
    let mut d = Matrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        d[(i, i)] = (i + 1) as f64;
        d[(n + i, n + i)] = (i + 1) as f64;
    }
    let a = sym_part(&(s.transpose() * d * &s));
    trace_problem_from(a, dims, Some((k * (k + 1)) as f64 / 2.0), None)
}

/// Trace problem from user data starting at the canonical point.
pub fn trace_problem_from(
    a: Matrix,
    dims: ManifoldDims,
    known_min_value: Option<f64>,
    note: Option<String>,
) -> Result<Problem> {
    if a.nrows() != 2 * dims.n || !is_symmetric(&a, 1e-12) {
        return Err(Error::Dimension(
            "trace problem needs a symmetric 2n x 2n matrix".into(),
        ));
    }
    let spd = SpdMatrix::new(a)?;
    let cost = Trace::new(spd.clone());
    Ok(Problem {
        name: "trace".into(),
        dims,
        cost: Arc::new(cost),
        x0: crate::manifold::canonical_matrix(dims),
        known_minimizer: None,
        known_min_value,
        weight: Some(spd),
        note,
    })
}

/// Synthetic gyroscopic stand-in for externally supplied Hamiltonian
/// data: `A = [K + ¼GᵀG, ½Gᵀ; ½G, I]`, normalized by its Frobenius
/// norm, with `K = diag((jπ)²(1−v²))` and `G_ij = 4ijv/(j²−i²)` for
/// `i + j` odd (zero otherwise), `v = 0.1`.
pub fn gyroscopic_trace_instance(n: usize, k: usize) -> Result<Problem> {
    let dims = ManifoldDims::new(n, k)?;
    let v = 0.1;
    let mut kk = Matrix::zeros(n, n);
    let mut g = Matrix::zeros(n, n);
    for i in 1..=n {
        kk[(i - 1, i - 1)] = (i as f64 * std::f64::consts::PI).powi(2) * (1.0 - v * v);
        for j in 1..=n {
            if (i + j) % 2 == 1 {
                let (fi, fj) = (i as f64, j as f64);
                g[(i - 1, j - 1)] = 4.0 * fi * fj * v / (fj * fj - fi * fi);
            }
        }
    }
    let mut a = Matrix::zeros(2 * n, 2 * n);
    a.view_mut((0, 0), (n, n))
        .copy_from(&(&kk + g.transpose() * &g * 0.25));
    a.view_mut((0, n), (n, n)).copy_from(&(g.transpose() * 0.5));
    a.view_mut((n, 0), (n, n)).copy_from(&(&g * 0.5));
    a.view_mut((n, n), (n, n))
        .copy_from(&Matrix::identity(n, n));
    let a = sym_part(&a) / a.norm();
    trace_problem_from(a, dims, None, Some("synthetic gyroscopic data".into()))
}

/// Quartic instance on `Sp(2n)`: `A = A₁ᵀA₁`, `B = B₁ᵀB₁` (Gaussian
/// factors, normalized), start `diag(Q, Q)` with orthogonal `Q`.
pub fn quartic_instance(n: usize, seed: u64) -> Result<Problem> {
    let dims = ManifoldDims::new(n, n)?;
    let mut rng = seeded(seed);
    let a1 = gaussian_matrix(&mut rng, 2 * n, 2 * n);
    let b1 = gaussian_matrix(&mut rng, 2 * n, 2 * n);
    let a = sym_part(&(a1.transpose() * &a1));
    let b = sym_part(&(b1.transpose() * &b1));
    let a = &a / a.norm();
    let b = &b / b.norm();
    let q = gaussian_matrix(&mut rng, n, n).qr().q();
    let mut x0 = Matrix::zeros(2 * n, 2 * n);
    x0.view_mut((0, 0), (n, n)).copy_from(&q);
    x0.view_mut((n, n), (n, n)).copy_from(&q);
    let cost = QuarticTrace::new(SpdMatrix::new(a)?, SpdMatrix::new(b)?)?;
    Ok(Problem {
        name: "quartic-trace".into(),
        dims,
        cost: Arc::new(cost),
        x0,
        known_minimizer: None,
        known_min_value: None,
        weight: None,
        note: None,
    })
}
