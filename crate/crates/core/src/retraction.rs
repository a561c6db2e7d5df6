//! Cayley and SR retractions.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::manifold::{feasibility, j_left, jt_left, SymplecticPoint};
use crate::sr::sr_decompose;

/// Feasibility drift above which an output is re-symplecticized.
pub const DRIFT_TOL: f64 = 1e-9;

/// Available retractions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RetractionKind {
    Cayley,
    Sr,
}

impl RetractionKind {
    /// Scheme label: `Cay` or `SR`.
    pub fn label(&self) -> &'static str {
        match self {
            RetractionKind::Cayley => "Cay",
            RetractionKind::Sr => "SR",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "Cay" | "cay" | "cayley" | "Cayley" => Some(RetractionKind::Cayley),
            "SR" | "sr" => Some(RetractionKind::Sr),
            _ => None,
        }
    }
}

/// Output of a retraction.
#[derive(Debug, Clone)]
pub struct Retracted {
    pub point: SymplecticPoint,
    /// True when the raw output drifted beyond [`DRIFT_TOL`] and was
    /// passed through further SR factorizations (at most two).
    pub resymplecticized: bool,
}

/// Economical Cayley retraction:
/// `−X + W(I + ¼J_{2k}ᵀZᵀJW)⁻¹` with `W = P_X Z + 2X`.
pub fn cayley_raw(point: &SymplecticPoint, z: &Matrix) -> Result<Matrix> {
    let x = point.matrix();
    let w = point.apply_p(z) + x * 2.0;
    let c = x.ncols();
    let inner = Matrix::identity(c, c) + jt_left(&(z.transpose() * j_left(&w))) * 0.25;
    let inv = inner
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::RetractionDomain("Cayley inner matrix is singular".into()))?;
    let cond = inner.norm() * inv.norm();
    if !(cond.is_finite() && cond < 1e14) {
        return Err(Error::RetractionDomain(format!(
            "Cayley inner matrix is ill-conditioned ({cond:.3e})"
        )));
    }
    Ok(-x + w * inv)
}

/// `sf(X + Z)`.
pub fn sr_raw(point: &SymplecticPoint, z: &Matrix) -> Result<Matrix> {
    sr_decompose(&(point.matrix() + z))
        .map(|f| f.s)
        .map_err(|e| Error::RetractionDomain(format!("SR factorization of X+Z failed: {e}")))
}

/// Retracts `Z` at `X`.
pub fn retract(kind: RetractionKind, point: &SymplecticPoint, z: &Matrix) -> Result<Retracted> {
    if z.shape() != point.matrix().shape() {
        return Err(Error::Dimension(
            "retraction: step shape differs from point".into(),
        ));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::RetractionDomain("non-finite step".into()));
    }
    let raw = match kind {
        RetractionKind::Cayley => cayley_raw(point, z)?,
        RetractionKind::Sr => sr_raw(point, z)?,
    };
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::RetractionDomain(
            "non-finite retraction output".into(),
        ));
    }
    let mut x = raw;
    let mut flagged = false;
    for _ in 0..2 {
        if feasibility(&x) <= DRIFT_TOL {
            break;
        }
        x = sr_decompose(&x)
            .map_err(|e| Error::RetractionDomain(format!("re-symplecticization failed: {e}")))?
            .s;
        flagged = true;
    }
    let drift = feasibility(&x);
    if drift > DRIFT_TOL {
        return Err(Error::RetractionDomain(format!(
            "feasibility drift {drift:.3e} after re-symplecticization"
        )));
    }
    let point = SymplecticPoint::with_tolerance(x, 1e-8)
        .map_err(|e| Error::RetractionDomain(format!("retraction output rejected: {e}")))?;
    Ok(Retracted {
        point,
        resymplecticized: flagged,
    })
}
