//! Riemannian optimization on the symplectic Stiefel manifold
//! `Sp(2k,2n) = {X ∈ ℝ^{2n×2k} : XᵀJ_{2n}X = J_{2k}}`.
//!
//! The crate provides the canonical-like and weighted Euclidean metrics,
//! their Riemannian gradients and Hessians, the Cayley and SR
//! retractions, direct and Krylov solvers for the Newton equation, and
//! three drivers: Riemannian gradient descent, (inexact) Newton and the
//! hybrid of the two.

pub mod error;
pub mod hessian;
pub mod linalg;
pub mod manifold;
pub mod metrics;
pub mod mtx;
pub mod newton;
pub mod optimize;
pub mod problems;
pub mod random;
pub mod retraction;
pub mod sr;
pub mod vectorize;

pub use error::{Error, Result};
pub use hessian::HessianOperator;
pub use linalg::{Matrix, SpdMatrix, Vector};
pub use manifold::{ManifoldDims, SymplecticPoint, TangentVector};
pub use metrics::{Metric, MetricAt};
pub use optimize::{hybrid, newton, rgd, OptimizerConfig, RunReport, RunStatus};
pub use problems::{CostFunction, Problem};
pub use retraction::{retract, RetractionKind};
