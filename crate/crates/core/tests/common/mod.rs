#![allow(dead_code)]

use sympstiefel::linalg::{Matrix, SpdMatrix};
use sympstiefel::metrics::Metric;
use sympstiefel::random::{gaussian_matrix, seeded};
use sympstiefel::SymplecticPoint;

pub fn random_spd(m: usize, seed: u64) -> SpdMatrix {
    let b = gaussian_matrix(&mut seeded(seed), m, m);
    SpdMatrix::new(&b * b.transpose() / m as f64 + Matrix::identity(m, m)).unwrap()
}

/// Canonical-like (two values of ρ), Euclidean and a random weighted metric.
pub fn metrics(m: usize, seed: u64) -> Vec<Metric> {
    vec![
        Metric::canonical(1.0).unwrap(),
        Metric::canonical(0.35).unwrap(),
        Metric::euclidean(),
        Metric::weighted(random_spd(m, seed)),
    ]
}

pub fn random_tangent(metric: &Metric, x: &SymplecticPoint, seed: u64) -> Matrix {
    let (r, c) = x.matrix().shape();
    metric
        .at(x)
        .unwrap()
        .project(&gaussian_matrix(&mut seeded(seed), r, c))
        .into_matrix()
}

pub fn rel(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}
