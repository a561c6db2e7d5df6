mod common;

use common::rel;
use sympstiefel::linalg::SpdMatrix;
use sympstiefel::manifold::{random_point, ManifoldDims};
use sympstiefel::newton::{
    saddle_residuals, solve_newton_direct, solve_newton_direct_with, solve_newton_krylov,
    SaddleSystem, SaddleVariant, SolveStatus,
};
use sympstiefel::problems::{least_squares_instance, trace_instance};
use sympstiefel::{HessianOperator, Metric};

fn weighted(p: &sympstiefel::Problem) -> Metric {
    Metric::weighted(p.weight.clone().unwrap())
}

#[test]
fn direct_and_krylov_agree_weighted() {
    for seed in 0..4 {
        let p = least_squares_instance(10, 2, seed).unwrap();
        let metric = weighted(&p);
        let x = random_point(p.dims, 100 + seed).unwrap();
        let op = HessianOperator::new(&metric, &x, p.cost.as_ref()).unwrap();
        let direct = solve_newton_direct(&op).unwrap();
        let (kz, rep) = solve_newton_krylov(&op, 1e-13, 0.0, p.dims.manifold_dim());
        assert_eq!(rep.status, SolveStatus::Converged, "seed {seed}: {rep:?}");
        let e = rel(kz.matrix(), direct.z.matrix());
        assert!(e <= 1e-6, "seed {seed}: {e:.3e}");
    }
}

#[test]
fn saddle_pair_satisfies_both_equations() {
    for (seed, metric_kind) in (0..6).zip(["e", "M"].iter().cycle()) {
        let p = least_squares_instance(6, 2, seed).unwrap();
        let metric = if *metric_kind == "M" {
            weighted(&p)
        } else {
            Metric::euclidean()
        };
        let x = random_point(p.dims, 7 + seed).unwrap();
        let op = HessianOperator::new(&metric, &x, p.cost.as_ref()).unwrap();
        for variant in [SaddleVariant::Inverse, SaddleVariant::MetricFree] {
            let sol = solve_newton_direct_with(&op, variant).unwrap();
            let (a, b) = saddle_residuals(&op, sol.z.matrix(), &sol.omega);
            assert!(
                a <= 1e-8 && b <= 1e-8,
                "seed {seed} {metric_kind} {variant:?}: {a:.2e} {b:.2e}"
            );
            let newton = op.apply(sol.z.matrix()) + op.gradient();
            assert!(newton.norm() <= 1e-8 * op.gradient().norm());
        }
    }
}

#[test]
fn direct_solver_counts_a_solves() {
    for (n, k) in [(3, 1), (4, 2), (5, 3)] {
        let p = least_squares_instance(n, k, 3).unwrap();
        let x = random_point(p.dims, 4).unwrap();
        let metric = Metric::euclidean();
        let op = HessianOperator::new(&metric, &x, p.cost.as_ref()).unwrap();
        let sol = solve_newton_direct(&op).unwrap();
        assert_eq!(sol.a_solves, k * (2 * k - 1) + 1);
    }
}

#[test]
fn metric_free_variant_is_symmetric() {
    let p = least_squares_instance(4, 2, 9).unwrap();
    let metric = weighted(&p);
    let x = random_point(p.dims, 10).unwrap();
    let op = HessianOperator::new(&metric, &x, p.cost.as_ref()).unwrap();
    let sys = SaddleSystem::assemble(&op, SaddleVariant::MetricFree).unwrap();
    assert!((&sys.a - sys.a.transpose()).norm() <= 1e-10 * sys.a.norm());
    assert_eq!(sys.c, sys.b.transpose());
}

#[test]
fn krylov_is_exact_within_dimension() {
    let spd = |m: usize| {
        let b = sympstiefel::random::gaussian_matrix(&mut sympstiefel::random::seeded(5), m, m);
        SpdMatrix::new(&b * b.transpose() / m as f64 + sympstiefel::Matrix::identity(m, m)).unwrap()
    };
    let p = trace_instance(4, 2, 2).unwrap();
    let x = random_point(p.dims, 21).unwrap();
    for metric in [
        Metric::euclidean(),
        Metric::weighted(spd(8)),
        Metric::canonical(1.0).unwrap(),
    ] {
        let op = HessianOperator::new(&metric, &x, p.cost.as_ref()).unwrap();
        let dim = p.dims.manifold_dim();
        let (z, rep) = solve_newton_krylov(&op, 1e-12, 0.0, dim);
        assert!(rep.iterations <= dim);
        let r = op
            .metric_at()
            .project(&(op.apply(z.matrix()) + op.gradient()))
            .into_matrix();
        let g = op.metric_at().norm(op.gradient());
        assert!(
            op.metric_at().norm(&r) <= 1e-10 * g,
            "{}: {:?}",
            metric.label(),
            rep
        );
    }
}

#[test]
fn krylov_cap_is_reported() {
    let p = trace_instance(8, 3, 4).unwrap();
    let x = random_point(p.dims, 5).unwrap();
    let metric = Metric::euclidean();
    let op = HessianOperator::new(&metric, &x, p.cost.as_ref()).unwrap();
    let (_, rep) = solve_newton_krylov(&op, 1e-14, 0.0, 2);
    assert_eq!(rep.iterations, 2);
    assert_eq!(rep.status, SolveStatus::CapReached);
    assert!(rep.residual_norm > rep.forcing_target);
}

#[test]
fn krylov_step_is_tangent() {
    let p = least_squares_instance(5, 2, 1).unwrap();
    let x = random_point(p.dims, 3).unwrap();
    for metric in [
        Metric::euclidean(),
        weighted(&p),
        Metric::canonical(0.5).unwrap(),
    ] {
        let op = HessianOperator::new(&metric, &x, p.cost.as_ref()).unwrap();
        let (z, _) = solve_newton_krylov(&op, 1e-3, 0.5, 10);
        let scale = x.matrix().norm() * z.matrix().norm();
        assert!(x.tangency_residual(z.matrix()) <= 1e-10 * scale.max(1.0));
    }
}

#[test]
fn direct_rejects_canonical() {
    let p = least_squares_instance(3, 1, 0).unwrap();
    let x = random_point(ManifoldDims::new(3, 1).unwrap(), 0).unwrap();
    let metric = Metric::canonical(1.0).unwrap();
    let op = HessianOperator::new(&metric, &x, p.cost.as_ref()).unwrap();
    assert!(solve_newton_direct(&op).is_err());
}
