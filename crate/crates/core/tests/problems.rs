use sympstiefel::manifold::{feasibility, poisson, ManifoldDims};
use sympstiefel::mtx::{read_matrix_market, write_matrix_market};
use sympstiefel::problems::{
    block_symplectic, gyroscopic_trace_instance, least_squares_instance, least_squares_problem,
    trace_instance, trace_problem_from,
};
use sympstiefel::random::{gaussian_matrix, seeded};
use sympstiefel::{rgd, Matrix, Metric, OptimizerConfig, RetractionKind};

/// Positive imaginary parts of the eigenvalues of `JA`, sorted.
fn symplectic_eigenvalues(a: &Matrix) -> Vec<f64> {
    let ja = poisson(a.nrows() / 2) * a;
    let mut d: Vec<f64> = ja
        .complex_eigenvalues()
        .iter()
        .map(|c| c.im)
        .filter(|v| *v > 0.0)
        .collect();
    d.sort_by(|x, y| x.partial_cmp(y).unwrap());
    d
}

#[test]
fn trace_matrix_has_integer_symplectic_spectrum() {
    for n in 1..=6 {
        let p = trace_instance(n, 1, 40 + n as u64).unwrap();
        let d = symplectic_eigenvalues(p.weight.as_ref().unwrap().matrix());
        assert_eq!(d.len(), n);
        for (j, v) in d.iter().enumerate() {
            assert!(
                (v - (j + 1) as f64).abs() <= 1e-8 * n as f64,
                "n {n}: {d:?}"
            );
        }
    }
}

#[test]
fn least_squares_data_is_symplectic() {
    for seed in 0..5 {
        let p = least_squares_instance(7, 3, seed).unwrap();
        let ls = p.weight.as_ref().unwrap().matrix();
        assert!(ls.nrows() == 14);
        assert!(feasibility(&p.x0) <= 1e-10);
        let xm = p.known_minimizer.as_ref().unwrap();
        assert!(feasibility(xm) <= 1e-9);
        assert!(p.cost.value(xm) <= 1e-18);
    }
}

#[test]
fn generators_repeat_for_equal_seeds() {
    let a = trace_instance(6, 2, 3).unwrap();
    let b = trace_instance(6, 2, 3).unwrap();
    let c = trace_instance(6, 2, 4).unwrap();
    assert_eq!(
        a.weight.as_ref().unwrap().matrix(),
        b.weight.as_ref().unwrap().matrix()
    );
    assert_ne!(
        a.weight.as_ref().unwrap().matrix(),
        c.weight.as_ref().unwrap().matrix()
    );
    let x = least_squares_instance(4, 1, 2).unwrap();
    let y = least_squares_instance(4, 1, 2).unwrap();
    assert_eq!(x.x0, y.x0);
}

#[test]
fn cost_derivatives_match_differences() {
    let mut rng = seeded(8);
    for p in [
        least_squares_instance(5, 2, 1).unwrap(),
        trace_instance(5, 2, 1).unwrap(),
        gyroscopic_trace_instance(5, 2).unwrap(),
    ] {
        let x = p.x0.clone();
        let z = gaussian_matrix(&mut rng, x.nrows(), x.ncols());
        let t = 1e-6;
        let fd = (p.cost.value(&(&x + &z * t)) - p.cost.value(&(&x - &z * t))) / (2.0 * t);
        let g = p.cost.gradient(&x).dot(&z);
        assert!((fd - g).abs() <= 1e-6 * g.abs().max(1.0), "{}", p.name);
        let fdh = (p.cost.gradient(&(&x + &z * t)) - p.cost.gradient(&(&x - &z * t))) / (2.0 * t);
        let h = p.cost.hessian_apply(&x, &z);
        assert!((fdh - &h).norm() <= 1e-6 * h.norm().max(1.0), "{}", p.name);
    }
}

#[test]
fn least_squares_from_matrix_market_files() {
    let dir = std::env::temp_dir().join(format!("sympstiefel-mtx-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let src = least_squares_instance(5, 2, 6).unwrap();
    let ls_a = block_symplectic(
        &(Matrix::identity(5, 5) * 0.2),
        &(Matrix::identity(5, 5) * 0.3),
    );
    let b = src.known_minimizer.clone().unwrap();
    let files = [("a.mtx", &ls_a), ("b.mtx", &b), ("x0.mtx", &src.x0)];
    for (name, m) in files {
        write_matrix_market(dir.join(name), m).unwrap();
    }
    let a = read_matrix_market(dir.join("a.mtx")).unwrap();
    let b2 = read_matrix_market(dir.join("b.mtx")).unwrap();
    let x0 = read_matrix_market(dir.join("x0.mtx")).unwrap();
    assert_eq!(a, ls_a);
    assert_eq!(x0, src.x0);
    let p = least_squares_problem(a, b2, x0).unwrap();
    assert!(p.known_minimizer.is_some());
    let cfg = OptimizerConfig::new(
        Metric::weighted(p.weight.clone().unwrap()),
        RetractionKind::Sr,
    );
    let r = rgd(&cfg, p.cost.as_ref(), &p.start().unwrap()).unwrap();
    assert!(p.relative_distance(r.x.matrix()).unwrap() <= 1e-6);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn trace_from_user_matrix_checks_shape() {
    let dims = ManifoldDims::new(3, 1).unwrap();
    assert!(trace_problem_from(Matrix::identity(4, 4), dims, None, None).is_err());
    let mut a = Matrix::identity(6, 6);
    a[(0, 1)] = 0.5;
    assert!(trace_problem_from(a, dims, None, None).is_err());
    let p = trace_problem_from(Matrix::identity(6, 6), dims, Some(1.0), None).unwrap();
    assert_eq!(p.x0.shape(), (6, 2));
}

#[test]
fn gyroscopic_data_is_normalized_spd() {
    let p = gyroscopic_trace_instance(8, 2).unwrap();
    let a = p.weight.as_ref().unwrap().matrix();
    assert!((a.norm() - 1.0).abs() <= 1e-12);
    assert!((a - a.transpose()).norm() == 0.0);
    assert!(p.note.is_some());
}
