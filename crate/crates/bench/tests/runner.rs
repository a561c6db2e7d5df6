use std::path::Path;

use sympstiefel_bench::gen::example_configs;
use sympstiefel_bench::runner::{read_history, read_results, RESULT_HEADER};
use sympstiefel_bench::{run_suite, ExperimentConfig};

fn header(path: &Path) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.headers().unwrap().iter().map(String::from).collect()
}

#[test]
fn empty_method_list_gives_header_only_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_toml("[problem]\nfamily = \"trace\"\nn = 4\nk = 1\n").unwrap();
    let suite = run_suite(&cfg, dir.path()).unwrap();
    assert!(suite.outcomes.is_empty());
    assert_eq!(header(&suite.results_path), RESULT_HEADER);
    assert!(read_results(&suite.results_path).unwrap().is_empty());
    let text = std::fs::read_to_string(&suite.results_path).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(!text.contains('\r'));
}

#[test]
fn least_squares_table_has_ten_rows() {
    let dir = tempfile::tempdir().unwrap();
    let (_, text) = example_configs()
        .into_iter()
        .find(|(n, _)| *n == "least-squares")
        .unwrap();
    let mut cfg = ExperimentConfig::from_toml(&text).unwrap();
    cfg.problem.n = Some(12);
    cfg.problem.k = Some(2);
    let suite = run_suite(&cfg, dir.path()).unwrap();
    assert!(suite.all_ok());
    let rows = read_results(&suite.results_path).unwrap();
    assert_eq!(rows.len(), 10);
    for r in &rows {
        assert_eq!(r.status, "converged", "{}", r.scheme);
        assert!(r.rel_dist_to_known_min.unwrap() <= 1e-6, "{}", r.scheme);
        assert!(r.feas <= 1e-9);
        if r.scheme.starts_with("RGD") {
            assert_eq!(r.phase2_iters, 0);
        } else {
            assert!(r.phase2_iters >= 1 && r.phase2_iters <= 10, "{}", r.scheme);
        }
    }
}

#[test]
fn histories_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let text = "schemes = [\"hRiN-SR-M\", \"RGD-Cay-e\", \"RiN-SR-c\"]\n\
                [problem]\nfamily = \"least-squares\"\nn = 6\nk = 2\nseed = 3\n";
    let cfg = ExperimentConfig::from_toml(text).unwrap();
    let suite = run_suite(&cfg, dir.path()).unwrap();
    for o in &suite.outcomes {
        let path = suite.history_dir.join(format!("{}.csv", o.row.scheme));
        assert_eq!(header(&path), ["j", "phase", "f", "grad_norm_rel", "step"]);
        let rows = read_history(&path).unwrap();
        assert_eq!(rows, o.history);
        assert!(!rows.is_empty());
        assert_eq!(rows[0].grad_norm_rel, 1.0);
        assert!(rows.windows(2).all(|w| w[1].j == w[0].j + 1));
        assert!(rows.iter().all(|r| r.phase == "RGD" || r.phase == "Newton"));
    }
    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("out/summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn missing_weight_is_a_scheme_failure() {
    let dir = tempfile::tempdir().unwrap();
    let text = "schemes = [\"RGD-SR-M\", \"RGD-SR-c\"]\nmxit = 50\n[problem]\nfamily = \"quartic\"\nn = 2\n";
    let cfg = ExperimentConfig::from_toml(text).unwrap();
    let suite = run_suite(&cfg, dir.path()).unwrap();
    assert!(!suite.all_ok());
    assert!(suite.outcomes[0].row.status.starts_with("error"));
    assert!(!suite.outcomes[1].errored);
}

#[test]
fn matrix_market_problem_files() {
    let dir = tempfile::tempdir().unwrap();
    let src = sympstiefel::problems::least_squares_instance(4, 1, 2).unwrap();
    let a = sympstiefel::problems::block_symplectic(
        &(sympstiefel::Matrix::identity(4, 4) * 0.1),
        &(sympstiefel::Matrix::identity(4, 4) * 0.2),
    );
    sympstiefel::mtx::write_matrix_market(dir.path().join("a.mtx"), &a).unwrap();
    sympstiefel::mtx::write_matrix_market(
        dir.path().join("b.mtx"),
        src.known_minimizer.as_ref().unwrap(),
    )
    .unwrap();
    sympstiefel::mtx::write_matrix_market(dir.path().join("x0.mtx"), &src.x0).unwrap();
    let text = "schemes = [\"hRN-SR-M\"]\n[problem]\nfamily = \"least-squares-files\"\n\
                a = \"a.mtx\"\nb = \"b.mtx\"\nx0 = \"x0.mtx\"\n";
    let cfg = ExperimentConfig::from_toml(text).unwrap();
    let suite = run_suite(&cfg, dir.path()).unwrap();
    let row = &suite.outcomes[0].row;
    assert_eq!(row.status, "converged");
    assert!(row.rel_dist_to_known_min.unwrap() <= 1e-8);
}
