//! Runs every scheme of a config and writes the result tables.
//!
//! `results.csv` holds one row per scheme, with RGD iterations counted
//! as phase 1 and Newton iterations as phase 2; `history/<scheme>.csv` holds
//! one row per iterate with columns `j, phase, f, grad_norm_rel, step`,
//! where `j` counts iterates across both phases and `grad_norm_rel` is
//! `‖grad f(X_j)‖ / ‖grad f(X_0)‖`. `summary.json` repeats the rows.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sympstiefel::optimize::{Phase, SecondPhase};
use sympstiefel::{hybrid, newton, rgd, OptimizerConfig, Problem, RunReport, RunStatus};

use crate::config::{ExperimentConfig, Method, Scheme};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeRow {
    pub scheme: String,
    pub phase1_iters: usize,
    pub phase2_iters: usize,
    pub phase1_time_s: f64,
    pub phase2_time_s: f64,
    pub f_star: f64,
    pub grad_norm: f64,
    pub rel_dist_to_known_min: Option<f64>,
    pub feas: f64,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub j: usize,
    pub phase: String,
    pub f: f64,
    pub grad_norm_rel: f64,
    pub step: f64,
}

pub const RESULT_HEADER: [&str; 10] = [
    "scheme",
    "phase1_iters",
    "phase2_iters",
    "phase1_time_s",
    "phase2_time_s",
    "f_star",
    "grad_norm",
    "rel_dist_to_known_min",
    "feas",
    "status",
];

/// Outcome of one scheme, with its history.
#[derive(Debug, Clone)]
pub struct SchemeOutcome {
    pub row: SchemeRow,
    pub history: Vec<HistoryRow>,
    /// True when the run could not be carried out at all.
    pub errored: bool,
}

#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub outcomes: Vec<SchemeOutcome>,
    pub results_path: PathBuf,
    pub history_dir: PathBuf,
}

impl SuiteResult {
    pub fn all_ok(&self) -> bool {
        self.outcomes.iter().all(|o| !o.errored)
    }
}

/// Optimizer settings for a scheme.
pub fn optimizer_config(
    cfg: &ExperimentConfig,
    scheme: &Scheme,
    problem: &Problem,
) -> Result<OptimizerConfig> {
    let mut oc = OptimizerConfig::new(cfg.metric(scheme.metric, problem)?, scheme.retraction);
    oc.tol = cfg.tol;
    oc.theta = cfg.theta_for(scheme.metric);
    oc.mxit = cfg.mxit;
    oc.newton_mxit = cfg.newton_mxit;
    if let Some(eta) = cfg.eta {
        oc.newton.eta = eta;
    }
    if let Some(mu) = cfg.mu {
        oc.newton.mu = mu;
    }
    if !scheme.method.is_hybrid() && oc.theta <= oc.tol {
        oc.theta = oc.tol * 10.0;
    }
    Ok(oc)
}

pub fn run_scheme(cfg: &ExperimentConfig, scheme: &Scheme, problem: &Problem) -> Result<RunReport> {
    let oc = optimizer_config(cfg, scheme, problem)?;
    let x0 = problem.start()?;
    let cost = problem.cost.as_ref();
    let report = match scheme.method {
        Method::Rgd => rgd(&oc, cost, &x0)?,
        Method::Rn => newton(&oc, cost, &x0, false)?,
        Method::Rin => newton(&oc, cost, &x0, true)?,
        Method::Hrn => hybrid(&oc, cost, &x0, SecondPhase::Exact)?,
        Method::Hrin => hybrid(&oc, cost, &x0, SecondPhase::Inexact)?,
    };
    Ok(report)
}

pub fn history_rows(report: &RunReport) -> Vec<HistoryRow> {
    let g0 = report.grad_norm0.max(f64::MIN_POSITIVE);
    report
        .records
        .iter()
        .enumerate()
        .map(|(j, r)| HistoryRow {
            j,
            phase: match r.phase {
                Phase::Rgd => "RGD".into(),
                Phase::Newton => "Newton".into(),
            },
            f: r.f,
            grad_norm_rel: if report.grad_norm0 == 0.0 {
                0.0
            } else {
                r.grad_norm / g0
            },
            step: r.step,
        })
        .collect()
}

fn outcome(scheme: &Scheme, problem: &Problem, result: Result<RunReport>) -> SchemeOutcome {
    let name = scheme.to_string();
    match result {
        Ok(report) => {
            let row = SchemeRow {
                scheme: name,
                phase1_iters: report.rgd_iters,
                phase2_iters: report.newton_iters,
                phase1_time_s: report.rgd_time_s,
                phase2_time_s: report.newton_time_s,
                f_star: report.f,
                grad_norm: report.grad_norm,
                rel_dist_to_known_min: problem.relative_distance(report.x.matrix()),
                feas: report.feasibility(),
                status: report.status.label().to_string(),
            };
            let errored = matches!(report.status, RunStatus::Failed(_));
            SchemeOutcome {
                row,
                history: history_rows(&report),
                errored,
            }
        }
        Err(e) => SchemeOutcome {
            row: SchemeRow {
                scheme: name,
                phase1_iters: 0,
                phase2_iters: 0,
                phase1_time_s: 0.0,
                phase2_time_s: 0.0,
                f_star: f64::NAN,
                grad_norm: f64::NAN,
                rel_dist_to_known_min: None,
                feas: f64::NAN,
                status: format!("error: {e}"),
            },
            history: Vec::new(),
            errored: true,
        },
    }
}

/// Runs every scheme in parallel and returns the outcomes in config order.
pub fn run_schemes(cfg: &ExperimentConfig, problem: &Problem) -> Result<Vec<SchemeOutcome>> {
    let schemes = cfg.schemes()?;
    Ok(schemes
        .par_iter()
        .map(|s| outcome(s, problem, run_scheme(cfg, s, problem)))
        .collect())
}

pub fn write_results(path: &Path, rows: &[SchemeRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    w.write_record(RESULT_HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_history(path: &Path, rows: &[HistoryRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    w.write_record(["j", "phase", "f", "grad_norm_rel", "step"])?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_history(path: &Path) -> Result<Vec<HistoryRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn read_results(path: &Path) -> Result<Vec<SchemeRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Runs the suite described by `cfg`. Relative paths in the config
/// resolve against `base`.
pub fn run_suite(cfg: &ExperimentConfig, base: &Path) -> Result<SuiteResult> {
    cfg.validate()?;
    let problem = cfg.build_problem(base)?;
    let out = if cfg.output.is_absolute() {
        cfg.output.clone()
    } else {
        base.join(&cfg.output)
    };
    let history_dir = out.join("history");
    std::fs::create_dir_all(&history_dir)
        .with_context(|| format!("creating {}", history_dir.display()))?;

    let started = Instant::now();
    let outcomes = run_schemes(cfg, &problem)?;
    let elapsed = started.elapsed().as_secs_f64();

    let rows: Vec<SchemeRow> = outcomes.iter().map(|o| o.row.clone()).collect();
    let results_path = out.join("results.csv");
    write_results(&results_path, &rows)?;
    for o in &outcomes {
        write_history(
            &history_dir.join(format!("{}.csv", o.row.scheme)),
            &o.history,
        )?;
    }
    let summary = serde_json::json!({
        "name": cfg.name,
        "problem": problem.name,
        "n": problem.dims.n,
        "k": problem.dims.k,
        "wall_time_s": elapsed,
        "rows": rows,
    });
    std::fs::write(
        out.join("summary.json"),
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    Ok(SuiteResult {
        outcomes,
        results_path,
        history_dir,
    })
}
