//! Riemannian gradient descent, (inexact) Newton and the hybrid method.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::hessian::HessianOperator;
use crate::linalg::Matrix;
use crate::manifold::SymplecticPoint;
use crate::metrics::Metric;
use crate::newton::{solve_newton_direct, solve_newton_krylov};
use crate::problems::CostFunction;
use crate::retraction::{retract, RetractionKind};

/// Non-monotone line search (Zhang–Hager reference value, BB trial step).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchParams {
    /// Memory decay of the reference value; 0 gives a monotone search.
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub gamma0: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
}

impl Default for LineSearchParams {
    fn default() -> Self {
        Self {
            alpha: 0.85,
            beta: 1e-4,
            delta: 0.5,
            gamma0: 1e-3,
            gamma_min: 1e-15,
            gamma_max: 1e5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonParams {
    pub eta: f64,
    pub mu: f64,
    /// Inner MINRES cap; `None` means `nk`.
    pub max_inner: Option<usize>,
    pub damping_delta: f64,
    pub damping_beta: f64,
    pub max_backtracks: usize,
}

impl Default for NewtonParams {
    fn default() -> Self {
        Self {
            eta: 1e-3,
            mu: 0.5,
            max_inner: None,
            damping_delta: 0.2,
            damping_beta: 1e-4,
            max_backtracks: 40,
        }
    }
}

/// Stopping test on the gradient norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopRule {
    /// `‖grad f(X_j)‖ ≤ tol·‖grad f(X_0)‖`.
    Relative,
    /// `‖grad f(X_j)‖ ≤ tol`.
    Absolute,
}

#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    pub metric: Metric,
    pub retraction: RetractionKind,
    pub tol: f64,
    /// Iteration cap for RGD (and for phase 1 of the hybrid method).
    pub mxit: usize,
    /// Switching threshold of the hybrid method, relative like `tol`.
    pub theta: f64,
    /// Iteration cap for Newton runs and phase 2.
    pub newton_mxit: usize,
    pub line_search: LineSearchParams,
    pub newton: NewtonParams,
    pub stop: StopRule,
}

impl OptimizerConfig {
    pub fn new(metric: Metric, retraction: RetractionKind) -> Self {
        Self {
            metric,
            retraction,
            tol: 1e-10,
            mxit: 5000,
            theta: 1e-4,
            newton_mxit: 50,
            line_search: LineSearchParams::default(),
            newton: NewtonParams::default(),
            stop: StopRule::Relative,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ls = &self.line_search;
        let nw = &self.newton;
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.tol > 0.0 && self.tol < self.theta) {
            return bad("need 0 < tol < theta");
        }
        if !(0.0..1.0).contains(&ls.alpha) {
            return bad("line search alpha must lie in [0, 1)");
        }
        if !(ls.beta > 0.0 && ls.beta < 1.0) || !(nw.damping_beta > 0.0 && nw.damping_beta < 1.0) {
            return bad("sufficient-decrease beta must lie in (0, 1)");
        }
        if !(ls.delta > 0.0 && ls.delta < 1.0)
            || !(nw.damping_delta > 0.0 && nw.damping_delta < 1.0)
        {
            return bad("backtracking delta must lie in (0, 1)");
        }
        if !(ls.gamma_min > 0.0 && ls.gamma_min <= ls.gamma0 && ls.gamma0 <= ls.gamma_max) {
            return bad("need 0 < gamma_min <= gamma0 <= gamma_max");
        }
        if !(nw.eta > 0.0 && nw.mu >= 0.0) {
            return bad("need eta > 0 and mu >= 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Rgd,
    Newton,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub phase: Phase,
    pub j: usize,
    pub f: f64,
    /// Metric norm `‖grad f(X_j)‖_{X_j}`.
    pub grad_norm: f64,
    /// Accepted step size (0 for the initial record).
    pub step: f64,
    pub inner_iters: usize,
    pub feas: f64,
    pub wall_ns: u128,
    /// Newton iterate that fell back to the negative gradient.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Converged,
    MaxIterations,
    /// Phase 1 of the hybrid method ended before reaching `theta`.
    SwitchFailed,
    /// No acceptable step was found.
    Stagnated,
    Failed(String),
}

impl RunStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::MaxIterations => "mxit",
            RunStatus::SwitchFailed => "switch-failed",
            RunStatus::Stagnated => "stagnated",
            RunStatus::Failed(_) => "failed",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub records: Vec<IterationRecord>,
    pub status: RunStatus,
    pub x: SymplecticPoint,
    pub f: f64,
    pub grad_norm: f64,
    /// Reference norm `‖grad f(X_0)‖` of the stopping test.
    pub grad_norm0: f64,
    pub rgd_iters: usize,
    pub newton_iters: usize,
    pub rgd_time_s: f64,
    pub newton_time_s: f64,
    pub resymplecticized: usize,
}

impl RunReport {
    pub fn relative_grad_norm(&self) -> f64 {
        self.grad_norm / self.grad_norm0.max(f64::MIN_POSITIVE)
    }

    pub fn feasibility(&self) -> f64 {
        self.x.feasibility()
    }
}

struct State {
    x: SymplecticPoint,
    f: f64,
    egrad: Matrix,
    grad: Matrix,
    grad_norm: f64,
}

impl State {
    fn new(metric: &Metric, cost: &dyn CostFunction, x: SymplecticPoint) -> Result<Self> {
        let f = cost.value(x.matrix());
        let egrad = cost.gradient(x.matrix());
        let at = metric.at(&x)?;
        let grad = at.gradient(&egrad).into_matrix();
        let grad_norm = at.norm(&grad);
        Ok(Self {
            x,
            f,
            egrad,
            grad,
            grad_norm,
        })
    }
}

/// Allowance for rounding in `f` when testing sufficient decrease.
fn round_slack(a: f64, b: f64) -> f64 {
    8.0 * f64::EPSILON * a.abs().max(b.abs())
}

struct Run<'c> {
    cfg: &'c OptimizerConfig,
    cost: &'c dyn CostFunction,
    records: Vec<IterationRecord>,
    resym: usize,
    rgd_iters: usize,
    newton_iters: usize,
    rgd_time: f64,
    newton_time: f64,
}

impl<'c> Run<'c> {
    fn new(cfg: &'c OptimizerConfig, cost: &'c dyn CostFunction) -> Self {
        Self {
            cfg,
            cost,
            records: Vec::new(),
            resym: 0,
            rgd_iters: 0,
            newton_iters: 0,
            rgd_time: 0.0,
            newton_time: 0.0,
        }
    }

    fn record(
        &mut self,
        phase: Phase,
        j: usize,
        s: &State,
        step: f64,
        inner: usize,
        ns: u128,
        fallback: bool,
    ) {
        self.records.push(IterationRecord {
            phase,
            j,
            f: s.f,
            grad_norm: s.grad_norm,
            step,
            inner_iters: inner,
            feas: s.x.feasibility(),
            wall_ns: ns,
            fallback,
        });
    }

    fn threshold(&self, tol: f64, g0: f64) -> f64 {
        match self.cfg.stop {
            StopRule::Relative => tol * g0,
            StopRule::Absolute => tol,
        }
    }

    fn finish(self, state: State, status: RunStatus, g0: f64) -> RunReport {
        RunReport {
            records: self.records,
            status,
            f: state.f,
            grad_norm: state.grad_norm,
            x: state.x,
            grad_norm0: g0,
            rgd_iters: self.rgd_iters,
            newton_iters: self.newton_iters,
            rgd_time_s: self.rgd_time,
            newton_time_s: self.newton_time,
            resymplecticized: self.resym,
        }
    }

    fn rgd_phase(
        &mut self,
        mut s: State,
        g0: f64,
        tol: f64,
        mxit: usize,
    ) -> Result<(State, RunStatus)> {
        let ls = self.cfg.line_search;
        let metric = &self.cfg.metric;
        let stop = self.threshold(tol, g0);
        let mut c_ref = s.f;
        let mut q = 1.0;
        let mut gamma = ls.gamma0;
        let mut j = 0;
        loop {
            if s.grad_norm <= stop {
                return Ok((s, RunStatus::Converged));
            }
            if j >= mxit {
                return Ok((s, RunStatus::MaxIterations));
            }
            let t0 = Instant::now();
            let gg = metric.at(&s.x)?.inner(&s.grad, &s.grad);
            let z = -&s.grad;
            let mut accepted = None;
            while gamma >= ls.gamma_min {
                if let Ok(r) = retract(self.cfg.retraction, &s.x, &(&z * gamma)) {
                    let f_new = self.cost.value(r.point.matrix());
                    if f_new.is_finite()
                        && f_new <= c_ref - ls.beta * gamma * gg + round_slack(c_ref, f_new)
                    {
                        accepted = Some((r, f_new));
                        break;
                    }
                }
                gamma *= ls.delta;
            }
            let Some((r, _)) = accepted else {
                return Ok((s, RunStatus::Stagnated));
            };
            self.resym += r.resymplecticized as usize;
            let new = State::new(metric, self.cost, r.point)?;
            let sx = new.x.matrix() - s.x.matrix();
            let yg = &new.grad - &s.grad;
            let sy = sx.dot(&yg).abs();
            j += 1;
            // BB1 on odd iterations, BB2 on even ones.
            let bb = if j % 2 == 1 {
                sx.norm_squared() / sy
            } else {
                sy / yg.norm_squared()
            };
            let step = gamma;
            gamma = if bb.is_finite() && bb > 0.0 {
                bb.clamp(ls.gamma_min, ls.gamma_max)
            } else {
                ls.gamma0
            };
            let q_new = ls.alpha * q + 1.0;
            c_ref = (ls.alpha * q * c_ref + new.f) / q_new;
            q = q_new;
            s = new;
            self.rgd_iters += 1;
            let ns = t0.elapsed().as_nanos();
            self.rgd_time += ns as f64 * 1e-9;
            self.record(Phase::Rgd, j, &s, step, 0, ns, false);
        }
    }

    fn newton_phase(&mut self, mut s: State, g0: f64, inexact: bool) -> Result<(State, RunStatus)> {
        let nw = self.cfg.newton;
        let metric = &self.cfg.metric;
        let stop = self.threshold(self.cfg.tol, g0);
        let dims = s.x.dims();
        for j in 1..=self.cfg.newton_mxit {
            if s.grad_norm <= stop {
                return Ok((s, RunStatus::Converged));
            }
            let t0 = Instant::now();
            let at = metric.at(&s.x)?;
            let op = HessianOperator::with_gradient(at, self.cost, s.egrad.clone());
            let (z, inner) = if inexact {
                let cap = nw.max_inner.unwrap_or(dims.n * dims.k);
                let (z, rep) = solve_newton_krylov(&op, nw.eta, nw.mu, cap);
                (z.into_matrix(), rep.iterations)
            } else {
                match solve_newton_direct(&op) {
                    Ok(sol) => (sol.z.into_matrix(), sol.a_solves),
                    Err(_) => {
                        let (z, rep) = solve_newton_krylov(&op, 1e-12, 0.0, dims.manifold_dim());
                        (z.into_matrix(), rep.iterations)
                    }
                }
            };
            let at = op.metric_at();
            let grad = op.gradient();
            let mut slope = at.inner(&z, grad);
            let mut z = z;
            let mut fallback = false;
            if !(slope <= -1e-12 * at.norm(&z) * at.norm(grad)) || z.iter().any(|v| !v.is_finite())
            {
                z = -grad;
                slope = -at.inner(grad, grad);
                fallback = true;
            }
            let mut gamma = 1.0;
            let mut accepted = None;
            for _ in 0..=nw.max_backtracks {
                if let Ok(r) = retract(self.cfg.retraction, &s.x, &(&z * gamma)) {
                    let f_new = self.cost.value(r.point.matrix());
                    if f_new.is_finite()
                        && f_new <= s.f + nw.damping_beta * gamma * slope + round_slack(s.f, f_new)
                    {
                        accepted = Some(r);
                        break;
                    }
                }
                gamma *= nw.damping_delta;
            }
            let Some(r) = accepted else {
                return Ok((s, RunStatus::Stagnated));
            };
            self.resym += r.resymplecticized as usize;
            s = State::new(metric, self.cost, r.point)?;
            self.newton_iters += 1;
            let ns = t0.elapsed().as_nanos();
            self.newton_time += ns as f64 * 1e-9;
            self.record(Phase::Newton, j, &s, gamma, inner, ns, fallback);
        }
        if s.grad_norm <= stop {
            Ok((s, RunStatus::Converged))
        } else {
            Ok((s, RunStatus::MaxIterations))
        }
    }
}

fn start<'c>(
    cfg: &'c OptimizerConfig,
    cost: &'c dyn CostFunction,
    x0: &SymplecticPoint,
    phase: Phase,
) -> Result<(Run<'c>, State, f64)> {
    cfg.validate()?;
    let s = State::new(&cfg.metric, cost, x0.clone())?;
    let g0 = s.grad_norm;
    let mut run = Run::new(cfg, cost);
    run.record(phase, 0, &s, 0.0, 0, 0, false);
    Ok((run, s, g0))
}

/// Riemannian gradient descent with a non-monotone line search.
pub fn rgd(
    cfg: &OptimizerConfig,
    cost: &dyn CostFunction,
    x0: &SymplecticPoint,
) -> Result<RunReport> {
    let (mut run, s, g0) = start(cfg, cost, x0, Phase::Rgd)?;
    let (s, status) = run.rgd_phase(s, g0, cfg.tol, cfg.mxit)?;
    Ok(run.finish(s, status, g0))
}

/// Damped Riemannian Newton. `inexact` selects MINRES with the forcing
/// term; otherwise the Newton equation is solved exactly.
pub fn newton(
    cfg: &OptimizerConfig,
    cost: &dyn CostFunction,
    x0: &SymplecticPoint,
    inexact: bool,
) -> Result<RunReport> {
    let (mut run, s, g0) = start(cfg, cost, x0, Phase::Newton)?;
    let (s, status) = run.newton_phase(s, g0, inexact)?;
    Ok(run.finish(s, status, g0))
}

/// Second phase of the hybrid method.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SecondPhase {
    Exact,
    Inexact,
}

/// RGD until the relative gradient norm drops below `theta`, then Newton.
pub fn hybrid(
    cfg: &OptimizerConfig,
    cost: &dyn CostFunction,
    x0: &SymplecticPoint,
    second: SecondPhase,
) -> Result<RunReport> {
    let (mut run, s, g0) = start(cfg, cost, x0, Phase::Rgd)?;
    let (s, status) = run.rgd_phase(s, g0, cfg.theta, cfg.mxit)?;
    if status != RunStatus::Converged {
        let status = if status == RunStatus::MaxIterations {
            RunStatus::SwitchFailed
        } else {
            status
        };
        return Ok(run.finish(s, status, g0));
    }
    let (s, status) = run.newton_phase(s, g0, second == SecondPhase::Inexact)?;
    Ok(run.finish(s, status, g0))
}

/// `‖grad f(X)‖_X`.
pub fn gradient_norm(metric: &Metric, cost: &dyn CostFunction, x: &SymplecticPoint) -> Result<f64> {
    let at = metric.at(x)?;
    Ok(at.norm(at.gradient(&cost.gradient(x.matrix())).matrix()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SpdMatrix;
    use crate::manifold::ManifoldDims;
    use crate::problems::{least_squares_instance, trace_instance, LeastSquares};

    fn weighted(cost: &dyn CostFunction) -> Metric {
        Metric::weighted(SpdMatrix::new(cost.constant_hessian().unwrap().clone()).unwrap())
    }

    #[test]
    fn validation() {
        let mut c = OptimizerConfig::new(Metric::euclidean(), RetractionKind::Sr);
        assert!(c.validate().is_ok());
        c.theta = c.tol / 2.0;
        assert!(c.validate().is_err());
        let mut c = OptimizerConfig::new(Metric::euclidean(), RetractionKind::Sr);
        c.line_search.gamma0 = 1e6;
        assert!(c.validate().is_err());
    }

    #[test]
    fn monotone_toy() {
        let a = Matrix::from_row_slice(2, 2, &[2.0, 0.3, 0.1, 0.7]);
        let b = Matrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        let cost = LeastSquares::new(a, b).unwrap();
        let x0 = SymplecticPoint::canonical(ManifoldDims::new(1, 1).unwrap());
        let mut cfg = OptimizerConfig::new(Metric::euclidean(), RetractionKind::Sr);
        cfg.line_search.alpha = 0.0;
        cfg.tol = 1e-9;
        let rep = rgd(&cfg, &cost, &x0).unwrap();
        assert_eq!(rep.status, RunStatus::Converged);
        for w in rep.records.windows(2) {
            assert!(w[1].f <= w[0].f + round_slack(w[0].f, w[1].f));
        }
    }

    #[test]
    fn hybrid_least_squares() {
        let p = least_squares_instance(10, 2, 1).unwrap();
        let x0 = p.start().unwrap();
        for second in [SecondPhase::Exact, SecondPhase::Inexact] {
            let cfg = OptimizerConfig::new(weighted(p.cost.as_ref()), RetractionKind::Sr);
            let rep = hybrid(&cfg, p.cost.as_ref(), &x0, second).unwrap();
            assert_eq!(rep.status, RunStatus::Converged, "{second:?}");
            assert!(rep.f <= 1e-9, "{second:?} f {}", rep.f);
            assert!(rep.newton_iters <= 10);
            assert!(p.relative_distance(rep.x.matrix()).unwrap() <= 1e-6);
        }
    }

    #[test]
    fn zero_gradient_returns_immediately() {
        let p = least_squares_instance(4, 1, 3).unwrap();
        let xmin = SymplecticPoint::new(p.known_minimizer.clone().unwrap()).unwrap();
        let mut cfg = OptimizerConfig::new(Metric::euclidean(), RetractionKind::Cayley);
        cfg.stop = StopRule::Absolute;
        cfg.tol = 1e-8;
        let rep = newton(&cfg, p.cost.as_ref(), &xmin, false).unwrap();
        assert_eq!(rep.status, RunStatus::Converged);
        assert_eq!(rep.newton_iters, 0);
        assert_eq!(rep.x.matrix(), xmin.matrix());
    }

    #[test]
    fn trace_rgd_weighted() {
        let p = trace_instance(20, 2, 5).unwrap();
        let mut cfg = OptimizerConfig::new(weighted(p.cost.as_ref()), RetractionKind::Sr);
        cfg.tol = 1e-8;
        let rep = rgd(&cfg, p.cost.as_ref(), &p.start().unwrap()).unwrap();
        assert_eq!(rep.status, RunStatus::Converged);
        assert!((rep.f - 3.0).abs() <= 1e-6, "{}", rep.f);
    }

    #[test]
    fn switch_failure_reported() {
        let p = least_squares_instance(6, 2, 2).unwrap();
        let mut cfg = OptimizerConfig::new(Metric::euclidean(), RetractionKind::Sr);
        cfg.mxit = 2;
        cfg.theta = 1e-6;
        cfg.tol = 1e-10;
        let rep = hybrid(
            &cfg,
            p.cost.as_ref(),
            &p.start().unwrap(),
            SecondPhase::Exact,
        )
        .unwrap();
        assert_eq!(rep.status, RunStatus::SwitchFailed);
        assert_eq!(rep.newton_iters, 0);
    }
}
