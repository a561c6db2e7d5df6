//! Experiment configuration files.
//!
//! A config is a TOML document:
//!
//! ```toml
//! name = "table2"
//! output = "out/table2"        # relative to the config file
//! tol = 1e-10
//! theta = 1e-4
//! mxit = 5000
//! newton_mxit = 50
//! methods = ["RGD", "hRN", "hRiN"]
//! metrics = ["e", "M"]
//! retractions = ["Cay", "SR"]
//! # schemes = ["RGD-SR-M", "hRN-Cay-e"]   # replaces the product above
//!
//! [theta_by_metric]
//! e = 1e-5
//!
//! [problem]
//! family = "least-squares"
//! n = 50
//! k = 6
//! seed = 1
//! ```
//!
//! Problem families: `least-squares`, `trace`, `gyroscopic`, `quartic`
//! (generated from `n`, `k`, `seed`) and `least-squares-files`,
//! `trace-file` (Matrix Market paths `a`, `b`, `x0`).

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use sympstiefel::mtx::read_matrix_market;
use sympstiefel::problems::{
    gyroscopic_trace_instance, least_squares_instance, least_squares_problem, quartic_instance,
    trace_instance, trace_problem_from,
};
use sympstiefel::{ManifoldDims, Metric, Problem, RetractionKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Rgd,
    Rn,
    Rin,
    Hrn,
    Hrin,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Rgd => "RGD",
            Method::Rn => "RN",
            Method::Rin => "RiN",
            Method::Hrn => "hRN",
            Method::Hrin => "hRiN",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "RGD" => Method::Rgd,
            "RN" => Method::Rn,
            "RiN" => Method::Rin,
            "hRN" => Method::Hrn,
            "hRiN" => Method::Hrin,
            _ => bail!("unknown method '{s}' (expected RGD, RN, RiN, hRN or hRiN)"),
        })
    }

    pub fn is_hybrid(&self) -> bool {
        matches!(self, Method::Hrn | Method::Hrin)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetricKind {
    Canonical,
    Euclidean,
    Weighted,
}

impl MetricKind {
    pub fn label(&self) -> &'static str {
        match self {
            MetricKind::Canonical => "c",
            MetricKind::Euclidean => "e",
            MetricKind::Weighted => "M",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "c" => MetricKind::Canonical,
            "e" => MetricKind::Euclidean,
            "M" => MetricKind::Weighted,
            _ => bail!("unknown metric '{s}' (expected c, e or M)"),
        })
    }
}

/// A `method-retraction-metric` triple such as `hRiN-SR-M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scheme {
    pub method: Method,
    pub retraction: RetractionKind,
    pub metric: MetricKind,
}

impl Scheme {
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split('-').collect();
        let [m, r, g] = parts[..] else {
            bail!("scheme '{s}' is not of the form METHOD-RETRACTION-METRIC");
        };
        let retraction = match r {
            "Cay" => RetractionKind::Cayley,
            "SR" => RetractionKind::Sr,
            _ => bail!("unknown retraction '{r}' in scheme '{s}'"),
        };
        Ok(Self {
            method: Method::parse(m)?,
            retraction,
            metric: MetricKind::parse(g)?,
        })
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}-{}-{}",
            self.method.label(),
            self.retraction.label(),
            self.metric.label()
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub family: String,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub a: Option<PathBuf>,
    #[serde(default)]
    pub b: Option<PathBuf>,
    #[serde(default)]
    pub x0: Option<PathBuf>,
    /// Known minimal value for file-based trace data.
    #[serde(default)]
    pub min_value: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default)]
    pub theta_by_metric: BTreeMap<String, f64>,
    #[serde(default = "default_mxit")]
    pub mxit: usize,
    #[serde(default = "default_newton_mxit")]
    pub newton_mxit: usize,
    /// ρ of the canonical-like metric.
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default)]
    pub methods: Vec<String>,
    #[serde(default)]
    pub metrics: Vec<String>,
    #[serde(default)]
    pub retractions: Vec<String>,
    #[serde(default)]
    pub schemes: Option<Vec<String>>,
    pub problem: ProblemSpec,
}

fn default_name() -> String {
    "experiment".into()
}
fn default_output() -> PathBuf {
    "out".into()
}
fn default_tol() -> f64 {
    1e-10
}
fn default_theta() -> f64 {
    1e-4
}
fn default_mxit() -> usize {
    5000
}
fn default_newton_mxit() -> usize {
    50
}
fn default_rho() -> f64 {
    1.0
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).context("parsing experiment config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    /// The scheme list: explicit `schemes` if given, else the product
    /// `methods × retractions × metrics`.
    pub fn schemes(&self) -> Result<Vec<Scheme>> {
        if let Some(list) = &self.schemes {
            return list.iter().map(|s| Scheme::parse(s)).collect();
        }
        let mut out = Vec::new();
        for m in &self.methods {
            let method = Method::parse(m)?;
            for r in &self.retractions {
                let retraction = RetractionKind::from_label(r)
                    .ok_or_else(|| anyhow!("unknown retraction '{r}'"))?;
                for g in &self.metrics {
                    out.push(Scheme {
                        method,
                        retraction,
                        metric: MetricKind::parse(g)?,
                    });
                }
            }
        }
        Ok(out)
    }

    pub fn theta_for(&self, metric: MetricKind) -> f64 {
        self.theta_by_metric
            .get(metric.label())
            .copied()
            .unwrap_or(self.theta)
    }

    pub fn validate(&self) -> Result<()> {
        let schemes = self.schemes()?;
        if !(self.tol > 0.0) {
            bail!("tol must be positive");
        }
        for s in &schemes {
            if s.method.is_hybrid() && self.theta_for(s.metric) <= self.tol {
                bail!("scheme {s}: theta must exceed tol");
            }
        }
        for key in self.theta_by_metric.keys() {
            MetricKind::parse(key).with_context(|| "in [theta_by_metric]")?;
        }
        if self.mxit == 0 || self.newton_mxit == 0 {
            bail!("iteration caps must be positive");
        }
        if !(self.rho > 0.0) {
            bail!("rho must be positive");
        }
        let fam = self.problem.family.as_str();
        let generated = ["least-squares", "trace", "gyroscopic", "quartic"];
        let files = ["least-squares-files", "trace-file"];
        if generated.contains(&fam) {
            if self.problem.n.is_none() || (fam != "quartic" && self.problem.k.is_none()) {
                bail!("problem family '{fam}' needs n and k");
            }
        } else if files.contains(&fam) {
            if self.problem.a.is_none() {
                bail!("problem family '{fam}' needs a matrix path 'a'");
            }
            if fam == "least-squares-files"
                && (self.problem.b.is_none() || self.problem.x0.is_none())
            {
                bail!("least-squares-files needs paths 'b' and 'x0'");
            }
            if fam == "trace-file" && self.problem.k.is_none() {
                bail!("trace-file needs k");
            }
        } else {
            bail!("unknown problem family '{fam}'");
        }
        Ok(())
    }

    /// Builds the problem; relative file paths resolve against `base`.
    pub fn build_problem(&self, base: &Path) -> Result<Problem> {
        let p = &self.problem;
        let seed = p.seed.unwrap_or(1);
        let resolve = |q: &Option<PathBuf>| -> Result<PathBuf> {
            let q = q.as_ref().ok_or_else(|| anyhow!("missing path"))?;
            Ok(if q.is_absolute() {
                q.clone()
            } else {
                base.join(q)
            })
        };
        let problem = match p.family.as_str() {
            "least-squares" => least_squares_instance(p.n.unwrap(), p.k.unwrap(), seed)?,
            "trace" => trace_instance(p.n.unwrap(), p.k.unwrap(), seed)?,
            "gyroscopic" => gyroscopic_trace_instance(p.n.unwrap(), p.k.unwrap())?,
            "quartic" => quartic_instance(p.n.unwrap(), seed)?,
            "least-squares-files" => {
                let a = read_matrix_market(resolve(&p.a)?)?;
                let b = read_matrix_market(resolve(&p.b)?)?;
                let x0 = read_matrix_market(resolve(&p.x0)?)?;
                least_squares_problem(a, b, x0)?
            }
            "trace-file" => {
                let a = read_matrix_market(resolve(&p.a)?)?;
                let dims = ManifoldDims::new(a.nrows() / 2, p.k.unwrap())?;
                trace_problem_from(a, dims, p.min_value, None)?
            }
            other => bail!("unknown problem family '{other}'"),
        };
        Ok(problem)
    }

    pub fn metric(&self, kind: MetricKind, problem: &Problem) -> Result<Metric> {
        Ok(match kind {
            MetricKind::Canonical => Metric::canonical(self.rho)?,
            MetricKind::Euclidean => Metric::euclidean(),
            MetricKind::Weighted => {
                Metric::weighted(problem.weight.clone().ok_or_else(|| {
                    anyhow!("problem '{}' has no weight for metric M", problem.name)
                })?)
            }
        })
    }
}
