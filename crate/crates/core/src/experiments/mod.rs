//! Experiment runners: ensembles of trajectories reduced to summary
//! statistics, fits and pass/fail contracts.
//!
//! Every runner is deterministic. Paths use stream `m` of the configured
//! seed for ensemble index `m`, the same stream is reused across parameter
//! cells (common random numbers), and results are reduced in cell/path order
//! regardless of the thread count.

mod coupled;
mod dependence;
mod linear_rate;
mod mass_gap;
pub mod properties;
mod report;
mod simulate;
pub mod stats;
mod viscosity;
mod yosida;

use rayon::prelude::*;
use rayon::ThreadPool;

pub use self::dependence::amplification_factor;
pub use self::linear_rate::expected_rate;
pub use self::properties::Fault;
pub use self::report::{ExperimentReport, PathRecord, Provenance, ReportRow, RowKind, Status, REPORT_HEADER};
use crate::config::RunConfig;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    Simulate,
    MassGap,
    ViscositySweep,
    YosidaSweep,
    Dependence,
    LinearRate,
    PropertySuite,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::MassGap => "mass-gap",
            ExperimentKind::ViscositySweep => "viscosity-sweep",
            ExperimentKind::YosidaSweep => "yosida-sweep",
            ExperimentKind::Dependence => "dependence",
            ExperimentKind::LinearRate => "linear-rate",
            ExperimentKind::PropertySuite => "properties",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentPlan {
    pub kind: ExperimentKind,
    pub config: RunConfig,
    pub threads: usize,
}

impl ExperimentPlan {
    pub fn new(kind: ExperimentKind, config: RunConfig, threads: usize) -> Result<Self> {
        let plan = ExperimentPlan { kind, config, threads };
        plan.validate()?;
        Ok(plan)
    }

    pub fn paths(&self) -> usize {
        self.config.experiment.paths
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let e = &self.config.experiment;
        if e.paths == 0 {
            return Err(Error::Config("experiment.paths must be at least 1".into()));
        }
        if !matches!(e.p, 2 | 4) {
            return Err(Error::Config(format!("moment order p must be 2 or 4, got {}", e.p)));
        }
        match self.kind {
            ExperimentKind::MassGap | ExperimentKind::YosidaSweep => {
                descending("experiment.lambdas", &e.lambdas, |l| l > 0.0 && l < 1.0)?
            }
            ExperimentKind::ViscositySweep => descending("experiment.alphas", &e.alphas, |a| a >= 0.0)?,
            ExperimentKind::Dependence => {
                descending("experiment.perturbations", &e.perturbations, |p| p >= 0.0)?;
                if !e.dts.is_empty() {
                    descending("experiment.dts", &e.dts, |d| d > 0.0)?;
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn run(&self) -> Result<ExperimentReport> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        match self.kind {
            ExperimentKind::Simulate => simulate::run(self, &pool),
            ExperimentKind::MassGap => mass_gap::run(self, &pool),
            ExperimentKind::ViscositySweep => viscosity::run(self, &pool),
            ExperimentKind::YosidaSweep => yosida::run(self, &pool),
            ExperimentKind::Dependence => dependence::run(self, &pool),
            ExperimentKind::LinearRate => linear_rate::run(self),
            ExperimentKind::PropertySuite => Ok(properties::run(&self.config, None, &pool)),
        }
    }
}

fn descending(name: &str, values: &[f64], admissible: impl Fn(f64) -> bool) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Config(format!("{name} must not be empty")));
    }
    if let Some(bad) = values.iter().find(|&&v| !admissible(v)) {
        return Err(Error::Config(format!("{name} contains inadmissible value {bad}")));
    }
    if values.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::Config(format!("{name} must be strictly descending")));
    }
    Ok(())
}

/// `f(0), ..., f(n - 1)` evaluated on `pool`, returned in index order.
pub(crate) fn par_map<T: Send>(pool: &ThreadPool, n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    pool.install(|| (0..n).into_par_iter().map(f).collect())
}

/// Compact parameter label for file names, e.g. `1e-3`.
pub(crate) fn label(v: f64) -> String {
    format!("{v:e}")
}
