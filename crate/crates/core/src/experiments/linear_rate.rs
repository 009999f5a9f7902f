use std::f64::consts::PI;

use super::report::{ExperimentReport, Provenance, ReportRow, RowKind};
use super::stats::LinearFit;
use super::{ExperimentKind, ExperimentPlan};
use crate::error::{Error, Result};
use crate::grid::SpectralField;
use crate::noise::NoiseModel;
use crate::potential::{PotentialMode, PotentialSpec};
use crate::solver::{ProblemParams, SolverState};

/// Relative tolerance between the measured and the linearized rate.
pub const RATE_TOLERANCE: f64 = 0.02;
/// Size of the `cos(2 pi x_0)` perturbation.
pub const PERTURBATION: f64 = 1e-6;

/// `-a(k) (|2 pi|^2 + F''(m))` for the first mode along axis 0.
pub fn expected_rate(spec: &PotentialSpec, params: &ProblemParams, m: f64) -> Result<f64> {
    let q = 4.0 * PI * PI;
    let f2 = match params.mode {
        PotentialMode::Exact => spec.psi_second(m)?,
        PotentialMode::Yosida => spec.yosida_second(m, &params.yosida)?,
    } - 2.0 * spec.theta0();
    Ok(-params.operator.symbol(q) * (q + f2))
}

/// Deterministic run from `m + eps cos(2 pi x_0)`, fitting `ln |phi_k|` over every step.
pub(super) fn run(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    let config = &plan.config;
    let mut stepper = config.stepper()?;
    stepper.noise = NoiseModel::silent(stepper.grid.dim());
    let grid = stepper.grid.clone();
    let m = config.initial_field(&grid)?.mean();
    let phi0 = SpectralField::from_fn(&grid, |x| m + PERTURBATION * (2.0 * PI * x[0]).cos())?;
    let mode = grid.len() / grid.points_per_axis();

    let steps = stepper.params.num_steps()?;
    if steps < 2 {
        return Err(Error::Config("the linear-rate run needs at least two steps".into()));
    }
    let mut state = SolverState::new(phi0.truncated());
    let mut times = vec![0.0];
    let mut logs = vec![state.phi.spectrum()[mode].norm().ln()];
    while state.step_index < steps {
        state = stepper.step(&state, None)?;
        times.push(state.time);
        logs.push(state.phi.spectrum()[mode].norm().ln());
    }
    let fit = LinearFit::fit(&times, &logs).ok_or_else(|| Error::param("degenerate rate fit"))?;
    let expected = expected_rate(&stepper.spec, &stepper.params, m)?;
    let error = (fit.slope - expected).abs() / expected.abs();

    let mut report = ExperimentReport::new(Provenance::new(ExperimentKind::LinearRate, config, 1));
    report.push(ReportRow::value(RowKind::Fit, "measured_rate", fit.slope).with_samples(fit.points));
    report.push(ReportRow::value(RowKind::Fit, "expected_rate", expected).with_parameter(m));
    report.push(ReportRow::value(RowKind::Fit, "r_squared", fit.r_squared));
    report.push(ReportRow::check(
        "linear_rate",
        error <= RATE_TOLERANCE,
        error,
        format!("relative error; bound={RATE_TOLERANCE}; dt={}", stepper.params.dt),
    ));
    Ok(report)
}
