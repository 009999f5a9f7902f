use rayon::ThreadPool;

use super::report::{ExperimentReport, PathRecord, Provenance, ReportRow, RowKind, Status};
use super::stats::{Estimate, LinearFit};
use super::{label, par_map, ExperimentKind, ExperimentPlan};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::operators::ResolventParams;
use crate::potential::{PotentialMode, YosidaParams};
use crate::solver::{mass_gap, Scheme, Stepper, TrajectoryRecord};

pub const MIN_SLOPE: f64 = 0.4;
pub const MIN_R_SQUARED: f64 = 0.95;
/// Gaps at or below this are indistinguishable from rounding.
pub const DEGENERATE_GAP: f64 = 1e-12;
/// Largest tolerated fraction of failed paths per cell.
pub const MAX_FAILURE_FRACTION: f64 = 0.01;

fn cell_stepper(config: &RunConfig, lambda: f64) -> Result<Stepper> {
    let mut stepper = config.stepper()?;
    stepper.params.yosida = YosidaParams { lambda, ..stepper.params.yosida };
    stepper.params.resolvent = Some(ResolventParams::new(lambda / 2.0)?);
    stepper.params.validate()?;
    Ok(stepper)
}

pub(super) fn run(plan: &ExperimentPlan, pool: &ThreadPool) -> Result<ExperimentReport> {
    let config = &plan.config;
    if config.problem.scheme != Scheme::Regularized || config.potential.mode != PotentialMode::Yosida {
        return Err(Error::Config(
            "the mass-gap study needs scheme = \"regularized\" and mode = \"yosida\"".into(),
        ));
    }
    let lambdas = &config.experiment.lambdas;
    let paths = plan.paths();
    let p = config.experiment.p;
    let steppers = lambdas
        .iter()
        .map(|&l| cell_stepper(config, l))
        .collect::<Result<Vec<_>>>()?;
    let phi0 = config.initial_field(&steppers[0].grid)?;
    let dt = config.time.dt;
    let noise_paths = (0..paths)
        .map(|m| config.noise_path(m as u64, dt))
        .collect::<Result<Vec<_>>>()?;

    let jobs = lambdas.len() * paths;
    let records: Vec<TrajectoryRecord> = par_map(pool, jobs, |j| {
        let (cell, m) = (j / paths, j % paths);
        steppers[cell].run(phi0.clone(), Some(&noise_paths[m]), config.time.record_every, false)
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let mut report = ExperimentReport::new(Provenance::new(ExperimentKind::MassGap, config, paths));
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut all_degenerate = true;
    let mut aborted = false;
    for (cell, &lambda) in lambdas.iter().enumerate() {
        let cell_records = &records[cell * paths..(cell + 1) * paths];
        let gaps: Vec<f64> = cell_records.iter().filter(|r| r.is_complete()).map(mass_gap).collect();
        let failures = paths - gaps.len();
        if failures as f64 > MAX_FAILURE_FRACTION * paths as f64 {
            aborted = true;
            let first = cell_records.iter().find_map(|r| r.failure.clone()).unwrap_or_default();
            report.push(
                ReportRow::check("cell_failures", false, failures as f64, format!("cell aborted; {first}"))
                    .with_parameter(lambda)
                    .with_samples(paths),
            );
            continue;
        }
        all_degenerate &= gaps.iter().all(|&g| g <= DEGENERATE_GAP);
        let estimate = Estimate::moment_root(&gaps, p);
        report.push(
            ReportRow::cell(format!("gap_moment_p{p}"), lambda, estimate)
                .with_note(format!("xi={}; failed={failures}", lambda / 2.0)),
        );
        let half = Estimate::moment_root(&gaps[..gaps.len().div_ceil(2)], p);
        report.push(ReportRow::cell(format!("gap_moment_p{p}_half"), lambda, half));
        if estimate.mean > 0.0 {
            xs.push(lambda.ln());
            ys.push(estimate.mean.ln());
        }
    }

    if aborted {
        report.push(ReportRow::check("mass_gap_slope", false, f64::NAN, "not evaluated: aborted cells"));
    } else if all_degenerate {
        report.push(ReportRow::check("mass_gap_slope", true, f64::NAN, "degenerate: every gap at rounding level"));
    } else {
        match LinearFit::fit(&xs, &ys) {
            Some(fit) => {
                let ci = fit
                    .slope_interval(0.95)
                    .map(|(lo, hi)| format!("ci95=[{lo:.4};{hi:.4}]"))
                    .unwrap_or_else(|| "ci95 unavailable".into());
                report.push(
                    ReportRow::value(RowKind::Fit, "slope", fit.slope)
                        .with_samples(fit.points)
                        .with_note(ci),
                );
                let mut se = ReportRow::value(RowKind::Fit, "slope_std_error", fit.slope_std_error);
                se.samples = fit.points;
                report.push(se);
                report.push(ReportRow::value(RowKind::Fit, "intercept", fit.intercept));
                report.push(ReportRow::value(RowKind::Fit, "r_squared", fit.r_squared));
                let ok = fit.slope >= MIN_SLOPE && fit.r_squared >= MIN_R_SQUARED;
                report.push(ReportRow::check(
                    "mass_gap_slope",
                    ok,
                    fit.slope,
                    format!("need slope>={MIN_SLOPE} and r2>={MIN_R_SQUARED}; r2={:.4}", fit.r_squared),
                ));
            }
            None => report.push(
                ReportRow::check("mass_gap_slope", false, f64::NAN, "fewer than two usable cells")
                    .with_status(Status::Fail),
            ),
        }
    }

    report.paths = records
        .into_iter()
        .enumerate()
        .map(|(j, record)| PathRecord {
            name: format!("lambda_{}_path_{:04}", label(lambdas[j / paths]), j % paths),
            record,
        })
        .collect();
    Ok(report)
}
