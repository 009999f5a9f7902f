use rayon::ThreadPool;

use super::report::{ExperimentReport, PathRecord, Provenance, ReportRow, RowKind};
use super::stats::Estimate;
use super::{par_map, ExperimentKind, ExperimentPlan};
use crate::error::Result;
use crate::potential::PotentialMode;
use crate::solver::{mass_gap, Scheme};

/// Limit-scheme paths must conserve the mean to this absolute tolerance.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Plain ensemble of `paths` trajectories of the configured problem.
pub(super) fn run(plan: &ExperimentPlan, pool: &ThreadPool) -> Result<ExperimentReport> {
    let config = &plan.config;
    let paths = plan.paths();
    let stepper = config.stepper()?;
    let phi0 = config.initial_field(&stepper.grid)?;
    let dt = stepper.params.dt;
    let noise_paths = (0..paths)
        .map(|m| config.noise_path(m as u64, dt))
        .collect::<Result<Vec<_>>>()?;
    let keep = config.output.snapshots;
    let records = par_map(pool, paths, |m| {
        stepper.run(phi0.clone(), Some(&noise_paths[m]), config.time.record_every, keep && m == 0)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut report = ExperimentReport::new(Provenance::new(ExperimentKind::Simulate, config, paths));
    let gaps: Vec<f64> = records.iter().map(mass_gap).collect();
    let sups: Vec<f64> = records.iter().map(|r| r.max_sup()).collect();
    let final_energy: Vec<f64> = records
        .iter()
        .filter(|r| r.is_complete())
        .filter_map(|r| r.energy_yosida.last().copied())
        .collect();
    report.push(ReportRow::cell("mass_gap", 0.0, Estimate::from_samples(&gaps)));
    report.push(ReportRow::cell("max_abs_phi", 0.0, Estimate::from_samples(&sups)));
    report.push(ReportRow::cell("final_energy_yosida", 0.0, Estimate::from_samples(&final_energy)));

    let failed: Vec<usize> = (0..paths).filter(|&m| !records[m].is_complete()).collect();
    let note = match failed.first() {
        Some(&m) => format!("path {m}: {}", records[m].failure.as_deref().unwrap_or_default()),
        None => String::new(),
    };
    report.push(ReportRow::check("paths_completed", failed.is_empty(), (paths - failed.len()) as f64, note).with_samples(paths));

    let worst_gap = gaps.iter().copied().fold(0.0, f64::max);
    match stepper.params.scheme {
        Scheme::Limit => report.push(ReportRow::check(
            "mass_conservation",
            worst_gap <= MASS_TOLERANCE,
            worst_gap,
            format!("bound={MASS_TOLERANCE:e}"),
        )),
        Scheme::Regularized => report.push(ReportRow::value(RowKind::Fit, "max_mass_gap", worst_gap)),
    }
    if stepper.params.mode == PotentialMode::Exact {
        let worst = sups.iter().copied().fold(0.0, f64::max);
        report.push(ReportRow::check("bounded", worst < 1.0, worst, "bound=1"));
    }
    if stepper.noise.is_silent() && stepper.params.kappa >= stepper.spec.c_r() {
        let rise = records
            .iter()
            .flat_map(|r| r.energy_yosida.windows(2).map(|w| w[1] - w[0]))
            .fold(f64::NEG_INFINITY, f64::max);
        report.push(ReportRow::check("energy_nonincreasing", rise <= 1e-10, rise, "largest increase between samples; bound=1e-10"));
    }
    report.paths = records
        .into_iter()
        .enumerate()
        .map(|(m, record)| PathRecord { name: format!("path_{m:04}"), record })
        .collect();
    Ok(report)
}
