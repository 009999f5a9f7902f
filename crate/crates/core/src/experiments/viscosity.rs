use rayon::ThreadPool;

use super::coupled::{run_coupled, Member};
use super::report::{ExperimentReport, PathRecord, Provenance, ReportRow, Status};
use super::simulate::MASS_TOLERANCE;
use super::stats::Estimate;
use super::{label, par_map, ExperimentKind, ExperimentPlan};
use crate::error::{Error, Result};
use crate::operators::MixedOperatorParams;
use crate::solver::{mass_gap, Scheme, Stepper, TrajectoryRecord};

struct PathOutcome {
    /// `sup_t ||phi_alpha - phi_0||` per grid entry.
    distances: Vec<f64>,
    records: Vec<TrajectoryRecord>,
    failure: Option<(usize, String)>,
}

/// Coupled runs of `alpha` in the grid against the pure Allen-Cahn
/// reference `alpha = 0`, all with `beta = 1` and the same Brownian path.
pub(super) fn run(plan: &ExperimentPlan, pool: &ThreadPool) -> Result<ExperimentReport> {
    let config = &plan.config;
    if config.problem.beta != 1.0 {
        return Err(Error::Config(format!(
            "the viscosity sweep needs beta = 1, got {}",
            config.problem.beta
        )));
    }
    if config.problem.scheme != Scheme::Limit {
        return Err(Error::Config("the viscosity sweep runs the limit scheme".into()));
    }
    let alphas = &config.experiment.alphas;
    let paths = plan.paths();
    let base = config.stepper()?;
    let with_alpha = |alpha: f64| -> Result<Stepper> {
        let mut s = base.clone();
        s.params.operator = MixedOperatorParams::new(alpha, 1.0)?;
        Ok(s)
    };
    let mut steppers = vec![with_alpha(0.0)?];
    for &a in alphas {
        steppers.push(with_alpha(a)?);
    }
    let phi0 = config.initial_field(&base.grid)?;
    let dt = config.time.dt;
    let ticks = base.params.num_steps()?;

    let outcomes = par_map(pool, paths, |m| -> Result<PathOutcome> {
        let path = config.noise_path(m as u64, dt)?;
        let members: Vec<Member> = steppers
            .iter()
            .map(|s| Member::new(s, &phi0, 1, Some(&path)))
            .collect();
        let mut distances = vec![0.0f64; alphas.len()];
        let outcome = run_coupled(&members, ticks, config.time.record_every, |_, states, _| {
            for (d, s) in distances.iter_mut().zip(&states[1..]) {
                *d = d.max(s.phi.sub(&states[0].phi).l2_norm());
            }
        });
        Ok(PathOutcome {
            distances,
            records: outcome.records,
            failure: outcome.failure,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut report = ExperimentReport::new(Provenance::new(ExperimentKind::ViscositySweep, config, paths));
    let noise = &base.noise;
    report.push(
        ReportRow::check("lg_squared_below_half", noise.lg_squared() < 0.5, noise.lg_squared(), "smallness flag L_G^2 < 1/2")
            .with_status(Status::Info),
    );
    report.push(
        ReportRow::check("lg_at_most_sqrt2", noise.within_sqrt2(), noise.lg(), "smallness flag L_G <= sqrt 2")
            .with_status(Status::Info),
    );

    if let Some((m, (member, reason))) = outcomes
        .iter()
        .enumerate()
        .find_map(|(m, o)| o.failure.as_ref().map(|f| (m, f)))
    {
        let alpha = if *member == 0 { 0.0 } else { alphas[member - 1] };
        report.push(
            ReportRow::check("blow_up", false, alpha, format!("path {m} alpha={alpha}: {reason}")).with_parameter(alpha),
        );
    }

    let mut means = Vec::new();
    for (i, &alpha) in alphas.iter().enumerate() {
        let samples: Vec<f64> = outcomes
            .iter()
            .filter(|o| o.failure.is_none())
            .map(|o| o.distances[i])
            .collect();
        let e = Estimate::from_samples(&samples);
        means.push(e.mean);
        report.push(ReportRow::cell("e_alpha", alpha, e));
    }
    let monotone = means.windows(2).all(|w| w[0] > w[1]);
    report.push(ReportRow::check(
        "e_monotone_in_alpha",
        monotone,
        means.last().copied().unwrap_or(0.0),
        "path-averaged sup_t ||phi_alpha - phi_0||_H strictly decreasing along the descending alpha grid",
    ));

    let max_sup = outcomes
        .iter()
        .flat_map(|o| o.records.iter().map(|r| r.max_sup()))
        .fold(0.0, f64::max);
    report.push(ReportRow::check("bounded", max_sup <= 1.0, max_sup, "bound=1"));
    let drift = outcomes
        .iter()
        .flat_map(|o| o.records.iter().map(mass_gap))
        .fold(0.0, f64::max);
    report.push(ReportRow::check("mass_conservation", drift <= MASS_TOLERANCE, drift, format!("bound={MASS_TOLERANCE:e}")));
    report.push(
        ReportRow::check(
            "explicit_constant",
            true,
            noise.lg_squared(),
            "the small-noise constant is not explicit; convergence is demonstrated on coupled paths only",
        )
        .with_status(Status::Info),
    );

    for (m, o) in outcomes.into_iter().enumerate() {
        for (i, record) in o.records.into_iter().enumerate() {
            let alpha = if i == 0 { 0.0 } else { alphas[i - 1] };
            report.paths.push(PathRecord {
                name: format!("alpha_{}_path_{m:04}", label(alpha)),
                record,
            });
        }
    }
    Ok(report)
}
