use rayon::ThreadPool;

use super::coupled::{run_coupled, Member};
use super::report::{ExperimentReport, PathRecord, Provenance, ReportRow, Status};
use super::stats::Estimate;
use super::{label, par_map, ExperimentKind, ExperimentPlan};
use crate::error::{Error, Result};
use crate::operators::ResolventParams;
use crate::potential::{PotentialMode, YosidaParams};
use crate::solver::{Scheme, Stepper, TrajectoryRecord};

/// The limit-scheme reference is only compared while it stays below this.
pub const REFERENCE_SUP: f64 = 0.95;

struct PathOutcome {
    /// `sup_t ||phi_{lambda_{i+1}} - phi_{lambda_i}||`.
    cauchy: Vec<f64>,
    /// `sup_t ||phi_lambda - phi_ref||`, when the reference stayed admissible.
    reference: Option<Vec<f64>>,
    records: Vec<TrajectoryRecord>,
    failure: Option<(usize, String)>,
}

/// Coupled regularized runs along a descending lambda grid (`xi = lambda / 2`),
/// plus an exact-potential limit-scheme reference on the same path.
pub(super) fn run(plan: &ExperimentPlan, pool: &ThreadPool) -> Result<ExperimentReport> {
    let config = &plan.config;
    if config.problem.scheme != Scheme::Regularized || config.potential.mode != PotentialMode::Yosida {
        return Err(Error::Config(
            "the Yosida sweep needs scheme = \"regularized\" and mode = \"yosida\"".into(),
        ));
    }
    let lambdas = &config.experiment.lambdas;
    let paths = plan.paths();
    let base = config.stepper()?;
    let mut steppers = Vec::new();
    for &lambda in lambdas {
        let mut s = base.clone();
        s.params.yosida = YosidaParams { lambda, ..s.params.yosida };
        s.params.resolvent = Some(ResolventParams::new(lambda / 2.0)?);
        s.params.validate()?;
        steppers.push(s);
    }
    let mut reference: Stepper = base.clone();
    reference.params.scheme = Scheme::Limit;
    reference.params.mode = PotentialMode::Exact;
    reference.params.resolvent = None;
    steppers.push(reference);

    let phi0 = config.initial_field(&base.grid)?;
    let dt = config.time.dt;
    let ticks = base.params.num_steps()?;
    let n = lambdas.len();

    let outcomes = par_map(pool, paths, |m| -> Result<PathOutcome> {
        let path = config.noise_path(m as u64, dt)?;
        let mut members: Vec<Member> = steppers[..n]
            .iter()
            .map(|s| Member::new(s, &phi0, 1, Some(&path)))
            .collect();
        members.push(Member::new(&steppers[n], &phi0, 1, Some(&path)).optional());
        let mut cauchy = vec![0.0f64; n.saturating_sub(1)];
        let mut distances = vec![0.0f64; n];
        let mut admissible = true;
        let outcome = run_coupled(&members, ticks, config.time.record_every, |_, states, alive| {
            for (i, c) in cauchy.iter_mut().enumerate() {
                *c = c.max(states[i + 1].phi.sub(&states[i].phi).l2_norm());
            }
            let r = &states[n].phi;
            admissible &= alive[n] && r.sup_norm() <= REFERENCE_SUP;
            if admissible {
                for (d, s) in distances.iter_mut().zip(&states[..n]) {
                    *d = d.max(s.phi.sub(r).l2_norm());
                }
            }
        });
        let mut records = outcome.records;
        records.truncate(n);
        Ok(PathOutcome {
            cauchy,
            reference: (admissible && outcome.alive[n]).then_some(distances),
            records,
            failure: outcome.failure,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut report = ExperimentReport::new(Provenance::new(ExperimentKind::YosidaSweep, config, paths));
    if let Some((m, (member, reason))) = outcomes
        .iter()
        .enumerate()
        .find_map(|(m, o)| o.failure.as_ref().map(|f| (m, f)))
    {
        report.push(
            ReportRow::check("domain", false, lambdas[*member], format!("path {m}: {reason}"))
                .with_parameter(lambdas[*member]),
        );
    }
    let good: Vec<&PathOutcome> = outcomes.iter().filter(|o| o.failure.is_none()).collect();
    let mut means = Vec::new();
    for i in 0..n.saturating_sub(1) {
        let e = Estimate::from_samples(&good.iter().map(|o| o.cauchy[i]).collect::<Vec<_>>());
        means.push(e.mean);
        report.push(
            ReportRow::cell("cauchy_difference", lambdas[i + 1], e)
                .with_note(format!("between lambda={} and lambda={}", lambdas[i], lambdas[i + 1])),
        );
    }
    let decreasing = means.windows(2).all(|w| w[1] < w[0]);
    let note = if means.is_empty() { "vacuous: single lambda" } else { "path-averaged Cauchy differences strictly decreasing" };
    report.push(ReportRow::check("cauchy_decreasing", decreasing, means.last().copied().unwrap_or(0.0), note));

    let with_reference: Vec<&Vec<f64>> = good.iter().filter_map(|o| o.reference.as_ref()).collect();
    report.push(
        ReportRow::check(
            "reference_paths",
            true,
            with_reference.len() as f64,
            format!("paths whose exact-potential reference stayed within |phi| <= {REFERENCE_SUP}"),
        )
        .with_status(Status::Info),
    );
    if !with_reference.is_empty() {
        for (i, &lambda) in lambdas.iter().enumerate() {
            let e = Estimate::from_samples(&with_reference.iter().map(|d| d[i]).collect::<Vec<_>>());
            report.push(ReportRow::cell("reference_distance", lambda, e));
        }
    }

    for (m, o) in outcomes.into_iter().enumerate() {
        for (i, record) in o.records.into_iter().enumerate() {
            report.paths.push(PathRecord {
                name: format!("lambda_{}_path_{m:04}", label(lambdas[i])),
                record,
            });
        }
    }
    Ok(report)
}
