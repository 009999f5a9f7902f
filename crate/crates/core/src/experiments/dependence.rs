use rayon::ThreadPool;

use super::coupled::{run_coupled, Member};
use super::report::{ExperimentReport, PathRecord, Provenance, ReportRow, RowKind, Status};
use super::stats::Estimate;
use super::{label, par_map, ExperimentKind, ExperimentPlan};
use crate::error::{Error, Result};
use crate::grid::SpectralField;
use crate::noise::NoiseModel;
use crate::operators::{dual_norm_sharp, MixedOperatorParams, ZERO_MEAN_TOL};
use crate::sampling::FieldSampler;
use crate::solver::{NoisePath, Scheme, Stepper, TrajectoryRecord};

/// Largest tolerated relative change of the amplification factor under refinement.
pub const STABILITY_TOLERANCE: f64 = 0.1;
/// Perturbation size of the Allen-Cahn uniqueness probe.
const PROBE_SIZE: f64 = 1e-3;
/// Used for the probe when the configured noise is too large.
const PROBE_LG_SQUARED: f64 = 0.1;

/// `sup_t ||phi_1(t) - phi_2(t)||_# / ||phi_1(0) - phi_2(0)||_#` with its time profile.
#[derive(Clone, Debug, PartialEq)]
pub struct Amplification {
    pub factor: f64,
    /// `(t, ||phi_1(t) - phi_2(t)||_# / ||phi_1(0) - phi_2(0)||_#)` at every step.
    pub profile: Vec<(f64, f64)>,
    /// Identical initial data: whether the trajectories stayed bit-equal.
    pub coincident: Option<bool>,
}

fn check_means(a: &SpectralField, b: &SpectralField) -> Result<()> {
    if (a.mean() - b.mean()).abs() > ZERO_MEAN_TOL {
        return Err(Error::param(format!(
            "initial data must have equal means, got {} and {}",
            a.mean(),
            b.mean()
        )));
    }
    Ok(())
}

/// Runs two trajectories from `phi01` and `phi02` on the same noise path.
pub fn amplification_factor(
    stepper: &Stepper,
    phi01: &SpectralField,
    phi02: &SpectralField,
    path: Option<&NoisePath>,
) -> Result<Amplification> {
    check_means(phi01, phi02)?;
    let op = stepper.params.operator;
    if !(op.alpha > 0.0) {
        return Err(Error::param("continuous dependence needs alpha > 0"));
    }
    let members = [
        Member::new(stepper, phi01, 1, path),
        Member::new(stepper, phi02, 1, path),
    ];
    let initial = dual_norm_sharp(&phi01.truncated().sub(&phi02.truncated()), &op)?;
    let mut profile = Vec::new();
    let mut coincident = true;
    let outcome = run_coupled(&members, stepper.params.num_steps()?, u64::MAX, |_, states, _| {
        coincident &= states[0].phi.values() == states[1].phi.values();
        let d = dual_norm_sharp(&states[0].phi.sub(&states[1].phi), &op).unwrap_or(f64::NAN);
        profile.push((states[0].time, if initial > 0.0 { d / initial } else { 0.0 }));
    });
    if let Some((_, reason)) = outcome.failure {
        return Err(Error::param(format!("dependence run failed: {reason}")));
    }
    let factor = profile.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(Amplification {
        factor,
        profile,
        coincident: (initial == 0.0).then_some(coincident),
    })
}

/// Smallest `C >= 0` with `R(t) <= exp(C t)`, `R` the running maximum of the profile.
pub fn gronwall_constant(profile: &[(f64, f64)]) -> f64 {
    let mut running = 0.0f64;
    let mut c = 0.0f64;
    for &(t, r) in profile {
        running = running.max(r);
        if t > 0.0 && running > 0.0 {
            c = c.max(running.ln() / t);
        }
    }
    c
}

struct PathOutcome {
    /// `factors[dt][eps]`.
    factors: Vec<Vec<f64>>,
    coincident: Vec<bool>,
    probe: Option<(bool, f64)>,
    records: Vec<TrajectoryRecord>,
}

pub(super) fn run(plan: &ExperimentPlan, pool: &ThreadPool) -> Result<ExperimentReport> {
    let config = &plan.config;
    let base = config.stepper()?;
    let op = base.params.operator;
    if !(op.alpha > 0.0) {
        return Err(Error::Config("the dependence check needs alpha > 0".into()));
    }
    let dt0 = config.time.dt;
    let dts = if config.experiment.dts.is_empty() {
        vec![dt0, dt0 / 2.0]
    } else {
        config.experiment.dts.clone()
    };
    let eps = &config.experiment.perturbations;
    let finest = *dts.last().expect("nonempty");
    let coarsest = dts[0];
    let substeps: Vec<u64> = dts
        .iter()
        .map(|&dt| {
            let r = coarsest / dt;
            if (r - r.round()).abs() > 1e-9 * r {
                Err(Error::Config(format!("dt {dt} does not divide {coarsest}")))
            } else {
                Ok(r.round() as u64)
            }
        })
        .collect::<Result<_>>()?;
    let ticks = {
        let n = config.time.t_end / coarsest;
        if (n - n.round()).abs() > 1e-9 * n.max(1.0) {
            return Err(Error::Config("t_end must be a multiple of every dt".into()));
        }
        n.round() as u64
    };
    let steppers: Vec<Stepper> = dts
        .iter()
        .map(|&dt| {
            let mut s = base.clone();
            s.params.dt = dt;
            s
        })
        .collect();

    let grid = base.grid.clone();
    let phi0 = config.initial_field(&grid)?;
    let direction = {
        let mut sampler = FieldSampler::new(config.noise.seed ^ 0x00de_9e0d);
        let v = sampler.band_limited(&grid, 4, 1.0).zero_mean();
        let norm = dual_norm_sharp(&v, &op)?;
        v.scale(1.0 / norm)
    };
    let perturbed: Vec<SpectralField> = eps
        .iter()
        .map(|&e| {
            let f = phi0.axpy(e, &direction);
            check_means(&phi0, &f)?;
            Ok(f)
        })
        .collect::<Result<_>>()?;
    let initial: Vec<f64> = perturbed
        .iter()
        .map(|f| dual_norm_sharp(&f.truncated().sub(&phi0.truncated()), &op))
        .collect::<Result<_>>()?;

    let probe = allen_cahn_probe(config, &base)?;
    let paths = plan.paths();
    let outcomes = par_map(pool, paths, |m| -> Result<PathOutcome> {
        let mut members = Vec::new();
        for (j, s) in steppers.iter().enumerate() {
            let path = config.noise_path(m as u64, dts[j]).map(|p| fine_path(p, dts[j], finest))?;
            members.push(Member::new(s, &phi0, substeps[j], Some(&path)));
            for f in &perturbed {
                members.push(Member::new(s, f, substeps[j], Some(&path)));
            }
        }
        let stride = 1 + eps.len();
        let mut sup = vec![vec![0.0f64; eps.len()]; dts.len()];
        let mut coincident = vec![true; eps.len()];
        let outcome = run_coupled(&members, ticks, config.time.record_every, |_, states, _| {
            for j in 0..dts.len() {
                let reference = &states[j * stride].phi;
                for (i, &d0) in initial.iter().enumerate() {
                    let other = &states[j * stride + 1 + i].phi;
                    if d0 == 0.0 {
                        coincident[i] &= other.values() == reference.values();
                    } else {
                        let d = dual_norm_sharp(&other.sub(reference), &op).unwrap_or(f64::NAN);
                        sup[j][i] = sup[j][i].max(d / d0);
                    }
                }
            }
        });
        if let Some((member, reason)) = outcome.failure {
            return Err(Error::param(format!("path {m}, member {member}: {reason}")));
        }
        let probe = match &probe {
            Some(p) => Some(p.run(m as u64)?),
            None => None,
        };
        Ok(PathOutcome {
            factors: sup,
            coincident,
            probe,
            records: outcome.records,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut report = ExperimentReport::new(Provenance::new(ExperimentKind::Dependence, config, paths));
    for (j, &dt) in dts.iter().enumerate() {
        for (i, &e) in eps.iter().enumerate() {
            let samples: Vec<f64> = outcomes.iter().map(|o| o.factors[j][i]).collect();
            report.push(ReportRow::cell(format!("amplification_dt_{}", label(dt)), e, Estimate::from_samples(&samples)));
        }
    }
    for (i, &e) in eps.iter().enumerate() {
        if initial[i] == 0.0 {
            let ok = outcomes.iter().all(|o| o.coincident[i]);
            report.push(
                ReportRow::check("exact_coincidence", ok, 0.0, "identical initial data; trajectories bit-equal")
                    .with_parameter(e),
            );
        }
    }

    let positive: Vec<usize> = (0..eps.len()).filter(|&i| initial[i] > 0.0).collect();
    let rel = |a: f64, b: f64| (b / a - 1.0).abs();
    let mut dt_change = 0.0f64;
    for &i in &positive {
        for j in 1..dts.len() {
            for o in &outcomes {
                dt_change = dt_change.max(rel(o.factors[j - 1][i], o.factors[j][i]));
            }
        }
    }
    let mut eps_change = 0.0f64;
    for j in 0..dts.len() {
        for w in positive.windows(2) {
            for o in &outcomes {
                eps_change = eps_change.max(rel(o.factors[j][w[0]], o.factors[j][w[1]]));
            }
        }
    }
    report.push(ReportRow::check(
        "dt_refinement_stability",
        dt_change < STABILITY_TOLERANCE,
        dt_change,
        format!("largest per-path relative change; bound={STABILITY_TOLERANCE}"),
    ));
    report.push(ReportRow::check(
        "perturbation_stability",
        eps_change < STABILITY_TOLERANCE,
        eps_change,
        format!("largest per-path relative change; bound={STABILITY_TOLERANCE}"),
    ));

    // deterministic Gronwall profile
    if let Some(&i) = positive.last() {
        let mut det = steppers[0].clone();
        det.noise = NoiseModel::silent(grid.dim());
        let a = amplification_factor(&det, &phi0, &perturbed[i], None)?;
        report.push(ReportRow::value(RowKind::Fit, "deterministic_factor", a.factor).with_parameter(eps[i]));
        report.push(
            ReportRow::value(RowKind::Fit, "gronwall_c", gronwall_constant(&a.profile))
                .with_note("smallest C with running-max factor <= exp(C t)"),
        );
    }

    match outcomes.first().and_then(|o| o.probe) {
        None => report.push(
            ReportRow::check("allen_cahn_probe", true, f64::NAN, "skipped: probe runs in one dimension only")
                .with_status(Status::Info),
        ),
        Some(_) => {
            let identical = outcomes.iter().all(|o| o.probe.map(|p| p.0).unwrap_or(false));
            report.push(ReportRow::check(
                "allen_cahn_identical_runs",
                identical,
                0.0,
                "alpha=0 beta=1: identical data and path give bit-equal trajectories",
            ));
            let ratios: Vec<f64> = outcomes.iter().filter_map(|o| o.probe.map(|p| p.1)).collect();
            let contracted = ratios.iter().filter(|&&r| r <= 1.0).count();
            report.push(
                ReportRow::cell("allen_cahn_final_ratio", PROBE_SIZE, Estimate::from_samples(&ratios))
                    .with_note(format!("||d(T)||/||d(0)|| in H; contracted on {contracted} paths; empirical probe")),
            );
        }
    }

    for (m, o) in outcomes.into_iter().enumerate() {
        for (k, record) in o.records.into_iter().enumerate() {
            let (j, i) = (k / (1 + eps.len()), k % (1 + eps.len()));
            let which = if i == 0 { "base".to_string() } else { format!("eps_{}", label(eps[i - 1])) };
            report.paths.push(PathRecord {
                name: format!("dt_{}_{which}_path_{m:04}", label(dts[j])),
                record,
            });
        }
    }
    Ok(report)
}

/// Noise path for step `dt` built from increments on the finest step.
fn fine_path(path: NoisePath, dt: f64, finest: f64) -> NoisePath {
    NoisePath::new(path.driver, dt, finest).expect("dts divide each other")
}

struct AllenCahnProbe {
    stepper: Stepper,
    phi0: SpectralField,
    perturbed: SpectralField,
    config: crate::config::RunConfig,
}

impl AllenCahnProbe {
    /// `(identical runs bit-equal, ||d(T)|| / ||d(0)||)` on path `stream`.
    fn run(&self, stream: u64) -> Result<(bool, f64)> {
        let path = self.config.noise_path(stream, self.stepper.params.dt)?;
        let members = [
            Member::new(&self.stepper, &self.phi0, 1, Some(&path)),
            Member::new(&self.stepper, &self.phi0, 1, Some(&path)),
            Member::new(&self.stepper, &self.perturbed, 1, Some(&path)),
        ];
        let mut identical = true;
        let mut last = 0.0;
        let d0 = self.perturbed.truncated().sub(&self.phi0.truncated()).l2_norm();
        let outcome = run_coupled(&members, self.stepper.params.num_steps()?, u64::MAX, |_, s, _| {
            identical &= s[0].phi.values() == s[1].phi.values();
            last = s[2].phi.sub(&s[0].phi).l2_norm() / d0;
        });
        if let Some((_, reason)) = outcome.failure {
            return Err(Error::param(format!("Allen-Cahn probe failed: {reason}")));
        }
        Ok((identical, last))
    }
}

fn allen_cahn_probe(config: &crate::config::RunConfig, base: &Stepper) -> Result<Option<AllenCahnProbe>> {
    if base.grid.dim() != 1 {
        return Ok(None);
    }
    let mut stepper = base.clone();
    stepper.params.operator = MixedOperatorParams::new(0.0, 1.0)?;
    stepper.params.scheme = Scheme::Limit;
    stepper.params.resolvent = None;
    if !stepper.noise.allen_cahn_unique() {
        let n = &stepper.noise;
        stepper.noise = NoiseModel::with_lg_squared(n.dim(), n.num_modes(), PROBE_LG_SQUARED, n.decay(), n.shape().clone())?;
    }
    let phi0 = config.initial_field(&base.grid)?;
    let mut sampler = FieldSampler::new(config.noise.seed ^ 0x00ac_9e0d);
    let v = sampler.band_limited(&base.grid, 4, 1.0).zero_mean();
    let perturbed = phi0.axpy(PROBE_SIZE / v.l2_norm(), &v);
    Ok(Some(AllenCahnProbe {
        stepper,
        phi0,
        perturbed,
        config: config.clone(),
    }))
}
