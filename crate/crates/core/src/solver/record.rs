use std::io::{self, Write};

use super::{energy, SolverState, Stepper};
use crate::potential::PotentialMode;

/// Column order of the per-path diagnostics CSV.
pub const CSV_HEADER: &str = "t,mass,energy,energy_yosida,sup_abs_phi,grad_norm,mu_dev_norm,mu_mean";

/// Diagnostic time series of one trajectory. Quantities that are undefined
/// at a sample (exact energy outside `[-1, 1]`) are stored as NaN.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    pub energy: Vec<f64>,
    pub energy_yosida: Vec<f64>,
    pub sup_abs_phi: Vec<f64>,
    pub grad_norm: Vec<f64>,
    pub mu_dev_norm: Vec<f64>,
    pub mu_mean: Vec<f64>,
    /// Grid values of `phi` at each sample, when requested.
    pub fields: Vec<Vec<f64>>,
    /// `max |mean phi - mean phi(0)|` over every step, not only recorded ones.
    pub step_mass_deviation: f64,
    /// `max |phi|` over every step.
    pub step_max_sup: f64,
    /// Set when the run stopped early.
    pub failure: Option<String>,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    pub(super) fn push(&mut self, stepper: &Stepper, state: &SolverState, keep_field: bool) {
        let phi = &state.phi;
        let spec = &stepper.spec;
        let yosida = &stepper.params.yosida;
        self.times.push(state.time);
        self.mass.push(state.mass());
        self.energy
            .push(energy(phi, spec, PotentialMode::Exact, yosida).unwrap_or(f64::NAN));
        self.energy_yosida
            .push(energy(phi, spec, PotentialMode::Yosida, yosida).unwrap_or(f64::NAN));
        self.sup_abs_phi.push(phi.sup_norm());
        self.grad_norm.push(phi.grad_norm());
        match stepper.chemical_potential(phi) {
            Ok(mu) => {
                self.mu_dev_norm.push(mu.zero_mean().l2_norm());
                self.mu_mean.push(mu.mean());
            }
            Err(_) => {
                self.mu_dev_norm.push(f64::NAN);
                self.mu_mean.push(f64::NAN);
            }
        }
        if keep_field {
            self.fields.push(phi.values().to_vec());
        }
    }

    /// Largest `max_x |phi|` seen during the run.
    pub fn max_sup(&self) -> f64 {
        self.sup_abs_phi.iter().fold(self.step_max_sup, |m, &v| m.max(v))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for i in 0..self.len() {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.times[i],
                self.mass[i],
                self.energy[i],
                self.energy_yosida[i],
                self.sup_abs_phi[i],
                self.grad_norm[i],
                self.mu_dev_norm[i],
                self.mu_mean[i],
            )?;
        }
        if let Some(failure) = &self.failure {
            writeln!(out, "# failure: {failure}")?;
        }
        Ok(())
    }
}

/// Builds a [`TrajectoryRecord`] while a run advances.
pub(crate) struct Tracker {
    record: TrajectoryRecord,
    mass0: f64,
    steps: u64,
    record_every: u64,
    keep_fields: bool,
}

impl Tracker {
    pub(crate) fn new(stepper: &Stepper, state: &SolverState, steps: u64, record_every: u64, keep_fields: bool) -> Self {
        let mut record = TrajectoryRecord::default();
        record.push(stepper, state, keep_fields);
        record.step_max_sup = state.phi.sup_norm();
        Tracker {
            record,
            mass0: state.mass(),
            steps,
            record_every: record_every.max(1),
            keep_fields,
        }
    }

    pub(crate) fn observe(&mut self, stepper: &Stepper, state: &SolverState) {
        let r = &mut self.record;
        r.step_mass_deviation = r.step_mass_deviation.max((state.mass() - self.mass0).abs());
        r.step_max_sup = r.step_max_sup.max(state.phi.sup_norm());
        if state.step_index.is_multiple_of(self.record_every) || state.step_index == self.steps {
            r.push(stepper, state, self.keep_fields);
        }
    }

    pub(crate) fn fail(mut self, reason: String) -> TrajectoryRecord {
        self.record.failure = Some(reason);
        self.record
    }

    pub(crate) fn finish(self) -> TrajectoryRecord {
        self.record
    }
}

/// `sup_t |mean phi(t) - mean phi(0)|` over every step of the run.
pub fn mass_gap(record: &TrajectoryRecord) -> f64 {
    let Some(&m0) = record.mass.first() else {
        return 0.0;
    };
    record
        .mass
        .iter()
        .fold(record.step_mass_deviation, |g, &m| g.max((m - m0).abs()))
}
