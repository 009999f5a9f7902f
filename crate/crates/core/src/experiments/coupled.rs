use crate::grid::SpectralField;
use crate::solver::{NoisePath, SolverState, Stepper, Tracker, TrajectoryRecord};

/// One trajectory of a coupled run. Every member advances `substeps` solver
/// steps per tick, so members with different `dt` meet at common times.
pub(crate) struct Member {
    pub stepper: Stepper,
    pub phi0: SpectralField,
    pub substeps: u64,
    pub path: Option<NoisePath>,
    /// A failing optional member is frozen while the others continue.
    pub optional: bool,
}

impl Member {
    pub fn new(stepper: &Stepper, phi0: &SpectralField, substeps: u64, path: Option<&NoisePath>) -> Self {
        Member {
            stepper: stepper.clone(),
            phi0: phi0.clone(),
            substeps,
            path: path.cloned(),
            optional: false,
        }
    }

    pub fn optional(mut self) -> Self {
        self.optional = true;
        self
    }
}

pub(crate) struct CoupledOutcome {
    pub records: Vec<TrajectoryRecord>,
    /// First failing required member and its error.
    pub failure: Option<(usize, String)>,
    /// Which members ran to the end.
    pub alive: Vec<bool>,
}

/// Advances all members in lockstep for `ticks` ticks, calling `observe`
/// at tick 0 and after every tick with the states and liveness flags.
/// Stops at the first failing step of a required member.
pub(crate) fn run_coupled(
    members: &[Member],
    ticks: u64,
    record_every: u64,
    mut observe: impl FnMut(u64, &[SolverState], &[bool]),
) -> CoupledOutcome {
    let mut states: Vec<SolverState> = members
        .iter()
        .map(|m| SolverState::new(m.phi0.truncated()))
        .collect();
    let mut trackers: Vec<Tracker> = members
        .iter()
        .zip(&states)
        .map(|(m, s)| Tracker::new(&m.stepper, s, ticks * m.substeps, record_every * m.substeps, false))
        .collect();
    let mut alive = vec![true; members.len()];
    let mut failures: Vec<Option<String>> = vec![None; members.len()];
    observe(0, &states, &alive);
    for tick in 1..=ticks {
        for (i, m) in members.iter().enumerate() {
            if !alive[i] {
                continue;
            }
            for _ in 0..m.substeps {
                match m.stepper.step(&states[i], m.path.as_ref()) {
                    Ok(next) => states[i] = next,
                    Err(e) if m.optional => {
                        alive[i] = false;
                        failures[i] = Some(e.to_string());
                        break;
                    }
                    Err(e) => {
                        let reason = e.to_string();
                        alive[i] = false;
                        let records = trackers
                            .into_iter()
                            .enumerate()
                            .map(|(j, t)| match (j == i, &failures[j]) {
                                (true, _) => t.fail(reason.clone()),
                                (false, Some(f)) => t.fail(f.clone()),
                                (false, None) => t.finish(),
                            })
                            .collect();
                        return CoupledOutcome {
                            records,
                            failure: Some((i, reason)),
                            alive,
                        };
                    }
                }
                trackers[i].observe(&m.stepper, &states[i]);
            }
        }
        observe(tick, &states, &alive);
    }
    CoupledOutcome {
        records: trackers
            .into_iter()
            .zip(failures)
            .map(|(t, f)| match f {
                Some(f) => t.fail(f),
                None => t.finish(),
            })
            .collect(),
        failure: None,
        alive,
    }
}
