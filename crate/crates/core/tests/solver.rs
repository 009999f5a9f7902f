//! Time stepping: linear stability, conservation, dissipation, convergence and determinism.

use std::f64::consts::PI;
use std::sync::Arc;

use chac_core::grid::{SpectralField, TorusGrid};
use chac_core::noise::{NoiseModel, NoiseShape, WienerDriver};
use chac_core::potential::{PotentialMode, PotentialSpec};
use chac_core::solver::{energy, mass_gap, NoisePath, ProblemParams, SolverState, Stepper};

fn spec() -> PotentialSpec {
    PotentialSpec::new(1.0, 2.0).unwrap()
}

fn grid(n: usize) -> Arc<TorusGrid> {
    TorusGrid::new(1, n).unwrap()
}

fn noise(lg2: f64) -> NoiseModel {
    NoiseModel::with_lg_squared(1, 16, lg2, 1.0, NoiseShape::Quartic).unwrap()
}

fn initial(g: &Arc<TorusGrid>) -> SpectralField {
    SpectralField::from_fn(g, |x| 0.2 + 0.3 * (2.0 * PI * x[0]).cos() + 0.15 * (4.0 * PI * x[0]).sin()).unwrap()
}

/// Runs to the end and returns the final field.
fn final_field(stepper: &Stepper, phi0: &SpectralField, path: Option<&NoisePath>) -> SpectralField {
    let mut state = SolverState::new(phi0.truncated());
    for _ in 0..stepper.params.num_steps().unwrap() {
        state = stepper.step(&state, path).unwrap();
    }
    state.phi
}

/// Slope of `ln |phi_1(t)|`, the first mode along axis 0, by least squares over all steps.
fn measured_rate(stepper: &Stepper, phi0: &SpectralField) -> f64 {
    let mut state = SolverState::new(phi0.truncated());
    let (mut ts, mut ys) = (vec![0.0], vec![state.phi.spectrum()[1].norm().ln()]);
    for _ in 0..stepper.params.num_steps().unwrap() {
        state = stepper.step(&state, None).unwrap();
        ts.push(state.time);
        ys.push(state.phi.spectrum()[1].norm().ln());
    }
    let n = ts.len() as f64;
    let (mt, my) = (ts.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let cov: f64 = ts.iter().zip(&ys).map(|(t, y)| (t - mt) * (y - my)).sum();
    let var: f64 = ts.iter().map(|t| (t - mt).powi(2)).sum();
    cov / var
}

#[test]
fn linearized_rate_of_the_yosida_problem() {
    let g = grid(64);
    let s = spec();
    let lambda = 1e-4;
    for m in [0.0, 0.3] {
        let params = ProblemParams::limit(1.0, 0.0, PotentialMode::Yosida, lambda, &s, 1e-5, 1e-2).unwrap();
        let stepper = Stepper::new(g.clone(), s, params, NoiseModel::silent(1)).unwrap();
        let phi0 = SpectralField::from_fn(&g, |x| m + 1e-6 * (2.0 * PI * x[0]).cos()).unwrap();
        // independent linearization: F''_lambda(m) = 1 / (lambda + (1 - J^2) / 2) - 4, J(m) ~ m for tiny lambda
        let j = s.resolvent_j(m, &stepper.params.yosida).unwrap();
        let f2 = 1.0 / (lambda + (1.0 - j * j) / 2.0) - 4.0;
        let q = 4.0 * PI * PI;
        let expected = -q * (q + f2);
        let rate = measured_rate(&stepper, &phi0);
        assert!((rate / expected - 1.0).abs() < 0.02, "m={m}: {rate} vs {expected}");
    }
}

#[test]
fn limit_scheme_conserves_mass_over_many_steps() {
    let g = grid(64);
    let s = spec();
    let params = ProblemParams::limit(1.0, 0.5, PotentialMode::Yosida, 1e-2, &s, 1e-4, 1.0).unwrap();
    let stepper = Stepper::new(g.clone(), s, params, noise(1.0)).unwrap();
    let path = NoisePath::unit(WienerDriver::new(9, 0), 1e-4);
    let record = stepper.run(initial(&g), Some(&path), 1000, false).unwrap();
    assert!(record.is_complete());
    assert_eq!(record.len(), 11);
    assert!(mass_gap(&record) <= 1e-12);
    assert!(record.step_mass_deviation <= 1e-12);
}

#[test]
fn regularized_scheme_moves_the_mean() {
    let g = grid(64);
    let s = spec();
    let params = ProblemParams::regularized(1.0, 0.0, 1e-2, &s, 1e-4, 1e-2).unwrap();
    let stepper = Stepper::new(g.clone(), s, params, noise(1.0)).unwrap();
    let path = NoisePath::unit(WienerDriver::new(9, 0), 1e-4);
    let record = stepper.run(initial(&g), Some(&path), 10, false).unwrap();
    assert!(mass_gap(&record) > 0.0);
}

#[test]
fn deterministic_energy_is_nonincreasing() {
    let g = grid(64);
    let s = spec();
    for (alpha, beta) in [(1.0, 0.0), (1.0, 1.0), (0.0, 1.0)] {
        let params = ProblemParams::limit(alpha, beta, PotentialMode::Yosida, 1e-3, &s, 1e-4, 0.2).unwrap();
        let yosida = params.yosida;
        let stepper = Stepper::new(g.clone(), s, params, NoiseModel::silent(1)).unwrap();
        let mut state = SolverState::new(initial(&g));
        let mut e = energy(&state.phi, &s, PotentialMode::Yosida, &yosida).unwrap();
        for _ in 0..stepper.params.num_steps().unwrap() {
            state = stepper.step(&state, None).unwrap();
            let next = energy(&state.phi, &s, PotentialMode::Yosida, &yosida).unwrap();
            assert!(next <= e + 1e-10, "alpha={alpha} beta={beta}: {next} > {e}");
            e = next;
        }
    }
}

#[test]
fn deterministic_error_is_first_order_in_dt() {
    let g = grid(64);
    let s = spec();
    let phi0 = initial(&g);
    let run = |dt: f64| {
        let params = ProblemParams::limit(1.0, 0.0, PotentialMode::Exact, 1e-2, &s, dt, 2e-3).unwrap();
        let stepper = Stepper::new(g.clone(), s, params, NoiseModel::silent(1)).unwrap();
        final_field(&stepper, &phi0, None)
    };
    let fields: Vec<SpectralField> = [4e-5, 2e-5, 1e-5, 5e-6].iter().map(|&dt| run(dt)).collect();
    let e1 = fields[0].sub(&fields[1]).l2_norm();
    let e2 = fields[1].sub(&fields[2]).l2_norm();
    let e3 = fields[2].sub(&fields[3]).l2_norm();
    for ratio in [e1 / e2, e2 / e3] {
        assert!((1.7..2.3).contains(&ratio), "ratio {ratio}");
    }
}

#[test]
fn coupled_paths_converge_under_refinement() {
    let g = grid(64);
    let s = spec();
    let phi0 = initial(&g);
    let fine = 2.5e-5;
    let run = |dt: f64| {
        let params = ProblemParams::limit(1.0, 0.0, PotentialMode::Yosida, 1e-2, &s, dt, 1e-2).unwrap();
        let stepper = Stepper::new(g.clone(), s, params, noise(1.0)).unwrap();
        let path = NoisePath::new(WienerDriver::new(4, 1), dt, fine).unwrap();
        final_field(&stepper, &phi0, Some(&path))
    };
    let fields: Vec<SpectralField> = [2e-4, 1e-4, 5e-5, 2.5e-5].iter().map(|&dt| run(dt)).collect();
    let diffs: Vec<f64> = fields.windows(2).map(|w| w[0].sub(&w[1]).l2_norm()).collect();
    assert!(diffs.windows(2).all(|d| d[1] < d[0]), "{diffs:?}");
}

#[test]
fn yosida_runs_approach_the_exact_run() {
    let g = grid(64);
    let s = spec();
    let phi0 = initial(&g);
    let exact = {
        let params = ProblemParams::limit(1.0, 0.0, PotentialMode::Exact, 1e-2, &s, 1e-5, 5e-3).unwrap();
        final_field(&Stepper::new(g.clone(), s, params, NoiseModel::silent(1)).unwrap(), &phi0, None)
    };
    let mut previous = f64::INFINITY;
    for lambda in [1e-1, 1e-2, 1e-3, 1e-4] {
        let params = ProblemParams::limit(1.0, 0.0, PotentialMode::Yosida, lambda, &s, 1e-5, 5e-3).unwrap();
        let stepper = Stepper::new(g.clone(), s, params, NoiseModel::silent(1)).unwrap();
        let d = final_field(&stepper, &phi0, None).sub(&exact).l2_norm();
        assert!(d < previous, "lambda={lambda}: {d} >= {previous}");
        previous = d;
    }
    assert!(previous < 1e-4);
}

#[test]
fn runs_are_bit_reproducible() {
    let g = grid(32);
    let s = spec();
    let params = ProblemParams::regularized(1.0, 0.5, 1e-2, &s, 1e-4, 5e-3).unwrap();
    let stepper = Stepper::new(g.clone(), s, params, noise(1.0)).unwrap();
    let path = NoisePath::unit(WienerDriver::new(77, 3), 1e-4);
    let a = stepper.run(initial(&g), Some(&path), 1, true).unwrap();
    let b = stepper.run(initial(&g), Some(&path), 1, true).unwrap();
    assert_eq!(a, b);
    let other = NoisePath::unit(WienerDriver::new(77, 4), 1e-4);
    assert_ne!(stepper.run(initial(&g), Some(&other), 1, true).unwrap().fields, a.fields);
}

#[test]
fn exact_mode_reports_domain_violations() {
    let g = grid(32);
    let s = spec();
    let params = ProblemParams::limit(1.0, 0.0, PotentialMode::Exact, 1e-2, &s, 1e-4, 1e-3).unwrap();
    let stepper = Stepper::new(g.clone(), s, params, NoiseModel::silent(1)).unwrap();
    let bad = SpectralField::from_fn(&g, |x| 1.2 * (2.0 * PI * x[0]).cos()).unwrap();
    let record = stepper.run(bad, None, 1, false).unwrap();
    assert!(!record.is_complete());
    assert!(record.failure.is_some());
}
