//! Acceptance gate: one line per criterion, nonzero exit if any criterion fails.

use std::f64::consts::PI;
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use chac_core::config::RunConfig;
use chac_core::experiments::{ExperimentKind, ExperimentPlan, ExperimentReport, Status};
use chac_core::grid::{SpectralField, TorusGrid, POINCARE_CONSTANT};
use chac_core::noise::{HsSpace, NoiseModel, NoiseShape};
use chac_core::operators::{dual_norm_star, resolvent_rxi, v0_star_norm, MixedOperatorParams, ResolventParams};
use chac_core::potential::{PotentialMode, PotentialSpec, YosidaParams};
use chac_core::sampling::FieldSampler;
use chac_core::solver::{energy, ProblemParams, SolverState, Stepper};

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

fn config(toml: &str) -> RunConfig {
    RunConfig::from_toml_str(toml).expect("acceptance config")
}

fn run(kind: ExperimentKind, config: RunConfig, threads: usize) -> ExperimentReport {
    ExperimentPlan::new(kind, config, threads)
        .and_then(|p| p.run())
        .expect("experiment")
}

fn check(report: &ExperimentReport, name: &str) -> (bool, f64) {
    let row = report.find(name).unwrap_or_else(|| panic!("missing row {name}"));
    (row.status == Status::Pass, row.value)
}

fn grid_1d(n: usize) -> Arc<TorusGrid> {
    TorusGrid::new(1, n).unwrap()
}

fn mass_conservation() -> Verdict {
    let c = config(
        "[grid]\nn = 128\n[time]\ndt = 1e-4\nt_end = 0.5\nrecord_every = 100\n\
         [noise]\nlg_squared = 1.0\n[experiment]\npaths = 10\n",
    );
    let report = run(ExperimentKind::Simulate, c, 4);
    let (ok, worst) = check(&report, "mass_conservation");
    let (complete, _) = check(&report, "paths_completed");
    verdict(ok && complete, format!("max gap {worst:e} over 10 paths, bound 1e-12"))
}

fn mass_gap_scaling() -> Verdict {
    let c = config(
        "[grid]\nn = 128\n[problem]\nscheme = \"regularized\"\n\
         [time]\ndt = 1e-4\nt_end = 0.1\nrecord_every = 100\n[noise]\nlg_squared = 1.0\n\
         [experiment]\npaths = 64\np = 2\nlambdas = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3]\n[output]\npath_csv = false\n",
    );
    let report = run(ExperimentKind::MassGap, c, 4);
    let (ok, slope) = check(&report, "mass_gap_slope");
    let r2 = report.find("r_squared").map(|r| r.value).unwrap_or(f64::NAN);
    verdict(ok, format!("slope {slope:.4} (need >= 0.4), r2 {r2:.4} (need >= 0.95)"))
}

fn divergence_lipschitz() -> Verdict {
    let g = grid_1d(128);
    let noise = NoiseModel::with_lg_squared(1, 16, 1.0, 1.0, NoiseShape::Quartic).unwrap();
    let mut rng = FieldSampler::new(3);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100 {
        let v = rng.bounded(&g, 8, 1.0);
        let w = rng.bounded(&g, 8, 1.0);
        let lhs = noise.div_g_difference_norm(&v, &w, HsSpace::V0Star).unwrap();
        worst = worst.max(lhs - noise.lg() * v.sub(&w).l2_norm());
    }
    verdict(worst <= 1e-6, format!("max excess {worst:e}, bound 1e-6"))
}

fn regularized_lipschitz() -> Verdict {
    let g = grid_1d(128);
    let spec = PotentialSpec::new(1.0, 2.0).unwrap();
    let noise = NoiseModel::with_lg_squared(1, 16, 1.0, 1.0, NoiseShape::Quartic).unwrap();
    let yosida = YosidaParams::new(0.1).unwrap();
    let mut rng = FieldSampler::new(4);
    let mut worst = 0.0f64;
    for xi in [0.1, 0.05] {
        let r = ResolventParams::new(xi).unwrap();
        for _ in 0..100 {
            let v = rng.bounded(&g, 8, 1.5);
            let w = rng.bounded(&g, 8, 1.5);
            let d2 = v.sub(&w).l2_norm().powi(2);
            let lhs = noise.k_difference_norm(&v, &w, &spec, &yosida, &r).unwrap().powi(2);
            let wv = w.sobolev_norm(1.0).unwrap().powi(2);
            let rhs = 2.0 * noise.lg_squared() / (xi * xi) * (1.0 + wv) * d2;
            worst = worst.max(lhs / rhs);
        }
    }
    verdict(worst <= 1.0, format!("max lhs/rhs {worst:.3e}"))
}

fn star_sandwich() -> Verdict {
    let g = grid_1d(128);
    let cp2 = POINCARE_CONSTANT * POINCARE_CONSTANT;
    let mut rng = FieldSampler::new(5);
    let fields: Vec<SpectralField> = (0..1000).map(|_| rng.band_limited(&g, 40, 1.0).zero_mean()).collect();
    let mut worst = 0.0f64;
    for alpha in [1.0, 0.5, 0.1] {
        for beta in [0.0, 0.5, 1.0] {
            let params = MixedOperatorParams::new(alpha, beta).unwrap();
            for v in &fields {
                let star = dual_norm_star(v, &params).unwrap();
                let riesz = v0_star_norm(v);
                worst = worst.max(alpha * star / riesz).max(riesz / ((alpha + cp2) * star));
            }
        }
    }
    verdict(worst <= 1.0 + 1e-8, format!("max bound ratio {worst:.12}, tolerance 1e-8"))
}

fn resolvent_estimate() -> Verdict {
    let g = grid_1d(128);
    let mut rng = FieldSampler::new(6);
    let mut worst = 0.0f64;
    for xi in [1.0, 0.1, 0.01] {
        let params = ResolventParams::new(xi).unwrap();
        for _ in 0..100 {
            let f = rng.band_limited(&g, 40, 1.0);
            let lhs = xi * resolvent_rxi(&f, &params).laplacian().grad_norm().powi(2);
            let rhs = 0.5 * f.laplacian().l2_norm().powi(2);
            worst = worst.max(lhs / rhs);
        }
    }
    verdict(worst <= 1.0, format!("max lhs/rhs {worst:.4}"))
}

fn linear_rate() -> Verdict {
    let c = config(
        "[grid]\nn = 64\n[potential]\nmode = \"exact\"\n[problem]\nalpha = 1.0\nbeta = 0.0\n\
         [time]\ndt = 1e-5\nt_end = 0.01\n[initial]\nkind = \"modes\"\nmean = 0.0\nmodes = []\n",
    );
    let report = run(ExperimentKind::LinearRate, c, 1);
    let (ok, error) = check(&report, "linear_rate");
    let measured = report.find("measured_rate").unwrap().value;
    // -4 pi^2 (4 pi^2 - 2)
    let expected = -4.0 * PI * PI * (4.0 * PI * PI - 2.0);
    verdict(ok, format!("rate {measured:.2} vs {expected:.2}, relative error {error:.4}"))
}

fn vanishing_viscosity() -> Verdict {
    let c = config(
        "[grid]\nn = 128\n[potential]\nmode = \"exact\"\n[problem]\nalpha = 1.0\nbeta = 1.0\n\
         [time]\ndt = 1e-4\nt_end = 0.5\nrecord_every = 100\n[noise]\nlg_squared = 0.1\n\
         [experiment]\npaths = 16\nalphas = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3]\n[output]\npath_csv = false\n",
    );
    let report = run(ExperimentKind::ViscositySweep, c, 4);
    let (monotone, _) = check(&report, "e_monotone_in_alpha");
    let (bounded, sup) = check(&report, "bounded");
    let blow_up = report.find("blow_up").is_none();
    let e: Vec<String> = report
        .rows
        .iter()
        .filter(|r| r.name == "e_alpha")
        .map(|r| format!("{:.3e}", r.value))
        .collect();
    verdict(monotone && bounded && blow_up, format!("e = [{}], max |phi| {sup:.4}", e.join(", ")))
}

fn energy_dissipation() -> Verdict {
    let g = grid_1d(128);
    let spec = PotentialSpec::new(1.0, 2.0).unwrap();
    let params = ProblemParams::limit(1.0, 0.0, PotentialMode::Yosida, 1e-2, &spec, 1e-4, 1.0).unwrap();
    assert_eq!(params.kappa, 4.0);
    let yosida = params.yosida;
    let stepper = Stepper::new(g.clone(), spec, params, NoiseModel::silent(1)).unwrap();
    let phi0 = SpectralField::from_fn(&g, |x| 0.2 + 0.3 * (2.0 * PI * x[0]).cos() + 0.15 * (4.0 * PI * x[0]).sin()).unwrap();
    let mut state = SolverState::new(phi0.truncated());
    let mut e = energy(&state.phi, &spec, PotentialMode::Yosida, &yosida).unwrap();
    let mut worst = f64::NEG_INFINITY;
    let steps = stepper.params.num_steps().unwrap();
    for _ in 0..steps {
        state = stepper.step(&state, None).unwrap();
        let next = energy(&state.phi, &spec, PotentialMode::Yosida, &yosida).unwrap();
        worst = worst.max(next - e);
        e = next;
    }
    verdict(steps == 10_000 && worst <= 1e-10, format!("{steps} steps, max increase {worst:e}"))
}

fn written_files(kind: ExperimentKind, c: &RunConfig, threads: usize, dir: &Path) -> Vec<(String, Vec<u8>)> {
    let out = dir.join(format!("{}-{threads}", kind.name()));
    run(kind, c.clone(), threads).write(&out, c).unwrap();
    let mut files = Vec::new();
    let mut stack = vec![out.clone()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let name = path.strip_prefix(&out).unwrap().display().to_string();
                files.push((name, std::fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (
            ExperimentKind::MassGap,
            "[grid]\nn = 64\n[problem]\nscheme = \"regularized\"\n[time]\nt_end = 0.01\nrecord_every = 10\n\
             [experiment]\npaths = 8\nlambdas = [1e-1, 1e-2, 1e-3]\n",
        ),
        (
            ExperimentKind::ViscositySweep,
            "[grid]\nn = 64\n[problem]\nbeta = 1.0\n[time]\nt_end = 0.01\nrecord_every = 10\n\
             [noise]\nlg_squared = 0.1\n[experiment]\npaths = 8\n",
        ),
        (ExperimentKind::PropertySuite, "[grid]\nn = 64\n"),
    ];
    let mut compared = 0;
    for (kind, toml) in cases {
        let c = config(toml);
        let reference = written_files(kind, &c, 1, dir.path());
        for threads in [4, 8] {
            if written_files(kind, &c, threads, dir.path()) != reference {
                return verdict(false, format!("{} differs at {threads} threads", kind.name()));
            }
        }
        compared += reference.len();
    }
    verdict(true, format!("{compared} files byte-identical at 1, 4 and 8 threads"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("pathwise mass conservation", mass_conservation),
        ("mass-gap scaling", mass_gap_scaling),
        ("divergence noise Lipschitz bound", divergence_lipschitz),
        ("regularized noise Lipschitz bound", regularized_lipschitz),
        ("dual norm sandwich", star_sandwich),
        ("resolvent smoothing estimate", resolvent_estimate),
        ("linearized rate", linear_rate),
        ("vanishing viscosity", vanishing_viscosity),
        ("deterministic energy dissipation", energy_dissipation),
        ("thread-count determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, criterion)) in criteria.iter().enumerate() {
        let id = format!("criterion_{:02}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| id.contains(f.as_str()) || name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let v = criterion();
        let status = if v.passed { "PASS" } else { "FAIL" };
        println!("{id} {status} {name}: {} [{:.1?}]", v.detail, start.elapsed());
        failed += usize::from(!v.passed);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
