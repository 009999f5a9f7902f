//! Noise operators against pointwise, finite-difference and statistical oracles.

use std::f64::consts::PI;
use std::sync::Arc;

use chac_core::grid::{SpectralField, TorusGrid};
use chac_core::noise::{HsSpace, NoiseModel, NoiseShape, WienerDriver};
use chac_core::operators::ResolventParams;
use chac_core::potential::{PotentialSpec, YosidaParams};
use chac_core::sampling::FieldSampler;

/// `m + sum_j a_j cos(2 pi j x) + b_j sin(2 pi j x)` with its first three derivatives.
struct Trig {
    m: f64,
    terms: Vec<(f64, f64, f64)>,
}

impl Trig {
    fn random(seed: u64, modes: usize, sup: f64) -> Self {
        let mut rng = FieldSampler::new(seed);
        let terms: Vec<(f64, f64, f64)> = (1..=modes)
            .map(|j| (j as f64, rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)))
            .collect();
        let bound: f64 = terms.iter().map(|t| t.1.abs() + t.2.abs()).sum();
        let s = 0.5 * sup / bound;
        Trig {
            m: 0.5 * sup * rng.uniform(-1.0, 1.0),
            terms: terms.into_iter().map(|(j, a, b)| (j, a * s, b * s)).collect(),
        }
    }

    /// `order`-th derivative at `x`.
    fn eval(&self, x: f64, order: u32) -> f64 {
        let mut v = if order == 0 { self.m } else { 0.0 };
        for &(j, a, b) in &self.terms {
            let w = 2.0 * PI * j;
            let t = w * x + order as f64 * PI / 2.0;
            v += w.powi(order as i32) * (a * t.cos() + b * t.sin());
        }
        v
    }

    fn field(&self, grid: &Arc<TorusGrid>) -> SpectralField {
        SpectralField::from_fn(grid, |x| self.eval(x[0], 0)).unwrap()
    }
}

fn quartic(s: f64) -> (f64, f64, f64) {
    let t = 1.0 - s * s;
    (t * t, -4.0 * s * t, 12.0 * s * s - 4.0)
}

fn model(lg2: f64) -> NoiseModel {
    NoiseModel::with_lg_squared(1, 16, lg2, 1.0, NoiseShape::Quartic).unwrap()
}

#[test]
fn divergence_matches_chain_rule() {
    let g = TorusGrid::new(1, 128).unwrap();
    let noise = model(1.0);
    for seed in 0..5 {
        let phi = Trig::random(seed, 4, 0.9);
        let out = noise.div_g_apply(&phi.field(&g)).unwrap();
        for (k, f) in out.iter().enumerate() {
            let c = noise.coefficient(k + 1);
            for i in 0..g.len() {
                let x = g.point(i)[0];
                let expected = c * quartic(phi.eval(x, 0)).1 * phi.eval(x, 1);
                assert!((f.values()[i] - expected).abs() < 1e-8);
            }
            assert_eq!(f.mean(), 0.0);
        }
    }
}

#[test]
fn gradient_of_divergence_matches_finite_differences() {
    let g = TorusGrid::new(1, 128).unwrap();
    let noise = model(1.0);
    let delta = 1e-5;
    for seed in 10..14 {
        let phi = Trig::random(seed, 2, 0.9);
        let div = |x: f64| quartic(phi.eval(x, 0)).1 * phi.eval(x, 1);
        let mut total = 0.0;
        for i in 0..g.len() {
            let x = g.point(i)[0];
            total += ((div(x + delta) - div(x - delta)) / (2.0 * delta)).powi(2);
        }
        let weight: f64 = (1..=noise.num_modes()).map(|k| noise.coefficient(k).powi(2)).sum();
        let fd = (weight * total / g.len() as f64).sqrt();
        let spectral = noise.grad_div_g_hs_norm(&phi.field(&g)).unwrap();
        assert!((fd - spectral).abs() < 1e-6, "{fd} vs {spectral}");
    }
}

#[test]
fn hs_norm_is_zero_on_constants() {
    let g = TorusGrid::new(2, 16).unwrap();
    let noise = NoiseModel::with_lg_squared(2, 16, 1.0, 1.0, NoiseShape::Quartic).unwrap();
    let c = SpectralField::constant(&g, 0.3);
    assert_eq!(noise.div_g_hs_norm(&c, HsSpace::H).unwrap(), 0.0);
    assert_eq!(noise.div_g_hs_norm(&c, HsSpace::V0Star).unwrap(), 0.0);
    assert_eq!(noise.grad_div_g_hs_norm(&c).unwrap(), 0.0);
}

#[test]
fn local_lipschitz_bound_on_smooth_pairs() {
    let g = TorusGrid::new(1, 64).unwrap();
    let noise = model(1.0);
    let mut rng = FieldSampler::new(21);
    for _ in 0..50 {
        let v = rng.bounded(&g, 6, 0.95);
        let w = rng.bounded(&g, 6, 0.95);
        let d = v.sub(&w);
        let lhs = noise.div_g_difference_norm(&v, &w, HsSpace::H).unwrap().powi(2);
        let weighted = w.derivative(0).dealiased_product(&d).l2_norm().powi(2);
        let rhs = 2.0 * noise.lg_squared() * (weighted + d.grad_norm().powi(2));
        assert!(lhs <= rhs, "{lhs} > {rhs}");
    }
}

#[test]
fn regularized_noise_approaches_divergence() {
    let g = TorusGrid::new(1, 128).unwrap();
    let spec = PotentialSpec::new(1.0, 2.0).unwrap();
    let noise = model(1.0);
    for seed in 30..33 {
        let phi = Trig::random(seed, 4, 0.9).field(&g);
        let limit = noise.div_g_apply(&phi).unwrap();
        let mut previous = f64::INFINITY;
        let mut errors = Vec::new();
        for lambda in [1e-1, 1e-2, 1e-3, 1e-4] {
            let y = YosidaParams::new(lambda).unwrap();
            let r = ResolventParams::new(lambda / 2.0).unwrap();
            let k = noise.k_lambda_xi_apply(&phi, &spec, &y, &r).unwrap();
            let err = k[0].sub(&limit[0]).l2_norm();
            assert!(err < previous, "lambda={lambda}: {err} >= {previous}");
            previous = err;
            errors.push(err);
        }
        // first order in lambda once xi |2 pi k|^2 is small
        assert!(errors[3] < 0.2 * errors[2]);
        assert!(errors[3] < 0.05 * limit[0].l2_norm());
    }
}

#[test]
fn regularized_noise_vanishes_on_constants() {
    let g = TorusGrid::new(1, 32).unwrap();
    let spec = PotentialSpec::new(1.0, 2.0).unwrap();
    let y = YosidaParams::new(0.1).unwrap();
    let r = ResolventParams::new(0.05).unwrap();
    for f in model(1.0).k_lambda_xi_apply(&SpectralField::constant(&g, 1.7), &spec, &y, &r).unwrap() {
        assert_eq!(f.sup_norm(), 0.0);
    }
}

#[test]
fn wiener_increment_statistics() {
    let dt = 1e-3;
    let driver = WienerDriver::new(2024, 7);
    let modes = 10;
    let steps = 100_000;
    let n = (steps * modes) as f64;
    let (mut sum, mut sq) = (0.0, 0.0);
    for step in 0..steps {
        for x in driver.increments(step as u64, dt, modes) {
            sum += x;
            sq += x * x;
        }
    }
    let mean = sum / n;
    let var = sq / n - mean * mean;
    assert!(mean.abs() <= 4.0 * (dt / n).sqrt(), "mean {mean}");
    assert!((var / dt - 1.0).abs() <= 0.05, "variance {var}");
}

#[test]
fn wiener_increments_are_random_access() {
    let a = WienerDriver::new(1, 2);
    let b = WienerDriver::new(1, 2);
    let forward: Vec<Vec<f64>> = (0..20).map(|s| a.increments(s, 0.1, 4)).collect();
    for s in (0..20).rev() {
        assert_eq!(b.increments(s, 0.1, 4), forward[s as usize]);
    }
    assert_ne!(WienerDriver::new(1, 3).increments(0, 0.1, 4), forward[0]);
    let coarse = a.aggregated_increments(3, 4, 0.1, 4);
    for j in 0..4 {
        let fine: f64 = (12..16).map(|s| forward[s][j]).sum();
        assert!((coarse[j] - fine).abs() < 1e-15);
    }
}

#[test]
fn hilbert_schmidt_tail_converges() {
    let mut values = Vec::new();
    for k in [8, 16, 32, 64, 128, 256] {
        values.push(NoiseModel::new(1, k, 0.1, 1.0, NoiseShape::Quartic).unwrap().lg_squared());
    }
    let steps: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    assert!(steps.iter().all(|&s| s > 0.0));
    assert!(steps.windows(2).all(|s| s[1] < s[0]));
    // sum_k k^-2 converges to pi^2/6
    let limit = 0.01 * 64.0 * PI * PI / 6.0;
    assert!(values.last().unwrap() < &limit);
}
