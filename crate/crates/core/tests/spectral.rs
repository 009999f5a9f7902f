//! Grid and operator properties against independent oracles.

use std::f64::consts::PI;
use std::sync::Arc;

use chac_core::grid::{SpectralField, TorusGrid, POINCARE_CONSTANT};
use chac_core::operators::{dual_norm_sharp, MixedOperatorParams};
use chac_core::sampling::FieldSampler;
use proptest::prelude::*;

fn grid(dim: usize, n: usize) -> Arc<TorusGrid> {
    TorusGrid::new(dim, n).unwrap()
}

/// Signed wavenumber of index `j` on an `n`-point axis.
fn signed(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Naive O(N^2) DFT normalized by 1/N.
fn dft(values: &[f64]) -> Vec<(f64, f64)> {
    let n = values.len();
    (0..n)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (j, v) in values.iter().enumerate() {
                let a = -2.0 * PI * (k * j) as f64 / n as f64;
                re += v * a.cos();
                im += v * a.sin();
            }
            (re / n as f64, im / n as f64)
        })
        .collect()
}

/// Product of two 1-d fields by direct convolution of the retained modes,
/// keeping only output modes with `3|k| < N`.
fn convolution_product(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let keep = |k: i64| 3 * k.abs() < n as i64;
    let (fa, fb) = (dft(a), dft(b));
    let mut out = vec![(0.0, 0.0); n];
    for i in 0..n {
        for j in 0..n {
            let (ki, kj) = (signed(i, n), signed(j, n));
            if !keep(ki) || !keep(kj) || !keep(ki + kj) {
                continue;
            }
            let idx = (ki + kj).rem_euclid(n as i64) as usize;
            let (x, y) = (fa[i], fb[j]);
            out[idx].0 += x.0 * y.0 - x.1 * y.1;
            out[idx].1 += x.0 * y.1 + x.1 * y.0;
        }
    }
    (0..n)
        .map(|j| {
            out.iter()
                .enumerate()
                .map(|(k, c)| {
                    let a = 2.0 * PI * (k * j) as f64 / n as f64;
                    c.0 * a.cos() - c.1 * a.sin()
                })
                .sum()
        })
        .collect()
}

#[test]
fn dealiased_product_matches_direct_convolution() {
    let g = grid(1, 32);
    let mut rng = FieldSampler::new(11);
    for _ in 0..5 {
        let a = rng.band_limited(&g, 15, 1.0);
        let b = rng.band_limited(&g, 15, 1.0);
        let fast = a.dealiased_product(&b);
        let slow = convolution_product(a.values(), b.values());
        for (x, y) in fast.values().iter().zip(&slow) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }
}

#[test]
fn forward_transform_matches_naive_dft() {
    let g = grid(1, 16);
    let f = FieldSampler::new(3).band_limited(&g, 7, 1.0);
    for (c, d) in f.spectrum().iter().zip(dft(f.values())) {
        assert!((c.re - d.0).abs() < 1e-14 && (c.im - d.1).abs() < 1e-14);
    }
}

#[test]
fn sharp_norm_matches_mode_by_mode_sum() {
    let g = grid(2, 16);
    let mut rng = FieldSampler::new(5);
    for (alpha, beta) in [(1.0, 0.0), (0.5, 0.5), (0.1, 1.0)] {
        let params = MixedOperatorParams::new(alpha, beta).unwrap();
        let v = rng.band_limited(&g, 7, 1.0).add_constant(0.4);
        let mut sum = 0.0;
        for (i, c) in v.spectrum().iter().enumerate() {
            let k = g.wavenumber(i);
            let q: f64 = k.iter().map(|&ka| (2.0 * PI * ka as f64).powi(2)).sum();
            if i != 0 {
                sum += q * c.norm_sqr() / (alpha * q + beta).powi(2);
            }
        }
        let direct = (sum + v.mean().powi(2)).sqrt();
        let sharp = dual_norm_sharp(&v, &params).unwrap();
        assert!((direct - sharp).abs() <= 1e-12 * direct);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parseval_identity(seed in any::<u64>(), dim in 1usize..=3) {
        let g = grid(dim, if dim == 3 { 8 } else { 16 });
        let f = FieldSampler::new(seed).band_limited(&g, 8, 1.0);
        let physical = f.values().iter().map(|v| v * v).sum::<f64>() / g.len() as f64;
        prop_assert!((physical - f.l2_norm().powi(2)).abs() <= 1e-12 * physical.max(1e-300));
    }

    #[test]
    fn laplacian_is_divergence_of_gradient(seed in any::<u64>(), dim in 1usize..=3) {
        let g = grid(dim, 8);
        let f = FieldSampler::new(seed).band_limited(&g, 4, 1.0);
        let composed = f.gradient().divergence().unwrap();
        prop_assert!(f.laplacian().sub(&composed).sup_norm() <= 1e-10);
    }

    #[test]
    fn poincare_inequality(seed in any::<u64>(), dim in 1usize..=2) {
        let g = grid(dim, 16);
        let f = FieldSampler::new(seed).band_limited(&g, 7, 1.0);
        prop_assert!(f.zero_mean().l2_norm() <= POINCARE_CONSTANT * f.grad_norm() * (1.0 + 1e-12));
    }

    #[test]
    fn mean_is_exact_under_shift(seed in any::<u64>(), c in -2.0f64..2.0) {
        let g = grid(1, 32);
        let f = FieldSampler::new(seed).band_limited(&g, 10, 1.0);
        prop_assert!((f.add_constant(c).mean() - (f.mean() + c)).abs() <= 1e-15 * (1.0 + c.abs()));
    }

    #[test]
    fn truncation_is_idempotent(seed in any::<u64>()) {
        let g = grid(2, 16);
        let f = SpectralField::from_values(&g, FieldSampler::new(seed).band_limited(&g, 8, 1.0).into_values()).unwrap();
        let once = f.truncated();
        prop_assert!(once.is_band_limited());
        let twice = once.truncated();
        prop_assert_eq!(twice.values(), once.values());
    }
}
