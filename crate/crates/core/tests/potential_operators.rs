use std::f64::consts::PI;

use chac_core::grid::{SpectralField, TorusGrid, POINCARE_CONSTANT};
use chac_core::operators::{
    apply_a, apply_n, dual_norm_star, resolvent_rxi, v0_star_norm, MixedOperatorParams, ResolventParams,
};
use chac_core::potential::{PotentialSpec, YosidaParams};
use chac_core::sampling::FieldSampler;
use proptest::prelude::*;

fn spec() -> PotentialSpec {
    PotentialSpec::new(1.0, 2.0).unwrap()
}

/// `r + lambda * 2 atanh(r) = s` by plain bisection on (-1, 1).
fn resolvent_bisection(s: f64, lambda: f64) -> f64 {
    let (mut lo, mut hi) = (-1.0 + 1e-300f64.max(f64::EPSILON), 1.0 - f64::EPSILON);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid + lambda * 2.0 * mid.atanh() < s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn resolvent_agrees_with_bisection() {
    let spec = spec();
    for lambda in [1e-3, 1e-2, 1e-1, 1.0] {
        let y = YosidaParams::new(lambda).unwrap();
        for s in [-2.5, -0.99, -0.3, 0.0, 0.4, 0.95, 1.2] {
            let j = spec.resolvent_j(s, &y).unwrap();
            assert!((j - resolvent_bisection(s, lambda)).abs() < 1e-12, "s={s} lambda={lambda}");
        }
    }
}

#[test]
fn yosida_second_matches_finite_difference() {
    let spec = spec();
    let y = YosidaParams::new(1e-2).unwrap();
    let h = 1e-6;
    for s in [-0.8, 0.0, 0.5, 0.99, 1.5] {
        let fd = (spec.yosida_prime(s + h, &y).unwrap() - spec.yosida_prime(s - h, &y).unwrap()) / (2.0 * h);
        let exact = spec.yosida_second(s, &y).unwrap();
        assert!((fd - exact).abs() <= 1e-5 * exact.abs().max(1.0), "s={s}: {fd} vs {exact}");
    }
}

#[test]
fn operator_symbol_on_a_single_mode() {
    let grid = TorusGrid::new(1, 32).unwrap();
    let params = MixedOperatorParams::new(0.5, 1.0).unwrap();
    let v = SpectralField::from_fn(&grid, |x| (6.0 * PI * x[0]).cos()).unwrap();
    let q = 36.0 * PI * PI;
    let expected = v.scale(0.5 * q + 1.0);
    assert!(apply_a(&v, &params).sub(&expected).l2_norm() < 1e-8 * expected.l2_norm());
    // ||v||_*^2 = ||grad N v||^2 = |v|^2 q / a(q)^2
    let star = dual_norm_star(&v, &params).unwrap();
    let a = 0.5 * q + 1.0;
    assert!((star * star - 0.5 * q / (a * a)).abs() < 1e-14);
    assert!(apply_n(&v.add_constant(0.1), &params).is_err());
}

proptest! {
    #[test]
    fn yosida_derivative_increases_as_lambda_decreases(s in -3.0f64..3.0, a in 1e-3f64..1.0, b in 1e-3f64..1.0) {
        let spec = spec();
        let (small, large) = if a < b { (a, b) } else { (b, a) };
        let p_small = spec.yosida_prime(s, &YosidaParams::new(small).unwrap()).unwrap();
        let p_large = spec.yosida_prime(s, &YosidaParams::new(large).unwrap()).unwrap();
        prop_assert!(s * (p_small - p_large) >= -1e-12);
    }

    #[test]
    fn yosida_derivative_is_lambda_inverse_lipschitz(a in -3.0f64..3.0, b in -3.0f64..3.0, lambda in 1e-3f64..1.0) {
        let spec = spec();
        let y = YosidaParams::new(lambda).unwrap();
        let d = (spec.yosida_prime(a, &y).unwrap() - spec.yosida_prime(b, &y).unwrap()).abs();
        prop_assert!(d <= (a - b).abs() / lambda * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn star_norm_sandwich(seed in 0u64..1000, alpha in 0.05f64..2.0, beta in 0.0f64..1.0) {
        let grid = TorusGrid::new(1, 64).unwrap();
        let v = FieldSampler::new(seed).band_limited(&grid, 20, 1.0).zero_mean();
        let params = MixedOperatorParams::new(alpha, beta).unwrap();
        let star = dual_norm_star(&v, &params).unwrap();
        let riesz = v0_star_norm(&v);
        let cp2 = POINCARE_CONSTANT * POINCARE_CONSTANT;
        prop_assert!(alpha * star <= riesz * (1.0 + 1e-10));
        prop_assert!(riesz <= (alpha + cp2) * star * (1.0 + 1e-10));
    }

    #[test]
    fn resolvent_inverts_the_elliptic_operator(seed in 0u64..1000, xi in 1e-3f64..1.0) {
        let grid = TorusGrid::new(1, 64).unwrap();
        let f = FieldSampler::new(seed).band_limited(&grid, 20, 1.0);
        let u = resolvent_rxi(&f, &ResolventParams::new(xi).unwrap());
        let back = u.axpy(-xi, &u.laplacian());
        prop_assert!(back.sub(&f).l2_norm() <= 1e-10 * f.l2_norm().max(1e-300));
    }
}
