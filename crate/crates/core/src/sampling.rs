//! Seeded random fields for property checks and random initial data.

use std::sync::Arc;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::grid::{SpectralField, TorusGrid};

/// Uniform draw in `[0, 1)` with 53 bits of precision.
#[inline]
pub fn unit_uniform(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub struct FieldSampler {
    rng: ChaCha8Rng,
}

impl FieldSampler {
    pub fn new(seed: u64) -> Self {
        FieldSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * unit_uniform(&mut self.rng)
    }

    /// Real field whose spectrum is supported on `max_a |k_a| <= max_mode`,
    /// with coefficients uniform in the unit disc scaled by `amplitude / (1 + |k|^2)^decay`.
    pub fn band_limited_with_decay(
        &mut self,
        grid: &Arc<TorusGrid>,
        max_mode: i64,
        amplitude: f64,
        decay: f64,
    ) -> SpectralField {
        let mut spectrum = vec![Complex64::default(); grid.len()];
        let half = grid.points_per_axis() as i64 / 2;
        let max_mode = max_mode.min(half - 1);
        for (i, c) in spectrum.iter_mut().enumerate() {
            let k = grid.wavenumber(i);
            if k.iter().all(|&ka| ka.abs() <= max_mode) {
                let k2: i64 = k.iter().map(|&ka| ka * ka).sum();
                let scale = amplitude / (1.0 + k2 as f64).powf(decay);
                let re = self.uniform(-1.0, 1.0);
                let im = self.uniform(-1.0, 1.0);
                *c = Complex64::new(re, im) * scale;
            }
        }
        // the real part of the inverse transform is the Hermitian projection
        let values = grid.inverse(&spectrum);
        SpectralField::from_values(grid, values).expect("finite by construction")
    }

    pub fn band_limited(&mut self, grid: &Arc<TorusGrid>, max_mode: i64, amplitude: f64) -> SpectralField {
        self.band_limited_with_decay(grid, max_mode, amplitude, 0.5)
    }

    /// Band-limited field rescaled so that `max |f| = sup`.
    pub fn bounded(&mut self, grid: &Arc<TorusGrid>, max_mode: i64, sup: f64) -> SpectralField {
        let f = self.band_limited(grid, max_mode, 1.0);
        let norm = f.sup_norm();
        if norm == 0.0 {
            return f;
        }
        let g = f.scale(sup / norm);
        if g.sup_norm() > sup {
            // rounding in the rescale can overshoot by an ulp
            g.scale(1.0 - 4.0 * f64::EPSILON)
        } else {
            g
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn band_limits_are_respected() {
        let grid = TorusGrid::new(2, 16).unwrap();
        let mut s = FieldSampler::new(0);
        let f = s.band_limited(&grid, 3, 1.0);
        for (i, c) in f.spectrum().iter().enumerate() {
            if grid.wavenumber(i).iter().any(|k| k.abs() > 3) {
                assert!(c.norm() < 1e-15);
            }
        }
        let b = s.bounded(&grid, 3, 0.9);
        assert_relative_eq!(b.sup_norm(), 0.9, epsilon = 1e-14);
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let grid = TorusGrid::new(1, 32).unwrap();
        let a = FieldSampler::new(42).band_limited(&grid, 8, 1.0);
        let b = FieldSampler::new(42).band_limited(&grid, 8, 1.0);
        assert_eq!(a.values(), b.values());
    }
}
