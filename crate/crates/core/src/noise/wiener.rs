use std::f64::consts::PI;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Counter-based driver for the `K` scalar Brownian motions of the truncated
/// cylindrical Wiener process.
///
/// The increment of mode `j` over fine step `n` is a pure function of
/// `(seed, stream, n, j)`: the ChaCha keystream for `(seed, stream)` is
/// addressed directly at the block belonging to step `n`, so increments can
/// be drawn in any order and from any thread.
#[derive(Clone, Debug)]
pub struct WienerDriver {
    seed: u64,
    stream: u64,
    base: ChaCha8Rng,
}

impl WienerDriver {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut base = ChaCha8Rng::seed_from_u64(seed);
        base.set_stream(stream);
        WienerDriver { seed, stream, base }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    fn standard_normals(&self, step_index: u64, out: &mut [f64]) {
        let pairs = out.len().div_ceil(2) as u128;
        // two u64 (four 32-bit words) per Box-Muller pair
        let words_per_step = 4 * pairs;
        let mut rng = self.base.clone();
        rng.set_word_pos(step_index as u128 * words_per_step);
        for chunk in out.chunks_mut(2) {
            let u1 = ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
            let u2 = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            let r = (-2.0 * u1.ln()).sqrt();
            let (s, c) = (2.0 * PI * u2).sin_cos();
            chunk[0] = r * c;
            if let Some(second) = chunk.get_mut(1) {
                *second = r * s;
            }
        }
    }

    /// `K` independent `N(0, dt)` increments for fine step `step_index`.
    pub fn increments(&self, step_index: u64, dt: f64, modes: usize) -> Vec<f64> {
        let mut out = vec![0.0; modes];
        self.standard_normals(step_index, &mut out);
        let sd = dt.sqrt();
        for z in &mut out {
            *z *= sd;
        }
        out
    }

    /// Increments over coarse step `coarse_index`, summed from `stride` fine
    /// steps of length `fine_dt`. With `stride = 1` this equals [`Self::increments`].
    pub fn aggregated_increments(&self, coarse_index: u64, stride: u64, fine_dt: f64, modes: usize) -> Vec<f64> {
        let mut total = vec![0.0; modes];
        let mut buf = vec![0.0; modes];
        let sd = fine_dt.sqrt();
        for fine in coarse_index * stride..(coarse_index + 1) * stride {
            self.standard_normals(fine, &mut buf);
            for (t, z) in total.iter_mut().zip(&buf) {
                *t += z * sd;
            }
        }
        total
    }
}
