use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{SpectralField, TorusGrid};
use crate::sampling::FieldSampler;

/// Initial means must satisfy `|mean| <= 1 - MEAN_MARGIN`.
pub const MEAN_MARGIN: f64 = 0.1;

/// One term `cos_amp cos(2 pi k.x) + sin_amp sin(2 pi k.x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeTerm {
    pub k: Vec<i64>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InitialCondition {
    /// Constant plus finitely many Fourier modes.
    Modes { mean: f64, modes: Vec<ModeTerm> },
    /// Band-limited random field, clamped to `[-clamp, clamp]` and then dealiased.
    Random {
        mean: f64,
        amplitude: f64,
        max_mode: i64,
        seed: u64,
        #[serde(default = "default_clamp")]
        clamp: f64,
    },
}

fn default_clamp() -> f64 {
    0.9
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition::Modes {
            mean: 0.2,
            modes: vec![
                ModeTerm { k: vec![1], cos: 0.3, sin: 0.0 },
                ModeTerm { k: vec![2], cos: 0.0, sin: 0.15 },
            ],
        }
    }
}

impl InitialCondition {
    pub fn mean(&self) -> f64 {
        match self {
            InitialCondition::Modes { mean, .. } | InitialCondition::Random { mean, .. } => *mean,
        }
    }

    /// Builds the dealiased initial field on `grid`.
    pub fn build(&self, grid: &Arc<TorusGrid>) -> Result<SpectralField> {
        let mean = self.mean();
        if !(mean.abs() <= 1.0 - MEAN_MARGIN) {
            return Err(Error::param(format!(
                "initial mean {mean} violates |mean| <= {}",
                1.0 - MEAN_MARGIN
            )));
        }
        let field = match self {
            InitialCondition::Modes { mean, modes } => {
                for m in modes {
                    if m.k.len() != grid.dim() {
                        return Err(Error::DimensionMismatch {
                            expected: grid.dim(),
                            found: m.k.len(),
                        });
                    }
                }
                SpectralField::from_fn(grid, |x| {
                    let mut v = *mean;
                    for m in modes {
                        let phase: f64 = m.k.iter().zip(x).map(|(&k, &xa)| k as f64 * xa).sum::<f64>() * 2.0 * PI;
                        v += m.cos * phase.cos() + m.sin * phase.sin();
                    }
                    v
                })?
            }
            InitialCondition::Random {
                mean,
                amplitude,
                max_mode,
                seed,
                clamp,
            } => {
                let mut sampler = FieldSampler::new(*seed);
                let noise = sampler.band_limited(grid, *max_mode, 1.0).zero_mean();
                let norm = noise.sup_norm();
                let scale = if norm > 0.0 { amplitude / norm } else { 0.0 };
                let values = noise
                    .values()
                    .iter()
                    .map(|v| (mean + scale * v).clamp(-clamp, *clamp))
                    .collect();
                SpectralField::from_values(grid, values)?
            }
        };
        let field = field.truncated();
        if !(field.sup_norm() < 1.0) {
            return Err(Error::param(format!(
                "initial field reaches |phi| = {}, outside (-1, 1)",
                field.sup_norm()
            )));
        }
        Ok(field)
    }
}
