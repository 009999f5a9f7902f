//! The operator family `A_{alpha beta}`, its zero-mean inverse, the dual norms
//! built from it, and the elliptic resolvent `R_xi = (I - xi Laplacian)^{-1}`.
//!
//! All of these are diagonal in Fourier space. With `q = |2 pi k|^2`:
//!
//! | operator | symbol on `k != 0` | zero mode |
//! |---|---|---|
//! | `A` | `alpha q + beta` | 0 |
//! | `N` | `1 / (alpha q + beta)` | 0 |
//! | `R_xi` | `1 / (1 + xi q)` | 1 |
//!
//! The `V_0^*` norm is taken through the Riesz map `-Laplacian` on zero-mean
//! fields, `||v||_{V_0^*}^2 = sum_{k != 0} |v_k|^2 / q`, i.e. `A` with
//! `alpha = 1, beta = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SpectralField;

/// Tolerance on `|mean|` for inputs that must be zero-mean.
pub const ZERO_MEAN_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedOperatorParams {
    pub alpha: f64,
    pub beta: f64,
}

impl MixedOperatorParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let p = MixedOperatorParams { alpha, beta };
        p.validate()?;
        Ok(p)
    }

    /// The Riesz case `alpha = 1, beta = 0`.
    pub fn riesz() -> Self {
        MixedOperatorParams { alpha: 1.0, beta: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && (0.0..=1.0).contains(&self.beta) && self.alpha + self.beta > 0.0) {
            return Err(Error::param(format!(
                "need alpha >= 0, beta in [0, 1], alpha + beta > 0; got alpha = {}, beta = {}",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }

    /// `a(q) = alpha q + beta`, valid for `q > 0`.
    #[inline]
    pub fn symbol(&self, q: f64) -> f64 {
        self.alpha * q + self.beta
    }

    fn require_alpha(&self) -> Result<()> {
        if self.alpha > 0.0 {
            Ok(())
        } else {
            Err(Error::param("dual norms require alpha > 0"))
        }
    }
}

fn nonzero_modes(q: f64, value: f64) -> f64 {
    if q == 0.0 {
        0.0
    } else {
        value
    }
}

fn require_zero_mean(field: &SpectralField) -> Result<()> {
    let mean = field.mean();
    if mean.abs() > ZERO_MEAN_TOL {
        Err(Error::NonZeroMean { mean })
    } else {
        Ok(())
    }
}

/// `A_{alpha beta} f`; constants are annihilated.
pub fn apply_a(field: &SpectralField, params: &MixedOperatorParams) -> SpectralField {
    field.apply_symbol(|q| nonzero_modes(q, params.symbol(q)))
}

/// `N_{alpha beta} v` for zero-mean `v`.
pub fn apply_n(field: &SpectralField, params: &MixedOperatorParams) -> Result<SpectralField> {
    params.validate()?;
    require_zero_mean(field)?;
    Ok(field.apply_symbol(|q| nonzero_modes(q, 1.0 / params.symbol(q))))
}

/// `||v||_* = ||grad N v||` for zero-mean `v`.
pub fn dual_norm_star(v: &SpectralField, params: &MixedOperatorParams) -> Result<f64> {
    params.require_alpha()?;
    require_zero_mean(v)?;
    Ok(star_norm_unchecked(v, params))
}

pub(crate) fn star_norm_unchecked(v: &SpectralField, params: &MixedOperatorParams) -> f64 {
    v.weighted_norm(|q| nonzero_modes(q, q / params.symbol(q).powi(2)))
}

/// `||v||_# = (||v - mean v||_*^2 + mean(v)^2)^(1/2)`.
pub fn dual_norm_sharp(v: &SpectralField, params: &MixedOperatorParams) -> Result<f64> {
    params.require_alpha()?;
    let mean = v.mean();
    Ok((star_norm_unchecked(v, params).powi(2) + mean * mean).sqrt())
}

/// `||v||_{V_0^*}` through the Riesz map `-Laplacian`.
pub fn v0_star_norm(v: &SpectralField) -> f64 {
    v.weighted_norm(|q| nonzero_modes(q, 1.0 / q))
}

/// `||v||_{V^*}` dual to the `H^1` norm `(||v||^2 + ||grad v||^2)^(1/2)`.
pub fn v_star_norm(v: &SpectralField) -> f64 {
    v.weighted_norm(|q| 1.0 / (1.0 + q))
}

/// `<A f, f>`.
pub fn a_pairing(f: &SpectralField, params: &MixedOperatorParams) -> f64 {
    f.weighted_norm(|q| nonzero_modes(q, params.symbol(q))).powi(2)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolventParams {
    pub xi: f64,
}

impl ResolventParams {
    pub fn new(xi: f64) -> Result<Self> {
        if !(xi > 0.0 && xi <= 1.0) {
            return Err(Error::param(format!("xi must lie in (0, 1], got {xi}")));
        }
        Ok(ResolventParams { xi })
    }
}

/// Solution `u` of `-xi Laplacian u + u = f` on the torus.
pub fn resolvent_rxi(f: &SpectralField, params: &ResolventParams) -> SpectralField {
    let xi = params.xi;
    f.apply_symbol(|q| 1.0 / (1.0 + xi * q))
}
