//! Flory-Huggins potential `F = Psi + R` and its Yosida regularization.
//!
//! The singular part is `Psi(s) = theta [(1+s) ln(1+s) + (1-s) ln(1-s)]` on
//! `[-1, 1]` and the regular part is `R(s) = -theta0 s^2`. The resolvent
//! `J_lambda = (I + lambda Psi')^{-1}` is evaluated in the variable
//! `u = atanh(r)`: the equation `tanh(u) + 2 lambda theta u = s` is smooth and
//! monotone on all of `R`, which keeps `Psi'(J_lambda(s)) = 2 theta u`
//! accurate even when `J_lambda(s)` is closer to `+-1` than `f64` can resolve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SpectralField;

/// Largest `f64` strictly below one.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// Guard used by the exact potential: `|s| <= 1 - EXACT_MARGIN`.
pub const EXACT_MARGIN: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialMode {
    /// Logarithmic potential evaluated directly; requires `|phi| < 1`.
    Exact,
    /// Yosida-regularized potential `F_lambda = Psi_lambda + R`.
    Yosida,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialSpec {
    theta: f64,
    theta0: f64,
    offset: f64,
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec {
            theta: 1.0,
            theta0: 2.0,
            offset: 2.0,
        }
    }
}

impl PotentialSpec {
    /// Potential with `offset = theta0`, the smallest offset making `F + offset >= 0`.
    pub fn new(theta: f64, theta0: f64) -> Result<Self> {
        Self::with_offset(theta, theta0, theta0)
    }

    pub fn with_offset(theta: f64, theta0: f64, offset: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < theta0 && theta0.is_finite()) {
            return Err(Error::param(format!(
                "need 0 < theta < theta0, got theta = {theta}, theta0 = {theta0}"
            )));
        }
        if !(offset >= theta0) {
            return Err(Error::param(format!("offset {offset} must be >= theta0 = {theta0}")));
        }
        Ok(PotentialSpec { theta, theta0, offset })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Lipschitz constant of `R'`, `C_R = 2 theta0`.
    pub fn c_r(&self) -> f64 {
        2.0 * self.theta0
    }

    pub fn psi(&self, s: f64) -> Result<f64> {
        check_closed(s)?;
        let term = |x: f64| if x == 0.0 { 0.0 } else { x * x.ln() };
        Ok(self.theta * (term(1.0 + s) + term(1.0 - s)))
    }

    pub fn psi_prime(&self, s: f64) -> Result<f64> {
        check_open(s)?;
        Ok(2.0 * self.theta * s.atanh())
    }

    pub fn psi_second(&self, s: f64) -> Result<f64> {
        check_open(s)?;
        Ok(2.0 * self.theta / ((1.0 - s) * (1.0 + s)))
    }

    pub fn regular(&self, s: f64) -> f64 {
        -self.theta0 * s * s
    }

    pub fn regular_prime(&self, s: f64) -> f64 {
        -2.0 * self.theta0 * s
    }

    /// `F(s) = Psi(s) + R(s)` without the offset.
    pub fn f(&self, s: f64) -> Result<f64> {
        Ok(self.psi(s)? + self.regular(s))
    }

    /// `F'(s)` with the hard safety margin of the exact mode.
    pub fn f_prime_exact(&self, s: f64) -> Result<f64> {
        if !(s.abs() <= 1.0 - EXACT_MARGIN) {
            return Err(Error::DomainViolation {
                index: 0,
                value: s,
                bound: 1.0 - EXACT_MARGIN,
            });
        }
        Ok(2.0 * self.theta * s.atanh() + self.regular_prime(s))
    }

    /// `F''(0) = 2 theta - 2 theta0`.
    pub fn f_second_at_zero(&self) -> f64 {
        2.0 * self.theta - 2.0 * self.theta0
    }

    /// Solves `r + lambda Psi'(r) = s`.
    pub fn resolvent(&self, s: f64, params: &YosidaParams) -> Result<Resolvent> {
        let c = 2.0 * params.lambda * self.theta;
        let target = s.abs();
        let u = solve_tanh_linear(target, c, params).map_err(|residual| Error::ResolventDiverged {
            s,
            lambda: params.lambda,
            residual,
        })?;
        let u = u.copysign(s);
        Ok(Resolvent {
            value: u.tanh().clamp(-BELOW_ONE, BELOW_ONE),
            log_ratio: u,
        })
    }

    /// `J_lambda(s)`.
    pub fn resolvent_j(&self, s: f64, params: &YosidaParams) -> Result<f64> {
        Ok(self.resolvent(s, params)?.value)
    }

    /// `Psi'_lambda(s) = (s - J_lambda(s)) / lambda`, evaluated as `Psi'(J_lambda(s))`.
    pub fn yosida_prime(&self, s: f64, params: &YosidaParams) -> Result<f64> {
        Ok(2.0 * self.theta * self.resolvent(s, params)?.log_ratio)
    }

    /// Moreau envelope `Psi(J) + (s - J)^2 / (2 lambda)`.
    pub fn yosida_value(&self, s: f64, params: &YosidaParams) -> Result<f64> {
        let j = self.resolvent(s, params)?.value;
        Ok(self.psi(j)? + (s - j).powi(2) / (2.0 * params.lambda))
    }

    /// `Psi''_lambda(s) = Psi''(J) / (1 + lambda Psi''(J))`.
    pub fn yosida_second(&self, s: f64, params: &YosidaParams) -> Result<f64> {
        let u = self.resolvent(s, params)?.log_ratio;
        // 1 / Psi''(J) = (1 - J^2) / (2 theta) = sech^2(u) / (2 theta)
        let inv = 1.0 / (u.cosh().powi(2) * 2.0 * self.theta);
        Ok(1.0 / (params.lambda + inv))
    }

    /// `F'_lambda(s) = Psi'_lambda(s) + R'(s)`.
    pub fn f_prime_lambda(&self, s: f64, params: &YosidaParams) -> Result<f64> {
        Ok(self.yosida_prime(s, params)? + self.regular_prime(s))
    }

    pub fn f_lambda(&self, s: f64, params: &YosidaParams) -> Result<f64> {
        Ok(self.yosida_value(s, params)? + self.regular(s))
    }

    /// `F'` in the requested mode.
    pub fn f_prime(&self, s: f64, mode: PotentialMode, params: &YosidaParams) -> Result<f64> {
        match mode {
            PotentialMode::Exact => self.f_prime_exact(s),
            PotentialMode::Yosida => self.f_prime_lambda(s, params),
        }
    }

    /// Grid-wide `F'_lambda` with 2/3 dealiasing; errors carry the worst point.
    pub fn f_prime_lambda_field(&self, field: &SpectralField, params: &YosidaParams) -> Result<SpectralField> {
        self.f_prime_field(field, PotentialMode::Yosida, params)
    }

    /// Grid-wide `F'` in the requested mode with 2/3 dealiasing.
    pub fn f_prime_field(
        &self,
        field: &SpectralField,
        mode: PotentialMode,
        params: &YosidaParams,
    ) -> Result<SpectralField> {
        if mode == PotentialMode::Exact {
            check_field_margin(field.values())?;
        }
        field.try_map_dealiased(|index, s| {
            self.f_prime(s, mode, params).map_err(|e| match e {
                Error::ResolventDiverged { .. } => e,
                _ => Error::DomainViolation {
                    index,
                    value: s,
                    bound: 1.0 - EXACT_MARGIN,
                },
            })
        })
    }
}

/// Reports the worst grid point exceeding the exact-mode margin.
pub(crate) fn check_field_margin(values: &[f64]) -> Result<()> {
    let bound = 1.0 - EXACT_MARGIN;
    let worst = values
        .iter()
        .enumerate()
        .filter(|(_, v)| !(v.abs() <= bound))
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()));
    match worst {
        Some((index, &value)) => Err(Error::DomainViolation { index, value, bound }),
        None => Ok(()),
    }
}

/// Output of the resolvent: `value = J_lambda(s)` and `log_ratio = atanh(J_lambda(s))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Resolvent {
    pub value: f64,
    pub log_ratio: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct YosidaParams {
    pub lambda: f64,
    #[serde(default = "default_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_max_iter")]
    pub newton_max_iter: u32,
}

fn default_tol() -> f64 {
    1e-12
}

fn default_max_iter() -> u32 {
    100
}

impl YosidaParams {
    pub fn new(lambda: f64) -> Result<Self> {
        let params = YosidaParams {
            lambda,
            newton_tol: default_tol(),
            newton_max_iter: default_max_iter(),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::param(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.newton_tol > 0.0 && self.newton_tol <= 1e-10) {
            return Err(Error::param(format!(
                "newton_tol must lie in (0, 1e-10], got {}",
                self.newton_tol
            )));
        }
        if self.newton_max_iter == 0 {
            return Err(Error::param("newton_max_iter must be positive"));
        }
        Ok(())
    }
}

fn check_closed(s: f64) -> Result<()> {
    if s.abs() <= 1.0 {
        Ok(())
    } else {
        Err(Error::DomainViolation { index: 0, value: s, bound: 1.0 })
    }
}

fn check_open(s: f64) -> Result<()> {
    if s.abs() < 1.0 {
        Ok(())
    } else {
        Err(Error::DomainViolation { index: 0, value: s, bound: 1.0 })
    }
}

/// Root `u >= 0` of `tanh(u) + c u = s` for `s >= 0`, by Newton with a
/// bisection safeguard. Returns the final residual on failure.
fn solve_tanh_linear(s: f64, c: f64, params: &YosidaParams) -> std::result::Result<f64, f64> {
    if s == 0.0 {
        return Ok(0.0);
    }
    if !s.is_finite() {
        return Err(f64::NAN);
    }
    let g = |u: f64| u.tanh() + c * u - s;
    // g(lo) <= 0 <= g(hi)
    let mut lo = ((s - 1.0) / c).max(0.0);
    let mut hi = s / c;
    if s < 1.0 {
        hi = hi.min(s.atanh());
    }
    let eps = 1e-9;
    let mut u = s.clamp(-1.0 + eps, 1.0 - eps).atanh().clamp(lo, hi);
    let mut residual = g(u);
    for _ in 0..params.newton_max_iter {
        if residual.abs() <= params.newton_tol {
            return Ok(u);
        }
        if residual < 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        let sech2 = 1.0 / u.cosh().powi(2);
        let next = u - residual / (sech2 + c);
        u = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        residual = g(u);
        if hi - lo <= f64::EPSILON * hi.abs() {
            break;
        }
    }
    if residual.abs() <= params.newton_tol {
        Ok(u)
    } else {
        Err(residual)
    }
}

/// Smallest `M` (up to bisection accuracy) with `Psi_lambda(s) >= s^2/M - M`
/// on every sampled `(s, lambda)`.
pub fn empirical_lower_bound_constant(
    spec: &PotentialSpec,
    lambdas: &[f64],
    samples: &[f64],
) -> Result<f64> {
    let mut values = Vec::with_capacity(lambdas.len() * samples.len());
    for &lambda in lambdas {
        let params = YosidaParams::new(lambda)?;
        for &s in samples {
            values.push((s, spec.yosida_value(s, &params)?));
        }
    }
    let holds = |m: f64| values.iter().all(|&(s, v)| v >= s * s / m - m);
    let mut hi = 1.0;
    while !holds(hi) {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::param("no quadratic lower bound found"));
        }
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if mid > 0.0 && holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
