//! Stabilized semi-implicit Euler-Maruyama integration of the mixed
//! Cahn-Hilliard / conserved Allen-Cahn equation
//!
//! ```text
//! d phi + A_{alpha beta} mu dt = noise(phi) dW,     mu = -Laplacian phi + F'(phi)
//! ```
//!
//! in its limit form (`noise = div G`, exact or Yosida potential) and in the
//! regularized form (`noise = K_{lambda,xi}`, potential `F_lambda`).
//!
//! Each step treats `A(-Laplacian + kappa)` implicitly and `A(F' - kappa)`
//! explicitly; noise is evaluated at the left endpoint. With
//! `a = alpha q + beta` for every mode `k != 0`:
//!
//! ```text
//! phi_k^{n+1} = (phi_k^n - dt a G_k + N_k) / (1 + dt a (q + kappa)),   G = F'(phi^n) - kappa phi^n
//! ```
//!
//! The zero mode is left untouched by the limit scheme, so the mean is
//! conserved bit for bit; the regularized scheme adds the mean of its noise.

mod initial;
mod record;

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use self::initial::{InitialCondition, ModeTerm};
pub(crate) use self::record::Tracker;
pub use self::record::{mass_gap, TrajectoryRecord, CSV_HEADER};
use crate::error::{Error, Result};
use crate::grid::{SpectralField, TorusGrid};
use crate::noise::{NoiseModel, WienerDriver};
use crate::operators::{MixedOperatorParams, ResolventParams};
use crate::potential::{check_field_margin, PotentialMode, PotentialSpec, YosidaParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Conservative noise `div G(phi) dW`.
    Limit,
    /// Yosida potential with the regularized diffusion `K_{lambda,xi}`.
    Regularized,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemParams {
    pub operator: MixedOperatorParams,
    pub scheme: Scheme,
    pub mode: PotentialMode,
    pub yosida: YosidaParams,
    /// Only used by the regularized scheme; must satisfy `0 < xi < lambda`.
    pub resolvent: Option<ResolventParams>,
    pub kappa: f64,
    pub dt: f64,
    pub t_end: f64,
}

impl ProblemParams {
    /// Limit scheme with the given potential mode and `kappa = C_R`.
    pub fn limit(alpha: f64, beta: f64, mode: PotentialMode, lambda: f64, spec: &PotentialSpec, dt: f64, t_end: f64) -> Result<Self> {
        let p = ProblemParams {
            operator: MixedOperatorParams::new(alpha, beta)?,
            scheme: Scheme::Limit,
            mode,
            yosida: YosidaParams::new(lambda)?,
            resolvent: None,
            kappa: spec.c_r(),
            dt,
            t_end,
        };
        p.validate()?;
        Ok(p)
    }

    /// Regularized scheme with `xi = lambda / 2` and `kappa = C_R`.
    pub fn regularized(alpha: f64, beta: f64, lambda: f64, spec: &PotentialSpec, dt: f64, t_end: f64) -> Result<Self> {
        let p = ProblemParams {
            operator: MixedOperatorParams::new(alpha, beta)?,
            scheme: Scheme::Regularized,
            mode: PotentialMode::Yosida,
            yosida: YosidaParams::new(lambda)?,
            resolvent: Some(ResolventParams::new(lambda / 2.0)?),
            kappa: spec.c_r(),
            dt,
            t_end,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.operator.validate()?;
        self.yosida.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::param(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if !(self.kappa >= 0.0) {
            return Err(Error::param(format!("kappa must be >= 0, got {}", self.kappa)));
        }
        if self.scheme == Scheme::Regularized {
            if self.mode != PotentialMode::Yosida {
                return Err(Error::param("the regularized scheme requires the yosida potential"));
            }
            let xi = self
                .resolvent
                .ok_or_else(|| Error::param("the regularized scheme requires xi"))?
                .xi;
            if !(xi > 0.0 && xi < self.yosida.lambda) {
                return Err(Error::param(format!(
                    "need 0 < xi < lambda, got xi = {xi}, lambda = {}",
                    self.yosida.lambda
                )));
            }
        }
        Ok(())
    }

    /// Number of steps, `t_end / dt` rounded; fails when `t_end` is not a multiple of `dt`.
    pub fn num_steps(&self) -> Result<u64> {
        let n = (self.t_end / self.dt).round();
        if (n * self.dt - self.t_end).abs() > 1e-9 * self.t_end.max(self.dt) {
            return Err(Error::param(format!(
                "t_end = {} is not a multiple of dt = {}",
                self.t_end, self.dt
            )));
        }
        Ok(n as u64)
    }
}

#[derive(Clone, Debug)]
pub struct SolverState {
    pub phi: SpectralField,
    pub time: f64,
    pub step_index: u64,
}

impl SolverState {
    pub fn new(phi: SpectralField) -> Self {
        SolverState {
            phi,
            time: 0.0,
            step_index: 0,
        }
    }

    pub fn mass(&self) -> f64 {
        self.phi.mean()
    }
}

/// Brownian increments for one run: `(driver, stride, fine_dt)`, where each
/// solver step spans `stride` fine steps of the driver.
#[derive(Clone, Debug)]
pub struct NoisePath {
    pub driver: WienerDriver,
    pub stride: u64,
    pub fine_dt: f64,
}

impl NoisePath {
    pub fn new(driver: WienerDriver, dt: f64, fine_dt: f64) -> Result<Self> {
        let ratio = dt / fine_dt;
        let stride = ratio.round();
        if !(stride >= 1.0) || (stride - ratio).abs() > 1e-9 * ratio {
            return Err(Error::param(format!(
                "dt = {dt} must be an integer multiple of the noise step {fine_dt}"
            )));
        }
        Ok(NoisePath {
            driver,
            stride: stride as u64,
            fine_dt,
        })
    }

    /// Path whose fine step equals the solver step.
    pub fn unit(driver: WienerDriver, dt: f64) -> Self {
        NoisePath {
            driver,
            stride: 1,
            fine_dt: dt,
        }
    }

    pub fn increments(&self, step_index: u64, modes: usize) -> Vec<f64> {
        self.driver
            .aggregated_increments(step_index, self.stride, self.fine_dt, modes)
    }
}

/// Everything a step needs besides the state.
#[derive(Clone, Debug)]
pub struct Stepper {
    pub grid: Arc<TorusGrid>,
    pub spec: PotentialSpec,
    pub params: ProblemParams,
    pub noise: NoiseModel,
}

impl Stepper {
    pub fn new(grid: Arc<TorusGrid>, spec: PotentialSpec, params: ProblemParams, noise: NoiseModel) -> Result<Self> {
        params.validate()?;
        if noise.dim() != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: grid.dim(),
                found: noise.dim(),
            });
        }
        Ok(Stepper {
            grid,
            spec,
            params,
            noise,
        })
    }

    /// Advances one step; `path = None` runs the deterministic problem.
    pub fn step(&self, state: &SolverState, path: Option<&NoisePath>) -> Result<SolverState> {
        self.try_step(state, path).map_err(|e| Error::Step {
            step: state.step_index,
            source: Box::new(e),
        })
    }

    fn try_step(&self, state: &SolverState, path: Option<&NoisePath>) -> Result<SolverState> {
        let grid = &self.grid;
        let p = &self.params;
        let phi = state.phi.truncated();
        let values = phi.values();
        let kappa = p.kappa;

        // explicit part F'(phi) - kappa phi, plus h'(J(phi)) for the regularized noise
        let mut explicit = Vec::with_capacity(values.len());
        let mut slope = Vec::new();
        match p.mode {
            PotentialMode::Exact => {
                check_field_margin(values)?;
                for &s in values {
                    explicit.push(self.spec.f_prime_exact(s)? - kappa * s);
                }
            }
            PotentialMode::Yosida => {
                let regularized = p.scheme == Scheme::Regularized;
                if regularized {
                    slope.reserve(values.len());
                }
                let two_theta = 2.0 * self.spec.theta();
                for &s in values {
                    let r = self.spec.resolvent(s, &p.yosida)?;
                    explicit.push(two_theta * r.log_ratio + self.spec.regular_prime(s) - kappa * s);
                    if regularized {
                        slope.push(self.noise.shape().d1(r.value));
                    }
                }
            }
        }
        let mut explicit_hat = grid.forward(&explicit);
        grid.truncate(&mut explicit_hat);

        let noise_hat = match path {
            Some(path) if !self.noise.is_silent() => {
                let dw = path.increments(state.step_index, self.noise.num_modes());
                let eta = self.noise.axis_increments(&dw);
                Some(match p.scheme {
                    Scheme::Limit => self.noise.limit_increment(&phi, &eta)?,
                    Scheme::Regularized => {
                        let resolvent = p.resolvent.expect("validated");
                        self.noise
                            .regularized_increment(grid, &slope, &phi, &eta, &resolvent)
                    }
                })
            }
            _ => None,
        };

        let q = grid.sq_frequencies();
        let lap = grid.lap_symbol();
        let dt = p.dt;
        let current = phi.spectrum();
        let mut next = vec![Complex64::default(); grid.len()];
        for i in 1..grid.len() {
            let a = p.operator.symbol(q[i]);
            let mut numerator = current[i] - explicit_hat[i] * (dt * a);
            if let Some(n) = &noise_hat {
                numerator += n[i];
            }
            next[i] = numerator / (1.0 + dt * a * (lap[i] + kappa));
        }
        next[0] = current[0];
        if p.scheme == Scheme::Regularized {
            if let Some(n) = &noise_hat {
                next[0] += n[0];
            }
        }
        if let Some((index, c)) = next.iter().enumerate().find(|(_, c)| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::NonFinite { index, value: c.re });
        }

        Ok(SolverState {
            phi: SpectralField::from_spectrum(grid, next),
            time: (state.step_index + 1) as f64 * dt,
            step_index: state.step_index + 1,
        })
    }

    /// `mu = -Laplacian phi + F'(phi)` in the configured potential mode.
    pub fn chemical_potential(&self, phi: &SpectralField) -> Result<SpectralField> {
        chemical_potential(phi, &self.spec, self.params.mode, &self.params.yosida)
    }

    /// Runs to `t_end`, sampling diagnostics every `record_every` steps (and at the end).
    /// A failing step ends the run early with `failure` set on the record.
    pub fn run(
        &self,
        phi0: SpectralField,
        path: Option<&NoisePath>,
        record_every: u64,
        keep_fields: bool,
    ) -> Result<TrajectoryRecord> {
        let steps = self.params.num_steps()?;
        let mut state = SolverState::new(phi0.truncated());
        let mut tracker = Tracker::new(self, &state, steps, record_every, keep_fields);
        while state.step_index < steps {
            match self.step(&state, path) {
                Ok(next) => state = next,
                Err(e) => return Ok(tracker.fail(e.to_string())),
            }
            tracker.observe(self, &state);
        }
        Ok(tracker.finish())
    }
}

/// `mu = -Laplacian phi + F'(phi)`, dealiased.
pub fn chemical_potential(
    phi: &SpectralField,
    spec: &PotentialSpec,
    mode: PotentialMode,
    yosida: &YosidaParams,
) -> Result<SpectralField> {
    let nonlinear = spec.f_prime_field(phi, mode, yosida)?;
    Ok(nonlinear.sub(&phi.truncated().laplacian()))
}

/// `E(phi) = 1/2 ||grad phi||^2 + mean F(phi) + offset`, with `F_lambda` in Yosida mode.
pub fn energy(phi: &SpectralField, spec: &PotentialSpec, mode: PotentialMode, yosida: &YosidaParams) -> Result<f64> {
    let gradient = 0.5 * phi.grad_norm().powi(2);
    let mut sum = 0.0;
    for (index, &s) in phi.values().iter().enumerate() {
        sum += match mode {
            PotentialMode::Exact => spec.f(s).map_err(|_| Error::DomainViolation { index, value: s, bound: 1.0 })?,
            PotentialMode::Yosida => spec.f_lambda(s, yosida)?,
        };
    }
    Ok(gradient + sum / phi.grid().len() as f64 + spec.offset())
}
