//! TOML run configuration shared by the library runners and the CLI.
//!
//! ```toml
//! [grid]
//! dim = 1
//! n = 128
//!
//! [potential]
//! theta = 1.0
//! theta0 = 2.0
//! lambda = 0.01
//! mode = "yosida"
//!
//! [problem]
//! alpha = 1.0
//! beta = 0.0
//! scheme = "limit"
//!
//! [time]
//! dt = 1e-4
//! t_end = 0.5
//! record_every = 100
//!
//! [initial]
//! kind = "modes"
//! mean = 0.2
//! modes = [{ k = [1], cos = 0.3 }]
//!
//! [noise]
//! num_modes = 16
//! lg_squared = 1.0
//! decay = 1.0
//! shape = "quartic"
//! seed = 7
//! ```

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{SpectralField, TorusGrid};
use crate::noise::{NoiseModel, NoiseShape, WienerDriver};
use crate::operators::{MixedOperatorParams, ResolventParams};
use crate::potential::{PotentialMode, PotentialSpec, YosidaParams};
use crate::solver::{InitialCondition, NoisePath, ProblemParams, Scheme, Stepper};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[derive(Default)]
pub struct RunConfig {
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub potential: PotentialSection,
    #[serde(default)]
    pub problem: ProblemSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub initial: InitialCondition,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub n: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { dim: 1, n: 128 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialSection {
    pub theta: f64,
    pub theta0: f64,
    /// Defaults to `theta0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<f64>,
    pub lambda: f64,
    pub mode: PotentialMode,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_newton_max_iter")]
    pub newton_max_iter: u32,
}

fn default_newton_tol() -> f64 {
    1e-12
}

fn default_newton_max_iter() -> u32 {
    100
}

impl Default for PotentialSection {
    fn default() -> Self {
        PotentialSection {
            theta: 1.0,
            theta0: 2.0,
            offset: None,
            lambda: 1e-2,
            mode: PotentialMode::Yosida,
            newton_tol: default_newton_tol(),
            newton_max_iter: default_newton_max_iter(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSection {
    pub alpha: f64,
    pub beta: f64,
    /// Regularized scheme only; defaults to `lambda / 2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    /// Defaults to `C_R = 2 theta0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    pub scheme: Scheme,
}

impl Default for ProblemSection {
    fn default() -> Self {
        ProblemSection {
            alpha: 1.0,
            beta: 0.0,
            xi: None,
            kappa: None,
            scheme: Scheme::Limit,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSection {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_record_every")]
    pub record_every: u64,
    /// Step of the underlying Brownian path; defaults to `dt`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_dt: Option<f64>,
}

fn default_record_every() -> u64 {
    100
}

impl Default for TimeSection {
    fn default() -> Self {
        TimeSection {
            dt: 1e-4,
            t_end: 0.5,
            record_every: default_record_every(),
            noise_dt: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeKind {
    Quartic,
    CustomTable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub num_modes: usize,
    /// `c_0`; give either this or `lg_squared`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lg_squared: Option<f64>,
    pub decay: f64,
    pub shape: ShapeKind,
    /// Values on a uniform grid of `[-1, 1]` for `shape = "custom-table"`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub table: Vec<f64>,
    pub seed: u64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            num_modes: 16,
            amplitude: None,
            lg_squared: Some(1.0),
            decay: 1.0,
            shape: ShapeKind::Quartic,
            table: Vec::new(),
            seed: 0,
        }
    }
}

/// Parameter grids read by the experiment runners.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub lambdas: Vec<f64>,
    pub alphas: Vec<f64>,
    /// Empty means `[dt, dt / 2]`.
    #[serde(default)]
    pub dts: Vec<f64>,
    pub perturbations: Vec<f64>,
    /// Moment order of the mass-gap estimate, 2 or 4.
    pub p: u32,
    pub paths: usize,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            lambdas: vec![1e-1, 3e-2, 1e-2, 3e-3, 1e-3],
            alphas: vec![1e-1, 3e-2, 1e-2, 3e-3, 1e-3],
            dts: Vec::new(),
            perturbations: vec![1e-3, 1e-4, 1e-5],
            p: 2,
            paths: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Write one diagnostics CSV per path.
    pub path_csv: bool,
    /// Write `phi` snapshots at every recorded time of path 0 (simulate only).
    pub snapshots: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            path_csv: true,
            snapshots: false,
        }
    }
}


impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_toml_str(&text)
    }

    /// Canonical TOML echo of the effective configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of [`RunConfig::to_toml`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        let mut out = String::with_capacity(64);
        for b in digest {
            write!(out, "{b:02x}").expect("write to string");
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        let spec = self.spec()?;
        self.problem_params(&spec)?.num_steps()?;
        self.noise_model()?;
        self.initial.build(&self.grid()?)?;
        if self.noise.amplitude.is_some() && self.noise.lg_squared.is_some() {
            return Err(Error::Config("give either noise.amplitude or noise.lg_squared, not both".into()));
        }
        if let Some(noise_dt) = self.time.noise_dt {
            NoisePath::new(WienerDriver::new(0, 0), self.time.dt, noise_dt)?;
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Arc<TorusGrid>> {
        TorusGrid::new(self.grid.dim, self.grid.n)
    }

    pub fn spec(&self) -> Result<PotentialSpec> {
        let p = &self.potential;
        PotentialSpec::with_offset(p.theta, p.theta0, p.offset.unwrap_or(p.theta0))
    }

    pub fn yosida(&self) -> Result<YosidaParams> {
        let y = YosidaParams {
            lambda: self.potential.lambda,
            newton_tol: self.potential.newton_tol,
            newton_max_iter: self.potential.newton_max_iter,
        };
        y.validate()?;
        Ok(y)
    }

    pub fn problem_params(&self, spec: &PotentialSpec) -> Result<ProblemParams> {
        let pr = &self.problem;
        let yosida = self.yosida()?;
        let resolvent = match pr.scheme {
            Scheme::Limit => None,
            Scheme::Regularized => Some(ResolventParams::new(pr.xi.unwrap_or(yosida.lambda / 2.0))?),
        };
        let params = ProblemParams {
            operator: MixedOperatorParams::new(pr.alpha, pr.beta)?,
            scheme: pr.scheme,
            mode: self.potential.mode,
            yosida,
            resolvent,
            kappa: pr.kappa.unwrap_or(spec.c_r()),
            dt: self.time.dt,
            t_end: self.time.t_end,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn noise_shape(&self) -> Result<NoiseShape> {
        match self.noise.shape {
            ShapeKind::Quartic => Ok(NoiseShape::Quartic),
            ShapeKind::CustomTable => NoiseShape::table(self.noise.table.clone()),
        }
    }

    pub fn noise_model(&self) -> Result<NoiseModel> {
        let n = &self.noise;
        let shape = self.noise_shape()?;
        match (n.amplitude, n.lg_squared) {
            (Some(c0), _) => NoiseModel::new(self.grid.dim, n.num_modes, c0, n.decay, shape),
            (None, Some(lg2)) => NoiseModel::with_lg_squared(self.grid.dim, n.num_modes, lg2, n.decay, shape),
            (None, None) => NoiseModel::new(self.grid.dim, n.num_modes, 0.0, n.decay, shape),
        }
    }

    pub fn stepper(&self) -> Result<Stepper> {
        let spec = self.spec()?;
        let params = self.problem_params(&spec)?;
        Stepper::new(self.grid()?, spec, params, self.noise_model()?)
    }

    pub fn initial_field(&self, grid: &Arc<TorusGrid>) -> Result<SpectralField> {
        self.initial.build(grid)
    }

    /// Brownian path `stream` of `noise.seed`, sampled at `noise_dt` and
    /// aggregated to the solver step `dt`.
    pub fn noise_path(&self, stream: u64, dt: f64) -> Result<NoisePath> {
        let driver = WienerDriver::new(self.noise.seed, stream);
        NoisePath::new(driver, dt, self.time.noise_dt.unwrap_or(dt))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_and_hash_is_stable() {
        let c = RunConfig::default();
        c.validate().unwrap();
        let back = RunConfig::from_toml_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        assert_eq!(c.hash().len(), 64);
        let mut d = c.clone();
        d.noise.seed = 1;
        assert_ne!(d.hash(), c.hash());
    }

    #[test]
    fn parses_the_documented_example() {
        let text = r#"
            [grid]
            dim = 1
            n = 64
            [potential]
            theta = 1.0
            theta0 = 2.0
            lambda = 0.01
            mode = "exact"
            [problem]
            alpha = 1.0
            beta = 0.5
            scheme = "regularized"
            [time]
            dt = 1e-4
            t_end = 0.01
            [initial]
            kind = "modes"
            mean = 0.1
            modes = [{ k = [1], cos = 0.3 }]
            [noise]
            num_modes = 8
            amplitude = 0.01
            decay = 1.0
            shape = "custom-table"
            table = [0.0, 0.5, 1.0, 0.5, 0.0]
            seed = 3
        "#;
        // regularized scheme with the exact potential is inconsistent
        assert!(RunConfig::from_toml_str(text).is_err());
        let c = RunConfig::from_toml_str(&text.replace("\"exact\"", "\"yosida\"")).unwrap();
        let stepper = c.stepper().unwrap();
        assert_eq!(stepper.params.resolvent.unwrap().xi, 0.005);
        assert_eq!(stepper.params.kappa, 4.0);
        assert!(matches!(stepper.noise.shape(), NoiseShape::Table(_)));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(RunConfig::from_toml_str("[grid]\ndim = 1\nn = 64\nextra = 1").is_err());
        assert!(RunConfig::from_toml_str("[grid]\ndim = 1\nn = 100").is_err());
        let mut c = RunConfig::default();
        c.time.noise_dt = Some(3e-5);
        assert!(c.validate().is_err());
        c.time.noise_dt = Some(5e-5);
        c.validate().unwrap();
    }
}
