//! Periodic fields on the unit torus `T^d = R^d / Z^d` and their Fourier calculus.
//!
//! Values are stored row-major (last axis fastest) on the uniform grid
//! `x_j = j / N`. The spectrum is normalized so that
//! `values(x) = sum_k spectrum_k exp(2 pi i k.x)`, hence the zero mode is
//! the spatial mean and `||f||_H^2 = sum_k |f_k|^2` (the torus has unit measure).
//!
//! Differentiation multipliers (`gradient`, `laplacian`) drop the Nyquist
//! component `k_a = -N/2` along the differentiated axis, so that
//! `laplacian == divergence . gradient` holds mode by mode. Norms use the full
//! symbol `|2 pi k|^2`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Poincare constant of the unit torus, `1 / (2 pi)`.
pub const POINCARE_CONSTANT: f64 = 1.0 / (2.0 * PI);

pub struct TorusGrid {
    dim: usize,
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    wavenumbers: Vec<[i64; 3]>,
    /// `|2 pi k|^2`, full symbol.
    sq_freq: Vec<f64>,
    /// `sum_a (2 pi k_a)^2` without the Nyquist components.
    lap_symbol: Vec<f64>,
    keep: Vec<bool>,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .finish()
    }
}

impl TorusGrid {
    /// Builds a grid with `n` points per axis in `dim` dimensions.
    pub fn new(dim: usize, n: usize) -> Result<Arc<Self>> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 4, got {n}"
            )));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);

        let len = n.pow(dim as u32);
        let mut wavenumbers = Vec::with_capacity(len);
        let mut sq_freq = Vec::with_capacity(len);
        let mut lap_symbol = Vec::with_capacity(len);
        let mut keep = Vec::with_capacity(len);
        let half = (n / 2) as i64;
        for idx in 0..len {
            let mut k = [0i64; 3];
            let mut rem = idx;
            for a in (0..dim).rev() {
                let j = (rem % n) as i64;
                rem /= n;
                k[a] = if j < half { j } else { j - n as i64 };
            }
            let mut q = 0.0;
            let mut lap = 0.0;
            let mut resolved = true;
            for &ka in k.iter().take(dim) {
                let w = 2.0 * PI * ka as f64;
                q += w * w;
                if ka != -half {
                    lap += w * w;
                }
                if 3 * ka.unsigned_abs() as usize >= n {
                    resolved = false;
                }
            }
            wavenumbers.push(k);
            sq_freq.push(q);
            lap_symbol.push(lap);
            keep.push(resolved);
        }

        Ok(Arc::new(TorusGrid {
            dim,
            n,
            forward,
            inverse,
            wavenumbers,
            sq_freq,
            lap_symbol,
            keep,
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    /// Total number of grid points, `N^d`.
    pub fn len(&self) -> usize {
        self.wavenumbers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wavenumbers.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Integer wavenumber of the spectral slot `idx`.
    pub fn wavenumber(&self, idx: usize) -> &[i64] {
        &self.wavenumbers[idx][..self.dim]
    }

    /// `|2 pi k|^2` for every spectral slot.
    pub fn sq_frequencies(&self) -> &[f64] {
        &self.sq_freq
    }

    /// Whether slot `idx` survives the 2/3 truncation.
    pub fn is_resolved(&self, idx: usize) -> bool {
        self.keep[idx]
    }

    pub fn is_nyquist(&self, idx: usize, axis: usize) -> bool {
        self.wavenumbers[idx][axis] == -((self.n / 2) as i64)
    }

    /// Coordinates of grid point `idx`.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let mut x = [0.0; 3];
        let mut rem = idx;
        for a in (0..self.dim).rev() {
            x[a] = (rem % self.n) as f64 / self.n as f64;
            rem /= self.n;
        }
        x
    }

    /// Normalized forward transform: the zero mode is the mean.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(values.len(), self.len());
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, &self.forward);
        let scale = 1.0 / self.len() as f64;
        for c in &mut buf {
            *c *= scale;
        }
        buf
    }

    /// Inverse of [`TorusGrid::forward`]; returns the real part.
    pub fn inverse(&self, spectrum: &[Complex64]) -> Vec<f64> {
        debug_assert_eq!(spectrum.len(), self.len());
        let mut buf = spectrum.to_vec();
        self.transform(&mut buf, &self.inverse);
        buf.into_iter().map(|c| c.re).collect()
    }

    fn transform(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        if self.dim == 1 {
            plan.process_with_scratch(buf, &mut scratch);
            return;
        }
        let mut line = vec![Complex64::default(); n];
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let block = stride * n;
            for start in (0..buf.len()).step_by(block) {
                for offset in 0..stride {
                    let base = start + offset;
                    for (j, slot) in line.iter_mut().enumerate() {
                        *slot = buf[base + j * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (j, &value) in line.iter().enumerate() {
                        buf[base + j * stride] = value;
                    }
                }
            }
        }
    }

    /// Zeroes every slot outside the 2/3 band.
    pub fn truncate(&self, spectrum: &mut [Complex64]) {
        for (c, &keep) in spectrum.iter_mut().zip(&self.keep) {
            if !keep {
                *c = Complex64::default();
            }
        }
    }

    pub(crate) fn lap_symbol(&self) -> &[f64] {
        &self.lap_symbol
    }

    /// Spectral derivative multiplier `i 2 pi k_axis`, zero at the axis Nyquist slot.
    pub(crate) fn derivative_factor(&self, idx: usize, axis: usize) -> Complex64 {
        if self.is_nyquist(idx, axis) {
            Complex64::default()
        } else {
            Complex64::new(0.0, 2.0 * PI * self.wavenumbers[idx][axis] as f64)
        }
    }
}

/// A real periodic scalar field with a lazily cached spectrum.
#[derive(Clone)]
pub struct SpectralField {
    grid: Arc<TorusGrid>,
    values: Vec<f64>,
    spectrum: OnceLock<Vec<Complex64>>,
}

impl fmt::Debug for SpectralField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralField")
            .field("grid", &self.grid)
            .field("mean", &self.mean())
            .finish()
    }
}

impl SpectralField {
    /// Wraps physical values; rejects non-finite entries.
    pub fn from_values(grid: &Arc<TorusGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(SpectralField {
            grid: Arc::clone(grid),
            values,
            spectrum: OnceLock::new(),
        })
    }

    /// Builds a field from its spectrum. The given spectrum is kept as the
    /// cached representation, so `mean()` returns its zero mode bit for bit.
    pub fn from_spectrum(grid: &Arc<TorusGrid>, spectrum: Vec<Complex64>) -> Self {
        assert_eq!(spectrum.len(), grid.len(), "spectrum length mismatch");
        let values = grid.inverse(&spectrum);
        let cache = OnceLock::new();
        let _ = cache.set(spectrum);
        SpectralField {
            grid: Arc::clone(grid),
            values,
            spectrum: cache,
        }
    }

    pub fn zeros(grid: &Arc<TorusGrid>) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Arc<TorusGrid>, c: f64) -> Self {
        let mut spectrum = vec![Complex64::default(); grid.len()];
        spectrum[0] = Complex64::new(c, 0.0);
        let cache = OnceLock::new();
        let _ = cache.set(spectrum);
        SpectralField {
            grid: Arc::clone(grid),
            values: vec![c; grid.len()],
            spectrum: cache,
        }
    }

    /// Samples `f` at the grid points.
    pub fn from_fn(grid: &Arc<TorusGrid>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..grid.len())
            .map(|i| f(&grid.point(i)[..grid.dim()]))
            .collect();
        Self::from_values(grid, values)
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Normalized Fourier coefficients, computed on first access.
    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum.get_or_init(|| self.grid.forward(&self.values))
    }

    /// Spatial mean, i.e. the zero Fourier mode.
    pub fn mean(&self) -> f64 {
        self.spectrum()[0].re
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `L^2` norm with unit-measure normalization.
    pub fn l2_norm(&self) -> f64 {
        self.weighted_norm(|_| 1.0)
    }

    /// `||grad f||_H`.
    pub fn grad_norm(&self) -> f64 {
        self.weighted_norm(|q| q)
    }

    /// `(sum_k (1 + |2 pi k|^2)^s |f_k|^2)^(1/2)` for `s in [-2, 2]`.
    pub fn sobolev_norm(&self, s: f64) -> Result<f64> {
        if !(-2.0..=2.0).contains(&s) {
            return Err(Error::param(format!("Sobolev order {s} outside [-2, 2]")));
        }
        Ok(self.weighted_norm(|q| (1.0 + q).powf(s)))
    }

    /// `(sum_k w(|2 pi k|^2) |f_k|^2)^(1/2)`.
    pub fn weighted_norm(&self, weight: impl Fn(f64) -> f64) -> f64 {
        self.spectrum()
            .iter()
            .zip(self.grid.sq_frequencies())
            .map(|(c, &q)| weight(q) * c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `(f, g)_H` computed from the grid values.
    pub fn inner(&self, other: &SpectralField) -> f64 {
        let sum: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        sum / self.grid.len() as f64
    }

    /// Applies a real mode-wise multiplier given the full symbol `|2 pi k|^2`.
    pub fn apply_symbol(&self, symbol: impl Fn(f64) -> f64) -> SpectralField {
        let spectrum = self
            .spectrum()
            .iter()
            .zip(self.grid.sq_frequencies())
            .map(|(c, &q)| c * symbol(q))
            .collect();
        SpectralField::from_spectrum(&self.grid, spectrum)
    }

    pub fn laplacian(&self) -> SpectralField {
        let mut spectrum: Vec<Complex64> = self
            .spectrum()
            .iter()
            .zip(self.grid.lap_symbol())
            .map(|(c, &lap)| c * -lap)
            .collect();
        spectrum[0] = Complex64::default();
        SpectralField::from_spectrum(&self.grid, spectrum)
    }

    pub fn derivative(&self, axis: usize) -> SpectralField {
        let mut spectrum: Vec<Complex64> = self
            .spectrum()
            .iter()
            .enumerate()
            .map(|(i, c)| c * self.grid.derivative_factor(i, axis))
            .collect();
        spectrum[0] = Complex64::default();
        SpectralField::from_spectrum(&self.grid, spectrum)
    }

    pub fn gradient(&self) -> VectorField {
        VectorField {
            components: (0..self.grid.dim()).map(|a| self.derivative(a)).collect(),
        }
    }

    /// Copy with every mode outside the 2/3 band removed.
    pub fn truncated(&self) -> SpectralField {
        if self.is_band_limited() {
            return self.clone();
        }
        let mut spectrum = self.spectrum().to_vec();
        self.grid.truncate(&mut spectrum);
        SpectralField::from_spectrum(&self.grid, spectrum)
    }

    pub fn is_band_limited(&self) -> bool {
        self.spectrum()
            .iter()
            .enumerate()
            .all(|(i, c)| self.grid.is_resolved(i) || (c.re == 0.0 && c.im == 0.0))
    }

    /// Pointwise product with 2/3-rule truncation of inputs and output.
    pub fn dealiased_product(&self, other: &SpectralField) -> SpectralField {
        let a = self.truncated();
        let b = other.truncated();
        let values: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| x * y).collect();
        Self::truncated_from_values(&self.grid, &values)
    }

    /// Applies `f` pointwise to the truncated field and truncates the result.
    pub fn map_dealiased(&self, f: impl Fn(f64) -> f64) -> SpectralField {
        let input = self.truncated();
        let values: Vec<f64> = input.values.iter().map(|&v| f(v)).collect();
        Self::truncated_from_values(&self.grid, &values)
    }

    /// Fallible pointwise map; the closure receives the grid index.
    pub fn try_map_dealiased(&self, f: impl Fn(usize, f64) -> Result<f64>) -> Result<SpectralField> {
        let input = self.truncated();
        let values = input
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| f(i, v))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::truncated_from_values(&self.grid, &values))
    }

    pub(crate) fn truncated_from_values(grid: &Arc<TorusGrid>, values: &[f64]) -> SpectralField {
        let mut spectrum = grid.forward(values);
        grid.truncate(&mut spectrum);
        SpectralField::from_spectrum(grid, spectrum)
    }

    /// `self + c * other`, combined in spectral space.
    pub fn axpy(&self, c: f64, other: &SpectralField) -> SpectralField {
        let spectrum = self
            .spectrum()
            .iter()
            .zip(other.spectrum())
            .map(|(a, b)| a + b * c)
            .collect();
        SpectralField::from_spectrum(&self.grid, spectrum)
    }

    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        self.axpy(-1.0, other)
    }

    pub fn scale(&self, c: f64) -> SpectralField {
        let spectrum = self.spectrum().iter().map(|a| a * c).collect();
        SpectralField::from_spectrum(&self.grid, spectrum)
    }

    /// `self - mean(self)`.
    pub fn zero_mean(&self) -> SpectralField {
        let mut spectrum = self.spectrum().to_vec();
        spectrum[0] = Complex64::default();
        SpectralField::from_spectrum(&self.grid, spectrum)
    }

    pub fn add_constant(&self, c: f64) -> SpectralField {
        let mut spectrum = self.spectrum().to_vec();
        spectrum[0] += c;
        SpectralField::from_spectrum(&self.grid, spectrum)
    }
}

/// A vector field with one component per torus axis.
#[derive(Clone, Debug)]
pub struct VectorField {
    components: Vec<SpectralField>,
}

impl VectorField {
    pub fn new(grid: &Arc<TorusGrid>, components: Vec<SpectralField>) -> Result<Self> {
        if components.len() != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: grid.dim(),
                found: components.len(),
            });
        }
        Ok(VectorField { components })
    }

    pub fn components(&self) -> &[SpectralField] {
        &self.components
    }

    /// `||v||_H = (sum_a ||v_a||^2)^(1/2)`.
    pub fn l2_norm(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.l2_norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Spectral divergence; the zero mode of the result is exactly zero.
    pub fn divergence(&self) -> Result<SpectralField> {
        let first = self
            .components
            .first()
            .ok_or(Error::DimensionMismatch { expected: 1, found: 0 })?;
        let grid = first.grid();
        if self.components.len() != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: grid.dim(),
                found: self.components.len(),
            });
        }
        let mut spectrum = vec![Complex64::default(); grid.len()];
        for (axis, comp) in self.components.iter().enumerate() {
            for (i, (out, c)) in spectrum.iter_mut().zip(comp.spectrum()).enumerate() {
                *out += c * grid.derivative_factor(i, axis);
            }
        }
        spectrum[0] = Complex64::default();
        Ok(SpectralField::from_spectrum(grid, spectrum))
    }
}
