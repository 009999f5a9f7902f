//! Conservative noise: the truncated coefficient family `g_k(s) = c_k h(s) e_{a(k)}`,
//! the divergence operator of the limit dynamics and the regularized
//! diffusion `K_{lambda,xi}` of the approximation scheme.
//!
//! Mode `k = 1, ..., K` has amplitude `c_k = c_0 k^{-r}` and points along the
//! axis `a(k) = (k - 1) mod d`. Every mode along one axis acts through the
//! same spatial field, so the solver aggregates increments per axis before
//! assembling the noise (see [`NoiseModel::axis_increments`]).

mod shape;
mod wiener;

use std::sync::Arc;

use num_complex::Complex64;

pub use self::shape::{CubicSpline, NoiseShape};
pub use self::wiener::WienerDriver;
use crate::error::{Error, Result};
use crate::grid::{SpectralField, TorusGrid};
use crate::operators::{dual_norm_star, resolvent_rxi, MixedOperatorParams, ResolventParams};
use crate::potential::{PotentialSpec, YosidaParams};

/// Target space for Hilbert-Schmidt norms of the divergence operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HsSpace {
    H,
    V0Star,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseModel {
    dim: usize,
    num_modes: usize,
    amplitude: f64,
    decay: f64,
    shape: NoiseShape,
}

impl NoiseModel {
    pub fn new(dim: usize, num_modes: usize, amplitude: f64, decay: f64, shape: NoiseShape) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::param(format!("noise dimension {dim} not in 1..=3")));
        }
        if !(decay > 0.5) {
            return Err(Error::param(format!("decay must exceed 1/2, got {decay}")));
        }
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::param(format!("amplitude must be finite and >= 0, got {amplitude}")));
        }
        Ok(NoiseModel {
            dim,
            num_modes,
            amplitude,
            decay,
            shape,
        })
    }

    /// Chooses `c_0` so that the truncated family has the requested `L_G^2`.
    pub fn with_lg_squared(dim: usize, num_modes: usize, lg_squared: f64, decay: f64, shape: NoiseShape) -> Result<Self> {
        if !(lg_squared >= 0.0) {
            return Err(Error::param(format!("L_G^2 must be >= 0, got {lg_squared}")));
        }
        let unit = NoiseModel::new(dim, num_modes, 1.0, decay, shape)?;
        let base = unit.lg_squared();
        let amplitude = if base > 0.0 { (lg_squared / base).sqrt() } else { 0.0 };
        NoiseModel::new(dim, num_modes, amplitude, decay, unit.shape)
    }

    /// `G = 0`.
    pub fn silent(dim: usize) -> Self {
        NoiseModel {
            dim,
            num_modes: 0,
            amplitude: 0.0,
            decay: 1.0,
            shape: NoiseShape::Quartic,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn shape(&self) -> &NoiseShape {
        &self.shape
    }

    pub fn is_silent(&self) -> bool {
        self.num_modes == 0 || self.amplitude == 0.0
    }

    /// `c_k` for 1-based mode index `k`.
    pub fn coefficient(&self, k: usize) -> f64 {
        self.amplitude * (k as f64).powf(-self.decay)
    }

    /// Axis of 1-based mode `k`.
    pub fn axis(&self, k: usize) -> usize {
        (k - 1) % self.dim
    }

    /// `L_G^2 = sum_k c_k^2 ||h||_{W^{2,inf}}^2` over the truncated family.
    pub fn lg_squared(&self) -> f64 {
        let w = self.shape.w2inf_norm();
        (1..=self.num_modes).map(|k| self.coefficient(k).powi(2)).sum::<f64>() * w * w
    }

    pub fn lg(&self) -> f64 {
        self.lg_squared().sqrt()
    }

    /// `L_G^2 < 1/2`, the one-dimensional Allen-Cahn uniqueness condition.
    pub fn allen_cahn_unique(&self) -> bool {
        self.lg_squared() < 0.5
    }

    /// `L_G <= sqrt(2)`.
    pub fn within_sqrt2(&self) -> bool {
        self.lg_squared() <= 2.0
    }

    /// Per-axis aggregated increments `eta_a = sum_{k: a(k) = a} c_k dW_k`.
    pub fn axis_increments(&self, dw: &[f64]) -> Vec<f64> {
        let mut eta = vec![0.0; self.dim];
        for (j, w) in dw.iter().enumerate().take(self.num_modes) {
            let k = j + 1;
            eta[self.axis(k)] += self.coefficient(k) * w;
        }
        eta
    }

    /// `sum_{k: a(k) = axis} c_k^2`.
    fn axis_weight(&self, axis: usize) -> f64 {
        (1..=self.num_modes)
            .filter(|&k| self.axis(k) == axis)
            .map(|k| self.coefficient(k).powi(2))
            .sum()
    }

    fn check_dim(&self, grid: &TorusGrid) -> Result<()> {
        if grid.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: grid.dim(),
            });
        }
        Ok(())
    }

    /// `div (h(phi) e_a)` for every axis, with unit amplitude.
    fn divergence_bases(&self, phi: &SpectralField) -> Result<Vec<SpectralField>> {
        self.check_dim(phi.grid())?;
        check_unit_ball(phi.values())?;
        let profile = phi.map_dealiased(|s| self.shape.value(s));
        Ok((0..self.dim).map(|a| profile.derivative(a)).collect())
    }

    /// `div G(phi)[u_k] = div g_k(phi)` for `k = 1..=K`, assembled as the
    /// spectral divergence of `g_k(phi)`; every output has zero mean exactly.
    pub fn div_g_apply(&self, phi: &SpectralField) -> Result<Vec<SpectralField>> {
        let bases = self.divergence_bases(phi)?;
        Ok((1..=self.num_modes)
            .map(|k| bases[self.axis(k)].scale(self.coefficient(k)))
            .collect())
    }

    /// `||div G(phi)||_{L^2(U, space)}`.
    pub fn div_g_hs_norm(&self, phi: &SpectralField, space: HsSpace) -> Result<f64> {
        let bases = self.divergence_bases(phi)?;
        let riesz = MixedOperatorParams::riesz();
        let mut total = 0.0;
        for (a, base) in bases.iter().enumerate() {
            let norm = match space {
                HsSpace::H => base.l2_norm(),
                HsSpace::V0Star => dual_norm_star(base, &riesz)?,
            };
            total += self.axis_weight(a) * norm * norm;
        }
        Ok(total.sqrt())
    }

    /// Difference `div G(v) - div G(w)` in `L^2(U, space)`.
    pub fn div_g_difference_norm(&self, v: &SpectralField, w: &SpectralField, space: HsSpace) -> Result<f64> {
        let bv = self.divergence_bases(v)?;
        let bw = self.divergence_bases(w)?;
        let riesz = MixedOperatorParams::riesz();
        let mut total = 0.0;
        for a in 0..self.dim {
            let diff = bv[a].sub(&bw[a]);
            let norm = match space {
                HsSpace::H => diff.l2_norm(),
                HsSpace::V0Star => dual_norm_star(&diff, &riesz)?,
            };
            total += self.axis_weight(a) * norm * norm;
        }
        Ok(total.sqrt())
    }

    /// `(sum_k ||grad div g_k(phi)||^2)^(1/2)`.
    pub fn grad_div_g_hs_norm(&self, phi: &SpectralField) -> Result<f64> {
        let bases = self.divergence_bases(phi)?;
        let total: f64 = bases
            .iter()
            .enumerate()
            .map(|(a, b)| self.axis_weight(a) * b.grad_norm().powi(2))
            .sum();
        Ok(total.sqrt())
    }

    /// Unit-amplitude fields `h'(J_lambda(phi)) d_a R_xi phi` per axis.
    fn regularized_bases(
        &self,
        phi: &SpectralField,
        spec: &PotentialSpec,
        yosida: &YosidaParams,
        resolvent: &ResolventParams,
    ) -> Result<Vec<SpectralField>> {
        self.check_dim(phi.grid())?;
        let slope = self.resolvent_slope(phi, spec, yosida)?;
        let smoothed = resolvent_rxi(phi, resolvent);
        Ok((0..self.dim)
            .map(|a| slope.dealiased_product(&smoothed.derivative(a)))
            .collect())
    }

    /// `h'(J_lambda(phi))` at the grid points of the truncated field.
    fn resolvent_slope(&self, phi: &SpectralField, spec: &PotentialSpec, yosida: &YosidaParams) -> Result<SpectralField> {
        let input = phi.truncated();
        let values = input
            .values()
            .iter()
            .map(|&s| Ok(self.shape.d1(spec.resolvent_j(s, yosida)?)))
            .collect::<Result<Vec<_>>>()?;
        SpectralField::from_values(phi.grid(), values)
    }

    /// `K_{lambda,xi}(phi)[u_k] = g_k'(J_lambda(phi)) . grad R_xi phi`, dealiased.
    /// Unlike `div G`, these fields generally have nonzero mean.
    pub fn k_lambda_xi_apply(
        &self,
        phi: &SpectralField,
        spec: &PotentialSpec,
        yosida: &YosidaParams,
        resolvent: &ResolventParams,
    ) -> Result<Vec<SpectralField>> {
        let bases = self.regularized_bases(phi, spec, yosida, resolvent)?;
        Ok((1..=self.num_modes)
            .map(|k| bases[self.axis(k)].scale(self.coefficient(k)))
            .collect())
    }

    /// `||K(v) - K(w)||_{L^2(U, H)}`.
    pub fn k_difference_norm(
        &self,
        v: &SpectralField,
        w: &SpectralField,
        spec: &PotentialSpec,
        yosida: &YosidaParams,
        resolvent: &ResolventParams,
    ) -> Result<f64> {
        let bv = self.regularized_bases(v, spec, yosida, resolvent)?;
        let bw = self.regularized_bases(w, spec, yosida, resolvent)?;
        let total: f64 = (0..self.dim)
            .map(|a| self.axis_weight(a) * bv[a].sub(&bw[a]).l2_norm().powi(2))
            .sum();
        Ok(total.sqrt())
    }

    /// `||K(v)||_{L^2(U, H)}`.
    pub fn k_hs_norm(
        &self,
        v: &SpectralField,
        spec: &PotentialSpec,
        yosida: &YosidaParams,
        resolvent: &ResolventParams,
    ) -> Result<f64> {
        let bases = self.regularized_bases(v, spec, yosida, resolvent)?;
        let total: f64 = bases
            .iter()
            .enumerate()
            .map(|(a, b)| self.axis_weight(a) * b.l2_norm().powi(2))
            .sum();
        Ok(total.sqrt())
    }

    /// `sum_k div g_k(phi) eta-weighted`: the limit-scheme noise increment
    /// `sum_a eta_a d_a h(phi)` as a spectrum with zero mean mode.
    pub(crate) fn limit_increment(&self, phi: &SpectralField, eta: &[f64]) -> Result<Vec<Complex64>> {
        check_unit_ball(phi.values())?;
        let grid = phi.grid();
        let profile = phi.map_dealiased(|s| self.shape.value(s));
        let mut spectrum = vec![Complex64::default(); grid.len()];
        for (i, (out, c)) in spectrum.iter_mut().zip(profile.spectrum()).enumerate() {
            let mut factor = Complex64::default();
            for (a, &e) in eta.iter().enumerate() {
                factor += grid.derivative_factor(i, a) * e;
            }
            *out = c * factor;
        }
        spectrum[0] = Complex64::default();
        Ok(spectrum)
    }

    /// Regularized-scheme noise increment `h'(J) . sum_a eta_a d_a R_xi phi`,
    /// given `h'(J_lambda(phi))` at the grid points.
    pub(crate) fn regularized_increment(
        &self,
        grid: &Arc<TorusGrid>,
        slope_values: &[f64],
        phi: &SpectralField,
        eta: &[f64],
        resolvent: &ResolventParams,
    ) -> Vec<Complex64> {
        let xi = resolvent.xi;
        let mut gradient = vec![Complex64::default(); grid.len()];
        let q = grid.sq_frequencies();
        for (i, (out, c)) in gradient.iter_mut().zip(phi.spectrum()).enumerate() {
            if !grid.is_resolved(i) {
                continue;
            }
            let mut factor = Complex64::default();
            for (a, &e) in eta.iter().enumerate() {
                factor += grid.derivative_factor(i, a) * e;
            }
            *out = c * factor / (1.0 + xi * q[i]);
        }
        let directional = grid.inverse(&gradient);
        // the slope field is truncated in spectral space before the product
        let mut slope_spec = grid.forward(slope_values);
        grid.truncate(&mut slope_spec);
        let slope = grid.inverse(&slope_spec);
        let product: Vec<f64> = slope.iter().zip(&directional).map(|(a, b)| a * b).collect();
        let mut out = grid.forward(&product);
        grid.truncate(&mut out);
        out
    }
}

fn check_unit_ball(values: &[f64]) -> Result<()> {
    match values
        .iter()
        .enumerate()
        .filter(|(_, v)| !(v.abs() <= 1.0))
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
    {
        Some((index, &value)) => Err(Error::DomainViolation { index, value, bound: 1.0 }),
        None => Ok(()),
    }
}
