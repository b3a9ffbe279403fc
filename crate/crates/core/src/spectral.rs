//! Fourier coefficients of Cartesian fields and multiplier application.
//!
//! Wavenumbers are `xi = (pi/L) k` with `k` in `[-N/2, N/2)`. The Nyquist
//! component `k = -N/2` has no real-valued derivative, so every multiplier
//! uses `xi~`, which equals `xi` except that Nyquist components are set to 0.
//! With that convention the divergence, Leray projector and pressure
//! identities hold exactly on the grid.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fft;
use crate::field::{signed_index, CartesianField};

/// Per-axis wavenumber tables for a grid.
#[derive(Clone, Debug)]
pub struct WaveGrid {
    dims: usize,
    points: usize,
    /// `xi~` per FFT index, Nyquist set to zero.
    xi: Vec<f64>,
}

impl WaveGrid {
    pub fn new(dims: usize, points: usize, half_width: f64) -> Self {
        let k0 = std::f64::consts::PI / half_width;
        let xi = (0..points)
            .map(|i| if i == points / 2 { 0.0 } else { k0 * signed_index(i, points) as f64 })
            .collect();
        WaveGrid { dims, points, xi }
    }

    pub fn for_field(f: &CartesianField) -> Self {
        Self::new(f.dims(), f.points(), f.half_width())
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    /// `xi~` at flat mode index `idx` (unused trailing entries are zero).
    #[inline]
    pub fn xi(&self, mut idx: usize) -> [f64; 3] {
        let mut out = [0.0; 3];
        for o in out.iter_mut().take(self.dims) {
            *o = self.xi[idx % self.points];
            idx /= self.points;
        }
        out
    }

    /// True if any index of the mode is the Nyquist index.
    #[inline]
    pub fn has_nyquist(&self, mut idx: usize) -> bool {
        for _ in 0..self.dims {
            if idx % self.points == self.points / 2 {
                return true;
            }
            idx /= self.points;
        }
        false
    }
}

#[inline]
pub fn norm_sq(xi: &[f64; 3]) -> f64 {
    xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]
}

/// Fourier coefficients (unnormalised forward DFT) of every component.
#[derive(Clone, Debug)]
pub struct SpectralField {
    dims: usize,
    points: usize,
    half_width: f64,
    components: usize,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn forward(f: &CartesianField) -> Self {
        let cells = f.cells();
        let mut coeffs: Vec<Complex64> = f.values().par_iter().map(|&v| Complex64::new(v, 0.0)).collect();
        for c in 0..f.components() {
            fft::forward(&mut coeffs[c * cells..(c + 1) * cells], f.points(), f.dims());
        }
        SpectralField {
            dims: f.dims(),
            points: f.points(),
            half_width: f.half_width(),
            components: f.components(),
            coeffs,
        }
    }

    pub fn zeros(dims: usize, points: usize, half_width: f64, components: usize) -> Self {
        let len = components * points.pow(dims as u32);
        SpectralField { dims, points, half_width, components, coeffs: vec![Complex64::default(); len] }
    }

    pub fn zeros_like(&self, components: usize) -> Self {
        Self::zeros(self.dims, self.points, self.half_width, components)
    }

    /// Inverse transform; the imaginary part (rounding noise) is discarded.
    pub fn to_cartesian(&self) -> CartesianField {
        let cells = self.cells();
        let mut work = self.coeffs.clone();
        for c in 0..self.components {
            fft::inverse(&mut work[c * cells..(c + 1) * cells], self.points, self.dims);
        }
        let values = work.into_par_iter().map(|z| z.re).collect();
        CartesianField::new(self.dims, self.points, self.half_width, self.components, values)
            .expect("inverse transform of a valid spectral field")
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn cells(&self) -> usize {
        self.points.pow(self.dims as u32)
    }

    pub fn waves(&self) -> WaveGrid {
        WaveGrid::new(self.dims, self.points, self.half_width)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        let cells = self.cells();
        &self.coeffs[c * cells..(c + 1) * cells]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        let cells = self.cells();
        &mut self.coeffs[c * cells..(c + 1) * cells]
    }

    /// Multiplies every component by the scalar symbol `m(xi~)`.
    pub fn apply_scalar<F>(&mut self, m: F)
    where
        F: Fn(&[f64; 3]) -> Complex64 + Sync,
    {
        let waves = self.waves();
        let cells = self.cells();
        self.coeffs.par_chunks_mut(cells).for_each(|comp| {
            comp.par_iter_mut().enumerate().for_each(|(i, z)| *z *= m(&waves.xi(i)));
        });
    }

    /// Multiplies by the heat symbol `e^{-|xi~|^2 t}`.
    pub fn apply_heat(&mut self, t: f64) {
        self.apply_scalar(|xi| Complex64::new((-norm_sq(xi) * t).exp(), 0.0));
    }

    /// Zeroes every mode with a Nyquist index in any direction.
    pub fn drop_nyquist(&mut self) {
        let waves = self.waves();
        let cells = self.cells();
        self.coeffs.par_chunks_mut(cells).for_each(|comp| {
            comp.par_iter_mut().enumerate().for_each(|(i, z)| {
                if waves.has_nyquist(i) {
                    *z = Complex64::default();
                }
            });
        });
    }

    /// `sum |F_k|^2` over all components.
    pub fn energy_sum(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn check_components(&self, expected: usize) -> Result<()> {
        if self.components != expected {
            return Err(Error::Components { expected, got: self.components });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_error_is_tiny() {
        let f = CartesianField::from_fn(3, 16, 3.0, 2, |x, o| {
            o[0] = (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp();
            o[1] = x[0] * (-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp();
        })
        .unwrap();
        let g = SpectralField::forward(&f).to_cartesian();
        let err = f.sub(&g).unwrap().l2_norm() / f.l2_norm();
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn parseval() {
        let f = CartesianField::scalar_fn(3, 16, 2.0, |x| (x[0] * 1.7).sin() + x[1] * (-x[2] * x[2]).exp())
            .unwrap();
        let s = SpectralField::forward(&f);
        let cells = f.cells() as f64;
        let hn = f.spacing().powi(3);
        let lhs = f.l2_norm_sq();
        let rhs = hn / cells * s.energy_sum();
        assert!((lhs - rhs).abs() <= 1e-12 * lhs);
    }

    #[test]
    fn nyquist_component_is_zero() {
        let w = WaveGrid::new(3, 8, std::f64::consts::PI);
        assert_eq!(w.xi(4), [0.0, 0.0, 0.0]);
        assert_eq!(w.xi(1), [1.0, 0.0, 0.0]);
        assert_eq!(w.xi(7 + 8 * 3), [-1.0, 3.0, 0.0]);
        assert!(w.has_nyquist(4 * 8));
        assert!(!w.has_nyquist(3));
    }
}
