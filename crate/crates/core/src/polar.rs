//! Radial shells times spherical quadrature nodes.

use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::Arc;

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Total mass of the angular weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Normalization {
    /// Weights sum to `|S^{n-1}|`.
    #[default]
    SurfaceMeasure,
    /// Weights sum to 1.
    Probability,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolarGridSpec {
    pub dims: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub shells: usize,
    pub nodes_per_shell: usize,
    /// Polynomial degree integrated exactly by the angular rule.
    pub angular_order: usize,
    #[serde(default)]
    pub normalization: Normalization,
}

impl PolarGridSpec {
    pub fn new(dims: usize, r_min: f64, r_max: f64) -> Self {
        PolarGridSpec {
            dims,
            r_min,
            r_max,
            shells: 32,
            nodes_per_shell: 4,
            angular_order: 15,
            normalization: Normalization::SurfaceMeasure,
        }
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Self {
        self.normalization = normalization;
        self
    }
}

/// `|S^{n-1}|` for `n` in `{2, 3}`.
pub fn sphere_area(dims: usize) -> f64 {
    match dims {
        2 => 2.0 * PI,
        _ => 4.0 * PI,
    }
}

#[derive(Clone, Debug)]
pub struct PolarGrid {
    spec: PolarGridSpec,
    radii: Vec<f64>,
    radial_weights: Vec<f64>,
    coarse_weights: Vec<f64>,
    directions: Vec<[f64; 3]>,
    angular_weights: Vec<f64>,
}

fn gauss_legendre(count: usize) -> Vec<(f64, f64)> {
    let q = GaussLegendre::new(NonZeroUsize::new(count).expect("positive node count"));
    let mut v: Vec<(f64, f64)> = q.iter().map(|(x, w)| (*x, *w)).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v
}

/// Weights of the interpolatory rule through `subset` of `nodes`, integrated
/// exactly with the full rule `(nodes, weights)`.
fn interpolatory_weights(nodes: &[f64], weights: &[f64], subset: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; nodes.len()];
    for &i in subset {
        let basis = |x: f64| {
            subset
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| (x - nodes[j]) / (nodes[i] - nodes[j]))
                .product::<f64>()
        };
        out[i] = nodes.iter().zip(weights).map(|(&x, &w)| w * basis(x)).sum();
    }
    out
}

impl PolarGrid {
    pub fn build(spec: PolarGridSpec) -> Result<Self> {
        if spec.dims != 2 && spec.dims != 3 {
            return Err(Error::InvalidGrid(format!("dimension {} not in {{2, 3}}", spec.dims)));
        }
        if !(spec.r_min > 0.0 && spec.r_min < spec.r_max && spec.r_max.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "need 0 < r_min < r_max, got r_min = {}, r_max = {}",
                spec.r_min, spec.r_max
            )));
        }
        if spec.shells < 4 {
            return Err(Error::InvalidGrid(format!("shells = {} must be at least 4", spec.shells)));
        }
        if spec.nodes_per_shell < 2 {
            return Err(Error::InvalidGrid("need at least 2 nodes per shell".into()));
        }

        let gl = gauss_legendre(spec.nodes_per_shell);
        let ref_nodes: Vec<f64> = gl.iter().map(|p| p.0).collect();
        let ref_weights: Vec<f64> = gl.iter().map(|p| p.1).collect();
        let subset: Vec<usize> = (0..ref_nodes.len()).step_by(2).collect();
        let ref_coarse = interpolatory_weights(&ref_nodes, &ref_weights, &subset);

        let ratio = spec.r_max / spec.r_min;
        let bound = |k: usize| spec.r_min * ratio.powf(k as f64 / spec.shells as f64);
        let mut radii = Vec::new();
        let mut radial_weights = Vec::new();
        let mut coarse_weights = Vec::new();
        for k in 0..spec.shells {
            let (a, b) = (bound(k), if k + 1 == spec.shells { spec.r_max } else { bound(k + 1) });
            let half = 0.5 * (b - a);
            for q in 0..ref_nodes.len() {
                radii.push(0.5 * (a + b) + half * ref_nodes[q]);
                radial_weights.push(half * ref_weights[q]);
                coarse_weights.push(half * ref_coarse[q]);
            }
        }

        let (directions, mut angular_weights) = match spec.dims {
            3 => {
                let mut polar = (spec.angular_order + 2) / 2;
                if polar % 2 == 0 {
                    polar += 1;
                }
                let n_az = spec.angular_order + 1;
                let mut dirs = Vec::with_capacity(polar * n_az);
                let mut w = Vec::with_capacity(polar * n_az);
                for (mu, wm) in gauss_legendre(polar) {
                    // the middle node of an odd rule is the equator
                    let mu = if mu.abs() < 1e-14 { 0.0 } else { mu };
                    let s = (1.0 - mu * mu).sqrt();
                    for k in 0..n_az {
                        let phi = 2.0 * PI * k as f64 / n_az as f64;
                        dirs.push([s * phi.cos(), s * phi.sin(), mu]);
                        w.push(wm * 2.0 * PI / n_az as f64);
                    }
                }
                (dirs, w)
            }
            _ => {
                let n_az = spec.angular_order + 1;
                let dirs = (0..n_az)
                    .map(|k| {
                        let phi = 2.0 * PI * k as f64 / n_az as f64;
                        [phi.cos(), phi.sin(), 0.0]
                    })
                    .collect();
                (dirs, vec![2.0 * PI / n_az as f64; n_az])
            }
        };
        if spec.normalization == Normalization::Probability {
            let total = sphere_area(spec.dims);
            angular_weights.iter_mut().for_each(|w| *w /= total);
        }
        Ok(PolarGrid { spec, radii, radial_weights, coarse_weights, directions, angular_weights })
    }

    pub fn spec(&self) -> &PolarGridSpec {
        &self.spec
    }

    pub fn dims(&self) -> usize {
        self.spec.dims
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn radial_weights(&self) -> &[f64] {
        &self.radial_weights
    }

    /// Weights of the half-resolution radial rule (every other node per shell).
    pub fn coarse_weights(&self) -> &[f64] {
        &self.coarse_weights
    }

    pub fn directions(&self) -> &[[f64; 3]] {
        &self.directions
    }

    pub fn angular_weights(&self) -> &[f64] {
        &self.angular_weights
    }

    pub fn normalization(&self) -> Normalization {
        self.spec.normalization
    }

    pub fn r_min(&self) -> f64 {
        self.spec.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.spec.r_max
    }

    pub fn shell_count(&self) -> usize {
        self.radii.len()
    }

    pub fn angular_count(&self) -> usize {
        self.directions.len()
    }

    /// Measure factor turning the angular weights into surface measure.
    pub fn surface_factor(&self) -> f64 {
        match self.spec.normalization {
            Normalization::SurfaceMeasure => 1.0,
            Normalization::Probability => sphere_area(self.spec.dims),
        }
    }

    /// Node position `r_i omega_j`.
    pub fn node(&self, shell: usize, dir: usize) -> [f64; 3] {
        let (r, w) = (self.radii[shell], self.directions[dir]);
        [r * w[0], r * w[1], r * w[2]]
    }
}

/// Field values at polar nodes, indexed `(component, shell, direction)`.
#[derive(Clone, Debug)]
pub struct PolarField {
    grid: Arc<PolarGrid>,
    components: usize,
    values: Vec<f64>,
}

impl PolarField {
    pub fn new(grid: Arc<PolarGrid>, components: usize, values: Vec<f64>) -> Result<Self> {
        let expected = components * grid.shell_count() * grid.angular_count();
        if values.len() != expected {
            return Err(Error::SizeMismatch { expected, found: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("non-finite polar value".into()));
        }
        Ok(PolarField { grid, components, values })
    }

    /// Samples `f(x, out)` at every node.
    pub fn from_fn<F>(grid: Arc<PolarGrid>, components: usize, f: F) -> Result<Self>
    where
        F: Fn(&[f64; 3], &mut [f64]),
    {
        let (ns, na) = (grid.shell_count(), grid.angular_count());
        let mut values = vec![0.0; components * ns * na];
        let mut out = vec![0.0; components];
        for i in 0..ns {
            for j in 0..na {
                f(&grid.node(i, j), &mut out);
                for (c, v) in out.iter().enumerate() {
                    values[(c * ns + i) * na + j] = *v;
                }
            }
        }
        Self::new(grid, components, values)
    }

    pub fn grid(&self) -> &Arc<PolarGrid> {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, component: usize, shell: usize, dir: usize) -> f64 {
        let (ns, na) = (self.grid.shell_count(), self.grid.angular_count());
        self.values[(component * ns + shell) * na + dir]
    }

    /// Euclidean magnitude across components at `(shell, dir)`.
    pub fn magnitude(&self, shell: usize, dir: usize) -> f64 {
        (0..self.components).map(|c| self.value(c, shell, dir).powi(2)).sum::<f64>().sqrt()
    }

    /// Pointwise map of the magnitude into a scalar field.
    pub fn map_magnitude<F: Fn(f64) -> f64>(&self, f: F) -> PolarField {
        let (ns, na) = (self.grid.shell_count(), self.grid.angular_count());
        let mut values = Vec::with_capacity(ns * na);
        for i in 0..ns {
            for j in 0..na {
                values.push(f(self.magnitude(i, j)));
            }
        }
        PolarField { grid: self.grid.clone(), components: 1, values }
    }

    pub fn scaled(&self, c: f64) -> PolarField {
        PolarField { grid: self.grid.clone(), components: self.components, values: self.values.iter().map(|v| v * c).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(norm: Normalization) -> Arc<PolarGrid> {
        let spec = PolarGridSpec { dims: 3, r_min: 0.01, r_max: 12.0, shells: 32, nodes_per_shell: 4, angular_order: 15, normalization: norm };
        Arc::new(PolarGrid::build(spec).unwrap())
    }

    #[test]
    fn normalizations() {
        let g = grid(Normalization::Probability);
        let s: f64 = g.angular_weights().iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        let g = grid(Normalization::SurfaceMeasure);
        let s: f64 = g.angular_weights().iter().sum();
        assert!((s / (4.0 * PI) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn radii_increase_and_weights_positive() {
        let g = grid(Normalization::SurfaceMeasure);
        assert!(g.radii().windows(2).all(|w| w[0] < w[1]));
        assert!(g.radial_weights().iter().all(|&w| w > 0.0));
        assert!(g.angular_weights().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn x1_squared_average_is_one_third() {
        let g = grid(Normalization::Probability);
        let avg: f64 = g.directions().iter().zip(g.angular_weights()).map(|(d, w)| w * d[0] * d[0]).sum();
        assert!((avg - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn spherical_harmonic_exactness() {
        // degree 12 monomial: int x^4 y^2 z^6 dS = 2 G(5/2) G(3/2) G(7/2) / G(15/2)
        let g = grid(Normalization::SurfaceMeasure);
        let q: f64 = g
            .directions()
            .iter()
            .zip(g.angular_weights())
            .map(|(d, w)| w * d[0].powi(4) * d[1].powi(2) * d[2].powi(6))
            .sum();
        let gamma = |x: f64| -> f64 {
            // half-integer gamma via recursion from G(1/2) = sqrt(pi)
            let mut v = PI.sqrt();
            let mut a = 0.5;
            while a < x - 1e-9 {
                v *= a;
                a += 1.0;
            }
            v
        };
        let exact = 2.0 * gamma(2.5) * gamma(1.5) * gamma(3.5) / gamma(7.5);
        assert!((q - exact).abs() < 1e-13, "{q} {exact}");
    }

    #[test]
    fn equator_is_a_node() {
        let g = grid(Normalization::Probability);
        let sup = g.directions().iter().map(|d| d[0].abs()).fold(0.0, f64::max);
        assert!(sup > 0.999_999);
    }

    #[test]
    fn invalid_geometry() {
        let mut spec = PolarGridSpec::new(3, 1.0, 0.5);
        assert!(PolarGrid::build(spec.clone()).is_err());
        spec.r_max = 2.0;
        spec.shells = 3;
        assert!(PolarGrid::build(spec).is_err());
    }
}
