//! Evaluation of Cartesian fields at polar nodes.
//!
//! The default is spectral: the trigonometric interpolant of the periodic
//! samples is evaluated at every node with a Gaussian-kernel non-uniform FFT
//! (oversampling 2). A local cubic Lagrange interpolant is also available.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::field::{signed_index, CartesianField};
use crate::polar::{PolarField, PolarGrid};
use crate::spectral::SpectralField;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Interpolation {
    /// Trigonometric interpolation; `spread` is the kernel half-width in fine
    /// grid points.
    Spectral { spread: usize },
    /// Tensor-product cubic Lagrange interpolation on the 4-point stencil.
    Cubic,
}

impl Default for Interpolation {
    fn default() -> Self {
        Interpolation::Spectral { spread: 8 }
    }
}

/// Fraction of `L` kept free between the outermost node and the box face.
pub const DEFAULT_MARGIN: f64 = 1.0 / 16.0;

pub fn resample(f: &CartesianField, grid: &Arc<PolarGrid>) -> Result<PolarField> {
    resample_with(f, grid, Interpolation::default(), DEFAULT_MARGIN)
}

pub fn resample_with(
    f: &CartesianField,
    grid: &Arc<PolarGrid>,
    method: Interpolation,
    margin: f64,
) -> Result<PolarField> {
    if grid.dims() != f.dims() {
        return Err(Error::InvalidGrid(format!(
            "polar grid dimension {} differs from field dimension {}",
            grid.dims(),
            f.dims()
        )));
    }
    let limit = f.half_width() * (1.0 - margin);
    if grid.r_max() > limit {
        return Err(Error::NodeOutsideBox { radius: grid.r_max(), limit });
    }
    let (ns, na) = (grid.shell_count(), grid.angular_count());
    let nodes: Vec<[f64; 3]> = (0..ns).flat_map(|i| (0..na).map(move |j| (i, j))).map(|(i, j)| grid.node(i, j)).collect();
    let mut values = Vec::with_capacity(f.components() * nodes.len());
    for c in 0..f.components() {
        let comp = f.component(c);
        let v = match method {
            Interpolation::Spectral { spread } => spectral_eval(f, comp, &nodes, spread),
            Interpolation::Cubic => cubic_eval(f, comp, &nodes),
        };
        values.extend(v);
    }
    PolarField::new(grid.clone(), f.components(), values)
}

/// Type-2 non-uniform FFT of one component at `nodes`.
fn spectral_eval(f: &CartesianField, comp: &[f64], nodes: &[[f64; 3]], spread: usize) -> Vec<f64> {
    let dims = f.dims();
    let n = f.points();
    let sigma = 2usize;
    let m = sigma * n;
    let spread = spread.clamp(2, 32);
    let msp = spread as f64;
    let sig = sigma as f64;
    let tau = PI * msp / ((n * n) as f64 * sig * (sig - 0.5));

    // c_k = F_k / N^n, deconvolved by the kernel transform sqrt(tau/pi) e^{-k^2 tau}
    let scalar = f.with_values(1, comp.to_vec()).expect("component shape");
    let coeffs = SpectralField::forward(&scalar);
    let deconv: Vec<f64> = (0..n)
        .map(|i| {
            let k = signed_index(i, n) as f64;
            1.0 / ((tau / PI).sqrt() * (-k * k * tau).exp())
        })
        .collect();
    let cells = n.pow(dims as u32);
    let fine_cells = m.pow(dims as u32);
    let mut fine = vec![Complex64::default(); fine_cells];
    let norm = 1.0 / cells as f64;
    for (idx, z) in coeffs.component(0).iter().enumerate() {
        let mut rem = idx;
        let mut fine_idx = 0;
        let mut stride = 1;
        let mut factor = norm;
        let mut nyquist = false;
        for _ in 0..dims {
            let i = rem % n;
            rem /= n;
            if i == n / 2 {
                nyquist = true;
                break;
            }
            let k = signed_index(i, n);
            fine_idx += (k.rem_euclid(m as i64) as usize) * stride;
            stride *= m;
            factor *= deconv[i];
        }
        if !nyquist && idx != 0 {
            fine[fine_idx] = z * factor;
        }
    }
    // the mean is added back exactly so constants are reproduced
    let mean = coeffs.component(0)[0].re * norm;
    fft::inverse_unnormalized(&mut fine, m, dims);
    let fine: Vec<f64> = fine.into_iter().map(|z| z.re).collect();

    let l = f.half_width();
    let dtheta = 2.0 * PI / m as f64;
    let inv_m = 1.0 / m as f64;
    let width = 2 * spread;
    nodes
        .par_iter()
        .map(|x| {
            let mut base = [0usize; 3];
            let mut w = [[0.0f64; 64]; 3];
            for d in 0..dims {
                let theta = (x[d] + l) * PI / l;
                let m0 = (theta / dtheta).floor() as i64;
                let start = m0 - spread as i64 + 1;
                base[d] = start.rem_euclid(m as i64) as usize;
                for s in 0..width {
                    let dt = theta - (start + s as i64) as f64 * dtheta;
                    w[d][s] = (-dt * dt / (4.0 * tau)).exp() * inv_m;
                }
            }
            let wrap = |i: usize| if i >= m { i - m } else { i };
            let mut acc = 0.0;
            if dims == 3 {
                for a in 0..width {
                    let iz = wrap(base[2] + a);
                    for b in 0..width {
                        let iy = wrap(base[1] + b);
                        let row = (iz * m + iy) * m;
                        let wzy = w[2][a] * w[1][b];
                        let mut inner = 0.0;
                        for c in 0..width {
                            inner += w[0][c] * fine[row + wrap(base[0] + c)];
                        }
                        acc += wzy * inner;
                    }
                }
            } else {
                for b in 0..width {
                    let row = wrap(base[1] + b) * m;
                    let mut inner = 0.0;
                    for c in 0..width {
                        inner += w[0][c] * fine[row + wrap(base[0] + c)];
                    }
                    acc += w[1][b] * inner;
                }
            }
            acc + mean
        })
        .collect()
}

/// 4-point Lagrange weights at fractional offset `s` in `[0, 1)` for the
/// stencil `-1, 0, 1, 2`.
fn lagrange4(s: f64) -> [f64; 4] {
    [
        -s * (s - 1.0) * (s - 2.0) / 6.0,
        (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
        -(s + 1.0) * s * (s - 2.0) / 2.0,
        (s + 1.0) * s * (s - 1.0) / 6.0,
    ]
}

fn cubic_eval(f: &CartesianField, comp: &[f64], nodes: &[[f64; 3]]) -> Vec<f64> {
    let dims = f.dims();
    let n = f.points() as i64;
    let h = f.spacing();
    let l = f.half_width();
    nodes
        .par_iter()
        .map(|x| {
            let mut base = [0i64; 3];
            let mut w = [[0.0; 4]; 3];
            for d in 0..dims {
                let u = (x[d] + l) / h;
                let i0 = u.floor();
                base[d] = i0 as i64 - 1;
                w[d] = lagrange4(u - i0);
            }
            let at = |i: i64| i.rem_euclid(n) as usize;
            let nu = n as usize;
            let mut acc = 0.0;
            if dims == 3 {
                for a in 0..4 {
                    for b in 0..4 {
                        for c in 0..4 {
                            let idx = (at(base[2] + a) * nu + at(base[1] + b)) * nu + at(base[0] + c);
                            acc += w[2][a as usize] * w[1][b as usize] * w[0][c as usize] * comp[idx];
                        }
                    }
                }
            } else {
                for b in 0..4 {
                    for c in 0..4 {
                        let idx = at(base[1] + b) * nu + at(base[0] + c);
                        acc += w[1][b as usize] * w[0][c as usize] * comp[idx];
                    }
                }
            }
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polar::{Normalization, PolarGridSpec};

    fn grid(r_max: f64) -> Arc<PolarGrid> {
        let spec = PolarGridSpec {
            dims: 3,
            r_min: 0.01,
            r_max,
            shells: 8,
            nodes_per_shell: 4,
            angular_order: 7,
            normalization: Normalization::SurfaceMeasure,
        };
        Arc::new(PolarGrid::build(spec).unwrap())
    }

    #[test]
    fn constants_are_reproduced() {
        let f = CartesianField::from_fn(3, 16, 4.0, 2, |_, o| {
            o[0] = 2.5;
            o[1] = -1.0;
        })
        .unwrap();
        for method in [Interpolation::default(), Interpolation::Cubic] {
            let pf = resample_with(&f, &grid(3.5), method, DEFAULT_MARGIN).unwrap();
            let ns = pf.grid().shell_count() * pf.grid().angular_count();
            assert!(pf.values()[..ns].iter().all(|v| (v - 2.5).abs() < 1e-12));
            assert!(pf.values()[ns..].iter().all(|v| (v + 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn cubic_reproduces_linear_functions() {
        let f = CartesianField::scalar_fn(3, 32, 12.0, |x| x[0]).unwrap();
        let g = grid(10.0);
        let pf = resample_with(&f, &g, Interpolation::Cubic, DEFAULT_MARGIN).unwrap();
        for i in 0..g.shell_count() {
            for j in 0..g.angular_count() {
                let want = g.radii()[i] * g.directions()[j][0];
                assert!((pf.value(0, i, j) - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn spectral_matches_trig_polynomial() {
        let l = 3.0;
        let k = PI / l;
        let f = CartesianField::scalar_fn(3, 16, l, |x| (k * x[0]).cos() * (2.0 * k * x[1]).sin() + (3.0 * k * x[2]).cos())
            .unwrap();
        let g = grid(2.5);
        let pf = resample(&f, &g).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..g.shell_count() {
            for j in 0..g.angular_count() {
                let x = g.node(i, j);
                let want = (k * x[0]).cos() * (2.0 * k * x[1]).sin() + (3.0 * k * x[2]).cos();
                worst = worst.max((pf.value(0, i, j) - want).abs());
            }
        }
        assert!(worst < 1e-7, "{worst}");
    }

    #[test]
    fn node_outside_box_is_rejected() {
        let f = CartesianField::zeros(3, 16, 4.0, 1).unwrap();
        assert!(matches!(resample(&f, &grid(3.9)), Err(Error::NodeOutsideBox { .. })));
    }
}
