//! Spectral heat semigroup, derivatives, Leray projector, Riesz pressure and
//! the Oseen operator `e^{t Delta} P div`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::CartesianField;
use crate::spectral::{norm_sq, SpectralField, WaveGrid};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn check_time(t: f64) -> Result<()> {
    if t < 0.0 || !t.is_finite() {
        return Err(Error::NegativeTime(t));
    }
    Ok(())
}

fn check_components(f: &CartesianField, expected: usize) -> Result<()> {
    if f.components() != expected {
        return Err(Error::Components { expected, got: f.components() });
    }
    Ok(())
}

/// `e^{t Delta} f`, componentwise.
pub fn heat_evolve(f: &CartesianField, t: f64) -> Result<CartesianField> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(f.clone());
    }
    let mut s = SpectralField::forward(f);
    s.apply_heat(t);
    Ok(s.to_cartesian())
}

/// `d^eta f` for a multi-index with one entry per axis.
pub fn spectral_derivative(f: &CartesianField, eta: &[u32]) -> Result<CartesianField> {
    if eta.len() != f.dims() {
        return Err(Error::Domain(format!("multi-index has {} entries for dimension {}", eta.len(), f.dims())));
    }
    let order: u32 = eta.iter().sum();
    if order > 4 {
        return Err(Error::OrderTooHigh(order));
    }
    if order == 0 {
        return Ok(f.clone());
    }
    let mut s = SpectralField::forward(f);
    let eta = eta.to_vec();
    s.apply_scalar(move |xi| {
        let mut m = Complex64::new(1.0, 0.0);
        for (d, &e) in eta.iter().enumerate() {
            m *= (I * xi[d]).powu(e);
        }
        m
    });
    Ok(s.to_cartesian())
}

/// Multi-index `(order, 0, ..., 0)`.
pub fn axis_multi_index(dims: usize, order: u32) -> Vec<u32> {
    let mut eta = vec![0; dims];
    eta[0] = order;
    eta
}

/// Divergence of a vector field (`m = n`), or row divergence `sum_k d_k F_jk`
/// of a tensor field (`m = n^2`).
pub fn divergence(f: &CartesianField) -> Result<CartesianField> {
    let n = f.dims();
    let rows = if f.components() == n {
        1
    } else if f.components() == n * n {
        n
    } else {
        return Err(Error::Components { expected: n, got: f.components() });
    };
    let s = SpectralField::forward(f);
    let waves = s.waves();
    let mut out = s.zeros_like(rows);
    for r in 0..rows {
        let dst = out.component_mut(r);
        for k in 0..n {
            let src = s.component(r * n + k);
            dst.par_iter_mut().zip(src).enumerate().for_each(|(i, (d, z))| {
                *d += I * waves.xi(i)[k] * z;
            });
        }
    }
    Ok(out.to_cartesian())
}

/// Gradient of a scalar field.
pub fn gradient(f: &CartesianField) -> Result<CartesianField> {
    check_components(f, 1)?;
    let n = f.dims();
    let s = SpectralField::forward(f);
    let waves = s.waves();
    let mut out = s.zeros_like(n);
    for k in 0..n {
        out.component_mut(k).par_iter_mut().zip(s.component(0)).enumerate().for_each(|(i, (d, z))| {
            *d = I * waves.xi(i)[k] * z;
        });
    }
    Ok(out.to_cartesian())
}

/// Curl of a three-dimensional vector field.
pub fn curl(f: &CartesianField) -> Result<CartesianField> {
    if f.dims() != 3 {
        return Err(Error::Domain("curl needs n = 3".into()));
    }
    check_components(f, 3)?;
    let s = SpectralField::forward(f);
    let waves = s.waves();
    let mut out = s.zeros_like(3);
    for c in 0..3 {
        let (a, b) = ((c + 1) % 3, (c + 2) % 3);
        let (sa, sb) = (s.component(a), s.component(b));
        out.component_mut(c).par_iter_mut().enumerate().for_each(|(i, d)| {
            let xi = waves.xi(i);
            *d = I * (xi[a] * sb[i] - xi[b] * sa[i]);
        });
    }
    Ok(out.to_cartesian())
}

/// Applies `(delta_ij - xi_i xi_j/|xi|^2)` to the spectral vector `v` at `xi`;
/// the zero mode is left unchanged.
#[inline]
fn project(xi: &[f64; 3], n: usize, v: &mut [Complex64; 3]) {
    let k2 = norm_sq(xi);
    if k2 == 0.0 {
        return;
    }
    let mut dot = Complex64::default();
    for d in 0..n {
        dot += xi[d] * v[d];
    }
    for d in 0..n {
        v[d] -= xi[d] * dot / k2;
    }
}

/// Leray projection onto divergence-free fields in spectral space.
pub fn leray_project_spectral(s: &mut SpectralField) -> Result<()> {
    let n = s.dims();
    s.check_components(n)?;
    let waves = s.waves();
    let cells = s.cells();
    let coeffs = s.coeffs_mut();
    // split components into disjoint slices
    let (c0, rest) = coeffs.split_at_mut(cells);
    let (c1, c2) = rest.split_at_mut(cells);
    let c2 = if n == 3 { Some(c2) } else { None };
    match c2 {
        Some(c2) => {
            c0.par_iter_mut().zip(c1.par_iter_mut()).zip(c2.par_iter_mut()).enumerate().for_each(
                |(i, ((a, b), c))| {
                    let mut v = [*a, *b, *c];
                    project(&waves.xi(i), 3, &mut v);
                    *a = v[0];
                    *b = v[1];
                    *c = v[2];
                },
            );
        }
        None => {
            c0.par_iter_mut().zip(c1.par_iter_mut()).enumerate().for_each(|(i, (a, b))| {
                let mut v = [*a, *b, Complex64::default()];
                project(&waves.xi(i), 2, &mut v);
                *a = v[0];
                *b = v[1];
            });
        }
    }
    Ok(())
}

/// `P f = f - grad Delta^{-1} div f`.
pub fn leray_project(f: &CartesianField) -> Result<CartesianField> {
    check_components(f, f.dims())?;
    let mut s = SpectralField::forward(f);
    leray_project_spectral(&mut s)?;
    Ok(s.to_cartesian())
}

/// Products `u_j u_k` for all `j, k` (`m = n^2`, row-major).
pub fn tensor_square(u: &CartesianField) -> Result<CartesianField> {
    let n = u.dims();
    check_components(u, n)?;
    let cells = u.cells();
    let mut values = vec![0.0; n * n * cells];
    for j in 0..n {
        for k in 0..n {
            let (a, b) = (u.component(j), u.component(k));
            values[(j * n + k) * cells..(j * n + k + 1) * cells]
                .par_iter_mut()
                .enumerate()
                .for_each(|(i, v)| *v = a[i] * b[i]);
        }
    }
    u.with_values(n * n, values)
}

/// Spectral coefficients of the `n(n+1)/2` distinct products `u_j u_k`, `j <= k`.
pub(crate) fn products_spectral(u: &CartesianField) -> SpectralField {
    let n = u.dims();
    let cells = u.cells();
    let pairs = upper_pairs(n);
    let mut values = vec![0.0; pairs.len() * cells];
    for (p, &(j, k)) in pairs.iter().enumerate() {
        let (a, b) = (u.component(j), u.component(k));
        values[p * cells..(p + 1) * cells].par_iter_mut().enumerate().for_each(|(i, v)| *v = a[i] * b[i]);
    }
    let f = u.with_values(pairs.len(), values).expect("product shape");
    SpectralField::forward(&f)
}

pub(crate) fn upper_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for j in 0..n {
        for k in j..n {
            v.push((j, k));
        }
    }
    v
}

/// `P = sum_ij R_i R_j (u_i u_j)` with symbol `-xi_i xi_j/|xi|^2`; mean-free.
pub fn riesz_pressure(u: &CartesianField) -> Result<CartesianField> {
    check_components(u, u.dims())?;
    let n = u.dims();
    let prod = products_spectral(u);
    let waves = prod.waves();
    let pairs = upper_pairs(n);
    let mut out = prod.zeros_like(1);
    out.component_mut(0).par_iter_mut().enumerate().for_each(|(i, d)| {
        let xi = waves.xi(i);
        let k2 = norm_sq(&xi);
        if k2 == 0.0 {
            return;
        }
        let mut acc = Complex64::default();
        for (p, &(j, k)) in pairs.iter().enumerate() {
            let mult = if j == k { 1.0 } else { 2.0 };
            acc += mult * xi[j] * xi[k] * prod.component(p)[i];
        }
        *d = -acc / k2;
    });
    Ok(out.to_cartesian())
}

/// Pressure by a Poisson solve of `-Delta P = sum_ij d_i d_j (u_i u_j)`: the
/// right-hand side is formed in physical space first.
pub fn poisson_pressure(u: &CartesianField) -> Result<CartesianField> {
    let rhs = double_divergence(u)?;
    let mut s = SpectralField::forward(&rhs);
    s.apply_scalar(|xi| {
        let k2 = norm_sq(xi);
        if k2 == 0.0 {
            Complex64::default()
        } else {
            Complex64::new(1.0 / k2, 0.0)
        }
    });
    Ok(s.to_cartesian())
}

/// `sum_ij d_i d_j (u_i u_j)` as a physical field.
pub fn double_divergence(u: &CartesianField) -> Result<CartesianField> {
    let uu = tensor_square(u)?;
    let rows = divergence(&uu)?;
    divergence(&rows)
}

/// `-Delta f`.
pub fn neg_laplacian(f: &CartesianField) -> CartesianField {
    let mut s = SpectralField::forward(f);
    s.apply_scalar(|xi| Complex64::new(norm_sq(xi), 0.0));
    s.to_cartesian()
}

/// Oseen symbol applied to one mode: `out_i = e^{-|xi|^2 t} sum_jk
/// (delta_ij - xi_i xi_j/|xi|^2) (i xi_k) F_jk` with `F` given by `f(j, k)`.
#[inline]
pub(crate) fn oseen_mode<F: Fn(usize, usize) -> Complex64>(xi: &[f64; 3], n: usize, t: f64, f: F) -> [Complex64; 3] {
    let mut v = [Complex64::default(); 3];
    for (j, vj) in v.iter_mut().enumerate().take(n) {
        for k in 0..n {
            *vj += I * xi[k] * f(j, k);
        }
    }
    project(xi, n, &mut v);
    let damp = (-norm_sq(xi) * t).exp();
    for vj in v.iter_mut() {
        *vj *= damp;
    }
    v
}

/// `e^{t Delta} P div F` for a tensor field `F` (`m = n^2`, row-major `F_jk`).
pub fn oseen_apply(f: &CartesianField, t: f64) -> Result<CartesianField> {
    if t <= 0.0 || !t.is_finite() {
        return Err(Error::NegativeTime(t));
    }
    let n = f.dims();
    check_components(f, n * n)?;
    let s = SpectralField::forward(f);
    let waves = s.waves();
    let cells = s.cells();
    let src = s.coeffs();
    let modes: Vec<[Complex64; 3]> = (0..cells)
        .into_par_iter()
        .map(|i| oseen_mode(&waves.xi(i), n, t, |j, k| src[(j * n + k) * cells + i]))
        .collect();
    let mut out = s.zeros_like(n);
    for c in 0..n {
        out.component_mut(c).par_iter_mut().zip(&modes).for_each(|(d, m)| *d = m[c]);
    }
    Ok(out.to_cartesian())
}

/// Physical-space Oseen kernel sampled on a grid.
#[derive(Clone, Debug)]
pub struct KernelProbe {
    pub t: f64,
    pub dims: usize,
    /// `|K(t, x)|`, Euclidean over `(i, j, k)`, at every grid point.
    pub magnitude: CartesianField,
    /// Fitted constant of `C t^{-(n+1)/2} (1 + |x|/sqrt t)^{-(n+1)}`.
    pub c_fit: f64,
    pub samples: Vec<KernelSample>,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct KernelSample {
    pub x: [f64; 3],
    /// `K_ijk` at `x`, flattened row-major over `(i, j, k)`.
    pub tensor: Vec<f64>,
    pub magnitude: f64,
    pub bound: f64,
}

impl KernelProbe {
    /// `C t^{-(n+1)/2} (1 + |x|/sqrt t)^{-(n+1)}`.
    pub fn bound(&self, radius: f64) -> f64 {
        kernel_envelope(self.t, radius, self.dims) * self.c_fit
    }

    /// `max |K| / bound` over grid points with `|x| <= radius`.
    pub fn max_bound_ratio(&self, radius: f64) -> f64 {
        let m = &self.magnitude;
        (0..m.cells())
            .into_par_iter()
            .filter_map(|i| {
                let r = norm3(&m.point(i));
                (r <= radius).then(|| m.values()[i] / self.bound(r))
            })
            .reduce(|| 0.0, f64::max)
    }
}

fn norm3(x: &[f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

/// `t^{-(n+1)/2} (1 + |x|/sqrt t)^{-(n+1)}`.
pub fn kernel_envelope(t: f64, radius: f64, dims: usize) -> f64 {
    let e = (dims + 1) as i32;
    t.powf(-(e as f64) / 2.0) * (1.0 + radius / t.sqrt()).powi(-e)
}

/// Evaluates the Oseen kernel by applying the symbol to a band-limited delta at
/// the origin, one symmetrised tensor slot `(e_j e_k + e_k e_j)/2` at a time.
///
/// `K(t, 0) = 0`, so the constant `C` is fitted as the supremum of
/// `|K| / envelope` over the probe ball `|x| <= L/2`. `sample_points` are
/// snapped to the nearest grid point.
pub fn oseen_kernel_probe(
    t: f64,
    dims: usize,
    points: usize,
    half_width: f64,
    sample_points: &[[f64; 3]],
) -> Result<KernelProbe> {
    if t <= 0.0 || !t.is_finite() {
        return Err(Error::NegativeTime(t));
    }
    let n = dims;
    let proto = CartesianField::zeros(dims, points, half_width, 1)?;
    let h = proto.spacing();
    let cells = proto.cells();
    let waves = WaveGrid::for_field(&proto);
    let snapped: Vec<usize> = sample_points.iter().map(|x| snap(&proto, x)).collect();

    // Transform of the grid delta at the origin (index N/2 per axis).
    let delta_hat = |i: usize| -> f64 {
        let mut idx = i;
        let mut sign = 1.0;
        for _ in 0..dims {
            if (idx % points) % 2 == 1 {
                sign = -sign;
            }
            idx /= points;
        }
        sign / h.powi(dims as i32)
    };

    let mut mag_sq = vec![0.0; cells];
    let mut tensors = vec![vec![0.0; n * n * n]; snapped.len()];
    for (j, k) in crate::operators::upper_pairs(n) {
        let weight = if j == k { 1.0 } else { 2.0 };
        for i_out in 0..n {
            let mut buf: Vec<Complex64> = (0..cells)
                .into_par_iter()
                .map(|m| {
                    if waves.has_nyquist(m) {
                        return Complex64::default();
                    }
                    let d = delta_hat(m);
                    let slot = |a: usize, b: usize| -> Complex64 {
                        if (a, b) == (j, k) || (a, b) == (k, j) {
                            Complex64::new(if j == k { d } else { 0.5 * d }, 0.0)
                        } else {
                            Complex64::default()
                        }
                    };
                    oseen_mode(&waves.xi(m), n, t, slot)[i_out]
                })
                .collect();
            crate::fft::inverse(&mut buf, points, dims);
            mag_sq.par_iter_mut().zip(&buf).for_each(|(acc, z)| *acc += weight * z.re * z.re);
            for (s, &idx) in snapped.iter().enumerate() {
                let v = buf[idx].re;
                tensors[s][(i_out * n + j) * n + k] = v;
                tensors[s][(i_out * n + k) * n + j] = v;
            }
        }
    }
    let magnitude = proto.with_values(1, mag_sq.into_par_iter().map(f64::sqrt).collect())?;
    let fit_radius = half_width / 2.0;
    let c_fit = (0..cells)
        .into_par_iter()
        .filter_map(|i| {
            let r = norm3(&magnitude.point(i));
            (r <= fit_radius).then(|| magnitude.values()[i] / kernel_envelope(t, r, dims))
        })
        .reduce(|| 0.0, f64::max);
    let samples = snapped
        .iter()
        .zip(tensors)
        .map(|(&idx, tensor)| {
            let x = magnitude.point(idx);
            let r = norm3(&x);
            KernelSample { x, tensor, magnitude: magnitude.values()[idx], bound: c_fit * kernel_envelope(t, r, dims) }
        })
        .collect();
    Ok(KernelProbe { t, dims, magnitude, c_fit, samples })
}

fn snap(f: &CartesianField, x: &[f64; 3]) -> usize {
    let h = f.spacing();
    let np = f.points();
    let mut idx = 0;
    for d in (0..f.dims()).rev() {
        let i = ((x[d] + f.half_width()) / h).round().rem_euclid(np as f64) as usize;
        idx = idx * np + i;
    }
    idx
}

/// Relative L2 errors of the heat and Oseen scaling identities
/// `e^{t Delta} phi = S_sqrt(t) e^{Delta} S_{1/sqrt t} phi` and
/// `K(t) * F = t^{-1/2} S_sqrt(t) (K(1) * S_{1/sqrt t} F)`.
///
/// `sqrt t` must be a power of two so the dilations map the grid onto itself.
pub fn scaling_identity_check(phi: &CartesianField, tensor: &CartesianField, t: f64) -> Result<(f64, f64)> {
    let lam = t.sqrt();
    let direct = heat_evolve(phi, t)?;
    let shrunk = crate::norms::dilate(phi, 1.0 / lam)?;
    let via = crate::norms::dilate(&heat_evolve(&shrunk, 1.0)?, lam)?;
    let heat_err = relative_l2(&direct, &via)?;

    let direct = oseen_apply(tensor, t)?;
    let shrunk = crate::norms::dilate(tensor, 1.0 / lam)?;
    let mut via = crate::norms::dilate(&oseen_apply(&shrunk, 1.0)?, lam)?;
    via.scale(1.0 / lam);
    let oseen_err = relative_l2(&direct, &via)?;
    Ok((heat_err, oseen_err))
}

/// `||a - b|| / ||a||` (0 when both vanish).
pub fn relative_l2(a: &CartesianField, b: &CartesianField) -> Result<f64> {
    let num = a.sub(b)?.l2_norm();
    let den = a.l2_norm();
    Ok(if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    })
}
