//! Weighted mixed radial-angular norms
//! `|| |x|^alpha f ||_{L^p_{|x|} L^ptilde_theta}` and their time integrals.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::CartesianField;
use crate::index::{Exponent, Rational};
use crate::polar::PolarField;

/// A norm value with a quadrature error estimate (full minus half resolution).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormResult {
    pub value: f64,
    pub quadrature_error_estimate: f64,
}

impl NormResult {
    pub const ZERO: NormResult = NormResult { value: 0.0, quadrature_error_estimate: 0.0 };
}

/// How vector values are reduced to a scalar before the angular norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Magnitude {
    /// Euclidean magnitude across components at each node.
    #[default]
    Euclidean,
    /// Sum over components of the per-component angular norms.
    Componentwise,
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn lp_mean(values: impl Iterator<Item = (f64, f64)>, p: Exponent) -> f64 {
    match p.as_finite() {
        None => values.map(|(_, v)| v.abs()).fold(0.0, f64::max),
        Some(_) => {
            let pf = p.to_f64();
            let s: f64 = values.map(|(w, v)| w * v.abs().powf(pf)).sum();
            s.powf(1.0 / pf)
        }
    }
}

/// `(sum_j a_j |f(r_i omega_j)|^ptilde)^{1/ptilde}` on shell `shell`.
pub fn angular_norm(pf: &PolarField, ptilde: Exponent, shell: usize) -> f64 {
    angular_norm_with(pf, ptilde, shell, Magnitude::Euclidean)
}

pub fn angular_norm_with(pf: &PolarField, ptilde: Exponent, shell: usize, magnitude: Magnitude) -> f64 {
    let g = pf.grid();
    let w = g.angular_weights();
    match magnitude {
        Magnitude::Euclidean => lp_mean((0..g.angular_count()).map(|j| (w[j], pf.magnitude(shell, j))), ptilde),
        Magnitude::Componentwise => (0..pf.components())
            .map(|c| lp_mean((0..g.angular_count()).map(|j| (w[j], pf.value(c, shell, j))), ptilde))
            .sum(),
    }
}

/// Options for [`mixed_norm_with`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MixedNormOptions {
    pub magnitude: Magnitude,
    /// Nodes with `r_i > radius_cap` are excluded (parabola masks).
    pub radius_cap: Option<f64>,
}

/// `( sum_i w_i r_i^{alpha p + n - 1} A_i^p )^{1/p}` plus the extrapolated core
/// ball `[0, r_min]`; `p = INF` gives `sup_i r_i^alpha A_i`.
pub fn mixed_norm(pf: &PolarField, alpha: Rational, p: Exponent, ptilde: Exponent) -> Result<NormResult> {
    mixed_norm_with(pf, alpha, p, ptilde, MixedNormOptions::default())
}

pub fn mixed_norm_with(
    pf: &PolarField,
    alpha: Rational,
    p: Exponent,
    ptilde: Exponent,
    opts: MixedNormOptions,
) -> Result<NormResult> {
    let g = pf.grid();
    let a = rational_to_f64(&alpha);
    let shells = g.shell_count();
    let cap = opts.radius_cap.unwrap_or(f64::INFINITY);
    let angular: Vec<f64> = (0..shells)
        .into_par_iter()
        .map(|i| if g.radii()[i] <= cap { angular_norm_with(pf, ptilde, i, opts.magnitude) } else { 0.0 })
        .collect();
    match p.as_finite() {
        None => {
            let value = (0..shells)
                .filter(|&i| g.radii()[i] <= cap)
                .map(|i| g.radii()[i].powf(a) * angular[i])
                .fold(0.0, f64::max);
            Ok(NormResult { value, quadrature_error_estimate: 0.0 })
        }
        Some(pr) => {
            let pf64 = p.to_f64();
            let expo = alpha * pr + Rational::from_integer(g.dims() as i128);
            if expo <= Rational::from_integer(0) {
                return Err(Error::NonIntegrableWeight(crate::index::format_rational(&expo)));
            }
            let e = rational_to_f64(&expo);
            let integrand: Vec<f64> =
                (0..shells).map(|i| g.radii()[i].powf(e - 1.0) * angular[i].powf(pf64)).collect();
            let fine: f64 = integrand.iter().zip(g.radial_weights()).map(|(f, w)| f * w).sum();
            let coarse: f64 = integrand.iter().zip(g.coarse_weights()).map(|(f, w)| f * w).sum();
            // A^p taken constant on the core ball [0, r_min]
            let core = if g.r_min() <= cap { angular[0].powf(pf64) * g.r_min().powf(e) / e } else { 0.0 };
            let value = (fine + core).powf(1.0 / pf64);
            let half = (coarse + core).max(0.0).powf(1.0 / pf64);
            Ok(NormResult { value, quadrature_error_estimate: (value - half).abs() })
        }
    }
}

/// `int |x|^gamma g(x) dx` over the polar ball for a scalar polar field,
/// with the same core extrapolation as [`mixed_norm`].
pub fn ball_integral(pf: &PolarField, gamma: f64) -> Result<f64> {
    let g = pf.grid();
    let e = gamma + g.dims() as f64;
    if e <= 0.0 {
        return Err(Error::NonIntegrableWeight(format!("{e}")));
    }
    let w = g.angular_weights();
    let factor = g.surface_factor();
    let shell_int = |i: usize| -> f64 {
        factor * (0..g.angular_count()).map(|j| w[j] * pf.value(0, i, j)).sum::<f64>()
    };
    let mut total = 0.0;
    for i in 0..g.shell_count() {
        total += g.radial_weights()[i] * g.radii()[i].powf(e - 1.0) * shell_int(i);
    }
    total += shell_int(0) * g.r_min().powf(e) / e;
    Ok(total)
}

/// Composite trapezoid in `t` of `mixed_norm^s`, then the `1/s` power;
/// `s = INF` takes the maximum over snapshots.
pub fn time_mixed_norm(
    snapshots: &[(f64, PolarField)],
    alpha: Rational,
    s: Exponent,
    p: Exponent,
    ptilde: Exponent,
) -> Result<NormResult> {
    let norms = snapshots
        .iter()
        .map(|(_, f)| mixed_norm(f, alpha, p, ptilde))
        .collect::<Result<Vec<_>>>()?;
    let times: Vec<f64> = snapshots.iter().map(|(t, _)| *t).collect();
    time_norm_of_series(&times, &norms, s)
}

/// Time `L^s` norm of a sampled series of spatial norms.
pub fn time_norm_of_series(times: &[f64], norms: &[NormResult], s: Exponent) -> Result<NormResult> {
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("snapshot times must be strictly increasing".into()));
    }
    if s.is_inf() {
        let value = norms.iter().map(|r| r.value).fold(0.0, f64::max);
        let err = norms.iter().map(|r| r.quadrature_error_estimate).fold(0.0, f64::max);
        return Ok(NormResult { value, quadrature_error_estimate: err });
    }
    if times.len() < 2 {
        return Err(Error::Insufficient("a finite time exponent needs at least 2 snapshots".into()));
    }
    let sf = s.to_f64();
    let trap = |vals: &dyn Fn(usize) -> f64| -> f64 {
        (1..times.len()).map(|k| 0.5 * (times[k] - times[k - 1]) * (vals(k - 1) + vals(k))).sum()
    };
    let value = trap(&|k| norms[k].value.powf(sf)).powf(1.0 / sf);
    let upper = trap(&|k| (norms[k].value + norms[k].quadrature_error_estimate).powf(sf)).powf(1.0 / sf);
    Ok(NormResult { value, quadrature_error_estimate: (upper - value).abs() })
}

/// `(h^n sum |f|^p)^{1/p}` with Euclidean magnitude; `INF` gives the maximum.
pub fn cartesian_lp(f: &CartesianField, p: Exponent) -> f64 {
    let mag = f.magnitude();
    match p.as_finite() {
        None => mag.iter().fold(0.0, |m: f64, v| m.max(*v)),
        Some(_) => {
            let pf = p.to_f64();
            let hn = f.spacing().powi(f.dims() as i32);
            (hn * mag.iter().map(|v| v.powf(pf)).sum::<f64>()).powf(1.0 / pf)
        }
    }
}

/// `(S_lam f)(x) = f(x / lam)` for `lam = 2^k`: the samples are unchanged and
/// the box half width becomes `lam L`.
pub fn dilate(f: &CartesianField, lam: f64) -> Result<CartesianField> {
    let k = lam.log2();
    if !(lam > 0.0 && lam.is_finite()) || k.round() != k {
        return Err(Error::UnsupportedDilation(lam));
    }
    f.rebox(f.half_width() * lam)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::{int, rat};
    use crate::polar::{Normalization, PolarGrid, PolarGridSpec};
    use crate::resample::resample;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn grid(r_min: f64, r_max: f64, norm: Normalization) -> Arc<PolarGrid> {
        let spec = PolarGridSpec {
            dims: 3,
            r_min,
            r_max,
            shells: 32,
            nodes_per_shell: 4,
            angular_order: 15,
            normalization: norm,
        };
        Arc::new(PolarGrid::build(spec).unwrap())
    }

    fn gaussian_polar(g: &Arc<PolarGrid>) -> PolarField {
        PolarField::from_fn(g.clone(), 1, |x, o| o[0] = (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp()).unwrap()
    }

    #[test]
    fn ball_volume() {
        let g = grid(0.01, 2.0, Normalization::SurfaceMeasure);
        let one = PolarField::from_fn(g.clone(), 1, |_, o| o[0] = 1.0).unwrap();
        let v = ball_integral(&one, 0.0).unwrap();
        let exact = 4.0 / 3.0 * PI * 8.0;
        assert!((v / exact - 1.0).abs() < 1e-10);
        let r = mixed_norm(&one, int(0), Exponent::int(1), Exponent::int(1)).unwrap();
        assert!((r.value / exact - 1.0).abs() < 1e-10);
    }

    #[test]
    fn angular_norm_of_x1_over_r() {
        let g = grid(0.5, 2.0, Normalization::Probability);
        let f = PolarField::from_fn(g.clone(), 1, |x, o| {
            o[0] = x[0] / (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
        })
        .unwrap();
        let a2 = angular_norm(&f, Exponent::int(2), 3);
        assert!((a2 - 3f64.sqrt().recip()).abs() < 1e-12);
        let ainf = angular_norm(&f, Exponent::INF, 3);
        assert!(ainf >= 0.99);
    }

    #[test]
    fn radial_field_angular_norm_is_its_value() {
        let g = grid(0.5, 2.0, Normalization::Probability);
        let f = gaussian_polar(&g);
        for pt in [Exponent::int(1), Exponent::int(3), Exponent::INF] {
            let v = angular_norm(&f, pt, 5);
            let r = g.radii()[5];
            assert!((v - (-r * r).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_l2_norm() {
        let g = grid(1e-3, 10.0, Normalization::SurfaceMeasure);
        let r = mixed_norm(&gaussian_polar(&g), int(0), Exponent::int(2), Exponent::int(2)).unwrap();
        let exact = (PI / 2.0).powf(0.75);
        assert!((r.value / exact - 1.0).abs() < 1e-6, "{}", r.value);
        assert!(r.quadrature_error_estimate < 1e-2);
    }

    #[test]
    fn non_integrable_weight_is_an_error() {
        let g = grid(1e-3, 10.0, Normalization::SurfaceMeasure);
        let err = mixed_norm(&gaussian_polar(&g), rat(-3, 2), Exponent::int(2), Exponent::int(2)).unwrap_err();
        assert!(err.to_string().contains("non-integrable weight"));
    }

    #[test]
    fn time_norm_of_constant_series() {
        let g = grid(1e-3, 10.0, Normalization::SurfaceMeasure);
        let f = gaussian_polar(&g);
        let snaps: Vec<(f64, PolarField)> = (0..5).map(|k| (k as f64 * 0.5, f.clone())).collect();
        let m = mixed_norm(&f, int(0), Exponent::int(4), Exponent::int(4)).unwrap().value;
        let tn = time_mixed_norm(&snaps, int(0), Exponent::int(3), Exponent::int(4), Exponent::int(4)).unwrap();
        assert!((tn.value - 2f64.powf(1.0 / 3.0) * m).abs() < 1e-12 * m);
        assert!(time_mixed_norm(&snaps[..1], int(0), Exponent::int(3), Exponent::int(4), Exponent::int(4)).is_err());
    }

    #[test]
    fn dilate_is_a_rebox() {
        let f = CartesianField::scalar_fn(3, 16, 4.0, |x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp()).unwrap();
        assert_eq!(dilate(&f, 1.0).unwrap(), f);
        let d = dilate(&f, 2.0).unwrap();
        assert_eq!(d.half_width(), 8.0);
        let want = CartesianField::scalar_fn(3, 16, 8.0, |x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 4.0).exp()).unwrap();
        assert!(d.sub(&want).unwrap().max_abs() < 1e-15);
        assert!(dilate(&f, 3.0).is_err());
    }

    #[test]
    fn cartesian_lp_of_gaussian() {
        let f = CartesianField::scalar_fn(3, 64, 12.0, |x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp()).unwrap();
        let v = cartesian_lp(&f, Exponent::int(2));
        assert!((v / (PI / 2.0).powf(0.75) - 1.0).abs() < 1e-4);
        let z = CartesianField::zeros(3, 8, 1.0, 1).unwrap();
        assert_eq!(cartesian_lp(&z, Exponent::int(3)), 0.0);
        let g = grid(1e-3, 11.0, Normalization::SurfaceMeasure);
        let pf = resample(&f, &g).unwrap();
        let m = mixed_norm(&pf, int(0), Exponent::int(3), Exponent::int(3)).unwrap().value;
        assert!((m / cartesian_lp(&f, Exponent::int(3)) - 1.0).abs() < 1e-2);
    }
}
