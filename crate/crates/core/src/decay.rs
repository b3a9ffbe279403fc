//! Numerical experiments for the weighted heat and Oseen decay estimates,
//! their parabola-localized variants, the time-integrated and Duhamel
//! estimates, and the CKN comparison chain.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::CartesianField;
use crate::index::{
    admissible_estimate, serde_rational, Admissibility, EstimateIndices, EstimateKind, Exponent, Rational,
};
use crate::norms::{ball_integral, dilate, mixed_norm_with, rational_to_f64, time_norm_of_series, MixedNormOptions, NormResult};
use crate::ns::{nonlinear_term, DuhamelIntegrator, Trajectory};
use crate::operators::{axis_multi_index, heat_evolve, oseen_apply, spectral_derivative};
use crate::polar::{Normalization, PolarField, PolarGrid, PolarGridSpec};
use crate::resample::{resample_with, Interpolation, DEFAULT_MARGIN};

/// Times are accepted up to `BOX_VALIDITY * L^2`.
pub const BOX_VALIDITY: f64 = 1.0 / 36.0;

/// Slope tolerance of the one-sided decay test.
pub const SLOPE_TOLERANCE: f64 = 0.05;
/// Allowed growth of `lhs t^rate / rhs` over its first value.
pub const RATIO_GROWTH_LIMIT: f64 = 10.0;
/// Slack on the `2^{-Lambda}` growth of the localized constant under `R -> 2R`.
pub const DOUBLING_SLACK: f64 = 1.2;
/// Allowed max/min spread of measured constants across dilations.
pub const DILATION_SPREAD: f64 = 2.0;

/// Polar grid layout relative to the box of the field being measured.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolarSpec {
    /// `r_min = r_min_frac * L`.
    pub r_min_frac: f64,
    pub margin: f64,
    pub shells: usize,
    pub nodes_per_shell: usize,
    pub angular_order: usize,
    pub normalization: Normalization,
    pub interpolation: Interpolation,
}

impl Default for PolarSpec {
    fn default() -> Self {
        PolarSpec {
            r_min_frac: 1e-3,
            margin: DEFAULT_MARGIN,
            shells: 32,
            nodes_per_shell: 4,
            angular_order: 15,
            normalization: Normalization::SurfaceMeasure,
            interpolation: Interpolation::default(),
        }
    }
}

impl PolarSpec {
    /// Grid reaching `L (1 - margin)`.
    pub fn grid_for(&self, f: &CartesianField) -> Result<Arc<PolarGrid>> {
        let l = f.half_width();
        self.ball(f.dims(), self.r_min_frac * l, l * (1.0 - self.margin))
    }

    pub fn ball(&self, dims: usize, r_min: f64, r_max: f64) -> Result<Arc<PolarGrid>> {
        let spec = PolarGridSpec {
            dims,
            r_min,
            r_max,
            shells: self.shells,
            nodes_per_shell: self.nodes_per_shell,
            angular_order: self.angular_order,
            normalization: self.normalization,
        };
        Ok(Arc::new(PolarGrid::build(spec)?))
    }

    pub fn resample(&self, f: &CartesianField, grid: &Arc<PolarGrid>) -> Result<PolarField> {
        resample_with(f, grid, self.interpolation, self.margin)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecayOptions {
    pub polar: PolarSpec,
    /// Least-squares window `[t0, t1]`; defaults to the last two decades of the samples.
    pub fit_window: Option<[f64; 2]>,
    /// Dilation factors for the non-asymptotic estimates.
    pub dilations: Vec<f64>,
    /// Samples of the time window for the integral estimate.
    pub window_samples: usize,
}

impl Default for DecayOptions {
    fn default() -> Self {
        DecayOptions { polar: PolarSpec::default(), fit_window: None, dilations: vec![1.0, 2.0, 4.0], window_samples: 33 }
    }
}

/// `Pi(R) = {(x, t) : |x| <= R sqrt(t)}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParabolaMask {
    pub radius: f64,
}

impl ParabolaMask {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Domain(format!("parabola radius {radius} must be positive")));
        }
        Ok(ParabolaMask { radius })
    }

    pub fn contains(&self, x: f64, t: f64) -> bool {
        x <= self.radius * t.sqrt()
    }

    pub fn cap(&self, t: f64) -> f64 {
        self.radius * t.sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub limit: f64,
}

fn check(name: &str, value: f64, limit: f64, passed: bool) -> Check {
    Check { name: name.to_string(), passed, value, limit }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DilationConstant {
    pub lambda: f64,
    pub constant: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub t: f64,
    pub lhs: f64,
    pub bound: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub kind: EstimateKind,
    pub indices: EstimateIndices,
    pub admissibility: Admissibility,
    pub t_samples: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs_scale: f64,
    #[serde(with = "serde_rational")]
    pub predicted_rate: Rational,
    pub fitted_slope: Option<f64>,
    pub slope_std_error: Option<f64>,
    pub fit_window: Option<[f64; 2]>,
    pub ratio_sup: f64,
    pub ratio_first: f64,
    pub radius: Option<f64>,
    pub localized_factor: Option<f64>,
    /// `ratio_sup(2R) / ratio_sup(R)` for the localized estimate.
    pub doubling_growth: Option<f64>,
    /// Largest relative gap between masked and unmasked norms.
    pub unmasked_gap: Option<f64>,
    /// Measured `lhs / rhs_scale` of the non-asymptotic estimates.
    pub constant: Option<f64>,
    pub dilation_constants: Vec<DilationConstant>,
    pub quadrature_error: f64,
    pub rows: Vec<DecayRow>,
    pub checks: Vec<Check>,
    pub verdict: Verdict,
}

impl DecayReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,lhs,bound,ratio\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", r.t, r.lhs, r.bound, r.ratio);
        }
        out
    }

    fn finish(mut self) -> Self {
        self.verdict = if self.checks.iter().all(|c| c.passed) { Verdict::Pass } else { Verdict::Fail };
        self
    }
}

/// Least-squares slope of `log y` against `log t` on `window` with its standard error.
pub fn slope_fit(t: &[f64], y: &[f64], window: [f64; 2]) -> Option<(f64, Option<f64>)> {
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(y)
        .filter(|(t, _)| **t >= window[0] * (1.0 - 1e-12) && **t <= window[1] * (1.0 + 1e-12))
        .map(|(t, y)| (t.ln(), *y))
        .collect();
    if pts.len() < 2 || pts.iter().any(|(_, y)| !(*y > 0.0)) {
        return None;
    }
    let pts: Vec<(f64, f64)> = pts.into_iter().map(|(x, y)| (x, y.ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let se = if pts.len() > 2 {
        let ssr: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
        Some((ssr / (m - 2.0) / sxx).sqrt())
    } else {
        None
    };
    Some((slope, se))
}

fn require(kind: EstimateKind, e: &EstimateIndices) -> Result<Admissibility> {
    let adm = admissible_estimate(kind, e);
    if !adm.admissible {
        return Err(Error::Inadmissible(adm.violations.join("; ")));
    }
    Ok(adm)
}

fn check_times(t: &[f64], f: &CartesianField, allow_zero: bool) -> Result<()> {
    if t.is_empty() {
        return Err(Error::Insufficient("empty time grid".into()));
    }
    if t.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("time samples must be strictly increasing".into()));
    }
    let first_ok = if allow_zero { t[0] >= 0.0 } else { t[0] > 0.0 };
    if !first_ok {
        return Err(Error::NegativeTime(t[0]));
    }
    let cap = BOX_VALIDITY * f.half_width().powi(2);
    let last = *t.last().expect("non-empty");
    if last > cap {
        return Err(Error::Domain(format!("t = {last} beyond box validity t <= L^2/36 = {cap}")));
    }
    Ok(())
}

fn weighted(
    pf: &PolarField,
    weight: Rational,
    p: Exponent,
    ptilde: Exponent,
    cap: Option<f64>,
) -> Result<NormResult> {
    mixed_norm_with(pf, weight, p, ptilde, MixedNormOptions { radius_cap: cap, ..Default::default() })
}

fn derivative(f: CartesianField, eta: u32) -> Result<CartesianField> {
    if eta == 0 {
        Ok(f)
    } else {
        spectral_derivative(&f, &axis_multi_index(f.dims(), eta))
    }
}

fn default_window(t: &[f64]) -> [f64; 2] {
    let last = *t.last().expect("non-empty");
    [last / 100.0, last]
}

#[allow(clippy::too_many_arguments)]
fn decay_core(
    kind: EstimateKind,
    e: &EstimateIndices,
    adm: Admissibility,
    rate: Rational,
    t: &[f64],
    lhs: Vec<NormResult>,
    rhs: NormResult,
    factor: f64,
    opts: &DecayOptions,
) -> DecayReport {
    let rate_f = rational_to_f64(&rate);
    let lhs_v: Vec<f64> = lhs.iter().map(|r| r.value).collect();
    let denom = rhs.value * factor;
    let rows: Vec<DecayRow> = t
        .iter()
        .zip(&lhs_v)
        .map(|(&t, &l)| {
            let bound = denom * t.powf(-rate_f);
            let ratio = if l == 0.0 { 0.0 } else { l * t.powf(rate_f) / denom };
            DecayRow { t, lhs: l, bound, ratio }
        })
        .collect();
    let ratio_sup = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let ratio_first = rows[0].ratio;
    let window = opts.fit_window.unwrap_or_else(|| default_window(t));
    let fit = slope_fit(t, &lhs_v, window);
    let all_zero = lhs_v.iter().all(|v| *v == 0.0);
    let mut checks = Vec::new();
    let limit = -rate_f + SLOPE_TOLERANCE;
    match fit {
        Some((s, _)) => checks.push(check("slope <= -rate + 0.05", s, limit, s <= limit)),
        None => checks.push(check("slope <= -rate + 0.05", f64::NAN, limit, all_zero)),
    }
    checks.push(check("ratio_sup finite", ratio_sup, f64::INFINITY, ratio_sup.is_finite()));
    let growth = if ratio_sup == 0.0 { 0.0 } else { ratio_sup / ratio_first };
    checks.push(check("ratio_sup / ratio_first <= 10", growth, RATIO_GROWTH_LIMIT, growth <= RATIO_GROWTH_LIMIT));
    let quad = lhs.iter().chain(std::iter::once(&rhs)).map(|r| r.quadrature_error_estimate).fold(0.0, f64::max);
    DecayReport {
        kind,
        indices: *e,
        admissibility: adm,
        t_samples: t.to_vec(),
        lhs: lhs_v,
        rhs_scale: rhs.value,
        predicted_rate: rate,
        fitted_slope: fit.map(|f| f.0),
        slope_std_error: fit.and_then(|f| f.1),
        fit_window: Some(window),
        ratio_sup,
        ratio_first,
        radius: None,
        localized_factor: None,
        doubling_growth: None,
        unmasked_gap: None,
        constant: None,
        dilation_constants: Vec::new(),
        quadrature_error: quad,
        rows,
        checks,
        verdict: Verdict::Fail,
    }
}

/// `lhs(t) = || |x|^beta d^eta e^{t Delta} u0 ||_{q, qtilde}` against
/// `|| |x|^alpha u0 ||_{p, ptilde} t^{-rate}`.
pub fn heat_decay_report(u0: &CartesianField, e: &EstimateIndices, t: &[f64], opts: &DecayOptions) -> Result<DecayReport> {
    let adm = require(EstimateKind::HeatDecay, e)?;
    check_times(t, u0, false)?;
    let grid = opts.polar.grid_for(u0)?;
    let rhs = weighted(&opts.polar.resample(u0, &grid)?, e.alpha, e.p, e.ptilde, None)?;
    let lhs = t
        .par_iter()
        .map(|&ti| {
            let v = derivative(heat_evolve(u0, ti)?, e.eta)?;
            weighted(&opts.polar.resample(&v, &grid)?, e.beta, e.q, e.qtilde, None)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(decay_core(EstimateKind::HeatDecay, e, adm, e.heat_rate(), t, lhs, rhs, 1.0, opts).finish())
}

/// As [`heat_decay_report`] for `e^{t Delta} P div F` with a tensor `F`.
pub fn oseen_decay_report(f: &CartesianField, e: &EstimateIndices, t: &[f64], opts: &DecayOptions) -> Result<DecayReport> {
    let adm = require(EstimateKind::OseenDecay, e)?;
    check_times(t, f, false)?;
    let grid = opts.polar.grid_for(f)?;
    let rhs = weighted(&opts.polar.resample(f, &grid)?, e.alpha, e.p, e.ptilde, None)?;
    let lhs = t
        .par_iter()
        .map(|&ti| {
            let v = derivative(oseen_apply(f, ti)?, e.eta)?;
            weighted(&opts.polar.resample(&v, &grid)?, e.beta, e.q, e.qtilde, None)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(decay_core(EstimateKind::OseenDecay, e, adm, e.oseen_rate(), t, lhs, rhs, 1.0, opts).finish())
}

/// Heat decay measured inside the parabola `|x| <= R sqrt(t)` with the
/// constant scaled by `R^{-Lambda_{alpha,beta}}`; also reruns the mask at `2R`.
pub fn localized_decay_report(
    u0: &CartesianField,
    e: &EstimateIndices,
    radius: f64,
    t: &[f64],
    opts: &DecayOptions,
) -> Result<DecayReport> {
    let adm = require(EstimateKind::Localized, e)?;
    let mask = ParabolaMask::new(radius)?;
    let wide = ParabolaMask::new(2.0 * radius)?;
    check_times(t, u0, false)?;
    let grid = opts.polar.grid_for(u0)?;
    let rhs = weighted(&opts.polar.resample(u0, &grid)?, e.alpha, e.p, e.ptilde, None)?;
    let triples = t
        .par_iter()
        .map(|&ti| {
            let v = derivative(heat_evolve(u0, ti)?, e.eta)?;
            let pf = opts.polar.resample(&v, &grid)?;
            Ok((
                weighted(&pf, e.beta, e.q, e.qtilde, Some(mask.cap(ti)))?,
                weighted(&pf, e.beta, e.q, e.qtilde, Some(wide.cap(ti)))?,
                weighted(&pf, e.beta, e.q, e.qtilde, None)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let gap = -rational_to_f64(&e.lambda_gap());
    let factor = radius.powf(gap);
    let rate = e.heat_rate();
    let rate_f = rational_to_f64(&rate);
    let raw_sup = |k: usize| {
        t.iter()
            .zip(&triples)
            .map(|(ti, tr)| {
                let v = [tr.0.value, tr.1.value][k];
                if v == 0.0 {
                    0.0
                } else {
                    v * ti.powf(rate_f) / rhs.value
                }
            })
            .fold(0.0, f64::max)
    };
    let (sup_r, sup_2r) = (raw_sup(0), raw_sup(1));
    let growth = if sup_2r == 0.0 { 0.0 } else { sup_2r / sup_r };
    let unmasked_gap = triples
        .iter()
        .map(|tr| if tr.2.value == 0.0 { 0.0 } else { (tr.2.value - tr.0.value).abs() / tr.2.value })
        .fold(0.0, f64::max);
    let lhs = triples.into_iter().map(|tr| tr.0).collect();
    let mut report = decay_core(EstimateKind::Localized, e, adm, rate, t, lhs, rhs, factor, opts);
    let limit = 2f64.powf(gap) * DOUBLING_SLACK;
    report.checks.push(check("R-doubling growth <= 2^{-Lambda} * 1.2", growth, limit, growth <= limit));
    report.radius = Some(radius);
    report.localized_factor = Some(factor);
    report.doubling_growth = Some(growth);
    report.unmasked_gap = Some(unmasked_gap);
    Ok(report.finish())
}

fn window_times(horizon: f64, samples: usize) -> Result<Vec<f64>> {
    if !(horizon > 0.0) || samples < 2 {
        return Err(Error::Domain("time window needs a positive horizon and at least 2 samples".into()));
    }
    Ok((0..samples).map(|k| horizon * k as f64 / (samples - 1) as f64).collect())
}

fn spread_check(constants: &[DilationConstant]) -> Check {
    let max = constants.iter().map(|c| c.constant).fold(0.0, f64::max);
    let min = constants.iter().map(|c| c.constant).fold(f64::INFINITY, f64::min);
    let spread = if max == 0.0 { 1.0 } else { max / min };
    check("dilation spread <= 2", spread, DILATION_SPREAD, spread <= DILATION_SPREAD)
}

fn integral_rows(t: &[f64], f: &[NormResult], rhs: f64, r: Exponent) -> Vec<DecayRow> {
    let inv_r = rational_to_f64(&r.recip());
    t.iter()
        .zip(f)
        .filter(|(t, _)| **t > 0.0)
        .map(|(&t, v)| {
            let bound = rhs * t.powf(-inv_r);
            let ratio = if v.value == 0.0 { 0.0 } else { v.value * t.powf(inv_r) / rhs };
            DecayRow { t, lhs: v.value, bound, ratio }
        })
        .collect()
}

/// `|| || |x|^beta d^eta e^{t Delta} u0 ||_{q, qtilde} ||_{L^r(0, T)}` over
/// `|| |x|^alpha u0 ||_{p, ptilde}`, repeated for each dilation of `u0`.
pub fn integral_estimate_report(
    u0: &CartesianField,
    e: &EstimateIndices,
    horizon: f64,
    opts: &DecayOptions,
) -> Result<DecayReport> {
    let adm = require(EstimateKind::Integral, e)?;
    let t = window_times(horizon, opts.window_samples)?;
    check_times(&t, u0, true)?;
    let lams = if opts.dilations.is_empty() { vec![1.0] } else { opts.dilations.clone() };
    let mut runs = Vec::new();
    for &lam in &lams {
        let v = dilate(u0, lam)?;
        let grid = opts.polar.grid_for(&v)?;
        let rhs = weighted(&opts.polar.resample(&v, &grid)?, e.alpha, e.p, e.ptilde, None)?;
        let f = t
            .par_iter()
            .map(|&ti| {
                let w = derivative(heat_evolve(&v, ti)?, e.eta)?;
                weighted(&opts.polar.resample(&w, &grid)?, e.beta, e.q, e.qtilde, None)
            })
            .collect::<Result<Vec<_>>>()?;
        let lhs = time_norm_of_series(&t, &f, e.r)?;
        runs.push((lam, rhs, f, lhs));
    }
    let constants: Vec<DilationConstant> = runs
        .iter()
        .map(|(lam, rhs, _, lhs)| DilationConstant {
            lambda: *lam,
            constant: if lhs.value == 0.0 { 0.0 } else { lhs.value / rhs.value },
        })
        .collect();
    let (_, rhs, f, lhs) = &runs[0];
    let rows = integral_rows(&t, f, rhs.value, e.r);
    let ratio_sup = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let c0 = constants[0].constant;
    let mut checks = vec![check("constant finite", c0, f64::INFINITY, c0.is_finite())];
    checks.push(spread_check(&constants));
    let quad = f.iter().chain([rhs, lhs]).map(|r| r.quadrature_error_estimate).fold(0.0, f64::max);
    Ok(DecayReport {
        kind: EstimateKind::Integral,
        indices: *e,
        admissibility: adm,
        t_samples: t.clone(),
        lhs: f.iter().map(|v| v.value).collect(),
        rhs_scale: rhs.value,
        predicted_rate: e.r.recip(),
        fitted_slope: None,
        slope_std_error: None,
        fit_window: None,
        ratio_sup,
        ratio_first: rows.first().map(|r| r.ratio).unwrap_or(0.0),
        radius: None,
        localized_factor: None,
        doubling_growth: None,
        unmasked_gap: None,
        constant: Some(c0),
        dilation_constants: constants,
        quadrature_error: quad,
        rows,
        checks,
        verdict: Verdict::Fail,
    }
    .finish())
}

/// Minimum snapshot count for the Duhamel estimate.
pub const DUHAMEL_MIN_SNAPSHOTS: usize = 32;

struct DuhamelMeasure {
    f: Vec<NormResult>,
    lhs: NormResult,
    rhs: f64,
    rhs_quad: f64,
}

fn duhamel_measure(traj: &Trajectory, e: &EstimateIndices, s: Exponent, opts: &DecayOptions) -> Result<DuhamelMeasure> {
    let first = &traj.snapshots[0];
    let grid = opts.polar.grid_for(first)?;
    let mut integ = DuhamelIntegrator::new(first.dims(), first.points(), first.half_width());
    let mut f = Vec::with_capacity(traj.len());
    let mut g = Vec::with_capacity(traj.len());
    for (t, u) in traj.times.iter().zip(&traj.snapshots) {
        let d = derivative(integ.push(*t, nonlinear_term(u)?)?.to_cartesian(), e.eta)?;
        f.push(weighted(&opts.polar.resample(&d, &grid)?, e.beta, e.q, e.qtilde, None)?);
        g.push(weighted(&opts.polar.resample(u, &grid)?, e.alpha, e.p, e.ptilde, None)?);
    }
    let lhs = time_norm_of_series(&traj.times, &f, e.r)?;
    let src = time_norm_of_series(&traj.times, &g, s)?;
    let rhs = src.value * src.value;
    let rhs_quad = 2.0 * src.value * src.quadrature_error_estimate;
    Ok(DuhamelMeasure { f, lhs, rhs, rhs_quad })
}

/// `|| int_0^t e^{(t-s) Delta} P div (u x u) ds ||` in the target norm over
/// `|| |x|^alpha u ||^2_{L^s L^p L^ptilde}` along a trajectory.
pub fn duhamel_estimate_report(traj: &Trajectory, e: &EstimateIndices, opts: &DecayOptions) -> Result<DecayReport> {
    duhamel_with_constants(traj, e, opts, Vec::new())
}

fn duhamel_with_constants(
    traj: &Trajectory,
    e: &EstimateIndices,
    opts: &DecayOptions,
    extra: Vec<DilationConstant>,
) -> Result<DecayReport> {
    let adm = require(EstimateKind::Duhamel, e)?;
    let s = e.s.ok_or_else(|| Error::Inadmissible("missing time exponent s".into()))?;
    if traj.len() < DUHAMEL_MIN_SNAPSHOTS {
        return Err(Error::Insufficient(format!(
            "{} snapshots, at least {DUHAMEL_MIN_SNAPSHOTS} required",
            traj.len()
        )));
    }
    let n = traj.snapshots[0].dims();
    if traj.snapshots[0].components() != n {
        return Err(Error::Components { expected: n, got: traj.snapshots[0].components() });
    }
    let m = duhamel_measure(traj, e, s, opts)?;
    let constant = if m.lhs.value == 0.0 { 0.0 } else { m.lhs.value / m.rhs };
    let rows = integral_rows(&traj.times, &m.f, m.rhs, e.r);
    let ratio_sup = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let mut constants = vec![DilationConstant { lambda: 1.0, constant }];
    constants.extend(extra);
    let mut checks = vec![check("constant finite", constant, f64::INFINITY, constant.is_finite())];
    if constants.len() > 1 {
        checks.push(spread_check(&constants));
    }
    let quad = m.f.iter().map(|r| r.quadrature_error_estimate).fold(m.lhs.quadrature_error_estimate.max(m.rhs_quad), f64::max);
    Ok(DecayReport {
        kind: EstimateKind::Duhamel,
        indices: *e,
        admissibility: adm,
        t_samples: traj.times.clone(),
        lhs: m.f.iter().map(|v| v.value).collect(),
        rhs_scale: m.rhs,
        predicted_rate: e.r.recip(),
        fitted_slope: None,
        slope_std_error: None,
        fit_window: None,
        ratio_sup,
        ratio_first: rows.first().map(|r| r.ratio).unwrap_or(0.0),
        radius: None,
        localized_factor: None,
        doubling_growth: None,
        unmasked_gap: None,
        constant: Some(constant),
        dilation_constants: constants,
        quadrature_error: quad,
        rows,
        checks,
        verdict: Verdict::Fail,
    }
    .finish())
}

/// Duhamel estimate on the heat flows of `lam^{-1} S_lam u0` over `[0, T]`
/// for every configured dilation; the verdict requires a stable constant.
pub fn duhamel_dilation_report(
    u0: &CartesianField,
    e: &EstimateIndices,
    horizon: f64,
    steps: usize,
    opts: &DecayOptions,
) -> Result<DecayReport> {
    require(EstimateKind::Duhamel, e)?;
    let t = window_times(horizon, steps + 1)?;
    check_times(&t, u0, true)?;
    let lams = if opts.dilations.is_empty() { vec![1.0] } else { opts.dilations.clone() };
    let mut base = None;
    let mut extra = Vec::new();
    for &lam in &lams {
        let v = dilate(u0, lam)?.scaled(1.0 / lam);
        let traj = Trajectory::heat_flow(&v, &t)?;
        if base.is_none() && lam == lams[0] {
            base = Some(traj);
            continue;
        }
        let s = e.s.ok_or_else(|| Error::Inadmissible("missing time exponent s".into()))?;
        let m = duhamel_measure(&traj, e, s, opts)?;
        let constant = if m.lhs.value == 0.0 { 0.0 } else { m.lhs.value / m.rhs };
        extra.push(DilationConstant { lambda: lam, constant });
    }
    let base = base.expect("at least one dilation");
    let mut report = duhamel_with_constants(&base, e, opts, extra)?;
    report.dilation_constants[0].lambda = lams[0];
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CknRow {
    pub r: f64,
    pub t_start: f64,
    pub t_end: f64,
    /// `r^{-2} int_{Q*_r} |u|^3`.
    pub a: f64,
    /// `int_{Q*_r} |x|^{-2} |u|^3`.
    pub b: f64,
    pub dominated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CknReport {
    pub t_bar: f64,
    pub rows: Vec<CknRow>,
    pub all_dominated: bool,
    /// `A(r)` strictly decreases as `r` decreases.
    pub decreasing: bool,
    pub verdict: Verdict,
}

impl CknReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,t_start,t_end,A,B,dominated\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{},{},{}", r.r, r.t_start, r.t_end, r.a, r.b, r.dominated);
        }
        out
    }
}

/// Union of uniform grids with `per_window` points on each cylinder window.
pub fn ckn_time_grid(t_bar: f64, radii: &[f64], per_window: usize) -> Vec<f64> {
    let mut t: Vec<f64> = Vec::new();
    for &r in radii {
        let (a, b) = (t_bar - 7.0 / 8.0 * r * r, t_bar + r * r / 8.0);
        let k = per_window.max(2);
        t.extend((0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64));
    }
    t.sort_by(|a, b| a.total_cmp(b));
    t.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
    t
}

/// Integral over `[a, b]` of the piecewise linear interpolant of `(t, y)`.
fn clipped_trapezoid(t: &[f64], y: &[f64], a: f64, b: f64) -> f64 {
    let mut total = 0.0;
    for k in 1..t.len() {
        let (t0, t1) = (t[k - 1], t[k]);
        let (lo, hi) = (t0.max(a), t1.min(b));
        if hi <= lo {
            continue;
        }
        let at = |s: f64| y[k - 1] + (y[k] - y[k - 1]) * (s - t0) / (t1 - t0);
        total += 0.5 * (hi - lo) * (at(lo) + at(hi));
    }
    total
}

/// `A(r)` and `B(r)` on the cylinders `Q*_r(t_bar, 0)` for each radius.
pub fn ckn_comparison(traj: &Trajectory, t_bar: f64, radii: &[f64], polar: &PolarSpec) -> Result<CknReport> {
    let first = &traj.snapshots[0];
    let (t0, t1) = (traj.times[0], *traj.times.last().expect("non-empty"));
    let tol = 1e-12 * t1.abs().max(1.0);
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("radius {r} must be positive")));
        }
        let (a, b) = (t_bar - 7.0 / 8.0 * r * r, t_bar + r * r / 8.0);
        if a < t0 - tol || b > t1 + tol {
            return Err(Error::Domain(format!("window [{a}, {b}] outside trajectory [{t0}, {t1}]")));
        }
        let grid = polar.ball(first.dims(), r * polar.r_min_frac, r)?;
        let idx: Vec<usize> = (0..traj.len())
            .filter(|&k| {
                let lo = if k == 0 { traj.times[0] } else { traj.times[k - 1] };
                let hi = if k + 1 == traj.len() { traj.times[k] } else { traj.times[k + 1] };
                hi >= a && lo <= b
            })
            .collect();
        let vals = idx
            .par_iter()
            .map(|&k| {
                let pf = polar.resample(&traj.snapshots[k], &grid)?;
                let cube = pf.map_magnitude(|v| v * v * v);
                Ok((ball_integral(&cube, 0.0)?, ball_integral(&cube, -2.0)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let ts: Vec<f64> = idx.iter().map(|&k| traj.times[k]).collect();
        let ya: Vec<f64> = vals.iter().map(|v| v.0).collect();
        let yb: Vec<f64> = vals.iter().map(|v| v.1).collect();
        let big_a = clipped_trapezoid(&ts, &ya, a, b) / (r * r);
        let big_b = clipped_trapezoid(&ts, &yb, a, b);
        rows.push(CknRow { r, t_start: a, t_end: b, a: big_a, b: big_b, dominated: big_a <= big_b });
    }
    let all_dominated = rows.iter().all(|r| r.dominated);
    let mut by_r: Vec<&CknRow> = rows.iter().collect();
    by_r.sort_by(|x, y| y.r.total_cmp(&x.r));
    let decreasing = by_r.windows(2).all(|w| w[1].a < w[0].a);
    let verdict = if all_dominated && decreasing { Verdict::Pass } else { Verdict::Fail };
    Ok(CknReport { t_bar, rows, all_dominated, decreasing, verdict })
}
