//! Mild solutions `u = e^{t Delta} u0 - int_0^t e^{(t-s) Delta} P div (u x u) ds`
//! by Picard iteration on a stored snapshot grid, plus diagnostics.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::CartesianField;
use crate::index::{check_global_criterion, check_local_criterion, check_scaling, Admissibility, IndexTuple};
use crate::norms::{time_mixed_norm, NormResult};
use crate::operators::{leray_project, oseen_mode, poisson_pressure, products_spectral, relative_l2, riesz_pressure, upper_pairs};
use crate::polar::{PolarField, PolarGrid};
use crate::resample::resample;
use crate::spectral::{norm_sq, SpectralField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DatumKind {
    GaussianSolenoidal,
    TaylorGreenLocalized,
    File,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatumConfig {
    pub kind: DatumKind,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    /// NSRA1 snapshot for `FILE`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

fn default_amplitude() -> f64 {
    0.05
}

impl Default for DatumConfig {
    fn default() -> Self {
        DatumConfig { kind: DatumKind::GaussianSolenoidal, amplitude: default_amplitude(), path: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub n: usize,
    pub points: usize,
    pub half_width: f64,
    pub horizon: f64,
    /// Number of time intervals; the trajectory has `steps + 1` snapshots.
    pub steps: usize,
    pub picard_iters: usize,
    pub contraction_tol: f64,
    pub datum: DatumConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n: 3,
            points: 64,
            half_width: 12.0,
            horizon: 1.0,
            steps: 32,
            picard_iters: 30,
            contraction_tol: 1e-10,
            datum: DatumConfig::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Domain(format!("horizon {} must be positive", self.horizon)));
        }
        if self.steps == 0 || self.picard_iters == 0 {
            return Err(Error::Domain("steps and picard_iters must be positive".into()));
        }
        if !(self.contraction_tol > 0.0) {
            return Err(Error::Domain("contraction_tol must be positive".into()));
        }
        if !self.datum.amplitude.is_finite() {
            return Err(Error::Domain("amplitude must be finite".into()));
        }
        CartesianField::zeros(self.n, 4, self.half_width, 1)?;
        if self.points < 4 || !self.points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("points per axis {} must be a power of two >= 4", self.points)));
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.horizon * k as f64 / self.steps as f64).collect()
    }
}

/// Initial velocity: a divergence-free Gaussian-envelope field, a localized
/// Taylor-Green vortex, or a stored snapshot, times the amplitude.
pub fn make_datum(cfg: &SimConfig) -> Result<CartesianField> {
    cfg.validate()?;
    let (n, np, l) = (cfg.n, cfg.points, cfg.half_width);
    let raw = match cfg.datum.kind {
        DatumKind::GaussianSolenoidal => CartesianField::from_fn(n, np, l, n, |x, o| {
            let g = (-(x.iter().map(|v| v * v).sum::<f64>())).exp();
            if n == 3 {
                // curl of e^{-|x|^2} (1, x1, x2)
                let b = [1.0, x[0], x[1]];
                let cross = [x[1] * b[2] - x[2] * b[1], x[2] * b[0] - x[0] * b[2], x[0] * b[1] - x[1] * b[0]];
                o[0] = g * (1.0 - 2.0 * cross[0]);
                o[1] = g * (-2.0 * cross[1]);
                o[2] = g * (1.0 - 2.0 * cross[2]);
            } else {
                // perp gradient of e^{-|x|^2} (1 + x1)
                o[0] = -2.0 * x[1] * (1.0 + x[0]) * g;
                o[1] = g * (2.0 * x[0] * (1.0 + x[0]) - 1.0);
            }
        })?,
        DatumKind::TaylorGreenLocalized => {
            let width = l / 3.0;
            CartesianField::from_fn(n, np, l, n, |x, o| {
                let env = (-(x.iter().map(|v| v * v).sum::<f64>()) / (width * width)).exp();
                if n == 3 {
                    o[0] = env * x[0].sin() * x[1].cos() * x[2].cos();
                    o[1] = -env * x[0].cos() * x[1].sin() * x[2].cos();
                    o[2] = 0.0;
                } else {
                    o[0] = env * x[0].sin() * x[1].cos();
                    o[1] = -env * x[0].cos() * x[1].sin();
                }
            })?
        }
        DatumKind::File => {
            let path = cfg
                .datum
                .path
                .as_ref()
                .ok_or_else(|| Error::Domain("FILE datum needs a path".into()))?;
            let (f, _) = CartesianField::load(path)?;
            if f.dims() != n || f.points() != np || f.half_width() != l || f.components() != n {
                return Err(Error::InvalidGrid(format!(
                    "datum file grid (n={}, N={}, L={}, m={}) does not match the configuration",
                    f.dims(),
                    f.points(),
                    f.half_width(),
                    f.components()
                )));
            }
            f
        }
    };
    let mut u = leray_project(&raw)?;
    u.scale(cfg.datum.amplitude);
    Ok(u)
}

/// `||div u|| / ||grad u||` evaluated spectrally (0 for a constant field).
pub fn relative_divergence(u: &CartesianField) -> Result<f64> {
    let n = u.dims();
    if u.components() != n {
        return Err(Error::Components { expected: n, got: u.components() });
    }
    let s = SpectralField::forward(u);
    let waves = s.waves();
    let cells = s.cells();
    let pairs: Vec<(f64, f64)> = (0..cells)
        .into_par_iter()
        .map(|i| {
            let xi = waves.xi(i);
            let mut div = Complex64::default();
            let mut grad = 0.0;
            for c in 0..n {
                let z = s.component(c)[i];
                div += xi[c] * z;
                grad += norm_sq(&xi) * z.norm_sqr();
            }
            (div.norm_sqr(), grad)
        })
        .collect();
    let (d, g) = pairs.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    Ok(if g == 0.0 { 0.0 } else { (d / g).sqrt() })
}

/// `P div (u x u)` in spectral space with Nyquist modes dropped.
pub fn nonlinear_term(u: &CartesianField) -> Result<SpectralField> {
    let n = u.dims();
    if u.components() != n {
        return Err(Error::Components { expected: n, got: u.components() });
    }
    let prod = products_spectral(u);
    let waves = prod.waves();
    let cells = prod.cells();
    let pairs = upper_pairs(n);
    let mut slot = [[0usize; 3]; 3];
    for (p, &(j, k)) in pairs.iter().enumerate() {
        slot[j][k] = p;
        slot[k][j] = p;
    }
    let src = prod.coeffs();
    let modes: Vec<[Complex64; 3]> = (0..cells)
        .into_par_iter()
        .map(|i| {
            if waves.has_nyquist(i) {
                return [Complex64::default(); 3];
            }
            oseen_mode(&waves.xi(i), n, 0.0, |j, k| src[slot[j][k] * cells + i])
        })
        .collect();
    let mut out = prod.zeros_like(n);
    for c in 0..n {
        out.component_mut(c).par_iter_mut().zip(&modes).for_each(|(d, m)| *d = m[c]);
    }
    Ok(out)
}

/// `-expm1(-z)/z`.
fn phi1(z: f64) -> f64 {
    if z < 0.1 {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..12 {
            term *= -z / (k + 1) as f64;
            sum += term;
        }
        sum
    } else {
        -(-z).exp_m1() / z
    }
}

/// `(1 - e^{-z}(1 + z))/z^2 = sum_k (-1)^k (k+1) z^k / (k+2)!`.
fn phi2(z: f64) -> f64 {
    if z < 0.1 {
        let mut fact = 2.0;
        let mut pow = 1.0;
        let mut sum = 0.0;
        for k in 0..12 {
            sum += (k + 1) as f64 * pow / fact;
            pow *= -z;
            fact *= (k + 3) as f64;
        }
        sum
    } else {
        (-(-z).exp_m1() - z * (-z).exp()) / (z * z)
    }
}

/// Accumulates `D(t) = int_{t_0}^t e^{(t-s) Delta} G(s) ds` over snapshots,
/// with `G` linear in `s` on each interval and the heat factor integrated exactly.
pub struct DuhamelIntegrator {
    a: Vec<f64>,
    d: Option<SpectralField>,
    g_prev: Option<SpectralField>,
    t_prev: f64,
}

impl DuhamelIntegrator {
    pub fn new(dims: usize, points: usize, half_width: f64) -> Self {
        let waves = crate::spectral::WaveGrid::new(dims, points, half_width);
        let cells = points.pow(dims as u32);
        let a = (0..cells).map(|i| norm_sq(&waves.xi(i))).collect();
        DuhamelIntegrator { a, d: None, g_prev: None, t_prev: 0.0 }
    }

    /// Adds the source sample `g = G(t)` and returns `D(t)`.
    pub fn push(&mut self, t: f64, g: SpectralField) -> Result<&SpectralField> {
        match (self.d.take(), self.g_prev.take()) {
            (Some(mut d), Some(gp)) => {
                let dt = t - self.t_prev;
                if dt <= 0.0 {
                    return Err(Error::Domain("Duhamel times must be strictly increasing".into()));
                }
                let cells = self.a.len();
                let a = &self.a;
                let coeffs: Vec<(f64, f64, f64)> = a
                    .par_iter()
                    .map(|&ai| {
                        let z = ai * dt;
                        let c2 = phi2(z);
                        ((-z).exp(), dt * c2, dt * (phi1(z) - c2))
                    })
                    .collect();
                for c in 0..d.components() {
                    let (gp_c, g_c) = (gp.component(c), g.component(c));
                    d.component_mut(c).par_iter_mut().enumerate().for_each(|(i, v)| {
                        let (e, w0, w1) = coeffs[i % cells];
                        *v = *v * e + gp_c[i] * w0 + g_c[i] * w1;
                    });
                }
                self.d = Some(d);
            }
            _ => self.d = Some(g.zeros_like(g.components())),
        }
        self.g_prev = Some(g);
        self.t_prev = t;
        Ok(self.d.as_ref().expect("accumulator set"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    NonContractive,
    /// Not produced by the solver (e.g. a pure heat flow).
    Analytic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub datum: String,
    pub iterations: usize,
    /// `sup_t ||u^{k+1} - u^k|| / sup_t ||u^k||` per sweep.
    pub increments: Vec<f64>,
    /// Ratios of successive increments.
    pub contraction_ratios: Vec<f64>,
    pub status: SolveStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

impl TrajectoryMeta {
    pub fn analytic(datum: &str) -> Self {
        TrajectoryMeta {
            datum: datum.to_string(),
            iterations: 0,
            increments: Vec::new(),
            contraction_ratios: Vec::new(),
            status: SolveStatus::Analytic,
            config_hash: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<CartesianField>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, snapshots: Vec<CartesianField>, meta: TrajectoryMeta) -> Result<Self> {
        if times.is_empty() || times.len() != snapshots.len() {
            return Err(Error::Domain("trajectory needs one snapshot per time".into()));
        }
        if times[0] < 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("trajectory times must be non-negative and strictly increasing".into()));
        }
        if snapshots.iter().any(|s| !s.same_grid(&snapshots[0]) || s.components() != snapshots[0].components()) {
            return Err(Error::InvalidGrid("trajectory snapshots live on different grids".into()));
        }
        Ok(Trajectory { times, snapshots, meta })
    }

    /// `e^{t Delta} u0` at each time.
    pub fn heat_flow(u0: &CartesianField, times: &[f64]) -> Result<Self> {
        let base = SpectralField::forward(u0);
        let snapshots = times
            .iter()
            .map(|&t| {
                if t < 0.0 {
                    return Err(Error::NegativeTime(t));
                }
                let mut s = base.clone();
                s.apply_heat(t);
                Ok(s.to_cartesian())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(times.to_vec(), snapshots, TrajectoryMeta::analytic("heat flow"))
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &CartesianField {
        self.snapshots.last().expect("non-empty trajectory")
    }

    /// `c u(c^2 t, c x)` for `c = 1/lam`, `lam = 2^k`: times scale by `lam^2`.
    pub fn rescaled(&self, lam: f64) -> Result<Self> {
        let snapshots = self
            .snapshots
            .iter()
            .map(|s| Ok(crate::norms::dilate(s, lam)?.scaled(1.0 / lam)))
            .collect::<Result<Vec<_>>>()?;
        let times = self.times.iter().map(|t| t * lam * lam).collect();
        Self::new(times, snapshots, self.meta.clone())
    }

    /// Writes `snap_XXXX.nsra1` files and `manifest.json` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut files = Vec::with_capacity(self.len());
        for (k, (t, s)) in self.times.iter().zip(&self.snapshots).enumerate() {
            let name = format!("snap_{k:04}.nsra1");
            s.save(&dir.join(&name), *t)?;
            files.push(name);
        }
        let first = &self.snapshots[0];
        let manifest = Manifest {
            n: first.dims(),
            points: first.points(),
            half_width: first.half_width(),
            components: first.components(),
            times: self.times.clone(),
            files,
            meta: self.meta.clone(),
        };
        std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json"))?)?;
        let snapshots = manifest
            .files
            .iter()
            .map(|f| CartesianField::load(&dir.join(f)).map(|(s, _)| s))
            .collect::<Result<Vec<_>>>()?;
        Self::new(manifest.times, snapshots, manifest.meta)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    n: usize,
    points: usize,
    half_width: f64,
    components: usize,
    times: Vec<f64>,
    files: Vec<String>,
    meta: TrajectoryMeta,
}

fn sup_norm_over_time(fields: &[CartesianField]) -> f64 {
    fields.iter().map(|f| f.l2_norm()).fold(0.0, f64::max)
}

/// Picard iteration `u^{k+1} = e^{t Delta} u0 - D[u^k]`, starting from the heat flow.
pub fn picard_solve(cfg: &SimConfig) -> Result<Trajectory> {
    let u0 = make_datum(cfg)?;
    picard_solve_from(cfg, &u0)
}

pub fn picard_solve_from(cfg: &SimConfig, u0: &CartesianField) -> Result<Trajectory> {
    cfg.validate()?;
    let times = cfg.times();
    let heat = Trajectory::heat_flow(u0, &times)?;
    let mut u = heat.snapshots.clone();
    let mut increments = Vec::new();
    let mut ratios = Vec::new();
    let mut status = SolveStatus::MaxIterations;
    let mut stalls = 0;
    let mut iterations = 0;
    for _ in 0..cfg.picard_iters {
        iterations += 1;
        let scale = sup_norm_over_time(&u);
        let mut duhamel = DuhamelIntegrator::new(u0.dims(), u0.points(), u0.half_width());
        let mut diff: f64 = 0.0;
        for k in 0..times.len() {
            let g = nonlinear_term(&u[k])?;
            let d = duhamel.push(times[k], g)?.to_cartesian();
            let next = heat.snapshots[k].sub(&d)?;
            diff = diff.max(next.sub(&u[k])?.l2_norm());
            u[k] = next;
        }
        let inc = if scale == 0.0 { 0.0 } else { diff / scale };
        if let Some(&prev) = increments.last() {
            let ratio = if prev == 0.0 { 0.0 } else { inc / prev };
            stalls = if inc >= prev && inc > 0.0 { stalls + 1 } else { 0 };
            ratios.push(ratio);
        }
        increments.push(inc);
        if inc < cfg.contraction_tol {
            status = SolveStatus::Converged;
            break;
        }
        if stalls >= 3 {
            status = SolveStatus::NonContractive;
            break;
        }
    }
    let meta = TrajectoryMeta {
        datum: format!("{:?} amplitude {}", cfg.datum.kind, cfg.datum.amplitude),
        iterations,
        increments,
        contraction_ratios: ratios,
        status,
        config_hash: None,
    };
    Trajectory::new(times, u, meta)
}

/// Polar grid covering a box of half width `L` up to the default margin.
pub fn default_polar_grid(f: &CartesianField) -> Result<Arc<PolarGrid>> {
    crate::decay::PolarSpec::default().grid_for(f)
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionMonitor {
    pub norm: NormResult,
    pub global: Admissibility,
    pub local: Admissibility,
}

/// `|| |x|^alpha u ||_{L^s_T L^p_{|x|} L^ptilde_theta}` over the trajectory
/// together with the global and local admissibility verdicts of the tuple.
pub fn monitor_criterion(traj: &Trajectory, t: &IndexTuple) -> Result<CriterionMonitor> {
    if !check_scaling(t) {
        return Err(Error::Inadmissible("tuple does not satisfy 2/s + n/p = 1 - alpha".into()));
    }
    let grid = default_polar_grid(&traj.snapshots[0])?;
    let snaps = traj
        .snapshots
        .par_iter()
        .map(|s| resample(s, &grid))
        .collect::<Result<Vec<PolarField>>>()?;
    let series: Vec<(f64, PolarField)> = traj.times.iter().copied().zip(snaps).collect();
    let norm = time_mixed_norm(&series, t.alpha, t.s, t.p, t.ptilde)?;
    Ok(CriterionMonitor { norm, global: check_global_criterion(t), local: check_local_criterion(t) })
}

/// Largest relative L2 gap between the Riesz and Poisson pressure paths.
pub fn pressure_consistency(traj: &Trajectory) -> Result<f64> {
    let gaps = traj
        .snapshots
        .iter()
        .map(|u| relative_l2(&riesz_pressure(u)?, &poisson_pressure(u)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(gaps.into_iter().fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub t: f64,
    pub energy: f64,
    pub dissipation: f64,
    pub defect: f64,
}

/// `E(t) = ||u||^2/2`, `D(t) = int_0^t ||grad u||^2` and `E + D - E(0)`.
///
/// The dissipation integral treats every Fourier mode's `|u_k|^2` as
/// exponential between snapshots, which is exact for the heat flow.
pub fn energy_report(traj: &Trajectory) -> Result<Vec<EnergyRow>> {
    let first = &traj.snapshots[0];
    let hn = first.spacing().powi(first.dims() as i32);
    let norm = hn / first.cells() as f64;
    let waves = crate::spectral::WaveGrid::for_field(first);
    let cells = first.cells();
    let a: Vec<f64> = (0..cells).map(|i| norm_sq(&waves.xi(i))).collect();
    let spectra: Vec<Vec<f64>> = traj
        .snapshots
        .iter()
        .map(|u| {
            let s = SpectralField::forward(u);
            let mut e = vec![0.0; cells];
            for c in 0..u.components() {
                for (acc, z) in e.iter_mut().zip(s.component(c)) {
                    *acc += z.norm_sqr();
                }
            }
            e
        })
        .collect();
    let energy = |e: &[f64]| 0.5 * norm * e.iter().sum::<f64>();
    let e0 = energy(&spectra[0]);
    let mut rows = vec![EnergyRow { t: traj.times[0], energy: e0, dissipation: 0.0, defect: 0.0 }];
    let mut diss = 0.0;
    for k in 1..traj.len() {
        let dt = traj.times[k] - traj.times[k - 1];
        let (e_prev, e_next) = (&spectra[k - 1], &spectra[k]);
        let step: f64 = (0..cells)
            .map(|i| {
                let (x, y) = (e_prev[i], e_next[i]);
                let mean = if x > 0.0 && y > 0.0 && x != y {
                    (x - y) / (x / y).ln()
                } else {
                    0.5 * (x + y)
                };
                a[i] * mean
            })
            .sum::<f64>();
        diss += norm * dt * step;
        let e = energy(e_next);
        rows.push(EnergyRow { t: traj.times[k], energy: e, dissipation: diss, defect: e + diss - e0 });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::heat_evolve;

    fn small_cfg(points: usize) -> SimConfig {
        SimConfig { points, half_width: 6.0, steps: 8, horizon: 0.5, ..SimConfig::default() }
    }

    #[test]
    fn phi_functions_match_closed_forms() {
        for z in [1e-8, 1e-3, 0.05, 0.0999, 0.1, 0.5, 3.0, 40.0] {
            let p1 = -(-z as f64).exp_m1() / z;
            let p2 = (1.0 - (-z as f64).exp() * (1.0 + z)) / (z * z);
            assert!((phi1(z) - p1).abs() < 1e-9 * p1.max(1e-3), "{z}");
            if z > 1e-3 {
                assert!((phi2(z) - p2).abs() < 1e-8 * p2, "{z}");
            }
        }
        assert!((phi2(0.0) - 0.5).abs() < 1e-15);
        assert!((phi1(0.0999) - phi1(0.1)).abs() < 1e-4);
        assert!((phi2(0.0999) - phi2(0.1)).abs() < 1e-4);
    }

    #[test]
    fn datum_is_solenoidal_and_linear_in_amplitude() {
        for kind in [DatumKind::GaussianSolenoidal, DatumKind::TaylorGreenLocalized] {
            for n in [2, 3] {
                let mut cfg = small_cfg(16);
                cfg.n = n;
                cfg.datum.kind = kind;
                let u = make_datum(&cfg).unwrap();
                assert!(relative_divergence(&u).unwrap() < 1e-10);
                cfg.datum.amplitude = 0.1;
                let v = make_datum(&cfg).unwrap();
                assert!((v.l2_norm() - 2.0 * u.l2_norm()).abs() < 1e-12 * v.l2_norm());
                cfg.datum.amplitude = 0.0;
                assert_eq!(make_datum(&cfg).unwrap().max_abs(), 0.0);
            }
        }
    }

    #[test]
    fn file_datum_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_cfg(16);
        let u = make_datum(&cfg).unwrap();
        let path = dir.path().join("u0.nsra1");
        u.save(&path, 0.0).unwrap();
        let mut fcfg = cfg.clone();
        fcfg.datum = DatumConfig { kind: DatumKind::File, amplitude: 1.0, path: Some(path) };
        let v = make_datum(&fcfg).unwrap();
        assert!(v.sub(&u).unwrap().max_abs() < 1e-15);
        fcfg.points = 32;
        assert!(make_datum(&fcfg).is_err());
    }

    #[test]
    fn duhamel_of_constant_source_is_exact() {
        // G constant in s: D(t) = (1 - e^{-|xi|^2 t})/|xi|^2 G
        let g = CartesianField::from_fn(3, 16, 4.0, 3, |x, o| {
            o[0] = (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp();
            o[1] = 0.0;
            o[2] = 0.0;
        })
        .unwrap();
        let gs = SpectralField::forward(&g);
        let mut integ = DuhamelIntegrator::new(3, 16, 4.0);
        let times = [0.0, 0.1, 0.35, 1.0];
        let mut last = None;
        for &t in &times {
            last = Some(integ.push(t, gs.clone()).unwrap().clone());
        }
        let mut want = gs.clone();
        want.apply_scalar(|xi| {
            let a = norm_sq(xi);
            Complex64::new(if a == 0.0 { 1.0 } else { -(-a).exp_m1() / a }, 0.0)
        });
        let err = relative_l2(&want.to_cartesian(), &last.unwrap().to_cartesian()).unwrap();
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn zero_datum_gives_zero_after_one_iteration() {
        let mut cfg = small_cfg(16);
        cfg.datum.amplitude = 0.0;
        let traj = picard_solve(&cfg).unwrap();
        assert_eq!(traj.meta.iterations, 1);
        assert_eq!(traj.meta.status, SolveStatus::Converged);
        assert!(traj.snapshots.iter().all(|s| s.max_abs() == 0.0));
        assert_eq!(pressure_consistency(&traj).unwrap(), 0.0);
        assert!(energy_report(&traj).unwrap().iter().all(|r| r.energy == 0.0 && r.defect == 0.0));
    }

    #[test]
    fn first_iterate_is_the_heat_flow() {
        let mut cfg = small_cfg(16);
        cfg.picard_iters = 1;
        let u0 = make_datum(&cfg).unwrap();
        let heat = Trajectory::heat_flow(&u0, &cfg.times()).unwrap();
        // one sweep: u^1 = heat - D[heat]
        let traj = picard_solve(&cfg).unwrap();
        let mut integ = DuhamelIntegrator::new(3, 16, 6.0);
        for (k, t) in cfg.times().iter().enumerate() {
            let d = integ.push(*t, nonlinear_term(&heat.snapshots[k]).unwrap()).unwrap().to_cartesian();
            let want = heat.snapshots[k].sub(&d).unwrap();
            assert!(want.sub(&traj.snapshots[k]).unwrap().max_abs() == 0.0);
        }
        assert_eq!(heat.snapshots[3], heat_evolve(&u0, cfg.times()[3]).unwrap());
    }

    #[test]
    fn small_data_contracts_and_stays_solenoidal() {
        let traj = picard_solve(&small_cfg(16)).unwrap();
        assert_eq!(traj.meta.status, SolveStatus::Converged);
        assert!(traj.meta.contraction_ratios.iter().all(|r| *r < 0.5), "{:?}", traj.meta.contraction_ratios);
        for s in &traj.snapshots {
            assert!(relative_divergence(s).unwrap() < 1e-8);
        }
        assert!(pressure_consistency(&traj).unwrap() < 1e-8);
    }

    #[test]
    fn large_data_is_flagged() {
        let mut cfg = small_cfg(16);
        cfg.datum.amplitude = 400.0;
        cfg.picard_iters = 12;
        let traj = picard_solve(&cfg).unwrap();
        assert_ne!(traj.meta.status, SolveStatus::Converged);
    }

    #[test]
    fn heat_energy_balance() {
        let u0 = make_datum(&small_cfg(32)).unwrap();
        let times: Vec<f64> = (0..=16).map(|k| k as f64 / 16.0).collect();
        let traj = Trajectory::heat_flow(&u0, &times).unwrap();
        let rows = energy_report(&traj).unwrap();
        let e0 = rows[0].energy;
        assert!(rows.iter().all(|r| r.defect.abs() <= 1e-6 * e0), "{:?}", rows.last());
        assert!(rows.last().unwrap().energy < e0);
    }

    #[test]
    fn trajectory_dir_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let traj = picard_solve(&small_cfg(8)).unwrap();
        traj.write_dir(dir.path()).unwrap();
        let back = Trajectory::read_dir(dir.path()).unwrap();
        assert_eq!(back.times, traj.times);
        assert_eq!(back.snapshots, traj.snapshots);
        assert_eq!(back.meta, traj.meta);
    }

    #[test]
    fn rescaled_trajectory_times() {
        let traj = picard_solve(&small_cfg(8)).unwrap();
        let r = traj.rescaled(2.0).unwrap();
        assert_eq!(r.times[1], 4.0 * traj.times[1]);
        assert_eq!(r.snapshots[1].half_width(), 12.0);
        assert!((r.snapshots[1].max_abs() - 0.5 * traj.snapshots[1].max_abs()).abs() < 1e-16);
    }
}
