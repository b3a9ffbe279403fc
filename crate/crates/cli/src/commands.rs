use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::{anyhow, bail, Context, Result};
use nsra_core::decay::{
    ckn_comparison, ckn_time_grid, duhamel_dilation_report, duhamel_estimate_report, heat_decay_report,
    integral_estimate_report, localized_decay_report, oseen_decay_report, DecayOptions, DecayReport, Verdict,
};
use nsra_core::index::{
    check_global_criterion, check_local_criterion, check_scaling, check_yz_criterion, IndexTuple,
};
use nsra_core::norms::{angular_norm, cartesian_lp, mixed_norm, rational_to_f64, time_mixed_norm};
use nsra_core::ns::{
    energy_report, monitor_criterion, picard_solve, pressure_consistency, relative_divergence, SimConfig, Trajectory,
};
use nsra_core::operators::tensor_square;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{
    CknConfig, Criterion, DecayConfig, DuhamelConfig, IndicesConfig, IntegralConfig, LocalizedConfig, NormsConfig,
    SimulateConfig,
};
use crate::fields::build_field;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    /// Nothing to pass or fail.
    Done,
    Pass,
    Fail,
}

impl From<Verdict> for Status {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Pass => Status::Pass,
            Verdict::Fail => Status::Fail,
        }
    }
}

pub struct Outcome {
    pub status: Status,
    pub result: Value,
    pub csv: Option<String>,
    /// Trajectory to store next to the JSON artifact.
    pub trajectory: Option<Trajectory>,
}

impl Outcome {
    fn new(status: Status, result: Value, csv: Option<String>) -> Self {
        Outcome { status, result, csv, trajectory: None }
    }
}

fn decay_outcome(report: DecayReport) -> Result<Outcome> {
    let csv = report.to_csv();
    Ok(Outcome::new(report.verdict.into(), serde_json::to_value(&report)?, Some(csv)))
}

fn options(polar: nsra_core::decay::PolarSpec, fit_window: Option<[f64; 2]>) -> DecayOptions {
    DecayOptions { polar, fit_window, ..DecayOptions::default() }
}

pub fn indices(cfg: &IndicesConfig) -> Result<Outcome> {
    let s = match cfg.s {
        Some(s) => s,
        None => IndexTuple::scaling_time_exponent(cfg.n, cfg.alpha.0, cfg.p)
            .ok_or_else(|| anyhow!("no time exponent s satisfies the scaling relation for these indices"))?,
    };
    let t = IndexTuple::new(cfg.n, cfg.alpha.0, s, cfg.p, cfg.ptilde)?;
    let mut results = BTreeMap::new();
    let want = |c: Criterion| cfg.criterion == c || cfg.criterion == Criterion::All;
    if want(Criterion::Global) {
        results.insert("global", check_global_criterion(&t));
    }
    if want(Criterion::Local) {
        results.insert("local", check_local_criterion(&t));
    }
    if want(Criterion::Yz) {
        results.insert("yz", check_yz_criterion(&t));
    }
    // with several criteria the tuple is admissible when any of them admits it
    let admissible = results.values().any(|a| a.admissible);
    let result = json!({
        "tuple": t,
        "scaling": check_scaling(&t),
        "admissible": admissible,
        "criteria": results,
    });
    Ok(Outcome::new(Status::Done, result, None))
}

pub fn norms(cfg: &NormsConfig, seed: u64) -> Result<Outcome> {
    if let Some(dir) = &cfg.trajectory {
        let s = cfg.s.ok_or_else(|| anyhow!("a trajectory norm needs the time exponent s"))?;
        let traj = Trajectory::read_dir(dir).with_context(|| format!("reading trajectory {}", dir.display()))?;
        let grid = cfg.polar.grid_for(&traj.snapshots[0])?;
        let series = traj
            .snapshots
            .par_iter()
            .zip(&traj.times)
            .map(|(f, t)| Ok((*t, cfg.polar.resample(f, &grid)?)))
            .collect::<Result<Vec<_>>>()?;
        let norm = time_mixed_norm(&series, cfg.alpha.0, s, cfg.p, cfg.ptilde)?;
        let mut csv = String::from("t,norm\n");
        for (t, pf) in &series {
            let v = mixed_norm(pf, cfg.alpha.0, cfg.p, cfg.ptilde)?;
            let _ = writeln!(csv, "{},{}", t, v.value);
        }
        let result = json!({
            "value": norm.value,
            "quadrature_error_estimate": norm.quadrature_error_estimate,
            "snapshots": traj.len(),
        });
        return Ok(Outcome::new(Status::Done, result, Some(csv)));
    }
    let f = build_field(&cfg.field, &cfg.grid, seed)?;
    let grid = cfg.polar.grid_for(&f)?;
    let pf = cfg.polar.resample(&f, &grid)?;
    let norm = mixed_norm(&pf, cfg.alpha.0, cfg.p, cfg.ptilde)?;
    let mut csv = String::from("r,angular_norm\n");
    for (k, r) in grid.radii().iter().enumerate() {
        let _ = writeln!(csv, "{},{}", r, angular_norm(&pf, cfg.ptilde, k));
    }
    let cartesian = (rational_to_f64(&cfg.alpha.0) == 0.0 && cfg.p == cfg.ptilde).then(|| cartesian_lp(&f, cfg.p));
    let result = json!({
        "value": norm.value,
        "quadrature_error_estimate": norm.quadrature_error_estimate,
        "cartesian_lp": cartesian,
    });
    Ok(Outcome::new(Status::Done, result, Some(csv)))
}

pub fn heat_decay(cfg: &DecayConfig, seed: u64) -> Result<Outcome> {
    let u0 = build_field(&cfg.field, &cfg.grid, seed)?;
    let e = cfg.indices.indices(cfg.grid.n);
    decay_outcome(heat_decay_report(&u0, &e, &cfg.times, &options(cfg.polar, cfg.fit_window))?)
}

/// Oseen decay of `F = u (x) u`.
pub fn oseen_decay(cfg: &DecayConfig, seed: u64) -> Result<Outcome> {
    let u = build_field(&cfg.field, &cfg.grid, seed)?;
    if u.components() != cfg.grid.n {
        bail!("oseen-decay needs a vector field with {} components, got {}", cfg.grid.n, u.components());
    }
    let f = tensor_square(&u)?;
    let e = cfg.indices.indices(cfg.grid.n);
    decay_outcome(oseen_decay_report(&f, &e, &cfg.times, &options(cfg.polar, cfg.fit_window))?)
}

pub fn localized_decay(cfg: &LocalizedConfig, seed: u64) -> Result<Outcome> {
    let u0 = build_field(&cfg.field, &cfg.grid, seed)?;
    let e = cfg.indices.indices(cfg.grid.n);
    let opts = options(cfg.polar, cfg.fit_window);
    decay_outcome(localized_decay_report(&u0, &e, cfg.radius, &cfg.times, &opts)?)
}

pub fn integral(cfg: &IntegralConfig, seed: u64) -> Result<Outcome> {
    let u0 = build_field(&cfg.field, &cfg.grid, seed)?;
    let e = cfg.indices.indices(cfg.grid.n);
    let opts = DecayOptions {
        window_samples: cfg.window_samples,
        dilations: cfg.dilations.clone(),
        ..options(cfg.polar, None)
    };
    decay_outcome(integral_estimate_report(&u0, &e, cfg.horizon, &opts)?)
}

pub fn duhamel(cfg: &DuhamelConfig, seed: u64) -> Result<Outcome> {
    let e = cfg.indices.indices(cfg.grid.n);
    let opts = DecayOptions { dilations: cfg.dilations.clone(), ..options(cfg.polar, None) };
    let report = match &cfg.trajectory {
        Some(dir) => {
            let traj = Trajectory::read_dir(dir).with_context(|| format!("reading trajectory {}", dir.display()))?;
            duhamel_estimate_report(&traj, &e, &opts)?
        }
        None => {
            let u0 = build_field(&cfg.field, &cfg.grid, seed)?;
            duhamel_dilation_report(&u0, &e, cfg.horizon, cfg.steps, &opts)?
        }
    };
    decay_outcome(report)
}

pub fn simulate(cfg: &SimulateConfig, hash: &str) -> Result<Outcome> {
    let sim = SimConfig {
        n: cfg.grid.n,
        points: cfg.grid.points,
        half_width: cfg.grid.half_width,
        horizon: cfg.horizon,
        steps: cfg.steps,
        picard_iters: cfg.picard_iters,
        contraction_tol: cfg.contraction_tol,
        datum: cfg.datum.clone(),
    };
    let mut traj = picard_solve(&sim)?;
    traj.meta.config_hash = Some(hash.to_string());
    let energy = energy_report(&traj)?;
    let mut csv = String::from("t,energy,dissipation,defect\n");
    for r in &energy {
        let _ = writeln!(csv, "{},{},{},{}", r.t, r.energy, r.dissipation, r.defect);
    }
    let monitors = cfg.monitor.iter().map(|t| monitor_criterion(&traj, t)).collect::<Result<Vec<_>, _>>()?;
    let divergence = traj.snapshots.iter().map(relative_divergence).collect::<Result<Vec<_>, _>>()?;
    let result = json!({
        "meta": traj.meta,
        "times": traj.times,
        "final_l2": traj.last().l2_norm(),
        "max_relative_divergence": divergence.into_iter().fold(0.0, f64::max),
        "pressure_consistency": pressure_consistency(&traj)?,
        "monitors": cfg.monitor.iter().zip(&monitors).map(|(t, m)| json!({"tuple": t, "result": m})).collect::<Vec<_>>(),
        "energy": energy,
    });
    let mut out = Outcome::new(Status::Done, result, Some(csv));
    if cfg.write_snapshots {
        out.trajectory = Some(traj);
    }
    Ok(out)
}

pub fn ckn(cfg: &CknConfig, seed: u64) -> Result<Outcome> {
    let traj = match &cfg.trajectory {
        Some(dir) => Trajectory::read_dir(dir).with_context(|| format!("reading trajectory {}", dir.display()))?,
        None => {
            let u0 = build_field(&cfg.field, &cfg.grid, seed)?;
            Trajectory::heat_flow(&u0, &ckn_time_grid(cfg.t_bar, &cfg.radii, cfg.per_window))?
        }
    };
    let report = ckn_comparison(&traj, cfg.t_bar, &cfg.radii, &cfg.polar)?;
    let csv = report.to_csv();
    Ok(Outcome::new(report.verdict.into(), serde_json::to_value(&report)?, Some(csv)))
}
