//! `nsra`: regularity-criterion indices, weighted norms, decay estimates and
//! mild Navier-Stokes solutions from the command line.
//!
//! Every command resolves its configuration from built-in defaults, an
//! optional `--config` JSON file and per-field flags, then writes
//! `<command>-<hash>.json` (and a CSV table where one exists) under `--out`.
//! Exit status: 0 on success, 2 when an estimate fails, 1 on errors.

mod commands;
mod config;
mod fields;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde::de::DeserializeOwned;
use serde_json::json;

use commands::{Outcome, Status};
use config::{flag_value, resolve, Override};

#[derive(Parser)]
#[command(name = "nsra", version, about = "Weighted mixed-norm regularity toolkit for Navier-Stokes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration overlaid on the command defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct GridArgs {
    /// Spatial dimension.
    #[arg(long)]
    dims: Option<String>,
    /// Points per axis.
    #[arg(long)]
    grid: Option<String>,
    /// Box half width L.
    #[arg(long = "box")]
    half_width: Option<String>,
}

#[derive(Args)]
struct FieldArgs {
    /// GAUSSIAN, GAUSSIAN_SOLENOIDAL, TAYLOR_GREEN_LOCALIZED, RANDOM or FILE.
    #[arg(long)]
    field: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    amplitude: Option<String>,
    #[arg(long)]
    components: Option<String>,
    /// NSRA1 snapshot for a FILE field.
    #[arg(long)]
    file: Option<String>,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    ptilde: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    qtilde: Option<String>,
    /// Derivative order.
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    r: Option<String>,
    #[arg(long)]
    s: Option<String>,
}

#[derive(Args)]
struct PolarArgs {
    /// Radial shells of the polar grid.
    #[arg(long)]
    shells: Option<String>,
    /// Angular quadrature order.
    #[arg(long)]
    angular_order: Option<String>,
}

#[derive(Args)]
struct TimesArgs {
    /// Comma separated sample times.
    #[arg(long)]
    times: Option<String>,
    /// Fit window `t0,t1`.
    #[arg(long)]
    fit_window: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Check an index tuple against the regularity criteria.
    Indices {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<String>,
        #[arg(long)]
        s: Option<String>,
        #[arg(long)]
        p: Option<String>,
        #[arg(long)]
        ptilde: Option<String>,
        /// global, local, yz or all.
        #[arg(long)]
        criterion: Option<String>,
    },
    /// Weighted mixed norm of a field or a trajectory.
    Norms {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        polar: PolarArgs,
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<String>,
        #[arg(long)]
        p: Option<String>,
        #[arg(long)]
        ptilde: Option<String>,
        #[arg(long)]
        s: Option<String>,
        #[arg(long)]
        trajectory: Option<String>,
    },
    /// Decay of the heat flow of a datum.
    HeatDecay {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        polar: PolarArgs,
        #[command(flatten)]
        indices: EstimateArgs,
        #[command(flatten)]
        times: TimesArgs,
    },
    /// Decay of the Oseen operator applied to `u (x) u`.
    OseenDecay {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        polar: PolarArgs,
        #[command(flatten)]
        indices: EstimateArgs,
        #[command(flatten)]
        times: TimesArgs,
    },
    /// Heat decay restricted to a parabolic region.
    LocalizedDecay {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        polar: PolarArgs,
        #[command(flatten)]
        indices: EstimateArgs,
        #[command(flatten)]
        times: TimesArgs,
        #[arg(long)]
        radius: Option<String>,
    },
    /// Time-integrated heat estimate.
    Integral {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        polar: PolarArgs,
        #[command(flatten)]
        indices: EstimateArgs,
        #[arg(long)]
        horizon: Option<String>,
        #[arg(long)]
        window_samples: Option<String>,
        #[arg(long)]
        dilations: Option<String>,
    },
    /// Duhamel estimate on heat flows or a stored trajectory.
    Duhamel {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        polar: PolarArgs,
        #[command(flatten)]
        indices: EstimateArgs,
        #[arg(long)]
        horizon: Option<String>,
        #[arg(long)]
        steps: Option<String>,
        #[arg(long)]
        dilations: Option<String>,
        #[arg(long)]
        trajectory: Option<String>,
    },
    /// Mild solution by Picard iteration.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        horizon: Option<String>,
        #[arg(long)]
        steps: Option<String>,
        #[arg(long)]
        picard_iters: Option<String>,
        #[arg(long)]
        contraction_tol: Option<String>,
        /// GAUSSIAN_SOLENOIDAL, TAYLOR_GREEN_LOCALIZED or FILE.
        #[arg(long)]
        datum: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        amplitude: Option<String>,
        #[arg(long)]
        file: Option<String>,
        #[arg(long)]
        write_snapshots: Option<String>,
    },
    /// Compare the two cylinder quantities on shrinking parabolic cylinders.
    Ckn {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        polar: PolarArgs,
        #[arg(long)]
        t_bar: Option<String>,
        #[arg(long)]
        radii: Option<String>,
        #[arg(long)]
        per_window: Option<String>,
        #[arg(long)]
        trajectory: Option<String>,
    },
}

/// Collects flag overrides; plain strings are kept verbatim for paths.
#[derive(Default)]
struct Overrides(Vec<Override>);

impl Overrides {
    fn set(&mut self, path: Vec<&'static str>, raw: &Option<String>) {
        if let Some(raw) = raw {
            self.0.push((path, flag_value(raw)));
        }
    }

    fn set_list(&mut self, path: Vec<&'static str>, raw: &Option<String>) {
        if let Some(raw) = raw {
            let v = match flag_value(raw) {
                serde_json::Value::Array(a) => serde_json::Value::Array(a),
                other => serde_json::Value::Array(vec![other]),
            };
            self.0.push((path, v));
        }
    }

    fn set_str(&mut self, path: Vec<&'static str>, raw: &Option<String>) {
        if let Some(raw) = raw {
            self.0.push((path, serde_json::Value::String(raw.clone())));
        }
    }

    fn set_kind(&mut self, path: Vec<&'static str>, raw: &Option<String>) {
        if let Some(raw) = raw {
            self.0.push((path, serde_json::Value::String(raw.to_uppercase().replace('-', "_"))));
        }
    }

    fn grid(&mut self, g: &GridArgs) {
        self.set(vec!["grid", "n"], &g.dims);
        self.set(vec!["grid", "points"], &g.grid);
        self.set(vec!["grid", "half_width"], &g.half_width);
    }

    fn field(&mut self, f: &FieldArgs) {
        self.set_kind(vec!["field", "kind"], &f.field);
        self.set(vec!["field", "amplitude"], &f.amplitude);
        self.set(vec!["field", "components"], &f.components);
        self.set_str(vec!["field", "path"], &f.file);
    }

    fn polar(&mut self, p: &PolarArgs) {
        self.set(vec!["polar", "shells"], &p.shells);
        self.set(vec!["polar", "angular_order"], &p.angular_order);
    }

    fn estimate(&mut self, e: &EstimateArgs) {
        self.set(vec!["indices", "alpha"], &e.alpha);
        self.set(vec!["indices", "p"], &e.p);
        self.set(vec!["indices", "ptilde"], &e.ptilde);
        self.set(vec!["indices", "beta"], &e.beta);
        self.set(vec!["indices", "q"], &e.q);
        self.set(vec!["indices", "qtilde"], &e.qtilde);
        self.set(vec!["indices", "eta"], &e.eta);
        self.set(vec!["indices", "r"], &e.r);
        self.set(vec!["indices", "s"], &e.s);
    }

    fn times(&mut self, t: &TimesArgs) {
        self.set_list(vec!["times"], &t.times);
        self.set_list(vec!["fit_window"], &t.fit_window);
    }
}

struct Run<'a> {
    name: &'static str,
    common: &'a Common,
}

impl Run<'_> {
    fn resolve<T: Serialize + DeserializeOwned>(&self, default: T, ov: Overrides) -> Result<(T, serde_json::Value, String)> {
        let cfg = resolve(default, self.common.config.as_deref(), ov.0)?;
        let value = serde_json::to_value(&cfg)?;
        let hash = config::config_hash(self.name, self.common.seed, &value)?;
        Ok((cfg, value, hash))
    }

    fn write(&self, config: serde_json::Value, hash: &str, outcome: Outcome) -> Result<Status> {
        let out = &self.common.out;
        std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        let stem = format!("{}-{}", self.name, hash);
        let mut written = Vec::new();
        if let Some(traj) = &outcome.trajectory {
            let dir = out.join(&stem);
            traj.write_dir(&dir)?;
            written.push(dir);
        }
        if let Some(csv) = &outcome.csv {
            let path = out.join(format!("{stem}.csv"));
            write_file(&path, csv.as_bytes())?;
            written.push(path);
        }
        let doc = json!({
            "command": self.name,
            "config_hash": hash,
            "seed": self.common.seed,
            "config": config,
            "status": outcome.status,
            "result": outcome.result,
        });
        let path = out.join(format!("{stem}.json"));
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        write_file(&path, text.as_bytes())?;
        written.push(path);
        for p in written {
            println!("{}", p.display());
        }
        println!("{} {:?}", self.name, outcome.status);
        Ok(outcome.status)
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn execute<T, F>(name: &'static str, common: &Common, default: T, ov: Overrides, body: F) -> Result<Status>
where
    T: Serialize + DeserializeOwned,
    F: FnOnce(&T, &str) -> Result<Outcome>,
{
    if let Some(jobs) = common.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    let run = Run { name, common };
    let (cfg, value, hash) = run.resolve(default, ov)?;
    let outcome = body(&cfg, &hash)?;
    run.write(value, &hash, outcome)
}

fn dispatch(cli: Cli) -> Result<Status> {
    let mut ov = Overrides::default();
    match &cli.command {
        Command::Indices { common, n, alpha, s, p, ptilde, criterion } => {
            ov.set(vec!["n"], n);
            ov.set(vec!["alpha"], alpha);
            ov.set(vec!["s"], s);
            ov.set(vec!["p"], p);
            ov.set(vec!["ptilde"], ptilde);
            if let Some(c) = criterion {
                ov.0.push((vec!["criterion"], serde_json::Value::String(c.to_lowercase())));
            }
            execute("indices", common, config::IndicesConfig::default(), ov, |c, _| commands::indices(c))
        }
        Command::Norms { common, grid, field, polar, alpha, p, ptilde, s, trajectory } => {
            ov.grid(grid);
            ov.field(field);
            ov.polar(polar);
            ov.set(vec!["alpha"], alpha);
            ov.set(vec!["p"], p);
            ov.set(vec!["ptilde"], ptilde);
            ov.set(vec!["s"], s);
            ov.set_str(vec!["trajectory"], trajectory);
            execute("norms", common, config::NormsConfig::default(), ov, |c, _| commands::norms(c, common.seed))
        }
        Command::HeatDecay { common, grid, field, polar, indices, times } => {
            ov.grid(grid);
            ov.field(field);
            ov.polar(polar);
            ov.estimate(indices);
            ov.times(times);
            execute("heat-decay", common, config::DecayConfig::heat(), ov, |c, _| commands::heat_decay(c, common.seed))
        }
        Command::OseenDecay { common, grid, field, polar, indices, times } => {
            ov.grid(grid);
            ov.field(field);
            ov.polar(polar);
            ov.estimate(indices);
            ov.times(times);
            execute("oseen-decay", common, config::DecayConfig::oseen(), ov, |c, _| {
                commands::oseen_decay(c, common.seed)
            })
        }
        Command::LocalizedDecay { common, grid, field, polar, indices, times, radius } => {
            ov.grid(grid);
            ov.field(field);
            ov.polar(polar);
            ov.estimate(indices);
            ov.times(times);
            ov.set(vec!["radius"], radius);
            execute("localized-decay", common, config::LocalizedConfig::default(), ov, |c, _| {
                commands::localized_decay(c, common.seed)
            })
        }
        Command::Integral { common, grid, field, polar, indices, horizon, window_samples, dilations } => {
            ov.grid(grid);
            ov.field(field);
            ov.polar(polar);
            ov.estimate(indices);
            ov.set(vec!["horizon"], horizon);
            ov.set(vec!["window_samples"], window_samples);
            ov.set_list(vec!["dilations"], dilations);
            execute("integral", common, config::IntegralConfig::default(), ov, |c, _| commands::integral(c, common.seed))
        }
        Command::Duhamel { common, grid, field, polar, indices, horizon, steps, dilations, trajectory } => {
            ov.grid(grid);
            ov.field(field);
            ov.polar(polar);
            ov.estimate(indices);
            ov.set(vec!["horizon"], horizon);
            ov.set(vec!["steps"], steps);
            ov.set_list(vec!["dilations"], dilations);
            ov.set_str(vec!["trajectory"], trajectory);
            execute("duhamel", common, config::DuhamelConfig::default(), ov, |c, _| commands::duhamel(c, common.seed))
        }
        Command::Simulate {
            common,
            grid,
            horizon,
            steps,
            picard_iters,
            contraction_tol,
            datum,
            amplitude,
            file,
            write_snapshots,
        } => {
            ov.grid(grid);
            ov.set(vec!["horizon"], horizon);
            ov.set(vec!["steps"], steps);
            ov.set(vec!["picard_iters"], picard_iters);
            ov.set(vec!["contraction_tol"], contraction_tol);
            ov.set_kind(vec!["datum", "kind"], datum);
            ov.set(vec!["datum", "amplitude"], amplitude);
            ov.set_str(vec!["datum", "path"], file);
            ov.set(vec!["write_snapshots"], write_snapshots);
            execute("simulate", common, config::SimulateConfig::default(), ov, commands::simulate)
        }
        Command::Ckn { common, grid, field, polar, t_bar, radii, per_window, trajectory } => {
            ov.grid(grid);
            ov.field(field);
            ov.polar(polar);
            ov.set(vec!["t_bar"], t_bar);
            ov.set_list(vec!["radii"], radii);
            ov.set(vec!["per_window"], per_window);
            ov.set_str(vec!["trajectory"], trajectory);
            execute("ckn", common, config::CknConfig::default(), ov, |c, _| commands::ckn(c, common.seed))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(Status::Fail) => ExitCode::from(2),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
