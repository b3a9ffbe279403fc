//! Command configurations and their layering: defaults, then a JSON file,
//! then command-line overrides. Unknown keys are rejected at every layer.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use nsra_core::decay::PolarSpec;
use nsra_core::index::{int, rat, serde_rational, EstimateIndices, Exponent, IndexTuple, Rational};
use nsra_core::ns::{DatumConfig, DatumKind};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

/// A rational written as `"a/b"`; plain numbers are accepted on input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rat(pub Rational);

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        serde_rational::serialize(&self.0, s)
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        serde_rational::deserialize(d).map(Rat)
    }
}

fn e(v: i128) -> Exponent {
    Exponent::int(v)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n: usize,
    pub points: usize,
    pub half_width: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { n: 3, points: 64, half_width: 12.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FieldKind {
    /// Scalar `amplitude * exp(-|x|^2)`.
    Gaussian,
    GaussianSolenoidal,
    TaylorGreenLocalized,
    /// Seeded random trigonometric polynomial under a Gaussian envelope.
    Random,
    /// NSRA1 snapshot at `path`.
    File,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldConfig {
    pub kind: FieldKind,
    pub amplitude: f64,
    /// Component count of a `RANDOM` field.
    pub components: usize,
    pub path: Option<PathBuf>,
}

impl FieldConfig {
    pub fn of(kind: FieldKind) -> Self {
        FieldConfig { kind, amplitude: 1.0, components: 1, path: None }
    }
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig::of(FieldKind::Gaussian)
    }
}

/// Source `(alpha, p, ptilde)`, target `(beta, q, qtilde)`, derivative order
/// and time exponents of an estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub alpha: Rat,
    pub p: Exponent,
    pub ptilde: Exponent,
    pub beta: Rat,
    pub q: Exponent,
    pub qtilde: Exponent,
    #[serde(default)]
    pub eta: u32,
    #[serde(default = "inf")]
    pub r: Exponent,
    #[serde(default)]
    pub s: Option<Exponent>,
}

fn inf() -> Exponent {
    Exponent::INF
}

impl EstimateConfig {
    pub fn decay(alpha: Rational, p: i128, ptilde: i128, beta: Rational, q: i128, qtilde: i128) -> Self {
        EstimateConfig {
            alpha: Rat(alpha),
            p: e(p),
            ptilde: e(ptilde),
            beta: Rat(beta),
            q: e(q),
            qtilde: e(qtilde),
            eta: 0,
            r: Exponent::INF,
            s: None,
        }
    }

    pub fn indices(&self, n: usize) -> EstimateIndices {
        let mut ix = EstimateIndices::decay(
            n as u32,
            (self.alpha.0, self.p, self.ptilde),
            (self.beta.0, self.q, self.qtilde),
            self.eta,
        )
        .with_r(self.r);
        ix.s = self.s;
        ix
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Global,
    Local,
    Yz,
    All,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IndicesConfig {
    pub n: u32,
    pub alpha: Rat,
    /// Derived from the scaling relation when absent.
    pub s: Option<Exponent>,
    pub p: Exponent,
    pub ptilde: Exponent,
    pub criterion: Criterion,
}

impl Default for IndicesConfig {
    fn default() -> Self {
        IndicesConfig {
            n: 3,
            alpha: Rat(int(0)),
            s: None,
            p: Exponent::INF,
            ptilde: Exponent::INF,
            criterion: Criterion::All,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormsConfig {
    pub grid: GridConfig,
    pub field: FieldConfig,
    pub alpha: Rat,
    pub p: Exponent,
    pub ptilde: Exponent,
    /// Time exponent for a trajectory norm.
    pub s: Option<Exponent>,
    /// Trajectory directory; replaces `field` when set.
    pub trajectory: Option<PathBuf>,
    pub polar: PolarSpec,
}

impl Default for NormsConfig {
    fn default() -> Self {
        NormsConfig {
            grid: GridConfig::default(),
            field: FieldConfig::default(),
            alpha: Rat(int(0)),
            p: e(2),
            ptilde: e(2),
            s: None,
            trajectory: None,
            polar: PolarSpec::default(),
        }
    }
}

fn default_times() -> Vec<f64> {
    (0..=8).map(|k| 0.25 * 2f64.powf(k as f64 / 2.0)).collect()
}

/// Shared by `heat-decay` and `oseen-decay`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayConfig {
    pub grid: GridConfig,
    pub field: FieldConfig,
    pub indices: EstimateConfig,
    pub times: Vec<f64>,
    pub fit_window: Option<[f64; 2]>,
    #[serde(default)]
    pub polar: PolarSpec,
}

impl DecayConfig {
    pub fn heat() -> Self {
        DecayConfig {
            grid: GridConfig::default(),
            field: FieldConfig::of(FieldKind::Gaussian),
            indices: EstimateConfig::decay(int(0), 2, 2, int(0), 6, 6),
            times: default_times(),
            fit_window: Some([1.0, 4.0]),
            polar: PolarSpec::default(),
        }
    }

    pub fn oseen() -> Self {
        DecayConfig {
            field: FieldConfig::of(FieldKind::GaussianSolenoidal),
            indices: EstimateConfig::decay(int(0), 2, 2, int(0), 2, 2),
            ..DecayConfig::heat()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalizedConfig {
    pub grid: GridConfig,
    pub field: FieldConfig,
    pub indices: EstimateConfig,
    pub radius: f64,
    pub times: Vec<f64>,
    pub fit_window: Option<[f64; 2]>,
    #[serde(default)]
    pub polar: PolarSpec,
}

impl Default for LocalizedConfig {
    fn default() -> Self {
        LocalizedConfig {
            grid: GridConfig::default(),
            field: FieldConfig::of(FieldKind::Gaussian),
            indices: EstimateConfig::decay(int(0), 2, 2, int(0), 6, 12),
            radius: 8.0,
            times: default_times(),
            fit_window: Some([1.0, 4.0]),
            polar: PolarSpec::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegralConfig {
    pub grid: GridConfig,
    pub field: FieldConfig,
    pub indices: EstimateConfig,
    pub horizon: f64,
    pub window_samples: usize,
    pub dilations: Vec<f64>,
    #[serde(default)]
    pub polar: PolarSpec,
}

impl Default for IntegralConfig {
    fn default() -> Self {
        let mut indices = EstimateConfig::decay(int(0), 2, 2, int(0), 4, 4);
        indices.r = Exponent::frac(8, 3);
        IntegralConfig {
            grid: GridConfig::default(),
            field: FieldConfig::of(FieldKind::Gaussian),
            indices,
            horizon: 1.0,
            window_samples: 33,
            dilations: vec![1.0, 2.0, 4.0],
            polar: PolarSpec::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DuhamelConfig {
    pub grid: GridConfig,
    pub field: FieldConfig,
    pub indices: EstimateConfig,
    pub horizon: f64,
    pub steps: usize,
    pub dilations: Vec<f64>,
    /// Trajectory directory; replaces the heat flows of `field` when set.
    pub trajectory: Option<PathBuf>,
    #[serde(default)]
    pub polar: PolarSpec,
}

impl Default for DuhamelConfig {
    fn default() -> Self {
        let mut indices = EstimateConfig::decay(int(0), 5, 5, int(0), 5, 5);
        indices.r = e(5);
        indices.s = Some(e(5));
        DuhamelConfig {
            grid: GridConfig::default(),
            field: FieldConfig::of(FieldKind::GaussianSolenoidal),
            indices,
            horizon: 1.0,
            steps: 32,
            dilations: vec![1.0, 2.0, 4.0],
            trajectory: None,
            polar: PolarSpec::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub grid: GridConfig,
    pub horizon: f64,
    pub steps: usize,
    pub picard_iters: usize,
    pub contraction_tol: f64,
    pub datum: DatumConfig,
    /// Criterion tuples evaluated on the solution.
    pub monitor: Vec<IndexTuple>,
    pub write_snapshots: bool,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        let sim = nsra_core::ns::SimConfig::default();
        SimulateConfig {
            grid: GridConfig::default(),
            horizon: sim.horizon,
            steps: sim.steps,
            picard_iters: sim.picard_iters,
            contraction_tol: sim.contraction_tol,
            datum: DatumConfig { kind: DatumKind::GaussianSolenoidal, amplitude: sim.datum.amplitude, path: None },
            monitor: vec![
                IndexTuple::new(3, rat(-2, 3), e(3), e(3), Exponent::INF).expect("valid tuple"),
                IndexTuple::new(3, int(0), e(8), e(4), e(4)).expect("valid tuple"),
            ],
            write_snapshots: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CknConfig {
    pub grid: GridConfig,
    pub field: FieldConfig,
    pub t_bar: f64,
    pub radii: Vec<f64>,
    /// Time samples per cylinder window.
    pub per_window: usize,
    pub trajectory: Option<PathBuf>,
    #[serde(default)]
    pub polar: PolarSpec,
}

impl Default for CknConfig {
    fn default() -> Self {
        CknConfig {
            grid: GridConfig::default(),
            field: FieldConfig::of(FieldKind::GaussianSolenoidal),
            t_bar: 1.0,
            radii: vec![1.0, 0.5, 0.25, 0.125],
            per_window: 9,
            trajectory: None,
            polar: PolarSpec::default(),
        }
    }
}

/// A command-line override: JSON path and value.
pub type Override = (Vec<&'static str>, Value);

/// Interprets a flag value: JSON literals stay typed, comma lists become
/// arrays, anything else (`-2/3`, `inf`, paths) is a string.
pub fn flag_value(raw: &str) -> Value {
    if let Ok(v) = serde_json::from_str::<Value>(raw) {
        return v;
    }
    if raw.contains(',') {
        return Value::Array(raw.split(',').map(|s| flag_value(s.trim())).collect());
    }
    Value::String(raw.to_string())
}

fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn set_path(root: &mut Value, path: &[&str], value: Value) {
    let mut cur = root;
    for (i, key) in path.iter().enumerate() {
        if !cur.is_object() {
            *cur = Value::Object(Map::new());
        }
        let obj = cur.as_object_mut().expect("object");
        if i + 1 == path.len() {
            obj.insert((*key).to_string(), value);
            return;
        }
        cur = obj.entry((*key).to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
}

/// Default config, overlaid by the JSON file, overlaid by the flags.
pub fn resolve<T: Serialize + DeserializeOwned>(default: T, file: Option<&Path>, overrides: Vec<Override>) -> Result<T> {
    let mut value = serde_json::to_value(&default)?;
    if let Some(path) = file {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let patch: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        if !patch.is_object() {
            anyhow::bail!("config {} must hold a JSON object", path.display());
        }
        merge(&mut value, patch);
    }
    for (path, v) in overrides {
        set_path(&mut value, &path, v);
    }
    serde_json::from_value(value).context("invalid configuration")
}

/// First 16 hex digits of the SHA-256 of the canonical (key-sorted) JSON of
/// the command, seed and resolved config.
pub fn config_hash(command: &str, seed: u64, config: &Value) -> Result<String> {
    let canonical = serde_json::json!({ "command": command, "seed": seed, "config": config });
    let digest = Sha256::digest(serde_json::to_string(&canonical)?.as_bytes());
    Ok(hex::encode(digest)[..16].to_string())
}
