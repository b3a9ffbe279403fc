use std::f64::consts::PI;

use anyhow::{bail, Context, Result};
use nsra_core::field::CartesianField;
use nsra_core::ns::{make_datum, DatumConfig, DatumKind, SimConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{FieldConfig, FieldKind, GridConfig};

fn r2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub fn build_field(cfg: &FieldConfig, grid: &GridConfig, seed: u64) -> Result<CartesianField> {
    let (n, np, l, amp) = (grid.n, grid.points, grid.half_width, cfg.amplitude);
    let datum = |kind| {
        let sim = SimConfig {
            n,
            points: np,
            half_width: l,
            datum: DatumConfig { kind, amplitude: amp, path: None },
            ..SimConfig::default()
        };
        make_datum(&sim).context("building datum")
    };
    Ok(match cfg.kind {
        FieldKind::Gaussian => CartesianField::scalar_fn(n, np, l, |x| amp * (-r2(x)).exp())?,
        FieldKind::GaussianSolenoidal => datum(DatumKind::GaussianSolenoidal)?,
        FieldKind::TaylorGreenLocalized => datum(DatumKind::TaylorGreenLocalized)?,
        FieldKind::Random => random_field(n, np, l, cfg.components, amp, seed)?,
        FieldKind::File => {
            let Some(path) = &cfg.path else { bail!("field kind FILE needs field.path") };
            let (f, _) = CartesianField::load(path).with_context(|| format!("loading {}", path.display()))?;
            f.scaled(amp)
        }
    })
}

/// Twelve random cosine modes per component with wavenumbers up to 3 under
/// `exp(-|x|^2 / 2)`.
fn random_field(n: usize, np: usize, l: f64, components: usize, amp: f64, seed: u64) -> Result<CartesianField> {
    if components == 0 {
        bail!("field.components must be positive");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<(usize, Vec<f64>, f64, f64)> = (0..12 * components)
        .map(|i| {
            let k = (0..n).map(|_| rng.gen_range(-3..=3) as f64).collect();
            (i % components, k, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI))
        })
        .collect();
    Ok(CartesianField::from_fn(n, np, l, components, |x, o| {
        o.iter_mut().for_each(|v| *v = 0.0);
        let env = amp * (-r2(x) / 2.0).exp();
        for (c, k, a, ph) in &modes {
            let phase: f64 = k.iter().zip(x).map(|(k, x)| k * x).sum();
            o[*c] += env * a * (phase + ph).cos();
        }
    })?)
}
