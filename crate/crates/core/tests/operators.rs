use std::f64::consts::PI;

use nsra_core::field::CartesianField;
use nsra_core::operators::{
    curl, divergence, gradient, heat_evolve, leray_project, oseen_apply, oseen_kernel_probe, poisson_pressure,
    relative_l2, riesz_pressure, scaling_identity_check, spectral_derivative, tensor_square,
};
use nsra_core::spectral::SpectralField;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn r2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn gaussian(points: usize, l: f64) -> CartesianField {
    CartesianField::scalar_fn(3, points, l, |x| (-r2(x)).exp()).unwrap()
}

fn vector(points: usize, l: f64) -> CartesianField {
    CartesianField::from_fn(3, points, l, 3, |x, o| {
        let g = (-r2(x) / 2.0).exp();
        o[0] = (x[1] + 0.3) * g;
        o[1] = -x[0] * x[2] * g;
        o[2] = (1.0 + x[0] * x[1]) * g;
    })
    .unwrap()
}

// Random trigonometric polynomial with modes |k_i| <= 3 on [-l, l)^3.
fn random_field(rng: &mut ChaCha8Rng, components: usize, points: usize, l: f64) -> CartesianField {
    let modes: Vec<(usize, [f64; 3], f64, f64)> = (0..12 * components)
        .map(|i| {
            let k = [0; 3].map(|_: i32| rng.gen_range(-3..=3) as f64);
            (i % components, k, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI))
        })
        .collect();
    CartesianField::from_fn(3, points, l, components, |x, o| {
        o.iter_mut().for_each(|v| *v = 0.0);
        for (c, k, a, ph) in &modes {
            o[*c] += a * (PI / l * (k[0] * x[0] + k[1] * x[1] + k[2] * x[2]) + ph).cos();
        }
    })
    .unwrap()
}

// Cyclic shift by `s` grid points along every axis.
fn roll(f: &CartesianField, s: usize) -> CartesianField {
    let np = f.points();
    let cells = f.cells();
    let mut out = f.values().to_vec();
    for c in 0..f.components() {
        for idx in 0..cells {
            let (i, j, k) = (idx % np, (idx / np) % np, idx / (np * np));
            let dst = (i + s) % np + ((j + s) % np) * np + ((k + s) % np) * np * np;
            out[c * cells + dst] = f.values()[c * cells + idx];
        }
    }
    f.with_values(f.components(), out).unwrap()
}

#[test]
fn heat_flow_of_gaussian() {
    let g = gaussian(64, 16.0);
    let u = heat_evolve(&g, 2.0).unwrap();
    let a: f64 = 9.0;
    let exact = a.powf(-1.5) * (PI * a / 2.0).powf(0.75);
    assert!((u.l2_norm() / 0.26997 - 1.0).abs() < 0.01);
    assert!((u.l2_norm() / exact - 1.0).abs() < 1e-7, "{} vs {exact}", u.l2_norm());
    let twice = heat_evolve(&heat_evolve(&g, 1.0).unwrap(), 2.0).unwrap();
    assert!(relative_l2(&heat_evolve(&g, 3.0).unwrap(), &twice).unwrap() < 1e-12);
    assert!(heat_evolve(&g, -1.0).is_err());
    assert_eq!(heat_evolve(&g, 0.0).unwrap().values(), g.values());
}

#[test]
fn derivative_argument_checks() {
    let g = gaussian(16, 4.0);
    assert!(spectral_derivative(&g, &[1, 0]).is_err());
    assert!(spectral_derivative(&g, &[3, 2, 0]).is_err());
    assert_eq!(spectral_derivative(&g, &[0, 0, 0]).unwrap().values(), g.values());
}

#[test]
fn leray_fixes_solenoidal_fields() {
    let u = curl(&vector(32, 6.0)).unwrap();
    let p = leray_project(&u).unwrap();
    assert!(relative_l2(&u, &p).unwrap() < 1e-12);
    let grad = gradient(&gaussian(32, 6.0)).unwrap();
    assert!(leray_project(&grad).unwrap().l2_norm() < 1e-12 * grad.l2_norm());
}

#[test]
fn pressure_is_translation_equivariant() {
    let u = vector(32, 6.0);
    for s in [1, 5] {
        let lhs = riesz_pressure(&roll(&u, s)).unwrap();
        let rhs = roll(&riesz_pressure(&u).unwrap(), s);
        assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-10);
    }
    let a = riesz_pressure(&u).unwrap();
    let b = poisson_pressure(&u).unwrap();
    assert!(relative_l2(&a, &b).unwrap() < 1e-10);
}

#[test]
fn oseen_of_zero_and_composition() {
    let z = CartesianField::zeros(3, 16, 4.0, 9).unwrap();
    assert_eq!(oseen_apply(&z, 1.0).unwrap().max_abs(), 0.0);
    let f = tensor_square(&vector(32, 6.0)).unwrap();
    for t in [0.1, 1.0] {
        let fused = oseen_apply(&f, t).unwrap();
        let composed = heat_evolve(&leray_project(&divergence(&f).unwrap()).unwrap(), t).unwrap();
        assert!(relative_l2(&composed, &fused).unwrap() <= 1e-12, "t = {t}");
    }
    assert!(oseen_apply(&f, 0.0).is_err());
}

#[test]
fn multipliers_commute() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let u = random_field(&mut rng, 3, 16, 4.0);
    let a = heat_evolve(&leray_project(&u).unwrap(), 0.3).unwrap();
    let b = leray_project(&heat_evolve(&u, 0.3).unwrap()).unwrap();
    assert!(relative_l2(&a, &b).unwrap() <= 1e-12);
    let a = spectral_derivative(&heat_evolve(&u, 0.3).unwrap(), &[1, 0, 2]).unwrap();
    let b = heat_evolve(&spectral_derivative(&u, &[1, 0, 2]).unwrap(), 0.3).unwrap();
    assert!(relative_l2(&a, &b).unwrap() <= 1e-12);
    let a = spectral_derivative(&spectral_derivative(&u, &[0, 1, 0]).unwrap(), &[1, 0, 0]).unwrap();
    let b = spectral_derivative(&u, &[1, 1, 0]).unwrap();
    assert!(relative_l2(&a, &b).unwrap() <= 1e-12);
}

#[test]
fn parseval() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (np, l) in [(16, 4.0), (32, 3.0)] {
        let f = random_field(&mut rng, 2, np, l);
        let s = SpectralField::forward(&f);
        let cells = f.cells() as f64;
        let spectral = (2.0 * l as f64).powi(3) / (cells * cells) * s.energy_sum();
        assert!((spectral / f.l2_norm_sq() - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn scaling_identities_on_random_fields() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let phi = random_field(&mut rng, 1, 32, 8.0);
    let u = random_field(&mut rng, 3, 32, 8.0);
    let tensor = tensor_square(&u).unwrap();
    let (h, o) = scaling_identity_check(&phi, &tensor, 4.0).unwrap();
    assert!(h <= 1e-6 && o <= 1e-6, "{h} {o}");
    let (h, o) = scaling_identity_check(&phi, &tensor, 1.0).unwrap();
    assert!(h == 0.0 && o == 0.0);
}

#[test]
fn kernel_is_odd_in_space() {
    let pts = [[1.5, 0.5, -1.0], [-1.5, -0.5, 1.0]];
    let probe = oseen_kernel_probe(0.5, 3, 32, 6.0, &pts).unwrap();
    let (a, b) = (&probe.samples[0], &probe.samples[1]);
    assert!((a.magnitude - b.magnitude).abs() <= 1e-12 * a.magnitude);
    for (x, y) in a.tensor.iter().zip(&b.tensor) {
        assert!((x + y).abs() <= 1e-12 * a.magnitude);
    }
    // symmetric in the last two slots
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                assert_eq!(a.tensor[(i * 3 + j) * 3 + k], a.tensor[(i * 3 + k) * 3 + j]);
            }
        }
    }
    assert!(probe.max_bound_ratio(3.0) <= 1.0 + 1e-12);
}
