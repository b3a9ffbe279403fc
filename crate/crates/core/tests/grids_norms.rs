use std::f64::consts::PI;
use std::sync::Arc;

use nsra_core::field::CartesianField;
use nsra_core::index::{int, rat, Exponent};
use nsra_core::norms::{angular_norm, ball_integral, cartesian_lp, dilate, mixed_norm, time_mixed_norm};
use nsra_core::ns::Trajectory;
use nsra_core::polar::{Normalization, PolarField, PolarGrid, PolarGridSpec};
use nsra_core::resample::{resample, resample_with, Interpolation, DEFAULT_MARGIN};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn e(v: i128) -> Exponent {
    Exponent::int(v)
}

fn grid(dims: usize, r_min: f64, r_max: f64, norm: Normalization) -> Arc<PolarGrid> {
    Arc::new(PolarGrid::build(PolarGridSpec::new(dims, r_min, r_max).with_normalization(norm)).unwrap())
}

fn r2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

#[test]
fn probability_weights_sum_to_one() {
    for dims in [2, 3] {
        let g = grid(dims, 0.05, 3.0, Normalization::Probability);
        let total: f64 = g.angular_weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-12, "n = {dims}: {total}");
        assert!(g.radii().windows(2).all(|w| w[0] < w[1]));
        assert!(g.radial_weights().iter().all(|w| *w > 0.0));
    }
}

#[test]
fn ball_volume_and_second_moment() {
    let g = grid(3, 1e-3, 5.0, Normalization::SurfaceMeasure);
    let one = PolarField::from_fn(g.clone(), 1, |_, o| o[0] = 1.0).unwrap();
    let v = ball_integral(&one, 0.0).unwrap();
    assert!((v / (4.0 / 3.0 * PI * 125.0) - 1.0).abs() < 1e-10);

    let p = grid(3, 0.1, 1.0, Normalization::Probability);
    let avg: f64 = p.angular_weights().iter().zip(p.directions()).map(|(w, d)| w * d[0] * d[0]).sum();
    assert!((avg - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn resampled_gaussian_is_pointwise_accurate() {
    let f = CartesianField::scalar_fn(3, 64, 12.0, |x| (-r2(x)).exp()).unwrap();
    let g = grid(3, 0.05, 6.0, Normalization::SurfaceMeasure);
    let pf = resample(&f, &g).unwrap();
    let mut worst = 0.0f64;
    for i in 0..g.shell_count() {
        for j in 0..g.angular_count() {
            let x = g.node(i, j);
            worst = worst.max((pf.value(0, i, j) - (-r2(&x)).exp()).abs());
        }
    }
    assert!(worst <= 1e-6, "{worst}");
}

#[test]
fn resampling_reproduces_constants_and_linears() {
    let g = grid(3, 0.1, 2.0, Normalization::SurfaceMeasure);
    let c = CartesianField::scalar_fn(3, 32, 4.0, |_| 2.5).unwrap();
    for method in [Interpolation::default(), Interpolation::Cubic] {
        let pf = resample_with(&c, &g, method, DEFAULT_MARGIN).unwrap();
        assert!(pf.values().iter().all(|v| (v - 2.5).abs() < 1e-12), "{method:?}");
    }
    let lin = CartesianField::scalar_fn(3, 32, 4.0, |x| 1.0 + x[0] - 0.5 * x[2]).unwrap();
    let pf = resample_with(&lin, &g, Interpolation::Cubic, DEFAULT_MARGIN).unwrap();
    for i in 0..g.shell_count() {
        for j in 0..g.angular_count() {
            let x = g.node(i, j);
            assert!((pf.value(0, i, j) - (1.0 + x[0] - 0.5 * x[2])).abs() < 1e-10);
        }
    }
}

#[test]
fn sup_angular_norm_of_first_direction_cosine() {
    let g = grid(3, 0.5, 1.0, Normalization::SurfaceMeasure);
    let pf = PolarField::from_fn(g, 1, |x, o| o[0] = x[0] / r2(x).sqrt()).unwrap();
    assert!(angular_norm(&pf, Exponent::INF, 0) >= 0.99);
}

#[test]
fn time_norms_of_simple_series() {
    let g = grid(3, 0.05, 3.0, Normalization::SurfaceMeasure);
    let pf = PolarField::from_fn(g, 1, |x, o| o[0] = (-r2(x)).exp()).unwrap();
    let spatial = mixed_norm(&pf, int(0), e(2), e(2)).unwrap().value;
    let series: Vec<(f64, PolarField)> = (0..9).map(|k| (0.25 * k as f64, pf.clone())).collect();
    let s3 = time_mixed_norm(&series, int(0), e(3), e(2), e(2)).unwrap().value;
    assert!((s3 - 2f64.powf(1.0 / 3.0) * spatial).abs() < 1e-12 * spatial);
    let inf = time_mixed_norm(&series, int(0), Exponent::INF, e(2), e(2)).unwrap().value;
    assert!((inf - spatial).abs() < 1e-14);
}

// ||e^{t Delta} exp(-|x|^2)||_4 from a radial Simpson rule.
fn heat_l4_oracle(t: f64) -> f64 {
    let a = 1.0 + 4.0 * t;
    let (rmax, m) = (12.0, 4000);
    let h = rmax / m as f64;
    let f = |r: f64| 4.0 * PI * r * r * (a.powf(-1.5) * (-r * r / a).exp()).powi(4);
    let mut s = f(0.0) + f(rmax);
    for k in 1..m {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
    }
    (s * h / 3.0).powf(0.25)
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for k in 1..m {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(a + k as f64 * h);
    }
    s * h / 3.0
}

fn polar_series(traj: &Trajectory, g: &Arc<PolarGrid>) -> Vec<(f64, PolarField)> {
    traj.times.iter().zip(&traj.snapshots).map(|(t, s)| (*t, resample(s, g).unwrap())).collect()
}

#[test]
fn heat_flow_time_norm_matches_radial_oracle() {
    let u0 = CartesianField::scalar_fn(3, 32, 6.0, |x| (-r2(x)).exp()).unwrap();
    let times: Vec<f64> = (0..=128).map(|k| k as f64 / 128.0).collect();
    let traj = Trajectory::heat_flow(&u0, &times).unwrap();
    let g = grid(3, 0.02, 5.5, Normalization::SurfaceMeasure);
    let got = time_mixed_norm(&polar_series(&traj, &g), int(0), e(8), e(4), e(4)).unwrap().value;
    let oracle = simpson(|t| heat_l4_oracle(t).powi(8), 0.0, 1.0, 200).powf(1.0 / 8.0);
    let closed = simpson(|t| ((1.0 + 4.0 * t).powf(-9.0 / 8.0) * (PI / 4.0).powf(3.0 / 8.0)).powi(8), 0.0, 1.0, 200)
        .powf(1.0 / 8.0);
    assert!((oracle / closed - 1.0).abs() < 1e-8);
    assert!((got / oracle - 1.0).abs() < 0.02, "{got} vs {oracle}");
}

#[test]
fn cartesian_lp_examples() {
    let z = CartesianField::zeros(3, 16, 4.0, 3).unwrap();
    assert_eq!(cartesian_lp(&z, e(2)), 0.0);
    assert_eq!(cartesian_lp(&z, Exponent::INF), 0.0);
    let g = CartesianField::scalar_fn(3, 64, 8.0, |x| (-r2(x)).exp()).unwrap();
    let exact = (PI / 2.0).powf(0.75);
    assert!((cartesian_lp(&g, e(2)) - exact).abs() < 1e-4);
}

#[test]
fn cartesian_and_polar_agree_when_p_equals_ptilde() {
    let f = CartesianField::from_fn(3, 64, 12.0, 2, |x, o| {
        let w = (-0.5 * r2(x)).exp();
        o[0] = (1.0 + x[0]) * w;
        o[1] = x[1] * x[2] * w;
    })
    .unwrap();
    let g = grid(3, 0.02, 10.0, Normalization::SurfaceMeasure);
    let pf = resample(&f, &g).unwrap();
    for p in [e(2), e(3), e(4)] {
        let m = mixed_norm(&pf, int(0), p, p).unwrap();
        let c = cartesian_lp(&f, p);
        assert!((m.value - c).abs() <= m.quadrature_error_estimate + 1e-6 * c, "p = {p}: {} vs {c}", m.value);
    }
}

#[test]
fn dilation_identity_and_gaussian() {
    let f = CartesianField::scalar_fn(3, 32, 6.0, |x| (-r2(x)).exp()).unwrap();
    let same = dilate(&f, 1.0).unwrap();
    assert_eq!(same.values(), f.values());
    assert_eq!(same.half_width(), f.half_width());
    let d = dilate(&f, 2.0).unwrap();
    let oracle = CartesianField::scalar_fn(3, 32, 12.0, |x| (-r2(x) / 4.0).exp()).unwrap();
    assert_eq!(d.values(), oracle.values());
    assert!(dilate(&f, 3.0).is_err());
}

#[test]
fn dilation_covariance_of_the_mixed_norm() {
    let f = CartesianField::scalar_fn(3, 32, 6.0, |x| (1.0 + x[0] + 0.5 * x[1] * x[2]) * (-r2(x)).exp()).unwrap();
    let lam = 2.0;
    let d = dilate(&f, lam).unwrap();
    let g = grid(3, 0.02, 5.0, Normalization::SurfaceMeasure);
    let gd = grid(3, 0.02 * lam, 5.0 * lam, Normalization::SurfaceMeasure);
    let (pf, pd) = (resample(&f, &g).unwrap(), resample(&d, &gd).unwrap());
    for beta in [rat(-1, 2), int(0), rat(1, 2)] {
        for q in [2i128, 4] {
            for qt in [e(2), Exponent::INF] {
                let a = mixed_norm(&pf, beta, e(q), qt).unwrap().value;
                let b = mixed_norm(&pd, beta, e(q), qt).unwrap().value;
                let expo = 3.0 / q as f64 + nsra_core::norms::rational_to_f64(&beta);
                assert!((b / a / lam.powf(expo) - 1.0).abs() < 1e-9, "beta {beta} q {q} qt {qt}");
            }
        }
    }
}

// Sum of a few random low Fourier modes on the periodic box [-4, 4)^3.
fn random_band_limited(rng: &mut ChaCha8Rng) -> CartesianField {
    let modes: Vec<([f64; 3], f64, f64)> = (0..10)
        .map(|_| {
            let k = [rng.gen_range(-3..=3) as f64, rng.gen_range(-3..=3) as f64, rng.gen_range(-3..=3) as f64];
            (k, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI))
        })
        .collect();
    CartesianField::scalar_fn(3, 16, 4.0, |x| {
        modes
            .iter()
            .map(|(k, a, ph)| a * (PI / 4.0 * (k[0] * x[0] + k[1] * x[1] + k[2] * x[2]) + ph).cos())
            .sum()
    })
    .unwrap()
}

#[test]
fn angular_norm_is_monotone_in_ptilde_under_probability_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let g = grid(3, 0.5, 3.0, Normalization::Probability);
    let order = [e(1), e(2), e(3), e(4), e(6), e(8), Exponent::INF];
    for _ in 0..100 {
        let pf = resample(&random_band_limited(&mut rng), &g).unwrap();
        for shell in [0, g.shell_count() / 2, g.shell_count() - 1] {
            let vals: Vec<f64> = order.iter().map(|pt| angular_norm(&pf, *pt, shell)).collect();
            for w in vals.windows(2) {
                assert!(w[0] <= w[1] * (1.0 + 1e-12), "{vals:?}");
            }
        }
    }
}

#[test]
fn criterion_norms_are_scale_invariant() {
    let u0 = CartesianField::scalar_fn(3, 32, 6.0, |x| (1.0 + 0.3 * x[0]) * (-r2(x)).exp()).unwrap();
    let times: Vec<f64> = (1..=32).map(|k| k as f64 / 32.0).collect();
    let traj = Trajectory::heat_flow(&u0, &times).unwrap();
    let big = traj.rescaled(2.0).unwrap();
    let g = grid(3, 0.05, 5.0, Normalization::SurfaceMeasure);
    let gb = grid(3, 0.1, 10.0, Normalization::SurfaceMeasure);
    let (small, large) = (polar_series(&traj, &g), polar_series(&big, &gb));
    for (alpha, s, p, pt) in [
        (int(0), e(8), e(4), e(4)),
        (rat(-2, 3), e(3), e(3), Exponent::INF),
    ] {
        let a = time_mixed_norm(&small, alpha, s, p, pt).unwrap().value;
        let b = time_mixed_norm(&large, alpha, s, p, pt).unwrap().value;
        assert!((b / a - 1.0).abs() < 0.02, "alpha {alpha}: {a} vs {b}");
    }
}

#[test]
fn snapshot_round_trip_and_truncation() {
    let f = CartesianField::from_fn(3, 8, 2.0, 3, |x, o| {
        o[0] = x[0].sin();
        o[1] = x[1] * 1e-300;
        o[2] = std::f64::consts::E * x[2];
    })
    .unwrap();
    let mut buf = Vec::new();
    f.write_nsra1(&mut buf, 0.125).unwrap();
    assert!(buf.starts_with(b"NSRA1 n=3 N=8 L=2 m=3 t=0.125\n"));
    let (back, t) = CartesianField::read_nsra1(&buf[..]).unwrap();
    assert_eq!(t, 0.125);
    assert_eq!(back.values(), f.values());
    assert!(CartesianField::read_nsra1(&buf[..buf.len() - 8]).is_err());
    let mut bad = buf.clone();
    bad[0] = b'X';
    assert!(CartesianField::read_nsra1(&bad[..]).is_err());
}
