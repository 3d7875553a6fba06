//! Statistical checks of the exact increment samplers against their transforms.

use stablelab_core::stable_core::{
    sample_brownian_increment, sample_stable_increment, sample_subordinator_increment,
};
use stablelab_core::stats::Accumulator;
use stablelab_core::{RngStream, StableParams};

const N: usize = 200_000;

fn within(acc: &Accumulator, want: f64, k: f64) -> bool {
    (acc.mean() - want).abs() <= k * acc.std_error().max(1e-12)
}

#[test]
fn subordinator_matches_laplace_transform() {
    for (i, &beta) in [0.25, 0.5, 0.75].iter().enumerate() {
        let dt = 0.7;
        let mut rng = RngStream::new(11, i as u64);
        let draws: Vec<f64> = (0..N).map(|_| sample_subordinator_increment(beta, dt, &mut rng)).collect();
        assert!(draws.iter().all(|s| *s > 0.0 && s.is_finite()));
        for lambda in [0.3, 1.0, 4.0] {
            let mut acc = Accumulator::default();
            for s in &draws {
                acc.push((-lambda * s).exp());
            }
            let want = (-dt * f64::powf(lambda, beta)).exp();
            assert!(within(&acc, want, 4.5), "beta={beta} lambda={lambda}: {} vs {want}", acc.mean());
        }
    }
}

#[test]
fn stable_increment_matches_characteristic_function() {
    for (i, &(d, alpha)) in [(1usize, 0.5), (1, 1.0), (2, 1.5), (3, 1.2)].iter().enumerate() {
        let p = StableParams::new(d, alpha).unwrap();
        let dt = 0.4;
        let mut rng = RngStream::new(23, i as u64);
        let xi: Vec<f64> = (0..d).map(|a| 0.8 + 0.3 * a as f64).collect();
        let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut acc = Accumulator::default();
        for _ in 0..N {
            let x = sample_stable_increment(p, dt, &mut rng);
            acc.push(x.iter().zip(&xi).map(|(a, b)| a * b).sum::<f64>().cos());
        }
        let want = (-dt * norm.powf(alpha)).exp();
        assert!(within(&acc, want, 4.5), "d={d} alpha={alpha}: {} vs {want}", acc.mean());
    }
}

#[test]
fn stable_increment_is_self_similar() {
    // X_{c dt} has the law of c^{1/alpha} X_dt: compare a tail probability
    let p = StableParams::new(1, 0.8).unwrap();
    let (dt, c) = (0.5, 3.0);
    let mut r1 = RngStream::new(5, 0);
    let mut r2 = RngStream::new(5, 1);
    let thr = 1.3;
    let mut a = Accumulator::default();
    let mut b = Accumulator::default();
    for _ in 0..N {
        a.push(f64::from(sample_stable_increment(p, c * dt, &mut r1)[0].abs() > thr));
        b.push(f64::from(sample_stable_increment(p, dt, &mut r2)[0].abs() * c.powf(1.0 / 0.8) > thr));
    }
    let se = (a.std_error().powi(2) + b.std_error().powi(2)).sqrt();
    assert!((a.mean() - b.mean()).abs() < 4.5 * se);
}

#[test]
fn brownian_increment_has_variance_two_dt() {
    let mut rng = RngStream::new(3, 9);
    let mut acc = Accumulator::default();
    for _ in 0..N {
        acc.push(sample_brownian_increment(0.25, &mut rng).powi(2));
    }
    assert!(within(&acc, 0.5, 4.5), "{}", acc.mean());
}

#[test]
fn streams_are_reproducible_and_distinct() {
    let mut a = RngStream::for_task(99, 4, 17);
    let mut b = RngStream::for_task(99, 4, 17);
    let mut c = RngStream::for_task(99, 4, 18);
    let xa: Vec<f64> = (0..16).map(|_| a.uniform()).collect();
    let xb: Vec<f64> = (0..16).map(|_| b.uniform()).collect();
    let xc: Vec<f64> = (0..16).map(|_| c.uniform()).collect();
    assert_eq!(xa, xb);
    assert_ne!(xa, xc);
}
