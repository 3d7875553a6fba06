use std::f64::consts::PI;

use super::{RngStream, StableParams};

/// One increment over `dt` of the one-sided `beta`-stable subordinator with
/// `E exp(-lambda S) = exp(-dt lambda^beta)`.
///
/// Chambers-Mallows-Stuck form with `U ~ Unif(0, pi)` and `W ~ Exp(1)`.
#[inline]
pub fn sample_subordinator_increment(beta: f64, dt: f64, rng: &mut RngStream) -> f64 {
    debug_assert!(beta > 0.0 && beta < 1.0 && dt > 0.0);
    let u = PI * rng.uniform();
    let w = rng.exponential();
    let inv = 1.0 / beta;
    let kappa = (1.0 - beta) * inv;
    let ln_s = inv * dt.ln() + (beta * u).sin().ln() - inv * u.sin().ln()
        + kappa * (((1.0 - beta) * u).sin().ln() - w.ln());
    ln_s.exp()
}

/// One increment over `dt` of the isotropic stable process, written into `out`.
///
/// Gaussian subordination: `sqrt(2 S) N` with `S` the `alpha/2` subordinator.
#[inline]
pub fn sample_stable_increment_into(
    params: StableParams,
    dt: f64,
    rng: &mut RngStream,
    out: &mut [f64],
) {
    let s = sample_subordinator_increment(params.alpha() / 2.0, dt, rng);
    let scale = (2.0 * s).sqrt();
    for v in out.iter_mut() {
        *v = scale * rng.standard_normal();
    }
}

pub fn sample_stable_increment(params: StableParams, dt: f64, rng: &mut RngStream) -> Vec<f64> {
    let mut out = vec![0.0; params.d()];
    sample_stable_increment_into(params, dt, rng, &mut out);
    out
}

/// Increment of the vertical Brownian motion (generator `Laplacian`, variance `2 dt`).
#[inline]
pub fn sample_brownian_increment(dt: f64, rng: &mut RngStream) -> f64 {
    (2.0 * dt).sqrt() * rng.standard_normal()
}
