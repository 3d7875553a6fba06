use serde::{Deserialize, Serialize};

use super::ci::{EstimateCI, DEFAULT_CONFIDENCE};
use super::task_stream;
use crate::error::{invalid, Error, Result};
use crate::parallel::par_map;
use crate::simulator::{exit_unchecked, AnisotropicBox, ExitFace};
use crate::stable_core::{SpaceTimePoint, StableParams};
use crate::stats::{linear_fit, t_quantile};

const TAG_EXIT: u64 = 0x45_58_49_54;
const TAG_EXIT_LAW: u64 = 0x4c_41_57;

/// Default step for box experiments of scale `r`.
pub fn default_dt(r: f64) -> f64 {
    r * r / 400.0
}

fn check_exit_setup(params: StableParams, bx: &AnisotropicBox, start: &SpaceTimePoint, dt: f64) -> Result<()> {
    if bx.dim() != params.d() || start.dim() != params.d() {
        return Err(Error::Shape("box, start and parameters disagree on dimension".into()));
    }
    bx.require_half_space("exit")?;
    if !bx.contains_point(params, start) {
        return Err(Error::Geometry("start point lies outside the box".into()));
    }
    if !(dt > 0.0) {
        return Err(invalid("dt", format!("step {dt} must be positive")));
    }
    Ok(())
}

/// Mean of the exit time from `bx` over `n` independent paths from `start`.
///
/// The margin of `bx` only restricts admissible starts; paths exit the full box.
pub fn estimate_mean_exit_time(
    params: StableParams,
    bx: &AnisotropicBox,
    start: &SpaceTimePoint,
    n: usize,
    dt: f64,
    seed: u64,
) -> Result<EstimateCI> {
    estimate_mean_exit_time_tagged(params, bx, start, n, dt, seed, 0)
}

fn estimate_mean_exit_time_tagged(
    params: StableParams,
    bx: &AnisotropicBox,
    start: &SpaceTimePoint,
    n: usize,
    dt: f64,
    seed: u64,
    sub: u64,
) -> Result<EstimateCI> {
    check_exit_setup(params, bx, start, dt)?;
    if n == 0 {
        return Err(invalid("n", "need at least one path"));
    }
    let full = bx.with_margin(0.0)?;
    let taus = par_map(n, |i| {
        let mut rng = task_stream(seed, TAG_EXIT ^ sub.wrapping_mul(0x1000_0001), i);
        exit_unchecked(params, &full, start, dt, &mut rng).tau
    });
    Ok(EstimateCI::from_samples(&taus, DEFAULT_CONFIDENCE))
}

/// Exit-time means over a sweep of box scales and the fitted power law.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExitScaling {
    pub r: Vec<f64>,
    pub estimates: Vec<EstimateCI>,
    /// Slope of `log E tau` against `log r`.
    pub slope: f64,
    pub slope_se: f64,
    pub slope_lower: f64,
    pub slope_upper: f64,
    /// Fitted prefactor `E tau / r^slope`.
    pub prefactor: f64,
}

/// Sweeps `D_r` boxes centered at height `r` with step `dt_factor * r^2`, starting at the
/// center, and fits the exponent of `E tau` in `r`.
pub fn exit_time_scaling(
    params: StableParams,
    r_list: &[f64],
    n: usize,
    dt_factor: f64,
    seed: u64,
) -> Result<ExitScaling> {
    if r_list.len() < 2 {
        return Err(invalid("r", "the sweep needs at least two scales"));
    }
    let mut estimates = Vec::with_capacity(r_list.len());
    for (j, &r) in r_list.iter().enumerate() {
        let center = SpaceTimePoint::at_height(params.d(), r);
        let bx = AnisotropicBox::plain(center.clone(), r)?;
        estimates.push(estimate_mean_exit_time_tagged(
            params,
            &bx,
            &center,
            n,
            dt_factor * r * r,
            seed,
            j as u64 + 1,
        )?);
    }
    let x: Vec<f64> = r_list.iter().map(|r| r.ln()).collect();
    let y: Vec<f64> = estimates.iter().map(|e| e.mean.ln()).collect();
    let fit = linear_fit(&x, &y);
    // propagate the per-point errors of log E tau through the slope estimator
    let xm = x.iter().sum::<f64>() / x.len() as f64;
    let sxx: f64 = x.iter().map(|v| (v - xm).powi(2)).sum();
    let var: f64 = x
        .iter()
        .zip(&estimates)
        .map(|(xi, e)| ((xi - xm) / sxx).powi(2) * (e.std_error / e.mean).powi(2))
        .sum();
    let slope_se = var.sqrt().max(fit.slope_se);
    let q = t_quantile(DEFAULT_CONFIDENCE, (n.max(2) - 1) as f64);
    Ok(ExitScaling {
        r: r_list.to_vec(),
        estimates,
        slope: fit.slope,
        slope_se,
        slope_lower: fit.slope - q * slope_se,
        slope_upper: fit.slope + q * slope_se,
        prefactor: fit.intercept.exp(),
    })
}

/// A horizontal shell `{inner < |y - c|_inf <= outer}` about the box center.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizontalShell {
    pub inner: f64,
    pub outer: f64,
}

impl HorizontalShell {
    pub fn contains(&self, center: &[f64], y: &[f64]) -> bool {
        let dist = y
            .iter()
            .zip(center)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        dist > self.inner && dist <= self.outer
    }
}

/// Exit-position probabilities for several starts and targets, and the comparability band.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExitLawComparison {
    pub starts: Vec<SpaceTimePoint>,
    pub targets: Vec<HorizontalShell>,
    /// `probabilities[i][j]`: start `i`, target `j`.
    pub probabilities: Vec<Vec<EstimateCI>>,
    /// Largest ratio between two starts over all targets; `1 <= C`.
    pub band: f64,
}

/// Compares `P^p(Y_tau in F)` across starts `p` in the inner box `D^eps_r` for horizontal
/// targets `F` outside the horizontal cube of `D_{2r}`.
pub fn exit_law_comparison(
    params: StableParams,
    bx: &AnisotropicBox,
    starts: &[SpaceTimePoint],
    targets: &[HorizontalShell],
    n: usize,
    dt: f64,
    seed: u64,
) -> Result<ExitLawComparison> {
    bx.require_half_space("exit")?;
    let outer = bx.scaled(2.0)?.horizontal_half_width(params);
    if let Some(t) = targets.iter().find(|t| t.inner < outer * (1.0 - 1e-12)) {
        return Err(Error::Geometry(format!(
            "target shell starting at {} meets the horizontal cube of D_2r (half-width {outer})",
            t.inner
        )));
    }
    let full = bx.with_margin(0.0)?;
    let mut probabilities = Vec::with_capacity(starts.len());
    for (i, start) in starts.iter().enumerate() {
        check_exit_setup(params, bx, start, dt)?;
        let exits = par_map(n, |k| {
            let mut rng = task_stream(seed, TAG_EXIT_LAW ^ ((i as u64) << 40), k);
            let e = exit_unchecked(params, &full, start, dt, &mut rng);
            targets
                .iter()
                .map(|t| e.face == ExitFace::Side && t.contains(&bx.center.x, &e.point.x))
                .collect::<Vec<bool>>()
        });
        let row: Vec<EstimateCI> = (0..targets.len())
            .map(|j| {
                let hits = exits.iter().filter(|e| e[j]).count() as u64;
                EstimateCI::from_proportion(hits, n as u64, DEFAULT_CONFIDENCE)
            })
            .collect();
        probabilities.push(row);
    }
    let mut band = 1.0_f64;
    for j in 0..targets.len() {
        let col: Vec<f64> = probabilities.iter().map(|r| r[j].mean).collect();
        let hi = col.iter().copied().fold(0.0, f64::max);
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        band = band.max(if lo > 0.0 { hi / lo } else { f64::INFINITY });
    }
    Ok(ExitLawComparison {
        starts: starts.to_vec(),
        targets: targets.to_vec(),
        probabilities,
        band,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertical_control_matches_interval_exit() {
        // a horizontally huge box isolates the vertical motion: E tau = (r/2)^2 / 2
        let p = StableParams::new(1, 1.5).unwrap();
        let c = SpaceTimePoint::at_height(1, 1.0);
        let bx = AnisotropicBox::plain(c.clone(), 1.0).unwrap().with_horizontal_stretch(1e9).unwrap();
        let e = estimate_mean_exit_time(p, &bx, &c, 20_000, default_dt(1.0), 9).unwrap();
        assert!(e.within_se(0.125, 3.0), "{e:?}");
    }

    #[test]
    fn start_outside_margin_box_is_rejected() {
        let p = StableParams::new(1, 1.0).unwrap();
        let c = SpaceTimePoint::at_height(1, 1.0);
        let bx = AnisotropicBox::new(c, 1.0, 0.5).unwrap();
        let edge = SpaceTimePoint::new(vec![0.0], 1.4).unwrap();
        assert!(estimate_mean_exit_time(p, &bx, &edge, 10, 1e-3, 1).is_err());
    }

    #[test]
    fn quadrupling_paths_halves_the_error() {
        let p = StableParams::new(1, 1.0).unwrap();
        let c = SpaceTimePoint::at_height(1, 1.0);
        let bx = AnisotropicBox::plain(c.clone(), 1.0).unwrap();
        let a = estimate_mean_exit_time(p, &bx, &c, 4_000, 1.0 / 100.0, 2).unwrap();
        let b = estimate_mean_exit_time(p, &bx, &c, 16_000, 1.0 / 100.0, 2).unwrap();
        let ratio = a.std_error / b.std_error;
        assert!((1.7..2.3).contains(&ratio), "{ratio}");
    }

    #[test]
    fn shells_must_avoid_the_double_box() {
        let p = StableParams::new(1, 1.0).unwrap();
        let c = SpaceTimePoint::at_height(1, 1.0);
        let bx = AnisotropicBox::plain(c.clone(), 1.0).unwrap();
        let bad = [HorizontalShell { inner: 1.0, outer: 3.0 }];
        assert!(exit_law_comparison(p, &bx, &[c], &bad, 10, 1e-2, 0).is_err());
    }
}
