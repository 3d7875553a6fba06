use serde::{Deserialize, Serialize};

use super::harnack::{box_heights, horizontal_samples};
use crate::error::{invalid, Error, Result};
use crate::grid::GridFunction;
use crate::kernel_engine::{ExtendOptions, ExtensionField};
use crate::simulator::AnisotropicBox;
use crate::stable_core::{SpaceTimePoint, StableParams};
use crate::stats::linear_fit;

/// Fitted Holder exponent and constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderFit {
    pub gamma_hat: f64,
    pub c_hat: f64,
    /// RMS residual of the log-linear regression.
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillationLevel {
    pub k: usize,
    /// Infimum over `D_{theta^k}`.
    pub a: f64,
    /// Supremum over `D_{theta^k}`.
    pub b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillationProfile {
    pub theta: f64,
    pub levels: Vec<OscillationLevel>,
    /// Levels at which the oscillation failed to shrink.
    pub warnings: Vec<String>,
}

impl OscillationProfile {
    pub fn oscillations(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.b - l.a).collect()
    }

    pub fn is_contracting(&self) -> bool {
        self.levels.windows(2).all(|w| {
            w[1].a >= w[0].a && w[1].b <= w[0].b && w[1].b - w[1].a <= w[0].b - w[0].a
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OscillationFit {
    pub profile: OscillationProfile,
    /// Per-level contraction factor from `osc_k ~ C beta^k`.
    pub beta_hat: f64,
    /// `gamma_hat = (alpha/2) log(beta_hat) / log(theta)`; `c_hat` is the fitted `C`
    /// relative to `||f||_inf`.
    pub fit: HolderFit,
}

/// Oscillation of the boundary extension of `f` over the nested boxes
/// `D_{theta^k}(center)`, `k = 0..=k_max`.
///
/// Extremes are taken over `n_side` points per axis of every box; the samples of the inner
/// boxes are included in the outer ones so the recorded bounds are nested exactly.
pub fn oscillation_profile(
    params: StableParams,
    f: &GridFunction,
    center: &SpaceTimePoint,
    theta: f64,
    k_max: usize,
    n_side: usize,
    opts: &ExtendOptions,
) -> Result<OscillationFit> {
    if !(theta > 0.0 && theta <= 1.0 / 3.0) {
        return Err(invalid("theta", format!("{theta} must lie in (0, 1/3]")));
    }
    if k_max < 2 {
        return Err(invalid("k_max", "need at least three levels to fit a rate"));
    }
    let d1 = AnisotropicBox::plain(center.clone(), 1.0)?;
    d1.scaled(4.0)?.require_half_space("D_4")?;
    let field = ExtensionField::new(f, params, d1.vertical_interval().1, opts)?;
    let mut raw = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let bx = d1.scaled(theta.powi(k as i32))?;
        let pts = horizontal_samples(params, &bx, n_side);
        let hs = box_heights(&bx, n_side);
        let v = field.eval_many(&pts, &hs);
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        raw.push((lo, hi));
    }
    // nest the sample sets: level k also sees every inner level
    let mut levels = vec![OscillationLevel { k: 0, a: 0.0, b: 0.0 }; k_max + 1];
    let (mut a, mut b) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in (0..=k_max).rev() {
        a = a.min(raw[k].0);
        b = b.max(raw[k].1);
        levels[k] = OscillationLevel { k, a, b };
    }
    let mut warnings = Vec::new();
    for w in levels.windows(2) {
        if w[1].b - w[1].a >= w[0].b - w[0].a && w[0].b > w[0].a {
            warnings.push(format!(
                "oscillation did not shrink from level {} to {}; the grid may be too coarse",
                w[0].k, w[1].k
            ));
        }
    }
    let profile = OscillationProfile {
        theta,
        levels,
        warnings,
    };
    let fsup = f.max_abs();
    let osc = profile.oscillations();
    let scale = osc[0].abs().max(f64::MIN_POSITIVE);
    let used: Vec<(f64, f64)> = osc
        .iter()
        .enumerate()
        .filter(|(_, o)| **o > 1e-13 * scale)
        .map(|(k, o)| (k as f64, o.ln()))
        .collect();
    if used.len() < 2 {
        // constant extension: nothing oscillates
        return Ok(OscillationFit {
            profile,
            beta_hat: 0.0,
            fit: HolderFit {
                gamma_hat: f64::INFINITY,
                c_hat: 0.0,
                residual: 0.0,
            },
        });
    }
    let (x, y): (Vec<f64>, Vec<f64>) = used.into_iter().unzip();
    let lf = linear_fit(&x, &y);
    let beta_hat = lf.slope.exp();
    let gamma_hat = params.alpha() / 2.0 * beta_hat.ln() / theta.ln();
    Ok(OscillationFit {
        profile,
        beta_hat,
        fit: HolderFit {
            gamma_hat,
            c_hat: if fsup > 0.0 { lf.intercept.exp() / fsup } else { 0.0 },
            residual: lf.rms_residual,
        },
    })
}

/// Closed region of space-time on which a field is probed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x_lo: Vec<f64>,
    pub x_hi: Vec<f64>,
    pub t_lo: f64,
    pub t_hi: f64,
}

impl Region {
    fn contains(&self, x: &[f64], t: f64) -> bool {
        t >= self.t_lo
            && t <= self.t_hi
            && x.iter()
                .zip(self.x_lo.iter().zip(&self.x_hi))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }
}

const MAX_POINTS: usize = 1500;
const BINS: usize = 12;

/// Smallest `c` with `|g(p) - g(p')| <= c ||f||_inf (|p - p'| ^ 1)^gamma` over lattice
/// pairs in `region`, with `gamma` fitted to the upper envelope of the increments and
/// capped at `gamma_probe`.
///
/// With height slices the points are space-time lattice points; without, the base values
/// are probed at `t = 0`.
pub fn holder_constant_estimate(
    g: &GridFunction,
    region: &Region,
    gamma_probe: f64,
    f_sup: f64,
) -> Result<HolderFit> {
    if !(gamma_probe > 0.0 && gamma_probe <= 1.0) {
        return Err(invalid("gamma_probe", format!("{gamma_probe} must lie in (0, 1]")));
    }
    if !(f_sup > 0.0) {
        return Err(invalid("f_sup", "the datum norm must be positive"));
    }
    let mut pts: Vec<(Vec<f64>, f64, f64)> = Vec::new();
    let layers: Vec<(f64, &[f64])> = if g.slices().is_empty() {
        vec![(0.0, g.values())]
    } else {
        g.slices().iter().map(|s| (s.t, s.values.as_slice())).collect()
    };
    for (t, vals) in layers {
        for (k, &v) in vals.iter().enumerate() {
            let x = g.point(k);
            if region.contains(&x, t) {
                if !v.is_finite() {
                    return Err(Error::Domain("field is not finite on the region".into()));
                }
                pts.push((x, t, v));
            }
        }
    }
    if pts.len() < 2 {
        return Err(invalid("region", "fewer than two lattice points in the region"));
    }
    if pts.len() > MAX_POINTS {
        let stride = pts.len().div_ceil(MAX_POINTS);
        pts = pts.into_iter().step_by(stride).collect();
    }
    let mut pairs = Vec::with_capacity(pts.len() * (pts.len() - 1) / 2);
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let (xi, ti, vi) = &pts[i];
            let (xj, tj, vj) = &pts[j];
            let dist = (xi.iter().zip(xj).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
                + (ti - tj).powi(2))
            .sqrt()
            .min(1.0);
            pairs.push((dist, (vi - vj).abs() / f_sup));
        }
    }
    let dmin = pairs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let dmax = pairs.iter().map(|p| p.0).fold(0.0, f64::max);
    let inc_max = pairs.iter().map(|p| p.1).fold(0.0, f64::max);
    if inc_max == 0.0 {
        return Ok(HolderFit {
            gamma_hat: gamma_probe,
            c_hat: 0.0,
            residual: 0.0,
        });
    }
    // upper envelope of log increment against log distance
    let (l0, l1) = (dmin.ln(), dmax.ln());
    let width = ((l1 - l0) / BINS as f64).max(f64::MIN_POSITIVE);
    let mut env = vec![0.0_f64; BINS];
    let mut centers = vec![0.0_f64; BINS];
    for &(dist, inc) in &pairs {
        let b = (((dist.ln() - l0) / width) as usize).min(BINS - 1);
        if inc > env[b] {
            env[b] = inc;
            centers[b] = dist.ln();
        }
    }
    let (x, y): (Vec<f64>, Vec<f64>) = env
        .iter()
        .zip(&centers)
        .filter(|(e, _)| **e > 1e-14 * inc_max)
        .map(|(e, c)| (*c, e.ln()))
        .unzip();
    let (gamma_hat, residual) = if x.len() >= 2 {
        let lf = linear_fit(&x, &y);
        (lf.slope.clamp(1e-6, gamma_probe), lf.rms_residual)
    } else {
        (gamma_probe, 0.0)
    };
    let c_hat = pairs
        .iter()
        .map(|(dist, inc)| inc / dist.powf(gamma_hat))
        .fold(0.0, f64::max);
    Ok(HolderFit {
        gamma_hat,
        c_hat,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TSlice;

    #[test]
    fn constant_field_has_zero_constant() {
        let g = GridFunction::from_fn(vec![0.0], 0.1, vec![11], |_| 2.0).unwrap();
        let region = Region { x_lo: vec![0.0], x_hi: vec![1.0], t_lo: 0.0, t_hi: 0.0 };
        let fit = holder_constant_estimate(&g, &region, 1.0, 1.0).unwrap();
        assert_eq!(fit.c_hat, 0.0);
    }

    #[test]
    fn square_root_profile_is_recovered() {
        let g = GridFunction::from_fn(vec![0.0], 0.001, vec![1001], |x| x[0].sqrt()).unwrap();
        let region = Region { x_lo: vec![0.0], x_hi: vec![1.0], t_lo: 0.0, t_hi: 0.0 };
        let fit = holder_constant_estimate(&g, &region, 1.0, 1.0).unwrap();
        assert!((fit.gamma_hat - 0.5).abs() < 0.05, "{fit:?}");
        assert!((fit.c_hat - 1.0).abs() < 0.1, "{fit:?}");
    }

    #[test]
    fn lipschitz_fields_cap_at_the_probe() {
        let base = GridFunction::from_fn(vec![0.0], 0.05, vec![21], |_| 0.0).unwrap();
        let slices = (1..5)
            .map(|j| TSlice {
                t: j as f64 * 0.1,
                values: (0..21).map(|i| (i as f64 * 0.05).sin() + j as f64 * 0.1).collect(),
            })
            .collect();
        let g = base.with_slices(slices).unwrap();
        let region = Region { x_lo: vec![0.0], x_hi: vec![1.0], t_lo: 0.0, t_hi: 1.0 };
        let fit = holder_constant_estimate(&g, &region, 0.8, 1.0).unwrap();
        assert_eq!(fit.gamma_hat, 0.8);
        assert!(fit.c_hat < 2.0);
    }

    #[test]
    fn constant_datum_does_not_oscillate() {
        let p = StableParams::new(1, 1.0).unwrap();
        let f = GridFunction::from_fn(vec![-4.0], 0.125, vec![65], |_| 1.0).unwrap();
        let opts = ExtendOptions { padding: crate::kernel_engine::Padding::Periodic, ..Default::default() };
        let c = SpaceTimePoint::at_height(1, 2.5);
        let fit = oscillation_profile(p, &f, &c, 1.0 / 3.0, 3, 5, &opts).unwrap();
        assert!(fit.profile.oscillations().iter().all(|o| o.abs() < 1e-12));
        assert_eq!(fit.fit.c_hat, 0.0);
    }

    #[test]
    fn bump_profile_contracts() {
        let p = StableParams::new(1, 1.0).unwrap();
        let f = GridFunction::from_fn(vec![-8.0], 0.125, vec![129], |x| (-(x[0] - 0.5).powi(2)).exp()).unwrap();
        let c = SpaceTimePoint::at_height(1, 2.5);
        let fit = oscillation_profile(p, &f, &c, 1.0 / 3.0, 4, 7, &ExtendOptions::with_tol(1e-7)).unwrap();
        assert!(fit.profile.is_contracting(), "{:?}", fit.profile);
        assert!(fit.beta_hat < 1.0 && fit.fit.gamma_hat > 0.0, "{fit:?}");
        assert!(fit.profile.warnings.is_empty());
    }
}
