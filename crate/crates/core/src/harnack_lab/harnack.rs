use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::GridFunction;
use crate::kernel_engine::{ExtendOptions, ExtensionField};
use crate::simulator::AnisotropicBox;
use crate::stable_core::{RngStream, StableParams};

/// Lattice of `n` points per horizontal axis spanning the closed horizontal cube of `bx`.
pub(crate) fn horizontal_samples(params: StableParams, bx: &AnisotropicBox, n: usize) -> Vec<Vec<f64>> {
    let d = params.d();
    let hw = bx.horizontal_half_width(params);
    let line: Vec<f64> = if n <= 1 {
        vec![0.0]
    } else {
        (0..n).map(|i| -hw + 2.0 * hw * i as f64 / (n - 1) as f64).collect()
    };
    let total = line.len().pow(d as u32);
    (0..total)
        .map(|mut k| {
            let mut x = vec![0.0; d];
            for a in (0..d).rev() {
                x[a] = bx.center.x[a] + line[k % line.len()];
                k /= line.len();
            }
            x
        })
        .collect()
}

/// `n` equally spaced heights spanning the vertical interval of `bx`.
pub fn box_heights(bx: &AnisotropicBox, n: usize) -> Vec<f64> {
    let (lo, hi) = bx.vertical_interval();
    if n <= 1 {
        return vec![bx.center.t];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HarnackRow {
    pub index: usize,
    pub min: f64,
    pub max: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HarnackReport {
    pub max_ratio: f64,
    pub rows: Vec<HarnackRow>,
}

/// Largest ratio `h(p) / h(p')` over sample points of `eval_box` for the boundary
/// extension `h` of each datum.
///
/// The extension is harmonic in the whole half-space, so the hypothesis reduces to the
/// position of the box: `D~_32` around the same center must lie in the half-space.
pub fn harnack_ratio_experiment(
    params: StableParams,
    data: &[GridFunction],
    eval_box: &AnisotropicBox,
    t_grid: &[f64],
    n_points: usize,
    opts: &ExtendOptions,
) -> Result<HarnackReport> {
    eval_box
        .scaled(32.0)?
        .require_half_space("D~_32")?;
    let (lo, hi) = eval_box.vertical_interval();
    if t_grid.is_empty() || t_grid.iter().any(|&t| t < lo || t > hi) {
        return Err(invalid("t_grid", format!("heights must lie in [{lo}, {hi}]")));
    }
    let points = horizontal_samples(params, eval_box, n_points);
    let t_max = t_grid.iter().copied().fold(0.0, f64::max);
    let mut rows = Vec::with_capacity(data.len());
    for (index, f) in data.iter().enumerate() {
        let fmin = f.min_value();
        if fmin < 0.0 {
            return Err(Error::Positivity { min: fmin, floor: 0.0 });
        }
        if f.max_abs() == 0.0 {
            return Err(invalid("data", format!("datum {index} vanishes identically")));
        }
        let field = ExtensionField::new(f, params, t_max, opts)?;
        let vals = field.eval_many(&points, t_grid);
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // the extension is strictly positive, but only above the wrap-around noise level
        let floor = 10.0 * field.diagnostics().wrap_bound;
        if !(min > floor) {
            return Err(Error::Positivity { min, floor });
        }
        rows.push(HarnackRow {
            index,
            min,
            max,
            ratio: max / min,
        });
    }
    let max_ratio = rows.iter().map(|r| r.ratio).fold(1.0, f64::max);
    Ok(HarnackReport { max_ratio, rows })
}

/// Random nonnegative boundary data on the lattice of `template`: sums of one to three
/// Gaussian bumps and cube indicators with random centers, widths and heights.
pub fn random_boundary_data(template: &GridFunction, count: usize, rng: &mut RngStream) -> Vec<GridFunction> {
    let d = template.dim();
    let lo: Vec<f64> = template.origin().to_vec();
    let span: Vec<f64> = template
        .extent()
        .iter()
        .map(|&n| (n - 1) as f64 * template.spacing())
        .collect();
    (0..count)
        .map(|_| {
            let parts = 1 + (rng.uniform() * 3.0) as usize;
            let comps: Vec<(bool, Vec<f64>, f64, f64)> = (0..parts)
                .map(|_| {
                    let indicator = rng.uniform() < 0.4;
                    let c: Vec<f64> = (0..d)
                        .map(|a| lo[a] + span[a] * (0.3 + 0.4 * rng.uniform()))
                        .collect();
                    let width = 0.2 + 0.8 * rng.uniform();
                    let height = 0.2 + 0.8 * rng.uniform();
                    (indicator, c, width, height)
                })
                .collect();
            let mut g = template.with_values(vec![0.0; template.len()]).expect("same lattice");
            let mut x = vec![0.0; d];
            for k in 0..g.len() {
                g.point_into(k, &mut x);
                let v: f64 = comps
                    .iter()
                    .map(|(ind, c, w, h)| {
                        if *ind {
                            let inside = x.iter().zip(c).all(|(xi, ci)| (xi - ci).abs() <= *w);
                            if inside {
                                *h
                            } else {
                                0.0
                            }
                        } else {
                            let r2: f64 = x.iter().zip(c).map(|(xi, ci)| (xi - ci).powi(2)).sum();
                            h * (-r2 / (2.0 * w * w)).exp()
                        }
                    })
                    .sum();
                g.values_mut()[k] = v;
            }
            g
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stable_core::SpaceTimePoint;

    fn setup() -> (StableParams, AnisotropicBox, Vec<f64>) {
        let p = StableParams::new(1, 1.0).unwrap();
        let r = 1.0 / 16.0;
        let bx = AnisotropicBox::plain(SpaceTimePoint::at_height(1, 16.0 * r), r).unwrap();
        let hs = box_heights(&bx, 5);
        (p, bx, hs)
    }

    #[test]
    fn constant_datum_has_unit_ratio() {
        let (p, bx, hs) = setup();
        let f = GridFunction::from_fn(vec![-8.0], 0.125, vec![129], |_| 1.0).unwrap();
        let opts = ExtendOptions { padding: crate::kernel_engine::Padding::Periodic, ..Default::default() };
        let rep = harnack_ratio_experiment(p, &[f], &bx, &hs, 5, &opts).unwrap();
        assert!((rep.max_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn box_too_low_is_rejected() {
        let p = StableParams::new(1, 1.0).unwrap();
        let bx = AnisotropicBox::plain(SpaceTimePoint::at_height(1, 0.1), 1.0).unwrap();
        let f = GridFunction::from_fn(vec![-1.0], 0.5, vec![5], |_| 1.0).unwrap();
        let err = harnack_ratio_experiment(p, &[f], &bx, &[0.1], 3, &ExtendOptions::default());
        assert!(matches!(err, Err(Error::Geometry(_))));
    }

    #[test]
    fn ratio_is_translation_invariant() {
        let (p, bx, hs) = setup();
        let bump = |shift: f64| {
            GridFunction::from_fn(vec![-8.0], 0.125, vec![129], move |x| {
                (-(x[0] - shift - 0.3).powi(2) / 0.5).exp()
            })
            .unwrap()
        };
        let opts = ExtendOptions::with_tol(1e-8);
        let a = harnack_ratio_experiment(p, &[bump(0.0)], &bx, &hs, 5, &opts).unwrap();
        let moved = bx.recentered(SpaceTimePoint::new(vec![1.0], bx.center.t).unwrap());
        let b = harnack_ratio_experiment(p, &[bump(1.0)], &moved, &hs, 5, &opts).unwrap();
        assert!((a.max_ratio - b.max_ratio).abs() < 1e-6 * a.max_ratio);
        assert!(a.max_ratio > 1.0);
    }

    #[test]
    fn random_data_are_nonnegative_and_nonzero() {
        let t = GridFunction::centered(2, 16, 4.0).unwrap();
        let mut rng = RngStream::new(1, 0);
        for g in random_boundary_data(&t, 10, &mut rng) {
            assert!(g.min_value() >= 0.0);
            assert!(g.max_abs() > 0.0);
        }
    }
}
