//! Norm-ratio experiments over a family of boundary data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::kernel_engine::ExtensionField;
use crate::parallel::par_map_slice;
use crate::stable_core::StableParams;

use super::gfunction::{g_functions, lp_norm, LpOptions, Neighbourhood};
use super::maximal::maximal_function;
use super::nonlocal::majorant_integral;

/// A named boundary datum.
#[derive(Clone, Debug)]
pub struct Datum {
    pub name: String,
    pub grid: GridFunction,
}

/// Indicator, Gaussian bump, difference of bumps and a cut-off power tail, on the
/// lattice `[-half_width, half_width]^d` with `n` points per axis.
pub fn lp_family(d: usize, n: usize, half_width: f64) -> Result<Vec<Datum>> {
    let h = 2.0 * half_width / (n - 1) as f64;
    let mk = |name: &str, f: &dyn Fn(&[f64]) -> f64| -> Result<Datum> {
        Ok(Datum {
            name: name.to_string(),
            grid: GridFunction::from_fn(vec![-half_width; d], h, vec![n; d], f)?,
        })
    };
    let r2 = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
    Ok(vec![
        mk("indicator", &|x| if x.iter().all(|v| v.abs() <= 1.0) { 1.0 } else { 0.0 })?,
        mk("bump", &|x| (-r2(x)).exp())?,
        mk("bump-difference", &|x| {
            let y: Vec<f64> = x.iter().enumerate().map(|(a, v)| if a == 0 { v - 1.5 } else { *v }).collect();
            (-r2(x)).exp() - (-r2(&y) / 0.5).exp()
        })?,
        mk("power-tail", &|x| {
            let r = r2(x).sqrt();
            if r <= 8.0 {
                (1.0 + r).powf(-0.9 * d as f64)
            } else {
                0.0
            }
        })?,
    ])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub datum: String,
    pub p: f64,
    pub f_norm: f64,
    pub truncated: f64,
    /// Recorded only; no bound is claimed for the full horizontal function when `p < 2`.
    pub full: f64,
    pub vertical: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioTable {
    pub rows: Vec<RatioRow>,
    /// Largest truncated ratio per `p`.
    pub max_truncated: Vec<(f64, f64)>,
}

/// `||G||_p / ||f||_p` for each datum, `p` and kind.
pub fn gf_ratio_experiment(family: &[Datum], params: StableParams, p_list: &[f64], opts: &LpOptions) -> Result<RatioTable> {
    let opts = LpOptions {
        p_list: p_list.to_vec(),
        ..opts.clone()
    };
    let per = par_map_slice(family, |datum| -> Result<Vec<RatioRow>> {
        let set = g_functions(&datum.grid, params, &opts)?;
        p_list
            .iter()
            .map(|&p| {
                let f_norm = lp_norm(&datum.grid, p)?;
                if !(f_norm > 0.0) {
                    return Err(Error::Domain(format!("datum {} has zero norm", datum.name)));
                }
                Ok(RatioRow {
                    datum: datum.name.clone(),
                    p,
                    f_norm,
                    truncated: lp_norm(&set.horizontal_truncated.values, p)? / f_norm,
                    full: lp_norm(&set.horizontal_full.values, p)? / f_norm,
                    vertical: lp_norm(&set.vertical.values, p)? / f_norm,
                })
            })
            .collect()
    });
    let mut rows = Vec::new();
    for r in per {
        rows.extend(r?);
    }
    let max_truncated = p_list
        .iter()
        .map(|&p| {
            let m = rows.iter().filter(|r| r.p == p).map(|r| r.truncated).fold(0.0, f64::max);
            (p, m)
        })
        .collect();
    Ok(RatioTable { rows, max_truncated })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MajorantCheck {
    pub p: f64,
    /// `||f||_p^p`.
    pub lhs: f64,
    pub rhs: f64,
}

impl MajorantCheck {
    /// Largest `c` with `lhs >= c rhs`.
    pub fn ratio(&self) -> f64 {
        if self.rhs > 0.0 {
            self.lhs / self.rhs
        } else {
            f64::INFINITY
        }
    }
}

/// `||f||_p^p` against `int t int max(f_t(x), f_t(x+h))^(p-2) (f_t(x+h) - f_t(x))^2
/// |h|^(-d-alpha) dh dt dx` over the window, for data bounded below by a positive floor.
pub fn meyer_majorant_check(f: &GridFunction, params: StableParams, p: f64, opts: &LpOptions) -> Result<MajorantCheck> {
    if !(p > 1.0 && p < 2.0) {
        return Err(crate::error::invalid("p", format!("{p} must lie in (1, 2)")));
    }
    let min = f.min_value();
    if !(min > 0.0) {
        return Err(Error::Positivity { min, floor: 0.0 });
    }
    let field = ExtensionField::new(f, params, opts.t_grid.t_max, &opts.extend)?;
    let hood = Neighbourhood::new(&field, opts.margin);
    let nodes = opts.t_grid.nodes();
    let weights = opts.t_grid.weights();
    let hd = f.cell_volume();
    let per = par_map_slice(&nodes, |&t| -> Result<f64> {
        let ft = hood.crop(&field.torus_grid(t));
        let v = majorant_integral(&ft, params.alpha(), p, &hood.at)?;
        Ok(hd * v.values.iter().sum::<f64>())
    });
    let mut rhs = 0.0;
    for (v, w) in per.into_iter().zip(&weights) {
        rhs += w * v?;
    }
    Ok(MajorantCheck {
        p,
        lhs: lp_norm(f, p)?.powf(p),
        rhs,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domination {
    /// Smallest `c` with `Q_t |f| <= c M f` at every window point and height.
    pub c_hat: f64,
    pub per_height: Vec<(f64, f64)>,
}

/// Fit the constant in `Q_t |f| <= c M f` over the height grid.
pub fn maximal_domination(f: &GridFunction, params: StableParams, opts: &LpOptions) -> Result<Domination> {
    let abs = f.with_values(f.values().iter().map(|v| v.abs()).collect())?;
    let m = maximal_function(&abs)?;
    let field = ExtensionField::new(&abs, params, opts.t_grid.t_max, &opts.extend)?;
    let floor = 1e3 * field.diagnostics().wrap_bound.max(f64::MIN_POSITIVE);
    let per_height: Vec<(f64, f64)> = opts
        .t_grid
        .nodes()
        .into_iter()
        .map(|t| {
            let q = field.window_values(t);
            let r = q
                .iter()
                .zip(m.values())
                .filter(|(_, mv)| **mv > floor)
                .map(|(qv, mv)| qv / mv)
                .fold(0.0, f64::max);
            (t, r)
        })
        .collect();
    let c_hat = per_height.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(Domination { c_hat, per_height })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::littlewood_paley::TGrid;

    fn quick() -> LpOptions {
        LpOptions {
            t_grid: TGrid::new(1e-3, 10.0, 24).unwrap(),
            ..Default::default()
        }
    }

    #[test]
    fn ratios_ignore_scale_and_translation() {
        let p = StableParams::new(1, 1.0).unwrap();
        let h = 0.125;
        let base = GridFunction::from_fn(vec![-8.0], h, vec![129], |x| (-x[0] * x[0]).exp()).unwrap();
        let scaled = base.with_values(base.values().iter().map(|v| 3.0 * v).collect()).unwrap();
        // the window moves with the datum
        let moved = GridFunction::from_fn(vec![-7.0], h, vec![129], |x| (-(x[0] - 1.0).powi(2)).exp()).unwrap();
        let fam = |g: GridFunction| vec![Datum { name: "b".into(), grid: g }];
        let ps = [1.5];
        let a = gf_ratio_experiment(&fam(base), p, &ps, &quick()).unwrap();
        let b = gf_ratio_experiment(&fam(scaled), p, &ps, &quick()).unwrap();
        let c = gf_ratio_experiment(&fam(moved), p, &ps, &quick()).unwrap();
        let (x, y, z) = (a.rows[0].truncated, b.rows[0].truncated, c.rows[0].truncated);
        assert!((x - y).abs() < 1e-6 * x, "{x} vs {y}");
        assert!((x - z).abs() < 1e-6 * x, "{x} vs {z}");
    }

    #[test]
    fn constant_has_zero_majorant() {
        let p = StableParams::new(1, 1.0).unwrap();
        let wide = LpOptions {
            t_grid: TGrid::new(1e-3, 1.0, 8).unwrap(),
            extend: crate::kernel_engine::ExtendOptions::with_tol(1e-6),
            ..Default::default()
        };
        // positive data compared with a constant: only the cut-off edges contribute
        let f = GridFunction::from_fn(vec![-4.0], 0.125, vec![65], |_| 1.0).unwrap();
        let m = meyer_majorant_check(&f, p, 1.5, &wide).unwrap();
        assert!(m.rhs >= 0.0 && m.lhs > 0.0);
        let neg = GridFunction::from_fn(vec![-4.0], 0.125, vec![65], |x| x[0]).unwrap();
        assert!(matches!(meyer_majorant_check(&neg, p, 1.5, &wide), Err(Error::Positivity { .. })));
    }

    #[test]
    fn extension_is_dominated_by_maximal_function() {
        let p = StableParams::new(1, 1.5).unwrap();
        let f = GridFunction::from_fn(vec![-8.0], 0.125, vec![129], |x| if x[0].abs() < 1.0 { 1.0 } else { 0.0 }).unwrap();
        let d = maximal_domination(&f, p, &quick()).unwrap();
        assert!(d.c_hat > 0.0 && d.c_hat < 10.0, "{}", d.c_hat);
    }
}
