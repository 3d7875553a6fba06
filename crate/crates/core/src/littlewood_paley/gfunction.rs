//! Square functions of the harmonic extension: the carré du champ per height, and the
//! vertical, horizontal and combined G-functions integrated against `t dt`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{GridFunction, TSlice};
use crate::kernel_engine::{ExtendOptions, ExtensionField};
use crate::parallel::par_map_slice;
use crate::stable_core::StableParams;

use super::nonlocal::squared_difference_integral;

/// Geometric height grid for `int_0^inf t F(t) dt`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub count: usize,
}

impl Default for TGrid {
    fn default() -> Self {
        Self {
            t_min: 1e-3,
            t_max: 10.0,
            count: 60,
        }
    }
}

impl TGrid {
    pub fn new(t_min: f64, t_max: f64, count: usize) -> Result<Self> {
        if !(t_min > 0.0 && t_max > t_min) {
            return Err(invalid("t_grid", format!("need 0 < t_min < t_max, got [{t_min}, {t_max}]")));
        }
        if count < 2 {
            return Err(invalid("t_grid", "need at least two nodes"));
        }
        Ok(Self { t_min, t_max, count })
    }

    pub fn nodes(&self) -> Vec<f64> {
        let r = (self.t_max / self.t_min).ln() / (self.count - 1) as f64;
        (0..self.count).map(|i| self.t_min * (r * i as f64).exp()).collect()
    }

    /// `sum w_i F(t_i)` approximates `int_{t_min}^{t_max} t F(t) dt`: trapezoid in `ln t`
    /// applied to `t^2 F`.
    pub fn weights(&self) -> Vec<f64> {
        let r = (self.t_max / self.t_min).ln() / (self.count - 1) as f64;
        self.nodes()
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let edge = i == 0 || i + 1 == self.count;
                t * t * r * if edge { 0.5 } else { 1.0 }
            })
            .collect()
    }

    /// Same grid with every height multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            t_min: self.t_min * factor,
            t_max: self.t_max * factor,
            count: self.count,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpOptions {
    pub t_grid: TGrid,
    #[serde(skip, default = "default_extend")]
    pub extend: ExtendOptions,
    /// Allowed size of the exterior-model uncertainty relative to the largest value.
    pub window_tol: f64,
    pub p_list: Vec<f64>,
    /// Jump integrals see the extension this many window widths past each side of the
    /// window; beyond that the exterior model applies.
    pub margin: f64,
}

fn default_extend() -> ExtendOptions {
    ExtendOptions::with_tol(1e-4)
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            t_grid: TGrid::default(),
            extend: default_extend(),
            window_tol: 1e-3,
            p_list: vec![1.25, 1.5, 1.75, 2.0, 3.0],
            margin: 2.0,
        }
    }
}

/// `Gamma(f_t)(x)` and `(d/dt f_t(x))^2` over the window, one slice per height; the
/// base values repeat the lowest slice.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareFunctionField {
    pub gamma_part: GridFunction,
    pub vertical_part: GridFunction,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GFunctionKind {
    Vertical,
    HorizontalFull,
    HorizontalTruncated,
    /// Vertical and full horizontal parts together.
    General,
}

impl GFunctionKind {
    pub fn label(self) -> &'static str {
        match self {
            Self::Vertical => "vertical",
            Self::HorizontalFull => "horizontal-full",
            Self::HorizontalTruncated => "horizontal-truncated",
            Self::General => "general",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GFunctionResult {
    pub values: GridFunction,
    pub kind: GFunctionKind,
    pub p_norms: Vec<(f64, f64)>,
    /// Bound on the omitted `t < t_min` part of `G^2`, sup over the window.
    pub small_t_bound: f64,
    /// Estimate of the omitted `t > t_max` part of `G^2`, sup over the window.
    pub tail_estimate: f64,
    /// Exterior-model uncertainty of `G^2`, sup over the window.
    pub window_estimate: f64,
}

impl GFunctionResult {
    fn from_squares(
        lattice: &GridFunction,
        kind: GFunctionKind,
        squares: Vec<f64>,
        lowest: &[f64],
        highest: &[f64],
        window: f64,
        opts: &LpOptions,
        d: usize,
        alpha: f64,
    ) -> Result<Self> {
        let tg = opts.t_grid;
        let sup = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
        let values = lattice.with_values(squares.iter().map(|s| s.max(0.0).sqrt()).collect())?;
        let p_norms = opts
            .p_list
            .iter()
            .map(|&p| Ok((p, lp_norm(&values, p)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            values,
            kind,
            p_norms,
            small_t_bound: tg.t_min * tg.t_min / 2.0 * sup(lowest),
            // integrands decay like t^(-2 - 4d/alpha) past the data scale
            tail_estimate: tg.t_max * tg.t_max * sup(highest) * alpha / (4.0 * d as f64),
            window_estimate: window,
        })
    }

    pub fn p_norm(&self, p: f64) -> Option<f64> {
        self.p_norms.iter().find(|(q, _)| *q == p).map(|(_, v)| *v)
    }
}

/// Scale of the carre du champ: `Gamma = (c/2) int (f(x+h) - f(x))^2 |h|^(-d-alpha) dh`,
/// so that `2 Gamma(f) = L(f^2) - 2 f L f`.
fn gamma_scale(params: StableParams) -> f64 {
    0.5 * params.levy_constant()
}

fn check_dims(f: &GridFunction, params: StableParams) -> Result<()> {
    if f.dim() != params.d() {
        return Err(Error::Shape(format!("grid has {} axes but d = {}", f.dim(), params.d())));
    }
    if f.dim() > 2 {
        return Err(Error::Shape(format!("square functions are implemented for d <= 2, got d = {}", f.dim())));
    }
    Ok(())
}

/// Carre du champ of `f_t` on its own lattice, over all jump sizes.
pub fn carre_du_champ(f_t: &GridFunction, params: StableParams) -> Result<GridFunction> {
    carre_du_champ_with(f_t, params, None, 1e-3)
}

/// Carre du champ restricted to jumps shorter than `truncation` when given. Fails when the
/// exterior uncertainty exceeds `window_tol` times the largest value.
pub fn carre_du_champ_with(
    f_t: &GridFunction,
    params: StableParams,
    truncation: Option<f64>,
    window_tol: f64,
) -> Result<GridFunction> {
    check_dims(f_t, params)?;
    if f_t.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("f_t must be finite".into()));
    }
    let rho = truncation.unwrap_or(f64::INFINITY);
    if !(rho > 0.0) {
        return Err(invalid("truncation", format!("{rho} must be positive")));
    }
    let at: Vec<usize> = (0..f_t.len()).collect();
    let out = squared_difference_integral(f_t, params.alpha(), rho, &at)?;
    let scale = gamma_scale(params);
    let vals: Vec<f64> = out.values.iter().map(|v| v * scale).collect();
    let top = vals.iter().copied().fold(0.0, f64::max).max(1e-12 * f_t.max_abs().powi(2));
    let estimate = out.window_estimate * scale;
    if estimate > window_tol * top {
        return Err(Error::WindowTruncation {
            estimate,
            tolerance: window_tol * top,
        });
    }
    f_t.with_values(vals)
}

/// Crop of a torus lattice around the window, with the window positions inside the crop.
pub(crate) struct Neighbourhood {
    start: Vec<usize>,
    extent: Vec<usize>,
    pub at: Vec<usize>,
}

impl Neighbourhood {
    pub fn new(field: &ExtensionField, margin: f64) -> Self {
        let diag = field.diagnostics();
        let window = field.window_lattice();
        let mut start = Vec::new();
        let mut extent = Vec::new();
        for a in 0..window.dim() {
            let n = window.extent()[a];
            let m = (margin * n as f64).ceil() as usize;
            let lo = diag.offset[a].saturating_sub(m);
            let hi = (diag.offset[a] + n + m).min(diag.torus[a]);
            start.push(lo);
            extent.push(hi - lo);
        }
        let d = start.len();
        let mut idx = vec![0usize; d];
        let at = (0..window.len())
            .map(|k| {
                window.multi_index(k, &mut idx);
                (0..d).fold(0, |t, a| t * extent[a] + idx[a] + diag.offset[a] - start[a])
            })
            .collect();
        Self { start, extent, at }
    }

    pub fn crop(&self, g: &GridFunction) -> GridFunction {
        let d = self.start.len();
        let n: usize = self.extent.iter().product();
        let mut idx = vec![0usize; d];
        let mut vals = Vec::with_capacity(n);
        for k in 0..n {
            let mut rem = k;
            for a in (0..d).rev() {
                idx[a] = rem % self.extent[a] + self.start[a];
                rem /= self.extent[a];
            }
            vals.push(g.values()[g.flat_index(&idx)]);
        }
        let origin = (0..d).map(|a| g.coord(a, self.start[a])).collect();
        GridFunction::new(origin, g.spacing(), self.extent.clone(), vals).expect("crop of a valid lattice")
    }
}

struct SliceParts {
    vertical: Vec<f64>,
    full: Vec<f64>,
    truncated: Vec<f64>,
    window_full: f64,
    window_truncated: f64,
}

fn slice_parts(field: &ExtensionField, hood: &Neighbourhood, t: f64, truncated: bool) -> Result<SliceParts> {
    let params = field.params();
    let scale = gamma_scale(params);
    let at = &hood.at[..];
    let ft = hood.crop(&field.torus_grid(t));
    let dt = hood.crop(&field.time_derivative_torus(t));
    let vertical = at.iter().map(|&k| dt.values()[k].powi(2)).collect();
    let full = squared_difference_integral(&ft, params.alpha(), f64::INFINITY, at)?;
    let (trunc, wt) = if truncated {
        let rho = t.powf(2.0 / params.alpha());
        let o = squared_difference_integral(&ft, params.alpha(), rho, at)?;
        (o.values.iter().map(|v| v * scale).collect(), o.window_estimate * scale)
    } else {
        (Vec::new(), 0.0)
    };
    Ok(SliceParts {
        vertical,
        full: full.values.iter().map(|v| v * scale).collect(),
        truncated: trunc,
        window_full: full.window_estimate * scale,
        window_truncated: wt,
    })
}

/// All square functions of `f` from a single pass over the height grid.
#[derive(Clone, Debug)]
pub struct GFunctionSet {
    pub field: SquareFunctionField,
    pub vertical: GFunctionResult,
    pub horizontal_full: GFunctionResult,
    pub horizontal_truncated: GFunctionResult,
    pub general: GFunctionResult,
}

/// Compute every G-function of boundary data `f`.
pub fn g_functions(f: &GridFunction, params: StableParams, opts: &LpOptions) -> Result<GFunctionSet> {
    check_dims(f, params)?;
    let nodes = opts.t_grid.nodes();
    let weights = opts.t_grid.weights();
    let field = ExtensionField::new(f, params, opts.t_grid.t_max, &opts.extend)?;
    let hood = Neighbourhood::new(&field, opts.margin);
    let lattice = field.window_lattice();
    let parts = par_map_slice(&nodes, |&t| slice_parts(&field, &hood, t, true));
    let parts: Vec<SliceParts> = parts.into_iter().collect::<Result<_>>()?;
    let n = hood.at.len();
    let integrate = |pick: &dyn Fn(&SliceParts) -> &[f64]| -> Vec<f64> {
        let mut acc = vec![0.0; n];
        for (p, w) in parts.iter().zip(&weights) {
            for (a, v) in acc.iter_mut().zip(pick(p)) {
                *a += w * v;
            }
        }
        acc
    };
    let v2 = integrate(&|p| &p.vertical);
    let f2 = integrate(&|p| &p.full);
    let t2 = integrate(&|p| &p.truncated);
    let g2: Vec<f64> = v2.iter().zip(&f2).map(|(a, b)| a + b).collect();
    let wf: f64 = parts.iter().zip(&weights).map(|(p, w)| w * p.window_full).sum();
    let wt: f64 = parts.iter().zip(&weights).map(|(p, w)| w * p.window_truncated).sum();
    let floor = 1e-12 * f.max_abs().powi(2);
    for (est, vals) in [(wf, &f2), (wt, &t2)] {
        let top = vals.iter().copied().fold(0.0, f64::max).max(floor);
        if est > opts.window_tol * top {
            return Err(Error::WindowTruncation {
                estimate: est,
                tolerance: opts.window_tol * top,
            });
        }
    }
    let (lo, hi) = (&parts[0], &parts[parts.len() - 1]);
    let (d, alpha) = (params.d(), params.alpha());
    let make = |kind, sq: &Vec<f64>, lo: Vec<f64>, hi: Vec<f64>, w: f64| {
        GFunctionResult::from_squares(&lattice, kind, sq.clone(), &lo, &hi, w, opts, d, alpha)
    };
    let sum = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + y).collect::<Vec<f64>>();
    let vertical = make(GFunctionKind::Vertical, &v2, lo.vertical.clone(), hi.vertical.clone(), 0.0)?;
    let horizontal_full = make(GFunctionKind::HorizontalFull, &f2, lo.full.clone(), hi.full.clone(), wf)?;
    let horizontal_truncated =
        make(GFunctionKind::HorizontalTruncated, &t2, lo.truncated.clone(), hi.truncated.clone(), wt)?;
    let general = make(
        GFunctionKind::General,
        &g2,
        sum(&lo.vertical, &lo.full),
        sum(&hi.vertical, &hi.full),
        wf,
    )?;
    let stack = |pick: &dyn Fn(&SliceParts) -> &[f64]| -> Result<GridFunction> {
        let slices = parts
            .iter()
            .zip(&nodes)
            .map(|(p, &t)| TSlice {
                t,
                values: pick(p).to_vec(),
            })
            .collect();
        lattice.with_values(pick(&parts[0]).to_vec())?.with_slices(slices)
    };
    let field = SquareFunctionField {
        gamma_part: stack(&|p| &p.full)?,
        vertical_part: stack(&|p| &p.vertical)?,
    };
    Ok(GFunctionSet {
        field,
        vertical,
        horizontal_full,
        horizontal_truncated,
        general,
    })
}

pub fn square_function_field(f: &GridFunction, params: StableParams, opts: &LpOptions) -> Result<SquareFunctionField> {
    Ok(g_functions(f, params, opts)?.field)
}

pub fn vertical_g(f: &GridFunction, params: StableParams, opts: &LpOptions) -> Result<GFunctionResult> {
    Ok(g_functions(f, params, opts)?.vertical)
}

pub fn horizontal_g(f: &GridFunction, params: StableParams, opts: &LpOptions, truncated: bool) -> Result<GFunctionResult> {
    let set = g_functions(f, params, opts)?;
    Ok(if truncated {
        set.horizontal_truncated
    } else {
        set.horizontal_full
    })
}

/// `G_f` recomputed from a stored field with the same height weights.
pub fn general_g(field: &SquareFunctionField, t_grid: &TGrid, p_list: &[f64]) -> Result<GFunctionResult> {
    let weights = t_grid.weights();
    let gs = field.gamma_part.slices();
    let vs = field.vertical_part.slices();
    if gs.len() != weights.len() || vs.len() != weights.len() {
        return Err(Error::Shape(format!(
            "field has {} heights, grid has {}",
            gs.len(),
            weights.len()
        )));
    }
    let n = field.gamma_part.len();
    let mut sq = vec![0.0; n];
    for ((g, v), w) in gs.iter().zip(vs).zip(&weights) {
        for k in 0..n {
            sq[k] += w * (g.values[k] + v.values[k]);
        }
    }
    let values = field.gamma_part.with_values(sq.iter().map(|s| s.max(0.0).sqrt()).collect())?;
    let p_norms = p_list
        .iter()
        .map(|&p| Ok((p, lp_norm(&values, p)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(GFunctionResult {
        values,
        kind: GFunctionKind::General,
        p_norms,
        small_t_bound: f64::NAN,
        tail_estimate: f64::NAN,
        window_estimate: f64::NAN,
    })
}

/// `(h^d sum |g|^p)^(1/p)`.
pub fn lp_norm(g: &GridFunction, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(invalid("p", format!("{p} must be at least 1")));
    }
    let s: f64 = g.values().iter().map(|v| v.abs().powf(p)).sum();
    Ok((g.cell_volume() * s).powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(n: usize, half: f64) -> GridFunction {
        GridFunction::from_fn(vec![-half], 2.0 * half / (n - 1) as f64, vec![n], |x| (-x[0] * x[0]).exp()).unwrap()
    }

    #[test]
    fn lp_norm_examples() {
        let one = GridFunction::new(vec![0.0, 0.0], 0.3, vec![1, 1], vec![1.0]).unwrap();
        for p in [1.0, 1.5, 4.0] {
            assert!((lp_norm(&one, p).unwrap() - 0.09_f64.powf(1.0 / p)).abs() < 1e-15);
        }
        let two = GridFunction::new(vec![0.0], 0.5, vec![2], vec![1.0, 1.0]).unwrap();
        assert!((lp_norm(&two, 2.0).unwrap() - 1.0).abs() < 1e-15);
        let g = GridFunction::new(vec![0.0], 0.1, vec![3], vec![1.0, -2.0, 0.5]).unwrap();
        let g2 = g.with_values(g.values().iter().map(|v| 2.0 * v).collect()).unwrap();
        assert!((lp_norm(&g2, 1.7).unwrap() - 2.0 * lp_norm(&g, 1.7).unwrap()).abs() < 1e-14);
        assert!(lp_norm(&g, 0.5).is_err());
    }

    #[test]
    fn weights_integrate_powers() {
        let tg = TGrid::new(1e-2, 1.0, 200).unwrap();
        // int t * t dt over [0.01, 1]
        let s: f64 = tg.nodes().iter().zip(tg.weights()).map(|(t, w)| w * t).sum();
        assert!((s - (1.0 - 1e-6) / 3.0).abs() < 1e-3);
    }

    #[test]
    fn gamma_of_constant_vanishes_and_bump_is_even() {
        let p = StableParams::new(1, 1.0).unwrap();
        let c = GridFunction::from_fn(vec![-2.0], 0.1, vec![41], |_| 3.0).unwrap();
        assert!(carre_du_champ(&c, p).unwrap().values().iter().all(|v| v.abs() < 1e-12));
        let b = bump(401, 10.0);
        let g = carre_du_champ(&b, p).unwrap();
        let v = g.values();
        for k in 0..200 {
            assert!((v[k] - v[400 - k]).abs() < 1e-10 * v[k].max(1e-6), "k={k}");
        }
        assert!(v.iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn window_truncation_is_reported() {
        let p = StableParams::new(1, 1.0).unwrap();
        let f = GridFunction::from_fn(vec![-2.0], 0.05, vec![81], |x| x[0]).unwrap();
        assert!(matches!(carre_du_champ(&f, p), Err(Error::WindowTruncation { .. })));
    }

    fn small_opts() -> LpOptions {
        LpOptions {
            t_grid: TGrid::new(1e-3, 10.0, 40).unwrap(),
            ..Default::default()
        }
    }

    #[test]
    fn decomposition_and_ordering() {
        let p = StableParams::new(1, 1.2).unwrap();
        let f = bump(129, 8.0);
        let opts = small_opts();
        let set = g_functions(&f, p, &opts).unwrap();
        let re = general_g(&set.field, &opts.t_grid, &opts.p_list).unwrap();
        let (v, hf, ht, g) = (
            set.vertical.values.values(),
            set.horizontal_full.values.values(),
            set.horizontal_truncated.values.values(),
            re.values.values(),
        );
        for k in 0..v.len() {
            assert!(ht[k] <= hf[k] * (1.0 + 1e-12) + 1e-14);
            let want = (v[k] * v[k] + hf[k] * hf[k]).sqrt();
            assert!((g[k] - want).abs() <= 1e-12 * want.max(1e-12));
            assert!((set.general.values.values()[k] - want).abs() <= 1e-12 * want.max(1e-12));
        }
        for (q, n) in &set.vertical.p_norms {
            assert_eq!(*n, lp_norm(&set.vertical.values, *q).unwrap());
        }
    }

    #[test]
    fn constant_data_have_no_vertical_variation() {
        let p = StableParams::new(1, 1.0).unwrap();
        // one period of constant data
        let f = GridFunction::from_fn(vec![-20.0], 0.25, vec![160], |_| 1.0).unwrap();
        let opts = LpOptions {
            t_grid: TGrid::new(1e-3, 1.0, 20).unwrap(),
            extend: ExtendOptions {
                padding: crate::kernel_engine::Padding::Periodic,
                ..ExtendOptions::default()
            },
            ..Default::default()
        };
        let set = g_functions(&f, p, &opts).unwrap();
        assert!(set.vertical.values.max_abs() < 1e-10);
        assert!(set.horizontal_full.values.max_abs() < 1e-6);
    }

    #[test]
    fn vertical_g_is_dilation_invariant() {
        // f(x / s) with s = lambda^(2/alpha) has G^up(x) = G^up_f(x / s)
        let p = StableParams::new(1, 1.0).unwrap();
        let s = 4.0;
        let f = GridFunction::from_fn(vec![-12.0], 0.1, vec![241], |x| (-x[0] * x[0]).exp()).unwrap();
        let fs = GridFunction::from_fn(vec![-12.0 * s], 0.1 * s, vec![241], |x| (-(x[0] / s).powi(2)).exp()).unwrap();
        let base = LpOptions {
            t_grid: TGrid::new(1e-3, 5.0, 50).unwrap(),
            ..Default::default()
        };
        let lam = 2.0;
        let scaled = LpOptions {
            t_grid: base.t_grid.scaled(lam),
            ..base.clone()
        };
        let a = vertical_g(&f, p, &base).unwrap();
        let b = vertical_g(&fs, p, &scaled).unwrap();
        for k in (60..180).step_by(20) {
            let (x, y) = (a.values.values()[k], b.values.values()[k]);
            assert!((x - y).abs() < 1e-4 * x, "k={k}: {x} vs {y}");
        }
    }
}
