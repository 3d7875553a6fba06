//! The product semigroup `P_s (x) G_s` on space-time lattices, by spectral multiplication.
//!
//! Space-time data are height slices at `t_j = j k`. The vertical direction lives on a
//! symmetric torus: the killed motion uses the odd extension (the image-charge kernel),
//! the free motion extends the data by zero below the boundary.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, TSlice};
use crate::stable_core::StableParams;

use super::fft::{frequency, next_fast_size, FftNd};
use super::spectral::{plan_padding, ExtendOptions, Padding, Torus};

/// Treatment of the vertical motion at the boundary `t = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum VerticalBoundary {
    /// Absorbed at `t = 0`.
    #[default]
    Killed,
    /// Unstopped; data vanish below the boundary.
    Free,
}

#[derive(Clone, Copy, Debug)]
pub struct ProductOptions {
    pub vertical: VerticalBoundary,
    /// Pointwise horizontal wrap-around tolerance.
    pub tol: f64,
    pub periodic_x: bool,
    pub max_points: usize,
    /// For the free motion, also return rows below the boundary.
    pub full_line_output: bool,
}

impl Default for ProductOptions {
    fn default() -> Self {
        Self {
            vertical: VerticalBoundary::Killed,
            tol: 1e-6,
            periodic_x: false,
            max_points: 1 << 23,
            full_line_output: false,
        }
    }
}

/// Space-time data transformed on a torus in `(x, t)`.
pub struct SpaceTimeField {
    x: Torus,
    rows: usize,
    k: f64,
    spectrum: Vec<Complex64>,
    psi_x: Vec<f64>,
    omega2: Vec<f64>,
    out_rows: Vec<i64>,
    vertical: VerticalBoundary,
    x_wrap_bound: f64,
}

/// Integer row indices `t_j / k` of uniformly spaced slices.
fn row_indices(f2: &GridFunction) -> Result<(f64, Vec<i64>)> {
    let sl = f2.slices();
    if sl.len() < 2 {
        return Err(Error::Shape("space-time data need at least two height slices".into()));
    }
    let k = sl[1].t - sl[0].t;
    let mut idx = Vec::with_capacity(sl.len());
    for s in sl {
        let j = (s.t / k).round();
        if (s.t - j * k).abs() > 1e-9 * k {
            return Err(Error::Shape(format!(
                "height {} is not on the lattice t = j*{}",
                s.t, k
            )));
        }
        idx.push(j as i64);
    }
    if idx.windows(2).any(|w| w[1] != w[0] + 1) {
        return Err(Error::Shape("height slices must be uniformly spaced".into()));
    }
    Ok((k, idx))
}

impl SpaceTimeField {
    /// `x_time` sets the horizontal padding (the stable kernel time scale), `t_time` the
    /// longest vertical diffusion time that must not wrap.
    pub fn new(
        f2: &GridFunction,
        params: StableParams,
        x_time: f64,
        t_time: f64,
        opts: &ProductOptions,
    ) -> Result<Self> {
        if f2.dim() != params.d() {
            return Err(Error::Shape(format!("grid has {} axes but d = {}", f2.dim(), params.d())));
        }
        let (k, idx) = row_indices(f2)?;
        let lowest = idx[0];
        if lowest < 0 && opts.vertical == VerticalBoundary::Killed {
            return Err(Error::Shape("killed motion needs data on t >= 0 only".into()));
        }
        let l1 = f2
            .slices()
            .iter()
            .map(|s| f2.cell_volume() * s.values.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let xopts = ExtendOptions {
            tol: opts.tol,
            padding: if opts.periodic_x { Padding::Periodic } else { Padding::Auto },
            max_points: opts.max_points,
            ..ExtendOptions::default()
        };
        let (dims, x_wrap_bound, _) =
            plan_padding(params.d(), params.alpha(), x_time, f2.spacing(), f2.extent(), l1, &xopts)?;
        let x = Torus::new(f2.origin(), f2.extent(), f2.spacing(), dims);
        let top = idx[idx.len() - 1].max(-lowest) as usize;
        let pad_t = (12.0 * t_time.max(0.0).sqrt() / k).ceil() as usize + 8;
        let p = next_fast_size(2 * (top + 1) + 2 * pad_t);
        let nx = x.len();
        if p.saturating_mul(nx) > opts.max_points {
            return Err(Error::InsufficientPadding {
                escaped_mass: 0.0,
                wrap_bound: f64::INFINITY,
                tolerance: opts.tol,
            });
        }
        let wrap = |j: i64| -> usize { j.rem_euclid(p as i64) as usize };
        let mut spectrum = vec![Complex64::new(0.0, 0.0); p * nx];
        for (s, &j) in f2.slices().iter().zip(&idx) {
            let row = x.embed(&s.values);
            match opts.vertical {
                VerticalBoundary::Killed => {
                    if j == 0 {
                        continue;
                    }
                    let (pos, neg) = (wrap(j), wrap(-j));
                    for (c, v) in row.iter().enumerate() {
                        spectrum[pos * nx + c] += v;
                        spectrum[neg * nx + c] -= v;
                    }
                }
                VerticalBoundary::Free => {
                    let pos = wrap(j);
                    for (c, v) in row.iter().enumerate() {
                        spectrum[pos * nx + c] += v;
                    }
                }
            }
        }
        let mut all_dims = vec![p];
        all_dims.extend_from_slice(&x.dims);
        FftNd::new(&all_dims).forward(&mut spectrum);
        let psi_x = x.xi_squared().into_iter().map(|x2| x2.powf(params.alpha() / 2.0)).collect();
        let omega2 = (0..p).map(|j| frequency(j, p, k).powi(2)).collect();
        let n_top = idx[idx.len() - 1];
        let out_rows: Vec<i64> = match (opts.vertical, opts.full_line_output) {
            (VerticalBoundary::Free, true) => (-n_top..=n_top).collect(),
            _ => (lowest.max(0)..=n_top).collect(),
        };
        Ok(Self {
            x,
            rows: p,
            k,
            spectrum,
            psi_x,
            omega2,
            out_rows,
            vertical: opts.vertical,
            x_wrap_bound,
        })
    }

    pub fn x_wrap_bound(&self) -> f64 {
        self.x_wrap_bound
    }

    /// Largest value of `|xi|^alpha + omega^2` on the torus.
    pub fn max_symbol(&self) -> f64 {
        let px = self.psi_x.iter().copied().fold(0.0, f64::max);
        let w2 = self.omega2.iter().copied().fold(0.0, f64::max);
        px + w2
    }

    /// Vertical lattice step.
    pub fn k(&self) -> f64 {
        self.k
    }

    /// Sup-norm bound `(1/N) sum |delta| |f^|` for the change of the output when the
    /// multiplier moves by `delta(|xi|^alpha, omega^2)`.
    pub fn multiplier_error_bound(&self, delta: impl Fn(f64, f64) -> f64) -> f64 {
        let nx = self.x.len();
        let mut acc = 0.0;
        for (r, row) in self.spectrum.chunks(nx).enumerate() {
            let w2 = self.omega2[r];
            for (v, &px) in row.iter().zip(&self.psi_x) {
                acc += delta(px, w2).abs() * v.norm();
            }
        }
        acc / self.spectrum.len() as f64
    }

    /// Apply a real multiplier `m(|xi|^alpha, omega^2)` and return the output rows.
    pub fn apply(&self, m: impl Fn(f64, f64) -> f64) -> GridFunction {
        let nx = self.x.len();
        let mut buf = self.spectrum.clone();
        for (r, row) in buf.chunks_mut(nx).enumerate() {
            let w2 = self.omega2[r];
            for (v, &px) in row.iter_mut().zip(&self.psi_x) {
                *v *= m(px, w2);
            }
        }
        let mut all_dims = vec![self.rows];
        all_dims.extend_from_slice(&self.x.dims);
        FftNd::new(&all_dims).inverse(&mut buf);
        let p = self.rows as i64;
        let slices: Vec<TSlice> = self
            .out_rows
            .iter()
            .map(|&j| {
                let r = j.rem_euclid(p) as usize;
                let mut values = self.x.restrict(&buf[r * nx..(r + 1) * nx]);
                if j == 0 && self.vertical == VerticalBoundary::Killed {
                    values.iter_mut().for_each(|v| *v = 0.0);
                }
                TSlice {
                    t: j as f64 * self.k,
                    values,
                }
            })
            .collect();
        let base = slices
            .iter()
            .find(|s| s.t == 0.0)
            .map(|s| s.values.clone())
            .unwrap_or_else(|| slices[0].values.clone());
        GridFunction::new(
            self.x.window_origin.clone(),
            self.x.h,
            self.x.window.clone(),
            base,
        )
        .and_then(|g| g.with_slices(slices))
        .expect("output lattice is consistent")
    }
}

/// `E f(Y_s, Z_s)` for the product process with the vertical motion killed at `t = 0`.
pub fn apply_heat_semigroup_product(f2: &GridFunction, params: StableParams, s: f64) -> Result<GridFunction> {
    apply_heat_semigroup_product_with(f2, params, s, &ProductOptions::default())
}

pub fn apply_heat_semigroup_product_with(
    f2: &GridFunction,
    params: StableParams,
    s: f64,
    opts: &ProductOptions,
) -> Result<GridFunction> {
    if !(s >= 0.0) {
        return Err(Error::Domain(format!("time {s} must be nonnegative")));
    }
    let field = SpaceTimeField::new(f2, params, s.max(1e-300), s, opts)?;
    Ok(field.apply(|px, w2| (-s * (px + w2)).exp()))
}
