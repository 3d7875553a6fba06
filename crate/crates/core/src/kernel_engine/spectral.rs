//! Boundary extension `Q_t f = f * q_t` by spectral multiplication on a padded torus.
//!
//! The multiplier `exp(-t |xi|^(alpha/2))` is applied exactly, so unit mass and the
//! semigroup law hold on the torus to rounding. The only approximation is wrap-around of
//! the polynomial kernel tails across the period; it is bounded pointwise before any
//! compute and the padding grows until the bound meets the tolerance.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, TSlice};
use crate::stable_core::{levy_constant, sphere_area, StableParams};

use super::fft::{frequency, next_fast_size, FftNd};

/// How the finite window is embedded in the computational torus.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum Padding {
    /// Zero-pad until the wrap-around bound meets the tolerance.
    #[default]
    Auto,
    /// Zero-pad each axis by this many points (rounded up to a fast FFT size).
    Points(usize),
    /// Treat the window as one period of periodic data.
    Periodic,
}

/// Which lattice the extension is returned on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OutputDomain {
    #[default]
    Window,
    /// The full torus, origin shifted left by the leading pad.
    Padded,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtendOptions {
    /// Pointwise wrap-around tolerance.
    pub tol: f64,
    pub padding: Padding,
    /// Cap on torus points.
    pub max_points: usize,
    pub output: OutputDomain,
}

impl Default for ExtendOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            padding: Padding::Auto,
            max_points: 1 << 22,
            output: OutputDomain::Window,
        }
    }
}

impl ExtendOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

/// Accuracy bookkeeping for one extension.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtensionDiagnostics {
    /// Pointwise bound on tail contributions wrapped across the period.
    pub wrap_bound: f64,
    /// Kernel mass beyond the pad distance.
    pub escaped_mass: f64,
    /// `exp(-t (pi/h)^(alpha/2))`: size of the symbol at the band edge.
    pub band_residual: f64,
    pub torus: Vec<usize>,
    pub offset: Vec<usize>,
}

/// `sum_{m in Z^d, m != 0} |m|_inf^(-d-gamma)` weighted by shell counts.
fn lattice_zeta(d: usize, gamma: f64) -> f64 {
    let df = d as f64;
    let j_max = 20_000usize;
    let mut s = 0.0;
    for j in 1..=j_max {
        let jf = j as f64;
        let count = (2.0 * jf + 1.0).powi(d as i32) - (2.0 * jf - 1.0).powi(d as i32);
        s += count * jf.powf(-df - gamma);
    }
    let tail = df * 2f64.powi(d as i32) * (j_max as f64 + 0.5).powf(-gamma) / gamma;
    s + tail
}

/// Wrap-around bound for a kernel with tail `c(d,gamma) time |z|^(-d-gamma)` on a torus
/// whose images sit at least `j * gap` away, convolved with data of L1 norm `l1`.
/// A safety factor 2 covers the approach of the density to its asymptote.
pub fn wrap_bound(d: usize, gamma: f64, time: f64, gap: f64, l1: f64) -> f64 {
    if l1 == 0.0 {
        return 0.0;
    }
    if !(gap > 0.0) {
        return f64::INFINITY;
    }
    let c = levy_constant(StableParams::new(d, gamma).expect("index in (0,2)"));
    2.0 * c * time * l1 * lattice_zeta(d, gamma) * gap.powf(-(d as f64) - gamma)
}

/// Mass of the kernel outside the ball of radius `gap`.
pub fn escaped_mass(d: usize, gamma: f64, time: f64, gap: f64) -> f64 {
    if !(gap > 0.0) {
        return 1.0;
    }
    let c = levy_constant(StableParams::new(d, gamma).expect("index in (0,2)"));
    (c * time * sphere_area(d) * gap.powf(-gamma) / gamma).min(1.0)
}

/// A window embedded in a torus, with its forward transform.
pub(crate) struct Torus {
    pub dims: Vec<usize>,
    pub offset: Vec<usize>,
    pub h: f64,
    pub window: Vec<usize>,
    pub window_origin: Vec<f64>,
    pub fft: FftNd,
}

impl Torus {
    pub fn new(window_origin: &[f64], window: &[usize], h: f64, dims: Vec<usize>) -> Self {
        let offset = dims.iter().zip(window).map(|(m, n)| (m - n) / 2).collect();
        let fft = FftNd::new(&dims);
        Self {
            dims,
            offset,
            h,
            window: window.to_vec(),
            window_origin: window_origin.to_vec(),
            fft,
        }
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn torus_origin(&self) -> Vec<f64> {
        self.window_origin
            .iter()
            .zip(&self.offset)
            .map(|(o, k)| o - *k as f64 * self.h)
            .collect()
    }

    /// Torus index of window index `k`.
    pub fn torus_index(&self, k: usize) -> usize {
        let d = self.dims.len();
        let mut rem = k;
        let mut idx = vec![0usize; d];
        for a in (0..d).rev() {
            idx[a] = rem % self.window[a] + self.offset[a];
            rem /= self.window[a];
        }
        let mut t = 0;
        for a in 0..d {
            t = t * self.dims[a] + idx[a];
        }
        t
    }

    pub fn embed(&self, vals: &[f64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.len()];
        for (k, v) in vals.iter().enumerate() {
            buf[self.torus_index(k)] = Complex64::new(*v, 0.0);
        }
        buf
    }

    pub fn restrict(&self, buf: &[Complex64]) -> Vec<f64> {
        let n: usize = self.window.iter().product();
        (0..n).map(|k| buf[self.torus_index(k)].re).collect()
    }

    /// `|xi|^2` for every torus bin.
    pub fn xi_squared(&self) -> Vec<f64> {
        let d = self.dims.len();
        let per_axis: Vec<Vec<f64>> = self
            .dims
            .iter()
            .map(|&m| (0..m).map(|k| frequency(k, m, self.h).powi(2)).collect())
            .collect();
        let mut out = vec![0.0; self.len()];
        let mut idx = vec![0usize; d];
        for (k, o) in out.iter_mut().enumerate() {
            let mut rem = k;
            for a in (0..d).rev() {
                idx[a] = rem % self.dims[a];
                rem /= self.dims[a];
            }
            *o = (0..d).map(|a| per_axis[a][idx[a]]).sum();
        }
        out
    }
}

/// Choose per-axis torus sizes for a kernel with tail index `gamma` at time `time`.
pub(crate) fn plan_padding(
    d: usize,
    gamma: f64,
    time: f64,
    h: f64,
    window: &[usize],
    l1: f64,
    opts: &ExtendOptions,
) -> Result<(Vec<usize>, f64, f64)> {
    let sized = |pad: usize| -> Vec<usize> { window.iter().map(|&n| next_fast_size(n + pad)).collect() };
    let gap_of = |dims: &[usize]| -> f64 {
        dims.iter()
            .zip(window)
            .map(|(m, n)| (m - n) as f64 * h)
            .fold(f64::INFINITY, f64::min)
    };
    match opts.padding {
        Padding::Periodic => Ok((window.to_vec(), 0.0, 0.0)),
        Padding::Points(p) => {
            let dims = sized(p);
            let gap = gap_of(&dims);
            let wb = wrap_bound(d, gamma, time, gap, l1);
            if wb > opts.tol {
                return Err(Error::InsufficientPadding {
                    escaped_mass: escaped_mass(d, gamma, time, gap),
                    wrap_bound: wb,
                    tolerance: opts.tol,
                });
            }
            Ok((dims, wb, escaped_mass(d, gamma, time, gap)))
        }
        Padding::Auto => {
            if l1 == 0.0 {
                return Ok((sized(0), 0.0, 0.0));
            }
            let c = levy_constant(StableParams::new(d, gamma).expect("index in (0,2)"));
            let need = 2.0 * c * time * l1 * lattice_zeta(d, gamma) / opts.tol;
            let gap = need.powf(1.0 / (d as f64 + gamma));
            let pad = (gap / h).ceil();
            let widest = *window.iter().max().expect("nonempty") as f64;
            let cap_side = (opts.max_points as f64).powf(1.0 / d as f64);
            if pad + widest > cap_side {
                let max_pad = (cap_side - widest).max(0.0).floor() as usize;
                let gap_max = max_pad as f64 * h;
                return Err(Error::InsufficientPadding {
                    escaped_mass: escaped_mass(d, gamma, time, gap_max),
                    wrap_bound: wrap_bound(d, gamma, time, gap_max, l1),
                    tolerance: opts.tol,
                });
            }
            let dims = sized(pad as usize);
            let g = gap_of(&dims);
            Ok((dims.clone(), wrap_bound(d, gamma, time, g, l1), escaped_mass(d, gamma, time, g)))
        }
    }
}

/// Spectral representation of boundary data, ready to be extended to any height up to
/// the planning height.
pub struct ExtensionField {
    params: StableParams,
    torus: Torus,
    spectrum: Vec<Complex64>,
    symbol: Vec<f64>,
    diagnostics: ExtensionDiagnostics,
    output: OutputDomain,
}

impl ExtensionField {
    /// Prepare extensions of `f` to heights `t <= t_max`.
    pub fn new(f: &GridFunction, params: StableParams, t_max: f64, opts: &ExtendOptions) -> Result<Self> {
        if f.dim() != params.d() {
            return Err(Error::Shape(format!(
                "grid has {} axes but d = {}",
                f.dim(),
                params.d()
            )));
        }
        if !(t_max > 0.0) {
            return Err(Error::Domain(format!("height {t_max} must be positive")));
        }
        if f.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("boundary data must be finite".into()));
        }
        let nu = params.harmonic_index();
        let h = f.spacing();
        let l1 = f.cell_volume() * f.values().iter().map(|v| v.abs()).sum::<f64>();
        let (dims, wb, esc) = plan_padding(params.d(), nu, t_max, h, f.extent(), l1, opts)?;
        let torus = Torus::new(f.origin(), f.extent(), h, dims);
        let mut spectrum = torus.embed(f.values());
        torus.fft.forward(&mut spectrum);
        let symbol: Vec<f64> = torus.xi_squared().into_iter().map(|x2| x2.powf(nu / 2.0)).collect();
        let band = std::f64::consts::PI / h;
        let diagnostics = ExtensionDiagnostics {
            wrap_bound: wb,
            escaped_mass: esc,
            band_residual: (-t_max * band.powf(nu)).exp(),
            torus: torus.dims.clone(),
            offset: torus.offset.clone(),
        };
        Ok(Self {
            params,
            torus,
            spectrum,
            symbol,
            diagnostics,
            output: opts.output,
        })
    }

    pub fn params(&self) -> StableParams {
        self.params
    }

    pub fn diagnostics(&self) -> &ExtensionDiagnostics {
        &self.diagnostics
    }

    /// Band residual at height `t`.
    pub fn band_residual(&self, t: f64) -> f64 {
        let band = std::f64::consts::PI / self.torus.h;
        (-t * band.powf(self.params.harmonic_index())).exp()
    }

    fn torus_values(&self, t: f64) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = self
            .spectrum
            .iter()
            .zip(&self.symbol)
            .map(|(v, s)| v * (-t * s).exp())
            .collect();
        self.torus.fft.inverse(&mut buf);
        buf
    }

    /// `d/dt Q_t f` on the whole torus, from the symbol `-|xi|^(alpha/2) exp(-t |xi|^(alpha/2))`.
    pub fn time_derivative_torus(&self, t: f64) -> GridFunction {
        let mut buf: Vec<Complex64> = self
            .spectrum
            .iter()
            .zip(&self.symbol)
            .map(|(v, s)| v * (-s * (-t * s).exp()))
            .collect();
        self.torus.fft.inverse(&mut buf);
        let vals = buf.into_iter().map(|c| c.re).collect();
        GridFunction::new(self.torus.torus_origin(), self.torus.h, self.torus.dims.clone(), vals)
            .expect("torus lattice is consistent")
    }

    /// Torus flat index of every window point, in window order.
    pub fn window_indices(&self) -> Vec<usize> {
        let n: usize = self.torus.window.iter().product();
        (0..n).map(|k| self.torus.torus_index(k)).collect()
    }

    /// Empty grid on the original window lattice.
    pub fn window_lattice(&self) -> GridFunction {
        self.window_template(vec![0.0; self.torus.window.iter().product()])
    }

    /// `Q_t f` on the original window.
    pub fn window_values(&self, t: f64) -> Vec<f64> {
        self.torus.restrict(&self.torus_values(t))
    }

    /// `Q_t f` on the whole torus, row-major.
    pub fn torus_grid(&self, t: f64) -> GridFunction {
        let vals = self.torus_values(t).into_iter().map(|c| c.re).collect();
        GridFunction::new(self.torus.torus_origin(), self.torus.h, self.torus.dims.clone(), vals)
            .expect("torus lattice is consistent")
    }

    fn window_template(&self, vals: Vec<f64>) -> GridFunction {
        GridFunction::new(
            self.torus.window_origin.clone(),
            self.torus.h,
            self.torus.window.clone(),
            vals,
        )
        .expect("window lattice is consistent")
    }

    /// `Q_t f` on the configured output lattice.
    pub fn grid(&self, t: f64) -> GridFunction {
        match self.output {
            OutputDomain::Window => self.window_template(self.window_values(t)),
            OutputDomain::Padded => self.torus_grid(t),
        }
    }

    /// Slices of `Q_t f` at each height; base values hold the data itself.
    pub fn slices(&self, heights: &[f64]) -> Result<GridFunction> {
        let base = self.grid_at_zero();
        let slices = heights
            .iter()
            .map(|&t| TSlice {
                t,
                values: self.grid(t).values().to_vec(),
            })
            .collect();
        base.with_slices(slices)
    }

    fn grid_at_zero(&self) -> GridFunction {
        self.grid(0.0)
    }

    /// `Q_t f(x)` at an arbitrary point by the trigonometric sum of the torus interpolant.
    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        let d = self.torus.dims.len();
        let origin = self.torus.torus_origin();
        let phases: Vec<Vec<Complex64>> = (0..d)
            .map(|a| {
                let m = self.torus.dims[a];
                (0..m)
                    .map(|k| Complex64::from_polar(1.0, frequency(k, m, self.torus.h) * (x[a] - origin[a])))
                    .collect()
            })
            .collect();
        let mut acc = Complex64::new(0.0, 0.0);
        let mut idx = vec![0usize; d];
        for (k, (v, s)) in self.spectrum.iter().zip(&self.symbol).enumerate() {
            let mut rem = k;
            let mut ph = Complex64::new(1.0, 0.0);
            for a in (0..d).rev() {
                idx[a] = rem % self.torus.dims[a];
                rem /= self.torus.dims[a];
                ph *= phases[a][idx[a]];
            }
            acc += v * ph * (-t * s).exp();
        }
        acc.re / self.torus.len() as f64
    }
}

impl ExtensionField {
    /// `Q_t f` at every pair of `points` and `heights`, point-major.
    ///
    /// Shares the phase products across heights, so the cost is one pass over the torus
    /// per point and height without transcendental calls.
    pub fn eval_many(&self, points: &[Vec<f64>], heights: &[f64]) -> Vec<f64> {
        let damp: Vec<Vec<f64>> = heights
            .iter()
            .map(|&t| self.symbol.iter().map(|s| (-t * s).exp()).collect())
            .collect();
        let origin = self.torus.torus_origin();
        let d = self.torus.dims.len();
        let m_all = self.torus.len() as f64;
        let per_point = |x: &Vec<f64>| -> Vec<f64> {
            let phases: Vec<Vec<Complex64>> = (0..d)
                .map(|a| {
                    let m = self.torus.dims[a];
                    (0..m)
                        .map(|k| {
                            Complex64::from_polar(1.0, frequency(k, m, self.torus.h) * (x[a] - origin[a]))
                        })
                        .collect()
                })
                .collect();
            let mut weighted = Vec::with_capacity(self.spectrum.len());
            for (k, v) in self.spectrum.iter().enumerate() {
                let mut rem = k;
                let mut ph = Complex64::new(1.0, 0.0);
                for a in (0..d).rev() {
                    ph *= phases[a][rem % self.torus.dims[a]];
                    rem /= self.torus.dims[a];
                }
                weighted.push((v * ph).re);
            }
            damp.iter()
                .map(|e| weighted.iter().zip(e).map(|(w, e)| w * e).sum::<f64>() / m_all)
                .collect::<Vec<f64>>()
        };
        crate::parallel::par_map_slice(points, per_point).into_iter().flatten().collect()
    }
}

/// `Q_t f` on the window with default options.
pub fn extend_grid(f: &GridFunction, params: StableParams, t: f64) -> Result<GridFunction> {
    extend_grid_with(f, params, t, &ExtendOptions::default()).map(|(g, _)| g)
}

pub fn extend_grid_with(
    f: &GridFunction,
    params: StableParams,
    t: f64,
    opts: &ExtendOptions,
) -> Result<(GridFunction, ExtensionDiagnostics)> {
    let field = ExtensionField::new(f, params, t, opts)?;
    Ok((field.grid(t), field.diagnostics.clone()))
}

/// Extensions at several heights sharing one transform.
pub fn extend_grid_slices(
    f: &GridFunction,
    params: StableParams,
    heights: &[f64],
    opts: &ExtendOptions,
) -> Result<GridFunction> {
    let t_max = heights.iter().copied().fold(0.0, f64::max);
    ExtensionField::new(f, params, t_max.max(f64::MIN_POSITIVE), opts)?.slices(heights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(d: usize, n: usize, half: f64) -> GridFunction {
        let mut g = GridFunction::centered(d, n, half).unwrap();
        let vals: Vec<f64> = (0..g.len())
            .map(|k| {
                let x = g.point(k);
                let r2: f64 = x.iter().map(|v| v * v).sum();
                (-r2 / 2.0).exp()
            })
            .collect();
        g.values_mut().copy_from_slice(&vals);
        g
    }

    #[test]
    fn periodic_constant_is_fixed() {
        let p = StableParams::new(1, 1.0).unwrap();
        let g = GridFunction::from_fn(vec![-5.0], 0.1, vec![100], |_| 1.0).unwrap();
        let opts = ExtendOptions {
            padding: Padding::Periodic,
            ..ExtendOptions::default()
        };
        let (out, diag) = extend_grid_with(&g, p, 0.7, &opts).unwrap();
        assert!(out.values().iter().all(|v| (v - 1.0).abs() < 1e-13));
        assert_eq!(diag.wrap_bound, 0.0);
    }

    #[test]
    fn torus_mass_is_conserved() {
        let p = StableParams::new(1, 1.5).unwrap();
        let f = bump(1, 64, 4.0);
        let opts = ExtendOptions {
            output: OutputDomain::Padded,
            ..ExtendOptions::with_tol(1e-4)
        };
        let (out, _) = extend_grid_with(&f, p, 1.0, &opts).unwrap();
        assert!((out.integral() - f.integral()).abs() < 1e-12);
    }

    #[test]
    fn trig_eval_matches_lattice() {
        let p = StableParams::new(2, 1.0).unwrap();
        let f = bump(2, 16, 3.0);
        let field = ExtensionField::new(&f, p, 0.5, &ExtendOptions::with_tol(1e-2)).unwrap();
        let w = field.window_values(0.5);
        for k in [0usize, 17, 100, 255] {
            let x = f.point(k);
            assert!((field.eval(&x, 0.5) - w[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn batched_eval_matches_single() {
        let p = StableParams::new(1, 0.5).unwrap();
        let f = bump(1, 32, 3.0);
        let field = ExtensionField::new(&f, p, 1.0, &ExtendOptions::with_tol(1e-2)).unwrap();
        let pts = vec![vec![0.013], vec![-1.7]];
        let hs = [0.2, 1.0];
        let many = field.eval_many(&pts, &hs);
        for (i, x) in pts.iter().enumerate() {
            for (j, &t) in hs.iter().enumerate() {
                assert!((many[i * 2 + j] - field.eval(x, t)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn padding_failure_names_mass() {
        let p = StableParams::new(1, 0.5).unwrap();
        let f = bump(1, 64, 4.0);
        let opts = ExtendOptions {
            tol: 1e-12,
            max_points: 1 << 12,
            ..ExtendOptions::default()
        };
        let err = extend_grid_with(&f, p, 1.0, &opts).unwrap_err();
        assert!(matches!(err, Error::InsufficientPadding { .. }));
        assert!(err.to_string().contains("escapes"));
    }

    #[test]
    fn explicit_padding_is_checked() {
        let p = StableParams::new(1, 1.0).unwrap();
        let f = bump(1, 64, 4.0);
        let opts = ExtendOptions {
            padding: Padding::Points(4),
            tol: 1e-6,
            ..ExtendOptions::default()
        };
        assert!(extend_grid_with(&f, p, 1.0, &opts).is_err());
    }
}
