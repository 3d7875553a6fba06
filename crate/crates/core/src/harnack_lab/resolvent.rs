//! The lambda-resolvent `U_lambda f(x,t) = E int_0^inf e^(-lambda s) f(X_s) ds` of the
//! product process, by spectral quadrature in `s` and by Monte Carlo.

use serde::{Deserialize, Serialize};

use super::ci::{EstimateCI, DEFAULT_CONFIDENCE};
use super::task_stream;
use crate::error::{invalid, Error, Result};
use crate::grid::{GridFunction, TSlice};
use crate::kernel_engine::{ProductOptions, SpaceTimeField, VerticalBoundary};
use crate::parallel::par_map;
use crate::quad::gauss_legendre;
use crate::stable_core::{sample_stable_increment_into, SpaceTimePoint, StableParams};
use crate::stats::Accumulator;

const TAG_RESOLVENT: u64 = 0x52_45_53;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResolventOptions {
    /// Unstopped motion by default; `Killed` absorbs the vertical motion at `t = 0`.
    pub vertical: VerticalBoundary,
    /// Budget shared by the truncation tail and the horizontal wrap-around.
    pub tol: f64,
    /// Fixed quadrature horizon; required when `lambda = 0`.
    pub horizon: Option<f64>,
    /// Largest horizon chosen automatically before the tail bound is declared unreachable.
    pub max_horizon: f64,
    /// Gauss-Legendre points per panel.
    pub panel_order: usize,
    pub max_points: usize,
    /// For the unstopped motion, also return rows below the boundary.
    pub full_line_output: bool,
}

impl Default for ResolventOptions {
    fn default() -> Self {
        Self {
            vertical: VerticalBoundary::Free,
            tol: 1e-5,
            horizon: None,
            max_horizon: 200.0,
            panel_order: 16,
            max_points: 1 << 23,
            full_line_output: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ResolventOutput {
    pub field: GridFunction,
    pub horizon: f64,
    /// `||f||_inf e^(-lambda S) / lambda`, infinite for `lambda = 0`.
    pub tail_bound: f64,
    /// Sup-norm effect of the s-quadrature rule against the exact truncated multiplier.
    pub rule_error: f64,
    /// Discounted horizontal wrap-around bound.
    pub wrap_bound: f64,
    pub nodes: usize,
}

impl ResolventOutput {
    /// Pointwise error bound of the truncated-and-discretized resolvent.
    pub fn error_bound(&self) -> f64 {
        let tail = if self.tail_bound.is_finite() { self.tail_bound } else { 0.0 };
        tail + self.rule_error + self.wrap_bound
    }
}

fn sup_norm(f2: &GridFunction) -> f64 {
    f2.slices()
        .iter()
        .flat_map(|s| s.values.iter())
        .fold(0.0, |m: f64, v| m.max(v.abs()))
}

// Gauss-Legendre nodes on [0, s1] and doubling panels up to the horizon.
fn s_nodes(first: f64, horizon: f64, order: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(order);
    let mut out = Vec::new();
    let (mut a, mut b) = (0.0, first.min(horizon));
    loop {
        let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
        for (xi, wi) in x.iter().zip(&w) {
            out.push((m + h * xi, h * wi));
        }
        if b >= horizon {
            break;
        }
        a = b;
        b = (2.0 * b).min(horizon);
    }
    out
}

fn quadrature_multiplier(nodes: &[(f64, f64)], rate: f64) -> f64 {
    let mut acc = 0.0;
    for &(s, w) in nodes {
        let e = rate * s;
        if e > 60.0 {
            break;
        }
        acc += w * (-e).exp();
    }
    acc
}

fn exact_truncated(rate: f64, horizon: f64) -> f64 {
    if rate * horizon < 1e-8 {
        horizon * (1.0 - 0.5 * rate * horizon)
    } else {
        -(-rate * horizon).exp_m1() / rate
    }
}

/// Quadrature route: `sum_i w_i e^(-lambda s_i) P_{s_i} f`, applied as one spectral
/// multiplier on a space-time torus.
pub fn resolvent_quadrature(
    f2: &GridFunction,
    params: StableParams,
    lambda: f64,
    opts: &ResolventOptions,
) -> Result<ResolventOutput> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(invalid("lambda", format!("{lambda} must be finite and nonnegative")));
    }
    let fsup = sup_norm(f2);
    let horizon = match (opts.horizon, lambda > 0.0) {
        (Some(s), _) if s > 0.0 => s,
        (Some(s), _) => return Err(invalid("horizon", format!("{s} must be positive"))),
        (None, false) => {
            return Err(invalid("lambda", "lambda = 0 needs an explicit quadrature horizon"))
        }
        (None, true) => {
            let budget = 0.5 * opts.tol;
            let s = if fsup > 0.0 { (fsup / (lambda * budget)).ln().max(0.0) / lambda } else { 0.0 };
            if s > opts.max_horizon {
                return Err(Error::TailBound {
                    bound: fsup * (-lambda * opts.max_horizon).exp() / lambda,
                    tolerance: budget,
                });
            }
            s.max(1.0 / lambda.max(1e-300)).min(opts.max_horizon)
        }
    };
    let tail_bound = if lambda > 0.0 {
        fsup * (-lambda * horizon).exp() / lambda
    } else {
        f64::INFINITY
    };
    let x_time = if lambda > 0.0 {
        (1.0 / (lambda * lambda)).min(0.5 * horizon * horizon)
    } else {
        0.5 * horizon * horizon
    };
    let popts = ProductOptions {
        vertical: opts.vertical,
        tol: 0.5 * opts.tol,
        periodic_x: false,
        max_points: opts.max_points,
        full_line_output: opts.full_line_output,
    };
    let field = SpaceTimeField::new(f2, params, x_time, horizon, &popts)?;
    let first = 0.1 / field.max_symbol().max(lambda).max(1e-300);
    let nodes = s_nodes(first, horizon, opts.panel_order);
    let m = |px: f64, w2: f64| quadrature_multiplier(&nodes, lambda + px + w2);
    let rule_error =
        field.multiplier_error_bound(|px, w2| m(px, w2) - exact_truncated(lambda + px + w2, horizon));
    let out = field.apply(m);
    Ok(ResolventOutput {
        field: out,
        horizon,
        tail_bound,
        rule_error,
        wrap_bound: field.x_wrap_bound(),
        nodes: nodes.len(),
    })
}

/// Monte Carlo route at one point: with an independent exponential clock `tau` of rate
/// `lambda`, `U_lambda f = E f(X_tau) / lambda`.
///
/// Killed paths are weighted by the bridge survival probability of the vertical motion.
pub fn resolvent_mc_at(
    params: StableParams,
    f: &(dyn Fn(&[f64], f64) -> f64 + Sync),
    point: &SpaceTimePoint,
    lambda: f64,
    n: usize,
    seed: u64,
    vertical: VerticalBoundary,
) -> Result<EstimateCI> {
    if !(lambda > 0.0) {
        return Err(invalid("lambda", "the Monte Carlo route needs lambda > 0"));
    }
    if n == 0 {
        return Err(invalid("n", "need at least one path"));
    }
    let vals = par_map(n, |i| {
        let mut rng = task_stream(seed, TAG_RESOLVENT, i);
        let tau = rng.exponential() / lambda;
        let mut y = vec![0.0; params.d()];
        sample_stable_increment_into(params, tau, &mut rng, &mut y);
        for (yi, xi) in y.iter_mut().zip(&point.x) {
            *yi += xi;
        }
        let z = point.t + (2.0 * tau).sqrt() * rng.standard_normal();
        let weight = match vertical {
            VerticalBoundary::Free => 1.0,
            VerticalBoundary::Killed => {
                if z <= 0.0 || point.t <= 0.0 {
                    0.0
                } else {
                    -(-point.t * z / tau).exp_m1()
                }
            }
        };
        if weight == 0.0 {
            0.0
        } else {
            weight * f(&y, z) / lambda
        }
    });
    let acc: Accumulator = vals.into_iter().collect();
    Ok(EstimateCI::from_accumulator(&acc, DEFAULT_CONFIDENCE))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ResolventMethod {
    Quadrature,
    /// Interpolates `f` between lattice points and uses `n` paths per output point.
    MonteCarlo { n: usize, seed: u64 },
}

/// `U_lambda f` on the lattice of `f2`.
pub fn resolvent_apply(
    params: StableParams,
    f2: &GridFunction,
    lambda: f64,
    method: ResolventMethod,
    opts: &ResolventOptions,
) -> Result<GridFunction> {
    match method {
        ResolventMethod::Quadrature => Ok(resolvent_quadrature(f2, params, lambda, opts)?.field),
        ResolventMethod::MonteCarlo { n, seed } => {
            let f = |x: &[f64], t: f64| f2.interpolate_space_time(x, t);
            let mut slices = Vec::with_capacity(f2.slices().len());
            for (j, s) in f2.slices().iter().enumerate() {
                let mut values = Vec::with_capacity(f2.len());
                for k in 0..f2.len() {
                    let p = SpaceTimePoint { x: f2.point(k), t: s.t };
                    let sub = seed ^ ((j as u64) << 32) ^ k as u64;
                    values.push(if s.t <= 0.0 && opts.vertical == VerticalBoundary::Killed {
                        0.0
                    } else {
                        resolvent_mc_at(params, &f, &p, lambda, n, sub, opts.vertical)?.mean
                    });
                }
                slices.push(TSlice { t: s.t, values });
            }
            let base = slices[0].values.clone();
            f2.with_values(base)?.with_slices(slices)
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub lambda: f64,
    pub beta: f64,
    /// `sup |(beta - lambda) U_lambda U_beta f - (U_lambda f - U_beta f)|` over the probe region.
    pub residual: f64,
    /// Sum of the error bounds of the three resolvents involved.
    pub tolerance: f64,
}

/// Checks `(beta - lambda) U_lambda U_beta = U_lambda - U_beta` with each resolvent
/// computed from lattice data: `U_beta f` is re-sampled on the lattice before `U_lambda`
/// is applied.
///
/// The residual is taken over points at least a quarter of the window from each
/// horizontal edge and in the lower half of the rows, where truncation of `U_beta f` to
/// the window is negligible.
pub fn resolvent_identity(
    f2: &GridFunction,
    params: StableParams,
    lambda: f64,
    beta: f64,
    opts: &ResolventOptions,
) -> Result<IdentityCheck> {
    if !(lambda > 0.0 && beta > lambda) {
        return Err(invalid("beta", "need 0 < lambda < beta"));
    }
    let ul = resolvent_quadrature(f2, params, lambda, opts)?;
    let full = ResolventOptions {
        full_line_output: true,
        ..*opts
    };
    let ub = resolvent_quadrature(f2, params, beta, &full)?;
    let ulub = resolvent_quadrature(&ub.field, params, lambda, opts)?;
    let margin = f2.extent().iter().copied().min().unwrap_or(0) / 4;
    let top = f2.slices().last().map(|s| s.t).unwrap_or(0.0);
    let ub_rows: Vec<&TSlice> = ub.field.slices().iter().collect();
    let mut residual = 0.0_f64;
    for (a, c) in ul.field.slices().iter().zip(ulub.field.slices()) {
        if a.t > 0.5 * top {
            continue;
        }
        let b = ub_rows
            .iter()
            .find(|s| (s.t - a.t).abs() < 1e-9 * (1.0 + top))
            .ok_or_else(|| Error::Shape("resolvent rows do not line up".into()))?;
        for k in 0..f2.len() {
            if !f2.is_interior(k, margin) {
                continue;
            }
            let lhs = (beta - lambda) * c.values[k];
            let rhs = a.values[k] - b.values[k];
            residual = residual.max((lhs - rhs).abs());
        }
    }
    let tolerance = ul.error_bound() + ub.error_bound() + (beta - lambda) * ulub.error_bound();
    Ok(IdentityCheck {
        lambda,
        beta,
        residual,
        tolerance,
    })
}
