use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Error, Result};

/// Spatial dimension `d` and stability index `alpha` of the horizontal process.
///
/// The horizontal component has characteristic function `exp(-t |xi|^alpha)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct StableParams {
    d: usize,
    alpha: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    d: usize,
    alpha: f64,
}

impl TryFrom<RawParams> for StableParams {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        StableParams::new(raw.d, raw.alpha)
    }
}

impl From<StableParams> for RawParams {
    fn from(p: StableParams) -> Self {
        RawParams {
            d: p.d,
            alpha: p.alpha,
        }
    }
}

impl StableParams {
    pub fn new(d: usize, alpha: f64) -> Result<Self> {
        if d == 0 {
            return Err(invalid("d", "dimension must be at least 1"));
        }
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(invalid(
                "alpha",
                format!("{alpha} is outside the open interval (0,2)"),
            ));
        }
        Ok(Self { d, alpha })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Index of the boundary-extension kernel `q_t`, whose symbol is `exp(-t |xi|^(alpha/2))`.
    pub fn harmonic_index(&self) -> f64 {
        self.alpha / 2.0
    }

    pub fn levy_constant(&self) -> f64 {
        levy_constant(*self)
    }

    /// Horizontal half-width of the box of scale `r`.
    pub fn horizontal_scale(&self, r: f64) -> f64 {
        r.powf(2.0 / self.alpha) / 2.0
    }
}

/// Constant `c(d, alpha)` of the Levy measure `c |u|^(-d-alpha) du` that matches the
/// exponent `|xi|^alpha`.
pub fn levy_constant(params: StableParams) -> f64 {
    let d = params.d as f64;
    let a = params.alpha;
    let ln = a.ln() + (a - 1.0) * std::f64::consts::LN_2 + ln_gamma((d + a) / 2.0)
        - 0.5 * d * std::f64::consts::PI.ln()
        - ln_gamma(1.0 - a / 2.0);
    ln.exp()
}

/// Surface area of the unit sphere in `R^d`.
pub fn sphere_area(d: usize) -> f64 {
    let d = d as f64;
    2.0 * (0.5 * d * std::f64::consts::PI.ln() - ln_gamma(d / 2.0)).exp()
}

/// Levy measure of `{|u| > radius}`: the rate of jumps larger than `radius`.
pub fn tail_mass(params: StableParams, radius: f64) -> f64 {
    levy_constant(params) * sphere_area(params.d) * radius.powf(-params.alpha) / params.alpha
}

/// A point `(x, t)` of the closed upper half-space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimePoint {
    pub x: Vec<f64>,
    pub t: f64,
}

impl SpaceTimePoint {
    pub fn new(x: Vec<f64>, t: f64) -> Result<Self> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(invalid("t", format!("height {t} must be finite and nonnegative")));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(invalid("x", "coordinates must be finite"));
        }
        Ok(Self { x, t })
    }

    /// Point at horizontal origin.
    pub fn at_height(d: usize, t: f64) -> Self {
        Self { x: vec![0.0; d], t }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn on_boundary(&self) -> bool {
        self.t == 0.0
    }
}
