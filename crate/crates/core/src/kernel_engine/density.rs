//! Radial densities of isotropic stable laws: Fourier inversion and subordinator mixtures.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::quad::{integrate, integrate_breaks, QuadConfig};
use crate::special::{hankel_h0, ln_gamma};
use crate::stable_core::{levy_constant, StableParams};

use super::exit_law::exit_density_mu;

/// Which quadrature evaluates a density.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DensityRoute {
    /// Radial Fourier inversion along a rotated ray (mixture fallback where ill-conditioned).
    #[default]
    Fourier,
    /// Gaussian mixture over the subordinator law.
    Mixture,
}

#[derive(Clone, Copy, Debug)]
pub struct DensityConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub route: DensityRoute,
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            route: DensityRoute::Fourier,
        }
    }
}

impl DensityConfig {
    pub fn with_route(route: DensityRoute) -> Self {
        Self {
            route,
            ..Self::default()
        }
    }
}

/// A density value with its quadrature error estimate.
#[derive(Clone, Copy, Debug)]
pub struct DensityValue {
    pub value: f64,
    pub abs_error: f64,
}

/// Transition density `p(s, x, y)` of the horizontal process at `r = |x - y|`.
pub fn stable_density(params: StableParams, s: f64, r: f64) -> Result<f64> {
    stable_density_with(params, s, r, &DensityConfig::default()).map(|v| v.value)
}

pub fn stable_density_with(
    params: StableParams,
    s: f64,
    r: f64,
    cfg: &DensityConfig,
) -> Result<DensityValue> {
    if !(s > 0.0) {
        return Err(Error::Domain(format!("time s = {s} must be positive")));
    }
    radial_density(params.d(), params.alpha(), s, r, cfg)
}

/// Boundary-extension kernel `q_t` at radius `r`: the isotropic law with symbol
/// `exp(-t |xi|^(alpha/2))`.
pub fn harmonic_kernel(params: StableParams, t: f64, r: f64) -> Result<f64> {
    harmonic_kernel_with(params, t, r, &DensityConfig::default()).map(|v| v.value)
}

pub fn harmonic_kernel_with(
    params: StableParams,
    t: f64,
    r: f64,
    cfg: &DensityConfig,
) -> Result<DensityValue> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("height t = {t} must be positive")));
    }
    radial_density(params.d(), params.harmonic_index(), t, r, cfg)
}

/// `q_t(r)` as the exit-law mixture `int p(s, r) mu_t(ds)`; slow, used as a cross-check.
pub fn harmonic_kernel_by_exit_law(params: StableParams, t: f64, r: f64, cfg: &DensityConfig) -> Result<DensityValue> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("height t = {t} must be positive")));
    }
    let inner = DensityConfig {
        abs_tol: cfg.abs_tol * 1e-2,
        rel_tol: cfg.rel_tol * 1e-2,
        route: cfg.route,
    };
    let mut failure = None;
    // s = t^2 exp(y); mu_t(s) ds = mu_t(s) s dy
    let f = |y: f64| {
        let s = t * t * y.exp();
        match stable_density_with(params, s, r, &inner) {
            Ok(v) => v.value * exit_density_mu(t, s) * s,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    let mut f = f;
    let res = integrate_breaks(
        &mut f,
        &[-8.0, -3.0, -1.0, 0.0, 2.0, 5.0, 10.0, 20.0, 40.0, 70.0],
        &QuadConfig::new(cfg.abs_tol, cfg.rel_tol),
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let res = res?;
    Ok(DensityValue {
        value: res.value,
        abs_error: res.abs_error,
    })
}

/// `p(s, r) / min(s^(-d/alpha), s r^(-d-alpha))`.
pub fn density_envelope_ratio(params: StableParams, s: f64, r: f64) -> Result<f64> {
    let p = stable_density(params, s, r)?;
    let d = params.d() as f64;
    let a = params.alpha();
    let near = s.powf(-d / a);
    let far = if r > 0.0 { s * r.powf(-d - a) } else { f64::INFINITY };
    Ok(p / near.min(far))
}

/// Large-radius asymptote `c(d, nu) s r^(-d-nu)`.
pub fn tail_asymptote(d: usize, nu: f64, s: f64, r: f64) -> f64 {
    let c = levy_constant(StableParams::new(d, nu).expect("index in (0,2)"));
    c * s * r.powf(-(d as f64) - nu)
}

/// Value at the origin, `Gamma(d/nu) / (nu 2^(d-1) pi^(d/2) Gamma(d/2) s^(d/nu))`.
pub fn density_at_origin(d: usize, nu: f64, s: f64) -> f64 {
    let df = d as f64;
    let ln = ln_gamma(df / nu)
        - nu.ln()
        - (df - 1.0) * std::f64::consts::LN_2
        - 0.5 * df * PI.ln()
        - ln_gamma(df / 2.0)
        - df / nu * s.ln();
    ln.exp()
}

/// Density at radius `r` of the isotropic law on `R^d` with characteristic function
/// `exp(-s |xi|^nu)`, `0 < nu < 2`.
pub fn radial_density(d: usize, nu: f64, s: f64, r: f64, cfg: &DensityConfig) -> Result<DensityValue> {
    if d == 0 {
        return Err(invalid("d", "dimension must be at least 1"));
    }
    if !(nu > 0.0 && nu < 2.0) {
        return Err(invalid("nu", format!("index {nu} outside (0,2)")));
    }
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!("scale {s} must be positive")));
    }
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("radius {r} must be finite and nonnegative")));
    }
    if r == 0.0 {
        return Ok(DensityValue {
            value: density_at_origin(d, nu, s),
            abs_error: 0.0,
        });
    }
    // work at unit scale: p(s, r) = ell^(-d) p(1, r / ell)
    let ell = s.powf(1.0 / nu);
    let x = r / ell;
    let jac = ell.powi(-(d as i32));
    let unit_cfg = DensityConfig {
        abs_tol: cfg.abs_tol / jac,
        ..*cfg
    };
    let unit = match cfg.route {
        DensityRoute::Mixture => mixture_unit(d, nu, x, &unit_cfg)?,
        DensityRoute::Fourier => match d {
            1 | 2 => fourier_unit(d, nu, x, &unit_cfg)?,
            3 if x >= 0.05 => fourier_unit(d, nu, x, &unit_cfg)?,
            3 => match taylor_unit_d3(nu, x) {
                Some(v) => v,
                None => mixture_unit(d, nu, x, &unit_cfg)?,
            },
            _ => mixture_unit(d, nu, x, &unit_cfg)?,
        },
    };
    Ok(DensityValue {
        value: unit.value * jac,
        abs_error: unit.abs_error * jac,
    })
}

fn ray_angle(nu: f64) -> f64 {
    if nu <= 0.5 {
        PI / 2.0
    } else {
        PI / (4.0 * nu)
    }
}

// Fourier inversion at s = 1 along k = rho e^{i theta}, in the variable y = ln rho.
fn fourier_unit(d: usize, nu: f64, x: f64, cfg: &DensityConfig) -> Result<DensityValue> {
    let theta = ray_angle(nu);
    let ray = Complex64::from_polar(1.0, theta);
    let damp = Complex64::from_polar(1.0, nu * theta);
    let decay_nu = (nu * theta).cos();
    let decay_x = x * theta.sin();
    let mut u_max = (52.0 / decay_nu).powf(1.0 / nu);
    if decay_x > 0.0 {
        u_max = u_max.min(52.0 / decay_x);
    }
    let u_lo = match d {
        1 => 1e-15,
        _ => 1e-9,
    } * u_max.min(1.0);
    let (ylo, yhi) = (u_lo.ln(), u_max.ln());
    let mut breaks = vec![ylo];
    for b in [0.0, -x.ln()] {
        if b > ylo + 1e-9 && b < yhi - 1e-9 {
            breaks.push(b);
        }
    }
    breaks.push(yhi);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    // normalization: p = Re/Im(phase * integral) / norm
    let (norm, phase) = match d {
        1 => (PI, ray),
        2 => (2.0 * PI, ray * ray),
        3 => (2.0 * PI * PI * x, ray * ray),
        _ => unreachable!(),
    };
    let qcfg = QuadConfig {
        abs_tol: cfg.abs_tol * norm,
        rel_tol: cfg.rel_tol,
        max_intervals: 4000,
    };
    let mut f = |y: f64| -> Complex64 {
        let u = y.exp();
        let symbol = -(damp * u.powf(nu));
        match d {
            1 => (symbol + Complex64::new(0.0, 1.0) * ray * (u * x)).exp() * u,
            2 => hankel_h0(ray * (u * x)) * symbol.exp() * (u * u),
            _ => (symbol + Complex64::new(0.0, 1.0) * ray * (u * x)).exp() * (u * u),
        }
    };
    let res = integrate_breaks(&mut f, &breaks, &qcfg)?;
    let z = phase * res.value;
    let value = match d {
        3 => z.im,
        _ => z.re,
    } / norm;
    Ok(DensityValue {
        value,
        abs_error: res.abs_error / norm,
    })
}

// p_3(x) = (1/(2 pi^2)) sum_{j>=1} (-1)^{j+1} x^{2j-2} M_{2j} / (2j-1)!,  M_j = Gamma((j+1)/nu)/nu.
fn taylor_unit_d3(nu: f64, x: f64) -> Option<DensityValue> {
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    for j in 1..40 {
        let jf = j as f64;
        let ln_term = ln_gamma((2.0 * jf + 1.0) / nu) - nu.ln() - ln_gamma(2.0 * jf)
            + if j > 1 { (2.0 * jf - 2.0) * x.ln() } else { 0.0 };
        let term = ln_term.exp();
        if term > prev {
            return None;
        }
        prev = term;
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-17 * sum.abs() {
            let c = 1.0 / (2.0 * PI * PI);
            return Some(DensityValue {
                value: c * sum,
                abs_error: c * term,
            });
        }
    }
    None
}

// Mixture route at s = 1: p = (1/pi) int_0^pi du int_0^inf e^{-w} phi_d(B(u) w^{-kappa}, x) dw,
// with B(u) = A(u)^kappa from the Kanter representation of the nu/2 subordinator.
fn mixture_unit(d: usize, nu: f64, x: f64, cfg: &DensityConfig) -> Result<DensityValue> {
    let beta = nu / 2.0;
    let kappa = (1.0 - beta) / beta;
    let df = d as f64;
    let a = kappa * df / 2.0;
    let inner_cfg = QuadConfig {
        abs_tol: 0.0,
        rel_tol: 1e-13,
        max_intervals: 500,
    };
    let mut failure: Option<Error> = None;
    let mut outer = |u: f64| -> f64 {
        let ln_b = (beta * u).sin().ln() + kappa * ((1.0 - beta) * u).sin().ln()
            - u.sin().ln() / beta;
        if !ln_b.is_finite() {
            return 0.0;
        }
        let c = 0.25 * x * x * (-ln_b).exp();
        let ln_pref = -0.5 * df * ((4.0 * PI).ln() + ln_b);
        match gamma_like(a, kappa, c, &inner_cfg) {
            Ok((ln_scale, v)) => (ln_pref + ln_scale).exp() * v / PI,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    let mut breaks = vec![0.0];
    let mut gap = PI / 2.0;
    while gap > PI * 1e-6 {
        breaks.push(PI - gap);
        gap /= 4.0;
    }
    breaks.push(PI);
    let res = integrate_breaks(
        &mut outer,
        &breaks,
        &QuadConfig {
            abs_tol: cfg.abs_tol,
            rel_tol: cfg.rel_tol,
            max_intervals: 3000,
        },
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let res = res?;
    Ok(DensityValue {
        value: res.value,
        abs_error: res.abs_error,
    })
}

// int_0^inf w^a exp(-w - c w^kappa) dw, returned as (log scale, value / exp(scale)).
fn gamma_like(a: f64, kappa: f64, c: f64, cfg: &QuadConfig) -> Result<(f64, f64)> {
    if c == 0.0 {
        return Ok((ln_gamma(a + 1.0), 1.0));
    }
    // exponent in z = ln w, concave with a single maximum
    let phi = |z: f64| (a + 1.0) * z - z.exp() - c * (kappa * z).exp();
    let dphi = |z: f64| (a + 1.0) - z.exp() - c * kappa * (kappa * z).exp();
    let (mut lo, mut hi) = (-50.0, 50.0);
    while dphi(lo) < 0.0 {
        lo -= 50.0;
    }
    while dphi(hi) > 0.0 {
        hi += 50.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dphi(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    let zp = 0.5 * (lo + hi);
    let peak = phi(zp);
    let mut left = 1.0;
    while phi(zp - left) > peak - 46.0 {
        left *= 2.0;
    }
    let mut right = 1.0;
    while phi(zp + right) > peak - 46.0 {
        right *= 2.0;
    }
    let res = integrate(
        |z: f64| (phi(z) - peak).exp(),
        zp - left,
        zp + right,
        cfg,
    )?;
    Ok((peak, res.value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma;

    fn cauchy(d: usize, s: f64, r: f64) -> f64 {
        let df = d as f64;
        gamma((df + 1.0) / 2.0) / PI.powf((df + 1.0) / 2.0) * s / (s * s + r * r).powf((df + 1.0) / 2.0)
    }

    #[test]
    fn origin_value_matches_cauchy() {
        for d in 1..=3 {
            assert!((density_at_origin(d, 1.0, 0.7) - cauchy(d, 0.7, 0.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn fourier_route_hits_cauchy() {
        for d in 1..=3 {
            for &(s, r) in &[(1.0, 1.0), (0.1, 3.0), (10.0, 0.01), (2.0, 10.0), (0.1, 0.001)] {
                let v = radial_density(d, 1.0, s, r, &DensityConfig::default()).unwrap();
                let exact = cauchy(d, s, r);
                assert!((v.value - exact).abs() < 1e-9 * exact.max(1.0), "d={d} s={s} r={r}: {} vs {exact}", v.value);
            }
        }
    }

    #[test]
    fn mixture_route_hits_cauchy() {
        let cfg = DensityConfig::with_route(DensityRoute::Mixture);
        for d in 1..=3 {
            for &(s, r) in &[(1.0, 1.0), (0.5, 2.0), (3.0, 0.2)] {
                let v = radial_density(d, 1.0, s, r, &cfg).unwrap();
                let exact = cauchy(d, s, r);
                assert!((v.value - exact).abs() < 1e-8, "d={d} s={s} r={r}: {} vs {exact}", v.value);
            }
        }
    }

    #[test]
    fn gaussian_limit_shape() {
        // nu close to 2 approaches the Gaussian with variance 2s per axis
        let v = radial_density(1, 1.999, 1.0, 0.5, &DensityConfig::default()).unwrap().value;
        let g = (-(0.5f64).powi(2) / 4.0).exp() / (4.0 * PI).sqrt();
        assert!((v - g).abs() < 2e-3);
    }

    #[test]
    fn routes_agree_off_cauchy() {
        let m = DensityConfig::with_route(DensityRoute::Mixture);
        for &nu in &[0.3, 0.5, 1.5] {
            for d in 1..=3 {
                for &r in &[0.3, 1.0, 4.0] {
                    let a = radial_density(d, nu, 1.0, r, &DensityConfig::default()).unwrap().value;
                    let b = radial_density(d, nu, 1.0, r, &m).unwrap().value;
                    assert!((a - b).abs() < 1e-8 * a.max(1.0), "nu={nu} d={d} r={r}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn envelope_ratio_cauchy_origin() {
        let p = StableParams::new(1, 1.0).unwrap();
        assert!((density_envelope_ratio(p, 1.0, 0.0).unwrap() - 1.0 / PI).abs() < 1e-12);
    }

    #[test]
    fn far_tail() {
        // convergent large-x series for nu < 1, evaluated independently with mpmath
        let v = radial_density(1, 0.5, 1.0, 200.0, &DensityConfig::default()).unwrap().value;
        assert!((v - 6.663_292_552_687_654e-5).abs() < 1e-15);
        let v = radial_density(1, 1.5, 1.0, 200.0, &DensityConfig::default()).unwrap().value;
        let a = tail_asymptote(1, 1.5, 1.0, 200.0);
        assert!((v / a - 1.0).abs() < 0.01, "{v} vs {a}");
    }

    #[test]
    fn domain_errors() {
        let p = StableParams::new(1, 1.0).unwrap();
        assert!(matches!(stable_density(p, 0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(stable_density(p, -1.0, 1.0), Err(Error::Domain(_))));
    }
}
