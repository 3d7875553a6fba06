//! Law of the first boundary hit `T_0` of the vertical Brownian motion.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quad::{integrate_breaks, QuadConfig, QuadResult};
use crate::special::erfc;

/// Density `mu_t(s) = t / (2 sqrt(pi)) exp(-t^2 / (4 s)) s^(-3/2)` of `T_0` from height `t`.
pub fn exit_density_mu(t: f64, s: f64) -> f64 {
    if !(s > 0.0) {
        return 0.0;
    }
    let ln = t.ln() - (2.0 * PI.sqrt()).ln() - t * t / (4.0 * s) - 1.5 * s.ln();
    ln.exp()
}

/// Closed-form `P(T_0 <= S) = erfc(t / (2 sqrt S))`.
pub fn exit_cdf_mu(t: f64, s: f64) -> f64 {
    if !(s > 0.0) {
        return 0.0;
    }
    erfc(t / (2.0 * s.sqrt()))
}

fn check(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("height t = {t} must be positive")));
    }
    Ok(())
}

/// Quadrature of `int_0^S mu_t(ds)` in the variable `ln s`.
pub fn exit_cdf_quadrature(t: f64, s: f64, cfg: &QuadConfig) -> Result<QuadResult<f64>> {
    check(t)?;
    let y_lo = (t * t / (4.0 * 700.0)).ln();
    let y_hi = s.ln();
    if !(y_hi > y_lo) {
        return Ok(QuadResult {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
        });
    }
    let mut breaks = vec![y_lo];
    let peak = (t * t / 6.0).ln();
    for b in [peak - 3.0, peak, peak + 3.0, peak + 10.0, peak + 25.0] {
        if b > y_lo && b < y_hi {
            breaks.push(b);
        }
    }
    breaks.push(y_hi);
    let mut f = |y: f64| {
        let s = y.exp();
        exit_density_mu(t, s) * s
    };
    integrate_breaks(&mut f, &breaks, cfg)
}

/// Total mass of `mu_t` by quadrature; the omitted tail beyond the cutoff is below `1e-14`.
pub fn exit_mass_quadrature(t: f64, cfg: &QuadConfig) -> Result<QuadResult<f64>> {
    check(t)?;
    // tail int_S^inf mu_t ~ t / sqrt(pi S) < 1e-15
    let s_max = (t / (1e-15 * PI.sqrt())).powi(2);
    exit_cdf_quadrature(t, s_max, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_value() {
        let v = exit_density_mu(1.0, 1.0);
        assert!((v - (-0.25f64).exp() / (2.0 * PI.sqrt())).abs() < 1e-15);
        assert!((v - 0.219_695_644_733_861).abs() < 1e-12);
    }

    #[test]
    fn extreme_arguments_do_not_overflow() {
        assert_eq!(exit_density_mu(1.0, 1e-6), 0.0);
        assert!(exit_density_mu(1.0, 1e200) > 0.0);
        assert!(exit_density_mu(1e-200, 1e-300).is_finite());
    }

    #[test]
    fn cdf_reference() {
        let v = exit_cdf_mu(1.0, 1.0);
        assert!((v - 0.479_500_122_186_953_5).abs() < 1e-12, "{v}");
    }
}
