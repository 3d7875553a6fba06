//! Small statistical helpers shared by the Monte Carlo drivers and the test suites.

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

/// Running mean and variance (Welford), reduced in a fixed order.
#[derive(Clone, Copy, Debug, Default)]
pub struct Accumulator {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        (self.variance() / self.n as f64).sqrt()
    }
}

impl FromIterator<f64> for Accumulator {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Accumulator::default();
        for x in iter {
            acc.push(x);
        }
        acc
    }
}

/// Two-sided standard normal quantile `z` with `P(|N| < z) = confidence`.
pub fn normal_quantile(confidence: f64) -> f64 {
    Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(0.5 + confidence / 2.0)
}

/// Two-sided Student-t quantile with `dof` degrees of freedom.
pub fn t_quantile(confidence: f64, dof: f64) -> f64 {
    if dof > 1e6 {
        return normal_quantile(confidence);
    }
    StudentsT::new(0.0, 1.0, dof)
        .expect("student t")
        .inverse_cdf(0.5 + confidence / 2.0)
}

/// Wilson score interval for `successes` out of `n` trials.
pub fn wilson_interval(successes: u64, n: u64, confidence: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = normal_quantile(confidence);
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Ordinary least squares fit `y = intercept + slope x`.
#[derive(Clone, Copy, Debug)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub rms_residual: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    weighted_linear_fit(x, y, &vec![1.0; x.len()])
}

/// Weighted least squares, weights proportional to inverse variances.
pub fn weighted_linear_fit(x: &[f64], y: &[f64], w: &[f64]) -> LinearFit {
    assert_eq!(x.len(), y.len());
    assert_eq!(x.len(), w.len());
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..x.len() {
        sxx += w[i] * (x[i] - mx) * (x[i] - mx);
        sxy += w[i] * (x[i] - mx) * (y[i] - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss = 0.0;
    let mut wss = 0.0;
    for i in 0..x.len() {
        let r = y[i] - intercept - slope * x[i];
        ss += r * r;
        wss += w[i] * r * r;
    }
    let n = x.len() as f64;
    let dof = (n - 2.0).max(1.0);
    LinearFit {
        slope,
        intercept,
        slope_se: (wss / dof / sxx).sqrt(),
        rms_residual: (ss / n).sqrt(),
    }
}

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut dmax: f64 = 0.0;
    while i < na && j < nb {
        let x = a[i].min(b[j]);
        while i < na && a[i] <= x {
            i += 1;
        }
        while j < nb && b[j] <= x {
            j += 1;
        }
        dmax = dmax.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let ne = (na * nb) as f64 / (na + nb) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * dmax;
    (dmax, kolmogorov_q(lambda))
}

// Q_KS(lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2)
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welford_matches_two_pass() {
        let xs = [1.0, 2.0, 4.0, 8.0, 16.0];
        let acc: Accumulator = xs.iter().copied().collect();
        let m = xs.iter().sum::<f64>() / 5.0;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / 4.0;
        assert!((acc.mean() - m).abs() < 1e-14);
        assert!((acc.variance() - v).abs() < 1e-12);
    }

    #[test]
    fn quantiles() {
        assert!((normal_quantile(0.95) - 1.959_963_984_540_054).abs() < 1e-9);
        assert!((t_quantile(0.95, 10.0) - 2.228_138_851_986_274).abs() < 1e-6);
    }

    #[test]
    fn wilson_contains_rate() {
        let (lo, hi) = wilson_interval(30, 100, 0.99);
        assert!(lo < 0.3 && hi > 0.3 && lo > 0.15 && hi < 0.45);
        let (lo0, _) = wilson_interval(0, 100, 0.99);
        assert_eq!(lo0, 0.0);
    }

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let f = linear_fit(&x, &y);
        assert!((f.slope - 2.0).abs() < 1e-14);
        assert!((f.intercept - 1.0).abs() < 1e-14);
        assert!(f.rms_residual < 1e-14);
    }

    #[test]
    fn ks_identical_and_shifted() {
        let a: Vec<f64> = (0..1000).map(|i| i as f64 / 1000.0).collect();
        let (d, p) = ks_two_sample(&a, &a);
        assert!(d < 1e-12 && p > 0.99);
        let b: Vec<f64> = a.iter().map(|x| x + 0.3).collect();
        let (_, p2) = ks_two_sample(&a, &b);
        assert!(p2 < 1e-6);
    }
}
