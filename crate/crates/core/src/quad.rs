//! Adaptive Gauss-Kronrod quadrature and Gauss-Legendre rules.

use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

// 21-point Kronrod extension of the 10-point Gauss rule (abscissae descending, last is 0).
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_600_525_453,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];
// Gauss weights for the odd-indexed Kronrod abscissae 1, 3, 5, 7, 9.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

/// Values that can be integrated: reals and complex numbers.
pub trait QuadValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync
{
    fn zero() -> Self;
    fn magnitude(self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// Absolute and relative tolerances with an interval budget.
#[derive(Clone, Copy, Debug)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-8,
            rel_tol: 1e-10,
            max_intervals: 2000,
        }
    }
}

impl QuadConfig {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadResult<T> {
    pub value: T,
    pub abs_error: f64,
    pub evaluations: usize,
}

fn gk21<T: QuadValue>(f: &mut impl FnMut(f64) -> T, a: f64, b: f64) -> (T, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[10];
    let mut gauss = T::zero();
    for j in 0..10 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron = kron + s * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + s * WG[j / 2];
        }
    }
    let kron = kron * h;
    let gauss = gauss * h;
    (kron, (kron - gauss).magnitude())
}

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    err: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Globally adaptive integration of `f` over `[a, b]`, bisecting the worst segment.
pub fn integrate<T: QuadValue>(
    mut f: impl FnMut(f64) -> T,
    a: f64,
    b: f64,
    cfg: &QuadConfig,
) -> Result<QuadResult<T>> {
    integrate_breaks(&mut f, &[a, b], cfg)
}

/// As [`integrate`], starting from the given partition of the interval.
pub fn integrate_breaks<T: QuadValue>(
    f: &mut impl FnMut(f64) -> T,
    breaks: &[f64],
    cfg: &QuadConfig,
) -> Result<QuadResult<T>> {
    assert!(breaks.len() >= 2);
    let mut heap = BinaryHeap::new();
    let mut total = T::zero();
    let mut err = 0.0;
    for w in breaks.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        let (v, e) = gk21(f, w[0], w[1]);
        total = total + v;
        err += e;
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value: v,
            err: e,
        });
    }
    let mut evals = 21 * heap.len();
    loop {
        let tol = cfg.abs_tol.max(cfg.rel_tol * total.magnitude());
        if err <= tol {
            break;
        }
        if heap.len() >= cfg.max_intervals {
            return Err(Error::ToleranceNotReached {
                requested: tol,
                achieved: err,
                value: total.magnitude(),
            });
        }
        let Some(seg) = heap.pop() else { break };
        let m = 0.5 * (seg.a + seg.b);
        if m <= seg.a || m >= seg.b {
            // cannot split further in floating point
            return Err(Error::ToleranceNotReached {
                requested: tol,
                achieved: err,
                value: total.magnitude(),
            });
        }
        let (v1, e1) = gk21(f, seg.a, m);
        let (v2, e2) = gk21(f, m, seg.b);
        evals += 42;
        total = total - seg.value + v1 + v2;
        err += e1 + e2 - seg.err;
        heap.push(Segment {
            a: seg.a,
            b: m,
            value: v1,
            err: e1,
        });
        heap.push(Segment {
            a: m,
            b: seg.b,
            value: v2,
            err: e2,
        });
    }
    // re-sum to shed accumulated rounding from the incremental updates
    let mut value = T::zero();
    let mut e = 0.0;
    for s in heap.iter() {
        value = value + s.value;
        e += s.err;
    }
    Ok(QuadResult {
        value,
        abs_error: e,
        evaluations: evals,
    })
}

/// Integral over `[a, inf)` through `x = a + u / (1 - u)`.
pub fn integrate_to_infinity<T: QuadValue>(
    mut f: impl FnMut(f64) -> T,
    a: f64,
    cfg: &QuadConfig,
) -> Result<QuadResult<T>> {
    integrate(
        |u| {
            if u >= 1.0 {
                return T::zero();
            }
            let v = 1.0 - u;
            f(a + u / v) * (1.0 / (v * v))
        },
        0.0,
        1.0,
        cfg,
    )
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_weights_sum_to_two() {
        let s = WGK[10] + 2.0 * WGK[..10].iter().sum::<f64>();
        assert!((s - 2.0).abs() < 1e-15);
        let g = 2.0 * WG.iter().sum::<f64>();
        assert!((g - 2.0).abs() < 1e-15);
    }

    #[test]
    fn kronrod_is_exact_for_high_degree() {
        for deg in [0usize, 5, 19, 30, 31] {
            let (v, _) = gk21(&mut |x: f64| x.powi(deg as i32), 0.0, 1.0);
            assert!((v - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14, "degree {deg}");
        }
    }

    #[test]
    fn gauss_rule_is_exact_for_degree_19() {
        // the embedded 10-point rule
        let mut gauss = 0.0;
        for j in 0..10 {
            if j % 2 == 1 {
                let x = XGK[j];
                gauss += WG[j / 2] * (x.powi(18) + (-x).powi(18));
            }
        }
        assert!((gauss - 2.0 / 19.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let r = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, &QuadConfig::new(1e-10, 1e-12))
            .unwrap();
        assert!((r.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn infinite_range() {
        let r = integrate_to_infinity(|x: f64| (-x).exp(), 0.0, &QuadConfig::new(1e-12, 1e-12))
            .unwrap();
        assert!((r.value - 1.0).abs() < 1e-11);
    }

    #[test]
    fn complex_integrand() {
        let r = integrate(
            |x: f64| Complex64::new(0.0, x).exp(),
            0.0,
            std::f64::consts::PI,
            &QuadConfig::new(1e-13, 1e-13),
        )
        .unwrap();
        assert!((r.value - Complex64::new(0.0, 2.0)).norm() < 1e-12);
    }

    #[test]
    fn reports_failure() {
        let cfg = QuadConfig {
            abs_tol: 1e-300,
            rel_tol: 0.0,
            max_intervals: 4,
        };
        let e = integrate(|x: f64| x.sin() / x.max(1e-300), 0.0, 100.0, &cfg).unwrap_err();
        assert!(matches!(e, Error::ToleranceNotReached { .. }));
    }

    #[test]
    fn legendre_rule() {
        for n in [1usize, 2, 5, 16, 33] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            let deg = 2 * n - 2;
            let s: f64 = x.iter().zip(&w).map(|(a, b)| b * a.powi(deg as i32)).sum();
            assert!((s - 2.0 / (deg as f64 + 1.0)).abs() < 1e-13, "n={n}");
        }
    }
}
