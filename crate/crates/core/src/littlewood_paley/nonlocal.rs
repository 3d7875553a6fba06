//! Lattice evaluation of `int K(f(x), f(x+h)) |h|^(-d-alpha) dh` for the square function
//! integrands, with an optional cutoff `|h| < rho`.
//!
//! The lattice sum misses the singular neighbourhood of `h = 0`; the leading part of that
//! loss is restored from the quadratic model `K ~ k(x) (grad f . h)^2`, whose lattice
//! error is computed exactly under a Gaussian damping `exp(-|h|^2 / R^2)` with `R` a few
//! spacings. Beyond the lattice the data are continued by the mean of the edge layer, so
//! constants have no variation; the spread of the edge layer around that mean is what the
//! window-truncation estimate charges for.

use num_complex::Complex64;
use statrs::function::gamma::{gamma, gamma_lr};

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::kernel_engine::{next_fast_size, FftNd};
use crate::quad::{integrate, QuadConfig};
use crate::stable_core::sphere_area;

const DAMPING_SPACINGS: f64 = 3.0;

/// Fraction of the cell at distance `r` inside the ball of radius `rho`.
#[inline]
fn coverage(r: f64, rho: f64, h: f64) -> f64 {
    if rho.is_infinite() {
        1.0
    } else {
        ((rho - r) / h + 0.5).clamp(0.0, 1.0)
    }
}

/// Weight of the kernel outside the box `|h_a| <= b_a` and inside radius `rho`.
fn beyond_box(alpha: f64, b: &[f64], rho: f64) -> Result<f64> {
    let cut = if rho.is_infinite() { 0.0 } else { rho.powf(-alpha) };
    match b.len() {
        1 => Ok(2.0 * (b[0].powf(-alpha) - cut).max(0.0) / alpha),
        2 => {
            let cfg = QuadConfig::default();
            let split = (b[1] / b[0]).atan();
            let g1 = |th: f64| ((b[0] / th.cos()).powf(-alpha) - cut).max(0.0);
            let g2 = |th: f64| ((b[1] / th.sin()).powf(-alpha) - cut).max(0.0);
            let q1 = integrate(g1, 0.0, split, &cfg)?.value;
            let q2 = integrate(g2, split, std::f64::consts::FRAC_PI_2, &cfg)?.value;
            Ok(4.0 * (q1 + q2) / alpha)
        }
        d => Err(Error::Shape(format!("square functions are implemented for d <= 2, got d = {d}"))),
    }
}

fn edge_box(f: &GridFunction) -> Vec<f64> {
    f.extent().iter().map(|&n| (n as f64 - 0.5) * f.spacing()).collect()
}

/// Lattice correction for the quadratic model: `int - h^d sum` of
/// `|h|^(2-d-alpha) cov(|h|) exp(-|h|^2/R^2)`, divided by `d`.
fn model_correction(d: usize, alpha: f64, h: f64, rho: f64) -> f64 {
    let r_damp = DAMPING_SPACINGS * h;
    let a = (2.0 - alpha) / 2.0;
    let upper = if rho.is_infinite() { 1.0 } else { gamma_lr(a, (rho / r_damp).powi(2)) };
    let exact = sphere_area(d) * r_damp.powf(2.0 - alpha) / 2.0 * gamma(a) * upper;
    let m = (6.0 * DAMPING_SPACINGS).ceil() as i64;
    let mut sum = 0.0;
    let mut idx = vec![-m; d];
    loop {
        let r2: f64 = idx.iter().map(|&i| (i as f64 * h).powi(2)).sum();
        if r2 > 0.0 {
            let r = r2.sqrt();
            sum += r.powf(2.0 - d as f64 - alpha) * coverage(r, rho, h) * (-r2 / (r_damp * r_damp)).exp();
        }
        let mut a = 0;
        while a < d {
            idx[a] += 1;
            if idx[a] <= m {
                break;
            }
            idx[a] = -m;
            a += 1;
        }
        if a == d {
            break;
        }
    }
    (exact - h.powi(d as i32) * sum) / d as f64
}

/// Squared gradient by fourth-order centered differences, second order at the edges.
fn grad_squared(f: &GridFunction, k: usize) -> f64 {
    let d = f.dim();
    let h = f.spacing();
    let ext = f.extent();
    let v = f.values();
    let mut idx = vec![0usize; d];
    f.multi_index(k, &mut idx);
    let mut stride = 1usize;
    let mut strides = vec![0usize; d];
    for a in (0..d).rev() {
        strides[a] = stride;
        stride *= ext[a];
    }
    let mut g2 = 0.0;
    for a in 0..d {
        let i = idx[a];
        let s = strides[a];
        let n = ext[a];
        let der = if i >= 2 && i + 2 < n {
            (-v[k + 2 * s] + 8.0 * v[k + s] - 8.0 * v[k - s] + v[k - 2 * s]) / (12.0 * h)
        } else if i >= 1 && i + 1 < n {
            (v[k + s] - v[k - s]) / (2.0 * h)
        } else if i + 1 < n {
            (v[k + s] - v[k]) / h
        } else if i >= 1 {
            (v[k] - v[k - s]) / h
        } else {
            0.0
        };
        g2 += der * der;
    }
    g2
}

/// Values at the requested points and a bound on what the exterior model could change.
pub(crate) struct Nonlocal {
    pub values: Vec<f64>,
    pub window_estimate: f64,
}

/// Mean and spread of the outermost lattice layer.
pub(crate) fn edge_layer(f: &GridFunction) -> (f64, f64) {
    let d = f.dim();
    let ext = f.extent();
    let mut idx = vec![0usize; d];
    let mut vals = Vec::new();
    for (k, v) in f.values().iter().enumerate() {
        f.multi_index(k, &mut idx);
        if idx.iter().zip(ext).any(|(&i, &n)| i == 0 || i + 1 == n) {
            vals.push(*v);
        }
    }
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let spread = vals.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    (mean, spread)
}

/// Kernel weight outside the lattice seen from point `k`, bounded by the ball missing it.
fn outside_weight(f: &GridFunction, k: usize, alpha: f64) -> f64 {
    let d = f.dim();
    let mut idx = vec![0usize; d];
    f.multi_index(k, &mut idx);
    let gap = idx
        .iter()
        .zip(f.extent())
        .map(|(&i, &n)| i.min(n - 1 - i) as f64 + 0.5)
        .fold(f64::INFINITY, f64::min)
        * f.spacing();
    sphere_area(d) * gap.powf(-alpha) / alpha
}

/// `int (f(x+h) - f(x))^2 |h|^(-d-alpha) dh` over `|h| < rho` at the lattice points `at`.
pub(crate) fn squared_difference_integral(f: &GridFunction, alpha: f64, rho: f64, at: &[usize]) -> Result<Nonlocal> {
    let (mean, spread) = edge_layer(f);
    let shifted: Vec<f64> = f.values().iter().map(|v| v - mean).collect();
    let g = f.with_values(shifted)?;
    let values = zero_exterior(&g, alpha, rho, at)?;
    let window_estimate = at
        .iter()
        .map(|&k| (2.0 * g.values()[k].abs() * spread + spread * spread) * outside_weight(f, k, alpha))
        .fold(0.0, f64::max);
    Ok(Nonlocal { values, window_estimate })
}

fn zero_exterior(f: &GridFunction, alpha: f64, rho: f64, at: &[usize]) -> Result<Vec<f64>> {
    let d = f.dim();
    let h = f.spacing();
    let ext = f.extent().to_vec();
    let dims: Vec<usize> = ext.iter().map(|&n| next_fast_size(2 * n)).collect();
    let len: usize = dims.iter().product();
    let fft = FftNd::new(&dims);
    let hd = h.powi(d as i32);
    let mut w = vec![Complex64::new(0.0, 0.0); len];
    let mut w_total = 0.0;
    let mut idx = vec![0usize; d];
    for (k, wk) in w.iter_mut().enumerate() {
        let mut rem = k;
        let mut r2 = 0.0;
        let mut inside = true;
        for a in (0..d).rev() {
            idx[a] = rem % dims[a];
            rem /= dims[a];
            let j = idx[a] as i64;
            let off = if j < ext[a] as i64 { j } else if j > (dims[a] - ext[a]) as i64 { j - dims[a] as i64 } else {
                inside = false;
                0
            };
            r2 += (off as f64 * h).powi(2);
        }
        if inside && r2 > 0.0 {
            let r = r2.sqrt();
            let val = hd * r.powf(-(d as f64) - alpha) * coverage(r, rho, h);
            *wk = Complex64::new(val, 0.0);
            w_total += val;
        }
    }
    w_total += beyond_box(alpha, &edge_box(f), rho)?;
    fft.forward(&mut w);
    let embed = |g: &dyn Fn(f64) -> f64| -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        let mut mi = vec![0usize; d];
        for (k, v) in f.values().iter().enumerate() {
            f.multi_index(k, &mut mi);
            let mut t = 0;
            for a in 0..d {
                t = t * dims[a] + mi[a];
            }
            buf[t] = Complex64::new(g(*v), 0.0);
        }
        buf
    };
    let mut c1 = embed(&|v| v);
    let mut c2 = embed(&|v| v * v);
    fft.forward(&mut c1);
    fft.forward(&mut c2);
    for ((a, b), wk) in c1.iter_mut().zip(c2.iter_mut()).zip(&w) {
        *a *= wk;
        *b *= wk;
    }
    fft.inverse(&mut c1);
    fft.inverse(&mut c2);
    // the corrected integral grows with the cutoff; keep that true of the correction too
    let corr = model_correction(d, alpha, h, rho).min(model_correction(d, alpha, h, f64::INFINITY));
    let mut out = Vec::with_capacity(at.len());
    let mut mi = vec![0usize; d];
    for &k in at {
        f.multi_index(k, &mut mi);
        let mut t = 0;
        for a in 0..d {
            t = t * dims[a] + mi[a];
        }
        let fx = f.values()[k];
        let lattice = c2[t].re - 2.0 * fx * c1[t].re + fx * fx * w_total;
        // rounding of the three large terms can leave a tiny negative remainder
        out.push((lattice + grad_squared(f, k) * corr).max(0.0));
    }
    Ok(out)
}

/// `int max(f(x), f(x+h))^(p-2) (f(x+h) - f(x))^2 |h|^(-1-alpha) dh` on a line, by direct
/// summation over the lattice. `f` must be positive at the points `at`.
pub(crate) fn majorant_integral(f: &GridFunction, alpha: f64, p: f64, at: &[usize]) -> Result<Nonlocal> {
    if f.dim() != 1 {
        return Err(Error::Shape(format!("the majorant is implemented on the line, got d = {}", f.dim())));
    }
    let (mean, spread) = edge_layer(f);
    let h = f.spacing();
    let n = f.len();
    let weight: Vec<f64> = (0..n).map(|j| if j == 0 { 0.0 } else { h * (j as f64 * h).powf(-1.0 - alpha) }).collect();
    let w_box = 2.0 * weight.iter().sum::<f64>();
    let outside = w_box + beyond_box(alpha, &edge_box(f), f64::INFINITY)?;
    let corr = model_correction(1, alpha, h, f64::INFINITY);
    let v = f.values();
    // max(a, b)^(p-2) is the power of whichever is larger, so powers are taken once
    let pw: Vec<f64> = v.iter().map(|&y| if y > 0.0 { y.powf(p - 2.0) } else { f64::INFINITY }).collect();
    let mut out = Vec::with_capacity(at.len());
    let mut est: f64 = 0.0;
    for &k in at {
        let fx = v[k];
        let px = pw[k];
        let mut acc = 0.0;
        let mut covered = 0.0;
        for (j, &fy) in v.iter().enumerate() {
            let w = weight[j.abs_diff(k)];
            let m = if fy > fx { pw[j] } else { px };
            acc += w * m * (fy - fx) * (fy - fx);
            covered += w;
        }
        acc += fx.max(mean).powf(p - 2.0) * (mean - fx).powi(2) * (outside - covered);
        acc += px * grad_squared(f, k) * corr;
        out.push(acc);
        let lo = (mean - spread).max(f64::MIN_POSITIVE).min(fx);
        est = est.max(lo.powf(p - 2.0) * (2.0 * (fx - mean).abs() * spread + spread * spread) * outside_weight(f, k, alpha));
    }
    Ok(Nonlocal {
        values: out,
        window_estimate: est,
    })
}
