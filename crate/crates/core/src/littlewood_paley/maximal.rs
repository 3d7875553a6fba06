//! Centered Hardy–Littlewood maximal function over Euclidean lattice balls.

use num_complex::Complex64;

use crate::error::Result;
use crate::grid::GridFunction;
use crate::kernel_engine::{next_fast_size, FftNd};

/// Ball radii in lattice units: 0 and the powers of two up to the largest extent.
pub fn dyadic_radii(f: &GridFunction) -> Vec<usize> {
    let top = f.extent().iter().copied().max().unwrap_or(1);
    let mut r = vec![0];
    let mut k = 1;
    while k <= top {
        r.push(k);
        k *= 2;
    }
    r
}

/// `sup_r` of the average of `|f|` over the lattice ball of radius `r h`, for dyadic `r`.
/// Points off the lattice count as zeros.
pub fn maximal_function(f: &GridFunction) -> Result<GridFunction> {
    maximal_function_with_radii(f, &dyadic_radii(f))
}

pub fn maximal_function_with_radii(f: &GridFunction, radii: &[usize]) -> Result<GridFunction> {
    let d = f.dim();
    let ext = f.extent().to_vec();
    let rmax = radii.iter().copied().max().unwrap_or(0);
    let dims: Vec<usize> = ext.iter().map(|&n| next_fast_size(n + rmax + 1)).collect();
    let len: usize = dims.iter().product();
    let fft = FftNd::new(&dims);
    let flat = |idx: &[usize]| idx.iter().zip(&dims).fold(0, |t, (i, m)| t * m + i);
    let mut spec = vec![Complex64::new(0.0, 0.0); len];
    let mut mi = vec![0usize; d];
    for (k, v) in f.values().iter().enumerate() {
        f.multi_index(k, &mut mi);
        spec[flat(&mi)] = Complex64::new(v.abs(), 0.0);
    }
    fft.forward(&mut spec);
    let mut best: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
    for &r in radii.iter().filter(|&&r| r > 0) {
        let mut ball = vec![Complex64::new(0.0, 0.0); len];
        let mut count = 0usize;
        let ri = r as i64;
        let mut off = vec![-ri; d];
        loop {
            if off.iter().map(|o| o * o).sum::<i64>() <= ri * ri {
                let idx: Vec<usize> = off
                    .iter()
                    .zip(&dims)
                    .map(|(&o, &m)| o.rem_euclid(m as i64) as usize)
                    .collect();
                ball[flat(&idx)] = Complex64::new(1.0, 0.0);
                count += 1;
            }
            let mut a = 0;
            while a < d {
                off[a] += 1;
                if off[a] <= ri {
                    break;
                }
                off[a] = -ri;
                a += 1;
            }
            if a == d {
                break;
            }
        }
        fft.forward(&mut ball);
        for (b, s) in ball.iter_mut().zip(&spec) {
            *b *= s;
        }
        fft.inverse(&mut ball);
        for (k, m) in best.iter_mut().enumerate() {
            f.multi_index(k, &mut mi);
            let avg = ball[flat(&mi)].re / count as f64;
            if avg > *m {
                *m = avg;
            }
        }
    }
    f.with_values(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct evaluation over every ball.
    fn brute(f: &GridFunction, radii: &[usize]) -> Vec<f64> {
        let n = f.len() as i64;
        (0..n)
            .map(|i| {
                radii
                    .iter()
                    .map(|&r| {
                        let r = r as i64;
                        let s: f64 = (i - r..=i + r)
                            .filter(|j| (0..n).contains(j))
                            .map(|j| f.values()[j as usize].abs())
                            .sum();
                        s / (2 * r + 1) as f64
                    })
                    .fold(0.0, f64::max)
            })
            .collect()
    }

    #[test]
    fn spike_gives_ball_average() {
        let n = 33;
        let mut v = vec![0.0; n];
        v[16] = 1.0;
        let f = GridFunction::new(vec![-1.6], 0.1, vec![n], v).unwrap();
        let m = maximal_function(&f).unwrap();
        for k in [1usize, 2, 4, 8, 16] {
            let want = 1.0 / (2 * k + 1) as f64;
            assert!((m.values()[16 + k] - want).abs() < 1e-12);
            assert!((m.values()[16 - k] - want).abs() < 1e-12);
        }
        assert!((m.values()[16] - 1.0).abs() < 1e-12);
        let b = brute(&f, &dyadic_radii(&f));
        for (x, y) in m.values().iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn dominates_absolute_value_in_two_dimensions() {
        let f = GridFunction::from_fn(vec![-2.0, -2.0], 0.125, vec![32, 32], |x| (3.0 * x[0]).sin() * x[1].cos()).unwrap();
        let m = maximal_function(&f).unwrap();
        for (a, b) in m.values().iter().zip(f.values()) {
            assert!(*a >= b.abs() - 1e-12);
        }
    }
}
