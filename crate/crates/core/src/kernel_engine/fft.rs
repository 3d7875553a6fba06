use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Multi-dimensional complex FFT over a row-major array (last axis fastest).
pub struct FftNd {
    dims: Vec<usize>,
    fwd: Vec<Arc<dyn Fft<f64>>>,
    inv: Vec<Arc<dyn Fft<f64>>>,
}

impl FftNd {
    pub fn new(dims: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            dims: dims.to_vec(),
            fwd: dims.iter().map(|&n| planner.plan_fft_forward(n)).collect(),
            inv: dims.iter().map(|&n| planner.plan_fft_inverse(n)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.fwd);
    }

    /// Inverse transform including the `1/N` normalization.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inv);
        let s = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }

    fn run(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        assert_eq!(data.len(), self.len());
        let nd = self.dims.len();
        for a in 0..nd {
            let n = self.dims[a];
            let plan = &plans[a];
            if n == 1 {
                continue;
            }
            let stride: usize = self.dims[a + 1..].iter().product();
            let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
            if stride == 1 {
                plan.process_with_scratch(data, &mut scratch);
                continue;
            }
            let block = n * stride;
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            for outer in 0..data.len() / block {
                let base = outer * block;
                for inner in 0..stride {
                    for i in 0..n {
                        line[i] = data[base + i * stride + inner];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for i in 0..n {
                        data[base + i * stride + inner] = line[i];
                    }
                }
            }
        }
    }
}

/// Smallest `m >= n` of the form `2^a 3^b 5^c`.
pub fn next_fast_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut k = m;
        for p in [2, 3, 5] {
            while k % p == 0 {
                k /= p;
            }
        }
        if k == 1 {
            return m;
        }
        m += 1;
    }
}

/// Angular frequency of FFT bin `k` on a torus of `m` points with spacing `h`.
pub fn frequency(k: usize, m: usize, h: f64) -> f64 {
    let kk = if k <= m / 2 { k as f64 } else { k as f64 - m as f64 };
    2.0 * std::f64::consts::PI * kk / (m as f64 * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_2d() {
        let dims = [6, 10];
        let f = FftNd::new(&dims);
        let orig: Vec<Complex64> = (0..60).map(|i| Complex64::new(i as f64, -(i as f64).sin())).collect();
        let mut d = orig.clone();
        f.forward(&mut d);
        f.inverse(&mut d);
        for (a, b) in d.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn separable_mode() {
        // a pure plane wave transforms to a single bin
        let dims = [4, 8];
        let f = FftNd::new(&dims);
        let mut d: Vec<Complex64> = (0..32)
            .map(|k| {
                let (i, j) = (k / 8, k % 8);
                let ph = 2.0 * std::f64::consts::PI * (i as f64 / 4.0 + 3.0 * j as f64 / 8.0);
                Complex64::from_polar(1.0, ph)
            })
            .collect();
        f.forward(&mut d);
        for (k, v) in d.iter().enumerate() {
            let expect = if k == 8 + 3 { 32.0 } else { 0.0 };
            assert!((v.norm() - expect).abs() < 1e-10, "bin {k}");
        }
    }

    #[test]
    fn fast_sizes() {
        assert_eq!(next_fast_size(7), 8);
        assert_eq!(next_fast_size(11), 12);
        assert_eq!(next_fast_size(1000), 1000);
        assert_eq!(next_fast_size(1001), 1024);
    }
}
