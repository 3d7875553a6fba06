//! Shared fixtures for the benchmarks.

use stablelab_core::{GridFunction, StableParams};

pub fn params(d: usize, alpha: f64) -> StableParams {
    StableParams::new(d, alpha).expect("valid parameters")
}

/// Gaussian bump on `n` points per axis over `[-half_width, half_width)^d`.
pub fn bump(d: usize, n: usize, half_width: f64) -> GridFunction {
    let g = GridFunction::centered(d, n, half_width).expect("valid lattice");
    GridFunction::from_fn(g.origin().to_vec(), g.spacing(), g.extent().to_vec(), |x| {
        (-x.iter().map(|v| v * v).sum::<f64>()).exp()
    })
    .expect("valid lattice")
}

#[cfg(test)]
mod tests {
    #[test]
    fn bump_peaks_at_one() {
        let b = super::bump(1, 64, 4.0);
        assert!((b.max_abs() - 1.0).abs() < 1e-12);
    }
}
