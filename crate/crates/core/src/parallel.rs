//! Deterministic parallel maps: results come back in index order whatever the schedule.

use rayon::prelude::*;

/// Evaluate `f(i)` for `i in 0..n` in parallel and return the results in index order.
pub fn par_map<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..n).into_par_iter().map(f).collect()
}

/// Map over a slice in parallel, keeping order.
pub fn par_map_slice<S: Sync, T: Send>(items: &[S], f: impl Fn(&S) -> T + Sync + Send) -> Vec<T> {
    items.par_iter().map(f).collect()
}

/// Run `f` inside a dedicated pool of `workers` threads (0 means the rayon default).
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    if workers == 0 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_stable_across_pools() {
        let a = with_workers(1, || par_map(1000, |i| (i as f64).sqrt()));
        let b = with_workers(3, || par_map(1000, |i| (i as f64).sqrt()));
        assert_eq!(a, b);
    }
}
