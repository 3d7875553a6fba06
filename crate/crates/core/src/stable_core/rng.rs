use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

/// A reproducible random stream keyed by `(master_seed, stream_id)`.
///
/// Each stream is an independent ChaCha8 keystream: the master seed fixes the key and the
/// stream id selects the nonce, so parallel tasks draw from disjoint sequences regardless
/// of scheduling.
#[derive(Clone, Debug)]
pub struct RngStream {
    master_seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
        inner.set_stream(stream_id);
        Self {
            master_seed,
            stream_id,
            inner,
        }
    }

    /// Stream for task `index` of a family labelled `tag` under one master seed.
    pub fn for_task(master_seed: u64, tag: u64, index: u64) -> Self {
        Self::new(mix(master_seed ^ mix(tag.wrapping_add(0x9e37_79b9_7f4a_7c15))), index)
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform draw on the open interval (0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    #[inline]
    pub fn exponential(&mut self) -> f64 {
        Exp1.sample(&mut self.inner)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

// splitmix64 finalizer
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_key_same_draws() {
        let mut a = RngStream::new(42, 7);
        let mut b = RngStream::new(42, 7);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn streams_differ() {
        let mut a = RngStream::new(42, 7);
        let mut b = RngStream::new(42, 8);
        let same = (0..64).filter(|_| a.next_u64() == b.next_u64()).count();
        assert_eq!(same, 0);
    }

    #[test]
    fn streams_uncorrelated() {
        let n = 200_000;
        let mut a = RngStream::new(1, 0);
        let mut b = RngStream::new(1, 1);
        let mut sxy = 0.0;
        for _ in 0..n {
            sxy += (a.uniform() - 0.5) * (b.uniform() - 0.5);
        }
        // each product has sd 1/12, so the mean has sd 1/(12 sqrt n)
        let z = sxy / n as f64 * 12.0 * (n as f64).sqrt();
        assert!(z.abs() < 4.0, "z = {z}");
    }

    #[test]
    fn uniform_is_open() {
        let mut a = RngStream::new(3, 3);
        for _ in 0..100_000 {
            let u = a.uniform();
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn task_streams_are_distinct() {
        let mut a = RngStream::for_task(5, 1, 0);
        let mut b = RngStream::for_task(5, 2, 0);
        assert_ne!(a.next_u64(), b.next_u64());
    }
}
