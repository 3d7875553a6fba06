use crate::stable_core::RngStream;

/// Probability that the variance-2 Brownian bridge from `a > 0` to `b > 0` over a step of
/// length `dt` touches zero.
#[inline]
pub fn bridge_crossing_prob(a: f64, b: f64, dt: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        return 1.0;
    }
    (-a * b / dt).exp()
}

/// Vertical barriers of a step: an absorbing floor and an optional ceiling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Barriers {
    pub lo: f64,
    pub hi: f64,
}

/// Which vertical barrier was crossed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Side {
    Lower,
    Upper,
}

impl Barriers {
    pub fn floor(lo: f64) -> Self {
        Self {
            lo,
            hi: f64::INFINITY,
        }
    }

    #[inline]
    fn inside(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }

    /// Probability that the bridge from `a` to `b` over time `h` leaves `(lo, hi)`.
    ///
    /// The two one-sided events are treated as independent, which is exact for a single
    /// barrier and off by `O(exp(-w^2/h))` for a slab of width `w`.
    #[inline]
    pub fn crossing_prob(&self, a: f64, b: f64, h: f64) -> f64 {
        if !self.inside(a) || !self.inside(b) {
            return 1.0;
        }
        let pl = bridge_crossing_prob(a - self.lo, b - self.lo, h);
        let pu = if self.hi.is_finite() {
            bridge_crossing_prob(self.hi - a, self.hi - b, h)
        } else {
            0.0
        };
        1.0 - (1.0 - pl) * (1.0 - pu)
    }

    fn nearer(&self, a: f64, b: f64) -> Side {
        if (a - self.lo) + (b - self.lo) <= (self.hi - a) + (self.hi - b) {
            Side::Lower
        } else {
            Side::Upper
        }
    }
}

const MAX_DEPTH: usize = 48;
const MAX_REJECTIONS: usize = 100_000;

/// First crossing time within `[0, h]` of a bridge from `a` to `b` that is known to leave
/// the slab, located by recursive midpoint refinement.
///
/// Each level draws the bridge midpoint conditional on the interval containing a crossing
/// (rejection with acceptance equal to the crossing probability given the midpoint), then
/// descends into the half that holds the first crossing.
pub(crate) fn first_crossing(
    a: f64,
    b: f64,
    h: f64,
    barriers: Barriers,
    rng: &mut RngStream,
) -> (f64, Side) {
    let (mut l, mut r) = (0.0_f64, h);
    let (mut xl, mut xr) = (a, b);
    for _ in 0..MAX_DEPTH {
        if !barriers.inside(xl) {
            // left endpoint itself sits on or past a barrier
            let side = if xl <= barriers.lo { Side::Lower } else { Side::Upper };
            return (l, side);
        }
        let half = 0.5 * (r - l);
        if half <= h * 1e-13 {
            break;
        }
        let m = l + half;
        let sd = (half).sqrt();
        let mut chosen = None;
        for _ in 0..MAX_REJECTIONS {
            let xm = 0.5 * (xl + xr) + sd * rng.standard_normal();
            let p1 = barriers.crossing_prob(xl, xm, half);
            let p2 = barriers.crossing_prob(xm, xr, half);
            let pc = 1.0 - (1.0 - p1) * (1.0 - p2);
            if rng.uniform() < pc {
                chosen = Some((xm, p1 / pc));
                break;
            }
        }
        let Some((xm, left_share)) = chosen else {
            break;
        };
        if rng.uniform() < left_share {
            r = m;
            xr = xm;
        } else {
            l = m;
            xl = xm;
        }
    }
    let side = if !barriers.inside(xr) {
        if xr <= barriers.lo {
            Side::Lower
        } else {
            Side::Upper
        }
    } else {
        barriers.nearer(xl, xr)
    };
    (0.5 * (l + r), side)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_prob_examples() {
        assert!((bridge_crossing_prob(1e-4, 1e-4, 1.0) - 1.0).abs() < 1e-7);
        assert!((bridge_crossing_prob(1.0, 1.0, 1.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert!(bridge_crossing_prob(1.0, 2.0, 1.0) < bridge_crossing_prob(1.0, 1.0, 1.0));
        assert!(bridge_crossing_prob(1.0, 1.0, 2.0) > bridge_crossing_prob(1.0, 1.0, 1.0));
        assert_eq!(bridge_crossing_prob(-0.1, 1.0, 1.0), 1.0);
    }

    #[test]
    fn crossing_time_lies_in_step() {
        let mut rng = RngStream::new(3, 0);
        let bar = Barriers::floor(0.0);
        for _ in 0..200 {
            let (tau, side) = first_crossing(0.3, -0.2, 0.1, bar, &mut rng);
            assert!(tau > 0.0 && tau <= 0.1);
            assert_eq!(side, Side::Lower);
        }
    }

    #[test]
    fn crossing_time_matches_first_passage_law() {
        // from height a with an unconstrained endpoint, the first-passage time restricted
        // to the step has CDF erfc(a / (2 sqrt(s)))
        let (a, h) = (0.5_f64, 1.0_f64);
        let bar = Barriers::floor(0.0);
        let mut rng = RngStream::new(11, 0);
        let n = 40_000;
        let probe = 0.25;
        let (mut hits, mut early) = (0u64, 0u64);
        for _ in 0..n {
            let b = a + (2.0 * h).sqrt() * rng.standard_normal();
            let p = bar.crossing_prob(a, b, h);
            if rng.uniform() < p {
                hits += 1;
                let (tau, _) = first_crossing(a, b, h, bar, &mut rng);
                if tau <= probe {
                    early += 1;
                }
            }
        }
        let f = |s: f64| libm::erfc(a / (2.0 * s.sqrt()));
        let ph = hits as f64 / n as f64;
        let pe = early as f64 / n as f64;
        let se = |p: f64| (p * (1.0 - p) / n as f64).sqrt();
        assert!((ph - f(h)).abs() < 4.0 * se(f(h)), "{ph} vs {}", f(h));
        assert!((pe - f(probe)).abs() < 4.0 * se(f(probe)), "{pe} vs {}", f(probe));
    }
}
