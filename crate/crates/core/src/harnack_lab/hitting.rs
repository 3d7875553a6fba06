use serde::{Deserialize, Serialize};

use super::ci::{EstimateCI, DEFAULT_CONFIDENCE};
use super::task_stream;
use crate::error::{invalid, Error, Result};
use crate::parallel::par_map;
use crate::simulator::{hits_unchecked, AnisotropicBox, TargetSet};
use crate::stable_core::{SpaceTimePoint, StableParams};
use crate::stats::normal_quantile;

const TAG_HIT: u64 = 0x48_49_54;
const TAG_PHI: u64 = 0x50_48_49;

/// `P(T_K < tau_container)` from `start`.
///
/// The container plays the role of `D_3`: the target must lie in the concentric `D_1`,
/// the start in `D_2`, and `D_6` must stay in the half-space.
pub fn estimate_box_hitting_probability(
    params: StableParams,
    target: &TargetSet,
    start: &SpaceTimePoint,
    container: &AnisotropicBox,
    n: usize,
    dt: f64,
    seed: u64,
) -> Result<EstimateCI> {
    check_hitting_geometry(params, target, start, container)?;
    hitting_probability(params, target, start, container, n, dt, seed, 0)
}

fn check_hitting_geometry(
    params: StableParams,
    target: &TargetSet,
    start: &SpaceTimePoint,
    container: &AnisotropicBox,
) -> Result<()> {
    if start.dim() != params.d() || container.dim() != params.d() {
        return Err(Error::Shape("start, container and parameters disagree on dimension".into()));
    }
    container.scaled(2.0)?.require_half_space("D_6")?;
    if !target.within(params, &container.scaled(1.0 / 3.0)?) {
        return Err(Error::Geometry("target is not contained in D_1".into()));
    }
    if !container.scaled(2.0 / 3.0)?.contains_point(params, start) {
        return Err(Error::Geometry("start point lies outside D_2".into()));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn hitting_probability(
    params: StableParams,
    target: &TargetSet,
    start: &SpaceTimePoint,
    container: &AnisotropicBox,
    n: usize,
    dt: f64,
    seed: u64,
    tag: u64,
) -> Result<EstimateCI> {
    if n == 0 {
        return Err(invalid("n", "need at least one path"));
    }
    if !(dt > 0.0) {
        return Err(invalid("dt", format!("step {dt} must be positive")));
    }
    let hits = par_map(n, |i| {
        let mut rng = task_stream(seed, TAG_HIT ^ tag, i);
        hits_unchecked(params, target, container, start, dt, &mut rng)
    });
    let k = hits.iter().filter(|h| **h).count() as u64;
    Ok(EstimateCI::from_proportion(k, n as u64, DEFAULT_CONFIDENCE))
}

/// Target `E x [a, b]` as fractions of the horizontal and vertical extent of `D_1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetSize {
    pub horizontal_fraction: f64,
    pub vertical_fraction: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HittingRow {
    pub size: TargetSize,
    /// `m(E) (b - a)`.
    pub measure: f64,
    pub estimate: EstimateCI,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HittingSweep {
    pub rows: Vec<HittingRow>,
    /// Smallest `P / (m(E) (b - a))` over the sweep.
    pub c_hat: f64,
    /// The same ratio built from the lower confidence bounds.
    pub c_hat_lower: f64,
}

/// Sweeps centered targets inside `D_1(center)` for a fixed start in `D_2`, with
/// container `D_3`.
pub fn box_hitting_sweep(
    params: StableParams,
    center: &SpaceTimePoint,
    sizes: &[TargetSize],
    start: &SpaceTimePoint,
    n: usize,
    dt: f64,
    seed: u64,
) -> Result<HittingSweep> {
    let d1 = AnisotropicBox::plain(center.clone(), 1.0)?;
    let container = d1.scaled(3.0)?;
    let hw = d1.horizontal_half_width(params);
    let hv = d1.vertical_half_width();
    let mut rows = Vec::with_capacity(sizes.len());
    for (j, size) in sizes.iter().enumerate() {
        let (fh, fv) = (size.horizontal_fraction, size.vertical_fraction);
        if !(fh > 0.0 && fh <= 1.0 && fv > 0.0 && fv <= 1.0) {
            return Err(invalid("sizes", "fractions must lie in (0, 1]"));
        }
        let k = AnisotropicBox::from_half_widths(params, center.clone(), fh * hw, fv * hv)?;
        let target = TargetSet::Box(k.clone());
        check_hitting_geometry(params, &target, start, &container)?;
        let estimate =
            hitting_probability(params, &target, start, &container, n, dt, seed, (j as u64 + 1) << 32)?;
        rows.push(HittingRow {
            size: *size,
            measure: k.horizontal_measure(params) * 2.0 * k.vertical_half_width(),
            estimate,
        });
    }
    let c_hat = rows
        .iter()
        .map(|r| r.estimate.mean / r.measure)
        .fold(f64::INFINITY, f64::min);
    let c_hat_lower = rows
        .iter()
        .map(|r| r.estimate.lower / r.measure)
        .fold(f64::INFINITY, f64::min);
    Ok(HittingSweep {
        rows,
        c_hat,
        c_hat_lower,
    })
}

/// Compact test sets of the Krylov-Safonov family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShapeKind {
    /// One sub-box in a corner of `D_1`.
    SubBox,
    /// Two disjoint sub-boxes in opposite corners.
    TwoBoxes,
    /// `D_1` minus a concentric open box.
    Annulus,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 3] = [ShapeKind::SubBox, ShapeKind::TwoBoxes, ShapeKind::Annulus];
}

fn offset_point(c: &SpaceTimePoint, dx: f64, dt: f64) -> SpaceTimePoint {
    SpaceTimePoint {
        x: c.x.iter().map(|v| v + dx).collect(),
        t: c.t + dt,
    }
}

/// A set of the given kind occupying the fraction `eps` of the volume of `d1`.
pub fn shape_with_fraction(
    params: StableParams,
    d1: &AnisotropicBox,
    kind: ShapeKind,
    eps: f64,
) -> Result<TargetSet> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid("epsilon", format!("measure fraction {eps} must lie in (0,1)")));
    }
    let dd = (params.d() + 1) as f64;
    let hw = d1.horizontal_half_width(params);
    let hv = d1.vertical_half_width();
    let c = &d1.center;
    let boxed = |center: SpaceTimePoint, h: f64, v: f64| -> Result<TargetSet> {
        Ok(TargetSet::Box(AnisotropicBox::from_half_widths(params, center, h, v)?))
    };
    match kind {
        ShapeKind::SubBox => {
            let f = eps.powf(1.0 / dd);
            boxed(offset_point(c, hw * (1.0 - f), -hv * (1.0 - f)), hw * f, hv * f)
        }
        ShapeKind::TwoBoxes => {
            let g = eps.powf(1.0 / dd);
            let v = hv * g / 2.0;
            let lower = boxed(offset_point(c, hw * (1.0 - g), -hv + v), hw * g, v)?;
            let upper = boxed(offset_point(c, -hw * (1.0 - g), hv - v), hw * g, v)?;
            Ok(TargetSet::Union(vec![lower, upper]))
        }
        ShapeKind::Annulus => {
            let f = (1.0 - eps).powf(1.0 / dd);
            let outer = boxed(c.clone(), hw, hv)?;
            let hole = boxed(c.clone(), hw * f, hv * f)?;
            Ok(TargetSet::Minus(Box::new(outer), Box::new(hole)))
        }
    }
}

/// Starts in `D_2(center)`: the center, near the top and bottom faces, and near a
/// horizontal corner.
pub fn default_phi_starts(params: StableParams, center: &SpaceTimePoint) -> Vec<SpaceTimePoint> {
    let d2 = AnisotropicBox {
        center: center.clone(),
        r: 2.0,
        epsilon: 0.0,
        horizontal_stretch: 1.0,
    };
    let hw = d2.horizontal_half_width(params);
    let hv = d2.vertical_half_width();
    vec![
        center.clone(),
        offset_point(center, 0.0, 0.9 * hv),
        offset_point(center, 0.0, -0.9 * hv),
        offset_point(center, 0.9 * hw, 0.0),
    ]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PhiPoint {
    pub epsilon: f64,
    /// The estimate attaining the lower envelope.
    pub estimate: EstimateCI,
    pub shape: ShapeKind,
    pub start: usize,
    /// Every `(shape, start)` estimate, shape-major.
    pub all: Vec<EstimateCI>,
}

/// Empirical Krylov-Safonov function: for each fraction, the smallest estimated
/// probability of hitting a family member before leaving `D_3(center)`.
///
/// Paths for a given `(shape, start)` reuse the same streams across fractions.
#[allow(clippy::too_many_arguments)]
pub fn estimate_phi(
    params: StableParams,
    center: &SpaceTimePoint,
    eps_grid: &[f64],
    shapes: &[ShapeKind],
    starts: &[SpaceTimePoint],
    n: usize,
    dt: f64,
    seed: u64,
) -> Result<Vec<PhiPoint>> {
    if shapes.is_empty() || starts.is_empty() {
        return Err(invalid("shapes", "need at least one shape and one start"));
    }
    let d1 = AnisotropicBox::plain(center.clone(), 1.0)?;
    let container = d1.scaled(3.0)?;
    let mut out = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let mut all = Vec::with_capacity(shapes.len() * starts.len());
        for (si, &kind) in shapes.iter().enumerate() {
            let target = shape_with_fraction(params, &d1, kind, eps)?;
            for (pi, start) in starts.iter().enumerate() {
                check_hitting_geometry(params, &target, start, &container)?;
                let tag = TAG_PHI ^ ((si as u64) << 48) ^ ((pi as u64) << 40);
                all.push(hitting_probability(params, &target, start, &container, n, dt, seed, tag)?);
            }
        }
        let (best, est) = all
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.mean.total_cmp(&b.1.mean))
            .map(|(i, e)| (i, *e))
            .expect("family is nonempty");
        out.push(PhiPoint {
            epsilon: eps,
            estimate: est,
            shape: shapes[best / starts.len()],
            start: best % starts.len(),
            all,
        });
    }
    Ok(out)
}

/// Nondecreasing up to sampling error: no drop between consecutive fractions exceeds the
/// combined `confidence` margin.
pub fn phi_is_monotone(points: &[PhiPoint], confidence: f64) -> bool {
    let z = normal_quantile(confidence);
    points.windows(2).all(|w| {
        let (a, b) = (&w[0].estimate, &w[1].estimate);
        a.mean - b.mean <= z * (a.std_error.powi(2) + b.std_error.powi(2)).sqrt()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (StableParams, SpaceTimePoint) {
        (StableParams::new(1, 1.0).unwrap(), SpaceTimePoint::at_height(1, 3.5))
    }

    #[test]
    fn shapes_have_the_requested_measure() {
        for d in [1usize, 2] {
            let p = StableParams::new(d, 1.5).unwrap();
            let d1 = AnisotropicBox::plain(SpaceTimePoint::at_height(d, 4.0), 1.0).unwrap();
            for kind in ShapeKind::ALL {
                for eps in [0.3, 0.5, 0.8] {
                    let s = shape_with_fraction(p, &d1, kind, eps).unwrap();
                    assert!(s.within(p, &d1));
                    let frac = s.volume(p) / d1.volume(p);
                    assert!((frac - eps).abs() < 1e-12, "{kind:?} {eps} {frac}");
                }
            }
        }
    }

    #[test]
    fn hypotheses_are_enforced() {
        let (p, _) = setup();
        let low = SpaceTimePoint::at_height(1, 2.0);
        let container = AnisotropicBox::plain(low.clone(), 3.0).unwrap();
        let k = TargetSet::Box(AnisotropicBox::plain(low.clone(), 0.5).unwrap());
        assert!(matches!(
            estimate_box_hitting_probability(p, &k, &low, &container, 10, 1e-2, 0),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn larger_container_never_hurts() {
        let (p, c) = setup();
        let k = AnisotropicBox::from_half_widths(p, c.clone(), 0.125, 0.25).unwrap();
        let start = offset_point(&c, 0.0, -0.8);
        let small = AnisotropicBox::plain(c.clone(), 3.0).unwrap();
        let large = AnisotropicBox::plain(c.clone(), 3.4).unwrap();
        // a common stream per path makes the comparison pathwise
        let a = hitting_probability(p, &k.clone().into(), &start, &small, 2000, 1e-2, 5, 0).unwrap();
        let b = hitting_probability(p, &k.into(), &start, &large, 2000, 1e-2, 5, 0).unwrap();
        assert!(b.mean >= a.mean);
    }
}
