use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::stable_core::{SpaceTimePoint, StableParams};

/// The anisotropic box `D_r(center)`: a horizontal cube of half-width `r^(2/alpha)/2`
/// times a vertical interval of half-width `r/2`.
///
/// A positive `epsilon` shrinks the box to its inner part `D^eps_r`, with the horizontal
/// half-width scaled by `1 - eps^(2/alpha)` and the vertical one by `1 - eps`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnisotropicBox {
    pub center: SpaceTimePoint,
    pub r: f64,
    pub epsilon: f64,
    /// Multiplier on the horizontal half-width; 1 for the boxes of the scaling family.
    #[serde(default = "unit")]
    pub horizontal_stretch: f64,
}

fn unit() -> f64 {
    1.0
}

impl AnisotropicBox {
    pub fn new(center: SpaceTimePoint, r: f64, epsilon: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(invalid("r", format!("box scale {r} must be positive")));
        }
        if !(0.0..1.0).contains(&epsilon) {
            return Err(invalid("epsilon", format!("margin {epsilon} must lie in [0,1)")));
        }
        Ok(Self {
            center,
            r,
            epsilon,
            horizontal_stretch: 1.0,
        })
    }

    /// `D_r(center)` without margin.
    pub fn plain(center: SpaceTimePoint, r: f64) -> Result<Self> {
        Self::new(center, r, 0.0)
    }

    /// Concentric box of scale `factor * r` and no margin.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let mut b = Self::new(self.center.clone(), self.r * factor, 0.0)?;
        b.horizontal_stretch = self.horizontal_stretch;
        Ok(b)
    }

    /// The same box with margin `epsilon`.
    pub fn with_margin(&self, epsilon: f64) -> Result<Self> {
        let mut b = Self::new(self.center.clone(), self.r, epsilon)?;
        b.horizontal_stretch = self.horizontal_stretch;
        Ok(b)
    }

    /// Widens the horizontal cube by `factor`, e.g. to isolate the vertical motion.
    pub fn with_horizontal_stretch(mut self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(invalid("horizontal_stretch", format!("{factor} must be positive")));
        }
        self.horizontal_stretch = factor;
        Ok(self)
    }

    /// Box with the given horizontal and vertical half-widths about `center`.
    pub fn from_half_widths(
        params: StableParams,
        center: SpaceTimePoint,
        horizontal: f64,
        vertical: f64,
    ) -> Result<Self> {
        let r = 2.0 * vertical;
        Self::plain(center, r)?.with_horizontal_stretch(horizontal / params.horizontal_scale(r))
    }

    /// Same shape about a new center.
    pub fn recentered(&self, center: SpaceTimePoint) -> Self {
        Self {
            center,
            ..self.clone()
        }
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn horizontal_half_width(&self, params: StableParams) -> f64 {
        let a = params.alpha();
        params.horizontal_scale(self.r) * (1.0 - self.epsilon.powf(2.0 / a)) * self.horizontal_stretch
    }

    pub fn vertical_half_width(&self) -> f64 {
        self.r / 2.0 * (1.0 - self.epsilon)
    }

    /// Closed vertical interval `[lo, hi]`.
    pub fn vertical_interval(&self) -> (f64, f64) {
        let h = self.vertical_half_width();
        (self.center.t - h, self.center.t + h)
    }

    /// True when the whole closed box lies in the closed upper half-space.
    pub fn in_half_space(&self) -> bool {
        self.vertical_interval().0 >= 0.0
    }

    pub fn require_half_space(&self, label: &str) -> Result<()> {
        if self.in_half_space() {
            Ok(())
        } else {
            Err(Error::Geometry(format!(
                "{label} box of scale {} centered at height {} leaves the half-space",
                self.r, self.center.t
            )))
        }
    }

    pub fn contains_horizontal(&self, params: StableParams, x: &[f64]) -> bool {
        let h = self.horizontal_half_width(params);
        x.iter()
            .zip(&self.center.x)
            .all(|(xi, ci)| (xi - ci).abs() <= h)
    }

    pub fn contains(&self, params: StableParams, x: &[f64], t: f64) -> bool {
        let (lo, hi) = self.vertical_interval();
        t >= lo && t <= hi && self.contains_horizontal(params, x)
    }

    pub fn contains_point(&self, params: StableParams, p: &SpaceTimePoint) -> bool {
        self.contains(params, &p.x, p.t)
    }

    /// Lebesgue measure of the horizontal cube.
    pub fn horizontal_measure(&self, params: StableParams) -> f64 {
        (2.0 * self.horizontal_half_width(params)).powi(self.dim() as i32)
    }

    /// Space-time volume.
    pub fn volume(&self, params: StableParams) -> f64 {
        self.horizontal_measure(params) * 2.0 * self.vertical_half_width()
    }
}

/// A compact target built from boxes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TargetSet {
    Box(AnisotropicBox),
    Union(Vec<TargetSet>),
    /// Points of the first set outside the interior of the second.
    Minus(Box<TargetSet>, Box<TargetSet>),
}

impl TargetSet {
    pub fn contains(&self, params: StableParams, x: &[f64], t: f64) -> bool {
        match self {
            TargetSet::Box(b) => b.contains(params, x, t),
            TargetSet::Union(parts) => parts.iter().any(|p| p.contains(params, x, t)),
            TargetSet::Minus(a, b) => a.contains(params, x, t) && !b.contains_open(params, x, t),
        }
    }

    fn contains_open(&self, params: StableParams, x: &[f64], t: f64) -> bool {
        match self {
            TargetSet::Box(b) => {
                let (lo, hi) = b.vertical_interval();
                let h = b.horizontal_half_width(params);
                t > lo
                    && t < hi
                    && x.iter().zip(&b.center.x).all(|(xi, ci)| (xi - ci).abs() < h)
            }
            TargetSet::Union(parts) => parts.iter().any(|p| p.contains_open(params, x, t)),
            TargetSet::Minus(a, b) => a.contains_open(params, x, t) && !b.contains(params, x, t),
        }
    }

    /// Space-time volume, assuming union members are disjoint and subtrahends nested.
    pub fn volume(&self, params: StableParams) -> f64 {
        match self {
            TargetSet::Box(b) => b.volume(params),
            TargetSet::Union(parts) => parts.iter().map(|p| p.volume(params)).sum(),
            TargetSet::Minus(a, b) => a.volume(params) - b.volume(params),
        }
    }
}

impl TargetSet {
    /// True when every point of the set lies in the closed box `outer`.
    pub fn within(&self, params: StableParams, outer: &AnisotropicBox) -> bool {
        match self {
            TargetSet::Box(b) => {
                let (lo, hi) = b.vertical_interval();
                let (olo, ohi) = outer.vertical_interval();
                let h = b.horizontal_half_width(params);
                let oh = outer.horizontal_half_width(params);
                let tol = 1e-12 * (1.0 + oh);
                lo >= olo - tol
                    && hi <= ohi + tol
                    && b.center
                        .x
                        .iter()
                        .zip(&outer.center.x)
                        .all(|(c, o)| (c - o).abs() + h <= oh + tol)
            }
            TargetSet::Union(parts) => parts.iter().all(|p| p.within(params, outer)),
            TargetSet::Minus(a, _) => a.within(params, outer),
        }
    }
}

impl From<AnisotropicBox> for TargetSet {
    fn from(b: AnisotropicBox) -> Self {
        TargetSet::Box(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(d: usize, a: f64) -> StableParams {
        StableParams::new(d, a).unwrap()
    }

    #[test]
    fn half_widths_follow_the_scaling_exponents() {
        let p = params(2, 0.5);
        let b = AnisotropicBox::plain(SpaceTimePoint::at_height(2, 3.0), 2.0).unwrap();
        assert_eq!(b.horizontal_half_width(p), 8.0);
        assert_eq!(b.vertical_half_width(), 1.0);
        assert_eq!(b.vertical_interval(), (2.0, 4.0));
        assert_eq!(b.volume(p), 16.0 * 16.0 * 2.0);
    }

    #[test]
    fn margin_shrinks_both_directions() {
        let p = params(1, 1.0);
        let b = AnisotropicBox::new(SpaceTimePoint::at_height(1, 1.0), 1.0, 0.5).unwrap();
        assert!((b.horizontal_half_width(p) - 0.5 * 0.75).abs() < 1e-15);
        assert!((b.vertical_half_width() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn half_space_condition() {
        let b = AnisotropicBox::plain(SpaceTimePoint::at_height(1, 0.5), 1.0).unwrap();
        assert!(b.in_half_space());
        assert!(!b.scaled(1.01).unwrap().in_half_space());
        assert!(b.scaled(2.0).unwrap().require_half_space("D_2").is_err());
    }

    #[test]
    fn rejects_bad_scale_and_margin() {
        let c = SpaceTimePoint::at_height(1, 1.0);
        assert!(AnisotropicBox::new(c.clone(), 0.0, 0.0).is_err());
        assert!(AnisotropicBox::new(c, 1.0, 1.0).is_err());
    }

    #[test]
    fn explicit_half_widths_round_trip() {
        let p = params(2, 1.5);
        let b = AnisotropicBox::from_half_widths(p, SpaceTimePoint::at_height(2, 2.0), 0.3, 0.2).unwrap();
        assert!((b.horizontal_half_width(p) - 0.3).abs() < 1e-14);
        assert!((b.vertical_half_width() - 0.2).abs() < 1e-14);
        let outer = AnisotropicBox::plain(SpaceTimePoint::at_height(2, 2.0), 1.0).unwrap();
        assert!(TargetSet::Box(b.clone()).within(p, &outer));
        let shifted = b.recentered(SpaceTimePoint::new(vec![0.4, 0.0], 2.0).unwrap());
        assert!(!TargetSet::Box(shifted).within(p, &outer));
    }

    #[test]
    fn annulus_excludes_the_hole() {
        let p = params(1, 1.0);
        let c = SpaceTimePoint::at_height(1, 1.0);
        let outer = AnisotropicBox::plain(c.clone(), 1.0).unwrap();
        let inner = AnisotropicBox::plain(c, 0.5).unwrap();
        let ring = TargetSet::Minus(Box::new(outer.clone().into()), Box::new(inner.clone().into()));
        assert!(!ring.contains(p, &[0.0], 1.0));
        assert!(ring.contains(p, &[0.4], 1.0));
        // the hole's boundary belongs to the closed annulus
        assert!(ring.contains(p, &[0.125], 1.0));
        let v = ring.volume(p);
        assert!((v - (outer.volume(p) - inner.volume(p))).abs() < 1e-15);
    }
}
