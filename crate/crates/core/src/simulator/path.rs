use serde::{Deserialize, Serialize};

use super::bridge::{first_crossing, Barriers, Side};
use super::geometry::{AnisotropicBox, TargetSet};
use crate::error::{invalid, Error, Result};
use crate::stable_core::{sample_stable_increment_into, RngStream, SpaceTimePoint, StableParams};

/// A horizontal step larger than the recording threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub time: f64,
    pub pre_position: Vec<f64>,
    pub post_position: Vec<f64>,
    pub magnitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathState {
    pub time: f64,
    pub x: Vec<f64>,
    pub t: f64,
}

/// Face of a box through which a path left.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExitFace {
    Bottom,
    Top,
    /// A horizontal face, reached by a jump or a diffusive step of the stable part.
    Side,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxExit {
    pub tau: f64,
    pub point: SpaceTimePoint,
    pub face: ExitFace,
}

/// One simulated trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub dt: f64,
    pub jump_threshold: f64,
    pub states: Vec<PathState>,
    pub jumps: Vec<JumpEvent>,
    /// Boundary hitting time, when it happened before the horizon.
    pub t0: Option<f64>,
    pub exit: Option<BoxExit>,
}

impl PathRecord {
    pub fn last(&self) -> &PathState {
        self.states.last().expect("a path has at least its start state")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathOptions {
    /// Horizontal steps longer than this are recorded as jumps.
    pub jump_threshold: f64,
    /// Keep every visited state, not just the start and the end.
    pub record_states: bool,
    /// Detect boundary hits between grid times with the bridge law.
    pub bridge_correction: bool,
    /// Box whose first exit is recorded; the path stops there.
    pub monitor: Option<AnisotropicBox>,
}

impl Default for PathOptions {
    fn default() -> Self {
        Self {
            jump_threshold: 1.0,
            record_states: true,
            bridge_correction: true,
            monitor: None,
        }
    }
}

/// Mutable state of one path advanced step by step.
#[derive(Clone, Debug)]
pub struct PathStepper {
    params: StableParams,
    pub time: f64,
    pub x: Vec<f64>,
    pub t: f64,
    incr: Vec<f64>,
}

/// What happened during one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum StepEvent {
    Inside,
    Crossed(Side),
}

impl PathStepper {
    pub fn new(params: StableParams, start: &SpaceTimePoint) -> Self {
        Self {
            params,
            time: 0.0,
            x: start.x.clone(),
            t: start.t,
            incr: vec![0.0; params.d()],
        }
    }

    /// The horizontal increment of the last step.
    pub fn last_increment(&self) -> &[f64] {
        &self.incr
    }

    /// Advances by `h`, stopping early at the first vertical crossing of `barriers`.
    ///
    /// The horizontal increment is drawn for the time actually elapsed, which is exact
    /// because the two components are independent.
    pub(crate) fn step(
        &mut self,
        h: f64,
        barriers: Barriers,
        bridge: bool,
        rng: &mut RngStream,
    ) -> StepEvent {
        let a = self.t;
        let b = a + (2.0 * h).sqrt() * rng.standard_normal();
        let mut elapsed = h;
        let mut event = StepEvent::Inside;
        if bridge {
            if rng.uniform() < barriers.crossing_prob(a, b, h) {
                let (tau, side) = first_crossing(a, b, h, barriers, rng);
                elapsed = tau.max(f64::MIN_POSITIVE);
                event = StepEvent::Crossed(side);
            }
        } else if b <= barriers.lo {
            event = StepEvent::Crossed(Side::Lower);
        } else if b >= barriers.hi {
            event = StepEvent::Crossed(Side::Upper);
        }
        sample_stable_increment_into(self.params, elapsed, rng, &mut self.incr);
        for (xi, di) in self.x.iter_mut().zip(&self.incr) {
            *xi += di;
        }
        self.time += elapsed;
        self.t = match event {
            StepEvent::Inside => b,
            StepEvent::Crossed(Side::Lower) => barriers.lo,
            StepEvent::Crossed(Side::Upper) => barriers.hi,
        };
        event
    }

    fn increment_norm(&self) -> f64 {
        self.incr.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn state(&self) -> PathState {
        PathState {
            time: self.time,
            x: self.x.clone(),
            t: self.t,
        }
    }
}

fn check_step(dt: f64, horizon: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid("dt", format!("step {dt} must be positive")));
    }
    if !(horizon >= dt) || !horizon.is_finite() {
        return Err(invalid("horizon", format!("horizon {horizon} must be finite and at least dt")));
    }
    Ok(())
}

/// Simulates the product process from `start` until it hits the boundary or reaches
/// `horizon`, with default options.
pub fn run_path(
    params: StableParams,
    start: &SpaceTimePoint,
    dt: f64,
    horizon: f64,
    rng: &mut RngStream,
) -> Result<PathRecord> {
    run_path_with(params, start, dt, horizon, &PathOptions::default(), rng)
}

pub fn run_path_with(
    params: StableParams,
    start: &SpaceTimePoint,
    dt: f64,
    horizon: f64,
    opts: &PathOptions,
    rng: &mut RngStream,
) -> Result<PathRecord> {
    check_step(dt, horizon)?;
    if start.dim() != params.d() {
        return Err(Error::Shape(format!(
            "start has dimension {}, parameters have {}",
            start.dim(),
            params.d()
        )));
    }
    let mut s = PathStepper::new(params, start);
    let mut rec = PathRecord {
        dt,
        jump_threshold: opts.jump_threshold,
        states: vec![s.state()],
        jumps: Vec::new(),
        t0: None,
        exit: None,
    };
    if start.on_boundary() {
        rec.t0 = Some(0.0);
        return Ok(rec);
    }
    let monitor = opts.monitor.as_ref();
    let floor = Barriers::floor(0.0);
    let mut pre = s.x.clone();
    while s.time < horizon {
        let h = dt.min(horizon - s.time);
        if h <= horizon * 1e-15 {
            break;
        }
        pre.copy_from_slice(&s.x);
        let barriers = match monitor {
            Some(b) => {
                let (lo, hi) = b.vertical_interval();
                Barriers { lo: lo.max(0.0), hi }
            }
            None => floor,
        };
        let ev = s.step(h, barriers, opts.bridge_correction, rng);
        let mag = s.increment_norm();
        if mag > opts.jump_threshold {
            rec.jumps.push(JumpEvent {
                time: s.time,
                pre_position: pre.clone(),
                post_position: s.x.clone(),
                magnitude: mag,
            });
        }
        if opts.record_states {
            rec.states.push(s.state());
        }
        if let StepEvent::Crossed(side) = ev {
            if s.t <= 0.0 {
                rec.t0 = Some(s.time);
            }
            if monitor.is_some() {
                let face = if side == Side::Lower { ExitFace::Bottom } else { ExitFace::Top };
                rec.exit = Some(exit_of(&s, face));
            }
            break;
        }
        if let Some(b) = monitor {
            if !b.contains_horizontal(params, &s.x) {
                rec.exit = Some(exit_of(&s, ExitFace::Side));
                break;
            }
        }
    }
    if !opts.record_states {
        rec.states.push(s.state());
    }
    Ok(rec)
}

fn exit_of(s: &PathStepper, face: ExitFace) -> BoxExit {
    BoxExit {
        tau: s.time,
        point: SpaceTimePoint {
            x: s.x.clone(),
            t: s.t,
        },
        face,
    }
}

/// Draws the remaining time to the boundary and the horizontal position there, exactly.
///
/// From height `t` the hitting time is `t^2 / (2 N^2)` and the horizontal displacement is a
/// single stable increment over that time.
pub fn complete_to_boundary(
    params: StableParams,
    x: &[f64],
    t: f64,
    rng: &mut RngStream,
) -> (f64, Vec<f64>) {
    let mut y = x.to_vec();
    if t <= 0.0 {
        return (0.0, y);
    }
    let n = rng.standard_normal();
    let tau = t * t / (2.0 * n * n);
    let mut incr = vec![0.0; params.d()];
    sample_stable_increment_into(params, tau, rng, &mut incr);
    for (yi, di) in y.iter_mut().zip(&incr) {
        *yi += di;
    }
    (tau, y)
}

fn check_start(params: StableParams, bx: &AnisotropicBox, start: &SpaceTimePoint) -> Result<()> {
    if bx.dim() != params.d() || start.dim() != params.d() {
        return Err(Error::Shape("box, start and parameters disagree on dimension".into()));
    }
    bx.require_half_space("container")?;
    if !bx.contains_point(params, start) {
        return Err(Error::Geometry("start point lies outside the box".into()));
    }
    Ok(())
}

/// First exit from `bx`; vertical faces are located inside the step with the bridge law,
/// horizontal faces are checked at the grid times.
pub fn exit_time_from_box(
    params: StableParams,
    bx: &AnisotropicBox,
    start: &SpaceTimePoint,
    dt: f64,
    rng: &mut RngStream,
) -> Result<BoxExit> {
    check_start(params, bx, start)?;
    check_step(dt, dt)?;
    Ok(exit_unchecked(params, bx, start, dt, rng))
}

pub(crate) fn exit_unchecked(
    params: StableParams,
    bx: &AnisotropicBox,
    start: &SpaceTimePoint,
    dt: f64,
    rng: &mut RngStream,
) -> BoxExit {
    let (lo, hi) = bx.vertical_interval();
    let barriers = Barriers { lo, hi };
    let mut s = PathStepper::new(params, start);
    if !(start.t > lo && start.t < hi) {
        let face = if start.t <= lo { ExitFace::Bottom } else { ExitFace::Top };
        return exit_of(&s, face);
    }
    loop {
        match s.step(dt, barriers, true, rng) {
            StepEvent::Crossed(Side::Lower) => return exit_of(&s, ExitFace::Bottom),
            StepEvent::Crossed(Side::Upper) => return exit_of(&s, ExitFace::Top),
            StepEvent::Inside => {
                if !bx.contains_horizontal(params, &s.x) {
                    return exit_of(&s, ExitFace::Side);
                }
            }
        }
    }
}

/// True iff the path enters the closed `target` before leaving `container`.
pub fn hitting_before_exit(
    params: StableParams,
    target: &TargetSet,
    container: &AnisotropicBox,
    start: &SpaceTimePoint,
    dt: f64,
    rng: &mut RngStream,
) -> Result<bool> {
    check_start(params, container, start)?;
    check_step(dt, dt)?;
    Ok(hits_unchecked(params, target, container, start, dt, rng))
}

pub(crate) fn hits_unchecked(
    params: StableParams,
    target: &TargetSet,
    container: &AnisotropicBox,
    start: &SpaceTimePoint,
    dt: f64,
    rng: &mut RngStream,
) -> bool {
    if target.contains(params, &start.x, start.t) {
        return true;
    }
    let (lo, hi) = container.vertical_interval();
    let barriers = Barriers { lo, hi };
    let mut s = PathStepper::new(params, start);
    loop {
        if let StepEvent::Crossed(_) = s.step(dt, barriers, true, rng) {
            return false;
        }
        if !container.contains_horizontal(params, &s.x) {
            return false;
        }
        if target.contains(params, &s.x, s.t) {
            return true;
        }
    }
}

/// Number of recorded jumps longer than `radius`.
pub fn jump_census(path: &PathRecord, radius: f64) -> Result<usize> {
    if radius < path.jump_threshold {
        return Err(invalid(
            "R",
            format!(
                "census radius {radius} is below the recording threshold {}",
                path.jump_threshold
            ),
        ));
    }
    Ok(path.jumps.iter().filter(|j| j.magnitude > radius).count())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p11() -> StableParams {
        StableParams::new(1, 1.0).unwrap()
    }

    #[test]
    fn far_start_is_not_absorbed() {
        let mut rng = RngStream::new(1, 0);
        for _ in 0..100 {
            let rec = run_path(p11(), &SpaceTimePoint::at_height(1, 5.0), 1e-3, 1e-3, &mut rng)
                .unwrap();
            assert!(rec.t0.is_none());
        }
    }

    #[test]
    fn boundary_start_is_absorbed_immediately() {
        let mut rng = RngStream::new(1, 0);
        let rec = run_path(p11(), &SpaceTimePoint::at_height(1, 0.0), 0.1, 1.0, &mut rng)
            .unwrap();
        assert_eq!(rec.t0, Some(0.0));
        assert_eq!(rec.states.len(), 1);
    }

    #[test]
    fn path_record_invariants() {
        let mut rng = RngStream::new(2, 0);
        let opts = PathOptions {
            jump_threshold: 0.05,
            ..Default::default()
        };
        let rec = run_path_with(
            StableParams::new(2, 1.5).unwrap(),
            &SpaceTimePoint::at_height(2, 0.4),
            1e-3,
            2.0,
            &opts,
            &mut rng,
        )
        .unwrap();
        assert!(rec.states.windows(2).all(|w| w[1].time > w[0].time));
        assert!(rec.states.iter().all(|s| s.t >= 0.0));
        assert!(rec.jumps.iter().all(|j| j.magnitude >= 0.05));
        if let Some(t0) = rec.t0 {
            assert_eq!(rec.last().time, t0);
            assert_eq!(rec.last().t, 0.0);
        }
    }

    #[test]
    fn exit_point_is_outside_and_tau_positive() {
        let p = StableParams::new(2, 0.5).unwrap();
        let bx = AnisotropicBox::plain(SpaceTimePoint::at_height(2, 1.0), 1.0).unwrap();
        let mut rng = RngStream::new(4, 0);
        for _ in 0..500 {
            let e = exit_time_from_box(p, &bx, &bx.center, 1.0 / 400.0, &mut rng).unwrap();
            assert!(e.tau > 0.0);
            let (lo, hi) = bx.vertical_interval();
            match e.face {
                ExitFace::Side => assert!(!bx.contains_horizontal(p, &e.point.x)),
                ExitFace::Bottom => assert_eq!(e.point.t, lo),
                ExitFace::Top => assert_eq!(e.point.t, hi),
            }
        }
    }

    #[test]
    fn target_equal_to_container_is_hit_at_once() {
        let p = p11();
        let bx = AnisotropicBox::plain(SpaceTimePoint::at_height(1, 1.0), 1.0).unwrap();
        let mut rng = RngStream::new(5, 0);
        assert!(hitting_before_exit(p, &bx.clone().into(), &bx, &bx.center, 1e-3, &mut rng)
            .unwrap());
    }

    #[test]
    fn geometry_preconditions_are_enforced() {
        let p = p11();
        let bx = AnisotropicBox::plain(SpaceTimePoint::at_height(1, 0.2), 1.0).unwrap();
        let mut rng = RngStream::new(5, 0);
        assert!(matches!(
            exit_time_from_box(p, &bx, &bx.center, 1e-3, &mut rng),
            Err(Error::Geometry(_))
        ));
        let ok = AnisotropicBox::plain(SpaceTimePoint::at_height(1, 2.0), 1.0).unwrap();
        let outside = SpaceTimePoint::new(vec![3.0], 2.0).unwrap();
        assert!(exit_time_from_box(p, &ok, &outside, 1e-3, &mut rng).is_err());
    }

    #[test]
    fn census_rejects_radius_below_threshold() {
        let mut rng = RngStream::new(6, 0);
        let rec = run_path(p11(), &SpaceTimePoint::at_height(1, 50.0), 1e-2, 1.0, &mut rng)
            .unwrap();
        assert!(jump_census(&rec, 0.5).is_err());
        assert!(jump_census(&rec, 1.0).unwrap() <= rec.jumps.len());
    }

    #[test]
    fn completion_time_has_the_exit_law() {
        let mut rng = RngStream::new(7, 0);
        let n = 20_000;
        let hits = (0..n)
            .filter(|_| complete_to_boundary(p11(), &[0.0], 1.0, &mut rng).0 <= 1.0)
            .count();
        let p = libm::erfc(0.5);
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((hits as f64 / n as f64 - p).abs() < 4.0 * se);
    }
}
