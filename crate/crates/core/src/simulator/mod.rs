//! Path generation for the product process with boundary absorption, box exits, target
//! hitting and jump bookkeeping.

mod bridge;
mod geometry;
mod path;

pub use bridge::bridge_crossing_prob;
pub use geometry::{AnisotropicBox, TargetSet};
pub use path::{
    complete_to_boundary, exit_time_from_box, hitting_before_exit, jump_census, run_path,
    run_path_with, BoxExit, ExitFace, JumpEvent, PathOptions, PathRecord, PathState, PathStepper,
};

pub(crate) use path::{exit_unchecked, hits_unchecked};
