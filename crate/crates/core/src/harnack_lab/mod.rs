//! Experiment drivers turning simulated paths and deterministic extensions into
//! estimates: exit-time scaling, hitting probabilities, the Krylov-Safonov function,
//! Harnack ratios, oscillation decay, Holder fits and the resolvent.

mod ci;
mod exit;
mod harnack;
mod hitting;
mod holder;
mod resolvent;

pub use ci::{EstimateCI, DEFAULT_CONFIDENCE};
pub use exit::{
    default_dt, estimate_mean_exit_time, exit_law_comparison, exit_time_scaling, ExitLawComparison,
    ExitScaling, HorizontalShell,
};
pub use harnack::{box_heights, harnack_ratio_experiment, random_boundary_data, HarnackReport, HarnackRow};
pub use hitting::{
    box_hitting_sweep, default_phi_starts, estimate_box_hitting_probability, estimate_phi,
    phi_is_monotone, shape_with_fraction, HittingRow, HittingSweep, PhiPoint, ShapeKind, TargetSize,
};
pub use holder::{
    holder_constant_estimate, oscillation_profile, HolderFit, OscillationFit, OscillationLevel,
    OscillationProfile, Region,
};
pub use resolvent::{
    resolvent_apply, resolvent_identity, resolvent_mc_at, resolvent_quadrature, IdentityCheck,
    ResolventMethod, ResolventOptions, ResolventOutput,
};

use crate::stable_core::RngStream;

/// Stream for path `index` of the experiment family `tag`.
pub(crate) fn task_stream(seed: u64, tag: u64, index: usize) -> RngStream {
    RngStream::for_task(seed, tag, index as u64)
}
