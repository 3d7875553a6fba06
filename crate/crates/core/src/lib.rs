//! Numerical laboratory for the product of a symmetric stable process and a vertical
//! Brownian motion on the upper half-space.
//!
//! Modules follow the pipeline: [`stable_core`] samplers feed the [`simulator`];
//! [`kernel_engine`] provides deterministic kernels and grid extensions; [`harnack_lab`]
//! and [`littlewood_paley`] turn both into estimates.

pub mod error;
pub mod format;
pub mod grid;
pub mod harnack_lab;
pub mod kernel_engine;
pub mod littlewood_paley;
pub mod parallel;
pub mod quad;
pub mod simulator;
pub mod special;
pub mod stable_core;
pub mod stats;

pub use error::{Error, Result};
pub use grid::GridFunction;
pub use harnack_lab::{EstimateCI, HolderFit, OscillationProfile};
pub use kernel_engine::KernelTable;
pub use littlewood_paley::{GFunctionKind, GFunctionResult, SquareFunctionField};
pub use simulator::{AnisotropicBox, JumpEvent, PathRecord};
pub use stable_core::{RngStream, SpaceTimePoint, StableParams};
