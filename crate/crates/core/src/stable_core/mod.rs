//! Parameters, random streams and exact increment samplers.

mod params;
mod rng;
mod sampler;

pub use params::{levy_constant, sphere_area, tail_mass, SpaceTimePoint, StableParams};
pub use rng::RngStream;
pub use sampler::{
    sample_brownian_increment, sample_stable_increment, sample_stable_increment_into,
    sample_subordinator_increment,
};
