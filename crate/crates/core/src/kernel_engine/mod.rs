//! Deterministic kernels: transition densities, the exit law, the extension kernel and
//! grid application of the semigroups.

mod density;
mod exit_law;
pub(crate) mod fft;
mod product;
mod spectral;
mod table;

pub use density::{
    density_at_origin, density_envelope_ratio, harmonic_kernel, harmonic_kernel_by_exit_law,
    harmonic_kernel_with, radial_density, stable_density, stable_density_with, tail_asymptote,
    DensityConfig, DensityRoute, DensityValue,
};
pub use exit_law::{exit_cdf_mu, exit_cdf_quadrature, exit_density_mu, exit_mass_quadrature};
pub use fft::{frequency, next_fast_size, FftNd};
pub use product::{
    apply_heat_semigroup_product, apply_heat_semigroup_product_with, ProductOptions,
    SpaceTimeField, VerticalBoundary,
};
pub use spectral::{
    escaped_mass, extend_grid, extend_grid_slices, extend_grid_with, wrap_bound, ExtendOptions,
    ExtensionDiagnostics, ExtensionField, OutputDomain, Padding,
};
pub use table::KernelTable;
