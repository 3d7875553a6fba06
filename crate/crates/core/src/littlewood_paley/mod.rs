//! Square functions of the harmonic extension and the norm inequalities they satisfy.
//!
//! Every height slice is computed on the padded torus of the extension, so jumps reaching
//! past the data window still see the decaying extension; results are reported on the
//! window.

mod experiments;
mod gfunction;
mod maximal;
mod nonlocal;

pub use experiments::{
    gf_ratio_experiment, lp_family, maximal_domination, meyer_majorant_check, Datum, Domination, MajorantCheck,
    RatioRow, RatioTable,
};
pub use gfunction::{
    carre_du_champ, carre_du_champ_with, g_functions, general_g, horizontal_g, lp_norm, square_function_field,
    vertical_g, GFunctionKind, GFunctionResult, GFunctionSet, LpOptions, SquareFunctionField, TGrid,
};
pub use maximal::{dyadic_radii, maximal_function, maximal_function_with_radii};
