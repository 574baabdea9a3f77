//! Monotone finite-difference discretisation on a uniform 2-D lattice.

pub mod domain;
pub mod scheme;
pub mod solve;

pub use domain::{build_domain, build_domain_with, constant_fn, DomainOptions, GridDomain, NodeKind, ScalarFn, Shape};
pub use scheme::{assemble_row, discrete_gradient, scheme_apply, scheme_residual, Assembly};
pub use solve::{
    comparison_check, comparison_check_with_boundary, default_initial, explicit_step, solve_grid_bvp, solve_grid_bvp_from,
    stable_step,
    ComparisonReport, FieldState, SolveOptions, Status, Stepping,
};
