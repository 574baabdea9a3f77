//! Numerics for H(Du, D²u) + λ a(x) |u|^{k-1} u = 0 with degenerate elliptic H: operator
//! families, radial barriers, radial and grid solvers, eigenvalue bracketing and checks.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barrier;
pub mod eigen;
pub mod error;
pub mod grid;
pub mod operator;
pub mod radial;
pub mod verify;

pub use error::{Error, Result};
pub use operator::{CaseTag, CoercivityProfile, Family, HomogeneitySignature, OperatorSpec};
