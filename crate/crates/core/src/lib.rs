//! Counting and locating eigenvalues of self-adjoint operator-functions.

// `!(a < b)` is used on purpose so that NaN inputs are rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod linalg;
pub mod boundary;
pub mod galerkin;
pub mod pencil;
pub mod diffop;
pub mod cli;
