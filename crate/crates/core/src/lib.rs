//! Implicit-exponential (IMEXP) time integrators for stiff semilinear systems
//! `u' = Lu + N(t, u)`.
//!
//! The linear part `L` is treated with preconditioned implicit solves and the
//! nonlinear defect with φ-functions evaluated in Krylov subspaces.

// `!(x < y)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod integrators;
pub mod krylov;
pub mod phi;
pub mod problems;
pub mod sparse;
pub mod study;

pub use error::{ArgumentError, ConvergenceError, IntegrateError, SolverError, StudyError};
