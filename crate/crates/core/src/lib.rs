//! Pseudospectral simulation of ODE-type blowup for `u_t = iΔu + |u|^α u`.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod field;
pub mod model;
pub mod profile;
pub mod report;
pub mod solver;
