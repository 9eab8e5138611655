//! Extinction conditions and optimal containment of SIS epidemics on
//! Markovian temporal networks, aggregated-Markovian edge-independent (AMEI)
//! networks, and adaptive SIS (ASIS) networks.
//!
//! The crate is organized bottom-up:
//!
//! * [`graph`] static graphs, the bundled Zachary Karate Club dataset and
//!   spectral bisection.
//! * [`temporal`] the three network classes and their Karate instances.
//! * [`spectral`] Metzler stability matrices, `lambda_max`, the AMEI margin
//!   and threshold bisection.
//! * [`gp`] posynomials, geometric programs and a log-barrier solver.
//! * [`allocation`] budget-constrained rate allocation built on [`gp`].
//! * [`simulate`] Gillespie simulation, exact master equations and
//!   mean-field integration.
//! * [`exec`] run-level parallelism (rayon behind the `parallel` feature).

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod allocation;
pub mod error;
pub mod exec;
pub mod gp;
pub mod graph;
pub mod linalg;
pub mod simulate;
pub mod spectral;
pub mod temporal;
pub mod validation;

pub use error::{Error, Result};
