//! Learning bimanual dressing trajectories from demonstrations.
//!
//! End-effector paths are expressed in a spherical frame anchored on the
//! human arm ([`geometry`]), smoothed and reparameterized by azimuth
//! ([`preprocess`]), and learned with three Gaussian mixtures
//! ([`mixture`], [`regression`]) that together form a [`policy`] able to
//! regenerate coordinated two-arm trajectories for unseen arm postures.

// Negated comparisons are used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod mixture;
pub mod policy;
pub mod preprocess;
pub mod regression;
pub mod synth;

pub use error::{Error, Result};
