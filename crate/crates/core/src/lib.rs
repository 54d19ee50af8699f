//! Shallow bound states of `-(Δ + εL_ε)` in the plane.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod potential;
pub mod predictor;
pub mod quadrature;
pub mod runner;
pub mod scenario;
pub mod radial;
pub mod special;

pub use error::{Error, Result};
pub mod identities;
pub mod logpotential;
pub mod moments;
pub mod perturbation;
mod rectmoments;
pub mod solver;
pub mod spectral;
