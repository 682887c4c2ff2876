//! Areal spatial regression with intrinsic CAR priors and restricted spatial
//! regression (RHZ, HH).
//!
//! Modules follow the workflow: [`graph`] and [`bases`] build the spatial
//! structure, [`model`] assembles a specification, [`samplers`] draw from the
//! posterior, [`analytics`] summarises draws and provides quadrature oracles,
//! and [`sim`] runs the simulation studies.

pub mod analytics;
pub mod bases;
pub mod data;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod model;
pub mod quadrature;
pub mod rng;
pub mod samplers;
pub mod sim;

pub use error::{Error, Result};
