//! Simulation and fluctuation analysis for marked Gibbs point processes.
//!
//! The crate samples Gibbs models defined through their Papangelou
//! (conditional) intensity `lambda*(x, gamma) = z exp(-beta h(x, gamma))`,
//! estimates number-variance curves `Var(N)/|window|` on growing windows, and
//! evaluates the closed-form lower bounds and constants that certify a model
//! is not hyperuniform.
//!
//! Modules:
//! - [`geometry`]: positions, windows, configurations, grid neighbour index
//! - [`models`]: local energies and Papangelou intensities for pair
//!   potentials, Widom-Rowlinson, Voronoi and k-nearest-neighbour models
//! - [`sampler`]: Poisson sampling, birth-death-move Metropolis-Hastings,
//!   brute-force partition-function oracle
//! - [`estimators`]: variance curves, structure factor, GNZ residuals,
//!   moment and decay diagnostics, occupancy fields
//! - [`bounds`]: closed-form constants and variance lower bounds
//! - [`cli`]: experiment configuration and the command driver

// `!(x > 0.0)` validations reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cli;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod models;
pub mod sampler;
pub mod stats;

pub use error::{Error, Result};
pub use geometry::{Boundary, Configuration, MarkedPoint, Position, Window};
pub use models::PapangelouModel;
