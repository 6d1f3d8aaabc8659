//! Symmetry-resolved full counting statistics for a three-qubit open quantum
//! system with a strong 1↔2 exchange symmetry.
//!
//! The pipeline is: [`model`] operators → [`liouville`] generators →
//! [`symmetry`] block restriction → [`spectral`] scaled cumulant generating
//! functions → [`legendre`] rate functions, with [`trajectories`] providing an
//! independent quantum-jump Monte Carlo check.

pub mod acceptance;
pub mod analysis;
pub mod config;
pub mod error;
pub mod export;
pub mod legendre;
pub mod linalg;
pub mod liouville;
pub mod model;
pub mod spectral;
pub mod symmetry;
pub mod trajectories;

pub use error::{Error, Result};
pub use liouville::{CountingFields, DensityMatrix, SuperOperator};
pub use model::ModelParams;
