//! Exact stationary analysis of the batch-arrival multiserver queue with state-dependent
//! setup times (M^X/M/c with staggered, vacation-type or custom setup rates).
//!
//! The solver is generic over the floating point type; the aliases below fix it to `f64`.

pub mod error;
pub mod measures;
pub mod model;
pub mod moments;
pub mod oracle;
pub mod roots;
pub mod scalar;
mod series;
pub mod solver;
pub mod validation;

pub use error::{Error, Result};
pub use model::BatchKind;
pub use scalar::Scalar;

pub type BatchDistribution = model::BatchDistribution<f64>;
pub type SetupPolicy = model::SetupPolicy<f64>;
pub type Costs = model::Costs<f64>;
pub type ModelParams = model::ModelParams<f64>;
pub type SolvedModel = solver::SolvedModel<f64>;
pub type JointDistribution = solver::JointDistribution<f64>;
pub type MomentTable = moments::MomentTable<f64>;
pub type PerformanceReport = measures::PerformanceReport<f64>;
pub type PositionDistribution = measures::PositionDistribution<f64>;
pub type ValidationOptions = validation::ValidationOptions<f64>;
pub type ValidationReport = validation::ValidationReport<f64>;
