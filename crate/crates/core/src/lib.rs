//! Distribution-weighted combination of regression predictors for
//! multiple-source adaptation.
//!
//! Given `p` source domains over a shared finite support, each with a
//! marginal density and a trained predictor, this crate builds the
//! distribution-weighted predictor `h_z^η`, finds a robust mixture weight
//! `z` with a difference-of-convex (DCA) solver, certifies the result,
//! and evaluates Rényi-divergence generalization bounds.
//!
//! Module map:
//!
//! * [`model`]: problem instances, ingestion and validation.
//! * [`combiner`]: the combined predictor and its expected squared losses.
//! * [`renyi`]: Rényi divergences and guarantee calculators.
//! * [`dcsolver`]: the DC decomposition, the DCA loop and certificates.
//! * [`synthetic`]: the two-dimensional Gaussian-mixture benchmark.
//! * [`evalharness`]: mixture sweeps against baseline predictors.
//! * [`cli`]: the `dwmsa` command-line front end.

pub mod cli;
pub mod combiner;
pub mod dcsolver;
pub mod error;
pub mod evalharness;
pub mod model;
pub mod renyi;
pub mod simplex;
pub mod synthetic;

pub use combiner::{slack_to_params, CombinerContext};
pub use dcsolver::{dca_solve, Certificate, Solution, SolverConfig, SolverStatus};
pub use error::{Error, Result};
pub use model::{ProblemInstance, SupportPoint};
pub use renyi::DiscreteDistribution;
pub use simplex::SimplexWeights;
