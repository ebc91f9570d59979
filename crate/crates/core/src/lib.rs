//! Optimal channel networks (OCNs) on square and cubic lattices.
//!
//! The crate covers the full pipeline: lattice construction ([`grid`]), random
//! spanning trees ([`sampler`]), per-node area/volume/length metrics and the
//! energy functional `H_γ = Σ A_i^γ l_i` ([`metrics`]), greedy single-link
//! rewiring ([`optimizer`]), closed-form energy bounds ([`bounds`]), power-law
//! scaling fits ([`scaling`]) and the Steiner-tree comparison ([`steiner`]).
//!
//! Numeric code is generic over [`Scalar`]; the `*64` aliases below pin it to
//! `f64`, which is what the command-line driver uses.

pub mod bounds;
pub mod ensemble;
pub mod error;
pub mod grid;
pub mod metrics;
pub mod optimizer;
pub mod sampler;
pub mod scalar;
pub mod scaling;
pub mod steiner;
pub mod tree;

pub use error::{OcnError, Result};
pub use grid::{Grid, GridSpec, LengthMode, Neighborhood, NodeId};
pub use metrics::{EnergyParams, NodeMetrics};
pub use optimizer::{ConvergenceRule, OptimizeReport, OptimizerConfig};
pub use sampler::RngSeed;
pub use scalar::Scalar;
pub use tree::{Tree, TreeRecord};

pub type Grid64 = Grid<f64>;
pub type Tree64 = Tree<f64>;
pub type NodeMetrics64 = NodeMetrics<f64>;
pub type EnergyParams64 = EnergyParams<f64>;
pub type OptimizerConfig64 = OptimizerConfig<f64>;
pub type OptimizeReport64 = OptimizeReport<f64>;
pub type ScalingFit64 = scaling::ScalingFit<f64>;

pub type Grid32 = Grid<f32>;
pub type Tree32 = Tree<f32>;
