//! Independent sample-and-optimize runs over a list of seeds.
//!
//! Each seed drives two ChaCha8 streams: stream 1 grows the initial random
//! tree, stream 0 (the plain seed) drives the optimizer. Runs share nothing
//! and execute on the current rayon pool.

use rayon::prelude::*;

use crate::error::Result;
use crate::grid::{Grid, GridSpec};
use crate::optimizer::{optimize, OptimizeReport, OptimizerConfig};
use crate::sampler::{random_spanning_tree_with, RngSeed};
use crate::scalar::Scalar;
use crate::tree::Tree;

pub const SAMPLER_STREAM: u64 = 1;

#[derive(Debug, Clone)]
pub struct EnsembleRun<T> {
    pub seed: RngSeed,
    pub tree: Tree<T>,
    pub report: OptimizeReport<T>,
}

/// The initial random tree for `seed`.
pub fn initial_tree<T: Scalar>(grid: &Grid<T>, seed: RngSeed) -> Tree<T> {
    random_spanning_tree_with(grid, &mut seed.derive(SAMPLER_STREAM))
}

/// Samples and optimizes one tree.
pub fn run_one<T: Scalar>(
    grid: &Grid<T>,
    config: &OptimizerConfig<T>,
    seed: RngSeed,
) -> Result<EnsembleRun<T>> {
    let start = initial_tree(grid, seed);
    let config = OptimizerConfig {
        seed,
        ..config.clone()
    };
    let (tree, report) = optimize(start, grid, &config)?;
    Ok(EnsembleRun { seed, tree, report })
}

/// Runs every seed in parallel; results come back in seed-list order.
pub fn run_ensemble<T: Scalar>(
    spec: &GridSpec,
    config: &OptimizerConfig<T>,
    seeds: &[RngSeed],
) -> Result<Vec<EnsembleRun<T>>> {
    let grid = Grid::build(spec)?;
    seeds
        .par_iter()
        .map(|&s| run_one(&grid, config, s))
        .collect()
}

/// Seeds `base, base+1, …` for `count` runs.
pub fn seed_range(base: u64, count: usize) -> Vec<RngSeed> {
    (0..count as u64).map(|k| RngSeed(base + k)).collect()
}
