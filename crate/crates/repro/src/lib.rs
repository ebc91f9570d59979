//! Reference experiments: the fixed trees, ensembles and data files that the
//! acceptance suite checks.

use std::path::PathBuf;

use ocn::bounds::enumerate_spanning_trees;
use ocn::ensemble::{run_ensemble, seed_range};
use ocn::metrics::{compute_areas, energy};
use ocn::scaling::{collect_samples, fit_power_law, BasinMetrics, Field, FitMode, SampleFilter};
use ocn::steiner::{best_ocn, crossover_gamma, BestOcnConfig, CrossoverResult, SteinerTreeSpec};
use ocn::{EnergyParams, Grid, GridSpec, Neighborhood, OptimizerConfig, Result, Tree};

/// Reference crossover values for lattice sides 2 to 5.
pub const REFERENCE_CROSSOVERS: [(usize, f64); 4] = [
    (2, 0.554_331_531_888_258_1),
    (3, 0.630_361_548_023_379_7),
    (4, 0.019_070_396_794_655_23),
    (5, 0.322_647_088_105_319_9),
];

/// Energy `H_{1/2}` of a fixed tree on the 4×4 orthogonal grid; it is also
/// the minimum over all spanning trees there.
pub const ANCHOR_TREE_H05: f64 = 24.302_496_414_9;

/// Parent of each node of that tree, row-major ids.
pub const ANCHOR_TREE_PARENTS: [Option<usize>; 16] = [
    None,
    Some(0),
    Some(1),
    Some(2),
    Some(0),
    Some(4),
    Some(5),
    Some(6),
    Some(4),
    Some(5),
    Some(9),
    Some(10),
    Some(8),
    Some(9),
    Some(10),
    Some(14),
];

pub fn anchor_tree() -> Result<(Grid<f64>, Tree<f64>)> {
    let spec = GridSpec::square(4).with_neighborhood(Neighborhood::Orthogonal);
    let grid = Grid::build(&spec)?;
    let tree = Tree::on_grid(&grid, &ANCHOR_TREE_PARENTS)?;
    Ok((grid, tree))
}

pub fn energy_of(tree: &Tree<f64>, gamma: f64) -> Result<f64> {
    let areas = compute_areas(tree)?;
    Ok(energy(tree, &areas, EnergyParams::new(gamma)?))
}

/// Minimum `H_γ` over every spanning tree of the default `n×n` grid.
pub fn brute_force_min(n: usize, gamma: f64) -> Result<f64> {
    let grid = Grid::<f64>::build(&GridSpec::square(n))?;
    let mut best = f64::INFINITY;
    let mut err = None;
    enumerate_spanning_trees(&grid, 1e9, |parents| {
        match Tree::on_grid(&grid, parents).and_then(|t| energy_of(&t, gamma)) {
            Ok(e) => best = best.min(e),
            Err(e) => err = Some(e),
        }
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(best),
    }
}

/// Optimized OCNs, `seeds` per side, seeds `100·side + k`.
pub fn scaling_ensemble(
    dimension: usize,
    sides: &[usize],
    seeds: usize,
    gamma: f64,
) -> Result<Vec<BasinMetrics<f64>>> {
    let config = OptimizerConfig::with_gamma(gamma);
    let mut out = Vec::new();
    for &side in sides {
        let spec = match dimension {
            3 => GridSpec::cube(side),
            _ => GridSpec::square(side),
        };
        for run in run_ensemble(&spec, &config, &seed_range(100 * side as u64, seeds))? {
            out.push(BasinMetrics::new(&spec, &run.tree)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponents {
    pub whole_h: f64,
    pub sub_h: f64,
    pub whole_alpha: f64,
    pub sub_alpha: f64,
}

pub fn exponents(basins: &[BasinMetrics<f64>], mode: FitMode) -> Result<Exponents> {
    let fit = |filter: &SampleFilter, y| -> Result<f64> {
        let samples = collect_samples(basins, filter);
        Ok(fit_power_law(&samples, Field::Area, y, mode, filter)?.exponent)
    };
    let whole = SampleFilter::whole();
    let sub = SampleFilter::subbasins();
    Ok(Exponents {
        whole_h: fit(&whole, Field::Length)?,
        sub_h: fit(&sub, Field::Length)?,
        whole_alpha: fit(&whole, Field::Volume)?,
        sub_alpha: fit(&sub, Field::Volume)?,
    })
}

pub fn steiner_data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/steiner")
}

/// Crossover between the shipped `side×side` Steiner tree and the best OCN of
/// the default batch.
pub fn shipped_crossover(side: usize, tol: f64) -> Result<CrossoverResult<f64>> {
    let path = steiner_data_dir().join(format!("{side}x{side}.json"));
    let spec = SteinerTreeSpec::read(&path)?;
    let ocn = best_ocn::<f64>(&spec.ocn_grid_spec()?, &BestOcnConfig::default())?;
    crossover_gamma(&ocn.tree, &spec, tol)
}
