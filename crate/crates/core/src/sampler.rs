//! Random spanning trees grown from the outlet, randomized-Prim style.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grid::{Grid, NodeId};
use crate::scalar::Scalar;
use crate::tree::Tree;

/// Seed for every random stream in the crate. Streams are ChaCha8
/// (`rand_chacha::ChaCha8Rng::seed_from_u64`), so results are identical on
/// every platform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Independent stream derived from this seed, e.g. for the optimizer run
    /// that follows a sampled tree.
    pub fn derive(self, stream: u64) -> ChaCha8Rng {
        let mut rng = self.rng();
        rng.set_stream(stream);
        rng
    }
}

/// Grows a spanning tree from the outlet. The frontier holds every grid link
/// with exactly one endpoint in the tree; at each step one frontier link is
/// drawn uniformly and its outside endpoint is attached, pointing inward.
pub fn random_spanning_tree<T: Scalar>(grid: &Grid<T>, seed: RngSeed) -> Tree<T> {
    let mut rng = seed.rng();
    random_spanning_tree_with(grid, &mut rng)
}

pub fn random_spanning_tree_with<T: Scalar, R: Rng>(grid: &Grid<T>, rng: &mut R) -> Tree<T> {
    let n = grid.node_count();
    let root = grid.outlet();
    let mut in_tree = vec![false; n];
    let mut parents: Vec<Option<NodeId>> = vec![None; n];
    // (inside endpoint, outside endpoint); links whose outside endpoint has
    // since joined are stale and dropped when drawn, which keeps the draw
    // uniform over the live frontier.
    let mut frontier: Vec<(u32, u32)> = Vec::new();

    in_tree[root] = true;
    let mut joined = 1;
    frontier.extend(grid.neighbor_ids(root).iter().map(|&j| (root as u32, j)));
    while joined < n {
        let k = rng.random_range(0..frontier.len() as u64) as usize;
        let (inside, outside) = frontier.swap_remove(k);
        let outside = outside as usize;
        if in_tree[outside] {
            continue;
        }
        in_tree[outside] = true;
        parents[outside] = Some(inside as usize);
        joined += 1;
        frontier.extend(
            grid.neighbor_ids(outside)
                .iter()
                .filter(|&&j| !in_tree[j as usize])
                .map(|&j| (outside as u32, j)),
        );
    }
    Tree::on_grid(grid, &parents).expect("randomized Prim yields a spanning tree of the grid")
}
