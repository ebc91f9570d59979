//! Per-node drainage quantities and the energy functional.
//!
//! All passes walk a breadth-first order backwards (children before parents),
//! so arbitrarily deep trees never recurse.

use serde::{Deserialize, Serialize};

use crate::error::{OcnError, Result};
use crate::grid::NodeId;
use crate::scalar::{pow_area, Scalar};
use crate::tree::Tree;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams<T> {
    pub gamma: T,
}

impl<T: Scalar> EnergyParams<T> {
    pub fn new(gamma: T) -> Result<Self> {
        if !(gamma >= T::zero() && gamma <= T::one()) {
            return Err(OcnError::config(format!(
                "gamma must lie in [0,1], got {gamma}"
            )));
        }
        Ok(Self { gamma })
    }
}

/// Area `A_x`, volume `C_x` and mainstream upstream length `L_x` of one node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeMetrics<T> {
    pub area: u64,
    pub volume: u64,
    pub upstream_length: T,
}

/// Metrics for every node of a tree, stored column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeMetrics<T> {
    pub area: Vec<u64>,
    pub volume: Vec<u64>,
    pub upstream_length: Vec<T>,
}

impl<T: Scalar> TreeMetrics<T> {
    pub fn compute(tree: &Tree<T>) -> Result<Self> {
        let order = tree.topological_order()?;
        let area = areas_in_order(tree, &order);
        let volume = volumes_in_order(tree, &order, &area);
        let upstream_length = upstream_lengths_in_order(tree, &order, &area);
        Ok(Self {
            area,
            volume,
            upstream_length,
        })
    }

    pub fn node(&self, i: NodeId) -> NodeMetrics<T> {
        NodeMetrics {
            area: self.area[i],
            volume: self.volume[i],
            upstream_length: self.upstream_length[i],
        }
    }
}

/// `A_x = 1 + Σ A_y` over the children `y` of `x`.
pub fn compute_areas<T: Scalar>(tree: &Tree<T>) -> Result<Vec<u64>> {
    let order = tree.topological_order()?;
    Ok(areas_in_order(tree, &order))
}

/// `C_x = Σ (C_y + A_y)` over the children `y` of `x`.
pub fn compute_volumes<T: Scalar>(tree: &Tree<T>, areas: &[u64]) -> Result<Vec<u64>> {
    let order = tree.topological_order()?;
    Ok(volumes_in_order(tree, &order, areas))
}

/// Length of the path upstream from `x` that always steps into the child of
/// largest area; zero at sources. Equal areas resolve toward the longer
/// continuation, then toward the smaller node id.
pub fn compute_upstream_lengths<T: Scalar>(tree: &Tree<T>, areas: &[u64]) -> Result<Vec<T>> {
    let order = tree.topological_order()?;
    Ok(upstream_lengths_in_order(tree, &order, areas))
}

/// `H_γ = Σ A_i^γ l_i` over all non-root nodes, summed in ascending node id.
pub fn energy<T: Scalar>(tree: &Tree<T>, areas: &[u64], params: EnergyParams<T>) -> T {
    let root = tree.root();
    let mut total = T::zero();
    for (i, &a) in areas.iter().enumerate() {
        if i != root {
            total = total + pow_area(a, params.gamma) * tree.link_length(i);
        }
    }
    total
}

pub fn is_upstream<T: Scalar>(tree: &Tree<T>, x: NodeId, y: NodeId) -> bool {
    tree.is_upstream(x, y)
}

fn areas_in_order<T: Scalar>(tree: &Tree<T>, order: &[NodeId]) -> Vec<u64> {
    let mut area = vec![1u64; tree.len()];
    for &u in order.iter().rev() {
        if let Some(p) = tree.parent(u) {
            area[p] += area[u];
        }
    }
    area
}

fn volumes_in_order<T: Scalar>(tree: &Tree<T>, order: &[NodeId], areas: &[u64]) -> Vec<u64> {
    let mut vol = vec![0u64; tree.len()];
    for &u in order.iter().rev() {
        if let Some(p) = tree.parent(u) {
            vol[p] += vol[u] + areas[u];
        }
    }
    vol
}

fn upstream_lengths_in_order<T: Scalar>(tree: &Tree<T>, order: &[NodeId], areas: &[u64]) -> Vec<T> {
    let n = tree.len();
    let mut len = vec![T::zero(); n];
    // best child per node: (area, continuation length, id)
    let mut best: Vec<Option<(u64, T, NodeId)>> = vec![None; n];
    for &u in order.iter().rev() {
        if let Some((_, cont, _)) = best[u] {
            len[u] = cont;
        }
        if let Some(p) = tree.parent(u) {
            let cand = (areas[u], tree.link_length(u) + len[u], u);
            let replace = match best[p] {
                None => true,
                Some((a, c, id)) => {
                    cand.0 > a || (cand.0 == a && (cand.1 > c || (cand.1 == c && cand.2 < id)))
                }
            };
            if replace {
                best[p] = Some(cand);
            }
        }
    }
    len
}
