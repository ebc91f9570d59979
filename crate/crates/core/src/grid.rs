//! Lattices of potential links.
//!
//! Nodes are numbered row-major: in 2D `id = y·n + x`, in 3D
//! `id = (z·n + y)·n + x`, with `x` varying fastest. Serialized trees rely on
//! this numbering.

use serde::{Deserialize, Serialize};

use crate::error::{OcnError, Result};
use crate::scalar::Scalar;

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthMode {
    /// Every link, orthogonal or diagonal, has length 1.
    #[default]
    Unit,
    /// Links have their embedded length: 1, √2 or √3.
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Neighborhood {
    /// All offsets in {-1,0,1}^d except zero: 8 neighbors in 2D, 26 in 3D.
    #[default]
    Full,
    /// Axis-aligned offsets only: 4 neighbors in 2D, 6 in 3D.
    Orthogonal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dimension: usize,
    pub side: usize,
    #[serde(default)]
    pub length_mode: LengthMode,
    #[serde(default)]
    pub neighborhood: Neighborhood,
    /// Outlet coordinate, `x` first. `None` puts the outlet at the origin corner.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outlet: Option<Vec<usize>>,
}

impl GridSpec {
    pub fn square(side: usize) -> Self {
        Self {
            dimension: 2,
            side,
            length_mode: LengthMode::Unit,
            neighborhood: Neighborhood::Full,
            outlet: None,
        }
    }

    pub fn cube(side: usize) -> Self {
        Self {
            dimension: 3,
            ..Self::square(side)
        }
    }

    pub fn with_lengths(mut self, mode: LengthMode) -> Self {
        self.length_mode = mode;
        self
    }

    pub fn with_neighborhood(mut self, neighborhood: Neighborhood) -> Self {
        self.neighborhood = neighborhood;
        self
    }

    pub fn with_outlet(mut self, coords: Vec<usize>) -> Self {
        self.outlet = Some(coords);
        self
    }

    pub fn node_count(&self) -> usize {
        self.side.pow(self.dimension as u32)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension != 2 && self.dimension != 3 {
            return Err(OcnError::config(format!(
                "dimension must be 2 or 3, got {}",
                self.dimension
            )));
        }
        if self.side < 2 {
            return Err(OcnError::config(format!(
                "side must be at least 2, got {}",
                self.side
            )));
        }
        if self.node_count() > u32::MAX as usize {
            return Err(OcnError::config(format!("side {} is too large", self.side)));
        }
        if let Some(outlet) = &self.outlet {
            if outlet.len() != self.dimension {
                return Err(OcnError::config(format!(
                    "outlet has {} coordinates, grid has dimension {}",
                    outlet.len(),
                    self.dimension
                )));
            }
            if let Some(c) = outlet.iter().find(|&&c| c >= self.side) {
                return Err(OcnError::config(format!(
                    "outlet coordinate {c} outside 0..{}",
                    self.side
                )));
            }
        }
        Ok(())
    }
}

/// Immutable lattice with compressed adjacency lists.
#[derive(Debug, Clone)]
pub struct Grid<T> {
    spec: GridSpec,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    lengths: Vec<T>,
    outlet: NodeId,
}

impl<T: Scalar> Grid<T> {
    pub fn build(spec: &GridSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.side;
        let dim = spec.dimension;
        let count = spec.node_count();

        let mut offsets_nd: Vec<[isize; 3]> = Vec::new();
        let zr: &[isize] = if dim == 3 { &[-1, 0, 1] } else { &[0] };
        for &dz in zr {
            for dy in -1..=1isize {
                for dx in -1..=1isize {
                    let nonzero = (dx != 0) as u8 + (dy != 0) as u8 + (dz != 0) as u8;
                    let keep = match spec.neighborhood {
                        Neighborhood::Full => nonzero > 0,
                        Neighborhood::Orthogonal => nonzero == 1,
                    };
                    if keep {
                        offsets_nd.push([dx, dy, dz]);
                    }
                }
            }
        }
        let unit_len = [T::zero(), T::one(), T::of(2.0).sqrt(), T::of(3.0).sqrt()];

        let mut offsets = Vec::with_capacity(count + 1);
        let mut neighbors = Vec::with_capacity(count * offsets_nd.len());
        let mut lengths = Vec::with_capacity(count * offsets_nd.len());
        offsets.push(0);
        for id in 0..count {
            let c = coords_of(id, n, dim);
            for off in &offsets_nd {
                let mut nc = [0usize; 3];
                let mut inside = true;
                for a in 0..3 {
                    let v = c[a] as isize + off[a];
                    if v < 0 || v >= n as isize || (a >= dim && v != 0) {
                        inside = false;
                        break;
                    }
                    nc[a] = v as usize;
                }
                if !inside {
                    continue;
                }
                neighbors.push(id_of(&nc, n, dim) as u32);
                let len = match spec.length_mode {
                    LengthMode::Unit => T::one(),
                    LengthMode::Euclidean => unit_len[off.iter().filter(|&&d| d != 0).count()],
                };
                lengths.push(len);
            }
            offsets.push(neighbors.len());
        }

        let outlet = match &spec.outlet {
            Some(c) => {
                let mut full = [0usize; 3];
                full[..dim].copy_from_slice(c);
                id_of(&full, n, dim)
            }
            None => 0,
        };

        Ok(Self {
            spec: spec.clone(),
            offsets,
            neighbors,
            lengths,
            outlet,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn dimension(&self) -> usize {
        self.spec.dimension
    }

    pub fn side(&self) -> usize {
        self.spec.side
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn outlet(&self) -> NodeId {
        self.outlet
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    /// Neighbor ids of `node`, in a fixed order.
    pub fn neighbor_ids(&self, node: NodeId) -> &[u32] {
        &self.neighbors[self.offsets[node]..self.offsets[node + 1]]
    }

    pub fn neighbor_lengths(&self, node: NodeId) -> &[T] {
        &self.lengths[self.offsets[node]..self.offsets[node + 1]]
    }

    pub fn neighbors(&self, node: NodeId) -> impl Iterator<Item = (NodeId, T)> + '_ {
        self.neighbor_ids(node)
            .iter()
            .zip(self.neighbor_lengths(node))
            .map(|(&j, &l)| (j as NodeId, l))
    }

    /// Length of the link `a`–`b`, or `None` when they are not adjacent.
    pub fn link_length(&self, a: NodeId, b: NodeId) -> Option<T> {
        self.neighbors(a).find(|&(j, _)| j == b).map(|(_, l)| l)
    }

    pub fn undirected_link_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn coords(&self, node: NodeId) -> [usize; 3] {
        coords_of(node, self.spec.side, self.spec.dimension)
    }

    pub fn node_at(&self, coords: &[usize]) -> Option<NodeId> {
        let dim = self.spec.dimension;
        if coords.len() != dim || coords.iter().any(|&c| c >= self.spec.side) {
            return None;
        }
        let mut full = [0usize; 3];
        full[..dim].copy_from_slice(coords);
        Some(id_of(&full, self.spec.side, dim))
    }

    /// Chebyshev (king-move) distance from `node` to the outlet. A node at
    /// distance `k-1` belongs to stripe `C_k`.
    pub fn chebyshev_distance(&self, node: NodeId) -> usize {
        let a = self.coords(node);
        let b = self.coords(self.outlet);
        (0..3).map(|i| a[i].abs_diff(b[i])).max().unwrap_or(0)
    }

    /// True when the outlet sits at a corner of the lattice.
    pub fn outlet_is_corner(&self) -> bool {
        let c = self.coords(self.outlet);
        let last = self.spec.side - 1;
        c[..self.spec.dimension]
            .iter()
            .all(|&v| v == 0 || v == last)
    }
}

fn coords_of(id: usize, n: usize, dim: usize) -> [usize; 3] {
    let x = id % n;
    let y = (id / n) % n;
    let z = if dim == 3 { id / (n * n) } else { 0 };
    [x, y, z]
}

fn id_of(c: &[usize; 3], n: usize, dim: usize) -> usize {
    let base = c[1] * n + c[0];
    if dim == 3 {
        c[2] * n * n + base
    } else {
        base
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn links_by_length(g: &Grid<f64>) -> (usize, usize, usize) {
        let mut counts = (0, 0, 0);
        for i in 0..g.node_count() {
            for (j, l) in g.neighbors(i) {
                if j < i {
                    continue;
                }
                if (l - 1.0).abs() < 1e-12 {
                    counts.0 += 1;
                } else if (l - 2f64.sqrt()).abs() < 1e-12 {
                    counts.1 += 1;
                } else {
                    counts.2 += 1;
                }
            }
        }
        counts
    }

    #[test]
    fn two_by_two_unit() {
        let g = Grid::<f64>::build(&GridSpec::square(2)).unwrap();
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.undirected_link_count(), 6);
        assert!(g.neighbors(0).all(|(_, l)| l == 1.0));
    }

    #[test]
    fn two_by_two_euclidean() {
        let g =
            Grid::<f64>::build(&GridSpec::square(2).with_lengths(LengthMode::Euclidean)).unwrap();
        assert_eq!(g.undirected_link_count(), 6);
        assert_eq!(links_by_length(&g), (4, 2, 0));
    }

    #[test]
    fn cube_of_two_is_complete() {
        // Every offset in {0,1}^3 minus zero is a neighbor: C(8,2) = 28 pairs.
        let g = Grid::<f64>::build(&GridSpec::cube(2)).unwrap();
        assert_eq!(g.node_count(), 8);
        assert_eq!(g.undirected_link_count(), 28);
        let e = Grid::<f64>::build(&GridSpec::cube(2).with_lengths(LengthMode::Euclidean)).unwrap();
        assert_eq!(links_by_length(&e), (12, 12, 4));
    }

    #[test]
    fn interior_degrees() {
        let g = Grid::<f64>::build(&GridSpec::square(5)).unwrap();
        assert_eq!(g.degree(g.node_at(&[2, 2]).unwrap()), 8);
        assert_eq!(g.degree(0), 3);
        let c = Grid::<f64>::build(&GridSpec::cube(4)).unwrap();
        assert_eq!(c.degree(c.node_at(&[1, 2, 1]).unwrap()), 26);
        let o = Grid::<f64>::build(&GridSpec::cube(4).with_neighborhood(Neighborhood::Orthogonal))
            .unwrap();
        assert_eq!(o.degree(o.node_at(&[1, 2, 1]).unwrap()), 6);
    }

    #[test]
    fn link_count_formula_2d() {
        for n in 2..12 {
            let g = Grid::<f64>::build(&GridSpec::square(n)).unwrap();
            assert_eq!(
                g.undirected_link_count(),
                2 * n * (n - 1) + 2 * (n - 1) * (n - 1)
            );
        }
    }

    #[test]
    fn adjacency_is_symmetric() {
        for spec in [
            GridSpec::square(6).with_lengths(LengthMode::Euclidean),
            GridSpec::cube(4).with_lengths(LengthMode::Euclidean),
        ] {
            let g = Grid::<f64>::build(&spec).unwrap();
            for i in 0..g.node_count() {
                for (j, l) in g.neighbors(i) {
                    assert_eq!(g.link_length(j, i), Some(l));
                    let (a, b) = (g.coords(i), g.coords(j));
                    assert!((0..3).all(|k| a[k].abs_diff(b[k]) <= 1));
                }
            }
        }
    }

    #[test]
    fn chebyshev_and_stripes() {
        let g = Grid::<f64>::build(&GridSpec::square(5)).unwrap();
        assert_eq!(g.chebyshev_distance(g.outlet()), 0);
        assert_eq!(g.chebyshev_distance(g.node_at(&[4, 4]).unwrap()), 4);
        let mut sizes = vec![0; 5];
        for i in 0..g.node_count() {
            sizes[g.chebyshev_distance(i)] += 1;
        }
        assert_eq!(sizes, vec![1, 3, 5, 7, 9]);
    }

    #[test]
    fn every_node_has_a_closer_neighbor() {
        for spec in [
            GridSpec::square(7),
            GridSpec::square(6).with_outlet(vec![2, 3]),
            GridSpec::cube(4),
        ] {
            let g = Grid::<f64>::build(&spec).unwrap();
            for i in (0..g.node_count()).filter(|&i| i != g.outlet()) {
                let d = g.chebyshev_distance(i);
                assert!(g.neighbors(i).any(|(j, _)| g.chebyshev_distance(j) < d));
            }
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(Grid::<f64>::build(&GridSpec::square(1)).is_err());
        assert!(Grid::<f64>::build(&GridSpec::square(3).with_outlet(vec![3, 0])).is_err());
        assert!(Grid::<f64>::build(&GridSpec::square(3).with_outlet(vec![0, 0, 0])).is_err());
        let mut s = GridSpec::square(3);
        s.dimension = 4;
        assert!(Grid::<f64>::build(&s).is_err());
    }

    #[test]
    fn outlet_placement() {
        let g = Grid::<f64>::build(&GridSpec::cube(3).with_outlet(vec![2, 1, 0])).unwrap();
        assert_eq!(g.outlet(), 5);
        assert_eq!(g.coords(5), [2, 1, 0]);
        assert!(!g.outlet_is_corner());
    }
}
