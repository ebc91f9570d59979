//! Steiner trees under the OCN energy and the crossover `γ*`.
//!
//! # Geometry files
//!
//! A Steiner tree is stored as JSON:
//!
//! ```json
//! {
//!   "provenance": "free text, optional",
//!   "outlet": 0,
//!   "nodes": [
//!     { "id": 0, "x": 0.0, "y": 0.0, "terminal": true },
//!     { "id": 4, "x": 0.2886751345948129, "y": 0.5, "terminal": false }
//!   ],
//!   "edges": [[0, 4], [4, 1]]
//! }
//! ```
//!
//! `id`s are arbitrary distinct non-negative integers; `edges` are undirected
//! pairs of ids. The edges must form a tree over all nodes, every leaf must be
//! a terminal and the outlet must be a terminal. For comparison against an
//! OCN the terminals must be exactly the integer points `{0..n-1}²`.

use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{OcnError, Result};
use crate::grid::{Grid, GridSpec, LengthMode};
use crate::metrics::{compute_areas, energy, EnergyParams};
use crate::optimizer::OptimizerConfig;
use crate::sampler::RngSeed;
use crate::scalar::{pow_area, Scalar};
use crate::tree::Tree;

/// Number of evenly spaced `γ` values scanned on `[0, 1]`.
pub const CURVE_SAMPLES: usize = 1001;

const COORD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteinerNode {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub terminal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteinerTreeSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
    pub outlet: usize,
    pub nodes: Vec<SteinerNode>,
    pub edges: Vec<[usize; 2]>,
}

impl SteinerTreeSpec {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| OcnError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let spec = Self::from_json(&text).map_err(|source| OcnError::Json {
            path: path.display().to_string(),
            source,
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn terminal_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.terminal).count()
    }

    fn index(&self) -> Result<HashMap<usize, usize>> {
        let mut index = HashMap::with_capacity(self.nodes.len());
        for (k, n) in self.nodes.iter().enumerate() {
            if !(n.x.is_finite() && n.y.is_finite()) {
                return Err(OcnError::structure(format!(
                    "node {} has non-finite coordinates",
                    n.id
                )));
            }
            if index.insert(n.id, k).is_some() {
                return Err(OcnError::structure(format!("duplicate node id {}", n.id)));
            }
        }
        Ok(index)
    }

    /// Checks the tree invariants listed in the module docs.
    pub fn validate(&self) -> Result<()> {
        self.adjacency().map(|_| ())
    }

    fn adjacency(&self) -> Result<(HashMap<usize, usize>, Vec<Vec<usize>>)> {
        let index = self.index()?;
        let n = self.nodes.len();
        if n == 0 {
            return Err(OcnError::structure("Steiner tree has no nodes"));
        }
        let outlet = *index
            .get(&self.outlet)
            .ok_or_else(|| OcnError::structure(format!("outlet {} is not a node", self.outlet)))?;
        if !self.nodes[outlet].terminal {
            return Err(OcnError::structure("outlet must be a terminal"));
        }
        if self.edges.len() != n - 1 {
            return Err(OcnError::structure(format!(
                "{} nodes need {} edges, found {}",
                n,
                n - 1,
                self.edges.len()
            )));
        }
        let mut adj = vec![Vec::new(); n];
        for &[a, b] in &self.edges {
            let (Some(&ia), Some(&ib)) = (index.get(&a), index.get(&b)) else {
                return Err(OcnError::structure(format!(
                    "edge ({a},{b}) names an unknown node"
                )));
            };
            if ia == ib {
                return Err(OcnError::structure(format!("self-loop at node {a}")));
            }
            adj[ia].push(ib);
            adj[ib].push(ia);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![outlet];
        seen[outlet] = true;
        let mut reached = 1;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    reached += 1;
                    stack.push(v);
                }
            }
        }
        if reached != n {
            return Err(OcnError::structure("edges do not connect all nodes"));
        }
        for (k, node) in self.nodes.iter().enumerate() {
            if adj[k].len() <= 1 && !node.terminal && n > 1 {
                return Err(OcnError::structure(format!(
                    "leaf {} is not a terminal",
                    node.id
                )));
            }
        }
        Ok((index, adj))
    }

    /// Side `n` when the terminals are exactly the lattice points `{0..n-1}²`.
    pub fn lattice_side(&self) -> Result<usize> {
        let t = self.terminal_count();
        let side = (t as f64).sqrt().round() as usize;
        if side * side != t {
            return Err(OcnError::structure(format!(
                "{t} terminals do not form a square lattice"
            )));
        }
        let mut hit = vec![false; t];
        for node in self.nodes.iter().filter(|n| n.terminal) {
            let (x, y) = lattice_point(node, side).ok_or_else(|| {
                OcnError::structure(format!("terminal {} is not a lattice point", node.id))
            })?;
            if std::mem::replace(&mut hit[y * side + x], true) {
                return Err(OcnError::structure(format!(
                    "terminal {} repeats a lattice point",
                    node.id
                )));
            }
        }
        Ok(side)
    }

    /// Grid on which the comparison OCN lives: the terminal lattice with
    /// euclidean lengths and the outlet at the Steiner outlet's position.
    pub fn ocn_grid_spec(&self) -> Result<GridSpec> {
        let side = self.lattice_side()?;
        let outlet = &self.nodes[self.index()?[&self.outlet]];
        let (x, y) = lattice_point(outlet, side).expect("outlet is a terminal");
        Ok(GridSpec::square(side)
            .with_lengths(LengthMode::Euclidean)
            .with_outlet(vec![x, y]))
    }
}

fn lattice_point(node: &SteinerNode, side: usize) -> Option<(usize, usize)> {
    let (rx, ry) = (node.x.round(), node.y.round());
    let ok = (node.x - rx).abs() <= COORD_TOL
        && (node.y - ry).abs() <= COORD_TOL
        && rx >= 0.0
        && ry >= 0.0
        && (rx as usize) < side
        && (ry as usize) < side;
    ok.then_some((rx as usize, ry as usize))
}

/// A Steiner tree directed toward its outlet. Node `k` is `spec.nodes[k]`.
#[derive(Debug, Clone)]
pub struct SteinerTree<T> {
    pub tree: Tree<T>,
    pub terminal: Vec<bool>,
    pub ids: Vec<usize>,
}

/// Orients every edge toward the outlet; link lengths are euclidean.
pub fn direct_steiner_tree<T: Scalar>(spec: &SteinerTreeSpec) -> Result<SteinerTree<T>> {
    let (index, adj) = spec.adjacency()?;
    let n = spec.nodes.len();
    let root = index[&spec.outlet];
    let mut parents = vec![None; n];
    let mut lens = vec![T::zero(); n];
    let mut seen = vec![false; n];
    seen[root] = true;
    let mut stack = vec![root];
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                parents[v] = Some(u);
                let (a, b) = (&spec.nodes[u], &spec.nodes[v]);
                lens[v] = T::of((a.x - b.x).hypot(a.y - b.y));
                stack.push(v);
            }
        }
    }
    Ok(SteinerTree {
        tree: Tree::new(&parents, lens)?,
        terminal: spec.nodes.iter().map(|n| n.terminal).collect(),
        ids: spec.nodes.iter().map(|n| n.id).collect(),
    })
}

/// Terminals in each node's subtree; Steiner points add nothing themselves.
pub fn steiner_areas<T: Scalar>(st: &SteinerTree<T>) -> Result<Vec<u64>> {
    let order = st.tree.topological_order()?;
    let mut area: Vec<u64> = st.terminal.iter().map(|&t| t as u64).collect();
    for &u in order.iter().rev() {
        if let Some(p) = st.tree.parent(u) {
            area[p] += area[u];
        }
    }
    Ok(area)
}

/// `Σ A^γ l` over non-root nodes, with `0⁰ = 1`.
pub fn steiner_energy<T: Scalar>(st: &SteinerTree<T>, areas: &[u64], gamma: T) -> T {
    let root = st.tree.root();
    areas
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != root)
        .map(|(i, &a)| pow_area(a, gamma) * st.tree.link_length(i))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossoverResult<T> {
    /// Smallest root of `H_γ(OCN) − H_γ(Steiner)` on `[0, 1]`.
    pub gamma_star: Option<T>,
    pub ocn_energy_at_star: Option<T>,
    pub steiner_energy_at_star: Option<T>,
    pub bracket_width: T,
    /// Sign changes found on the scan grid.
    pub sign_changes: usize,
    /// `H_0(OCN) − H_0(Steiner)`.
    pub gap_at_zero: T,
}

impl<T> CrossoverResult<T> {
    pub fn has_multiple_roots(&self) -> bool {
        self.sign_changes > 1
    }
}

/// Energy pair of an OCN and a Steiner tree, evaluated at any `γ`.
pub struct EnergyPair<'a, T> {
    ocn: &'a Tree<T>,
    ocn_areas: Vec<u64>,
    steiner: &'a SteinerTree<T>,
    steiner_areas: Vec<u64>,
}

impl<'a, T: Scalar> EnergyPair<'a, T> {
    pub fn new(ocn: &'a Tree<T>, steiner: &'a SteinerTree<T>) -> Result<Self> {
        let terminals = steiner.terminal.iter().filter(|&&t| t).count();
        if terminals != ocn.len() {
            return Err(OcnError::config(format!(
                "OCN has {} nodes but the Steiner tree has {terminals} terminals",
                ocn.len()
            )));
        }
        Ok(Self {
            ocn,
            ocn_areas: compute_areas(ocn)?,
            steiner,
            steiner_areas: steiner_areas(steiner)?,
        })
    }

    pub fn ocn_energy(&self, gamma: T) -> T {
        energy(self.ocn, &self.ocn_areas, EnergyParams { gamma })
    }

    pub fn steiner_energy(&self, gamma: T) -> T {
        steiner_energy(self.steiner, &self.steiner_areas, gamma)
    }

    pub fn gap(&self, gamma: T) -> T {
        self.ocn_energy(gamma) - self.steiner_energy(gamma)
    }

    /// `(γ, H_γ(OCN), H_γ(Steiner))` at `samples` evenly spaced points.
    pub fn curves(&self, samples: usize) -> Vec<(T, T, T)> {
        scan_grid::<T>(samples)
            .into_iter()
            .map(|g| (g, self.ocn_energy(g), self.steiner_energy(g)))
            .collect()
    }

    /// Scans [`CURVE_SAMPLES`] points for sign changes of the gap, then
    /// bisects the first bracket down to `tol`.
    pub fn crossover(&self, tol: T) -> Result<CrossoverResult<T>> {
        if !(tol > T::zero()) {
            return Err(OcnError::config(format!(
                "tolerance must be positive, got {tol}"
            )));
        }
        let grid = scan_grid::<T>(CURVE_SAMPLES);
        let f: Vec<T> = grid.iter().map(|&g| self.gap(g)).collect();
        let sign = |v: T| {
            if v > T::zero() {
                1
            } else if v < T::zero() {
                -1
            } else {
                0
            }
        };
        // brackets between consecutive nonzero values of opposite sign
        let mut brackets = Vec::new();
        let mut last: Option<usize> = None;
        for (k, &v) in f.iter().enumerate() {
            if sign(v) == 0 {
                continue;
            }
            if let Some(p) = last {
                if sign(f[p]) != sign(v) {
                    brackets.push((p, k));
                }
            }
            last = Some(k);
        }
        let mut out = CrossoverResult {
            gamma_star: None,
            ocn_energy_at_star: None,
            steiner_energy_at_star: None,
            bracket_width: T::zero(),
            sign_changes: brackets.len(),
            gap_at_zero: f[0],
        };
        let Some(&(p, k)) = brackets.first() else {
            return Ok(out);
        };
        let (mut lo, mut hi) = (grid[p], grid[k]);
        let lo_sign = sign(f[p]);
        while hi - lo > tol {
            let mid = lo + (hi - lo) / T::of(2.0);
            if mid <= lo || mid >= hi {
                break;
            }
            let s = sign(self.gap(mid));
            if s == 0 {
                lo = mid;
                hi = mid;
            } else if s == lo_sign {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let star = lo + (hi - lo) / T::of(2.0);
        out.gamma_star = Some(star);
        out.ocn_energy_at_star = Some(self.ocn_energy(star));
        out.steiner_energy_at_star = Some(self.steiner_energy(star));
        out.bracket_width = hi - lo;
        Ok(out)
    }
}

fn scan_grid<T: Scalar>(samples: usize) -> Vec<T> {
    let last = (samples.max(2) - 1) as u64;
    (0..=last)
        .map(|k| T::of_count(k) / T::of_count(last))
        .collect()
}

/// Crossover between an OCN (euclidean lengths) and a Steiner tree.
pub fn crossover_gamma<T: Scalar>(
    ocn: &Tree<T>,
    steiner: &SteinerTreeSpec,
    tol: T,
) -> Result<CrossoverResult<T>> {
    let st = direct_steiner_tree(steiner)?;
    EnergyPair::new(ocn, &st)?.crossover(tol)
}

/// Seed batch searched for the comparison OCN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BestOcnConfig {
    pub gamma: f64,
    pub seeds: usize,
    pub base_seed: u64,
}

impl Default for BestOcnConfig {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            seeds: 64,
            base_seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BestOcn<T> {
    pub seed: RngSeed,
    pub tree: Tree<T>,
    pub energy: T,
}

/// Lowest-energy local optimum over the seed batch. Equal energies (within a
/// relative `1e-12`) are resolved by the lower `H_1`, then the lower seed.
pub fn best_ocn<T: Scalar>(spec: &GridSpec, config: &BestOcnConfig) -> Result<BestOcn<T>> {
    if config.seeds == 0 {
        return Err(OcnError::config("seed batch must be non-empty"));
    }
    let grid = Grid::<T>::build(spec)?;
    let opt = OptimizerConfig::with_gamma(T::of(config.gamma));
    let seeds = crate::ensemble::seed_range(config.base_seed, config.seeds);
    let runs: Vec<(RngSeed, Tree<T>, T, T)> = seeds
        .par_iter()
        .map(|&s| {
            let run = crate::ensemble::run_one(&grid, &opt, s)?;
            let areas = compute_areas(&run.tree)?;
            let h1 = energy(&run.tree, &areas, EnergyParams { gamma: T::one() });
            Ok((s, run.tree, run.report.final_energy, h1))
        })
        .collect::<Result<_>>()?;
    let tie = |a: T, b: T| (a - b).abs() <= T::of(1e-12) * a.abs().max(b.abs());
    let best = runs
        .into_iter()
        .reduce(|best, cand| {
            let better = if tie(cand.2, best.2) {
                cand.3 < best.3 && !tie(cand.3, best.3)
            } else {
                cand.2 < best.2
            };
            if better {
                cand
            } else {
                best
            }
        })
        .expect("non-empty batch");
    Ok(BestOcn {
        seed: best.0,
        tree: best.1,
        energy: best.2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn unit_square() -> SteinerTreeSpec {
        let s = 1.0 / (2.0 * 3f64.sqrt());
        let node = |id, x, y, terminal| SteinerNode { id, x, y, terminal };
        SteinerTreeSpec {
            provenance: None,
            outlet: 0,
            nodes: vec![
                node(0, 0.0, 0.0, true),
                node(1, 1.0, 0.0, true),
                node(2, 0.0, 1.0, true),
                node(3, 1.0, 1.0, true),
                node(4, s, 0.5, false),
                node(5, 1.0 - s, 0.5, false),
            ],
            edges: vec![[0, 4], [2, 4], [4, 5], [5, 1], [5, 3]],
        }
    }

    fn path(n: usize) -> SteinerTreeSpec {
        SteinerTreeSpec {
            provenance: None,
            outlet: 0,
            nodes: (0..n)
                .map(|i| SteinerNode {
                    id: i,
                    x: i as f64,
                    y: 0.0,
                    terminal: true,
                })
                .collect(),
            edges: (1..n).map(|i| [i - 1, i]).collect(),
        }
    }

    #[test]
    fn unit_square_tree() {
        let st = direct_steiner_tree::<f64>(&unit_square()).unwrap();
        let a = steiner_areas(&st).unwrap();
        assert_eq!(a[0], 4);
        assert_eq!(a[4], 3);
        assert_eq!(a[5], 2);
        let len = steiner_energy(&st, &a, 0.0);
        assert!((len - (1.0 + 3f64.sqrt())).abs() < 1e-12);
        assert_eq!(st.tree.parents().iter().flatten().count(), 5);
    }

    #[test]
    fn all_terminal_path() {
        let st = direct_steiner_tree::<f64>(&path(3)).unwrap();
        let a = steiner_areas(&st).unwrap();
        assert_eq!(a, vec![3, 2, 1]);
        assert_eq!(a, compute_areas(&st.tree).unwrap());
        let st = direct_steiner_tree::<f64>(&path(6)).unwrap();
        let a = steiner_areas(&st).unwrap();
        assert_eq!(steiner_energy(&st, &a, 1.0), 15.0);
    }

    #[test]
    fn segment() {
        let mut s = path(2);
        s.nodes[1].x = 3.0;
        s.nodes[1].y = 4.0;
        let st = direct_steiner_tree::<f64>(&s).unwrap();
        assert_eq!(st.tree.link_length(1), 5.0);
    }

    #[test]
    fn redirecting_reverses_the_outlet_path() {
        let mut s = unit_square();
        let a = direct_steiner_tree::<f64>(&s).unwrap().tree.parents();
        s.outlet = 3;
        let b = direct_steiner_tree::<f64>(&s).unwrap().tree.parents();
        // old path 0 -> 4 -> 5 -> 3 now runs 3 -> 5 -> 4 -> 0
        assert_eq!((a[4], a[5], a[3]), (Some(0), Some(4), Some(5)));
        assert_eq!((b[0], b[4], b[5]), (Some(4), Some(5), Some(3)));
        assert_eq!((a[1], a[2]), (b[1], b[2]));
    }

    #[test]
    fn invalid_specs() {
        let mut s = unit_square();
        s.edges.pop();
        assert!(s.validate().is_err());
        let mut s = unit_square();
        s.edges[4] = [4, 0];
        assert!(s.validate().is_err());
        let mut s = unit_square();
        s.nodes[3].terminal = false;
        assert!(s.validate().is_err());
        let mut s = unit_square();
        s.outlet = 4;
        assert!(s.validate().is_err());
        let mut s = unit_square();
        s.nodes[1].id = 0;
        assert!(s.validate().is_err());
        assert!(unit_square().validate().is_ok());
    }

    #[test]
    fn lattice_and_grid_spec() {
        let s = unit_square();
        assert_eq!(s.lattice_side().unwrap(), 2);
        let g = s.ocn_grid_spec().unwrap();
        assert_eq!(g.outlet, Some(vec![0, 0]));
        assert!(path(3).lattice_side().is_err());
    }

    #[test]
    fn identical_trees_have_no_crossover() {
        let spec = path(4);
        let st = direct_steiner_tree::<f64>(&spec).unwrap();
        let r = crossover_gamma(&st.tree, &spec, 1e-12).unwrap();
        assert!(r.gamma_star.is_none());
        assert_eq!(r.sign_changes, 0);
        assert!(crossover_gamma(&st.tree, &spec, 0.0).is_err());
    }

    #[test]
    fn unit_square_crossover() {
        let spec = unit_square();
        let grid = Grid::<f64>::build(&spec.ocn_grid_spec().unwrap()).unwrap();
        // every corner drains straight to the outlet
        let star = Tree::on_grid(&grid, &[None, Some(0), Some(0), Some(0)]).unwrap();
        let r = crossover_gamma(&star, &spec, 1e-14).unwrap();
        let g = r.gamma_star.unwrap();
        assert!((g - 0.554_331_531_888_258_1).abs() < 1e-12, "{g}");
        assert!(r.gap_at_zero > 0.0);
        assert_eq!(r.sign_changes, 1);
        let diff = r.ocn_energy_at_star.unwrap() - r.steiner_energy_at_star.unwrap();
        assert!(diff.abs() < 1e-12);
    }
}
