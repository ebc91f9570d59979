use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{OcnError, Result};
use crate::grid::{Grid, GridSpec, LengthMode, Neighborhood, NodeId};
use crate::scalar::Scalar;

const NO_PARENT: u32 = u32::MAX;

/// Directed spanning tree stored as a parent map. Every node except the root
/// links to exactly one parent; `link_length(i)` is the weight `l_i` of the
/// link out of `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree<T> {
    parent: Vec<u32>,
    link_len: Vec<T>,
    root: NodeId,
}

impl<T: Scalar> Tree<T> {
    /// Builds a tree from an explicit parent map and per-node link lengths.
    /// The root's length entry is ignored.
    pub fn new(parents: &[Option<NodeId>], link_len: Vec<T>) -> Result<Self> {
        if parents.len() != link_len.len() {
            return Err(OcnError::structure(format!(
                "{} parents but {} link lengths",
                parents.len(),
                link_len.len()
            )));
        }
        if parents.len() > NO_PARENT as usize {
            return Err(OcnError::structure("too many nodes"));
        }
        let roots: Vec<NodeId> = (0..parents.len())
            .filter(|&i| parents[i].is_none())
            .collect();
        if roots.len() != 1 {
            return Err(OcnError::structure(format!(
                "expected exactly one root, found {}",
                roots.len()
            )));
        }
        let mut parent = Vec::with_capacity(parents.len());
        for (i, p) in parents.iter().enumerate() {
            match *p {
                Some(p) if p >= parents.len() => {
                    return Err(OcnError::structure(format!(
                        "node {i} has parent {p} out of range"
                    )))
                }
                Some(p) if p == i => {
                    return Err(OcnError::structure(format!("node {i} is its own parent")))
                }
                Some(p) => parent.push(p as u32),
                None => parent.push(NO_PARENT),
            }
        }
        let mut link_len = link_len;
        link_len[roots[0]] = T::zero();
        let tree = Self {
            parent,
            link_len,
            root: roots[0],
        };
        tree.topological_order()?;
        Ok(tree)
    }

    /// Builds a tree whose links must all be links of `grid`, rooted at the
    /// grid's outlet. Link lengths are taken from the grid.
    pub fn on_grid(grid: &Grid<T>, parents: &[Option<NodeId>]) -> Result<Self> {
        if parents.len() != grid.node_count() {
            return Err(OcnError::structure(format!(
                "parent map has {} entries, grid has {} nodes",
                parents.len(),
                grid.node_count()
            )));
        }
        if parents[grid.outlet()].is_some() {
            return Err(OcnError::structure(format!(
                "outlet {} must not have a parent",
                grid.outlet()
            )));
        }
        let mut lens = vec![T::zero(); parents.len()];
        for (i, p) in parents.iter().enumerate() {
            if let Some(p) = *p {
                lens[i] = grid.link_length(i, p).ok_or_else(|| {
                    OcnError::structure(format!("link {i}->{p} is not a grid link"))
                })?;
            }
        }
        Self::new(parents, lens)
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn parent(&self, node: NodeId) -> Option<NodeId> {
        match self.parent[node] {
            NO_PARENT => None,
            p => Some(p as NodeId),
        }
    }

    pub fn parents(&self) -> Vec<Option<NodeId>> {
        (0..self.len()).map(|i| self.parent(i)).collect()
    }

    pub fn link_length(&self, node: NodeId) -> T {
        self.link_len[node]
    }

    pub fn link_lengths(&self) -> &[T] {
        &self.link_len
    }

    /// Redirects `node` to `new_parent`. Callers are responsible for
    /// acyclicity.
    pub(crate) fn set_parent(&mut self, node: NodeId, new_parent: NodeId, len: T) {
        debug_assert_ne!(node, self.root);
        self.parent[node] = new_parent as u32;
        self.link_len[node] = len;
    }

    pub(crate) fn raw_parent(&self) -> &[u32] {
        &self.parent
    }

    /// Children in compressed form: `children[offsets[i]..offsets[i+1]]`,
    /// each run in ascending node order.
    pub fn children(&self) -> (Vec<usize>, Vec<NodeId>) {
        let n = self.len();
        let mut offsets = vec![0usize; n + 1];
        for &p in &self.parent {
            if p != NO_PARENT {
                offsets[p as usize + 1] += 1;
            }
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut kids = vec![0; offsets[n]];
        for (i, &p) in self.parent.iter().enumerate() {
            if p != NO_PARENT {
                kids[fill[p as usize]] = i;
                fill[p as usize] += 1;
            }
        }
        (offsets, kids)
    }

    /// Breadth-first order from the root, so parents always precede their
    /// children. Fails if some node cannot reach the root.
    pub fn topological_order(&self) -> Result<Vec<NodeId>> {
        let (offsets, kids) = self.children();
        let mut order = Vec::with_capacity(self.len());
        order.push(self.root);
        let mut head = 0;
        while head < order.len() {
            let u = order[head];
            head += 1;
            order.extend_from_slice(&kids[offsets[u]..offsets[u + 1]]);
        }
        if order.len() != self.len() {
            return Err(OcnError::structure(format!(
                "{} nodes do not drain to the root (cycle)",
                self.len() - order.len()
            )));
        }
        Ok(order)
    }

    /// `x ≤ y`: `x` lies on the path from `y` to the root (reflexive).
    pub fn is_upstream(&self, x: NodeId, y: NodeId) -> bool {
        let mut cur = y;
        let mut steps = 0;
        loop {
            if cur == x {
                return true;
            }
            match self.parent(cur) {
                Some(p) => cur = p,
                None => return false,
            }
            steps += 1;
            if steps > self.len() {
                return false;
            }
        }
    }

    /// Re-checks every structural invariant, including grid adjacency when a
    /// grid is supplied.
    pub fn validate(&self, grid: Option<&Grid<T>>) -> Result<()> {
        let roots = self.parent.iter().filter(|&&p| p == NO_PARENT).count();
        if roots != 1 || self.parent[self.root] != NO_PARENT {
            return Err(OcnError::structure("tree must have exactly one root"));
        }
        if let Some(g) = grid {
            if g.node_count() != self.len() || g.outlet() != self.root {
                return Err(OcnError::structure("tree does not match grid"));
            }
            for i in 0..self.len() {
                if let Some(p) = self.parent(i) {
                    match g.link_length(i, p) {
                        Some(l) if l == self.link_len[i] => {}
                        _ => {
                            return Err(OcnError::structure(format!(
                                "link {i}->{p} is not a grid link of the stored length"
                            )))
                        }
                    }
                }
            }
        }
        self.topological_order().map(|_| ())
    }

    pub fn to_record(&self, spec: &GridSpec) -> TreeRecord {
        TreeRecord {
            dimension: spec.dimension,
            side: spec.side,
            length_mode: spec.length_mode,
            neighborhood: spec.neighborhood,
            outlet: self.root,
            parent: self
                .parent
                .iter()
                .map(|&p| if p == NO_PARENT { -1 } else { p as i64 })
                .collect(),
        }
    }
}

/// Portable tree file: grid shape, outlet id and the parent array, with `-1`
/// marking the outlet. Node ids follow the grid's row-major numbering.
///
/// ```json
/// {"dimension":2,"side":2,"length_mode":"unit","neighborhood":"full",
///  "outlet":0,"parent":[-1,0,0,0]}
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeRecord {
    pub dimension: usize,
    pub side: usize,
    #[serde(default)]
    pub length_mode: LengthMode,
    #[serde(default)]
    pub neighborhood: Neighborhood,
    pub outlet: NodeId,
    pub parent: Vec<i64>,
}

impl TreeRecord {
    pub fn grid_spec(&self) -> GridSpec {
        let n = self.side.max(1);
        let dim = self.dimension;
        let coords = [
            self.outlet % n,
            (self.outlet / n) % n,
            self.outlet / (n * n),
        ];
        GridSpec {
            dimension: dim,
            side: self.side,
            length_mode: self.length_mode,
            neighborhood: self.neighborhood,
            outlet: if self.outlet == 0 {
                None
            } else {
                Some(coords[..dim.min(3)].to_vec())
            },
        }
    }

    /// Rebuilds the grid and the validated tree.
    pub fn to_tree<T: Scalar>(&self) -> Result<(Grid<T>, Tree<T>)> {
        let grid = Grid::build(&self.grid_spec())?;
        if grid.outlet() != self.outlet {
            return Err(OcnError::structure(format!(
                "outlet {} outside the grid",
                self.outlet
            )));
        }
        let parents: Vec<Option<NodeId>> = self
            .parent
            .iter()
            .map(|&p| if p < 0 { None } else { Some(p as NodeId) })
            .collect();
        let tree = Tree::on_grid(&grid, &parents)?;
        Ok((grid, tree))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("tree record serializes")
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n").map_err(|source| OcnError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| OcnError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text).map_err(|source| OcnError::Json {
            path: path.display().to_string(),
            source,
        })
    }
}
