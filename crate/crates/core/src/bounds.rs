//! Closed-form energy bounds for `n×n` eight-neighbor grids with a corner
//! outlet, and the stripe tree that attains the `γ = 1` optimum.
//!
//! Stripe `C_k` (k = 1..n) holds the `2k−1` nodes at Chebyshev distance `k−1`
//! from the outlet. Every path from beyond `C_k` crosses it, so at least
//! `|C_k| + n² − k²` units of area pass through the stripe.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{OcnError, Result};
use crate::grid::{Grid, Neighborhood, NodeId};
use crate::scalar::Scalar;
use crate::tree::Tree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// Stripe-wise concentration bound: `Σ_k lemma1_min(|C_k|, n²−k², γ)`.
    Lemma1,
    /// Exact `H₁` optimum, valid at `γ = 1`.
    H1Exact,
    /// `(3/2)n² − (7/2)n + 1`, valid at `γ = 1/2`.
    H05Lower,
    /// `n² − 3n + n^{2γ+1} − n^{2γ} − Σ_{k=2}^n k^{2γ}`.
    StripeGeneric,
}

impl BoundKind {
    pub fn name(self) -> &'static str {
        match self {
            BoundKind::Lemma1 => "lemma1",
            BoundKind::H1Exact => "h1_exact",
            BoundKind::H05Lower => "h05_lower",
            BoundKind::StripeGeneric => "stripe_generic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundResult<T> {
    pub n: u64,
    pub gamma: T,
    pub value: T,
    pub kind: BoundKind,
}

/// Optimum of `min Σ A_i^γ` subject to `Σ A_i = n + m`, `A_i ≥ 1` integer:
/// all area piled on one entry, `(n−1) + (m+1)^γ`.
pub fn lemma1_min<T: Scalar>(n: u64, m: u64, gamma: T) -> T {
    assert!(n >= 1, "problem needs at least one entry");
    T::of_count(n - 1) + T::of_count(m + 1).powf(gamma)
}

/// `(4n³ − 3n² − n) / 6`, the minimum of `H₁` under unit link lengths.
pub fn h1_optimal(n: u64) -> Ratio<i128> {
    let n = n as i128;
    Ratio::new(4 * n * n * n - 3 * n * n - n, 6)
}

/// `(3/2)n² − (7/2)n + 1`, a lower bound on `H_{1/2}` under unit lengths.
pub fn h05_lower(n: u64) -> Ratio<i128> {
    let n = n as i128;
    Ratio::new(3 * n * n, 2) - Ratio::new(7 * n, 2) + Ratio::from_integer(1)
}

/// The bound for general `γ` obtained by relaxing each stripe with concavity.
pub fn stripe_lower_bound<T: Scalar>(n: u64, gamma: T) -> T {
    let nf = T::of_count(n);
    let two_g = gamma + gamma;
    let tail: T = (2..=n).map(|k| T::of_count(k).powf(two_g)).sum();
    nf * nf - T::of(3.0) * nf + nf.powf(two_g + T::one()) - nf.powf(two_g) - tail
}

/// Sum over stripes `k = 2..n` of the concentration optimum with `|C_k| = 2k−1`
/// entries carrying `n² − k²` extra units.
pub fn stripe_lemma_bound<T: Scalar>(n: u64, gamma: T) -> T {
    (2..=n)
        .map(|k| lemma1_min(2 * k - 1, n * n - k * k, gamma))
        .sum()
}

pub fn ratio_to_scalar<T: Scalar>(r: Ratio<i128>) -> T {
    T::of(*r.numer() as f64) / T::of(*r.denom() as f64)
}

/// All bounds that apply to side `n` at this `γ`.
pub fn bound_table<T: Scalar>(n: u64, gamma: T) -> Vec<BoundResult<T>> {
    let mut rows = Vec::new();
    let row = |kind, value| BoundResult {
        n,
        gamma,
        value,
        kind,
    };
    if gamma == T::one() {
        rows.push(row(BoundKind::H1Exact, ratio_to_scalar(h1_optimal(n))));
    }
    if gamma == T::of(0.5) {
        rows.push(row(BoundKind::H05Lower, ratio_to_scalar(h05_lower(n))));
    }
    rows.push(row(BoundKind::Lemma1, stripe_lemma_bound(n, gamma)));
    rows.push(row(BoundKind::StripeGeneric, stripe_lower_bound(n, gamma)));
    rows
}

/// Spanning tree in which every link steps from stripe `C_k` into `C_{k−1}`,
/// choosing the smallest eligible neighbor id.
pub fn stripe_tree<T: Scalar>(grid: &Grid<T>) -> Result<Tree<T>> {
    if grid.dimension() != 2 {
        return Err(OcnError::Unsupported(
            "stripe trees are defined on 2D grids".into(),
        ));
    }
    if grid.spec().neighborhood != Neighborhood::Full {
        return Err(OcnError::Unsupported(
            "stripe trees need diagonal links".into(),
        ));
    }
    if !grid.outlet_is_corner() {
        return Err(OcnError::Unsupported(
            "stripe trees need a corner outlet".into(),
        ));
    }
    let parents: Vec<Option<NodeId>> = (0..grid.node_count())
        .map(|i| {
            if i == grid.outlet() {
                return None;
            }
            let d = grid.chebyshev_distance(i);
            grid.neighbors(i)
                .map(|(j, _)| j)
                .filter(|&j| grid.chebyshev_distance(j) + 1 == d)
                .min()
        })
        .collect();
    Tree::on_grid(grid, &parents)
}

/// Visits every spanning tree of `grid` rooted at its outlet, as a parent
/// map. Gives up with a configuration error when the raw search space (the
/// product of node degrees) exceeds `budget`.
pub fn enumerate_spanning_trees<T: Scalar, F: FnMut(&[Option<NodeId>])>(
    grid: &Grid<T>,
    budget: f64,
    mut visit: F,
) -> Result<u64> {
    let root = grid.outlet();
    let n = grid.node_count();
    let space: f64 = (0..n)
        .filter(|&i| i != root)
        .map(|i| grid.degree(i) as f64)
        .product();
    if space > budget {
        return Err(OcnError::config(format!(
            "search space {space:.3e} exceeds enumeration budget {budget:.3e}"
        )));
    }
    // Assign parents in breadth-first order from the outlet so early prefixes
    // already form long chains and cycles are pruned early.
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    seen[root] = true;
    order.push(root);
    let mut head = 0;
    while head < order.len() {
        let u = order[head];
        head += 1;
        for (v, _) in grid.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                order.push(v);
            }
        }
    }
    let mut parents: Vec<Option<NodeId>> = vec![None; n];
    let mut count = 0u64;
    enumerate_rec(
        grid,
        &order[1..],
        root,
        &mut parents,
        &mut count,
        &mut visit,
    );
    Ok(count)
}

fn enumerate_rec<T: Scalar, F: FnMut(&[Option<NodeId>])>(
    grid: &Grid<T>,
    rest: &[NodeId],
    root: NodeId,
    parents: &mut Vec<Option<NodeId>>,
    count: &mut u64,
    visit: &mut F,
) {
    let Some((&i, tail)) = rest.split_first() else {
        *count += 1;
        visit(parents);
        return;
    };
    for (j, _) in grid.neighbors(i) {
        // following assigned parents from j must not come back to i
        let mut cur = j;
        let mut closes = false;
        while cur != root {
            if cur == i {
                closes = true;
                break;
            }
            match parents[cur] {
                Some(p) => cur = p,
                None => break,
            }
        }
        if closes {
            continue;
        }
        parents[i] = Some(j);
        enumerate_rec(grid, tail, root, parents, count, visit);
    }
    parents[i] = None;
}
