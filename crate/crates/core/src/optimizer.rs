//! Greedy single-link rewiring.
//!
//! Each iteration picks a random non-outlet node `i` and a random grid
//! neighbor `j` other than its current parent, and redirects `i` to `j`. The
//! move is dropped if it closes a loop and is kept only if it strictly lowers
//! `H_γ`. Areas are maintained incrementally: only the nodes between the old
//! and new parents and their lowest common ancestor change.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{OcnError, Result};
use crate::grid::{Grid, NodeId};
use crate::metrics::{compute_areas, energy, EnergyParams};
use crate::sampler::RngSeed;
use crate::scalar::{pow_area, Scalar};
use crate::tree::Tree;

/// How the improvement ratio is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvergenceRule {
    /// Improvements over the most recent `window` iterations.
    #[default]
    Windowed,
    /// Improvements over all iterations so far (checked once `window`
    /// iterations have run).
    Lifetime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig<T> {
    pub gamma: T,
    /// Converged once improvements / iterations drops to this ratio.
    pub improvement_ratio_threshold: f64,
    /// Ratio used instead when the grid has more than `large_grid_nodes` nodes.
    pub large_grid_threshold: f64,
    pub large_grid_nodes: usize,
    /// Iterations in the measuring window; `None` means `max(50·nodes, 1000)`.
    pub window: Option<u64>,
    pub rule: ConvergenceRule,
    /// Safety cap; `None` means `5000·nodes` (at least 10⁶).
    pub max_iterations: Option<u64>,
    pub seed: RngSeed,
    /// Minimum decrease for a move to count as an improvement.
    pub accept_epsilon: f64,
    /// Re-verify the tree and the incremental state every this many accepted
    /// moves. `None` disables verification.
    pub verify_every: Option<u64>,
    /// Record `(iteration, energy)` every this many iterations; `None` means
    /// once per node count.
    pub trajectory_every: Option<u64>,
    /// After the random phase stops, sweep every rewire in node order and
    /// apply improving ones until a full pass finds none, so the result is a
    /// true local minimum.
    pub final_sweep: bool,
}

impl<T: Scalar> Default for OptimizerConfig<T> {
    fn default() -> Self {
        Self {
            gamma: T::of(0.5),
            improvement_ratio_threshold: 0.01,
            large_grid_threshold: 0.02,
            large_grid_nodes: 3600,
            window: None,
            rule: ConvergenceRule::Windowed,
            max_iterations: None,
            seed: RngSeed(0),
            accept_epsilon: 1e-12,
            verify_every: None,
            trajectory_every: None,
            final_sweep: true,
        }
    }
}

impl<T: Scalar> OptimizerConfig<T> {
    pub fn with_gamma(gamma: T) -> Self {
        Self {
            gamma,
            ..Self::default()
        }
    }

    pub fn threshold_for(&self, nodes: usize) -> f64 {
        if nodes > self.large_grid_nodes {
            self.large_grid_threshold
        } else {
            self.improvement_ratio_threshold
        }
    }

    pub fn window_for(&self, nodes: usize) -> u64 {
        self.window.unwrap_or_else(|| (50 * nodes as u64).max(1000))
    }

    pub fn max_iterations_for(&self, nodes: usize) -> u64 {
        self.max_iterations
            .unwrap_or_else(|| (5000 * nodes as u64).max(1_000_000))
    }

    pub fn validate(&self, nodes: usize) -> Result<()> {
        EnergyParams::new(self.gamma)?;
        for (name, t) in [
            (
                "improvement_ratio_threshold",
                self.improvement_ratio_threshold,
            ),
            ("large_grid_threshold", self.large_grid_threshold),
        ] {
            if !(t > 0.0 && t < 1.0) {
                return Err(OcnError::config(format!(
                    "{name} must lie in (0,1), got {t}"
                )));
            }
        }
        if self.window_for(nodes) < 1000 {
            return Err(OcnError::config("window must be at least 1000 iterations"));
        }
        if self.max_iterations_for(nodes) == 0 {
            return Err(OcnError::config("max_iterations must be positive"));
        }
        if self.verify_every == Some(0) || self.trajectory_every == Some(0) {
            return Err(OcnError::config("cadences must be positive"));
        }
        if !(self.accept_epsilon >= 0.0) {
            return Err(OcnError::config("accept_epsilon must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeReport<T> {
    pub iterations: u64,
    pub improvements: u64,
    pub rejected_loops: u64,
    pub rejected_worse: u64,
    pub initial_energy: T,
    pub final_energy: T,
    pub energy_trajectory: Vec<(u64, T)>,
    pub converged: bool,
    pub verified_checkpoints: u64,
    /// Largest relative gap between the tracked energy and a full recompute
    /// seen at any checkpoint.
    pub max_energy_drift: T,
    /// Moves applied by the final sweep (not counted in `iterations`).
    pub sweep_moves: u64,
}

impl<T: Scalar> OptimizeReport<T> {
    /// Writes the trajectory as `iteration,energy` CSV rows.
    pub fn write_trajectory_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "iteration,energy")?;
        for (it, e) in &self.energy_trajectory {
            writeln!(out, "{it},{e}")?;
        }
        Ok(())
    }
}

/// Picks a uniformly random non-root node and a uniformly random grid neighbor
/// of it other than its current parent.
pub fn propose_rewire<T: Scalar, R: Rng>(
    tree: &Tree<T>,
    grid: &Grid<T>,
    rng: &mut R,
) -> (NodeId, NodeId) {
    propose(tree.raw_parent(), tree.root(), grid, rng)
}

/// True when redirecting `i` to `j` would close a loop, i.e. `i` already lies
/// on `j`'s path to the outlet.
pub fn creates_loop<T: Scalar>(tree: &Tree<T>, i: NodeId, j: NodeId) -> bool {
    tree.is_upstream(i, j)
}

/// `H_γ(T*) − H_γ(T)` for redirecting `i` to the grid neighbor `j`, evaluated
/// only along the two paths that change.
pub fn delta_energy<T: Scalar>(
    tree: &Tree<T>,
    grid: &Grid<T>,
    areas: &[u64],
    i: NodeId,
    j: NodeId,
    params: EnergyParams<T>,
) -> Result<T> {
    if i == tree.root() {
        return Err(OcnError::Contract("the outlet cannot be rewired".into()));
    }
    let new_len = grid
        .link_length(i, j)
        .ok_or_else(|| OcnError::Contract(format!("{j} is not a grid neighbor of {i}")))?;
    if creates_loop(tree, i, j) {
        return Err(OcnError::Contract(format!(
            "rewiring {i} to {j} closes a loop"
        )));
    }
    let pow = |a: u64| pow_area(a, params.gamma);
    Ok(two_path_delta(
        tree.raw_parent(),
        tree.link_lengths(),
        areas,
        i,
        j,
        new_len,
        pow,
    ))
}

/// Runs the rewiring loop to convergence (or the iteration cap).
pub fn optimize<T: Scalar>(
    tree: Tree<T>,
    grid: &Grid<T>,
    config: &OptimizerConfig<T>,
) -> Result<(Tree<T>, OptimizeReport<T>)> {
    optimize_observed(tree, grid, config, |_, _| {})
}

/// Like [`optimize`], calling `observer(iteration, energy)` at every
/// trajectory sample.
pub fn optimize_observed<T: Scalar, F: FnMut(u64, T)>(
    tree: Tree<T>,
    grid: &Grid<T>,
    config: &OptimizerConfig<T>,
    observer: F,
) -> Result<(Tree<T>, OptimizeReport<T>)> {
    let n = grid.node_count();
    config.validate(n)?;
    tree.validate(Some(grid))?;
    let mut state = Rewirer::new(tree, grid, config.gamma)?;
    let report = state.run(config, observer)?;
    Ok((state.tree, report))
}

/// Mutable optimizer state: the tree, its current areas and a `γ`-power table.
pub struct Rewirer<'g, T> {
    grid: &'g Grid<T>,
    tree: Tree<T>,
    area: Vec<u64>,
    pow: Vec<T>,
    gamma: T,
}

impl<'g, T: Scalar> Rewirer<'g, T> {
    pub fn new(tree: Tree<T>, grid: &'g Grid<T>, gamma: T) -> Result<Self> {
        let area = compute_areas(&tree)?;
        let pow = (0..=tree.len() as u64)
            .map(|a| pow_area(a, gamma))
            .collect();
        Ok(Self {
            grid,
            tree,
            area,
            pow,
            gamma,
        })
    }

    pub fn tree(&self) -> &Tree<T> {
        &self.tree
    }

    pub fn areas(&self) -> &[u64] {
        &self.area
    }

    pub fn into_tree(self) -> Tree<T> {
        self.tree
    }

    pub fn energy(&self) -> T {
        energy(&self.tree, &self.area, EnergyParams { gamma: self.gamma })
    }

    /// Loop test using areas: every node strictly between `j` and an ancestor
    /// `i` has area below `A_i`, so the walk stops at the first node whose
    /// area reaches `A_i`.
    pub fn creates_loop(&self, i: NodeId, j: NodeId) -> bool {
        let parent = self.tree.raw_parent();
        let target = self.area[i];
        let mut cur = j;
        loop {
            if cur == i {
                return true;
            }
            if self.area[cur] >= target {
                return false;
            }
            match parent[cur] {
                u32::MAX => return false,
                p => cur = p as usize,
            }
        }
    }

    pub fn delta(&self, i: NodeId, j: NodeId, new_len: T) -> T {
        let pow = &self.pow;
        two_path_delta(
            self.tree.raw_parent(),
            self.tree.link_lengths(),
            &self.area,
            i,
            j,
            new_len,
            |a| pow[a as usize],
        )
    }

    /// Redirects `i` to `j` and patches the areas on both paths.
    pub fn apply(&mut self, i: NodeId, j: NodeId, new_len: T) {
        let parent = self.tree.raw_parent();
        let moved = self.area[i];
        let mut a = parent[i] as usize;
        let mut b = j;
        while a != b {
            if self.area[a] <= self.area[b] {
                self.area[a] -= moved;
                a = parent[a] as usize;
            } else {
                self.area[b] += moved;
                b = parent[b] as usize;
            }
        }
        self.tree.set_parent(i, j, new_len);
    }

    /// True when no single rewire strictly lowers the energy by more than
    /// `epsilon`.
    pub fn is_local_minimum(&self, epsilon: f64) -> bool {
        let root = self.tree.root();
        let eps = T::of(epsilon);
        for i in (0..self.tree.len()).filter(|&i| i != root) {
            let p = self.tree.parent(i);
            for (j, len) in self.grid.neighbors(i) {
                if Some(j) == p || self.creates_loop(i, j) {
                    continue;
                }
                if self.delta(i, j, len) < -eps {
                    return false;
                }
            }
        }
        true
    }

    fn run<F: FnMut(u64, T)>(
        &mut self,
        config: &OptimizerConfig<T>,
        mut observer: F,
    ) -> Result<OptimizeReport<T>> {
        let n = self.tree.len();
        let threshold = config.threshold_for(n);
        let window = config.window_for(n);
        let max_iterations = config.max_iterations_for(n);
        let sample_every = config.trajectory_every.unwrap_or(n as u64);
        let eps = T::of(config.accept_epsilon);
        let mut rng = config.seed.rng();

        let initial_energy = self.energy();
        let mut current = initial_energy;
        let mut report = OptimizeReport {
            iterations: 0,
            improvements: 0,
            rejected_loops: 0,
            rejected_worse: 0,
            initial_energy,
            final_energy: initial_energy,
            energy_trajectory: vec![(0, initial_energy)],
            converged: false,
            verified_checkpoints: 0,
            max_energy_drift: T::zero(),
            sweep_moves: 0,
        };
        observer(0, initial_energy);

        // recent[k % window] records whether iteration k was an improvement
        let mut recent = vec![false; window as usize];
        let mut recent_count: u64 = 0;

        while report.iterations < max_iterations {
            let (i, j) = propose(
                self.tree.raw_parent(),
                self.tree.root(),
                self.grid,
                &mut rng,
            );
            let improved = if self.creates_loop(i, j) {
                report.rejected_loops += 1;
                false
            } else {
                let len = self
                    .grid
                    .link_length(i, j)
                    .expect("proposals are grid links");
                let d = self.delta(i, j, len);
                if d < -eps {
                    self.apply(i, j, len);
                    current = current + d;
                    report.improvements += 1;
                    if let Some(k) = config.verify_every {
                        if report.improvements % k == 0 {
                            self.verify(current, &mut report)?;
                        }
                    }
                    true
                } else {
                    report.rejected_worse += 1;
                    false
                }
            };

            let slot = (report.iterations % window) as usize;
            if recent[slot] {
                recent_count -= 1;
            }
            recent[slot] = improved;
            if improved {
                recent_count += 1;
            }
            report.iterations += 1;

            if report.iterations % sample_every == 0 {
                report.energy_trajectory.push((report.iterations, current));
                observer(report.iterations, current);
            }

            if report.iterations >= window {
                let ratio = match config.rule {
                    ConvergenceRule::Windowed => recent_count as f64 / window as f64,
                    ConvergenceRule::Lifetime => {
                        report.improvements as f64 / report.iterations as f64
                    }
                };
                if ratio <= threshold {
                    report.converged = true;
                    break;
                }
            }
        }

        if config.final_sweep {
            report.sweep_moves = self.sweep(&mut current, eps);
        }
        if config.verify_every.is_some() {
            self.verify(current, &mut report)?;
        }
        report.final_energy = self.energy();
        if report.energy_trajectory.last() != Some(&(report.iterations, current)) {
            report.energy_trajectory.push((report.iterations, current));
            observer(report.iterations, current);
        }
        Ok(report)
    }

    fn sweep(&mut self, current: &mut T, eps: T) -> u64 {
        let grid = self.grid;
        let root = self.tree.root();
        let mut moves = 0;
        loop {
            let mut changed = false;
            for i in (0..self.tree.len()).filter(|&i| i != root) {
                for (j, len) in grid.neighbors(i) {
                    if Some(j) == self.tree.parent(i) || self.creates_loop(i, j) {
                        continue;
                    }
                    let d = self.delta(i, j, len);
                    if d < -eps {
                        self.apply(i, j, len);
                        *current = *current + d;
                        moves += 1;
                        changed = true;
                    }
                }
            }
            if !changed {
                return moves;
            }
        }
    }

    fn verify(&self, tracked: T, report: &mut OptimizeReport<T>) -> Result<()> {
        self.tree.validate(Some(self.grid))?;
        let fresh = compute_areas(&self.tree)?;
        if fresh != self.area {
            return Err(OcnError::Contract(format!(
                "incremental areas diverged after {} iterations",
                report.iterations
            )));
        }
        let full = self.energy();
        let drift = (full - tracked).abs() / full.abs().max(T::one());
        if drift > T::of(1e-9) {
            return Err(OcnError::Contract(format!(
                "tracked energy {tracked} differs from recomputed {full}"
            )));
        }
        report.max_energy_drift = report.max_energy_drift.max(drift);
        report.verified_checkpoints += 1;
        Ok(())
    }
}

fn propose<T: Scalar, R: Rng>(
    parent: &[u32],
    root: NodeId,
    grid: &Grid<T>,
    rng: &mut R,
) -> (NodeId, NodeId) {
    let n = parent.len();
    let k = rng.random_range(0..(n - 1) as u64) as usize;
    let i = if k >= root { k + 1 } else { k };
    let nbrs = grid.neighbor_ids(i);
    let current = parent[i];
    let pos = nbrs
        .iter()
        .position(|&j| j == current)
        .expect("a tree link is a grid link");
    let m = rng.random_range(0..(nbrs.len() - 1) as u64) as usize;
    let j = if m >= pos { nbrs[m + 1] } else { nbrs[m] };
    (i, j as NodeId)
}

/// Walks the old-parent and new-parent paths up to their lowest common
/// ancestor. Areas strictly increase toward the outlet, so stepping whichever
/// side has the smaller area meets exactly at that ancestor.
fn two_path_delta<T: Scalar, P: Fn(u64) -> T>(
    parent: &[u32],
    link_len: &[T],
    area: &[u64],
    i: NodeId,
    j: NodeId,
    new_len: T,
    pow: P,
) -> T {
    let moved = area[i];
    let mut delta = (new_len - link_len[i]) * pow(moved);
    let mut a = parent[i] as usize;
    let mut b = j;
    while a != b {
        if area[a] <= area[b] {
            delta = delta + (pow(area[a] - moved) - pow(area[a])) * link_len[a];
            a = parent[a] as usize;
        } else {
            delta = delta + (pow(area[b] + moved) - pow(area[b])) * link_len[b];
            b = parent[b] as usize;
        }
    }
    delta
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;
    use crate::grid::{GridSpec, LengthMode};
    use crate::sampler::random_spanning_tree;

    fn full_energy(t: &Tree<f64>, gamma: f64) -> f64 {
        energy(t, &compute_areas(t).unwrap(), EnergyParams { gamma })
    }

    #[test]
    fn root_is_never_proposed_and_parent_is_excluded() {
        let g = Grid::<f64>::build(&GridSpec::square(2).with_outlet(vec![1, 1])).unwrap();
        let t = random_spanning_tree(&g, RngSeed(4));
        let mut rng = RngSeed(9).rng();
        for _ in 0..2000 {
            let (i, j) = propose_rewire(&t, &g, &mut rng);
            assert_ne!(i, t.root());
            assert_ne!(Some(j), t.parent(i));
            assert!(g.link_length(i, j).is_some());
        }
    }

    #[test]
    fn proposals_are_uniform_on_3x3() {
        let g = Grid::<f64>::build(&GridSpec::square(3)).unwrap();
        let t = random_spanning_tree(&g, RngSeed(2));
        let mut rng = RngSeed(11).rng();
        let draws = 100_000;
        let mut counts: HashMap<(usize, usize), u64> = HashMap::new();
        for _ in 0..draws {
            *counts.entry(propose_rewire(&t, &g, &mut rng)).or_default() += 1;
        }
        for i in 1..9 {
            let choices = g.degree(i) - 1;
            let p = 1.0 / 8.0 / choices as f64;
            let mean = draws as f64 * p;
            let sd = (draws as f64 * p * (1.0 - p)).sqrt();
            for (j, _) in g.neighbors(i).filter(|&(j, _)| Some(j) != t.parent(i)) {
                let c = *counts.get(&(i, j)).unwrap_or(&0) as f64;
                assert!(
                    (c - mean).abs() <= 4.0 * sd,
                    "pair ({i},{j}): {c} vs {mean}"
                );
            }
        }
    }

    #[test]
    fn loop_detection_agrees_with_rebuild() {
        let g = Grid::<f64>::build(&GridSpec::square(3)).unwrap();
        for s in 0..30 {
            let t = random_spanning_tree(&g, RngSeed(s));
            let r = Rewirer::new(t.clone(), &g, 0.5).unwrap();
            for i in (0..9).filter(|&i| i != t.root()) {
                for (j, _) in g.neighbors(i) {
                    let mut p = t.parents();
                    p[i] = Some(j);
                    let rebuilt_cycles = Tree::on_grid(&g, &p).is_err();
                    assert_eq!(creates_loop(&t, i, j), rebuilt_cycles);
                    assert_eq!(r.creates_loop(i, j), rebuilt_cycles);
                }
            }
        }
    }

    #[test]
    fn grandparent_never_loops() {
        let g = Grid::<f64>::build(&GridSpec::square(6)).unwrap();
        let t = random_spanning_tree(&g, RngSeed(5));
        for i in 0..t.len() {
            if let Some(gp) = t.parent(i).and_then(|p| t.parent(p)) {
                assert!(!creates_loop(&t, i, gp));
            }
        }
    }

    #[test]
    fn delta_matches_full_recompute() {
        for (spec, gamma) in [
            (GridSpec::square(5), 0.5),
            (GridSpec::square(5).with_lengths(LengthMode::Euclidean), 0.3),
            (GridSpec::cube(3).with_lengths(LengthMode::Euclidean), 0.9),
        ] {
            let g = Grid::<f64>::build(&spec).unwrap();
            let mut rng = RngSeed(1).rng();
            for s in 0..20 {
                let t = random_spanning_tree(&g, RngSeed(s));
                let areas = compute_areas(&t).unwrap();
                let base = full_energy(&t, gamma);
                for _ in 0..50 {
                    let (i, j) = propose_rewire(&t, &g, &mut rng);
                    if creates_loop(&t, i, j) {
                        assert!(delta_energy(&t, &g, &areas, i, j, EnergyParams { gamma }).is_err());
                        continue;
                    }
                    let d = delta_energy(&t, &g, &areas, i, j, EnergyParams { gamma }).unwrap();
                    let mut p = t.parents();
                    p[i] = Some(j);
                    let moved = Tree::on_grid(&g, &p).unwrap();
                    let exact = full_energy(&moved, gamma) - base;
                    assert!((d - exact).abs() <= 1e-9 * base.abs(), "{d} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn delta_is_zero_for_no_op_and_gamma_zero() {
        let g = Grid::<f64>::build(&GridSpec::square(5)).unwrap();
        let t = random_spanning_tree(&g, RngSeed(3));
        let areas = compute_areas(&t).unwrap();
        let mut rng = RngSeed(8).rng();
        let i = 7;
        let p = t.parent(i).unwrap();
        let r = Rewirer::new(t.clone(), &g, 0.5).unwrap();
        assert_eq!(r.delta(i, p, t.link_length(i)), 0.0);
        for _ in 0..200 {
            let (i, j) = propose_rewire(&t, &g, &mut rng);
            if !creates_loop(&t, i, j) {
                let d = delta_energy(&t, &g, &areas, i, j, EnergyParams { gamma: 0.0 }).unwrap();
                assert_eq!(d, 0.0);
            }
        }
    }

    #[test]
    fn incremental_areas_track_rewires() {
        let g = Grid::<f64>::build(&GridSpec::square(6)).unwrap();
        let t = random_spanning_tree(&g, RngSeed(12));
        let mut r = Rewirer::new(t, &g, 0.5).unwrap();
        let mut rng = RngSeed(13).rng();
        for _ in 0..500 {
            let (i, j) = propose_rewire(r.tree(), &g, &mut rng);
            if r.creates_loop(i, j) {
                continue;
            }
            r.apply(i, j, 1.0);
            assert_eq!(r.areas(), compute_areas(r.tree()).unwrap().as_slice());
        }
    }

    #[test]
    fn optimizer_report_invariants() {
        let g = Grid::<f64>::build(&GridSpec::square(12)).unwrap();
        let t = random_spanning_tree(&g, RngSeed(1));
        let cfg = OptimizerConfig {
            seed: RngSeed(2),
            verify_every: Some(100),
            ..OptimizerConfig::with_gamma(0.5)
        };
        let (out, rep) = optimize(t, &g, &cfg).unwrap();
        out.validate(Some(&g)).unwrap();
        assert!(rep.converged);
        assert_eq!(
            rep.improvements + rep.rejected_loops + rep.rejected_worse,
            rep.iterations
        );
        assert!(rep.final_energy <= rep.initial_energy);
        assert!(rep.verified_checkpoints > 0);
        for w in rep.energy_trajectory.windows(2) {
            assert!(w[1].1 <= w[0].1);
        }
        assert!((rep.final_energy - full_energy(&out, 0.5)).abs() < 1e-12);
    }

    #[test]
    fn optimizer_is_deterministic() {
        let g = Grid::<f64>::build(&GridSpec::cube(5)).unwrap();
        let t = random_spanning_tree(&g, RngSeed(1));
        let cfg = OptimizerConfig {
            seed: RngSeed(5),
            ..OptimizerConfig::with_gamma(0.5)
        };
        let (a, ra) = optimize(t.clone(), &g, &cfg).unwrap();
        let (b, rb) = optimize(t, &g, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
    }

    #[test]
    fn gamma_zero_accepts_nothing() {
        let g = Grid::<f64>::build(&GridSpec::square(8)).unwrap();
        let t = random_spanning_tree(&g, RngSeed(1));
        let (_, rep) = optimize(t, &g, &OptimizerConfig::with_gamma(0.0)).unwrap();
        assert_eq!(rep.improvements, 0);
        assert_eq!(rep.final_energy, 63.0);
        assert!(rep.converged);
    }

    #[test]
    fn iteration_cap_reports_unconverged() {
        let g = Grid::<f64>::build(&GridSpec::square(20)).unwrap();
        let t = random_spanning_tree(&g, RngSeed(1));
        let cfg = OptimizerConfig {
            max_iterations: Some(500),
            ..OptimizerConfig::with_gamma(0.5)
        };
        let (_, rep) = optimize(t, &g, &cfg).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 500);
    }

    #[test]
    fn lifetime_rule_also_converges() {
        let g = Grid::<f64>::build(&GridSpec::square(10)).unwrap();
        let t = random_spanning_tree(&g, RngSeed(1));
        let cfg = OptimizerConfig {
            rule: ConvergenceRule::Lifetime,
            ..OptimizerConfig::with_gamma(0.5)
        };
        let (_, rep) = optimize(t, &g, &cfg).unwrap();
        assert!(rep.converged);
        assert!(rep.improvements as f64 / rep.iterations as f64 <= 0.01);
    }

    #[test]
    fn config_validation() {
        let mut c = OptimizerConfig::<f64>::with_gamma(0.5);
        assert!(c.validate(100).is_ok());
        c.window = Some(999);
        assert!(c.validate(100).is_err());
        c.window = None;
        c.improvement_ratio_threshold = 1.0;
        assert!(c.validate(100).is_err());
        assert_eq!(OptimizerConfig::<f64>::default().threshold_for(3600), 0.01);
        assert_eq!(OptimizerConfig::<f64>::default().threshold_for(3601), 0.02);
    }
}
