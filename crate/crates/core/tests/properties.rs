use ocn::bounds::{h05_lower, h1_optimal, lemma1_min, ratio_to_scalar, stripe_lemma_bound};
use ocn::ensemble::run_one;
use ocn::metrics::{compute_areas, energy, TreeMetrics};
use ocn::optimizer::Rewirer;
use ocn::sampler::random_spanning_tree;
use ocn::scaling::{fit_power_law, BasinKind, BasinSample, Field, FitMode, SampleFilter};
use ocn::steiner::{direct_steiner_tree, steiner_areas, SteinerNode, SteinerTreeSpec};
use ocn::{
    EnergyParams, Grid, GridSpec, LengthMode, Neighborhood, OptimizerConfig, RngSeed, Tree,
    TreeRecord,
};
use proptest::prelude::*;

fn spec_strategy() -> impl Strategy<Value = GridSpec> {
    (2usize..=3, 2usize..=7, any::<bool>(), any::<bool>()).prop_map(|(d, n, euclid, ortho)| {
        let n = if d == 3 { n.min(5) } else { n };
        let mut s = if d == 3 {
            GridSpec::cube(n)
        } else {
            GridSpec::square(n)
        };
        if euclid {
            s = s.with_lengths(LengthMode::Euclidean);
        }
        if ortho {
            s = s.with_neighborhood(Neighborhood::Orthogonal);
        }
        s
    })
}

fn samples(points: &[(u64, f64)]) -> Vec<BasinSample<f64>> {
    points
        .iter()
        .map(|&(a, l)| BasinSample {
            area: a,
            volume: 0,
            upstream_length: l,
            side: 0,
            dimension: 2,
            kind: BasinKind::Subbasin,
        })
        .collect()
}

fn fit(points: &[(u64, f64)], x: Field, y: Field) -> f64 {
    fit_power_law(
        &samples(points),
        x,
        y,
        FitMode::Raw,
        &SampleFilter::default(),
    )
    .unwrap()
    .exponent
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metrics_invariants(spec in spec_strategy(), seed in any::<u64>()) {
        let grid = Grid::<f64>::build(&spec).unwrap();
        let tree = random_spanning_tree(&grid, RngSeed(seed));
        tree.validate(Some(&grid)).unwrap();
        let m = TreeMetrics::compute(&tree).unwrap();
        let n = grid.node_count();
        prop_assert_eq!(m.area[tree.root()], n as u64);
        let mut child_area = vec![0u64; n];
        let mut child_vol = vec![0u64; n];
        for i in 0..n {
            if let Some(p) = tree.parent(i) {
                child_area[p] += m.area[i];
                child_vol[p] += m.volume[i] + m.area[i];
            }
        }
        // L follows the largest child, the longer continuation among equals.
        let mut main: Vec<Option<(u64, f64)>> = vec![None; n];
        for i in 0..n {
            if let Some(p) = tree.parent(i) {
                let cand = (m.area[i], tree.link_length(i) + m.upstream_length[i]);
                main[p] = match main[p] {
                    Some(b) if (b.0, b.1) >= cand => Some(b),
                    _ => Some(cand),
                };
            }
        }
        for i in 0..n {
            let expected = main[i].map_or(0.0, |b| b.1);
            prop_assert!((m.upstream_length[i] - expected).abs() < 1e-12);
            prop_assert_eq!(m.area[i], 1 + child_area[i]);
            prop_assert_eq!(m.volume[i], child_vol[i]);
            prop_assert!(m.volume[i] + 1 >= m.area[i]);
        }
        // Total volume counts every node once per ancestor link.
        let depth_sum: u64 = (0..n)
            .map(|mut i| {
                let mut d = 0;
                while let Some(p) = tree.parent(i) {
                    d += 1;
                    i = p;
                }
                d
            })
            .sum();
        prop_assert_eq!(m.volume[tree.root()], depth_sum);
    }

    #[test]
    fn record_round_trip(spec in spec_strategy(), seed in any::<u64>()) {
        let grid = Grid::<f64>::build(&spec).unwrap();
        let tree = random_spanning_tree(&grid, RngSeed(seed));
        let rec = tree.to_record(&spec);
        let back = TreeRecord::from_json(&rec.to_json()).unwrap();
        prop_assert_eq!(&back, &rec);
        let (_, t2) = back.to_tree::<f64>().unwrap();
        prop_assert_eq!(t2.parents(), tree.parents());
    }

    #[test]
    fn delta_matches_recomputation(spec in spec_strategy(), seed in any::<u64>(), gamma in 0.0f64..=1.0) {
        let grid = Grid::<f64>::build(&spec).unwrap();
        let tree = random_spanning_tree(&grid, RngSeed(seed));
        let rw = Rewirer::new(tree.clone(), &grid, gamma).unwrap();
        let e0 = energy(&tree, &compute_areas(&tree).unwrap(), EnergyParams::new(gamma).unwrap());
        let parents = tree.parents();
        for i in (0..grid.node_count()).step_by(3) {
            let Some(p) = parents[i] else { continue };
            for (j, len) in grid.neighbors(i) {
                if j == p || rw.creates_loop(i, j) {
                    continue;
                }
                let mut q = parents.clone();
                q[i] = Some(j);
                let t = Tree::on_grid(&grid, &q).unwrap();
                let e1 = energy(&t, &compute_areas(&t).unwrap(), EnergyParams::new(gamma).unwrap());
                prop_assert!(((e1 - e0) - rw.delta(i, j, len)).abs() < 1e-9 * e0.max(1.0));
            }
        }
    }

    #[test]
    fn optimized_trees_are_local_minima(n in 2usize..=6, seed in any::<u64>()) {
        let grid = Grid::<f64>::build(&GridSpec::square(n)).unwrap();
        let run = run_one(&grid, &OptimizerConfig::with_gamma(0.5), RngSeed(seed)).unwrap();
        let rw = Rewirer::new(run.tree.clone(), &grid, 0.5).unwrap();
        prop_assert!(rw.is_local_minimum(1e-9));
        prop_assert!(run.report.final_energy <= run.report.initial_energy);
        let bound: f64 = ratio_to_scalar(h05_lower(n as u64));
        prop_assert!(run.report.final_energy >= bound);
    }

    #[test]
    fn lemma1_is_a_lower_bound(parts in prop::collection::vec(1u64..20, 1..12), gamma in 0.0f64..=1.0) {
        let n = parts.len() as u64;
        let total: u64 = parts.iter().sum();
        let value: f64 = parts.iter().map(|&a| (a as f64).powf(gamma)).sum();
        prop_assert!(value >= lemma1_min(n, total - n, gamma) - 1e-9);
    }

    #[test]
    fn fits_are_scale_equivariant(k in 0.2f64..2.0, c in 0.1f64..50.0) {
        let base: Vec<(u64, f64)> = (1..60u64).map(|a| (a, (a as f64).powf(k))).collect();
        let scaled: Vec<(u64, f64)> = base.iter().map(|&(a, l)| (a, c * l)).collect();
        let f1 = fit(&base, Field::Area, Field::Length);
        let f2 = fit(&scaled, Field::Area, Field::Length);
        prop_assert!((f1 - k).abs() < 1e-9);
        prop_assert!((f1 - f2).abs() < 1e-9);
    }

    #[test]
    fn swapped_axes_give_the_reciprocal(k in 0.2f64..2.0) {
        // Length against area, then area against length (stored in the volume slot).
        let pts: Vec<BasinSample<f64>> = (1..60u64)
            .map(|a| BasinSample {
                area: a,
                volume: a,
                upstream_length: (a as f64).powf(k),
                side: 0,
                dimension: 2,
                kind: BasinKind::Subbasin,
            })
            .collect();
        let f = SampleFilter::default();
        let fwd = fit_power_law(&pts, Field::Area, Field::Length, FitMode::Raw, &f).unwrap().exponent;
        let back = fit_power_law(&pts, Field::Length, Field::Volume, FitMode::Raw, &f).unwrap().exponent;
        prop_assert!((fwd * back - 1.0).abs() < 1e-9);
    }
}

#[test]
fn lemma_bounds_hold_on_small_grids() {
    for n in 2..=3usize {
        let grid = Grid::<f64>::build(&GridSpec::square(n)).unwrap();
        let mut best1 = f64::INFINITY;
        let mut best05 = f64::INFINITY;
        ocn::bounds::enumerate_spanning_trees(&grid, 1e8, |parents| {
            let t = Tree::on_grid(&grid, parents).unwrap();
            let a = compute_areas(&t).unwrap();
            best1 = best1.min(energy(&t, &a, EnergyParams::new(1.0).unwrap()));
            best05 = best05.min(energy(&t, &a, EnergyParams::new(0.5).unwrap()));
        })
        .unwrap();
        assert_eq!(best1, ratio_to_scalar::<f64>(h1_optimal(n as u64)));
        assert!(best05 >= ratio_to_scalar::<f64>(h05_lower(n as u64)) - 1e-12);
        assert!(best05 >= stripe_lemma_bound(n as u64, 0.5) - 1e-12);
    }
}

#[test]
fn steiner_and_ocn_areas_coincide_without_steiner_points() {
    for seed in 0..20 {
        let spec = GridSpec::square(4).with_lengths(LengthMode::Euclidean);
        let grid = Grid::<f64>::build(&spec).unwrap();
        let tree = random_spanning_tree(&grid, RngSeed(seed));
        let nodes = (0..16)
            .map(|i| {
                let c = grid.coords(i);
                SteinerNode {
                    id: i,
                    x: c[0] as f64,
                    y: c[1] as f64,
                    terminal: true,
                }
            })
            .collect();
        let edges = (0..16)
            .filter_map(|i| tree.parent(i).map(|p| [i, p]))
            .collect();
        let st_spec = SteinerTreeSpec {
            provenance: None,
            outlet: tree.root(),
            nodes,
            edges,
        };
        let st = direct_steiner_tree::<f64>(&st_spec).unwrap();
        assert_eq!(st.tree.parents(), tree.parents());
        assert_eq!(steiner_areas(&st).unwrap(), compute_areas(&tree).unwrap());
        for i in 0..16 {
            assert!((st.tree.link_length(i) - tree.link_length(i)).abs() < 1e-12);
        }
    }
}
