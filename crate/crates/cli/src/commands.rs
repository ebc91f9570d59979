use std::path::{Path, PathBuf};
use std::time::Instant;

use ocn::bounds::{bound_table, h05_lower, h1_optimal, ratio_to_scalar};
use ocn::ensemble::{initial_tree, run_one, EnsembleRun};
use ocn::metrics::{compute_areas, energy};
use ocn::optimizer::{optimize, Rewirer};
use ocn::scaling::{
    allometry_report, collect_samples, fit_power_law, length_table_filters, volume_table_filters,
    BasinMetrics, Field, SampleFilter,
};
use ocn::steiner::{best_ocn, direct_steiner_tree, EnergyPair, SteinerTreeSpec};
use ocn::{
    EnergyParams, Grid64, GridSpec, LengthMode, Neighborhood, OcnError, RngSeed, Tree64, TreeRecord,
};
use rayon::prelude::*;

use crate::config::{FilterPreset, RunConfig};
use crate::failure::Failure;
use crate::manifest::{ManifestEntry, RunManifest};
use crate::output::{num, Output};

pub struct Ctx {
    pub config: RunConfig,
    pub verify: bool,
    pub out: Output,
}

impl Ctx {
    pub fn new(command: &str, config: RunConfig, verify: bool) -> Result<Self, Failure> {
        let seeds: Vec<u64> = config.seeds.seeds().iter().map(|s| s.0).collect();
        let out = Output::new(&config.out, command, config.hash(), &seeds)?;
        Ok(Self {
            config,
            verify,
            out,
        })
    }
}

fn energy_of(tree: &Tree64, gamma: f64) -> Result<f64, Failure> {
    let areas = compute_areas(tree)?;
    Ok(energy(tree, &areas, EnergyParams { gamma }))
}

pub fn generate(ctx: &Ctx) -> Result<RunManifest, Failure> {
    let cfg = &ctx.config;
    let grid = Grid64::build(&cfg.grid)?;
    let seeds = cfg.seeds.seeds();
    let entries = seeds
        .par_iter()
        .map(|&seed| -> Result<ManifestEntry, Failure> {
            let t0 = Instant::now();
            let tree = initial_tree(&grid, seed);
            let e = energy_of(&tree, cfg.gamma)?;
            let mut files = Vec::new();
            if cfg.emit.trees {
                let rel = format!("trees/random-{}.json", seed.0);
                files.push(
                    ctx.out
                        .text(&rel, &(tree.to_record(&cfg.grid).to_json() + "\n"))?,
                );
            }
            Ok(ManifestEntry {
                seed: Some(seed.0),
                label: format!("random tree, seed {}", seed.0),
                initial_energy: Some(e),
                final_energy: Some(e),
                iterations: None,
                converged: None,
                wall_seconds: t0.elapsed().as_secs_f64(),
                files,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut m = RunManifest::new("generate", ctx.verify, cfg);
    m.entries = entries;
    Ok(m)
}

/// Unit-length king-grid bounds that every optimized tree must respect.
fn bound_check(spec: &GridSpec, grid: &Grid64, gamma: f64, h: f64) -> Result<(), String> {
    let applies = spec.dimension == 2
        && spec.length_mode == LengthMode::Unit
        && spec.neighborhood == Neighborhood::Full
        && grid.outlet_is_corner();
    if !applies {
        return Ok(());
    }
    let n = spec.side as u64;
    let bound = if gamma == 1.0 {
        ratio_to_scalar::<f64>(h1_optimal(n))
    } else if gamma == 0.5 {
        ratio_to_scalar::<f64>(h05_lower(n))
    } else {
        return Ok(());
    };
    if h < bound - 1e-9 * bound.abs().max(1.0) {
        return Err(format!(
            "H = {h} lies below the lower bound {bound} for n = {n}"
        ));
    }
    Ok(())
}

fn optimize_entry(
    ctx: &Ctx,
    grid: &Grid64,
    spec: &GridSpec,
    run: &EnsembleRun<f64>,
    t0: Instant,
    source: Option<&Path>,
) -> Result<ManifestEntry, Failure> {
    let cfg = &ctx.config;
    let s = run.seed.0;
    if ctx.verify {
        let state = Rewirer::new(run.tree.clone(), grid, cfg.gamma)?;
        if cfg.optimizer.final_sweep && !state.is_local_minimum(cfg.optimizer.accept_epsilon) {
            return Err(Failure::Verify(format!(
                "seed {s}: final tree is not a local minimum"
            )));
        }
        let worse = run
            .report
            .energy_trajectory
            .windows(2)
            .any(|w| w[1].1 > w[0].1 + 1e-9 * w[0].1.abs().max(1.0));
        if worse {
            return Err(Failure::Verify(format!(
                "seed {s}: energy trajectory increased"
            )));
        }
        bound_check(spec, grid, cfg.gamma, run.report.final_energy)
            .map_err(|m| Failure::Verify(format!("seed {s}: {m}")))?;
    }
    let mut files = Vec::new();
    if cfg.emit.trees {
        let rel = format!("trees/ocn-{s}.json");
        files.push(
            ctx.out
                .text(&rel, &(run.tree.to_record(spec).to_json() + "\n"))?,
        );
    }
    files.push(
        ctx.out
            .json(&format!("reports/report-{s}.json"), &run.report)?,
    );
    if cfg.emit.trajectories {
        let rows = run
            .report
            .energy_trajectory
            .iter()
            .map(|&(it, e)| vec![it.to_string(), num(e)]);
        files.push(ctx.out.csv(
            &format!("trajectories/trajectory-{s}.csv"),
            &[("gamma", num(cfg.gamma))],
            &["iteration", "energy"],
            rows,
        )?);
    }
    Ok(ManifestEntry {
        seed: Some(s),
        label: match source {
            Some(p) => format!("optimized {}", p.display()),
            None => format!("optimized random tree, seed {s}"),
        },
        initial_energy: Some(run.report.initial_energy),
        final_energy: Some(run.report.final_energy),
        iterations: Some(run.report.iterations),
        converged: Some(run.report.converged),
        wall_seconds: t0.elapsed().as_secs_f64(),
        files,
    })
}

pub fn optimize_cmd(ctx: &Ctx) -> Result<RunManifest, Failure> {
    let cfg = &ctx.config;
    let opt = cfg.optimizer_config(ctx.verify);
    let seeds = cfg.seeds.seeds();
    let entries: Vec<ManifestEntry> = if cfg.inputs.is_empty() {
        let grid = Grid64::build(&cfg.grid)?;
        seeds
            .par_iter()
            .map(|&seed| {
                let t0 = Instant::now();
                let run = run_one(&grid, &opt, seed)?;
                optimize_entry(ctx, &grid, &cfg.grid, &run, t0, None)
            })
            .collect::<Result<_, _>>()?
    } else {
        // input k runs with seed k of the seed list, or k when the list is short
        cfg.inputs
            .par_iter()
            .enumerate()
            .map(|(k, path)| {
                let t0 = Instant::now();
                let record = TreeRecord::read(path)?;
                let spec = record.grid_spec();
                let (grid, tree) = record.to_tree::<f64>()?;
                let seed = seeds.get(k).copied().unwrap_or(RngSeed(k as u64));
                let mut c = opt.clone();
                c.seed = seed;
                let (tree, report) = optimize(tree, &grid, &c)?;
                let run = EnsembleRun { seed, tree, report };
                optimize_entry(ctx, &grid, &spec, &run, t0, Some(path))
            })
            .collect::<Result<_, _>>()?
    };
    let mut m = RunManifest::new("optimize", ctx.verify, cfg);
    m.entries = entries;
    Ok(m)
}

fn slug(label: &str) -> String {
    let mut s: String = label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '-'
            }
        })
        .collect();
    while s.contains("--") {
        s = s.replace("--", "-");
    }
    s.trim_matches('-').to_string()
}

pub fn analyze(ctx: &Ctx) -> Result<RunManifest, Failure> {
    let cfg = &ctx.config;
    if cfg.inputs.is_empty() {
        return Err(Failure::Config(
            "analyze needs at least one tree file".into(),
        ));
    }
    let t0 = Instant::now();
    let basins: Vec<BasinMetrics<f64>> = cfg
        .inputs
        .par_iter()
        .map(|path| -> Result<_, Failure> {
            let record = TreeRecord::read(path)?;
            let (_, tree) = record.to_tree::<f64>()?;
            Ok(BasinMetrics::new(&record.grid_spec(), &tree)?)
        })
        .collect::<Result<_, _>>()?;

    let filters: Vec<SampleFilter> = if !cfg.analysis.filters.is_empty() {
        cfg.analysis.filters.clone()
    } else {
        match cfg.analysis.preset {
            FilterPreset::LengthTable => length_table_filters(),
            FilterPreset::VolumeTable => {
                let sides: Vec<usize> = basins
                    .iter()
                    .filter(|b| b.dimension == 3)
                    .map(|b| b.side)
                    .collect();
                let large = sides.iter().copied().max().unwrap_or(20);
                let small = if sides.contains(&10) {
                    10
                } else {
                    sides.iter().copied().min().unwrap_or(10)
                };
                volume_table_filters(large, small)
            }
        }
    };

    let mut m = RunManifest::new("analyze", ctx.verify, cfg);
    if cfg.emit.samples {
        let rows = basins.iter().enumerate().flat_map(|(k, b)| {
            let path = cfg.inputs[k].display().to_string();
            (0..b.metrics.area.len()).map(move |i| {
                vec![
                    path.clone(),
                    b.dimension.to_string(),
                    b.side.to_string(),
                    i.to_string(),
                    b.metrics.area[i].to_string(),
                    b.metrics.volume[i].to_string(),
                    num(b.metrics.upstream_length[i]),
                ]
            })
        });
        m.artifacts.push(ctx.out.csv(
            "samples.csv",
            &[],
            &[
                "tree",
                "dimension",
                "side",
                "node",
                "area",
                "volume",
                "upstream_length",
            ],
            rows,
        )?);
    }

    let mut fit_rows = Vec::new();
    let mut allometry_rows = Vec::new();
    for f in &filters {
        let samples = collect_samples(&basins, f);
        let mut exps = [None, None];
        for (slot, y) in [Field::Length, Field::Volume].into_iter().enumerate() {
            let label = if f.label.is_empty() {
                f.to_string()
            } else {
                f.label.clone()
            };
            match fit_power_law(&samples, Field::Area, y, cfg.analysis.fit_mode, f) {
                Ok(fit) => {
                    exps[slot] = Some(fit.exponent);
                    fit_rows.push(vec![
                        label.clone(),
                        fit.filter.clone(),
                        y.name().into(),
                        "ok".into(),
                        num(fit.exponent),
                        num(fit.intercept),
                        num(fit.r_squared),
                        fit.points.to_string(),
                        fit.samples.to_string(),
                        fit.excluded.to_string(),
                    ]);
                    if cfg.emit.fits {
                        let pts = samples
                            .iter()
                            .map(|s| (s.get(Field::Area), s.get(y)))
                            .filter(|&(a, b)| a > 0.0 && b > 0.0)
                            .map(|(a, b)| vec![a.log10(), b.log10()]);
                        m.artifacts.push(ctx.out.dat(
                            &format!("fits/{}-{}.dat", slug(&label), y.name()),
                            &[
                                ("filter", fit.filter.clone()),
                                ("exponent", num(fit.exponent)),
                                ("intercept", num(fit.intercept)),
                            ],
                            &["log10_area", &format!("log10_{}", y.name())],
                            pts,
                        )?);
                    }
                }
                Err(OcnError::InsufficientData(msg)) => {
                    let mut row = vec![
                        label.clone(),
                        f.to_string(),
                        y.name().into(),
                        "insufficient-data".into(),
                    ];
                    row.extend(std::iter::repeat_n(String::new(), 3));
                    row.extend([String::new(), samples.len().to_string(), String::new()]);
                    fit_rows.push(row);
                    eprintln!("note: {label}: {msg}");
                }
                Err(e) => return Err(e.into()),
            }
        }
        if let [Some(h), Some(alpha)] = exps {
            let r = allometry_report(h, alpha);
            allometry_rows.push(vec![
                if f.label.is_empty() {
                    f.to_string()
                } else {
                    f.label.clone()
                },
                num(r.h),
                num(r.alpha),
                num(r.discrepancy),
                num(r.inverse_alpha),
            ]);
        }
    }
    m.artifacts.push(ctx.out.csv(
        "fits.csv",
        &[(
            "fit_mode",
            serde_json::to_string(&cfg.analysis.fit_mode).unwrap_or_default(),
        )],
        &[
            "label",
            "filter",
            "y",
            "status",
            "exponent",
            "intercept",
            "r_squared",
            "points",
            "samples",
            "excluded",
        ],
        fit_rows,
    )?);
    m.artifacts.push(ctx.out.csv(
        "allometry.csv",
        &[],
        &[
            "label",
            "h",
            "alpha",
            "alpha_minus_1_plus_h",
            "inverse_alpha",
        ],
        allometry_rows,
    )?);
    m.entries.push(ManifestEntry {
        seed: None,
        label: format!("{} trees, {} filters", basins.len(), filters.len()),
        initial_energy: None,
        final_energy: None,
        iterations: None,
        converged: None,
        wall_seconds: t0.elapsed().as_secs_f64(),
        files: Vec::new(),
    });
    Ok(m)
}

pub fn bounds(ctx: &Ctx) -> Result<RunManifest, Failure> {
    let b = &ctx.config.bounds;
    if b.n_min < 2 || b.n_max < b.n_min {
        return Err(Failure::Config(format!(
            "bad side range {}..={}",
            b.n_min, b.n_max
        )));
    }
    if b.gammas.is_empty() || b.gammas.iter().any(|g| !(0.0..=1.0).contains(g)) {
        return Err(Failure::Config(
            "gammas must be a non-empty list in [0,1]".into(),
        ));
    }
    let mut rows = Vec::new();
    for &g in &b.gammas {
        for n in b.n_min..=b.n_max {
            for r in bound_table::<f64>(n, g) {
                rows.push(vec![
                    r.n.to_string(),
                    num(r.gamma),
                    r.kind.name().into(),
                    num(r.value),
                ]);
            }
        }
    }
    let mut m = RunManifest::new("bounds", ctx.verify, &ctx.config);
    m.artifacts.push(
        ctx.out
            .csv("bounds.csv", &[], &["n", "gamma", "kind", "value"], rows)?,
    );
    Ok(m)
}

/// Expected location of the geometry file for an `n×n` lattice.
pub fn steiner_path(dir: &Path, n: usize) -> PathBuf {
    dir.join(format!("{n}x{n}.json"))
}

pub fn steiner(ctx: &Ctx) -> Result<RunManifest, Failure> {
    let sc = &ctx.config.steiner;
    if !(sc.tol > 0.0) {
        return Err(Failure::Config(format!(
            "tolerance must be positive, got {}",
            sc.tol
        )));
    }
    let mut m = RunManifest::new("steiner", ctx.verify, &ctx.config);
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for &n in &sc.sizes {
        let t0 = Instant::now();
        let path = steiner_path(&sc.data_dir, n);
        if !path.exists() {
            return Err(Failure::Config(format!(
                "no Steiner geometry for {n}x{n}: expected {}",
                path.display()
            )));
        }
        let spec = SteinerTreeSpec::read(&path)?;
        if spec.lattice_side()? != n {
            return Err(Failure::Config(format!(
                "{} does not describe a {n}x{n} lattice",
                path.display()
            )));
        }
        let grid_spec = spec.ocn_grid_spec()?;
        let best = best_ocn::<f64>(&grid_spec, &sc.batch)?;
        let st = direct_steiner_tree::<f64>(&spec)?;
        let pair = EnergyPair::new(&best.tree, &st)?;
        let r = pair.crossover(sc.tol)?;
        if r.gap_at_zero < -1e-12 {
            violations.push(format!("{n}x{n}: H_0(OCN) < H_0(Steiner)"));
        }
        let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
        rows.push(vec![
            n.to_string(),
            opt(r.gamma_star),
            num(r.bracket_width),
            r.sign_changes.to_string(),
            r.has_multiple_roots().to_string(),
            num(r.gap_at_zero),
            opt(r.ocn_energy_at_star),
            opt(r.steiner_energy_at_star),
            best.seed.0.to_string(),
            num(best.energy),
        ]);
        let curve = ctx.out.dat(
            &format!("curves/steiner-{n}x{n}.dat"),
            &[("geometry", path.display().to_string())],
            &["gamma", "H_ocn", "H_steiner"],
            pair.curves(sc.curve_samples)
                .into_iter()
                .map(|(g, a, b)| vec![g, a, b]),
        )?;
        let tree = ctx.out.text(
            &format!("trees/steiner-ocn-{n}x{n}.json"),
            &(best.tree.to_record(&grid_spec).to_json() + "\n"),
        )?;
        m.entries.push(ManifestEntry {
            seed: Some(best.seed.0),
            label: format!("{n}x{n} crossover"),
            initial_energy: None,
            final_energy: Some(best.energy),
            iterations: None,
            converged: None,
            wall_seconds: t0.elapsed().as_secs_f64(),
            files: vec![curve, tree],
        });
    }
    m.artifacts.push(ctx.out.csv(
        "crossover.csv",
        &[
            ("tol", num(sc.tol)),
            (
                "batch",
                format!("{} seeds from {}", sc.batch.seeds, sc.batch.base_seed),
            ),
        ],
        &[
            "size",
            "gamma_star",
            "bracket_width",
            "sign_changes",
            "multiple_roots",
            "gap_at_zero",
            "ocn_energy_at_star",
            "steiner_energy_at_star",
            "ocn_seed",
            "ocn_energy_gamma_batch",
        ],
        rows,
    )?);
    if ctx.verify && !violations.is_empty() {
        return Err(Failure::Verify(violations.join("; ")));
    }
    Ok(m)
}

pub fn write_manifest(ctx: &Ctx, manifest: &RunManifest) -> Result<PathBuf, Failure> {
    ctx.out.json("manifest.json", manifest)
}
