//! `ocn`: generate, optimize and analyze optimal channel networks.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime error, 3 failed
//! cross-check under `--verify`.

mod commands;
mod config;
mod failure;
mod manifest;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use ocn::scaling::FitMode;
use ocn::{LengthMode, Neighborhood};

use crate::commands::Ctx;
use crate::config::{FilterPreset, RunConfig, SeedSet};
use crate::failure::Failure;
use crate::manifest::RunManifest;

#[derive(Parser, Debug)]
#[command(name = "ocn", version, about = "Optimal channel network toolkit")]
struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Explicit seed; repeat for several.
    #[arg(long = "seed", global = true)]
    seed: Vec<u64>,
    /// Run this many seeds, starting at the first `--seed` (or 0).
    #[arg(long, global = true)]
    seeds: Option<usize>,
    /// Worker threads for per-seed runs.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Cross-check incremental state every K accepted moves and test results
    /// against exact oracles; failures exit with code 3.
    #[arg(long, global = true)]
    verify: bool,
    /// Replay the command and configuration recorded in a manifest.
    #[arg(long, global = true)]
    from_manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Debug, Default)]
struct GridArgs {
    /// Grid side n.
    #[arg(long)]
    side: Option<usize>,
    /// 2 or 3.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, value_parser = parse_lengths)]
    lengths: Option<LengthMode>,
    #[arg(long, value_parser = parse_neighborhood)]
    neighborhood: Option<Neighborhood>,
    #[arg(long)]
    gamma: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Random spanning trees, one per seed.
    Generate {
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Locally optimal networks from random trees or from tree files.
    Optimize {
        #[command(flatten)]
        grid: GridArgs,
        /// Trees to optimize instead of fresh random trees.
        inputs: Vec<PathBuf>,
        /// Write energy trajectories.
        #[arg(long)]
        trajectories: bool,
    },
    /// Scaling fits over a set of tree files.
    Analyze {
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum)]
        preset: Option<FilterPreset>,
        /// Average points in this many log bins before fitting.
        #[arg(long)]
        binned: Option<usize>,
        /// Fit through the mean of each quantity at every distinct area.
        #[arg(long, conflicts_with = "binned")]
        per_area: bool,
    },
    /// Table of energy bounds.
    Bounds {
        #[arg(long)]
        n_min: Option<u64>,
        #[arg(long)]
        n_max: Option<u64>,
        /// Repeat for several values.
        #[arg(long = "gamma")]
        gammas: Vec<f64>,
    },
    /// Crossover between Steiner trees and OCNs.
    Steiner {
        /// Lattice sides, e.g. `2,3,4,5`.
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
        #[arg(long)]
        data_dir: Option<PathBuf>,
        /// Seeds in the OCN batch.
        #[arg(long)]
        batch: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
}

fn parse_lengths(s: &str) -> Result<LengthMode, String> {
    match s {
        "unit" => Ok(LengthMode::Unit),
        "euclidean" => Ok(LengthMode::Euclidean),
        _ => Err(format!("expected unit or euclidean, got {s}")),
    }
}

fn parse_neighborhood(s: &str) -> Result<Neighborhood, String> {
    match s {
        "full" => Ok(Neighborhood::Full),
        "orthogonal" => Ok(Neighborhood::Orthogonal),
        _ => Err(format!("expected full or orthogonal, got {s}")),
    }
}

impl GridArgs {
    fn apply(&self, c: &mut RunConfig) {
        if let Some(d) = self.dim {
            c.grid.dimension = d;
        }
        if let Some(s) = self.side {
            c.grid.side = s;
        }
        if let Some(l) = self.lengths {
            c.grid.length_mode = l;
        }
        if let Some(n) = self.neighborhood {
            c.grid.neighborhood = n;
        }
        if let Some(g) = self.gamma {
            c.gamma = g;
        }
    }
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Generate { .. } => "generate",
            Command::Optimize { .. } => "optimize",
            Command::Analyze { .. } => "analyze",
            Command::Bounds { .. } => "bounds",
            Command::Steiner { .. } => "steiner",
        }
    }

    fn apply(&self, c: &mut RunConfig) {
        match self {
            Command::Generate { grid } => grid.apply(c),
            Command::Optimize {
                grid,
                inputs,
                trajectories,
            } => {
                grid.apply(c);
                if !inputs.is_empty() {
                    c.inputs = inputs.clone();
                }
                c.emit.trajectories |= trajectories;
            }
            Command::Analyze {
                inputs,
                preset,
                binned,
                per_area,
            } => {
                if !inputs.is_empty() {
                    c.inputs = inputs.clone();
                }
                if let Some(p) = preset {
                    c.analysis.preset = *p;
                }
                if let Some(b) = binned {
                    c.analysis.fit_mode = FitMode::Binned { bins: *b };
                }
                if *per_area {
                    c.analysis.fit_mode = FitMode::AreaMean;
                }
            }
            Command::Bounds {
                n_min,
                n_max,
                gammas,
            } => {
                if let Some(n) = n_min {
                    c.bounds.n_min = *n;
                }
                if let Some(n) = n_max {
                    c.bounds.n_max = *n;
                }
                if !gammas.is_empty() {
                    c.bounds.gammas = gammas.clone();
                }
            }
            Command::Steiner {
                sizes,
                data_dir,
                batch,
                tol,
            } => {
                if !sizes.is_empty() {
                    c.steiner.sizes = sizes.clone();
                }
                if let Some(d) = data_dir {
                    c.steiner.data_dir = d.clone();
                }
                if let Some(b) = batch {
                    c.steiner.batch.seeds = *b;
                }
                if let Some(t) = tol {
                    c.steiner.tol = *t;
                }
            }
        }
    }
}

fn resolve(cli: &Cli) -> Result<(String, RunConfig, bool), Failure> {
    let (name, mut config, mut verify) = match &cli.from_manifest {
        Some(path) => {
            let m = RunManifest::read(path)?;
            (m.command, m.config, m.verify)
        }
        None => {
            let cmd = cli.command.as_ref().ok_or_else(|| {
                Failure::Config("a subcommand or --from-manifest is required".into())
            })?;
            let mut config = match &cli.config {
                Some(p) => RunConfig::load(p)?,
                None => RunConfig::default(),
            };
            cmd.apply(&mut config);
            (cmd.name().to_string(), config, false)
        }
    };
    verify |= cli.verify;
    match (cli.seed.as_slice(), cli.seeds) {
        ([], None) => {}
        (list, None) => config.seeds = SeedSet::List(list.to_vec()),
        (list, Some(count)) => {
            config.seeds = SeedSet::Range {
                count,
                base: list.first().copied().unwrap_or(0),
            }
        }
    }
    if let Some(out) = &cli.out {
        config.out = out.clone();
    }
    config.validate()?;
    Ok((name, config, verify))
}

fn run(cli: Cli) -> Result<PathBuf, Failure> {
    let (name, config, verify) = resolve(&cli)?;
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Failure::Config("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::Runtime(e.into()))?;
    }
    let t0 = Instant::now();
    let ctx = Ctx::new(&name, config, verify)?;
    let mut manifest = match name.as_str() {
        "generate" => commands::generate(&ctx),
        "optimize" => commands::optimize_cmd(&ctx),
        "analyze" => commands::analyze(&ctx),
        "bounds" => commands::bounds(&ctx),
        "steiner" => commands::steiner(&ctx),
        other => Err(Failure::Config(format!("unknown command {other}"))),
    }?;
    manifest.wall_seconds = t0.elapsed().as_secs_f64();
    commands::write_manifest(&ctx, &manifest)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(path) => {
            println!("{}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("ocn: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
