//! Command-line interface: subcommands, flag overrides, output files,
//! and exit codes.
//!
//! Exit status: 0 success, 2 configuration error, 3 numerical failure,
//! 4 sweep finished but every cell was skipped.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{parse_comparator, parse_config, InitSpec, Manifest, Mode, RunConfig};
use crate::error::Error;
use crate::hfa::{evolve_hfcsa, evolve_hflsa, mean_abundance, replicate_per_host, HfcsaSystem,
    HflsaSystem};
use crate::io;
use crate::lfa::{
    boundary_set, evolve_lfa_full, evolve_lfa_pair, format_intervals, marginals,
    shared_edge_maps, tensor_from_independent_singles, PairState,
};
use crate::rng::derive_seed;
use crate::simulate::{simulate, HostDynamics, SimConfig};
use crate::sweep::{sweep, Comparator, SweepInit, SweepSpec};
use crate::Result;

#[derive(Parser)]
#[command(
    name = "micromix",
    version,
    about = "Simulate hosts exchanging microbiome state on a network and \
             validate the basin-level and high-frequency approximations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the stochastic event-driven simulation.
    Simulate(RunArgs),
    /// Evolve basin probabilities (full tensor or pair closure).
    Lfa(LfaArgs),
    /// Integrate the high-frequency low-strength dispersal ODE.
    Hflsa(RunArgs),
    /// Integrate the high-frequency constant-strength mean-field ODE.
    Hfcsa(RunArgs),
    /// Fill an error surface over (gamma, lambda_tot) cells.
    Sweep(RunArgs),
    /// Score one ensemble against one approximation.
    Compare(RunArgs),
    /// Parse and validate a config, echoing the resolved form.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file (a manifest from an earlier run also works).
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the run count.
    #[arg(long)]
    runs: Option<usize>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Cap the worker thread count.
    #[arg(long)]
    threads: Option<usize>,
    /// Override the config mode.
    #[arg(long)]
    mode: Option<ModeArg>,
}

#[derive(Args)]
struct LfaArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Which evolution to run when the config mode is not an lfa mode.
    #[arg(long)]
    variant: Option<LfaVariant>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LfaVariant {
    Full,
    Pair,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Simulate,
    LfaFull,
    LfaPair,
    Hflsa,
    Hfcsa,
    Sweep,
    Compare,
}

impl From<ModeArg> for Mode {
    fn from(arg: ModeArg) -> Mode {
        match arg {
            ModeArg::Simulate => Mode::Simulate,
            ModeArg::LfaFull => Mode::LfaFull,
            ModeArg::LfaPair => Mode::LfaPair,
            ModeArg::Hflsa => Mode::Hflsa,
            ModeArg::Hfcsa => Mode::Hfcsa,
            ModeArg::Sweep => Mode::Sweep,
            ModeArg::Compare => Mode::Compare,
        }
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            // clap handles --help/--version with its own formatting
            let _ = err.print();
            return if err.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = match cli.command {
        Command::Simulate(args) => dispatch(args, Some(Mode::Simulate), None),
        Command::Lfa(args) => {
            let variant = args.variant;
            dispatch(args.run, None, variant)
        }
        Command::Hflsa(args) => dispatch(args, Some(Mode::Hflsa), None),
        Command::Hfcsa(args) => dispatch(args, Some(Mode::Hfcsa), None),
        Command::Sweep(args) => dispatch(args, Some(Mode::Sweep), None),
        Command::Compare(args) => dispatch(args, Some(Mode::Compare), None),
        Command::ValidateConfig { config } => match parse_config(&config) {
            Ok(cfg) => {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&cfg).expect("config serializes")
                );
                Ok(0)
            }
            Err(err) => Err(err),
        },
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_status()
        }
    }
}

fn dispatch(
    args: RunArgs,
    subcommand_mode: Option<Mode>,
    lfa_variant: Option<LfaVariant>,
) -> Result<i32> {
    let mut cfg = parse_config(&args.config)?;
    if let Some(mode) = args.mode.map(Mode::from).or(subcommand_mode) {
        cfg.mode = mode;
    } else {
        // the lfa subcommand: honor the config mode when it already is
        // an lfa mode, otherwise take the variant flag (default pair)
        cfg.mode = match (cfg.mode, lfa_variant) {
            (_, Some(LfaVariant::Full)) => Mode::LfaFull,
            (_, Some(LfaVariant::Pair)) => Mode::LfaPair,
            (mode @ (Mode::LfaFull | Mode::LfaPair), None) => mode,
            (_, None) => Mode::LfaPair,
        };
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(runs) = args.runs {
        cfg.runs = runs;
    }
    if let Some(out) = args.out {
        cfg.output = Some(out.display().to_string());
    }
    if let Some(threads) = args.threads {
        cfg.threads = Some(threads);
    }
    crate::config::validate_config(&cfg)?;
    run_command(&cfg)
}

/// Executes a fully resolved config and writes its outputs. Returns the
/// process exit code (0, or 4 for a sweep whose every cell skipped).
pub fn run_command(cfg: &RunConfig) -> Result<i32> {
    match cfg.threads {
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::ConfigInvalid(format!("thread pool: {e}")))?;
            pool.install(|| execute(cfg))
        }
        None => execute(cfg),
    }
}

fn out_dir(cfg: &RunConfig) -> PathBuf {
    PathBuf::from(cfg.output.clone().unwrap_or_else(|| "out".into()))
}

fn linspace(end: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| end * k as f64 / (points - 1) as f64)
        .collect()
}

fn execute(cfg: &RunConfig) -> Result<i32> {
    let resolved = cfg.resolve()?;
    let dir = out_dir(cfg);
    let mut outputs: Vec<String> = Vec::new();
    let mut run_seeds: Vec<u64> = Vec::new();
    let mut exit = 0;

    match cfg.mode {
        Mode::Simulate => {
            let initial_states = match &cfg.init {
                InitSpec::Vectors { vectors } => vectors.clone(),
                _ => unreachable!("validated"),
            };
            let sim = SimConfig {
                network: resolved.network.clone(),
                dynamics: HostDynamics::Shared(resolved.dynamics.clone()),
                exchange: resolved.exchange,
                horizon: cfg.horizon.expect("validated"),
                samples: cfg.samples,
                integrator: resolved.integrator,
                seed: cfg.seed,
                initial_states,
                record_events: true,
                record_energy: false,
            };
            let trajectory = simulate(&sim)?;
            io::write_output(&dir, "trajectory.csv", &io::trajectory_csv(&trajectory))?;
            io::write_output(&dir, "events.csv", &io::events_csv(&trajectory))?;
            outputs.extend(["trajectory.csv".into(), "events.csv".into()]);
            run_seeds.push(cfg.seed);
        }
        Mode::LfaFull | Mode::LfaPair => {
            let singles = match &cfg.init {
                InitSpec::BasinProbs { probs } => probs.clone(),
                _ => unreachable!("validated"),
            };
            for p in &singles {
                if p.len() != resolved.attractors.len() {
                    return Err(Error::ConfigInvalid(format!(
                        "basin distribution has {} entries but the dynamics has {} attractors",
                        p.len(),
                        resolved.attractors.len()
                    )));
                }
            }
            let intervals = boundary_set(
                &resolved.dynamics,
                &resolved.dynamics,
                &resolved.attractors,
                &resolved.attractors,
                cfg.boundary_resolution,
                &resolved.integrator,
            )?;
            if let Some(hit) = intervals.iter().find(|iv| iv.contains(cfg.gamma)) {
                return Err(Error::GammaOnBoundary {
                    gamma: cfg.gamma,
                    intervals: format!(
                        "{}; boundary set {}",
                        format_intervals(&[*hit]),
                        crate::lfa::format_boundary_points(&intervals)
                    ),
                });
            }
            let maps = shared_edge_maps(
                &resolved.network,
                &resolved.dynamics,
                &resolved.attractors,
                cfg.gamma,
                &resolved.integrator,
            )?;
            let rates = resolved.network.relative_rates()?;
            let grid = linspace(cfg.horizon_star.expect("validated"), cfg.samples);
            io::write_output(&dir, "transition_maps.json", &io::maps_json(&maps))?;
            outputs.push("transition_maps.json".into());
            if cfg.mode == Mode::LfaFull {
                let psi0 = tensor_from_independent_singles(&singles)?;
                let path = evolve_lfa_full(&psi0, &maps, &rates, &grid, &resolved.integrator)?;
                io::write_output(&dir, "tensor.csv", &io::tensor_csv(&grid, &path))?;
                let single_path: Vec<Vec<Vec<f64>>> = path.iter().map(marginals).collect();
                io::write_output(&dir, "singles.csv", &io::singles_csv(&grid, &single_path))?;
                outputs.extend(["tensor.csv".into(), "singles.csv".into()]);
            } else {
                let edges: Vec<(usize, usize)> = resolved
                    .network
                    .edges()
                    .iter()
                    .map(|&(i, j, _)| (i, j))
                    .collect();
                let init = PairState::independent(singles, &edges)?;
                let path = evolve_lfa_pair(&init, &maps, &rates, &grid, &resolved.integrator)?;
                io::write_output(&dir, "singles.csv", &io::pair_singles_csv(&grid, &path))?;
                outputs.push("singles.csv".into());
            }
        }
        Mode::Hflsa => {
            let initial_states = match &cfg.init {
                InitSpec::Vectors { vectors } => vectors.clone(),
                _ => unreachable!("validated"),
            };
            let sys = HflsaSystem {
                network: resolved.network.clone(),
                dynamics: HostDynamics::Shared(resolved.dynamics.clone()),
                gamma: cfg.gamma,
                initial_states,
            };
            let grid = linspace(cfg.horizon.expect("validated"), cfg.samples);
            let path = evolve_hflsa(&sys, &grid, &resolved.integrator)?;
            io::write_output(&dir, "trajectory.csv", &io::states_csv(&grid, &path))?;
            outputs.push("trajectory.csv".into());
        }
        Mode::Hfcsa => {
            let initial_states = match &cfg.init {
                InitSpec::Vectors { vectors } => vectors.clone(),
                _ => unreachable!("validated"),
            };
            let sys = HfcsaSystem {
                dynamics: HostDynamics::Shared(resolved.dynamics.clone()),
                host_count: resolved.network.host_count(),
                mean_initial_state: mean_abundance(&initial_states)?,
            };
            let grid = linspace(cfg.horizon.expect("validated"), cfg.samples);
            let path = evolve_hfcsa(&sys, &grid, &resolved.integrator)?;
            let per_host = replicate_per_host(&path, resolved.network.host_count());
            io::write_output(&dir, "trajectory.csv", &io::states_csv(&grid, &per_host))?;
            outputs.push("trajectory.csv".into());
        }
        Mode::Sweep | Mode::Compare => {
            let comparator = parse_comparator(cfg.comparator.as_deref().expect("validated"))?;
            let spec = sweep_spec(cfg, comparator)?;
            let surface = sweep(&spec)?;
            run_seeds.extend(surface.cells.iter().map(|c| c.seed));
            let name = if cfg.mode == Mode::Sweep {
                "surface.csv"
            } else {
                "error.csv"
            };
            io::write_output(&dir, name, &io::surface_csv(&surface))?;
            outputs.push(name.into());
            if surface.all_skipped() {
                exit = 4;
            }
        }
    }

    // ensemble modes also record the derived per-run seeds
    if matches!(cfg.mode, Mode::Compare) {
        let per_cell = run_seeds.clone();
        for cell_seed in per_cell {
            run_seeds.extend((0..cfg.runs.min(1000)).map(|k| derive_seed(cell_seed, k as u64)));
        }
    }

    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        config_sha256: io::sha256_hex(
            &serde_json::to_string(cfg).expect("config serializes"),
        ),
        lambda_tot: resolved.lambda_tot,
        horizon: cfg.horizon,
        horizon_star: cfg.horizon_star,
        base_seed: cfg.seed,
        run_seeds: run_seeds.into_iter().take(1000).collect(),
        outputs: outputs.clone(),
    };
    io::write_output(
        &dir,
        "manifest.json",
        &serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    println!(
        "wrote {} and manifest.json to {}",
        outputs.join(", "),
        dir.display()
    );
    Ok(exit)
}

/// Builds the sweep specification shared by sweep and compare modes
/// (compare is a 1x1 sweep at the config's own gamma and total rate).
fn sweep_spec(cfg: &RunConfig, comparator: Comparator) -> Result<SweepSpec> {
    let resolved = cfg.resolve()?;
    let init = match (&cfg.init, comparator.is_basin_level()) {
        (InitSpec::Vectors { vectors }, false) => SweepInit::Vectors(vectors.clone()),
        (InitSpec::BasinProbs { probs }, true) => SweepInit::BasinProbs(probs.clone()),
        (InitSpec::Dirichlet, true) => SweepInit::DirichletPerCell,
        _ => {
            return Err(Error::ConfigInvalid(
                "init kind incompatible with comparator".into(),
            ))
        }
    };
    let horizon = if comparator.is_basin_level() {
        cfg.horizon_star.expect("validated")
    } else {
        cfg.horizon.expect("validated")
    };
    let (gamma_values, lambda_tot_values) = if cfg.mode == Mode::Sweep {
        (
            cfg.gamma_values.clone().expect("validated"),
            cfg.lambda_tot_values.clone().expect("validated"),
        )
    } else {
        (vec![cfg.gamma], vec![resolved.lambda_tot])
    };
    Ok(SweepSpec {
        network: resolved.network,
        dynamics: resolved.dynamics,
        comparator,
        gamma_values,
        lambda_tot_values,
        runs: cfg.runs,
        base_seed: cfg.seed,
        samples: cfg.samples,
        horizon,
        init,
        integrator: resolved.integrator,
        hfcsa_window_start: cfg.hfcsa_window_start,
        boundary_resolution: cfg.boundary_resolution,
    })
}
