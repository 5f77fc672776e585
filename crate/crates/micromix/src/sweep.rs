//! Parameter sweeps over interaction strength and total rate.
//!
//! Each cell rescales the base network's edge weights so the total rate
//! hits the requested value while all relative rates stay fixed, runs a
//! seeded ensemble, and scores it against the chosen approximation.
//! Cells that cannot be compared are recorded as skips with a reason
//! (basin-level comparators skip strengths inside a boundary interval)
//! rather than failing the sweep.

use rand::Rng;

use crate::basins::sort_attractors;
use crate::dynamics::LocalDynamics;
use crate::ensemble::{
    empirical_basin_fractions, hfa_error_of, run_ensemble_with, BasinInitSampler, ClassifySpec,
    EnsembleOptions, Retention,
};
use crate::error::Error;
use crate::hfa::{evolve_hfcsa, evolve_hflsa, mean_abundance, replicate_per_host, HfcsaSystem,
    HflsaSystem};
use crate::integrator::IntegratorConfig;
use crate::lfa::{
    boundary_set, evolve_lfa_full, evolve_lfa_pair, marginals, shared_edge_maps,
    tensor_from_independent_singles, GammaInterval, PairState,
};
use crate::metrics::lfa_error;
use crate::network::{ExchangeParams, InteractionNetwork};
use crate::rng::{derive_seed, stream_rng};
use crate::simulate::{HostDynamics, SimConfig};
use crate::Result;

/// Which approximation a sweep (or a single comparison) scores against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparator {
    LfaPair,
    LfaFull,
    Hflsa,
    Hfcsa,
}

impl Comparator {
    pub fn is_basin_level(self) -> bool {
        matches!(self, Comparator::LfaPair | Comparator::LfaFull)
    }

    pub fn name(self) -> &'static str {
        match self {
            Comparator::LfaPair => "lfa-pair",
            Comparator::LfaFull => "lfa-full",
            Comparator::Hflsa => "hflsa",
            Comparator::Hfcsa => "hfcsa",
        }
    }
}

/// Initial conditions for sweep cells.
#[derive(Debug, Clone)]
pub enum SweepInit {
    /// Explicit per-host abundance vectors (trajectory comparators).
    Vectors(Vec<Vec<f64>>),
    /// Fixed per-host basin distributions (basin comparators).
    BasinProbs(Vec<Vec<f64>>),
    /// Fresh per-cell basin distributions drawn uniformly from the
    /// probability simplex (basin comparators).
    DirichletPerCell,
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub network: InteractionNetwork,
    /// Shared local dynamics for every host.
    pub dynamics: LocalDynamics,
    pub comparator: Comparator,
    pub gamma_values: Vec<f64>,
    pub lambda_tot_values: Vec<f64>,
    pub runs: usize,
    pub base_seed: u64,
    /// Sample-grid size per cell.
    pub samples: usize,
    /// Basin comparators read this as a frequency-scaled horizon;
    /// trajectory comparators as real time.
    pub horizon: f64,
    pub init: SweepInit,
    pub integrator: IntegratorConfig,
    /// Start of the synchronized-mean comparison window, as a fraction
    /// of the horizon.
    pub hfcsa_window_start: f64,
    /// Scan resolution for the boundary-set precomputation.
    pub boundary_resolution: f64,
}

/// One sweep cell: either an error value or a skip reason.
#[derive(Debug, Clone)]
pub struct Cell {
    pub gamma: f64,
    pub lambda_tot: f64,
    pub seed: u64,
    pub error: Option<f64>,
    pub skip_reason: Option<String>,
}

/// Row-major (gamma outer, lambda inner) grid of cells.
#[derive(Debug, Clone)]
pub struct ErrorSurface {
    pub comparator: Comparator,
    pub gamma_values: Vec<f64>,
    pub lambda_tot_values: Vec<f64>,
    pub cells: Vec<Cell>,
}

impl ErrorSurface {
    pub fn cell(&self, gamma_index: usize, lambda_index: usize) -> &Cell {
        &self.cells[gamma_index * self.lambda_tot_values.len() + lambda_index]
    }

    pub fn all_skipped(&self) -> bool {
        self.cells.iter().all(|c| c.skip_reason.is_some())
    }
}

/// Attractors of the shared dynamics in label order.
fn attractors_of(dyn_: &LocalDynamics, cfg: &IntegratorConfig) -> Result<Vec<Vec<f64>>> {
    match dyn_.declared_attractors() {
        Some(list) => {
            let mut out = list.to_vec();
            sort_attractors(&mut out);
            Ok(out)
        }
        None => crate::basins::find_attractors(dyn_, 9, cfg),
    }
}

pub fn sweep(spec: &SweepSpec) -> Result<ErrorSurface> {
    if spec.gamma_values.is_empty() || spec.lambda_tot_values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if spec.runs == 0 {
        return Err(Error::ConfigInvalid("sweep needs at least 1 run".into()));
    }
    match (&spec.init, spec.comparator.is_basin_level()) {
        (SweepInit::Vectors(_), true) => {
            return Err(Error::ConfigInvalid(
                "basin-level comparators need basin-probability initial conditions".into(),
            ))
        }
        (SweepInit::BasinProbs(_) | SweepInit::DirichletPerCell, false) => {
            return Err(Error::ConfigInvalid(
                "trajectory comparators need explicit initial vectors".into(),
            ))
        }
        _ => {}
    }

    let attractors = attractors_of(&spec.dynamics, &spec.integrator)?;
    let boundary = if spec.comparator.is_basin_level() {
        boundary_set(
            &spec.dynamics,
            &spec.dynamics,
            &attractors,
            &attractors,
            spec.boundary_resolution,
            &spec.integrator,
        )?
    } else {
        Vec::new()
    };

    let mut cells = Vec::with_capacity(spec.gamma_values.len() * spec.lambda_tot_values.len());
    for (g_idx, &gamma) in spec.gamma_values.iter().enumerate() {
        for (l_idx, &lambda_tot) in spec.lambda_tot_values.iter().enumerate() {
            let cell_index = (g_idx * spec.lambda_tot_values.len() + l_idx) as u64;
            let seed = derive_seed(spec.base_seed, cell_index);
            let outcome = run_cell(spec, &attractors, &boundary, gamma, lambda_tot, seed);
            cells.push(match outcome {
                Ok(error) => Cell {
                    gamma,
                    lambda_tot,
                    seed,
                    error: Some(error),
                    skip_reason: None,
                },
                Err(reason) => Cell {
                    gamma,
                    lambda_tot,
                    seed,
                    error: None,
                    skip_reason: Some(reason),
                },
            });
        }
    }
    Ok(ErrorSurface {
        comparator: spec.comparator,
        gamma_values: spec.gamma_values.clone(),
        lambda_tot_values: spec.lambda_tot_values.clone(),
        cells,
    })
}

/// Computes one cell; any failure becomes the skip reason.
fn run_cell(
    spec: &SweepSpec,
    attractors: &[Vec<f64>],
    boundary: &[GammaInterval],
    gamma: f64,
    lambda_tot: f64,
    seed: u64,
) -> std::result::Result<f64, String> {
    if spec.comparator.is_basin_level() && boundary.iter().any(|iv| iv.contains(gamma)) {
        return Err("GammaOnBoundary".into());
    }
    compare_once(spec, attractors, gamma, lambda_tot, seed).map_err(|e| e.to_string())
}

/// Runs one ensemble-vs-approximation comparison (a 1x1 sweep).
pub fn compare_once(
    spec: &SweepSpec,
    attractors: &[Vec<f64>],
    gamma: f64,
    lambda_tot: f64,
    seed: u64,
) -> Result<f64> {
    let base_total = spec.network.total_rate();
    if base_total <= 0.0 {
        return Err(Error::ZeroTotalRate);
    }
    let network = spec.network.scaled(lambda_tot / base_total)?;
    let exchange = ExchangeParams::new(gamma)?;

    if spec.comparator.is_basin_level() {
        let t_star_end = spec.horizon;
        let horizon = t_star_end / lambda_tot;
        let t_star_grid: Vec<f64> = (0..spec.samples)
            .map(|k| t_star_end * k as f64 / (spec.samples - 1) as f64)
            .collect();

        let singles = match &spec.init {
            SweepInit::BasinProbs(p) => p.clone(),
            SweepInit::DirichletPerCell => {
                // uniform over the simplex: normalized unit exponentials
                let mut rng = stream_rng(seed, 2);
                (0..network.host_count())
                    .map(|_| {
                        let draws: Vec<f64> =
                            (0..attractors.len()).map(|_| -rng.gen::<f64>().ln()).collect();
                        let sum: f64 = draws.iter().sum();
                        draws.into_iter().map(|d| d / sum).collect()
                    })
                    .collect()
            }
            SweepInit::Vectors(_) => unreachable!("validated in sweep"),
        };

        let maps = shared_edge_maps(&network, &spec.dynamics, attractors, gamma, &spec.integrator)?;
        let rates = network.relative_rates()?;
        let approx: Vec<Vec<Vec<f64>>> = match spec.comparator {
            Comparator::LfaPair => {
                let edges: Vec<(usize, usize)> =
                    network.edges().iter().map(|&(i, j, _)| (i, j)).collect();
                let init = PairState::independent(singles.clone(), &edges)?;
                evolve_lfa_pair(&init, &maps, &rates, &t_star_grid, &spec.integrator)?
                    .into_iter()
                    .map(|state| state.singles)
                    .collect()
            }
            Comparator::LfaFull => {
                let psi0 = tensor_from_independent_singles(&singles)?;
                evolve_lfa_full(&psi0, &maps, &rates, &t_star_grid, &spec.integrator)?
                    .iter()
                    .map(marginals)
                    .collect()
            }
            _ => unreachable!(),
        };

        let sim_cfg = SimConfig {
            network,
            dynamics: HostDynamics::Shared(spec.dynamics.clone()),
            exchange,
            horizon,
            samples: spec.samples,
            integrator: spec.integrator,
            seed: 0,
            initial_states: vec![vec![0.0; spec.dynamics.dimension()]; spec.network.host_count()],
            record_events: false,
            record_energy: false,
        };
        let opts = EnsembleOptions {
            retention: Retention::Drop,
            classify: Some(ClassifySpec {
                dynamics: spec.dynamics.clone(),
                attractors: attractors.to_vec(),
                integrator: spec.integrator,
            }),
            init_sampler: Some(BasinInitSampler {
                distributions: singles,
                attractors: attractors.to_vec(),
            }),
        };
        let ens = run_ensemble_with(&sim_cfg, spec.runs, seed, &opts)?;
        let fractions =
            empirical_basin_fractions(&ens, &spec.dynamics, attractors, &spec.integrator)?;
        lfa_error(&fractions.fractions, &approx, t_star_end)
    } else {
        let initial_states = match &spec.init {
            SweepInit::Vectors(v) => v.clone(),
            _ => unreachable!("validated in sweep"),
        };
        let t_grid: Vec<f64> = (0..spec.samples)
            .map(|k| spec.horizon * k as f64 / (spec.samples - 1) as f64)
            .collect();
        let hosts = network.host_count();

        let approx: Vec<Vec<Vec<f64>>> = match spec.comparator {
            Comparator::Hflsa => {
                let sys = HflsaSystem {
                    network: network.clone(),
                    dynamics: HostDynamics::Shared(spec.dynamics.clone()),
                    gamma,
                    initial_states: initial_states.clone(),
                };
                evolve_hflsa(&sys, &t_grid, &spec.integrator)?
            }
            Comparator::Hfcsa => {
                let sys = HfcsaSystem {
                    dynamics: HostDynamics::Shared(spec.dynamics.clone()),
                    host_count: hosts,
                    mean_initial_state: mean_abundance(&initial_states)?,
                };
                let mean_path = evolve_hfcsa(&sys, &t_grid, &spec.integrator)?;
                replicate_per_host(&mean_path, hosts)
            }
            _ => unreachable!(),
        };

        let sim_cfg = SimConfig {
            network,
            dynamics: HostDynamics::Shared(spec.dynamics.clone()),
            exchange,
            horizon: spec.horizon,
            samples: spec.samples,
            integrator: spec.integrator,
            seed: 0,
            initial_states,
            record_events: false,
            record_energy: false,
        };
        let opts = EnsembleOptions {
            retention: Retention::Keep,
            ..Default::default()
        };
        let ens = run_ensemble_with(&sim_cfg, spec.runs, seed, &opts)?;

        if spec.comparator == Comparator::Hfcsa {
            // synchronized-mean guarantees exclude an initial window
            let start = spec.hfcsa_window_start * spec.horizon;
            let from = t_grid.iter().position(|&t| t >= start).unwrap_or(0);
            let windowed_runs: Vec<Vec<Vec<Vec<f64>>>> = ens
                .trajectories
                .as_ref()
                .expect("retained")
                .iter()
                .map(|run| run.states[from..].to_vec())
                .collect();
            crate::metrics::hfa_error(&windowed_runs, &approx[from..])
        } else {
            hfa_error_of(&ens, &approx, &t_grid)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::builtin_illustrative;

    fn two_host_network() -> InteractionNetwork {
        InteractionNetwork::build(2, &[(0, 1, 1.0)]).unwrap()
    }

    fn lfa_spec(runs: usize) -> SweepSpec {
        SweepSpec {
            network: two_host_network(),
            dynamics: builtin_illustrative(),
            comparator: Comparator::LfaPair,
            gamma_values: vec![0.25],
            lambda_tot_values: vec![0.025],
            runs,
            base_seed: 99,
            samples: 21,
            horizon: 2.0,
            init: SweepInit::BasinProbs(vec![
                vec![1.0, 0.0, 0.0, 0.0],
                vec![0.0, 0.0, 0.0, 1.0],
            ]),
            integrator: IntegratorConfig::default(),
            hfcsa_window_start: 0.05,
            boundary_resolution: 0.01,
        }
    }

    #[test]
    fn one_by_one_sweep_equals_direct_comparison() {
        let spec = lfa_spec(40);
        let surface = sweep(&spec).unwrap();
        assert_eq!(surface.cells.len(), 1);
        let cell = surface.cell(0, 0);
        let attractors = attractors_of(&spec.dynamics, &spec.integrator).unwrap();
        let direct =
            compare_once(&spec, &attractors, 0.25, 0.025, cell.seed).unwrap();
        assert_eq!(cell.error, Some(direct));
    }

    #[test]
    fn boundary_gammas_are_skipped_with_reason() {
        let mut spec = lfa_spec(5);
        spec.gamma_values = vec![0.1, 0.25, 0.4];
        let surface = sweep(&spec).unwrap();
        assert_eq!(surface.cell(0, 0).skip_reason.as_deref(), Some("GammaOnBoundary"));
        assert!(surface.cell(1, 0).error.is_some());
        assert_eq!(surface.cell(2, 0).skip_reason.as_deref(), Some("GammaOnBoundary"));
        assert!(!surface.all_skipped());
    }

    #[test]
    fn init_kind_is_validated_per_comparator() {
        let mut spec = lfa_spec(5);
        spec.init = SweepInit::Vectors(vec![vec![2.0, 2.0], vec![12.0, 12.0]]);
        assert!(matches!(sweep(&spec), Err(Error::ConfigInvalid(_))));

        let mut spec = lfa_spec(5);
        spec.comparator = Comparator::Hfcsa;
        assert!(matches!(sweep(&spec), Err(Error::ConfigInvalid(_))));
    }

    #[test]
    fn dirichlet_cells_are_reproducible() {
        let mut spec = lfa_spec(10);
        spec.init = SweepInit::DirichletPerCell;
        let a = sweep(&spec).unwrap();
        let b = sweep(&spec).unwrap();
        assert_eq!(a.cell(0, 0).error, b.cell(0, 0).error);
    }
}
