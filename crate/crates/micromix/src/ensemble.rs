//! Seeded Monte Carlo ensembles with order-independent aggregation.
//!
//! Run `k` of an ensemble uses the derived seed `derive_seed(base, k)`,
//! so any run is reproducible in isolation and aggregates are identical
//! for any worker count: runs execute in parallel batches but are folded
//! into the reductions strictly by run index.
//!
//! Storage follows the run count. Small ensembles (at most 100 runs)
//! answer percentile queries from exact order statistics; larger ones
//! stream per-cell histograms with bin width `M / 1024`, so band values
//! may differ from exact quantiles by at most one bin width.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::basins::{classify_basin, Classification};
use crate::dynamics::LocalDynamics;
use crate::error::Error;
use crate::integrator::IntegratorConfig;
use crate::metrics;
use crate::rng::derive_seed;
use crate::simulate::{simulate, SimConfig, Trajectory};
use crate::Result;

/// Runs per parallel batch; batches are folded in index order.
const BATCH: usize = 64;
/// Run-count threshold separating exact quantiles from histograms.
const EXACT_RUNS: usize = 100;
/// Histogram bins per (time, host, species) cell.
const HISTOGRAM_BINS: usize = 1024;

/// Shared-dynamics basin classification request for streaming fractions.
#[derive(Debug, Clone)]
pub struct ClassifySpec {
    pub dynamics: LocalDynamics,
    pub attractors: Vec<Vec<f64>>,
    pub integrator: IntegratorConfig,
}

/// What to do with per-run trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Retention {
    /// Keep them while the total state count stays under a fixed budget.
    #[default]
    Auto,
    Keep,
    Drop,
}

#[derive(Debug, Clone, Default)]
pub struct EnsembleOptions {
    pub retention: Retention,
    /// Classify every sampled state during the run and stream the counts.
    pub classify: Option<ClassifySpec>,
    /// Draw each run's initial states afresh: every host starts at the
    /// attractor of a basin drawn from its distribution.
    pub init_sampler: Option<BasinInitSampler>,
}

/// Random attractor placement for ensemble initial conditions.
#[derive(Debug, Clone)]
pub struct BasinInitSampler {
    /// `distributions[host][basin-1]`, each summing to 1.
    pub distributions: Vec<Vec<f64>>,
    /// Attractor coordinates in label order.
    pub attractors: Vec<Vec<f64>>,
}

impl BasinInitSampler {
    fn draw(&self, rng: &mut crate::rng::SimRng) -> Vec<Vec<f64>> {
        use rand::Rng;
        self.distributions
            .iter()
            .map(|weights| {
                let u: f64 = rng.gen();
                let mut cumulative = 0.0;
                for (basin, &w) in weights.iter().enumerate() {
                    cumulative += w;
                    if u < cumulative {
                        return self.attractors[basin].clone();
                    }
                }
                self.attractors[weights.len() - 1].clone()
            })
            .collect()
    }
}

/// Streamed per-cell first and second moments plus optional histograms.
#[derive(Debug, Clone)]
pub struct CellStats {
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
    /// Flat `[cell][bin]` counts; empty when exact quantiles are kept.
    pub histogram: Vec<u32>,
    pub domain_bound: f64,
}

/// Streamed basin-label counts: `[time][host][basin]` plus unresolved.
#[derive(Debug, Clone)]
pub struct BasinCounts {
    pub basin_count: usize,
    pub counts: Vec<u32>,
    pub unresolved: Vec<u32>,
}

/// Aggregated ensemble output.
#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub base_seed: u64,
    pub run_count: usize,
    pub completed_runs: usize,
    pub sample_times: Vec<f64>,
    pub host_count: usize,
    pub dimension: usize,
    pub trajectories: Option<Vec<Trajectory>>,
    pub stats: CellStats,
    pub basin_counts: Option<BasinCounts>,
    /// Per-run failures, recorded not fatal unless every run failed.
    pub failures: Vec<(usize, String)>,
}

/// Per-(time, host, basin) fractions over the resolved runs.
#[derive(Debug, Clone)]
pub struct BasinFractions {
    pub sample_times: Vec<f64>,
    /// `fractions[time][host][basin]`, summing to 1 over basins.
    pub fractions: Vec<Vec<Vec<f64>>>,
    /// Fraction of runs whose state did not resolve, per (time, host).
    pub unresolved: Vec<Vec<f64>>,
}

impl BasinFractions {
    /// True when any cell has more than 1% unresolved states.
    pub fn unresolved_flagged(&self) -> bool {
        self.unresolved
            .iter()
            .flatten()
            .any(|&fraction| fraction > 0.01)
    }
}

/// Lower/upper empirical quantile surfaces, `[time][host][dim]`.
#[derive(Debug, Clone)]
pub struct Band {
    pub lower: Vec<Vec<Vec<f64>>>,
    pub upper: Vec<Vec<Vec<f64>>>,
}

struct RunOutput {
    trajectory: Option<Trajectory>,
    /// Flat `[time][host]` labels, 0 = unresolved.
    labels: Option<Vec<u16>>,
    /// States flattened `[time][host][dim]` for the streaming reductions.
    flat_states: Vec<f64>,
}

/// Runs `runs` independent trajectories with split seeds and aggregates
/// them deterministically.
pub fn run_ensemble(cfg: &SimConfig, runs: usize, base_seed: u64) -> Result<EnsembleResult> {
    run_ensemble_with(cfg, runs, base_seed, &EnsembleOptions::default())
}

pub fn run_ensemble_with(
    cfg: &SimConfig,
    runs: usize,
    base_seed: u64,
    opts: &EnsembleOptions,
) -> Result<EnsembleResult> {
    if runs == 0 {
        return Err(Error::ConfigInvalid("ensemble needs at least 1 run".into()));
    }
    cfg.validate()?;
    let sample_times = cfg.sample_grid();
    let hosts = cfg.network.host_count();
    let dim = cfg.dynamics.dimension();
    let cells = sample_times.len() * hosts * dim;
    let keep_trajectories = match opts.retention {
        Retention::Keep => true,
        Retention::Drop => false,
        // ~128 MB of f64 states
        Retention::Auto => runs * cells <= 16_000_000,
    };
    let keep_histograms = runs > EXACT_RUNS;

    let mut stats = CellStats {
        sum: vec![0.0; cells],
        sum_sq: vec![0.0; cells],
        histogram: if keep_histograms {
            vec![0; cells * HISTOGRAM_BINS]
        } else {
            Vec::new()
        },
        domain_bound: cfg.dynamics.domain_bound(),
    };
    let basin_count = opts.classify.as_ref().map(|c| c.attractors.len());
    let mut basin_counts = basin_count.map(|m| BasinCounts {
        basin_count: m,
        counts: vec![0; sample_times.len() * hosts * m],
        unresolved: vec![0; sample_times.len() * hosts],
    });

    let mut trajectories = keep_trajectories.then(Vec::new);
    let mut failures: Vec<(usize, String)> = Vec::new();
    let mut completed = 0usize;

    let mut start = 0usize;
    while start < runs {
        let end = (start + BATCH).min(runs);
        let batch: Vec<(usize, Result<RunOutput>)> = (start..end)
            .into_par_iter()
            .map(|k| {
                let mut run_cfg = cfg.clone();
                run_cfg.seed = derive_seed(base_seed, k as u64);
                run_cfg.record_events = false;
                run_cfg.record_energy = false;
                if let Some(sampler) = &opts.init_sampler {
                    // substream 1 of the run seed; the trajectory itself
                    // consumes the run seed directly
                    let mut init_rng = crate::rng::stream_rng(run_cfg.seed, 1);
                    run_cfg.initial_states = sampler.draw(&mut init_rng);
                }
                (k, execute_run(&run_cfg, opts, keep_trajectories))
            })
            .collect();
        for (k, outcome) in batch {
            match outcome {
                Ok(output) => {
                    completed += 1;
                    fold_stats(&mut stats, &output.flat_states, keep_histograms);
                    if let (Some(counts), Some(labels)) =
                        (basin_counts.as_mut(), output.labels.as_ref())
                    {
                        fold_labels(counts, labels);
                    }
                    if let (Some(store), Some(trajectory)) =
                        (trajectories.as_mut(), output.trajectory)
                    {
                        store.push(trajectory);
                    }
                }
                Err(err) => failures.push((k, err.to_string())),
            }
        }
        start = end;
    }

    if completed == 0 {
        let first = failures
            .first()
            .map(|(_, message)| message.clone())
            .unwrap_or_default();
        return Err(Error::AllRunsFailed { runs, first });
    }

    Ok(EnsembleResult {
        base_seed,
        run_count: runs,
        completed_runs: completed,
        sample_times,
        host_count: hosts,
        dimension: dim,
        trajectories,
        stats,
        basin_counts,
        failures,
    })
}

fn execute_run(
    cfg: &SimConfig,
    opts: &EnsembleOptions,
    keep_trajectory: bool,
) -> Result<RunOutput> {
    let trajectory = simulate(cfg)?;
    let flat_states: Vec<f64> = trajectory
        .states
        .iter()
        .flat_map(|snapshot| snapshot.iter().flatten().copied())
        .collect();
    let labels = match &opts.classify {
        Some(spec) => Some(classify_trajectory(&trajectory, spec)?),
        None => None,
    };
    Ok(RunOutput {
        trajectory: keep_trajectory.then_some(trajectory),
        labels,
        flat_states,
    })
}

/// Classifies every sampled state of one trajectory. Consecutive
/// samples between events repeat bit-identically, so results are
/// memoized on the exact state bits; states already inside an attractor
/// ball skip the flow entirely.
fn classify_trajectory(trajectory: &Trajectory, spec: &ClassifySpec) -> Result<Vec<u16>> {
    let mut memo: HashMap<Vec<u64>, u16> = HashMap::new();
    let mut labels =
        Vec::with_capacity(trajectory.states.len() * trajectory.host_count());
    for snapshot in &trajectory.states {
        for state in snapshot {
            let key: Vec<u64> = state.iter().map(|v| v.to_bits()).collect();
            let label = match memo.get(&key) {
                Some(&hit) => hit,
                None => {
                    let class = classify_basin(
                        &spec.dynamics,
                        state,
                        &spec.attractors,
                        &spec.integrator,
                    )?;
                    let label = match class {
                        Classification::Basin(b) => b as u16,
                        Classification::Unresolved => 0,
                    };
                    memo.insert(key, label);
                    label
                }
            };
            labels.push(label);
        }
    }
    Ok(labels)
}

fn fold_stats(stats: &mut CellStats, flat_states: &[f64], histograms: bool) {
    debug_assert_eq!(stats.sum.len(), flat_states.len());
    for (cell, &value) in flat_states.iter().enumerate() {
        stats.sum[cell] += value;
        stats.sum_sq[cell] += value * value;
        if histograms {
            let bin = histogram_bin(value, stats.domain_bound);
            stats.histogram[cell * HISTOGRAM_BINS + bin] += 1;
        }
    }
}

fn histogram_bin(value: f64, bound: f64) -> usize {
    let normalized = (value / bound).clamp(0.0, 1.0);
    ((normalized * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1)
}

fn fold_labels(counts: &mut BasinCounts, labels: &[u16]) {
    debug_assert_eq!(counts.unresolved.len(), labels.len());
    for (cell, &label) in labels.iter().enumerate() {
        if label == 0 {
            counts.unresolved[cell] += 1;
        } else {
            counts.counts[cell * counts.basin_count + (label as usize - 1)] += 1;
        }
    }
}

/// Fraction of runs in each basin per (time, host), over resolved runs.
///
/// Uses streamed counts when the ensemble collected them; otherwise
/// classifies the retained trajectories with the given shared dynamics.
pub fn empirical_basin_fractions(
    ens: &EnsembleResult,
    dynamics: &LocalDynamics,
    attractors: &[Vec<f64>],
    cfg: &IntegratorConfig,
) -> Result<BasinFractions> {
    let counts = match &ens.basin_counts {
        Some(streamed) if streamed.basin_count == attractors.len() => streamed.clone(),
        _ => {
            let trajectories = ens.trajectories.as_ref().ok_or_else(|| {
                Error::ConfigInvalid(
                    "ensemble retained neither basin counts nor trajectories".into(),
                )
            })?;
            let spec = ClassifySpec {
                dynamics: dynamics.clone(),
                attractors: attractors.to_vec(),
                integrator: *cfg,
            };
            let mut counts = BasinCounts {
                basin_count: attractors.len(),
                counts: vec![0; ens.sample_times.len() * ens.host_count * attractors.len()],
                unresolved: vec![0; ens.sample_times.len() * ens.host_count],
            };
            let labelled: Vec<Vec<u16>> = trajectories
                .par_iter()
                .map(|t| classify_trajectory(t, &spec))
                .collect::<Result<_>>()?;
            for labels in &labelled {
                fold_labels(&mut counts, labels);
            }
            counts
        }
    };

    let times = ens.sample_times.len();
    let hosts = ens.host_count;
    let m = counts.basin_count;
    let mut fractions = vec![vec![vec![0.0; m]; hosts]; times];
    let mut unresolved = vec![vec![0.0; hosts]; times];
    for t in 0..times {
        for h in 0..hosts {
            let cell = t * hosts + h;
            let bad = counts.unresolved[cell];
            let resolved: u32 = (0..m)
                .map(|b| counts.counts[cell * m + b])
                .sum();
            let total = (bad + resolved) as f64;
            unresolved[t][h] = if total > 0.0 { bad as f64 / total } else { 0.0 };
            for b in 0..m {
                fractions[t][h][b] = if resolved > 0 {
                    counts.counts[cell * m + b] as f64 / resolved as f64
                } else {
                    0.0
                };
            }
        }
    }
    Ok(BasinFractions {
        sample_times: ens.sample_times.clone(),
        fractions,
        unresolved,
    })
}

/// Empirical `(q_lo, q_hi)` percentile band per (time, host, species).
///
/// Small ensembles interpolate linearly between the closest order
/// statistics; larger ones answer from the streamed histograms (bin
/// midpoints, so within one bin width of the exact quantile).
pub fn percentile_band(ens: &EnsembleResult, q_lo: f64, q_hi: f64) -> Result<Band> {
    if !(0.0..=100.0).contains(&q_lo) || !(0.0..=100.0).contains(&q_hi) || q_lo >= q_hi {
        return Err(Error::BadQuantiles { lo: q_lo, hi: q_hi });
    }
    let times = ens.sample_times.len();
    let hosts = ens.host_count;
    let dim = ens.dimension;
    let mut band = Band {
        lower: vec![vec![vec![0.0; dim]; hosts]; times],
        upper: vec![vec![vec![0.0; dim]; hosts]; times],
    };

    if ens.run_count <= EXACT_RUNS {
        let trajectories = ens.trajectories.as_ref().ok_or_else(|| {
            Error::ConfigInvalid("exact quantiles need retained trajectories".into())
        })?;
        let mut values = Vec::with_capacity(trajectories.len());
        for t in 0..times {
            for h in 0..hosts {
                for d in 0..dim {
                    values.clear();
                    values.extend(trajectories.iter().map(|run| run.states[t][h][d]));
                    values.sort_by(|a, b| a.total_cmp(b));
                    band.lower[t][h][d] = interpolated_quantile(&values, q_lo);
                    band.upper[t][h][d] = interpolated_quantile(&values, q_hi);
                }
            }
        }
    } else {
        let bin_width = ens.stats.domain_bound / HISTOGRAM_BINS as f64;
        for t in 0..times {
            for h in 0..hosts {
                for d in 0..dim {
                    let cell = (t * hosts + h) * dim + d;
                    let bins = &ens.stats.histogram
                        [cell * HISTOGRAM_BINS..(cell + 1) * HISTOGRAM_BINS];
                    band.lower[t][h][d] = histogram_quantile(bins, q_lo, bin_width);
                    band.upper[t][h][d] = histogram_quantile(bins, q_hi, bin_width);
                }
            }
        }
    }
    Ok(band)
}

/// Linear interpolation between the closest order statistics of a
/// sorted sample: rank `q/100 * (n - 1)`.
fn interpolated_quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let rank = q / 100.0 * (n - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let fraction = rank - lo as f64;
    sorted[lo] + fraction * (sorted[hi] - sorted[lo])
}

/// Midpoint of the bin holding the rounded target rank.
fn histogram_quantile(bins: &[u32], q: f64, bin_width: f64) -> f64 {
    let total: u64 = bins.iter().map(|&c| c as u64).sum();
    if total == 0 {
        return 0.0;
    }
    let rank = (q / 100.0 * (total - 1) as f64).round() as u64;
    let mut seen = 0u64;
    for (b, &count) in bins.iter().enumerate() {
        seen += count as u64;
        if seen > rank {
            return (b as f64 + 0.5) * bin_width;
        }
    }
    (bins.len() as f64 - 0.5) * bin_width
}

/// Mean-over-runs trajectory error of the ensemble against a per-host
/// approximation sampled on the same grid.
pub fn hfa_error_of(
    ens: &EnsembleResult,
    approx: &[Vec<Vec<f64>>],
    t_grid: &[f64],
) -> Result<f64> {
    if t_grid.len() != ens.sample_times.len()
        || t_grid
            .iter()
            .zip(&ens.sample_times)
            .any(|(a, b)| (a - b).abs() > 1e-12)
    {
        return Err(Error::ShapeMismatch(
            "comparison grid differs from the ensemble sample grid".into(),
        ));
    }
    let trajectories = ens.trajectories.as_ref().ok_or_else(|| {
        Error::ConfigInvalid("trajectory error needs retained trajectories".into())
    })?;
    let runs: Vec<Vec<Vec<Vec<f64>>>> =
        trajectories.iter().map(|t| t.states.clone()).collect();
    metrics::hfa_error(&runs, approx)
}
