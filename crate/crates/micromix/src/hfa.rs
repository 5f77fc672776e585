//! High-frequency approximations.
//!
//! When interactions are much faster than local relaxation the
//! stochastic exchange admits two deterministic limits:
//!
//! * frequent but weak interactions (fixed `rate * gamma`): each host
//!   follows its local field plus a linear dispersal coupling with
//!   coefficient `rate_ij * gamma`, the classical mass-effects form;
//! * frequent interactions at constant strength: all hosts synchronize
//!   to the mean state, which then follows the average of the local
//!   fields.
//!
//! Both are plain ODEs; variance information comes only from the Monte
//! Carlo harness.

use crate::dynamics::clamp_into_domain;
use crate::error::Error;
use crate::integrator::{integrate_in_place, IntegratorConfig};
use crate::network::InteractionNetwork;
use crate::simulate::HostDynamics;
use crate::Result;

/// The coupled dispersal system: network, per-host dynamics, strength,
/// and per-host initial states.
#[derive(Debug, Clone)]
pub struct HflsaSystem {
    pub network: InteractionNetwork,
    pub dynamics: HostDynamics,
    pub gamma: f64,
    pub initial_states: Vec<Vec<f64>>,
}

/// The synchronized mean-field system.
#[derive(Debug, Clone)]
pub struct HfcsaSystem {
    pub dynamics: HostDynamics,
    pub host_count: usize,
    /// Mean of the hosts' initial states.
    pub mean_initial_state: Vec<f64>,
}

impl HflsaSystem {
    fn validate(&self) -> Result<()> {
        let hosts = self.network.host_count();
        if self.initial_states.len() != hosts {
            return Err(Error::ConfigInvalid(format!(
                "{} initial states for {hosts} hosts",
                self.initial_states.len()
            )));
        }
        if let Some(count) = self.dynamics.host_count_hint() {
            if count != hosts {
                return Err(Error::ConfigInvalid(format!(
                    "{count} per-host dynamics for {hosts} hosts"
                )));
            }
        }
        let n = self.dynamics.dimension();
        for (host, state) in self.initial_states.iter().enumerate() {
            if state.len() != n {
                return Err(Error::ConfigInvalid(format!(
                    "initial state of host {host} has dimension {} (expected {n})",
                    state.len()
                )));
            }
            let m = self.dynamics.for_host(host).domain_bound();
            if state.iter().any(|&v| !(0.0..=m).contains(&v)) {
                return Err(Error::ConfigInvalid(format!(
                    "initial state of host {host} outside [0, {m}]^{n}"
                )));
            }
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::ConfigInvalid(format!(
                "dispersal strength gamma = {} must be nonnegative",
                self.gamma
            )));
        }
        Ok(())
    }
}

impl HfcsaSystem {
    /// Builds the system from per-host initial states.
    pub fn from_states(
        dynamics: HostDynamics,
        initial_states: &[Vec<f64>],
    ) -> Result<Self> {
        let mean = mean_abundance(initial_states)?;
        Ok(Self {
            dynamics,
            host_count: initial_states.len(),
            mean_initial_state: mean,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.host_count == 0 {
            return Err(Error::EmptyInput);
        }
        let n = self.dynamics.dimension();
        if self.mean_initial_state.len() != n {
            return Err(Error::ConfigInvalid(format!(
                "mean initial state has dimension {} (expected {n})",
                self.mean_initial_state.len()
            )));
        }
        let m = self.dynamics.domain_bound();
        if self.mean_initial_state.iter().any(|&v| !(0.0..=m).contains(&v)) {
            return Err(Error::ConfigInvalid(format!(
                "mean initial state outside [0, {m}]^{n}"
            )));
        }
        Ok(())
    }
}

/// Entrywise arithmetic mean of a nonempty set of equal-length vectors.
pub fn mean_abundance(states: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = states.first().ok_or(Error::EmptyInput)?;
    let n = first.len();
    let mut mean = vec![0.0; n];
    for state in states {
        if state.len() != n {
            return Err(Error::DimensionMismatch {
                left: n,
                right: state.len(),
            });
        }
        for (m, &v) in mean.iter_mut().zip(state) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= states.len() as f64;
    }
    Ok(mean)
}

fn validate_sample_times(sample_times: &[f64]) -> Result<()> {
    if sample_times.is_empty() {
        return Err(Error::EmptyInput);
    }
    if sample_times[0] < 0.0 || sample_times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::ConfigInvalid(
            "sample times must be nondecreasing and nonnegative".into(),
        ));
    }
    Ok(())
}

/// Integrates the dispersal system
/// `dN_i/dt = g_i(N_i) + sum_j rate_ij * gamma * (N_j - N_i)`,
/// returning `[time][host][dim]` snapshots on `sample_times`.
pub fn evolve_hflsa(
    sys: &HflsaSystem,
    sample_times: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<Vec<Vec<f64>>>> {
    sys.validate()?;
    validate_sample_times(sample_times)?;
    let hosts = sys.network.host_count();
    let n = sys.dynamics.dimension();
    let gamma = sys.gamma;

    // flattened state: host-major
    let mut state: Vec<f64> = sys.initial_states.concat();
    let edges: Vec<(usize, usize, f64)> = sys.network.edges().to_vec();
    let mut snapshots = Vec::with_capacity(sample_times.len());
    let mut record = |state: &mut [f64]| -> Result<()> {
        let mut snapshot = Vec::with_capacity(hosts);
        for host in 0..hosts {
            let block = &mut state[host * n..(host + 1) * n];
            clamp_into_domain(block, sys.dynamics.for_host(host).domain_bound(), cfg.abs_tol)?;
            snapshot.push(block.to_vec());
        }
        snapshots.push(snapshot);
        Ok(())
    };

    record(&mut state)?;
    for window in sample_times.windows(2) {
        let span = window[1] - window[0];
        integrate_in_place(
            |y, dy| {
                for host in 0..hosts {
                    let block = &y[host * n..(host + 1) * n];
                    sys.dynamics
                        .for_host(host)
                        .eval(block, &mut dy[host * n..(host + 1) * n]);
                }
                for &(i, j, rate) in &edges {
                    let coupling = rate * gamma;
                    for d in 0..n {
                        let difference = y[j * n + d] - y[i * n + d];
                        dy[i * n + d] += coupling * difference;
                        dy[j * n + d] -= coupling * difference;
                    }
                }
            },
            &mut state,
            span,
            cfg,
            |_| false,
        )?;
        record(&mut state)?;
    }
    Ok(snapshots)
}

/// Integrates the synchronized mean-field
/// `dN/dt = (1/|H|) sum_j g_j(N)` from the mean initial state,
/// returning one snapshot per sample time.
pub fn evolve_hfcsa(
    sys: &HfcsaSystem,
    sample_times: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<Vec<f64>>> {
    sys.validate()?;
    validate_sample_times(sample_times)?;
    let n = sys.dynamics.dimension();
    let hosts = sys.host_count;
    let mut state = sys.mean_initial_state.clone();
    let mut field = vec![0.0; n];
    let mut snapshots = Vec::with_capacity(sample_times.len());

    let mut record = |state: &mut Vec<f64>| -> Result<()> {
        clamp_into_domain(state, sys.dynamics.domain_bound(), cfg.abs_tol)?;
        snapshots.push(state.clone());
        Ok(())
    };
    record(&mut state)?;
    for window in sample_times.windows(2) {
        let span = window[1] - window[0];
        integrate_in_place(
            |y, dy| {
                dy.fill(0.0);
                for host in 0..hosts {
                    sys.dynamics.for_host(host).eval(y, &mut field);
                    for (acc, f) in dy.iter_mut().zip(&field) {
                        *acc += f / hosts as f64;
                    }
                }
            },
            &mut state,
            span,
            cfg,
            |_| false,
        )?;
        record(&mut state)?;
    }
    Ok(snapshots)
}

/// Expands a mean-field trajectory to per-host shape so the error
/// metrics can consume it uniformly (every host is approximated by the
/// same synchronized state).
pub fn replicate_per_host(trajectory: &[Vec<f64>], hosts: usize) -> Vec<Vec<Vec<f64>>> {
    trajectory
        .iter()
        .map(|state| vec![state.clone(); hosts])
        .collect()
}
