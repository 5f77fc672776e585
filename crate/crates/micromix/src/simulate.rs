//! Exact event-driven simulation of the full exchange process.
//!
//! The process alternates deterministic local flows with instantaneous
//! pairwise exchanges. Event times come from a single global exponential
//! clock with rate equal to the network's total rate; each event is then
//! attributed to an edge with probability proportional to its weight.
//! This is equivalent to independent per-edge exponential clocks and
//! cheaper than maintaining one timer per edge.
//!
//! States recorded on the sample grid are obtained by integrating
//! exactly to the grid times, never by interpolation, which would bias
//! samples near basin boundaries. A state recorded at an event time is
//! the post-exchange state (right-continuous convention).

use rand::Rng;

use crate::dynamics::{flow_in_place, LocalDynamics};
use crate::error::Error;
use crate::integrator::IntegratorConfig;
use crate::network::{exchange_in_place, ExchangeParams, InteractionNetwork, RelativeRates};
use crate::rng::{trajectory_rng, SimRng};
use crate::Result;

/// One interaction: at `time`, hosts `i < j` exchanged state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    pub time: f64,
    pub i: usize,
    pub j: usize,
}

/// Per-event Dirichlet-energy bookkeeping (optional diagnostic).
///
/// `decrement()` is the change of the interacting pair's own energy
/// term, the quantity that satisfies the closed identity
/// `-4 g (1-g) (rate_ij / rate_tot) |N_i - N_j|^2` exactly. The full
/// energy is also recorded; its change additionally carries cross terms
/// against the pair's other neighbors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyEvent {
    pub time: f64,
    pub i: usize,
    pub j: usize,
    /// Full Dirichlet energy immediately before the exchange.
    pub energy_before: f64,
    /// Full Dirichlet energy immediately after the exchange.
    pub energy_after: f64,
    /// Squared pair distance before the exchange.
    pub pair_distance_sq_before: f64,
    /// Squared pair distance after the exchange.
    pub pair_distance_sq_after: f64,
    /// Relative rate of the interacting edge.
    pub relative_rate: f64,
}

impl EnergyEvent {
    /// Change of the interacting pair's energy term, computed from the
    /// recorded squared distances.
    pub fn decrement(&self) -> f64 {
        self.relative_rate * (self.pair_distance_sq_after - self.pair_distance_sq_before)
    }
}

/// A simulated path: states on the sample grid plus the event log.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub sample_times: Vec<f64>,
    /// `states[k][host]` is that host's abundance vector at `sample_times[k]`.
    pub states: Vec<Vec<Vec<f64>>>,
    pub events: Vec<EventRecord>,
    pub seed: u64,
    /// Filled when `SimConfig::record_energy` is set.
    pub energy_events: Option<Vec<EnergyEvent>>,
}

impl Trajectory {
    pub fn host_count(&self) -> usize {
        self.states.first().map_or(0, |s| s.len())
    }

    pub fn dimension(&self) -> usize {
        self.states
            .first()
            .and_then(|s| s.first())
            .map_or(0, |v| v.len())
    }
}

/// Per-host dynamics: one shared field (identical hosts) or one per host.
#[derive(Debug, Clone)]
pub enum HostDynamics {
    Shared(LocalDynamics),
    PerHost(Vec<LocalDynamics>),
}

impl HostDynamics {
    pub fn for_host(&self, host: usize) -> &LocalDynamics {
        match self {
            HostDynamics::Shared(d) => d,
            HostDynamics::PerHost(v) => &v[host],
        }
    }

    pub fn host_count_hint(&self) -> Option<usize> {
        match self {
            HostDynamics::Shared(_) => None,
            HostDynamics::PerHost(v) => Some(v.len()),
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            HostDynamics::Shared(d) => d.dimension(),
            HostDynamics::PerHost(v) => v.first().map_or(0, |d| d.dimension()),
        }
    }

    pub fn domain_bound(&self) -> f64 {
        match self {
            HostDynamics::Shared(d) => d.domain_bound(),
            HostDynamics::PerHost(v) => v.first().map_or(0.0, |d| d.domain_bound()),
        }
    }
}

/// Full specification of one simulation run.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub network: InteractionNetwork,
    pub dynamics: HostDynamics,
    pub exchange: ExchangeParams,
    /// Horizon `T`.
    pub horizon: f64,
    /// Number of sample-grid points over `[0, T]`, endpoints included.
    pub samples: usize,
    pub integrator: IntegratorConfig,
    pub seed: u64,
    /// One abundance vector per host.
    pub initial_states: Vec<Vec<f64>>,
    /// Keep the event log on the trajectory (memory grows with rate * T).
    pub record_events: bool,
    /// Track per-event Dirichlet-energy changes.
    pub record_energy: bool,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let hosts = self.network.host_count();
        if self.samples < 2 {
            return Err(Error::ConfigInvalid(format!(
                "need at least 2 sample points, got {}",
                self.samples
            )));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::ConfigInvalid(format!(
                "horizon must be positive and finite, got {}",
                self.horizon
            )));
        }
        self.integrator.validate()?;
        if let Some(count) = self.dynamics.host_count_hint() {
            if count != hosts {
                return Err(Error::ConfigInvalid(format!(
                    "{count} per-host dynamics for {hosts} hosts"
                )));
            }
        }
        if let HostDynamics::PerHost(list) = &self.dynamics {
            let n = self.dynamics.dimension();
            if list.iter().any(|d| d.dimension() != n) {
                return Err(Error::ConfigInvalid(
                    "all hosts must share one abundance dimension".into(),
                ));
            }
        }
        if self.initial_states.len() != hosts {
            return Err(Error::ConfigInvalid(format!(
                "{} initial states for {hosts} hosts",
                self.initial_states.len()
            )));
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
        Ok(())
    }

    /// The uniform sample grid `0 = t_0 < ... < t_{K-1} = T`.
    pub fn sample_grid(&self) -> Vec<f64> {
        let k = self.samples;
        (0..k)
            .map(|m| self.horizon * m as f64 / (k - 1) as f64)
            .collect()
    }
}

/// Draws an exponential waiting time with rate `lambda_tot` by
/// inverse-CDF: `-ln(u) / lambda_tot` with `u` uniform on `(0, 1]`.
pub fn sample_waiting_time(rng: &mut SimRng, lambda_tot: f64) -> Result<f64> {
    if lambda_tot <= 0.0 {
        return Err(Error::ZeroTotalRate);
    }
    let u: f64 = 1.0 - rng.gen::<f64>(); // uniform on (0, 1]
    Ok(-u.ln() / lambda_tot)
}

/// Picks the interacting edge by cumulative-sum inversion over the
/// canonical edge order.
pub fn pick_pair(rng: &mut SimRng, rates: &RelativeRates) -> Result<(usize, usize)> {
    let entries = rates.entries();
    if entries.is_empty() {
        return Err(Error::EmptyEdgeList);
    }
    let u: f64 = rng.gen();
    let mut cumulative = 0.0;
    for &(i, j, l) in entries {
        cumulative += l;
        if u < cumulative {
            return Ok((i, j));
        }
    }
    // round-off leftovers land on the last edge
    let last = entries[entries.len() - 1];
    Ok((last.0, last.1))
}

#[allow(clippy::large_enum_variant)] // one instance per trajectory
enum EventSource<'a> {
    Stochastic {
        rng: SimRng,
        lambda_tot: f64,
        rates: Option<RelativeRates>,
    },
    Schedule {
        events: &'a [(f64, usize, usize)],
        cursor: usize,
    },
}

impl EventSource<'_> {
    /// Time of the next event after `now`, or `None` past the horizon.
    fn peek(&mut self, now: f64, pending: &mut Option<f64>) -> Result<Option<f64>> {
        match self {
            EventSource::Stochastic {
                rng, lambda_tot, ..
            } => {
                if *lambda_tot <= 0.0 {
                    return Ok(None);
                }
                if pending.is_none() {
                    *pending = Some(now + sample_waiting_time(rng, *lambda_tot)?);
                }
                Ok(*pending)
            }
            EventSource::Schedule { events, cursor } => {
                Ok(events.get(*cursor).map(|e| e.0))
            }
        }
    }

    /// Consumes the pending event, returning its edge.
    fn fire(&mut self, pending: &mut Option<f64>) -> Result<(usize, usize)> {
        match self {
            EventSource::Stochastic { rng, rates, .. } => {
                *pending = None;
                let rates = rates.as_ref().ok_or(Error::EmptyEdgeList)?;
                pick_pair(rng, rates)
            }
            EventSource::Schedule { events, cursor } => {
                let (_, i, j) = events[*cursor];
                *cursor += 1;
                Ok((i, j))
            }
        }
    }
}

/// Runs the full stochastic process. Identical seeds give bit-identical
/// trajectories.
pub fn simulate(cfg: &SimConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let lambda_tot = cfg.network.total_rate();
    let rates = if lambda_tot > 0.0 {
        Some(cfg.network.relative_rates()?)
    } else {
        None
    };
    let source = EventSource::Stochastic {
        rng: trajectory_rng(cfg.seed),
        lambda_tot,
        rates,
    };
    run(cfg, source)
}

/// Deterministic replay: identical semantics to [`simulate`] with the
/// given event list replacing the stochastic draws.
pub fn simulate_with_schedule(
    cfg: &SimConfig,
    events: &[(f64, usize, usize)],
) -> Result<Trajectory> {
    cfg.validate()?;
    let mut previous = 0.0;
    for (index, &(time, i, j)) in events.iter().enumerate() {
        if time.is_nan() || time <= previous {
            return Err(Error::UnsortedEvents { index });
        }
        if time > cfg.horizon {
            return Err(Error::ConfigInvalid(format!(
                "scheduled event at t = {time} beyond horizon {}",
                cfg.horizon
            )));
        }
        previous = time;
        if !cfg.network.has_edge(i, j) {
            return Err(Error::UnknownEdge { i, j });
        }
    }
    run(cfg, EventSource::Schedule { events, cursor: 0 })
}

fn run(cfg: &SimConfig, mut source: EventSource) -> Result<Trajectory> {
    let grid = cfg.sample_grid();
    let hosts = cfg.network.host_count();
    let mut states: Vec<Vec<f64>> = cfg.initial_states.clone();
    let mut samples: Vec<Vec<Vec<f64>>> = Vec::with_capacity(grid.len());
    samples.push(states.clone());

    let mut events = Vec::new();
    let mut energy_events = if cfg.record_energy {
        Some(Vec::new())
    } else {
        None
    };
    let gamma = cfg.exchange.gamma();

    let mut now = 0.0;
    let mut next_sample = 1usize;
    let mut pending_event: Option<f64> = None;

    while next_sample < grid.len() {
        let sample_time = grid[next_sample];
        let event_time = source.peek(now, &mut pending_event)?;

        // next boundary: the earlier of the next grid time and the next
        // event (events beyond the horizon never fire)
        let (target, is_event) = match event_time {
            Some(te) if te <= sample_time && te <= cfg.horizon => (te, true),
            _ => (sample_time, false),
        };

        let step = target - now;
        if step > 0.0 {
            for host in 0..hosts {
                flow_in_place(
                    cfg.dynamics.for_host(host),
                    &mut states[host],
                    step,
                    &cfg.integrator,
                )?;
            }
            now = target;
        } else {
            now = target;
        }

        if is_event {
            let (a, b) = source.fire(&mut pending_event)?;
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            let before = energy_events.as_ref().map(|_| {
                (
                    dirichlet_energy_of(&states, &cfg.network),
                    pair_distance_sq(&states[i], &states[j]),
                )
            });
            let (left, right) = states.split_at_mut(j);
            exchange_in_place(&mut left[i], &mut right[0], gamma);
            if let (Some(ledger), Some((energy_before, dist_sq_before))) =
                (energy_events.as_mut(), before)
            {
                let total = cfg.network.total_rate();
                ledger.push(EnergyEvent {
                    time: now,
                    i,
                    j,
                    energy_before,
                    energy_after: dirichlet_energy_of(&states, &cfg.network),
                    pair_distance_sq_before: dist_sq_before,
                    pair_distance_sq_after: pair_distance_sq(&states[i], &states[j]),
                    relative_rate: cfg.network.rate(i, j) / total,
                });
            }
            if cfg.record_events {
                events.push(EventRecord { time: now, i, j });
            }
        }

        // an event landing exactly on a grid time records post-exchange
        if now == grid[next_sample] {
            samples.push(states.clone());
            next_sample += 1;
        }
    }

    Ok(Trajectory {
        sample_times: grid,
        states: samples,
        events,
        seed: cfg.seed,
        energy_events,
    })
}

fn pair_distance_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Rate-weighted Dirichlet energy of a host-state collection:
/// `U = (1/2) * sum over ordered pairs of (rate_ij / rate_tot) * |N_i - N_j|^2`.
/// Used here for the event ledger; the public metric lives in [`crate::metrics`].
pub(crate) fn dirichlet_energy_of(states: &[Vec<f64>], network: &InteractionNetwork) -> f64 {
    let total = network.total_rate();
    if total <= 0.0 {
        return 0.0;
    }
    let mut energy = 0.0;
    for &(i, j, rate) in network.edges() {
        // each unordered edge appears twice in the ordered sum, halved
        energy += (rate / total) * pair_distance_sq(&states[i], &states[j]);
    }
    energy
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basins::{classify_basin, find_attractors, Classification};
    use crate::dynamics::{builtin_illustrative, flow};
    use crate::network::demo_network_10;
    use crate::rng::stream_rng;

    fn two_host_config(gamma: f64, horizon: f64, seed: u64) -> SimConfig {
        SimConfig {
            network: InteractionNetwork::build(2, &[(0, 1, 1.0)]).unwrap(),
            dynamics: HostDynamics::Shared(builtin_illustrative()),
            exchange: ExchangeParams::new(gamma).unwrap(),
            horizon,
            samples: 101,
            integrator: IntegratorConfig::default(),
            seed,
            initial_states: vec![vec![2.0, 2.0], vec![12.0, 12.0]],
            record_events: true,
            record_energy: false,
        }
    }

    #[test]
    fn waiting_time_inverse_cdf_arithmetic() {
        // u = e^{-1} gives exactly 1/lambda
        let t = -(std::f64::consts::E.recip()).ln() / 1.0;
        assert!((t - 1.0).abs() < 1e-15);
        let mut rng = stream_rng(7, 0);
        assert!(matches!(
            sample_waiting_time(&mut rng, 0.0),
            Err(Error::ZeroTotalRate)
        ));
        for _ in 0..100 {
            assert!(sample_waiting_time(&mut rng, 25.0).unwrap() > 0.0);
        }
    }

    #[test]
    fn waiting_time_empirical_mean() {
        let mut rng = stream_rng(11, 0);
        let n = 100_000usize;
        let lambda = 25.0;
        let mean: f64 = (0..n)
            .map(|_| sample_waiting_time(&mut rng, lambda).unwrap())
            .sum::<f64>()
            / n as f64;
        let three_sigma = 3.0 * (1.0 / lambda) / (n as f64).sqrt();
        assert!(
            (mean - 1.0 / lambda).abs() < three_sigma,
            "mean {mean} vs {}",
            1.0 / lambda
        );
    }

    #[test]
    fn pick_pair_certainty_and_cdf_inversion() {
        let single = InteractionNetwork::build(2, &[(0, 1, 2.5)]).unwrap();
        let rates = single.relative_rates().unwrap();
        let mut rng = stream_rng(3, 0);
        for _ in 0..10 {
            assert_eq!(pick_pair(&mut rng, &rates).unwrap(), (0, 1));
        }
        // direct CDF check without an RNG: {0.25, 0.75} at u = 0.5
        let net = InteractionNetwork::build(3, &[(0, 1, 1.0), (0, 2, 3.0)]).unwrap();
        let r = net.relative_rates().unwrap();
        let entries = r.entries();
        let u = 0.5;
        let mut cumulative = 0.0;
        let mut picked = None;
        for &(i, j, l) in entries {
            cumulative += l;
            if u < cumulative {
                picked = Some((i, j));
                break;
            }
        }
        assert_eq!(picked, Some((0, 2)));
    }

    #[test]
    fn pick_pair_frequencies_match_relative_rates() {
        let net = demo_network_10().unwrap();
        let rates = net.relative_rates().unwrap();
        let mut rng = stream_rng(19, 0);
        let n = 100_000usize;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..n {
            *counts.entry(pick_pair(&mut rng, &rates).unwrap()).or_insert(0usize) += 1;
        }
        let p = 1.0 / 25.0;
        let three_sigma = 3.0 * (p * (1.0 - p) / n as f64).sqrt();
        for &(i, j, _) in rates.entries() {
            let freq = *counts.get(&(i, j)).unwrap_or(&0) as f64 / n as f64;
            assert!(
                (freq - p).abs() < three_sigma,
                "edge ({i},{j}) frequency {freq}"
            );
        }
    }

    #[test]
    fn edgeless_network_is_pure_local_flow() {
        let cfg = SimConfig {
            network: InteractionNetwork::build(2, &[]).unwrap(),
            ..two_host_config(0.3, 1.0, 5)
        };
        let traj = simulate(&cfg).unwrap();
        assert!(traj.events.is_empty());
        let dyn_ = builtin_illustrative();
        for (k, &t) in traj.sample_times.iter().enumerate() {
            for host in 0..2 {
                let reference = flow(&dyn_, &cfg.initial_states[host], t, &cfg.integrator).unwrap();
                for d in 0..2 {
                    assert!(
                        (traj.states[k][host][d] - reference[d]).abs() < 1e-6,
                        "t={t} host={host}"
                    );
                }
            }
        }
    }

    #[test]
    fn identical_seeds_are_bit_identical() {
        let cfg = two_host_config(0.32, 2.0, 99);
        let a = simulate(&cfg).unwrap();
        let b = simulate(&cfg).unwrap();
        assert_eq!(a.events, b.events);
        assert_eq!(a.states, b.states);
    }

    #[test]
    fn schedule_replay_reference_scenario() {
        // five forced interactions; the last two are close enough in time
        // to drive host 2 from basin 2 into basin 1
        let cfg = two_host_config(0.32, 1.0, 0);
        let schedule = [
            (0.1, 0, 1),
            (0.3, 0, 1),
            (0.4, 0, 1),
            (0.7, 0, 1),
            (0.73, 0, 1),
        ];
        let traj = simulate_with_schedule(&cfg, &schedule).unwrap();
        let dyn_ = builtin_illustrative();
        let attractors = find_attractors(&dyn_, 3, &cfg.integrator).unwrap();
        let basin_at = |t: f64, host: usize| {
            let k = traj
                .sample_times
                .iter()
                .position(|&s| (s - t).abs() < 1e-12)
                .unwrap();
            classify_basin(&dyn_, &traj.states[k][host], &attractors, &cfg.integrator).unwrap()
        };
        // right after the first event host 2 has moved from basin 4 to 2
        assert_eq!(basin_at(0.2, 1), Classification::Basin(2));
        // interactions at 0.3 and 0.4 do not drive the 2 -> 1 transition
        assert_eq!(basin_at(0.6, 1), Classification::Basin(2));
        // after 0.73 host 2 is in basin 1
        assert_eq!(basin_at(1.0, 1), Classification::Basin(1));
        assert_eq!(basin_at(1.0, 0), Classification::Basin(1));
    }

    #[test]
    fn empty_schedule_and_identity_gamma_reduce_to_flow() {
        let cfg = two_host_config(0.0, 1.0, 0);
        let pure = simulate_with_schedule(&cfg, &[]).unwrap();
        let with_event = simulate_with_schedule(&cfg, &[(0.5, 0, 1)]).unwrap();
        for (a, b) in pure.states.iter().zip(with_event.states.iter()) {
            for (x, y) in a.iter().zip(b.iter()) {
                for (u, v) in x.iter().zip(y.iter()) {
                    assert!((u - v).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn schedule_validation_errors() {
        let cfg = two_host_config(0.1, 1.0, 0);
        assert!(matches!(
            simulate_with_schedule(&cfg, &[(0.5, 0, 1), (0.4, 0, 1)]),
            Err(Error::UnsortedEvents { index: 1 })
        ));
        // an undirected edge is addressable in either index order
        assert!(simulate_with_schedule(&cfg, &[(0.5, 1, 0)]).is_ok());
        let net3 = InteractionNetwork::build(3, &[(0, 1, 1.0)]).unwrap();
        let cfg3 = SimConfig {
            network: net3,
            initial_states: vec![vec![2.0, 2.0]; 3],
            ..two_host_config(0.1, 1.0, 0)
        };
        assert!(matches!(
            simulate_with_schedule(&cfg3, &[(0.5, 0, 2)]),
            Err(Error::UnknownEdge { i: 0, j: 2 })
        ));
    }

    #[test]
    fn states_stay_in_domain_and_sums_conserve_at_events() {
        let mut cfg = two_host_config(0.45, 3.0, 1234);
        cfg.record_energy = true;
        let traj = simulate(&cfg).unwrap();
        let m = 13.0;
        for snapshot in &traj.states {
            for host_state in snapshot {
                for &v in host_state {
                    assert!((0.0..=m).contains(&v));
                }
            }
        }
        assert!(!traj.events.is_empty());
    }

    #[test]
    fn energy_ledger_matches_exchange_identity() {
        let mut cfg = two_host_config(0.25, 5.0, 777);
        cfg.record_energy = true;
        let traj = simulate(&cfg).unwrap();
        let ledger = traj.energy_events.as_ref().unwrap();
        assert!(!ledger.is_empty());
        let gamma: f64 = 0.25;
        for ev in ledger {
            let decrement = ev.decrement();
            let expected =
                -4.0 * gamma * (1.0 - gamma) * ev.relative_rate * ev.pair_distance_sq_before;
            assert!(decrement <= 0.0);
            // relative gate with a rounding floor for near-equal pairs
            let floor = 32.0 * f64::EPSILON * 13.0 * ev.pair_distance_sq_before.sqrt();
            let scale = (1e-10 * expected.abs()).max(floor);
            assert!(
                (decrement - expected).abs() <= scale,
                "decrement {decrement} expected {expected}"
            );
            // on two hosts the pair term is the whole energy
            let full_delta = ev.energy_after - ev.energy_before;
            assert!((full_delta - decrement).abs() <= 1e-10 * scale.max(1e-12));
        }
    }

    #[test]
    fn event_on_grid_time_records_post_exchange_state() {
        let cfg = SimConfig {
            samples: 11,
            ..two_host_config(0.25, 1.0, 0)
        };
        // 0.5 lies exactly on the sample grid
        let traj = simulate_with_schedule(&cfg, &[(0.5, 0, 1)]).unwrap();
        let k = traj
            .sample_times
            .iter()
            .position(|&t| t == 0.5)
            .unwrap();
        let pre = [
            flow(&builtin_illustrative(), &cfg.initial_states[0], 0.5, &cfg.integrator).unwrap(),
            flow(&builtin_illustrative(), &cfg.initial_states[1], 0.5, &cfg.integrator).unwrap(),
        ];
        let expected = crate::network::apply_exchange(&pre[0], &pre[1], cfg.exchange).unwrap();
        for d in 0..2 {
            assert!((traj.states[k][0][d] - expected.0[d]).abs() < 1e-7);
            assert!((traj.states[k][1][d] - expected.1[d]).abs() < 1e-7);
        }
    }

    #[test]
    fn energy_rate_between_events_is_bounded() {
        // between interactions the energy changes no faster than
        // 4 * G * M with G a sampled field bound
        let mut cfg = two_host_config(0.3, 3.0, 4242);
        cfg.samples = 301;
        cfg.record_energy = true;
        let traj = simulate(&cfg).unwrap();
        let dyn_ = builtin_illustrative();
        let m = dyn_.domain_bound();
        let mut field_bound = 0.0f64;
        for snapshot in &traj.states {
            for state in snapshot {
                let f = dyn_.eval_vec(state);
                field_bound = field_bound.max(f.iter().map(|v| v * v).sum::<f64>().sqrt());
            }
        }
        let rate_bound = 4.0 * field_bound * m;
        let event_times: Vec<f64> =
            traj.events.iter().map(|e| e.time).collect();
        for (k, window) in traj.sample_times.windows(2).enumerate() {
            let crosses_event = event_times
                .iter()
                .any(|&t| t > window[0] && t <= window[1]);
            if crosses_event {
                continue;
            }
            let u0 = dirichlet_energy_of(&traj.states[k], &cfg.network);
            let u1 = dirichlet_energy_of(&traj.states[k + 1], &cfg.network);
            let rate = (u1 - u0).abs() / (window[1] - window[0]);
            assert!(rate <= rate_bound, "rate {rate} over bound {rate_bound}");
        }
    }

    #[test]
    fn interevent_gaps_are_memoryless() {
        // Kolmogorov-Smirnov against Exp(lambda_tot) on the demo network
        let net = demo_network_10().unwrap();
        let cfg = SimConfig {
            network: net,
            dynamics: HostDynamics::Shared(builtin_illustrative()),
            exchange: ExchangeParams::new(0.0).unwrap(),
            horizon: 80.0,
            samples: 2,
            integrator: IntegratorConfig::default(),
            seed: 2024,
            initial_states: vec![vec![2.0, 2.0]; 10],
            record_events: true,
            record_energy: false,
        };
        let traj = simulate(&cfg).unwrap();
        let mut gaps: Vec<f64> = Vec::with_capacity(traj.events.len());
        let mut last = 0.0;
        for ev in &traj.events {
            gaps.push(ev.time - last);
            last = ev.time;
        }
        assert!(gaps.len() > 1000, "{}", gaps.len());
        let d = crate::metrics::ks_statistic_exponential(&mut gaps, 25.0);
        let critical = crate::metrics::ks_critical_value(gaps.len(), 0.001);
        assert!(d < critical, "KS statistic {d} over critical {critical}");
    }

    #[test]
    fn mean_drift_between_events_comes_from_local_fields() {
        // over an event-free span the mean displacement must equal the
        // quadrature of the mean local field along the flow
        let dyn_ = builtin_illustrative();
        let cfg = IntegratorConfig::default();
        let starts = [vec![4.0, 6.0], vec![9.0, 3.0]];
        let span = 0.37;
        let steps = 2000usize;
        let h = span / steps as f64;
        let mut drift = vec![0.0; 2];
        let mut quadrature = vec![0.0; 2];
        for x0 in &starts {
            let end = flow(&dyn_, x0, span, &cfg).unwrap();
            for d in 0..2 {
                drift[d] += (end[d] - x0[d]) / starts.len() as f64;
            }
            // trapezoid rule along a finely resampled flow
            let mut acc = [0.0; 2];
            for s in 0..=steps {
                let t = s as f64 * h;
                let state = flow(&dyn_, x0, t, &cfg).unwrap();
                let f = dyn_.eval_vec(&state);
                let w = if s == 0 || s == steps { 0.5 } else { 1.0 };
                for d in 0..2 {
                    acc[d] += w * f[d] * h;
                }
            }
            for d in 0..2 {
                quadrature[d] += acc[d] / starts.len() as f64;
            }
        }
        for d in 0..2 {
            assert!(
                (drift[d] - quadrature[d]).abs() < 1e-5,
                "drift {drift:?} quadrature {quadrature:?}"
            );
        }
    }
}
