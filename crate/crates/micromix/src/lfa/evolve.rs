//! Evolution of basin probabilities in frequency-scaled time.
//!
//! Full mode integrates `d psi / d t* = Phi psi - psi` over the dense
//! joint tensor, matrix-free (the operator is applied edge by edge).
//! Pair mode closes the hierarchy at dyads: triads are approximated by
//! products of dyads over their shared host, with divisions by
//! single-host probabilities guarded at 1e-12 (when a single-host mass
//! vanishes, so does every pair mass above it, and the term's true
//! value is zero).

use crate::error::Error;
use crate::integrator::{integrate_in_place, IntegratorConfig};
use crate::lfa::operator::total_operator_into;
use crate::lfa::{
    BasinProbabilityTensor, PairBlock, PairState, TransitionMaps, DEFAULT_TENSOR_CAP,
};
use crate::network::RelativeRates;
use crate::Result;

/// Outer product of per-host basin distributions: the joint tensor of
/// independent hosts.
pub fn tensor_from_independent_singles(singles: &[Vec<f64>]) -> Result<BasinProbabilityTensor> {
    if singles.is_empty() {
        return Err(Error::EmptyInput);
    }
    let dims: Vec<usize> = singles.iter().map(|s| s.len()).collect();
    let size: usize = dims.iter().product();
    let mut data = vec![1.0; size];
    let strides = crate::lfa::operator::row_major_strides(&dims);
    for (flat, value) in data.iter_mut().enumerate() {
        for (host, s) in singles.iter().enumerate() {
            *value *= s[flat / strides[host] % dims[host]];
        }
    }
    BasinProbabilityTensor::new(dims, data)
}

/// Per-host marginals of a joint tensor: sums over all other axes.
pub fn marginals(psi: &BasinProbabilityTensor) -> Vec<Vec<f64>> {
    let dims = psi.dims();
    let strides = crate::lfa::operator::row_major_strides(dims);
    let mut out: Vec<Vec<f64>> = dims.iter().map(|&m| vec![0.0; m]).collect();
    for (flat, &value) in psi.data().iter().enumerate() {
        for host in 0..dims.len() {
            out[host][flat / strides[host] % dims[host]] += value;
        }
    }
    out
}

fn validate_grid(t_star_grid: &[f64]) -> Result<()> {
    if t_star_grid.is_empty() {
        return Err(Error::EmptyInput);
    }
    if t_star_grid[0] < 0.0 || t_star_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::ConfigInvalid(
            "frequency-scaled time grid must be nondecreasing and nonnegative".into(),
        ));
    }
    Ok(())
}

/// Integrates the exact tensor equation, sampling on `t_star_grid`
/// (the initial tensor is the state at the first grid time).
pub fn evolve_lfa_full(
    psi0: &BasinProbabilityTensor,
    maps: &TransitionMaps,
    rates: &RelativeRates,
    t_star_grid: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<BasinProbabilityTensor>> {
    validate_grid(t_star_grid)?;
    if psi0.len() > DEFAULT_TENSOR_CAP {
        return Err(Error::TensorTooLarge {
            entries: psi0.len() as u128,
            cap: DEFAULT_TENSOR_CAP,
        });
    }
    let dims = psi0.dims().to_vec();
    // surface missing-map and shape errors before entering the ODE
    let mut scratch = vec![0.0; psi0.len()];
    total_operator_into(&mut scratch, psi0.data(), &dims, maps, rates)?;

    let mut state = psi0.data().to_vec();
    let mut snapshots = Vec::with_capacity(t_star_grid.len());
    snapshots.push(sample_tensor(&dims, &state, cfg)?);
    for window in t_star_grid.windows(2) {
        let span = window[1] - window[0];
        integrate_in_place(
            |y, dy| {
                total_operator_into(&mut scratch, y, &dims, maps, rates)
                    .expect("operator validated before integration");
                for ((d, &phi), &v) in dy.iter_mut().zip(&scratch).zip(y) {
                    *d = phi - v;
                }
            },
            &mut state,
            span,
            cfg,
            |_| false,
        )?;
        snapshots.push(sample_tensor(&dims, &state, cfg)?);
    }
    Ok(snapshots)
}

/// Snapshot of an ODE state as a probability tensor: round-off-sized
/// negative entries are clamped, anything worse is an error.
fn sample_tensor(
    dims: &[usize],
    state: &[f64],
    cfg: &IntegratorConfig,
) -> Result<BasinProbabilityTensor> {
    let floor = -(10.0 * cfg.abs_tol).max(1e-12);
    let mut data = state.to_vec();
    for v in &mut data {
        if *v < 0.0 {
            if *v < floor && *v < -1e-6 {
                return Err(Error::NegativeProbability { value: *v });
            }
            *v = 0.0;
        }
    }
    BasinProbabilityTensor::new(dims.to_vec(), data)
}

/// Host adjacency prepared for the pair kernels.
struct Adjacency {
    /// `per_host[u]` lists `(edge_index, other_host, l, u_is_row)`.
    per_host: Vec<Vec<(usize, usize, f64, bool)>>,
}

fn build_adjacency(hosts: usize, pairs: &[PairBlock], rates: &RelativeRates) -> Result<Adjacency> {
    let mut per_host = vec![Vec::new(); hosts];
    for (edge_index, block) in pairs.iter().enumerate() {
        let l = rates.probability(block.i, block.j);
        if l <= 0.0 {
            return Err(Error::ConfigInvalid(format!(
                "pair block ({}, {}) has no matching edge rate",
                block.i, block.j
            )));
        }
        per_host[block.i].push((edge_index, block.j, l, true));
        per_host[block.j].push((edge_index, block.i, l, false));
    }
    Ok(Adjacency { per_host })
}

/// Division guard: below this single-host mass a closure term vanishes.
const MASS_GUARD: f64 = 1e-12;

/// Integrates the closed single/pair system, sampling on `t_star_grid`.
/// Probability blocks are renormalized at each sample when round-off
/// drift exceeds 1e-12; entries below -1e-6 abort the evolution.
pub fn evolve_lfa_pair(
    init: &PairState,
    maps: &TransitionMaps,
    rates: &RelativeRates,
    t_star_grid: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<PairState>> {
    validate_grid(t_star_grid)?;
    let hosts = init.singles.len();
    let adjacency = build_adjacency(hosts, &init.pairs, rates)?;
    // oriented transition maps must exist for every tracked pair
    for block in &init.pairs {
        let map = maps
            .get(block.i, block.j)
            .ok_or(Error::MissingEdgeMap {
                i: block.i,
                j: block.j,
            })?;
        if map.dims() != (block.m_i, block.m_j) {
            return Err(Error::ShapeMismatch(format!(
                "map for edge ({}, {}) is {:?}, pair block is {} x {}",
                block.i,
                block.j,
                map.dims(),
                block.m_i,
                block.m_j
            )));
        }
    }

    let layout = Layout::new(init);
    let mut state = layout.flatten(init);
    let mut snapshots = Vec::with_capacity(t_star_grid.len());
    snapshots.push(layout.unflatten(init, &mut state)?);
    for window in t_star_grid.windows(2) {
        let span = window[1] - window[0];
        integrate_in_place(
            |y, dy| pair_derivative(y, dy, init, &layout, &adjacency, maps),
            &mut state,
            span,
            cfg,
            |_| false,
        )?;
        snapshots.push(layout.unflatten(init, &mut state)?);
    }
    Ok(snapshots)
}

/// Offsets of each probability block in the flattened ODE state.
struct Layout {
    single_offsets: Vec<usize>,
    pair_offsets: Vec<usize>,
    total: usize,
}

impl Layout {
    fn new(state: &PairState) -> Self {
        let mut offset = 0;
        let single_offsets = state
            .singles
            .iter()
            .map(|s| {
                let here = offset;
                offset += s.len();
                here
            })
            .collect();
        let pair_offsets = state
            .pairs
            .iter()
            .map(|p| {
                let here = offset;
                offset += p.data.len();
                here
            })
            .collect();
        Self {
            single_offsets,
            pair_offsets,
            total: offset,
        }
    }

    fn flatten(&self, state: &PairState) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.total);
        for s in &state.singles {
            out.extend_from_slice(s);
        }
        for p in &state.pairs {
            out.extend_from_slice(&p.data);
        }
        out
    }

    /// Reads a snapshot out of the ODE state, clamping and renormalizing
    /// both the snapshot and the live state.
    fn unflatten(&self, template: &PairState, state: &mut [f64]) -> Result<PairState> {
        for &v in state.iter() {
            if v < -1e-6 {
                return Err(Error::NegativeProbability { value: v });
            }
        }
        let mut renorm = |range: std::ops::Range<usize>| {
            let block = &mut state[range];
            for v in block.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            let sum: f64 = block.iter().sum();
            if (sum - 1.0).abs() > 1e-12 && sum > 0.0 {
                for v in block.iter_mut() {
                    *v /= sum;
                }
            }
        };
        for (host, s) in template.singles.iter().enumerate() {
            let start = self.single_offsets[host];
            renorm(start..start + s.len());
        }
        for (idx, p) in template.pairs.iter().enumerate() {
            let start = self.pair_offsets[idx];
            renorm(start..start + p.data.len());
        }
        let singles = template
            .singles
            .iter()
            .enumerate()
            .map(|(host, s)| {
                let start = self.single_offsets[host];
                state[start..start + s.len()].to_vec()
            })
            .collect();
        let pairs = template
            .pairs
            .iter()
            .enumerate()
            .map(|(idx, p)| {
                let start = self.pair_offsets[idx];
                PairBlock {
                    data: state[start..start + p.data.len()].to_vec(),
                    ..*p
                }
            })
            .collect();
        Ok(PairState { singles, pairs })
    }
}

/// Right-hand side of the closed single/pair system.
fn pair_derivative(
    y: &[f64],
    dy: &mut [f64],
    template: &PairState,
    layout: &Layout,
    adjacency: &Adjacency,
    maps: &TransitionMaps,
) {
    dy.fill(0.0);
    let hosts = template.singles.len();

    // block accessors over the flat state
    let single = |host: usize, a0: usize| y[layout.single_offsets[host] + a0];
    let pair = |edge: usize, row0: usize, col0: usize| {
        let block = &template.pairs[edge];
        y[layout.pair_offsets[edge] + row0 * block.m_j + col0]
    };
    // pair entry seen from host u: (u's basin, other's basin)
    let pair_from = |edge: usize, u_is_row: bool, u0: usize, other0: usize| {
        if u_is_row {
            pair(edge, u0, other0)
        } else {
            pair(edge, other0, u0)
        }
    };
    let map_from = move |maps: &TransitionMaps,
                         template: &PairState,
                         edge: usize,
                         u_is_row: bool,
                         u0: usize,
                         other0: usize| {
        let block = &template.pairs[edge];
        let map = maps.get(block.i, block.j).expect("validated");
        if u_is_row {
            map.apply0(u0, other0)
        } else {
            let (b2, a2) = map.apply0(other0, u0);
            (a2, b2)
        }
    };

    // singles: inflow of mass into each label minus total outflow
    for u in 0..hosts {
        let m_u = template.singles[u].len();
        let base = layout.single_offsets[u];
        for &(edge, v, l, u_is_row) in &adjacency.per_host[u] {
            let m_v = template.singles[v].len();
            for d0 in 0..m_u {
                for e0 in 0..m_v {
                    let mass = pair_from(edge, u_is_row, d0, e0);
                    let (a2, _) = map_from(maps, template, edge, u_is_row, d0, e0);
                    dy[base + a2] += l * mass; // inflow to the mapped label
                    dy[base + d0] -= l * mass; // outflow from the source label
                }
            }
        }
    }

    // pairs: own-edge master equation plus closed third-host terms
    for (edge, block) in template.pairs.iter().enumerate() {
        let (u, v) = (block.i, block.j);
        let (m_u, m_v) = (block.m_i, block.m_j);
        let base = layout.pair_offsets[edge];
        let l_uv = adjacency.per_host[u]
            .iter()
            .find(|entry| entry.0 == edge)
            .map(|entry| entry.2)
            .expect("edge registered in adjacency");

        // interactions on (u, v) themselves
        for d0 in 0..m_u {
            for e0 in 0..m_v {
                let mass = pair(edge, d0, e0);
                let (a2, b2) = map_from(maps, template, edge, true, d0, e0);
                dy[base + a2 * m_v + b2] += l_uv * mass;
                dy[base + d0 * m_v + e0] -= l_uv * mass;
            }
        }

        // interactions between one endpoint and a third host
        for (endpoint, m_here, m_there) in [(u, m_u, m_v), (v, m_v, m_u)] {
            let from_u = endpoint == u;
            for &(other_edge, k, l_k, endpoint_is_row) in &adjacency.per_host[endpoint] {
                if k == u || k == v {
                    continue;
                }
                let m_k = template.singles[k].len();
                for d0 in 0..m_here {
                    let psi_d = single(endpoint, d0);
                    if psi_d < MASS_GUARD {
                        continue;
                    }
                    for f0 in 0..m_k {
                        let joint_k = pair_from(other_edge, endpoint_is_row, d0, f0);
                        if joint_k == 0.0 {
                            continue;
                        }
                        let (a2, _) =
                            map_from(maps, template, other_edge, endpoint_is_row, d0, f0);
                        let weight = l_k * joint_k / psi_d;
                        for g0 in 0..m_there {
                            // d0 -> a2 on this endpoint, partner stays at g0
                            let mass = weight * pair_from(edge, from_u, d0, g0);
                            let (src, dst) = if from_u {
                                (d0 * m_v + g0, a2 * m_v + g0)
                            } else {
                                (g0 * m_v + d0, g0 * m_v + a2)
                            };
                            dy[base + dst] += mass;
                            dy[base + src] -= mass;
                        }
                    }
                }
            }
        }
    }
}
