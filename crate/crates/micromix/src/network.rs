//! Interaction network, exchange parameters, and the exchange algebra.
//!
//! The network is a weighted undirected host graph. Edge weights are
//! interaction-frequency rates (1/time); the sum of all weights is the
//! rate of the global event clock, and each edge fires with probability
//! proportional to its weight. Edges are stored once in canonical
//! `i < j` order with symmetric semantics.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Weighted undirected host graph. Immutable after construction.
///
/// Serializes as `{"hosts": n, "edges": [[i, j, rate], ...]}` with the
/// edges in canonical order; deserialization re-validates through
/// [`InteractionNetwork::build`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNetwork")]
pub struct InteractionNetwork {
    #[serde(rename = "hosts")]
    host_count: usize,
    /// Canonical edge list: `(i, j, rate)` with `i < j`, sorted by `(i, j)`.
    edges: Vec<(usize, usize, f64)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    hosts: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl TryFrom<RawNetwork> for InteractionNetwork {
    type Error = Error;

    fn try_from(raw: RawNetwork) -> Result<Self> {
        Self::build(raw.hosts, &raw.edges)
    }
}

impl InteractionNetwork {
    /// Builds a network from a weighted edge list.
    ///
    /// Edges may be given in either index order; they are canonicalized
    /// to `i < j` and sorted. Duplicates (after canonicalization),
    /// self-loops, out-of-range indices, and non-positive or non-finite
    /// rates are rejected. An absent edge means rate 0.
    pub fn build(host_count: usize, weighted_edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut edges = Vec::with_capacity(weighted_edges.len());
        for &(i, j, rate) in weighted_edges {
            if i == j {
                return Err(Error::SelfLoop { index: i });
            }
            for index in [i, j] {
                if index >= host_count {
                    return Err(Error::IndexOutOfRange { index, host_count });
                }
            }
            if !(rate.is_finite() && rate > 0.0) {
                return Err(Error::NonPositiveRate { i, j, rate });
            }
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            edges.push((a, b, rate));
        }
        edges.sort_by_key(|e| (e.0, e.1));
        for w in edges.windows(2) {
            if (w[0].0, w[0].1) == (w[1].0, w[1].1) {
                return Err(Error::DuplicateEdge { i: w[0].0, j: w[0].1 });
            }
        }
        Ok(Self { host_count, edges })
    }

    pub fn host_count(&self) -> usize {
        self.host_count
    }

    /// Canonical edge list, sorted by `(i, j)` with `i < j`.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// Total-interaction-frequency rate: sum of all edge weights.
    /// This is the rate of the global exponential event clock.
    pub fn total_rate(&self) -> f64 {
        self.edges.iter().map(|e| e.2).sum()
    }

    /// Rate of edge `(i, j)` in either index order; 0 when absent.
    pub fn rate(&self, i: usize, j: usize) -> f64 {
        let key = if i < j { (i, j) } else { (j, i) };
        self.edges
            .iter()
            .find(|e| (e.0, e.1) == key)
            .map_or(0.0, |e| e.2)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.rate(i, j) > 0.0
    }

    /// Relative interaction-frequency parameters `l_ij = rate_ij / total`,
    /// in canonical edge order. The probability that a given event is on
    /// edge `(i, j)`.
    pub fn relative_rates(&self) -> Result<RelativeRates> {
        let total = self.total_rate();
        if total <= 0.0 {
            return Err(Error::ZeroTotalRate);
        }
        Ok(RelativeRates {
            entries: self
                .edges
                .iter()
                .map(|&(i, j, rate)| (i, j, rate / total))
                .collect(),
        })
    }

    /// Copy of the network with every edge weight multiplied by `factor`,
    /// so the total rate changes while every `l_ij` stays fixed.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let scaled: Vec<_> = self
            .edges
            .iter()
            .map(|&(i, j, rate)| (i, j, rate * factor))
            .collect();
        Self::build(self.host_count, &scaled)
    }

    /// Neighbors of `host` together with the connecting edge rates.
    pub fn neighbors(&self, host: usize) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for &(i, j, rate) in &self.edges {
            if i == host {
                out.push((j, rate));
            } else if j == host {
                out.push((i, rate));
            }
        }
        out
    }
}

/// Per-edge event probabilities `l_ij` in canonical edge order; sums to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeRates {
    entries: Vec<(usize, usize, f64)>,
}

impl RelativeRates {
    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn probability(&self, i: usize, j: usize) -> f64 {
        let key = if i < j { (i, j) } else { (j, i) };
        self.entries
            .iter()
            .find(|e| (e.0, e.1) == key)
            .map_or(0.0, |e| e.2)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Interaction strength: the proportion of state swapped at an event.
///
/// Restricted to `[0, 0.5]`; above 0.5 the "exchange" overshoots the
/// pairwise average and is rejected at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExchangeParams {
    gamma: f64,
}

impl ExchangeParams {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && (0.0..=0.5).contains(&gamma)) {
            return Err(Error::InvalidGamma { gamma });
        }
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// Symmetric exchange of a proportion `gamma` between two state vectors:
/// `x' = (1-g) x + g y`, `y' = (1-g) y + g x`.
///
/// The pairwise sum is conserved (up to round-off) and the pairwise
/// difference contracts by exactly `|1 - 2 gamma|`.
pub fn apply_exchange(
    x: &[f64],
    y: &[f64],
    params: ExchangeParams,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let g = params.gamma();
    let keep = 1.0 - g;
    let x_new = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| keep * a + g * b)
        .collect();
    let y_new = y
        .iter()
        .zip(x)
        .map(|(&a, &b)| keep * a + g * b)
        .collect();
    Ok((x_new, y_new))
}

/// In-place variant of [`apply_exchange`] for the simulator hot path.
/// Callers guarantee equal dimensions.
pub(crate) fn exchange_in_place(x: &mut [f64], y: &mut [f64], gamma: f64) {
    debug_assert_eq!(x.len(), y.len());
    let keep = 1.0 - gamma;
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let (xa, yb) = (*a, *b);
        *a = keep * xa + gamma * yb;
        *b = keep * yb + gamma * xa;
    }
}

/// Deterministic 10-host, 25-edge, unit-weight demo network used by the
/// examples and tests: a circulant ring with offsets 1 and 2 plus the
/// five diameters. All relative rates are 1/25.
pub fn demo_network_10() -> Result<InteractionNetwork> {
    let mut edges = Vec::new();
    for i in 0..10usize {
        edges.push((i, (i + 1) % 10, 1.0));
        edges.push((i, (i + 2) % 10, 1.0));
    }
    for i in 0..5usize {
        edges.push((i, i + 5, 1.0));
    }
    InteractionNetwork::build(10, &edges)
}
