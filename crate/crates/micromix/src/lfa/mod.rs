//! Low-frequency approximation: basin-level jump dynamics.
//!
//! When interactions are rare compared to local relaxation, each host
//! sits at a stable equilibrium when an interaction arrives, so an
//! interaction's effect reduces to a deterministic map on basin labels.
//! This module builds those maps, detects the interaction strengths at
//! which they break down (the boundary set), and evolves the joint
//! basin probability, either exactly as a dense tensor or approximately
//! as a closed single/pair system. All evolution runs in
//! frequency-scaled time (time measured in expected interaction counts).
//!
//! Basin labels are 1-based throughout the public surface.

mod evolve;
mod operator;

pub use evolve::{evolve_lfa_full, evolve_lfa_pair, marginals, tensor_from_independent_singles};
pub use operator::{
    apply_total_operator, boundary_set, edge_transition_maps, shared_edge_maps, transition_map,
};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Largest dense tensor the full evolution will build.
pub const DEFAULT_TENSOR_CAP: usize = 1 << 20;

/// A closed interval of interaction strengths bracketing one boundary
/// value (a strength at which some post-exchange attractor mix lands on
/// a basin separatrix).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaInterval {
    pub lo: f64,
    pub hi: f64,
}

impl GammaInterval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, gamma: f64) -> bool {
        (self.lo..=self.hi).contains(&gamma)
    }
}

/// Formats intervals for error messages: `[lo, hi] [lo, hi] ...`.
pub fn format_intervals(intervals: &[GammaInterval]) -> String {
    intervals
        .iter()
        .map(|iv| format!("[{:.7}, {:.7}]", iv.lo, iv.hi))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Formats interval midpoints: `{0.1000000, 0.4000000}`.
pub fn format_boundary_points(intervals: &[GammaInterval]) -> String {
    let mids = intervals
        .iter()
        .map(|iv| format!("{:.7}", 0.5 * (iv.lo + iv.hi)))
        .collect::<Vec<_>>()
        .join(", ");
    format!("{{{mids}}}")
}

/// The deterministic effect of one interaction on a pair of basin
/// labels: a total map `(a, b) -> (a', b')` over all label combinations
/// of the two hosts. Labels are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinTransitionMap {
    m_left: usize,
    m_right: usize,
    /// Row-major over (a-1, b-1): the mapped 1-based pair.
    outputs: Vec<(usize, usize)>,
}

impl BasinTransitionMap {
    pub fn new(m_left: usize, m_right: usize, outputs: Vec<(usize, usize)>) -> Result<Self> {
        if outputs.len() != m_left * m_right {
            return Err(Error::ShapeMismatch(format!(
                "{} outputs for a {m_left} x {m_right} map",
                outputs.len()
            )));
        }
        for &(a, b) in &outputs {
            if a < 1 || a > m_left || b < 1 || b > m_right {
                return Err(Error::ShapeMismatch(format!(
                    "mapped pair ({a}, {b}) outside 1..={m_left} x 1..={m_right}"
                )));
            }
        }
        Ok(Self {
            m_left,
            m_right,
            outputs,
        })
    }

    /// Identity map (the effect of a zero-strength interaction).
    pub fn identity(m_left: usize, m_right: usize) -> Self {
        let outputs = (1..=m_left)
            .flat_map(|a| (1..=m_right).map(move |b| (a, b)))
            .collect();
        Self {
            m_left,
            m_right,
            outputs,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.m_left, self.m_right)
    }

    /// Applies the map to a 1-based label pair.
    pub fn apply(&self, a: usize, b: usize) -> (usize, usize) {
        assert!(a >= 1 && a <= self.m_left && b >= 1 && b <= self.m_right);
        self.outputs[(a - 1) * self.m_right + (b - 1)]
    }

    /// 0-based variant used by the evolution kernels.
    pub(crate) fn apply0(&self, a0: usize, b0: usize) -> (usize, usize) {
        let (a, b) = self.outputs[a0 * self.m_right + b0];
        (a - 1, b - 1)
    }

    pub fn is_identity(&self) -> bool {
        self.outputs
            .iter()
            .enumerate()
            .all(|(flat, &(a, b))| flat == (a - 1) * self.m_right + (b - 1))
    }

    /// All `(a, b, a', b')` rows in row-major input order.
    pub fn rows(&self) -> Vec<(usize, usize, usize, usize)> {
        self.outputs
            .iter()
            .enumerate()
            .map(|(flat, &(a2, b2))| (flat / self.m_right + 1, flat % self.m_right + 1, a2, b2))
            .collect()
    }
}

/// One transition map per network edge, in canonical edge order.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMaps {
    entries: Vec<(usize, usize, BasinTransitionMap)>,
}

impl TransitionMaps {
    pub fn new(mut entries: Vec<(usize, usize, BasinTransitionMap)>) -> Self {
        entries.sort_by_key(|e| (e.0, e.1));
        Self { entries }
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&BasinTransitionMap> {
        let key = if i < j { (i, j) } else { (j, i) };
        self.entries
            .iter()
            .find(|e| (e.0, e.1) == key)
            .map(|e| &e.2)
    }

    pub fn entries(&self) -> &[(usize, usize, BasinTransitionMap)] {
        &self.entries
    }
}

/// Dense joint probability over every host's basin label, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BasinProbabilityTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl BasinProbabilityTensor {
    /// Builds a tensor from raw row-major data, clamping entries in
    /// `[-1e-15, 0)` to zero; more negative entries are rejected.
    pub fn new(dims: Vec<usize>, mut data: Vec<f64>) -> Result<Self> {
        let expected: usize = dims.iter().product();
        if data.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for dims {dims:?}",
                data.len()
            )));
        }
        for v in &mut data {
            if *v < 0.0 {
                if *v < -1e-15 {
                    return Err(Error::NegativeProbability { value: *v });
                }
                *v = 0.0;
            }
        }
        Ok(Self { dims, data })
    }

    /// Point mass at the given 1-based label combination.
    pub fn delta(dims: Vec<usize>, labels: &[usize]) -> Result<Self> {
        let size: usize = dims.iter().product();
        let mut data = vec![0.0; size];
        let mut tensor = Self { dims, data: Vec::new() };
        let flat = tensor.flat_index(labels)?;
        data[flat] = 1.0;
        tensor.data = data;
        Ok(tensor)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Flat offset of a 1-based label combination.
    pub fn flat_index(&self, labels: &[usize]) -> Result<usize> {
        if labels.len() != self.dims.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} labels for {} hosts",
                labels.len(),
                self.dims.len()
            )));
        }
        let mut flat = 0usize;
        for (host, (&label, &m)) in labels.iter().zip(&self.dims).enumerate() {
            if label < 1 || label > m {
                return Err(Error::ShapeMismatch(format!(
                    "label {label} for host {host} outside 1..={m}"
                )));
            }
            flat = flat * m + (label - 1);
        }
        Ok(flat)
    }

    /// Entry at a 1-based label combination.
    pub fn get(&self, labels: &[usize]) -> Result<f64> {
        Ok(self.data[self.flat_index(labels)?])
    }
}

/// Single-host basin probabilities plus per-edge pair probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct PairState {
    /// `singles[host][basin-1]`.
    pub singles: Vec<Vec<f64>>,
    /// One block per canonical network edge.
    pub pairs: Vec<PairBlock>,
}

/// Joint basin probabilities of one edge's endpoints: row host `i`,
/// column host `j` (canonical `i < j`), row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PairBlock {
    pub i: usize,
    pub j: usize,
    pub m_i: usize,
    pub m_j: usize,
    pub data: Vec<f64>,
}

impl PairBlock {
    pub fn get(&self, a0: usize, b0: usize) -> f64 {
        self.data[a0 * self.m_j + b0]
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Marginal over the column host (the distribution of host `i`).
    pub fn row_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.m_i];
        for a in 0..self.m_i {
            for b in 0..self.m_j {
                out[a] += self.get(a, b);
            }
        }
        out
    }

    /// Marginal over the row host (the distribution of host `j`).
    pub fn col_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.m_j];
        for a in 0..self.m_i {
            for b in 0..self.m_j {
                out[b] += self.get(a, b);
            }
        }
        out
    }
}

impl PairState {
    /// Independent initialization: each edge block is the outer product
    /// of its endpoints' single-host distributions.
    pub fn independent(
        singles: Vec<Vec<f64>>,
        edges: &[(usize, usize)],
    ) -> Result<Self> {
        for (host, s) in singles.iter().enumerate() {
            let sum: f64 = s.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::ConfigInvalid(format!(
                    "basin distribution of host {host} sums to {sum}"
                )));
            }
        }
        let pairs = edges
            .iter()
            .map(|&(i, j)| {
                let (si, sj) = (&singles[i], &singles[j]);
                let mut data = Vec::with_capacity(si.len() * sj.len());
                for &a in si {
                    for &b in sj {
                        data.push(a * b);
                    }
                }
                PairBlock {
                    i,
                    j,
                    m_i: si.len(),
                    m_j: sj.len(),
                    data,
                }
            })
            .collect();
        Ok(Self { singles, pairs })
    }
}
