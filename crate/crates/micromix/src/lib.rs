//! Event-driven simulation of microbiome exchange between interacting hosts.
//!
//! Hosts sit on a weighted undirected interaction network. Between
//! interactions each host's microbiome abundance vector follows its own
//! autonomous local dynamics; at exponentially distributed interaction
//! times a pair of hosts symmetrically swaps a proportion `gamma` of
//! state. The crate provides:
//!
//! * an exact stochastic simulator for this piecewise-deterministic
//!   process ([`simulate`]),
//! * basin-of-attraction machinery for multistable local dynamics
//!   ([`basins`]),
//! * the low-frequency approximation: basin-level jump dynamics evolved
//!   either as a full joint probability tensor or as a pair-closure
//!   system ([`lfa`]),
//! * two high-frequency limits: a mass-effects dispersal ODE and a
//!   synchronized mean-field ODE ([`hfa`]),
//! * a seeded, order-independent Monte Carlo harness with basin
//!   fractions, percentile bands, error metrics, and parameter sweeps
//!   ([`ensemble`], [`metrics`], [`sweep`]),
//! * a JSON-configured CLI with reproducible manifests ([`cli`]).
//!
//! Start with the runnable examples (`cargo run --example simulate_pair`)
//! or the [`simulate::simulate`] entry point.
//!
//! Conventions: host indices are 0-based everywhere; basin labels are
//! 1-based (the labels used in output files and transition maps).

// strided index arithmetic over tensors and grids is the house style
#![allow(clippy::needless_range_loop)]

pub mod basins;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod hfa;
pub mod integrator;
pub mod io;
pub mod lfa;
pub mod metrics;
pub mod network;
pub mod rng;
pub mod simulate;
pub mod sweep;

pub use error::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
