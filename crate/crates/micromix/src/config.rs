//! JSON run configuration: strict schema, defaults, and resolution into
//! typed pieces for the execution layer.
//!
//! Unknown keys anywhere in the document are rejected with the JSON
//! pointer of the offending location. A manifest produced by an earlier
//! run is also accepted wherever a config is expected (its embedded
//! resolved config is extracted), which makes every output reproducible
//! from its manifest alone.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::basins::sort_attractors;
use crate::dynamics::{builtin_glv, builtin_illustrative, LocalDynamics};
use crate::error::Error;
use crate::integrator::IntegratorConfig;
use crate::network::{ExchangeParams, InteractionNetwork};
use crate::Result;

/// Execution mode. Basin-probability modes run in frequency-scaled
/// time; the others in real time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Simulate,
    LfaFull,
    LfaPair,
    Hflsa,
    Hfcsa,
    Sweep,
    Compare,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::LfaFull => "lfa-full",
            Mode::LfaPair => "lfa-pair",
            Mode::Hflsa => "hflsa",
            Mode::Hfcsa => "hfcsa",
            Mode::Sweep => "sweep",
            Mode::Compare => "compare",
        }
    }

    pub fn uses_frequency_scaled_time(self) -> bool {
        matches!(self, Mode::LfaFull | Mode::LfaPair)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DynamicsSpec {
    /// The built-in two-species quartic with four stable equilibria.
    Illustrative,
    /// Generalized Lotka–Volterra: growth vector, interaction matrix,
    /// and the domain bound `M`.
    Glv {
        r: Vec<f64>,
        alpha: Vec<Vec<f64>>,
        #[serde(rename = "M")]
        domain_bound: f64,
    },
}

impl DynamicsSpec {
    pub fn build(&self) -> Result<LocalDynamics> {
        match self {
            DynamicsSpec::Illustrative => Ok(builtin_illustrative()),
            DynamicsSpec::Glv {
                r,
                alpha,
                domain_bound,
            } => builtin_glv(r, alpha, *domain_bound),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    /// One abundance vector per host.
    Vectors { vectors: Vec<Vec<f64>> },
    /// One basin distribution per host; runs start at the attractor of
    /// a basin drawn from it.
    BasinProbs { probs: Vec<Vec<f64>> },
    /// Fresh uniform-simplex basin distributions per sweep cell.
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub max_flow_time: f64,
    pub attractor_radius: f64,
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        let cfg = IntegratorConfig::default();
        Self {
            rel_tol: cfg.rel_tol,
            abs_tol: cfg.abs_tol,
            max_step: cfg.max_step,
            max_flow_time: cfg.max_flow_time,
            attractor_radius: cfg.attractor_radius,
        }
    }
}

impl From<IntegratorSpec> for IntegratorConfig {
    fn from(spec: IntegratorSpec) -> Self {
        Self {
            rel_tol: spec.rel_tol,
            abs_tol: spec.abs_tol,
            max_step: spec.max_step,
            max_flow_time: spec.max_flow_time,
            attractor_radius: spec.attractor_radius,
        }
    }
}

fn default_samples() -> usize {
    101
}

fn default_runs() -> usize {
    1
}

fn default_rate_scale() -> f64 {
    1.0
}

fn default_window_start() -> f64 {
    0.05
}

fn default_boundary_resolution() -> f64 {
    0.01
}

/// One experiment, fully specified. Defaults are filled at parse time
/// and echoed into the manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub network: InteractionNetwork,
    pub dynamics: DynamicsSpec,
    pub gamma: f64,
    /// Multiplies every edge weight; keeps relative rates fixed.
    #[serde(default = "default_rate_scale")]
    pub rate_scale: f64,
    /// Real-time horizon `T` (trajectory modes).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    /// Frequency-scaled horizon (basin-probability modes).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_star: Option<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_runs")]
    pub runs: usize,
    pub init: InitSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Required by compare and sweep modes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_tot_values: Option<Vec<f64>>,
    #[serde(default)]
    pub integrator: IntegratorSpec,
    /// Start of the synchronized-mean comparison window as a fraction
    /// of the horizon.
    #[serde(default = "default_window_start")]
    pub hfcsa_window_start: f64,
    #[serde(default = "default_boundary_resolution")]
    pub boundary_resolution: f64,
}

/// A run manifest: the resolved config plus provenance. Feeding a
/// manifest back as a config reproduces the run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub config: RunConfig,
    pub config_sha256: String,
    /// Total rate after `rate_scale` is applied.
    pub lambda_tot: f64,
    /// Real-time and frequency-scaled horizons, both recorded.
    pub horizon: Option<f64>,
    pub horizon_star: Option<f64>,
    pub base_seed: u64,
    /// Derived per-run seeds for ensemble modes (first 1000).
    pub run_seeds: Vec<u64>,
    pub outputs: Vec<String>,
}

/// Parses a strict-schema config (or a manifest) from a JSON string.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    // a manifest embeds the config under "config"
    let probe: serde_json::Value = serde_json::from_str(text).map_err(|e| {
        Error::SchemaViolation {
            pointer: String::new(),
            message: e.to_string(),
        }
    })?;
    let (fragment, prefix) = match (probe.get("config"), probe.get("config_sha256")) {
        (Some(inner), Some(_)) => (inner.clone(), "config/".to_string()),
        _ => (probe, String::new()),
    };
    reject_unknown_keys(&fragment, &prefix)?;

    let deserializer = fragment.clone();
    let mut track = serde_path_to_error::Track::new();
    let traced = serde_path_to_error::Deserializer::new(&deserializer, &mut track);
    match RunConfig::deserialize(traced) {
        Ok(cfg) => {
            validate_config(&cfg)?;
            Ok(cfg)
        }
        Err(err) => Err(Error::SchemaViolation {
            pointer: format!("{prefix}{}", path_to_pointer(&track.path())),
            message: err.to_string(),
        }),
    }
}

/// Parses a config file (or manifest) from disk.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|source| Error::FileNotFound {
        path: path.display().to_string(),
        source,
    })?;
    parse_config_str(&text)
}

/// Explicit unknown-key pass over the raw document. Serde's
/// `deny_unknown_fields` does not reach inside internally tagged enums
/// (the `kind`-dispatched objects), so strictness is enforced here with
/// exact JSON pointers.
fn reject_unknown_keys(value: &serde_json::Value, prefix: &str) -> Result<()> {
    const TOP: &[&str] = &[
        "mode",
        "network",
        "dynamics",
        "gamma",
        "rate_scale",
        "horizon",
        "horizon_star",
        "samples",
        "seed",
        "runs",
        "init",
        "output",
        "threads",
        "comparator",
        "gamma_values",
        "lambda_tot_values",
        "integrator",
        "hfcsa_window_start",
        "boundary_resolution",
    ];
    let Some(object) = value.as_object() else {
        return Ok(()); // shape errors are serde's to report
    };
    check_keys(object, TOP, prefix)?;

    if let Some(network) = object.get("network").and_then(|v| v.as_object()) {
        check_keys(network, &["hosts", "edges"], &format!("{prefix}network/"))?;
    }
    if let Some(dynamics) = object.get("dynamics").and_then(|v| v.as_object()) {
        let allowed: &[&str] = match dynamics.get("kind").and_then(|k| k.as_str()) {
            Some("glv") => &["kind", "r", "alpha", "M"],
            _ => &["kind"],
        };
        check_keys(dynamics, allowed, &format!("{prefix}dynamics/"))?;
    }
    if let Some(init) = object.get("init").and_then(|v| v.as_object()) {
        let allowed: &[&str] = match init.get("kind").and_then(|k| k.as_str()) {
            Some("vectors") => &["kind", "vectors"],
            Some("basin_probs") => &["kind", "probs"],
            _ => &["kind"],
        };
        check_keys(init, allowed, &format!("{prefix}init/"))?;
    }
    if let Some(integrator) = object.get("integrator").and_then(|v| v.as_object()) {
        check_keys(
            integrator,
            &[
                "rel_tol",
                "abs_tol",
                "max_step",
                "max_flow_time",
                "attractor_radius",
            ],
            &format!("{prefix}integrator/"),
        )?;
    }
    Ok(())
}

fn check_keys(
    object: &serde_json::Map<String, serde_json::Value>,
    allowed: &[&str],
    prefix: &str,
) -> Result<()> {
    for key in object.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(Error::SchemaViolation {
                pointer: format!("{prefix}{key}"),
                message: format!(
                    "unknown field `{key}`, expected one of {}",
                    allowed.join(", ")
                ),
            });
        }
    }
    Ok(())
}

fn path_to_pointer(path: &serde_path_to_error::Path) -> String {
    let mut out = String::new();
    for segment in path.iter() {
        use serde_path_to_error::Segment;
        match segment {
            Segment::Seq { index } => out.push_str(&format!("{index}/")),
            Segment::Map { key } => out.push_str(&format!("{key}/")),
            Segment::Enum { variant } => out.push_str(&format!("{variant}/")),
            Segment::Unknown => out.push_str("?/"),
        }
    }
    out.trim_end_matches('/').to_string()
}

/// Cross-field validation beyond the serde schema.
pub fn validate_config(cfg: &RunConfig) -> Result<()> {
    ExchangeParams::new(cfg.gamma)?;
    if cfg.samples < 2 {
        return Err(Error::ConfigInvalid(format!(
            "samples must be at least 2, got {}",
            cfg.samples
        )));
    }
    if cfg.runs < 1 {
        return Err(Error::ConfigInvalid("runs must be at least 1".into()));
    }
    if !(cfg.rate_scale.is_finite() && cfg.rate_scale > 0.0) {
        return Err(Error::ConfigInvalid(format!(
            "rate_scale must be finite and positive, got {}",
            cfg.rate_scale
        )));
    }
    IntegratorConfig::from(cfg.integrator).validate()?;
    if !(0.0..1.0).contains(&cfg.hfcsa_window_start) {
        return Err(Error::ConfigInvalid(format!(
            "hfcsa_window_start must be in [0, 1), got {}",
            cfg.hfcsa_window_start
        )));
    }

    let mode = cfg.mode;
    match mode {
        Mode::Simulate | Mode::Hflsa | Mode::Hfcsa => {
            if cfg.horizon.is_none() {
                return Err(Error::ModeFieldMissing {
                    mode: mode.name(),
                    field: "horizon",
                });
            }
            if !matches!(cfg.init, InitSpec::Vectors { .. }) {
                return Err(Error::ModeFieldMissing {
                    mode: mode.name(),
                    field: "init.vectors",
                });
            }
        }
        Mode::LfaFull | Mode::LfaPair => {
            if cfg.horizon_star.is_none() {
                return Err(Error::ModeFieldMissing {
                    mode: mode.name(),
                    field: "horizon_star",
                });
            }
            if !matches!(cfg.init, InitSpec::BasinProbs { .. }) {
                return Err(Error::ModeFieldMissing {
                    mode: mode.name(),
                    field: "init.basin_probs",
                });
            }
        }
        Mode::Sweep | Mode::Compare => {
            let comparator = cfg.comparator.as_deref().ok_or(Error::ModeFieldMissing {
                mode: mode.name(),
                field: "comparator",
            })?;
            let basin_level = parse_comparator(comparator)?.is_basin_level();
            if mode == Mode::Sweep
                && (cfg.gamma_values.is_none() || cfg.lambda_tot_values.is_none())
            {
                return Err(Error::ModeFieldMissing {
                    mode: mode.name(),
                    field: "gamma_values / lambda_tot_values",
                });
            }
            if basin_level {
                if cfg.horizon_star.is_none() {
                    return Err(Error::ModeFieldMissing {
                        mode: mode.name(),
                        field: "horizon_star",
                    });
                }
                if matches!(cfg.init, InitSpec::Vectors { .. }) {
                    return Err(Error::ConfigInvalid(
                        "basin-level comparators need init.basin_probs or init.dirichlet"
                            .into(),
                    ));
                }
            } else {
                if cfg.horizon.is_none() {
                    return Err(Error::ModeFieldMissing {
                        mode: mode.name(),
                        field: "horizon",
                    });
                }
                if !matches!(cfg.init, InitSpec::Vectors { .. }) {
                    return Err(Error::ModeFieldMissing {
                        mode: mode.name(),
                        field: "init.vectors",
                    });
                }
            }
        }
    }

    // init shapes against the network
    let hosts = cfg.network.host_count();
    match &cfg.init {
        InitSpec::Vectors { vectors } => {
            if vectors.len() != hosts {
                return Err(Error::ConfigInvalid(format!(
                    "{} init vectors for {hosts} hosts",
                    vectors.len()
                )));
            }
        }
        InitSpec::BasinProbs { probs } => {
            if probs.len() != hosts {
                return Err(Error::ConfigInvalid(format!(
                    "{} basin distributions for {hosts} hosts",
                    probs.len()
                )));
            }
            for (host, p) in probs.iter().enumerate() {
                let sum: f64 = p.iter().sum();
                if (sum - 1.0).abs() > 1e-9 || p.iter().any(|&v| v < 0.0) {
                    return Err(Error::ConfigInvalid(format!(
                        "basin distribution of host {host} is not a probability vector"
                    )));
                }
            }
        }
        InitSpec::Dirichlet => {}
    }
    Ok(())
}

pub fn parse_comparator(name: &str) -> Result<crate::sweep::Comparator> {
    use crate::sweep::Comparator;
    match name {
        "lfa-pair" => Ok(Comparator::LfaPair),
        "lfa-full" => Ok(Comparator::LfaFull),
        "hflsa" => Ok(Comparator::Hflsa),
        "hfcsa" => Ok(Comparator::Hfcsa),
        other => Err(Error::ConfigInvalid(format!(
            "unknown comparator {other:?} (expected lfa-pair, lfa-full, hflsa, or hfcsa)"
        ))),
    }
}

/// Typed pieces shared by the execution paths.
pub struct Resolved {
    pub network: InteractionNetwork,
    pub dynamics: LocalDynamics,
    pub attractors: Vec<Vec<f64>>,
    pub exchange: ExchangeParams,
    pub integrator: IntegratorConfig,
    pub lambda_tot: f64,
}

impl RunConfig {
    /// Builds the network (rate-scaled), dynamics, and attractor list.
    pub fn resolve(&self) -> Result<Resolved> {
        let network = if (self.rate_scale - 1.0).abs() > 0.0 {
            self.network.scaled(self.rate_scale)?
        } else {
            self.network.clone()
        };
        let dynamics = self.dynamics.build()?;
        let integrator = IntegratorConfig::from(self.integrator);
        let attractors = match dynamics.declared_attractors() {
            Some(list) => {
                let mut out = list.to_vec();
                sort_attractors(&mut out);
                out
            }
            None => crate::basins::find_attractors(&dynamics, 9, &integrator)?,
        };
        let lambda_tot = network.total_rate();
        Ok(Resolved {
            network,
            dynamics,
            attractors,
            exchange: ExchangeParams::new(self.gamma)?,
            integrator,
            lambda_tot,
        })
    }
}
