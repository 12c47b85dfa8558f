//! Run configuration: one JSON document describing the graph, the protocol,
//! the initial state, and the engine limits.
//!
//! Every random element (initial states, clock rates, actuation lags,
//! generated graphs) carries an explicit seed. Nothing in a run draws from
//! ambient entropy, so a config file pins its outputs byte for byte.
//!
//! The schema, informally (see the repository README for the full version):
//!
//! ```json
//! {
//!   "graph":    {"kind": "ring", "n": 20},
//!   "protocol": {"id": "A", "eps": 0.01},
//!   "x0":       {"lo": -1.0, "hi": 1.0, "seed": 42},
//!   "horizon": 100.0, "max_events": 10000000, "sample_dt": 0.1,
//!   "out_dir": "runs/demo",
//!   "sweep":   {"eps": [0.01, 0.001], "seeds": [1, 2, 3]}
//! }
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{EngineError, Model};
use crate::graph::{Graph, GraphError};
use crate::protocol::gossip::{
    certified_edge_dwell_floors, EdgeTriggered, EdgeTriggeredTimeVarying,
};
use crate::protocol::node::{
    delay_feasibility, quantization_feasibility, DelaySampler, NodeTriggered, NodeTriggeredDelayed,
    NodeTriggeredQuantized,
};
use crate::protocol::timevarying::{
    certified_dwell_floor, certified_dwell_floors, TimeVarying, TimeVaryingNonUniform,
};
use crate::protocol::{ProtocolError, ProtocolSpec};
use crate::schedule::ScalarSchedule;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("x0 range is invalid: lo = {lo}, hi = {hi}")]
    BadX0Range { lo: f64, hi: f64 },
    #[error("rate floor r_min must lie in (0, 1], got {r_min}")]
    BadRateFloor { r_min: f64 },
    #[error("the config has no sweep section")]
    NoSweep,
    #[error("sweep eps and seed lists must be non-empty")]
    EmptySweep,
    #[error("sweeping eps requires a fixed-threshold protocol (A, A-delay, A-quantized, C), got {id}")]
    SweepNeedsEps { id: &'static str },
}

// ---------------------------------------------------------------------------
// Graph
// ---------------------------------------------------------------------------

/// Which graph to run on. Generators are seeded; `edge-list` points at a
/// whitespace-separated `i j` file resolved relative to the config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GraphConfig {
    Ring { n: usize },
    Path { n: usize },
    Complete { n: usize },
    ErdosRenyi { n: usize, p: f64, seed: u64 },
    EdgeList { path: PathBuf },
    Edges { n: usize, edges: Vec<(usize, usize)> },
}

impl GraphConfig {
    /// Build the graph; `base` anchors relative edge-list paths.
    pub fn build(&self, base: &Path) -> Result<Graph, ConfigError> {
        Ok(match self {
            GraphConfig::Ring { n } => Graph::ring(*n)?,
            GraphConfig::Path { n } => Graph::path(*n)?,
            GraphConfig::Complete { n } => Graph::complete(*n)?,
            GraphConfig::ErdosRenyi { n, p, seed } => Graph::erdos_renyi(*n, *p, *seed)?,
            GraphConfig::EdgeList { path } => {
                let resolved = if path.is_absolute() {
                    path.clone()
                } else {
                    base.join(path)
                };
                let text = std::fs::read_to_string(&resolved).map_err(|source| ConfigError::Io {
                    path: resolved,
                    source,
                })?;
                Graph::parse_edge_list(&text)?
            }
            GraphConfig::Edges { n, edges } => Graph::from_edges(*n, edges.iter().copied())?,
        })
    }
}

// ---------------------------------------------------------------------------
// Initial state and per-agent rates
// ---------------------------------------------------------------------------

/// Uniform draw in `[lo, hi]`, one value per agent in index order.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformX0 {
    pub lo: f64,
    pub hi: f64,
    pub seed: u64,
}

/// Initial state: an explicit per-agent list, or a seeded uniform draw.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum X0Config {
    Explicit(Vec<f64>),
    Uniform(UniformX0),
}

impl X0Config {
    pub fn resolve(&self, n: usize) -> Result<Vec<f64>, ConfigError> {
        match self {
            X0Config::Explicit(values) => Ok(values.clone()),
            X0Config::Uniform(u) => {
                if !(u.lo.is_finite() && u.hi.is_finite() && u.hi >= u.lo) {
                    return Err(ConfigError::BadX0Range { lo: u.lo, hi: u.hi });
                }
                let mut rng = ChaCha8Rng::seed_from_u64(u.seed);
                Ok((0..n).map(|_| rng.random_range(u.lo..=u.hi)).collect())
            }
        }
    }

    /// The same draw with a different seed; explicit lists are unchanged.
    pub fn reseeded(&self, seed: u64) -> X0Config {
        match self {
            X0Config::Explicit(v) => X0Config::Explicit(v.clone()),
            X0Config::Uniform(u) => X0Config::Uniform(UniformX0 { seed, ..*u }),
        }
    }
}

/// Uniform per-agent clock-rate draw in `[r_min, 1]`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformRates {
    pub r_min: f64,
    pub seed: u64,
}

/// Per-agent clock rates: one shared value, an explicit list, or a seeded
/// uniform draw in `[r_min, 1]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RatesConfig {
    Shared(f64),
    PerAgent(Vec<f64>),
    Uniform(UniformRates),
}

impl RatesConfig {
    /// The realized rate vector together with the floor `r_min` the
    /// feasibility conditions should be evaluated against: the configured
    /// floor for a random draw, the smallest realized rate otherwise.
    pub fn resolve(&self, n: usize) -> Result<(Vec<f64>, f64), ConfigError> {
        match self {
            RatesConfig::Shared(r) => Ok((vec![*r; n], *r)),
            RatesConfig::PerAgent(v) => {
                let r_min = v.iter().copied().fold(f64::INFINITY, f64::min);
                Ok((v.clone(), r_min))
            }
            RatesConfig::Uniform(u) => {
                if !(u.r_min > 0.0 && u.r_min <= 1.0) {
                    return Err(ConfigError::BadRateFloor { r_min: u.r_min });
                }
                let mut rng = ChaCha8Rng::seed_from_u64(u.seed);
                let rates = (0..n).map(|_| rng.random_range(u.r_min..=1.0)).collect();
                Ok((rates, u.r_min))
            }
        }
    }
}

/// How actuation lags are drawn, always bounded by the protocol's `tau_max`:
/// every poll lags by exactly `tau_max`, or by a fresh seeded uniform draw
/// from `[0, tau_max]`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DelayConfig {
    Constant,
    Uniform { seed: u64 },
}

// ---------------------------------------------------------------------------
// Protocol
// ---------------------------------------------------------------------------

/// Protocol selection plus its parameters, keyed by `id`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "id")]
pub enum ProtocolConfig {
    #[serde(rename = "A")]
    A { eps: f64 },
    #[serde(rename = "A-delay")]
    ADelay {
        eps: f64,
        alpha: f64,
        tau_max: f64,
        delay_model: DelayConfig,
        rates: RatesConfig,
    },
    #[serde(rename = "A-quantized")]
    AQuant {
        eps: f64,
        alpha: f64,
        delta: f64,
        rates: RatesConfig,
    },
    #[serde(rename = "B")]
    B {
        eps_sched: ScalarSchedule,
        gamma_sched: ScalarSchedule,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        w_target: Option<f64>,
    },
    #[serde(rename = "B-nonuniform")]
    BNonUniform {
        eps_sched: Vec<ScalarSchedule>,
        gamma_sched: Vec<ScalarSchedule>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        w_target: Option<f64>,
    },
    #[serde(rename = "C")]
    C { eps: f64 },
    #[serde(rename = "C-tv")]
    CTv {
        eps_sched: ScalarSchedule,
        gamma_sched: ScalarSchedule,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        w_target: Option<f64>,
    },
}

impl ProtocolConfig {
    pub fn id(&self) -> &'static str {
        match self {
            ProtocolConfig::A { .. } => "A",
            ProtocolConfig::ADelay { .. } => "A-delay",
            ProtocolConfig::AQuant { .. } => "A-quantized",
            ProtocolConfig::B { .. } => "B",
            ProtocolConfig::BNonUniform { .. } => "B-nonuniform",
            ProtocolConfig::C { .. } => "C",
            ProtocolConfig::CTv { .. } => "C-tv",
        }
    }

    /// Target for "converged" on asymptotic runs: spread at the horizon at or
    /// below this value. `None` for the fixed-threshold protocols (they
    /// freeze) and when unset.
    pub fn w_target(&self) -> Option<f64> {
        match self {
            ProtocolConfig::B { w_target, .. }
            | ProtocolConfig::BNonUniform { w_target, .. }
            | ProtocolConfig::CTv { w_target, .. } => *w_target,
            _ => None,
        }
    }

    /// Replace the threshold for a sweep run. Only the fixed-threshold
    /// protocols expose a scalar `eps`.
    pub fn with_eps(&self, eps: f64) -> Result<ProtocolConfig, ConfigError> {
        let mut next = self.clone();
        match &mut next {
            ProtocolConfig::A { eps: e }
            | ProtocolConfig::ADelay { eps: e, .. }
            | ProtocolConfig::AQuant { eps: e, .. }
            | ProtocolConfig::C { eps: e } => *e = eps,
            _ => return Err(ConfigError::SweepNeedsEps { id: self.id() }),
        }
        Ok(next)
    }

    /// Instantiate the resolved protocol description and the simulating
    /// model. Infeasible delay/quantization parameters are allowed through
    /// (the run is flagged, its guarantees void); Zeno-prone or non-divergent
    /// schedules are configuration errors.
    pub fn build(
        &self,
        g: &Arc<Graph>,
        x0: Vec<f64>,
    ) -> Result<(ProtocolSpec, Box<dyn Model>), ConfigError> {
        Ok(match self {
            ProtocolConfig::A { eps } => (
                ProtocolSpec::A { eps: *eps },
                Box::new(NodeTriggered::new(Arc::clone(g), *eps, x0)?),
            ),
            ProtocolConfig::ADelay {
                eps,
                alpha,
                tau_max,
                delay_model,
                rates,
            } => {
                let (rates, r_min) = rates.resolve(g.n())?;
                let feasibility = delay_feasibility(*eps, *alpha, g.d_max(), *tau_max, r_min);
                let sampler = match delay_model {
                    DelayConfig::Constant => DelaySampler::constant(*tau_max)?,
                    DelayConfig::Uniform { seed } => DelaySampler::uniform(*tau_max, *seed)?,
                };
                let model = NodeTriggeredDelayed::new(
                    Arc::clone(g),
                    *eps,
                    *alpha,
                    rates.clone(),
                    sampler,
                    x0,
                )?;
                (
                    ProtocolSpec::ADelay {
                        eps: *eps,
                        alpha: *alpha,
                        tau_max: *tau_max,
                        r_min,
                        rates,
                        feasibility,
                    },
                    Box::new(model),
                )
            }
            ProtocolConfig::AQuant {
                eps,
                alpha,
                delta,
                rates,
            } => {
                let (rates, r_min) = rates.resolve(g.n())?;
                let feasibility = quantization_feasibility(*eps, *alpha, g.d_max(), *delta, r_min);
                let model = NodeTriggeredQuantized::new(
                    Arc::clone(g),
                    *eps,
                    *alpha,
                    *delta,
                    rates.clone(),
                    x0,
                )?;
                (
                    ProtocolSpec::AQuant {
                        eps: *eps,
                        alpha: *alpha,
                        delta: *delta,
                        r_min,
                        rates,
                        feasibility,
                    },
                    Box::new(model),
                )
            }
            ProtocolConfig::B {
                eps_sched,
                gamma_sched,
                ..
            } => {
                let c = certified_dwell_floor(eps_sched, gamma_sched, g.d_max())?;
                let model =
                    TimeVarying::new(Arc::clone(g), *eps_sched, *gamma_sched, x0)?;
                (
                    ProtocolSpec::B {
                        eps: *eps_sched,
                        gamma: *gamma_sched,
                        c,
                    },
                    Box::new(model),
                )
            }
            ProtocolConfig::BNonUniform {
                eps_sched,
                gamma_sched,
                ..
            } => {
                let c = certified_dwell_floors(eps_sched, gamma_sched, g)?;
                let model = TimeVaryingNonUniform::new(
                    Arc::clone(g),
                    eps_sched.clone(),
                    gamma_sched.clone(),
                    x0,
                )?;
                (
                    ProtocolSpec::BNonUniform {
                        eps: eps_sched.clone(),
                        gamma: gamma_sched.clone(),
                        c,
                    },
                    Box::new(model),
                )
            }
            ProtocolConfig::C { eps } => (
                ProtocolSpec::C { eps: *eps },
                Box::new(EdgeTriggered::new(Arc::clone(g), *eps, x0)?),
            ),
            ProtocolConfig::CTv {
                eps_sched,
                gamma_sched,
                ..
            } => {
                let floors = certified_edge_dwell_floors(eps_sched, gamma_sched, g)?;
                let model = EdgeTriggeredTimeVarying::new(
                    Arc::clone(g),
                    *eps_sched,
                    *gamma_sched,
                    x0,
                )?;
                (
                    ProtocolSpec::CTv {
                        eps: *eps_sched,
                        gamma: *gamma_sched,
                        c_edge: floors.per_edge,
                        c_node: floors.node_form,
                    },
                    Box::new(model),
                )
            }
        })
    }
}

// ---------------------------------------------------------------------------
// Top-level document
// ---------------------------------------------------------------------------

/// The `(eps × seed)` grid for `sweep`: one run per pair, the seed replacing
/// the x0 draw's seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub eps: Vec<f64>,
    pub seeds: Vec<u64>,
}

fn default_horizon() -> f64 {
    100.0
}

fn default_max_events() -> u64 {
    10_000_000
}

fn default_sample_dt() -> f64 {
    0.1
}

/// One run (or one sweep), fully specified.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub graph: GraphConfig,
    pub protocol: ProtocolConfig,
    pub x0: X0Config,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_max_events")]
    pub max_events: u64,
    #[serde(default = "default_sample_dt")]
    pub sample_dt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    /// Directory the config was loaded from; anchors relative paths.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    /// Parse a config from a JSON string. Relative paths resolve against the
    /// current directory.
    pub fn from_json(text: &str) -> Result<RunConfig, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        Ok(cfg)
    }

    /// Load a config file; relative paths inside it resolve against its
    /// parent directory.
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = RunConfig::from_json(&text)?;
        cfg.base_dir = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
        Ok(cfg)
    }
}
