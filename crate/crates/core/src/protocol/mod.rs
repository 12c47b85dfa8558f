//! The consensus protocols wired into the event engine.
//!
//! * [`node`] — node-triggered fixed-threshold control, plus its
//!   actuation-delay-robust and quantized-measurement variants.
//! * [`timevarying`] — vanishing threshold and gain schedules, uniform and
//!   per-agent.
//! * [`gossip`] — edge-triggered (gossip) control with per-edge clocks,
//!   fixed-threshold and time-varying.

pub mod gossip;
pub mod node;
pub mod timevarying;

use crate::schedule::{ScalarSchedule, ScheduleError};
use node::Feasibility;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("threshold eps must be positive and finite, got {eps}")]
    BadEps { eps: f64 },
    #[error("alpha must lie in (0, 1), got {alpha}")]
    BadAlpha { alpha: f64 },
    #[error("quantizer step delta must be positive and finite, got {delta}")]
    BadDelta { delta: f64 },
    #[error("delay bound tau_max must be nonnegative and finite, got {tau_max}")]
    BadTauMax { tau_max: f64 },
    #[error("clock rate for agent {i} must lie in (0, 1], got {r}")]
    BadRate { i: usize, r: f64 },
    #[error("expected {expected} clock rates, got {got}")]
    RateCount { expected: usize, got: usize },
    #[error("initial state has length {got}, expected {expected}")]
    X0Length { expected: usize, got: usize },
    #[error("initial state component {i} is not finite: {v}")]
    X0NotFinite { i: usize, v: f64 },
    #[error("{what}: {source}")]
    Schedule {
        what: String,
        #[source]
        source: ScheduleError,
    },
    #[error("{what} must decay to zero over time; a constant schedule cannot do that")]
    MustDecay { what: String },
    #[error("{what} must have a divergent integral, but it totals {total}")]
    MustDiverge { what: String, total: f64 },
    #[error(
        "{what} is Zeno-prone: the trigger-to-gain ratio tends to zero, so no positive \
         dwell time can be certified"
    )]
    ZenoProne { what: String },
    #[error(
        "gain schedules around agent {agent} mix families or decay shapes; per-agent trigger \
         capacities are only exactly representable when they share one shape"
    )]
    MixedGainFamilies { agent: usize },
    #[error("expected {expected} per-agent schedules for {what}, got {got}")]
    ScheduleCount {
        what: &'static str,
        expected: usize,
        got: usize,
    },
}

/// Validate an initial state vector against the graph size.
pub(crate) fn check_x0(n: usize, x0: &[f64]) -> Result<(), ProtocolError> {
    if x0.len() != n {
        return Err(ProtocolError::X0Length {
            expected: n,
            got: x0.len(),
        });
    }
    for (i, &v) in x0.iter().enumerate() {
        if !v.is_finite() {
            return Err(ProtocolError::X0NotFinite { i, v });
        }
    }
    Ok(())
}

pub(crate) fn check_eps(eps: f64) -> Result<(), ProtocolError> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(ProtocolError::BadEps { eps });
    }
    Ok(())
}

pub(crate) fn check_alpha(alpha: f64) -> Result<(), ProtocolError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ProtocolError::BadAlpha { alpha });
    }
    Ok(())
}

pub(crate) fn check_rates(n: usize, rates: &[f64]) -> Result<(), ProtocolError> {
    if rates.len() != n {
        return Err(ProtocolError::RateCount {
            expected: n,
            got: rates.len(),
        });
    }
    for (i, &r) in rates.iter().enumerate() {
        if !(r > 0.0 && r <= 1.0) {
            return Err(ProtocolError::BadRate { i, r });
        }
    }
    Ok(())
}

/// Fully resolved protocol parameters of a run. The verification monitors
/// derive dwell-time floors, threshold values and guarantee applicability
/// from this, independent of the simulating model's internals.
#[derive(Debug, Clone)]
pub enum ProtocolSpec {
    /// Fixed threshold, node-triggered.
    A { eps: f64 },
    /// Fixed threshold with actuation delays and skewed clocks.
    ADelay {
        eps: f64,
        alpha: f64,
        tau_max: f64,
        r_min: f64,
        rates: Vec<f64>,
        feasibility: Feasibility,
    },
    /// Fixed threshold with uniformly quantized relative measurements.
    AQuant {
        eps: f64,
        alpha: f64,
        delta: f64,
        r_min: f64,
        rates: Vec<f64>,
        feasibility: Feasibility,
    },
    /// Time-varying threshold and gain, shared by all agents.
    B {
        eps: ScalarSchedule,
        gamma: ScalarSchedule,
        /// Certified global lower bound on inter-poll intervals.
        c: f64,
    },
    /// Per-agent time-varying thresholds and gains.
    BNonUniform {
        eps: Vec<ScalarSchedule>,
        gamma: Vec<ScalarSchedule>,
        /// Per-agent certified dwell bound (`inf` for isolated agents).
        c: Vec<f64>,
    },
    /// Fixed threshold, edge-triggered.
    C { eps: f64 },
    /// Edge-triggered with time-varying threshold and gain.
    CTv {
        eps: ScalarSchedule,
        gamma: ScalarSchedule,
        /// Certified per-edge dwell bound (edge-degree form).
        c_edge: f64,
        /// The coarser node-degree form of the same bound, reported for
        /// comparison.
        c_node: f64,
    },
}

impl ProtocolSpec {
    /// The protocol identifier used in configs and summaries.
    pub fn id(&self) -> &'static str {
        match self {
            ProtocolSpec::A { .. } => "A",
            ProtocolSpec::ADelay { .. } => "A-delay",
            ProtocolSpec::AQuant { .. } => "A-quantized",
            ProtocolSpec::B { .. } => "B",
            ProtocolSpec::BNonUniform { .. } => "B-nonuniform",
            ProtocolSpec::C { .. } => "C",
            ProtocolSpec::CTv { .. } => "C-tv",
        }
    }

    /// Whether events belong to edges rather than agents.
    pub fn edge_triggered(&self) -> bool {
        matches!(self, ProtocolSpec::C { .. } | ProtocolSpec::CTv { .. })
    }

    /// Whether the run's guarantees hold (fixed-threshold variants under
    /// their feasibility conditions; `None` where no side condition exists).
    pub fn feasible(&self) -> Option<bool> {
        match self {
            ProtocolSpec::ADelay { feasibility, .. } | ProtocolSpec::AQuant { feasibility, .. } => {
                Some(feasibility.feasible)
            }
            _ => None,
        }
    }
}
