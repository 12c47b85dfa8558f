//! Node-triggered fixed-threshold consensus.
//!
//! Each agent owns a local clock. When the clock fires, the agent polls its
//! neighbors, recomputes its ternary control from the relative-state sum, and
//! arms the clock with a duration read off that same measurement: large
//! disagreement buys a long wait, small disagreement a short one that is
//! bounded below, so inter-poll times never accumulate toward zero. Three
//! variants share the trigger logic:
//!
//! * [`NodeTriggered`] — measurements are exact and the control switches at
//!   the poll itself.
//! * [`NodeTriggeredDelayed`] — the control computed at a poll lands only
//!   after an actuation lag, and local clocks may run slow by a known factor.
//! * [`NodeTriggeredQuantized`] — relative measurements pass through a
//!   uniform quantizer before the control decision.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::engine::{
    flow, Event, EventKind, EngineError, EventQueue, Model, Owner, TargetKind, TargetSpec,
    TraceEvent, TraceEventKind,
};
use crate::graph::Graph;
use crate::protocol::{check_alpha, check_eps, check_rates, check_x0, ProtocolError};
use crate::quantize::{q_uniform_valid, sign_eps_valid, QuantizeError, Ternary};

/// Neighborhood disagreement `Σ_{j ∈ N_i} (x_j - x_i)` seen by agent `i`.
pub fn ave(x: &[f64], g: &Graph, i: usize) -> f64 {
    g.neighbors(i).iter().map(|&j| x[j] - x[i]).sum()
}

/// Quantized neighborhood disagreement: each relative measurement
/// `x_j - x_i` is quantized to step `delta` before summing.
pub fn qave(x: &[f64], g: &Graph, i: usize, delta: f64) -> Result<f64, QuantizeError> {
    if !(delta > 0.0) || delta.is_nan() {
        return Err(QuantizeError::NonPositiveDelta { delta });
    }
    Ok(qave_valid(x, g, i, delta))
}

pub(crate) fn qave_valid(x: &[f64], g: &Graph, i: usize, delta: f64) -> f64 {
    g.neighbors(i)
        .iter()
        .map(|&j| q_uniform_valid(x[j] - x[i], delta))
        .sum()
}

/// Inter-poll duration armed by an agent of degree `d` that measured
/// disagreement `measured` against threshold `eps`: `|measured| / (4 d)`
/// outside the deadzone, `eps / (4 d)` inside it. Degree-zero agents have
/// nothing to measure and fall back to the deadzone duration with `d = 1`.
pub fn trigger_f(measured: f64, d: usize, eps: f64) -> f64 {
    let dd = if d == 0 { 1.0 } else { d as f64 };
    if measured.abs() >= eps {
        measured.abs() / (4.0 * dd)
    } else {
        eps / (4.0 * dd)
    }
}

/// Trigger duration for the robust variants: `α |measured| / (2 d)` outside
/// the deadzone, `α eps / (2 d)` inside. At `α = ½` this reproduces
/// [`trigger_f`] exactly (the halving commutes with rounding).
pub fn trigger_f_alpha(measured: f64, d: usize, eps: f64, alpha: f64) -> f64 {
    let dd = if d == 0 { 1.0 } else { d as f64 };
    if measured.abs() >= eps {
        alpha * measured.abs() / (2.0 * dd)
    } else {
        alpha * eps / (2.0 * dd)
    }
}

// ---------------------------------------------------------------------------
// Feasibility of the robustness parameters
// ---------------------------------------------------------------------------

/// One scalar inequality backing a robustness guarantee.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityCondition {
    /// Human-readable rendering of the inequality.
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
    /// How much slack the inequality has (positive iff satisfied).
    pub margin: f64,
}

impl FeasibilityCondition {
    /// Strict `lhs > rhs`.
    fn gt(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        FeasibilityCondition {
            name: name.into(),
            lhs,
            rhs,
            satisfied: lhs > rhs,
            margin: lhs - rhs,
        }
    }

    /// Strict `lhs < rhs`.
    fn lt(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        FeasibilityCondition {
            name: name.into(),
            lhs,
            rhs,
            satisfied: lhs < rhs,
            margin: rhs - lhs,
        }
    }
}

/// Outcome of a parameter feasibility check. `feasible` is the conjunction
/// of all conditions; an infeasible parameter set still simulates, it just
/// carries no convergence guarantee.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Feasibility {
    pub feasible: bool,
    pub conditions: Vec<FeasibilityCondition>,
}

impl Feasibility {
    fn from_conditions(conditions: Vec<FeasibilityCondition>) -> Self {
        Feasibility {
            feasible: conditions.iter().all(|c| c.satisfied),
            conditions,
        }
    }

    /// Trivially feasible (no side conditions).
    pub fn unconditional() -> Self {
        Feasibility {
            feasible: true,
            conditions: Vec::new(),
        }
    }
}

/// Conditions under which the delayed variant still drives every agent into
/// the deadzone despite actuation lags up to `tau_max` and clock rates no
/// slower than `r_min`: the threshold must dominate the worst-case drift
/// during a lag, and the clock scaling `alpha` must leave room for it.
pub fn delay_feasibility(
    eps: f64,
    alpha: f64,
    d_max: usize,
    tau_max: f64,
    r_min: f64,
) -> Feasibility {
    let dm = d_max as f64;
    let lag_drift = 4.0 * dm * tau_max;
    Feasibility::from_conditions(vec![
        FeasibilityCondition::gt("eps > 4 d_max tau_max", eps, lag_drift),
        FeasibilityCondition::lt(
            "alpha < r_min (eps - 4 d_max tau_max) / eps",
            alpha,
            r_min * ((eps - lag_drift) / eps),
        ),
    ])
}

/// Conditions under which the quantized variant drives every agent into the
/// relaxed deadzone (twice the threshold): the threshold must dominate the
/// worst-case total quantization error `d_max delta / 2`.
pub fn quantization_feasibility(
    eps: f64,
    alpha: f64,
    d_max: usize,
    delta: f64,
    r_min: f64,
) -> Feasibility {
    let dm = d_max as f64;
    Feasibility::from_conditions(vec![
        FeasibilityCondition::gt("eps > d_max delta / 2", eps, dm * delta / 2.0),
        FeasibilityCondition::lt(
            "alpha < r_min (2 eps - d_max delta) / (2 eps)",
            alpha,
            r_min * ((2.0 * eps - dm * delta) / (2.0 * eps)),
        ),
    ])
}

// ---------------------------------------------------------------------------
// Baseline model
// ---------------------------------------------------------------------------

/// The baseline node-triggered protocol: exact measurements, instantaneous
/// actuation, unit clock rates.
#[derive(Debug, Clone)]
pub struct NodeTriggered {
    g: Arc<Graph>,
    eps: f64,
    x: Vec<f64>,
    u: Vec<Ternary>,
}

impl NodeTriggered {
    pub fn new(g: Arc<Graph>, eps: f64, x0: Vec<f64>) -> Result<Self, ProtocolError> {
        check_eps(eps)?;
        check_x0(g.n(), &x0)?;
        let u = vec![Ternary::Zero; g.n()];
        Ok(NodeTriggered { g, eps, x: x0, u })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }
}

impl Model for NodeTriggered {
    fn n(&self) -> usize {
        self.g.n()
    }

    fn x(&self) -> &[f64] {
        &self.x
    }

    fn node_controls(&self) -> Vec<f64> {
        self.u.iter().map(|u| u.as_f64()).collect()
    }

    fn init(&mut self, queue: &mut EventQueue) -> Result<(), EngineError> {
        for i in 0..self.g.n() {
            queue.push(0.0, EventKind::Poll { agent: i })?;
        }
        Ok(())
    }

    fn state_at(&self, t0: f64, t1: f64) -> Vec<f64> {
        let rates = self.node_controls();
        flow(&self.x, &rates, t0, t1, None).expect("validated state cannot fail to flow")
    }

    fn advance(&mut self, t0: f64, t1: f64) {
        self.x = self.state_at(t0, t1);
    }

    fn jump(
        &mut self,
        t: f64,
        batch: &[Event],
        queue: &mut EventQueue,
        log: &mut Vec<TraceEvent>,
    ) -> Result<(), EngineError> {
        for ev in batch {
            let EventKind::Poll { agent: i } = ev.kind else {
                unreachable!("node-triggered protocols only schedule polls");
            };
            let m = ave(&self.x, &self.g, i);
            let before = self.u[i];
            let after = sign_eps_valid(m, self.eps);
            let d = self.g.degree(i);
            let wait = trigger_f(m, d, self.eps);
            queue.push(t + wait, EventKind::Poll { agent: i })?;
            self.u[i] = after;
            log.push(TraceEvent {
                t,
                kind: TraceEventKind::Poll,
                owner: Owner::Agent(i),
                measured: m,
                control_before: before.as_i8(),
                control_after: after.as_i8(),
                next_wait: wait,
                messages: d as u64,
            });
        }
        Ok(())
    }

    fn is_frozen(&self) -> bool {
        self.u.iter().all(|u| u.is_zero())
            && (0..self.g.n()).all(|i| ave(&self.x, &self.g, i).abs() < self.eps)
    }

    fn target(&self) -> Option<TargetSpec> {
        Some(TargetSpec {
            kind: TargetKind::NodeAve,
            bound: self.eps,
        })
    }

    fn freeze_tail(&self) -> Option<Vec<f64>> {
        Some(
            (0..self.g.n())
                .map(|i| trigger_f(0.0, self.g.degree(i), self.eps))
                .collect(),
        )
    }
}

// ---------------------------------------------------------------------------
// Actuation-delay variant
// ---------------------------------------------------------------------------

/// Source of per-poll actuation lags.
// One instance per model, so the RNG-carrying variant's size is irrelevant.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone)]
pub enum DelaySampler {
    /// Every poll's control lands exactly `tau` later.
    Constant { tau: f64 },
    /// Lags drawn uniformly from `[0, tau_max]`, reproducibly seeded.
    Uniform { tau_max: f64, rng: ChaCha8Rng },
}

impl DelaySampler {
    pub fn constant(tau: f64) -> Result<Self, ProtocolError> {
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(ProtocolError::BadTauMax { tau_max: tau });
        }
        Ok(DelaySampler::Constant { tau })
    }

    pub fn uniform(tau_max: f64, seed: u64) -> Result<Self, ProtocolError> {
        if !(tau_max >= 0.0) || !tau_max.is_finite() {
            return Err(ProtocolError::BadTauMax { tau_max });
        }
        Ok(DelaySampler::Uniform {
            tau_max,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Largest lag this sampler can produce.
    pub fn tau_max(&self) -> f64 {
        match self {
            DelaySampler::Constant { tau } => *tau,
            DelaySampler::Uniform { tau_max, .. } => *tau_max,
        }
    }

    fn sample(&mut self) -> f64 {
        match self {
            DelaySampler::Constant { tau } => *tau,
            DelaySampler::Uniform { tau_max, rng } => {
                if *tau_max == 0.0 {
                    0.0
                } else {
                    rng.random_range(0.0..=*tau_max)
                }
            }
        }
    }
}

/// Node-triggered protocol with actuation lags and skewed local clocks.
///
/// A poll captures the measurement and computes the control, but the switch
/// is applied only after a lag `τ`; the old control stays in force in
/// between. The next poll is armed once the control lands, `f / R_i`
/// wall-clock units later, where `R_i ∈ (0, 1]` is agent `i`'s clock rate
/// and `f` the `alpha`-scaled trigger duration. A zero lag collapses the
/// whole round into the poll itself, which makes `alpha = ½`, `R ≡ 1`,
/// `τ ≡ 0` reproduce [`NodeTriggered`] event for event.
#[derive(Debug, Clone)]
pub struct NodeTriggeredDelayed {
    g: Arc<Graph>,
    eps: f64,
    alpha: f64,
    rates: Vec<f64>,
    delay: DelaySampler,
    x: Vec<f64>,
    u: Vec<Ternary>,
    /// Nonzero controls currently in flight. While any are pending the run
    /// cannot be declared frozen: a landing could restart motion.
    pending_nonzero: usize,
}

impl NodeTriggeredDelayed {
    pub fn new(
        g: Arc<Graph>,
        eps: f64,
        alpha: f64,
        rates: Vec<f64>,
        delay: DelaySampler,
        x0: Vec<f64>,
    ) -> Result<Self, ProtocolError> {
        check_eps(eps)?;
        check_alpha(alpha)?;
        check_rates(g.n(), &rates)?;
        check_x0(g.n(), &x0)?;
        let u = vec![Ternary::Zero; g.n()];
        Ok(NodeTriggeredDelayed {
            g,
            eps,
            alpha,
            rates,
            delay,
            x: x0,
            u,
            pending_nonzero: 0,
        })
    }
}

impl Model for NodeTriggeredDelayed {
    fn n(&self) -> usize {
        self.g.n()
    }

    fn x(&self) -> &[f64] {
        &self.x
    }

    fn node_controls(&self) -> Vec<f64> {
        self.u.iter().map(|u| u.as_f64()).collect()
    }

    fn init(&mut self, queue: &mut EventQueue) -> Result<(), EngineError> {
        for i in 0..self.g.n() {
            queue.push(0.0, EventKind::Poll { agent: i })?;
        }
        Ok(())
    }

    fn state_at(&self, t0: f64, t1: f64) -> Vec<f64> {
        let rates = self.node_controls();
        flow(&self.x, &rates, t0, t1, None).expect("validated state cannot fail to flow")
    }

    fn advance(&mut self, t0: f64, t1: f64) {
        self.x = self.state_at(t0, t1);
    }

    fn jump(
        &mut self,
        t: f64,
        batch: &[Event],
        queue: &mut EventQueue,
        log: &mut Vec<TraceEvent>,
    ) -> Result<(), EngineError> {
        for ev in batch {
            match ev.kind {
                EventKind::Actuate {
                    agent: i,
                    control,
                    clock,
                    measured,
                } => {
                    let before = self.u[i];
                    self.u[i] = control;
                    if !control.is_zero() {
                        self.pending_nonzero -= 1;
                    }
                    let wait = clock / self.rates[i];
                    queue.push(t + wait, EventKind::Poll { agent: i })?;
                    log.push(TraceEvent {
                        t,
                        kind: TraceEventKind::Actuate,
                        owner: Owner::Agent(i),
                        measured,
                        control_before: before.as_i8(),
                        control_after: control.as_i8(),
                        next_wait: wait,
                        messages: 0,
                    });
                }
                EventKind::Poll { agent: i } => {
                    let m = ave(&self.x, &self.g, i);
                    let control = sign_eps_valid(m, self.eps);
                    let d = self.g.degree(i);
                    let clock = trigger_f_alpha(m, d, self.eps, self.alpha);
                    let tau = self.delay.sample();
                    if tau == 0.0 {
                        // Nothing can happen between poll and landing; fold
                        // the actuation into the poll so batch times keep
                        // strictly increasing.
                        let before = self.u[i];
                        self.u[i] = control;
                        let wait = clock / self.rates[i];
                        queue.push(t + wait, EventKind::Poll { agent: i })?;
                        log.push(TraceEvent {
                            t,
                            kind: TraceEventKind::Poll,
                            owner: Owner::Agent(i),
                            measured: m,
                            control_before: before.as_i8(),
                            control_after: control.as_i8(),
                            next_wait: wait,
                            messages: d as u64,
                        });
                    } else {
                        if !control.is_zero() {
                            self.pending_nonzero += 1;
                        }
                        queue.push(
                            t + tau,
                            EventKind::Actuate {
                                agent: i,
                                control,
                                clock,
                                measured: m,
                            },
                        )?;
                        log.push(TraceEvent {
                            t,
                            kind: TraceEventKind::Poll,
                            owner: Owner::Agent(i),
                            measured: m,
                            control_before: self.u[i].as_i8(),
                            control_after: self.u[i].as_i8(),
                            next_wait: tau,
                            messages: d as u64,
                        });
                    }
                }
                EventKind::EdgePoll { .. } => {
                    unreachable!("node-triggered protocols do not schedule edge polls")
                }
            }
        }
        Ok(())
    }

    fn is_frozen(&self) -> bool {
        self.pending_nonzero == 0
            && self.u.iter().all(|u| u.is_zero())
            && (0..self.g.n()).all(|i| ave(&self.x, &self.g, i).abs() < self.eps)
    }

    fn target(&self) -> Option<TargetSpec> {
        Some(TargetSpec {
            kind: TargetKind::NodeAve,
            bound: self.eps,
        })
    }

    fn freeze_tail(&self) -> Option<Vec<f64>> {
        // Post-freeze rounds settle into deadzone polls: lag plus the scaled
        // deadzone duration. The lag varies per round for random samplers, so
        // report the guaranteed lower bound (zero lag).
        Some(
            (0..self.g.n())
                .map(|i| trigger_f_alpha(0.0, self.g.degree(i), self.eps, self.alpha) / self.rates[i])
                .collect(),
        )
    }
}

// ---------------------------------------------------------------------------
// Quantized-measurement variant
// ---------------------------------------------------------------------------

/// Node-triggered protocol where every relative measurement is uniformly
/// quantized before entering the control and trigger computations. The
/// guaranteed terminal set is the relaxed deadzone `|ave| < 2 eps`.
#[derive(Debug, Clone)]
pub struct NodeTriggeredQuantized {
    g: Arc<Graph>,
    eps: f64,
    alpha: f64,
    delta: f64,
    rates: Vec<f64>,
    x: Vec<f64>,
    u: Vec<Ternary>,
}

impl NodeTriggeredQuantized {
    pub fn new(
        g: Arc<Graph>,
        eps: f64,
        alpha: f64,
        delta: f64,
        rates: Vec<f64>,
        x0: Vec<f64>,
    ) -> Result<Self, ProtocolError> {
        check_eps(eps)?;
        check_alpha(alpha)?;
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(ProtocolError::BadDelta { delta });
        }
        check_rates(g.n(), &rates)?;
        check_x0(g.n(), &x0)?;
        let u = vec![Ternary::Zero; g.n()];
        Ok(NodeTriggeredQuantized {
            g,
            eps,
            alpha,
            delta,
            rates,
            x: x0,
            u,
        })
    }
}

impl Model for NodeTriggeredQuantized {
    fn n(&self) -> usize {
        self.g.n()
    }

    fn x(&self) -> &[f64] {
        &self.x
    }

    fn node_controls(&self) -> Vec<f64> {
        self.u.iter().map(|u| u.as_f64()).collect()
    }

    fn init(&mut self, queue: &mut EventQueue) -> Result<(), EngineError> {
        for i in 0..self.g.n() {
            queue.push(0.0, EventKind::Poll { agent: i })?;
        }
        Ok(())
    }

    fn state_at(&self, t0: f64, t1: f64) -> Vec<f64> {
        let rates = self.node_controls();
        flow(&self.x, &rates, t0, t1, None).expect("validated state cannot fail to flow")
    }

    fn advance(&mut self, t0: f64, t1: f64) {
        self.x = self.state_at(t0, t1);
    }

    fn jump(
        &mut self,
        t: f64,
        batch: &[Event],
        queue: &mut EventQueue,
        log: &mut Vec<TraceEvent>,
    ) -> Result<(), EngineError> {
        for ev in batch {
            let EventKind::Poll { agent: i } = ev.kind else {
                unreachable!("node-triggered protocols only schedule polls");
            };
            let m = qave_valid(&self.x, &self.g, i, self.delta);
            let before = self.u[i];
            let after = sign_eps_valid(m, self.eps);
            let d = self.g.degree(i);
            let wait = trigger_f_alpha(m, d, self.eps, self.alpha) / self.rates[i];
            queue.push(t + wait, EventKind::Poll { agent: i })?;
            self.u[i] = after;
            log.push(TraceEvent {
                t,
                kind: TraceEventKind::Poll,
                owner: Owner::Agent(i),
                measured: m,
                control_before: before.as_i8(),
                control_after: after.as_i8(),
                next_wait: wait,
                messages: d as u64,
            });
        }
        Ok(())
    }

    fn is_frozen(&self) -> bool {
        // Freezing is decided on what the agents can see: once every
        // quantized disagreement sits inside the deadzone, every future poll
        // reads the same state and keeps the controls at zero.
        self.u.iter().all(|u| u.is_zero())
            && (0..self.g.n()).all(|i| qave_valid(&self.x, &self.g, i, self.delta).abs() < self.eps)
    }

    fn target(&self) -> Option<TargetSpec> {
        Some(TargetSpec {
            kind: TargetKind::NodeAve,
            bound: 2.0 * self.eps,
        })
    }

    fn freeze_tail(&self) -> Option<Vec<f64>> {
        Some(
            (0..self.g.n())
                .map(|i| trigger_f_alpha(0.0, self.g.degree(i), self.eps, self.alpha) / self.rates[i])
                .collect(),
        )
    }
}
