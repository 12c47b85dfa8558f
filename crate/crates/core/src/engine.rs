//! Event-driven simulation core.
//!
//! The engine advances a [`Model`] through an alternation of exact
//! continuous flows and discrete jumps. All jump times live in one absolute
//! time queue; every event whose time is *exactly* equal to the minimum is
//! processed in the same batch, in a deterministic order:
//!
//! 1. ascending time,
//! 2. kind rank (actuations, then node polls, then edge polls),
//! 3. agent / edge index,
//! 4. insertion sequence number.
//!
//! There is no epsilon-batching: two events one ULP apart are two batches.
//! Between batches the state moves along its closed-form flow, so a
//! simulation's event times are a pure function of the inputs and the trace
//! is byte-for-byte reproducible.

use crate::graph::Graph;
use crate::quantize::Ternary;
use crate::schedule::{ScalarSchedule, ScheduleError};
use serde::Serialize;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("event time {t} is not finite")]
    NonFiniteTime { t: f64 },
    #[error("pop from an empty event queue")]
    EmptyQueue,
    #[error("event batch at t = {t} does not advance past the previous batch at t = {prev}")]
    TimeNotAdvancing { t: f64, prev: f64 },
    #[error("rates vector has length {got}, expected {expected}")]
    RateLengthMismatch { expected: usize, got: usize },
    #[error("flow interval is reversed: t0 = {t0} > t1 = {t1}")]
    ReversedFlow { t0: f64, t1: f64 },
    #[error("run options invalid: {what}")]
    BadOptions { what: String },
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

// ---------------------------------------------------------------------------
// Events and the queue
// ---------------------------------------------------------------------------

/// A scheduled discrete event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    /// Apply a control computed at an earlier poll, then arm the next poll
    /// `clock` local-clock units later. Used by the actuation-delay variant.
    Actuate {
        agent: usize,
        control: Ternary,
        /// Trigger duration (local clock units) armed once the control lands.
        clock: f64,
        /// The stale measurement the control was computed from (log only).
        measured: f64,
    },
    /// An agent's local clock reached zero: measure neighbors and jump.
    Poll { agent: usize },
    /// An edge's shared clock reached zero (edge-triggered protocols).
    EdgePoll { edge: usize },
}

impl EventKind {
    /// Tie-break rank within a batch: actuations land before polls so that a
    /// control computed earlier is in force when a simultaneous poll fires.
    fn rank(&self) -> u8 {
        match self {
            EventKind::Actuate { .. } => 0,
            EventKind::Poll { .. } => 1,
            EventKind::EdgePoll { .. } => 2,
        }
    }

    fn index(&self) -> usize {
        match *self {
            EventKind::Actuate { agent, .. } => agent,
            EventKind::Poll { agent } => agent,
            EventKind::EdgePoll { edge } => edge,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    /// Monotone insertion counter; last tie-break key.
    pub seq: u64,
}

/// Heap entry ordered by (time, rank, index, seq). Only the key participates
/// in the ordering; event payloads never influence scheduling.
struct HeapEntry(Event);

impl HeapEntry {
    fn key(&self) -> (f64, u8, usize, u64) {
        (
            self.0.time,
            self.0.kind.rank(),
            self.0.kind.index(),
            self.0.seq,
        )
    }
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        let (ta, ra, ia, sa) = self.key();
        let (tb, rb, ib, sb) = other.key();
        // Reversed: BinaryHeap is a max-heap and we want the minimum first.
        tb.total_cmp(&ta)
            .then(rb.cmp(&ra))
            .then(ib.cmp(&ia))
            .then(sb.cmp(&sa))
    }
}

/// All events popped at one instant.
#[derive(Debug)]
pub struct Batch {
    pub time: f64,
    pub events: Vec<Event>,
}

/// Absolute-time priority queue with deterministic tie-breaking.
#[derive(Default)]
pub struct EventQueue {
    heap: BinaryHeap<HeapEntry>,
    next_seq: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn push(&mut self, time: f64, kind: EventKind) -> Result<(), EngineError> {
        if !time.is_finite() {
            return Err(EngineError::NonFiniteTime { t: time });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(HeapEntry(Event { time, kind, seq }));
        Ok(())
    }

    pub fn peek_time(&self) -> Option<f64> {
        self.heap.peek().map(|e| e.0.time)
    }

    /// Pops *all* events whose time equals the minimum time exactly.
    pub fn pop_batch(&mut self) -> Result<Batch, EngineError> {
        let first = self.heap.pop().ok_or(EngineError::EmptyQueue)?.0;
        let time = first.time;
        let mut events = vec![first];
        while let Some(peek) = self.heap.peek() {
            if peek.0.time == time {
                events.push(self.heap.pop().unwrap().0);
            } else {
                break;
            }
        }
        Ok(Batch { time, events })
    }

    pub fn clear(&mut self) {
        self.heap.clear();
    }
}

// ---------------------------------------------------------------------------
// Flow
// ---------------------------------------------------------------------------

/// Exact piecewise flow: `x_i + rate_i * (t1 - t0)`, or
/// `x_i + rate_i * ∫_{t0}^{t1} gamma` when a gain schedule applies.
pub fn flow(
    x: &[f64],
    rates: &[f64],
    t0: f64,
    t1: f64,
    gamma: Option<&ScalarSchedule>,
) -> Result<Vec<f64>, EngineError> {
    if rates.len() != x.len() {
        return Err(EngineError::RateLengthMismatch {
            expected: x.len(),
            got: rates.len(),
        });
    }
    if !(t1 >= t0) {
        return Err(EngineError::ReversedFlow { t0, t1 });
    }
    let scale = match gamma {
        None => t1 - t0,
        Some(g) => g.integral(t0, t1)?,
    };
    Ok(x.iter().zip(rates).map(|(xi, r)| xi + r * scale).collect())
}

// ---------------------------------------------------------------------------
// Trace
// ---------------------------------------------------------------------------

/// Who an event belongs to: an agent (node protocols) or an edge index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Owner {
    Agent(usize),
    Edge(usize),
}

impl Owner {
    pub fn index(&self) -> usize {
        match *self {
            Owner::Agent(i) => i,
            Owner::Edge(e) => e,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceEventKind {
    Poll,
    Actuate,
    EdgePoll,
}

impl TraceEventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TraceEventKind::Poll => "poll",
            TraceEventKind::Actuate => "actuate",
            TraceEventKind::EdgePoll => "edge_poll",
        }
    }
}

/// One logged discrete event.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TraceEvent {
    pub t: f64,
    pub kind: TraceEventKind,
    pub owner: Owner,
    /// The value the decision was based on: relative-state sum for node
    /// polls (quantized for the quantized variant), state difference for
    /// edge polls, the stale captured measurement for actuations.
    pub measured: f64,
    pub control_before: i8,
    pub control_after: i8,
    /// Wall-clock wait until this owner's next scheduled event
    /// (actuation lag for delayed polls, re-poll delay otherwise).
    pub next_wait: f64,
    /// Messages exchanged at this event (one per polled neighbor; two for an
    /// edge poll; none for an actuation).
    pub messages: u64,
}

/// State snapshot kept at every event time and on the sampling grid.
#[derive(Debug, Clone, Serialize)]
pub struct Sample {
    pub t: f64,
    pub x: Vec<f64>,
    /// Node-level drift: the ternary control for node protocols, the signed
    /// sum of incident edge controls for edge protocols.
    pub u: Vec<f64>,
    /// Disagreement `½ x'Lx`.
    pub v: f64,
    /// Spread `max x - min x`.
    pub w: f64,
}

#[derive(Debug, Default, Clone, Serialize)]
pub struct Trace {
    pub samples: Vec<Sample>,
    pub events: Vec<TraceEvent>,
}

impl Trace {
    /// Poll times of one owner, in order (actuations excluded).
    pub fn poll_times(&self, owner: Owner) -> Vec<f64> {
        self.events
            .iter()
            .filter(|e| e.owner == owner && e.kind != TraceEventKind::Actuate)
            .map(|e| e.t)
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Model abstraction
// ---------------------------------------------------------------------------

/// Which linear functionals define the protocol's target set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetKind {
    /// Per-agent neighborhood disagreement `Σ_{j ∈ N_i} (x_j - x_i)`.
    NodeAve,
    /// Per-edge difference `x_j - x_i` (canonical `i < j` orientation).
    EdgeDiff,
}

/// Open target set `{ x : |v_k(x)| < bound for all k }`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetSpec {
    pub kind: TargetKind,
    pub bound: f64,
}

/// Values of the target functionals at `x`.
pub fn target_values(kind: TargetKind, g: &Graph, x: &[f64]) -> Vec<f64> {
    match kind {
        TargetKind::NodeAve => (0..g.n())
            .map(|i| crate::protocol::node::ave(x, g, i))
            .collect(),
        TargetKind::EdgeDiff => g.edges().iter().map(|&(i, j)| x[j] - x[i]).collect(),
    }
}

/// A protocol wired into the engine: continuous flow plus jump rules.
pub trait Model {
    fn n(&self) -> usize;

    fn x(&self) -> &[f64];

    /// Node-level drift rates currently in force (see [`Sample::u`]).
    fn node_controls(&self) -> Vec<f64>;

    /// Schedule the initial events (every local clock starts at zero).
    fn init(&mut self, queue: &mut EventQueue) -> Result<(), EngineError>;

    /// State at `t1`, given the current state holds at `t0`, without
    /// mutating. Must be exact (closed-form), not an integrator step.
    fn state_at(&self, t0: f64, t1: f64) -> Vec<f64>;

    /// Commit the flow over `[t0, t1]`; must agree with [`Model::state_at`].
    fn advance(&mut self, t0: f64, t1: f64);

    /// Apply one batch of simultaneous events: update controls, arm clocks,
    /// push follow-up events, append log records.
    fn jump(
        &mut self,
        t: f64,
        batch: &[Event],
        queue: &mut EventQueue,
        log: &mut Vec<TraceEvent>,
    ) -> Result<(), EngineError>;

    /// True once no future event can ever change `x` again.
    fn is_frozen(&self) -> bool;

    /// Target set for entry-time detection, if the protocol has one.
    fn target(&self) -> Option<TargetSpec>;

    /// Analytic per-owner re-poll period that would persist after a freeze
    /// (the engine stops simulating the infinite polling tail).
    fn freeze_tail(&self) -> Option<Vec<f64>>;
}

// ---------------------------------------------------------------------------
// Run loop
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    /// Absolute-time simulation limit.
    pub horizon: f64,
    /// Cap on processed events; exceeding it flags the run.
    pub max_events: u64,
    /// Uniform sampling grid step for the trace.
    pub sample_dt: f64,
}

impl RunOptions {
    pub fn validate(&self) -> Result<(), EngineError> {
        if !self.horizon.is_finite() || self.horizon < 0.0 {
            return Err(EngineError::BadOptions {
                what: format!("horizon must be finite and nonnegative, got {}", self.horizon),
            });
        }
        if !(self.sample_dt > 0.0) || !self.sample_dt.is_finite() {
            return Err(EngineError::BadOptions {
                what: format!("sample_dt must be positive, got {}", self.sample_dt),
            });
        }
        if self.max_events == 0 {
            return Err(EngineError::BadOptions {
                what: "max_events must be at least 1".to_string(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitReason {
    /// Controls are all zero, the state is inside the target set, and no
    /// pending actuation can change that: `x` is constant forever.
    Frozen,
    /// Simulated up to the requested horizon.
    Horizon,
    /// Stopped early because the event cap was hit.
    EventCap,
}

impl ExitReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExitReason::Frozen => "frozen",
            ExitReason::Horizon => "horizon",
            ExitReason::EventCap => "event_cap",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RunOutcome {
    pub exit: ExitReason,
    pub t_end: f64,
    /// First time the state enters the target set (exact in-segment
    /// crossing), if the protocol has a target set and entry happened.
    pub t_enter: Option<f64>,
    /// Batch time at which the freeze predicate first held.
    pub t_freeze: Option<f64>,
    pub events_applied: u64,
}

/// Earliest `t` in `[t0, t1]` from which every `|v_k(t)| < bound` holds on a
/// following open sub-interval, where `v_k` interpolates linearly from
/// `vals0[k]` to `vals1[k]`. `None` when no open sub-interval of the segment
/// lies inside the target set.
fn entry_time(t0: f64, t1: f64, vals0: &[f64], vals1: &[f64], bound: f64) -> Option<f64> {
    debug_assert!(t1 > t0);
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    let h = t1 - t0;
    for (va, vb) in vals0.iter().zip(vals1) {
        if va.abs() < bound && vb.abs() < bound {
            // Linear and inside at both endpoints: inside on the whole
            // segment, no constraint.
            continue;
        }
        let s = (vb - va) / h;
        if s == 0.0 {
            return None; // constant and outside
        }
        let ta = t0 + (bound - va) / s;
        let tb = t0 + (-bound - va) / s;
        let (l, r) = if ta < tb { (ta, tb) } else { (tb, ta) };
        lo = lo.max(l);
        hi = hi.min(r);
        if lo >= hi {
            return None;
        }
    }
    let start = lo.max(t0);
    let end = hi.min(t1);
    if start < end {
        Some(start)
    } else {
        None
    }
}

struct Sampler<'g> {
    g: &'g Graph,
    samples: Vec<Sample>,
}

impl<'g> Sampler<'g> {
    fn push(&mut self, t: f64, x: Vec<f64>, u: Vec<f64>) {
        let v = 0.5 * self.g.laplacian_quadratic(&x).expect("state length matches graph");
        let w = spread(&x);
        self.samples.push(Sample { t, x, u, v, w });
    }

    fn last_t(&self) -> Option<f64> {
        self.samples.last().map(|s| s.t)
    }
}

fn spread(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let mut lo = x[0];
    let mut hi = x[0];
    for &v in &x[1..] {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    hi - lo
}

/// Drive `model` forward until it freezes, the horizon is reached, or the
/// event cap trips. Returns the trace (samples at every event time plus the
/// uniform grid) and the run outcome.
pub fn run(model: &mut dyn Model, g: &Graph, opts: &RunOptions) -> Result<(Trace, RunOutcome), EngineError> {
    opts.validate()?;
    let mut queue = EventQueue::new();
    model.init(&mut queue)?;

    let mut sampler = Sampler {
        g,
        samples: Vec::new(),
    };
    let mut events_log: Vec<TraceEvent> = Vec::new();

    let target = model.target();
    let mut last_vals: Option<Vec<f64>> = target.map(|ts| target_values(ts.kind, g, model.x()));
    let mut entered: Option<f64> = None;
    if let (Some(ts), Some(vals)) = (target, last_vals.as_ref()) {
        if vals.iter().all(|v| v.abs() < ts.bound) {
            entered = Some(0.0);
        }
    }

    // If nothing fires at t = 0 (exotic models or edgeless graphs), still
    // record the initial state.
    if queue.peek_time() != Some(0.0) {
        sampler.push(0.0, model.x().to_vec(), model.node_controls());
    }

    let mut now = 0.0f64;
    let mut events_applied: u64 = 0;
    let mut t_freeze: Option<f64> = None;
    let exit;

    // Advance the continuous flow from `now` to `t_to`, recording grid
    // samples (read-only interpolants) and refining the entry time.
    macro_rules! advance_to {
        ($t_to:expr) => {{
            let t_to: f64 = $t_to;
            if t_to > now {
                let mut k = (now / opts.sample_dt).floor() as u64 + 1;
                loop {
                    let gt = k as f64 * opts.sample_dt;
                    if gt >= t_to {
                        break;
                    }
                    if gt > now {
                        let xg = model.state_at(now, gt);
                        sampler.push(gt, xg, model.node_controls());
                    }
                    k += 1;
                }
                let x1 = model.state_at(now, t_to);
                if let (Some(ts), Some(vals0)) = (target, last_vals.as_mut()) {
                    let vals1 = target_values(ts.kind, g, &x1);
                    if entered.is_none() {
                        entered = entry_time(now, t_to, vals0, &vals1, ts.bound);
                    }
                    *vals0 = vals1;
                }
                model.advance(now, t_to);
                now = t_to;
            }
        }};
    }

    loop {
        let Some(t_next) = queue.peek_time() else {
            // Queue drained. A model that schedules nothing (e.g. an
            // edgeless graph) is frozen where it stands; anything else is
            // simulated out to the horizon with its current drift.
            if model.is_frozen() {
                t_freeze = Some(now);
                exit = ExitReason::Frozen;
            } else {
                advance_to!(opts.horizon);
                exit = ExitReason::Horizon;
            }
            break;
        };
        if t_next > opts.horizon {
            advance_to!(opts.horizon);
            exit = ExitReason::Horizon;
            break;
        }
        if t_next < now || (events_applied > 0 && t_next == now) {
            return Err(EngineError::TimeNotAdvancing {
                t: t_next,
                prev: now,
            });
        }
        advance_to!(t_next);
        // `advance_to!` left `now == t_next` (they were already equal for
        // the opening batch at t = 0).
        let batch = queue.pop_batch()?;
        debug_assert_eq!(batch.time, now);
        model.jump(batch.time, &batch.events, &mut queue, &mut events_log)?;
        events_applied += batch.events.len() as u64;
        sampler.push(now, model.x().to_vec(), model.node_controls());
        if model.is_frozen() {
            t_freeze = Some(now);
            queue.clear();
            exit = ExitReason::Frozen;
            break;
        }
        if events_applied >= opts.max_events {
            exit = ExitReason::EventCap;
            break;
        }
    }

    if sampler.last_t() != Some(now) {
        sampler.push(now, model.x().to_vec(), model.node_controls());
    }

    // A frozen run is in the target set by definition; make sure an entry
    // time exists even if the crossing coincided with the freeze batch.
    if entered.is_none() && t_freeze.is_some() {
        entered = t_freeze;
    }

    Ok((
        Trace {
            samples: sampler.samples,
            events: events_log,
        },
        RunOutcome {
            exit,
            t_end: now,
            t_enter: entered,
            t_freeze,
            events_applied,
        },
    ))
}
