//! Edge-triggered (gossip) consensus.
//!
//! The clock lives on the edge, not the agent: when edge `{i, j}` fires,
//! the two endpoints exchange states (two messages), agree on the ternary
//! sign of their difference, and apply it antisymmetrically — `+u` to the
//! lower endpoint, `-u` to the higher — so every pairwise interaction
//! conserves the sum of states and the network average is invariant. An
//! agent's drift is the sum of its incident edge controls. The trigger is
//! the edge analogue of the node rule, scaled by the combined degree of the
//! endpoints because that many edges can pull on the pair at once.
//!
//! On two agents a single edge is the whole neighborhood and the protocol
//! coincides with the node-triggered one event for event.

use std::sync::Arc;

use crate::engine::{
    flow, Event, EventKind, EngineError, EventQueue, Model, Owner, TargetKind, TargetSpec,
    TraceEvent, TraceEventKind,
};
use crate::graph::Graph;
use crate::protocol::{check_eps, check_x0, ProtocolError};
use crate::quantize::{sign_eps_valid, Ternary};
use crate::schedule::{ratio_infimum, ScalarSchedule};

/// Inter-poll duration armed by edge `{i, j}` (endpoint degrees `d_i`,
/// `d_j`) that measured state difference `diff`: `|diff| / (2 (d_i + d_j))`
/// outside the deadzone, `eps / (2 (d_i + d_j))` inside it.
pub fn trigger_f_edge(diff: f64, d_i: usize, d_j: usize, eps: f64) -> f64 {
    debug_assert!(d_i + d_j > 0, "an edge's endpoints have positive degree");
    let denom = 2.0 * (d_i + d_j) as f64;
    if diff.abs() >= eps {
        diff.abs() / denom
    } else {
        eps / denom
    }
}

/// Node drift rates induced by the per-edge controls: edge `{i, j}` with
/// control `u` pushes `+u` on `i` and `-u` on `j`.
fn node_rates(g: &Graph, u_edge: &[Ternary]) -> Vec<f64> {
    let mut rates = vec![0.0; g.n()];
    for (e, &(i, j)) in g.edges().iter().enumerate() {
        let c = u_edge[e].as_f64();
        rates[i] += c;
        rates[j] -= c;
    }
    rates
}

// ---------------------------------------------------------------------------
// Fixed threshold
// ---------------------------------------------------------------------------

/// Edge-triggered protocol with a fixed deadzone threshold. Terminal set:
/// every edge difference strictly inside the deadzone.
#[derive(Debug, Clone)]
pub struct EdgeTriggered {
    g: Arc<Graph>,
    eps: f64,
    x: Vec<f64>,
    u_edge: Vec<Ternary>,
    rates: Vec<f64>,
}

impl EdgeTriggered {
    pub fn new(g: Arc<Graph>, eps: f64, x0: Vec<f64>) -> Result<Self, ProtocolError> {
        check_eps(eps)?;
        check_x0(g.n(), &x0)?;
        let u_edge = vec![Ternary::Zero; g.m()];
        let rates = vec![0.0; g.n()];
        Ok(EdgeTriggered {
            g,
            eps,
            x: x0,
            u_edge,
            rates,
        })
    }
}

impl Model for EdgeTriggered {
    fn n(&self) -> usize {
        self.g.n()
    }

    fn x(&self) -> &[f64] {
        &self.x
    }

    fn node_controls(&self) -> Vec<f64> {
        self.rates.clone()
    }

    fn init(&mut self, queue: &mut EventQueue) -> Result<(), EngineError> {
        for e in 0..self.g.m() {
            queue.push(0.0, EventKind::EdgePoll { edge: e })?;
        }
        Ok(())
    }

    fn state_at(&self, t0: f64, t1: f64) -> Vec<f64> {
        flow(&self.x, &self.rates, t0, t1, None).expect("validated state cannot fail to flow")
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
            let EventKind::EdgePoll { edge: e } = ev.kind else {
                unreachable!("edge-triggered protocols only schedule edge polls");
            };
            let (i, j) = self.g.edges()[e];
            let diff = self.x[j] - self.x[i];
            let before = self.u_edge[e];
            let after = sign_eps_valid(diff, self.eps);
            let wait = trigger_f_edge(diff, self.g.degree(i), self.g.degree(j), self.eps);
            queue.push(t + wait, EventKind::EdgePoll { edge: e })?;
            self.u_edge[e] = after;
            log.push(TraceEvent {
                t,
                kind: TraceEventKind::EdgePoll,
                owner: Owner::Edge(e),
                measured: diff,
                control_before: before.as_i8(),
                control_after: after.as_i8(),
                next_wait: wait,
                messages: 2,
            });
        }
        self.rates = node_rates(&self.g, &self.u_edge);
        Ok(())
    }

    fn is_frozen(&self) -> bool {
        self.u_edge.iter().all(|u| u.is_zero())
            && self
                .g
                .edges()
                .iter()
                .all(|&(i, j)| (self.x[j] - self.x[i]).abs() < self.eps)
    }

    fn target(&self) -> Option<TargetSpec> {
        Some(TargetSpec {
            kind: TargetKind::EdgeDiff,
            bound: self.eps,
        })
    }

    fn freeze_tail(&self) -> Option<Vec<f64>> {
        // Per edge, in edge order.
        Some(
            self.g
                .edges()
                .iter()
                .map(|&(i, j)| trigger_f_edge(0.0, self.g.degree(i), self.g.degree(j), self.eps))
                .collect(),
        )
    }
}

// ---------------------------------------------------------------------------
// Time-varying threshold and gain
// ---------------------------------------------------------------------------

/// Certified dwell floors for the time-varying edge protocol.
#[derive(Debug, Clone, Copy)]
pub struct EdgeDwellFloors {
    /// `inf_t ε(t) / (2 (d_i + d_j) γ(t))`, minimized over edges — the floor
    /// the per-edge trigger actually guarantees.
    pub per_edge: f64,
    /// The coarser node-degree form `inf_t ε(t) / (4 d_max γ(t))`, reported
    /// for comparison with the node-triggered bound.
    pub node_form: f64,
}

/// Exact dwell floors for edge polls under schedules `ε(t)`, `γ(t)`. Both
/// must decay to zero and their ratio must stay away from zero. An edgeless
/// graph never polls; its floors are infinite.
pub fn certified_edge_dwell_floors(
    eps: &ScalarSchedule,
    gamma: &ScalarSchedule,
    g: &Graph,
) -> Result<EdgeDwellFloors, ProtocolError> {
    let must = |what: &str, s: &ScalarSchedule| -> Result<(), ProtocolError> {
        s.validate().map_err(|source| ProtocolError::Schedule {
            what: what.to_string(),
            source,
        })?;
        if !s.decays_to_zero() {
            return Err(ProtocolError::MustDecay {
                what: what.to_string(),
            });
        }
        Ok(())
    };
    must("threshold schedule", eps)?;
    must("gain schedule", gamma)?;

    let max_pair = g
        .edges()
        .iter()
        .map(|&(i, j)| g.degree(i) + g.degree(j))
        .max();
    let Some(max_pair) = max_pair else {
        return Ok(EdgeDwellFloors {
            per_edge: f64::INFINITY,
            node_form: f64::INFINITY,
        });
    };
    let r = ratio_infimum(eps, gamma);
    let floors = EdgeDwellFloors {
        per_edge: r / (2.0 * max_pair as f64),
        node_form: r / (4.0 * g.d_max() as f64),
    };
    if !(floors.per_edge > 0.0) {
        return Err(ProtocolError::ZenoProne {
            what: "the threshold/gain pair".to_string(),
        });
    }
    Ok(floors)
}

/// Edge-triggered protocol with vanishing threshold and gain: flows are
/// `ẋ_i = γ(t) Σ incident edge controls` and a poll at `t` arms the edge
/// clock with its trigger duration divided by `γ(t)`. As in the node
/// time-varying protocol, only exact pairwise agreement freezes.
#[derive(Debug, Clone)]
pub struct EdgeTriggeredTimeVarying {
    g: Arc<Graph>,
    eps: ScalarSchedule,
    gamma: ScalarSchedule,
    x: Vec<f64>,
    u_edge: Vec<Ternary>,
    rates: Vec<f64>,
}

impl EdgeTriggeredTimeVarying {
    pub fn new(
        g: Arc<Graph>,
        eps: ScalarSchedule,
        gamma: ScalarSchedule,
        x0: Vec<f64>,
    ) -> Result<Self, ProtocolError> {
        certified_edge_dwell_floors(&eps, &gamma, &g)?;
        check_x0(g.n(), &x0)?;
        let u_edge = vec![Ternary::Zero; g.m()];
        let rates = vec![0.0; g.n()];
        Ok(EdgeTriggeredTimeVarying {
            g,
            eps,
            gamma,
            x: x0,
            u_edge,
            rates,
        })
    }
}

impl Model for EdgeTriggeredTimeVarying {
    fn n(&self) -> usize {
        self.g.n()
    }

    fn x(&self) -> &[f64] {
        &self.x
    }

    fn node_controls(&self) -> Vec<f64> {
        self.rates.clone()
    }

    fn init(&mut self, queue: &mut EventQueue) -> Result<(), EngineError> {
        for e in 0..self.g.m() {
            queue.push(0.0, EventKind::EdgePoll { edge: e })?;
        }
        Ok(())
    }

    fn state_at(&self, t0: f64, t1: f64) -> Vec<f64> {
        flow(&self.x, &self.rates, t0, t1, Some(&self.gamma))
            .expect("validated state cannot fail to flow")
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
            let EventKind::EdgePoll { edge: e } = ev.kind else {
                unreachable!("edge-triggered protocols only schedule edge polls");
            };
            let eps_t = self.eps.value(t)?;
            let gamma_t = self.gamma.value(t)?;
            let (i, j) = self.g.edges()[e];
            let diff = self.x[j] - self.x[i];
            let before = self.u_edge[e];
            let after = sign_eps_valid(diff, eps_t);
            let wait =
                trigger_f_edge(diff, self.g.degree(i), self.g.degree(j), eps_t) / gamma_t;
            queue.push(t + wait, EventKind::EdgePoll { edge: e })?;
            self.u_edge[e] = after;
            log.push(TraceEvent {
                t,
                kind: TraceEventKind::EdgePoll,
                owner: Owner::Edge(e),
                measured: diff,
                control_before: before.as_i8(),
                control_after: after.as_i8(),
                next_wait: wait,
                messages: 2,
            });
        }
        self.rates = node_rates(&self.g, &self.u_edge);
        Ok(())
    }

    fn is_frozen(&self) -> bool {
        self.u_edge.iter().all(|u| u.is_zero())
            && self
                .g
                .edges()
                .iter()
                .all(|&(i, j)| self.x[j] - self.x[i] == 0.0)
    }

    fn target(&self) -> Option<TargetSpec> {
        None
    }

    fn freeze_tail(&self) -> Option<Vec<f64>> {
        None
    }
}
