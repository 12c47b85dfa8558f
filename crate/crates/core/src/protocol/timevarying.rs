//! Node-triggered consensus with time-varying thresholds and gains.
//!
//! The deadzone threshold `ε(t)` and the drift gain `γ(t)` both vanish as
//! `t → ∞`, so the protocol keeps refining agreement instead of stopping at
//! a fixed resolution. The price is that freezing is no longer generic —
//! controls only stay at zero on exact agreement — and that convergence
//! hinges on the gain's total integral: agents can only ever travel
//! `∫ γ` from where they started, so a convergent gain integral strands
//! them. Polling stays Zeno-free whenever the trigger-to-gain ratio is
//! bounded away from zero, which [`certified_dwell_floor`] certifies with an
//! exact infimum over the supported schedule families.
//!
//! [`TimeVarying`] shares one `(ε, γ)` pair across all agents;
//! [`TimeVaryingNonUniform`] gives every agent its own pair and scales each
//! trigger by the combined gain capacity of its neighborhood.

use std::sync::Arc;

use crate::engine::{
    flow, Event, EventKind, EngineError, EventQueue, Model, Owner, TargetSpec, TraceEvent,
    TraceEventKind,
};
use crate::graph::Graph;
use crate::protocol::node::ave;
use crate::protocol::{check_x0, ProtocolError};
use crate::quantize::{sign_eps_valid, Ternary};
use crate::schedule::{ratio_infimum, ScalarSchedule};

fn validated(
    what: &str,
    s: &ScalarSchedule,
    must_decay: bool,
    must_diverge: bool,
) -> Result<(), ProtocolError> {
    s.validate().map_err(|source| ProtocolError::Schedule {
        what: what.to_string(),
        source,
    })?;
    if must_decay && !s.decays_to_zero() {
        return Err(ProtocolError::MustDecay {
            what: what.to_string(),
        });
    }
    if must_diverge && !s.is_integral_divergent() {
        return Err(ProtocolError::MustDiverge {
            what: what.to_string(),
            total: s.total_integral(),
        });
    }
    Ok(())
}

/// Exact lower bound on inter-poll intervals for the uniform protocol:
/// `inf_t ε(t) / (4 d_max γ(t))`. Both schedules must decay to zero; a zero
/// infimum means the trigger shrinks faster than the gain and polling would
/// accumulate, so it is rejected as Zeno-prone.
pub fn certified_dwell_floor(
    eps: &ScalarSchedule,
    gamma: &ScalarSchedule,
    d_max: usize,
) -> Result<f64, ProtocolError> {
    validated("threshold schedule", eps, true, false)?;
    validated("gain schedule", gamma, true, false)?;
    let c = ratio_infimum(eps, gamma) / (4.0 * d_max.max(1) as f64);
    if !(c > 0.0) {
        return Err(ProtocolError::ZenoProne {
            what: "the threshold/gain pair".to_string(),
        });
    }
    Ok(c)
}

/// Per-agent exact dwell floors for the non-uniform protocol:
/// `c_i = inf_t ε_i(t) / (2 Γ_i(t))` where `Γ_i = Σ_{j ∈ N_i} (γ_j + γ_i)`
/// is the neighborhood gain capacity. Requires every threshold and gain to
/// decay to zero with a divergent integral, and the gains around each agent
/// to share one decay shape so `Γ_i` stays inside the schedule algebra.
/// Isolated agents never poll; their floor is reported as infinite.
pub fn certified_dwell_floors(
    eps: &[ScalarSchedule],
    gamma: &[ScalarSchedule],
    g: &Graph,
) -> Result<Vec<f64>, ProtocolError> {
    let n = g.n();
    if eps.len() != n {
        return Err(ProtocolError::ScheduleCount {
            what: "thresholds",
            expected: n,
            got: eps.len(),
        });
    }
    if gamma.len() != n {
        return Err(ProtocolError::ScheduleCount {
            what: "gains",
            expected: n,
            got: gamma.len(),
        });
    }
    for (i, s) in eps.iter().enumerate() {
        validated(&format!("threshold schedule of agent {i}"), s, true, true)?;
    }
    for (i, s) in gamma.iter().enumerate() {
        validated(&format!("gain schedule of agent {i}"), s, true, true)?;
    }

    let mut floors = Vec::with_capacity(n);
    for (i, eps_i) in eps.iter().enumerate() {
        let cap = match neighborhood_capacity(gamma, g, i) {
            Ok(None) => {
                floors.push(f64::INFINITY);
                continue;
            }
            Ok(Some(cap)) => cap,
            Err(e) => return Err(e),
        };
        let c = ratio_infimum(eps_i, &cap) / 2.0;
        if !(c > 0.0) {
            return Err(ProtocolError::ZenoProne {
                what: format!("agent {i}'s threshold/capacity pair"),
            });
        }
        floors.push(c);
    }
    Ok(floors)
}

/// `Γ_i = Σ_{j ∈ N_i} (γ_j + γ_i)` as a schedule, or `None` for an isolated
/// agent (empty sum).
fn neighborhood_capacity(
    gamma: &[ScalarSchedule],
    g: &Graph,
    i: usize,
) -> Result<Option<ScalarSchedule>, ProtocolError> {
    let nbrs = g.neighbors(i);
    if nbrs.is_empty() {
        return Ok(None);
    }
    let mut terms: Vec<ScalarSchedule> = nbrs.iter().map(|&j| gamma[j]).collect();
    terms.extend(std::iter::repeat_n(gamma[i], nbrs.len()));
    match ScalarSchedule::sum_same_shape(&terms) {
        Some(cap) => Ok(Some(cap)),
        None => Err(ProtocolError::MixedGainFamilies { agent: i }),
    }
}

/// Trigger numerator shared by the time-varying protocols: half the
/// measured disagreement outside the deadzone, half the threshold inside.
fn fbar(measured: f64, eps_t: f64) -> f64 {
    if measured.abs() >= eps_t {
        measured.abs() / 2.0
    } else {
        eps_t / 2.0
    }
}

// ---------------------------------------------------------------------------
// Uniform schedules
// ---------------------------------------------------------------------------

/// All agents share one threshold schedule `ε(t)` and one gain schedule
/// `γ(t)`; flows are `ẋ_i = γ(t) u_i` and a poll at `t` arms the next one
/// `f(ave, ε(t)) / γ(t)` later.
#[derive(Debug, Clone)]
pub struct TimeVarying {
    g: Arc<Graph>,
    eps: ScalarSchedule,
    gamma: ScalarSchedule,
    x: Vec<f64>,
    u: Vec<Ternary>,
}

impl TimeVarying {
    pub fn new(
        g: Arc<Graph>,
        eps: ScalarSchedule,
        gamma: ScalarSchedule,
        x0: Vec<f64>,
    ) -> Result<Self, ProtocolError> {
        certified_dwell_floor(&eps, &gamma, g.d_max())?;
        check_x0(g.n(), &x0)?;
        let u = vec![Ternary::Zero; g.n()];
        Ok(TimeVarying {
            g,
            eps,
            gamma,
            x: x0,
            u,
        })
    }
}

impl Model for TimeVarying {
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
        flow(&self.x, &rates, t0, t1, Some(&self.gamma))
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
            let EventKind::Poll { agent: i } = ev.kind else {
                unreachable!("node-triggered protocols only schedule polls");
            };
            let eps_t = self.eps.value(t)?;
            let gamma_t = self.gamma.value(t)?;
            let m = ave(&self.x, &self.g, i);
            let before = self.u[i];
            let after = sign_eps_valid(m, eps_t);
            let d = self.g.degree(i);
            let wait = crate::protocol::node::trigger_f(m, d, eps_t) / gamma_t;
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
        // With a vanishing threshold only exact agreement is absorbing: any
        // nonzero disagreement eventually re-crosses ε(t).
        self.u.iter().all(|u| u.is_zero())
            && (0..self.g.n()).all(|i| ave(&self.x, &self.g, i) == 0.0)
    }

    fn target(&self) -> Option<TargetSpec> {
        None
    }

    fn freeze_tail(&self) -> Option<Vec<f64>> {
        None
    }
}

// ---------------------------------------------------------------------------
// Per-agent schedules
// ---------------------------------------------------------------------------

/// Every agent runs its own `(ε_i, γ_i)` pair; flows are `ẋ_i = γ_i(t) u_i`
/// and the trigger divides half the measurement (or half the threshold) by
/// the neighborhood gain capacity `Γ_i(t)` evaluated at the poll.
#[derive(Debug, Clone)]
pub struct TimeVaryingNonUniform {
    g: Arc<Graph>,
    eps: Vec<ScalarSchedule>,
    gamma: Vec<ScalarSchedule>,
    /// `Γ_i` per agent; `None` for isolated agents, which never poll.
    caps: Vec<Option<ScalarSchedule>>,
    x: Vec<f64>,
    u: Vec<Ternary>,
}

impl TimeVaryingNonUniform {
    pub fn new(
        g: Arc<Graph>,
        eps: Vec<ScalarSchedule>,
        gamma: Vec<ScalarSchedule>,
        x0: Vec<f64>,
    ) -> Result<Self, ProtocolError> {
        certified_dwell_floors(&eps, &gamma, &g)?;
        check_x0(g.n(), &x0)?;
        let caps = (0..g.n())
            .map(|i| neighborhood_capacity(&gamma, &g, i))
            .collect::<Result<Vec<_>, _>>()?;
        let u = vec![Ternary::Zero; g.n()];
        Ok(TimeVaryingNonUniform {
            g,
            eps,
            gamma,
            caps,
            x: x0,
            u,
        })
    }
}

impl Model for TimeVaryingNonUniform {
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
            if !self.g.neighbors(i).is_empty() {
                queue.push(0.0, EventKind::Poll { agent: i })?;
            }
        }
        Ok(())
    }

    fn state_at(&self, t0: f64, t1: f64) -> Vec<f64> {
        (0..self.g.n())
            .map(|i| {
                let dx = self
                    .gamma[i]
                    .integral(t0, t1)
                    .expect("validated state cannot fail to flow");
                self.x[i] + self.u[i].as_f64() * dx
            })
            .collect()
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
            let cap = self.caps[i]
                .as_ref()
                .expect("isolated agents never schedule polls");
            let eps_t = self.eps[i].value(t)?;
            let cap_t = cap.value(t)?;
            let m = ave(&self.x, &self.g, i);
            let before = self.u[i];
            let after = sign_eps_valid(m, eps_t);
            let d = self.g.degree(i);
            let wait = fbar(m, eps_t) / cap_t;
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
            && (0..self.g.n()).all(|i| ave(&self.x, &self.g, i) == 0.0)
    }

    fn target(&self) -> Option<TargetSpec> {
        None
    }

    fn freeze_tail(&self) -> Option<Vec<f64>> {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run, ExitReason, RunOptions};

    fn opts(horizon: f64) -> RunOptions {
        RunOptions {
            horizon,
            max_events: 1_000_000,
            sample_dt: 1000.0,
        }
    }

    fn hyp(a: f64, p: u8) -> ScalarSchedule {
        ScalarSchedule::hyperbolic(a, p).unwrap()
    }

    fn expo(a: f64, b: f64) -> ScalarSchedule {
        ScalarSchedule::exponential(a, b).unwrap()
    }

    #[test]
    fn dwell_floor_for_matched_hyperbolic_schedules() {
        // Same-shape schedules keep a constant ratio: 0.05 / 0.25 = 0.2,
        // divided by 4 d_max = 8 on a ring.
        let c = certified_dwell_floor(&hyp(0.05, 1), &hyp(0.25, 1), 2).unwrap();
        assert_eq!(c, 0.025);
        // Degree 0 falls back to d = 1.
        let c = certified_dwell_floor(&hyp(0.05, 1), &hyp(0.25, 1), 0).unwrap();
        assert_eq!(c, 0.05);
    }

    #[test]
    fn dwell_floor_rejects_non_decaying_and_zeno_prone_pairs() {
        let constant = ScalarSchedule::constant(0.1).unwrap();
        assert!(matches!(
            certified_dwell_floor(&constant, &hyp(0.25, 1), 2),
            Err(ProtocolError::MustDecay { .. })
        ));
        assert!(matches!(
            certified_dwell_floor(&hyp(0.05, 1), &constant, 2),
            Err(ProtocolError::MustDecay { .. })
        ));
        // Threshold decays exponentially against a hyperbolic gain: the
        // ratio tends to zero, so no positive dwell floor exists.
        assert!(matches!(
            certified_dwell_floor(&expo(1.0, 2.0), &hyp(1.0, 1), 2),
            Err(ProtocolError::ZenoProne { .. })
        ));
    }

    #[test]
    fn uniform_first_round_is_exact() {
        // Pair at -1/+1 with ε = 0.1/(1+t), γ = 0.5/(1+t): the first poll
        // waits (2/4) / 0.5 = 1 exactly, during which each agent travels
        // 0.5 ln 2.
        let g = Arc::new(Graph::from_edges(2, [(0, 1)]).unwrap());
        let mut model = TimeVarying::new(
            g.clone(),
            hyp(0.1, 1),
            hyp(0.5, 1),
            vec![-1.0, 1.0],
        )
        .unwrap();
        let (trace, _) = run(&mut model, &g, &opts(3.0)).unwrap();
        let polls = trace.poll_times(Owner::Agent(0));
        assert_eq!(polls[0], 0.0);
        assert_eq!(polls[1], 1.0);
        let at_one = trace.samples.iter().find(|s| s.t == 1.0).unwrap();
        let travelled = 0.5 * 2.0_f64.ln();
        assert_eq!(at_one.x[0], -1.0 + travelled);
        assert_eq!(at_one.x[1], 1.0 - travelled);
    }

    #[test]
    fn uniform_gaps_respect_the_certified_floor_and_agreement_improves() {
        let g = Arc::new(Graph::ring(5).unwrap());
        let eps = hyp(0.05, 1);
        let gamma = hyp(0.25, 1);
        let c = certified_dwell_floor(&eps, &gamma, g.d_max()).unwrap();
        let x0 = vec![1.6, -0.8, 0.3, -1.4, 0.9];
        let w0 = 1.6 - (-1.4);
        let mut model = TimeVarying::new(g.clone(), eps, gamma, x0).unwrap();
        let (trace, outcome) = run(&mut model, &g, &opts(300.0)).unwrap();
        assert_eq!(outcome.exit, ExitReason::Horizon);
        for i in 0..5 {
            let polls = trace.poll_times(Owner::Agent(i));
            assert!(polls.len() > 10);
            for pair in polls.windows(2) {
                assert!(
                    pair[1] - pair[0] >= c - 1e-12,
                    "gap {} below floor {c}",
                    pair[1] - pair[0]
                );
            }
        }
        let w_final = trace.samples.last().unwrap().w;
        assert!(w_final < w0 / 10.0, "w_final = {w_final}");
    }

    /// A gain with a finite integral strands the agents: each can travel at
    /// most ∫γ = 0.25, so a pair starting 2.5 apart stays at least 2 apart.
    #[test]
    fn convergent_gain_integral_prevents_consensus() {
        let g = Arc::new(Graph::from_edges(2, [(0, 1)]).unwrap());
        let gamma = hyp(0.25, 2);
        assert!(!gamma.is_integral_divergent());
        assert_eq!(gamma.total_integral(), 0.25);
        let mut model = TimeVarying::new(
            g.clone(),
            hyp(0.05, 1),
            gamma,
            vec![-1.25, 1.25],
        )
        .unwrap();
        let (trace, outcome) = run(&mut model, &g, &opts(100.0)).unwrap();
        assert_eq!(outcome.exit, ExitReason::Horizon);
        for s in &trace.samples {
            assert!(s.x[0] <= -1.0);
            assert!(s.x[1] >= 1.0);
            assert!(s.w >= 2.0);
        }
    }

    #[test]
    fn nonuniform_floors_and_rejections() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        // Γ_0 = γ_1 + γ_0 = 0.75/(1+t); c_0 = (0.05 / 0.75) / 2 = 1/30.
        let eps = vec![hyp(0.05, 1), hyp(0.05, 1)];
        let gamma = vec![hyp(0.5, 1), hyp(0.25, 1)];
        let floors = certified_dwell_floors(&eps, &gamma, &g).unwrap();
        assert!((floors[0] - 1.0 / 30.0).abs() < 1e-15);
        assert_eq!(floors[0], floors[1]);

        // Mixed gain families around an agent make Γ_i leave the schedule
        // algebra. The divergence screen already rejects every non-p=1
        // family, so the shape check is probed directly.
        let mixed = vec![hyp(0.5, 1), expo(0.25, 1.0)];
        assert!(matches!(
            neighborhood_capacity(&mixed, &g, 0),
            Err(ProtocolError::MixedGainFamilies { agent: 0 })
        ));
        assert!(matches!(
            certified_dwell_floors(&eps, &mixed, &g),
            Err(ProtocolError::MustDiverge { .. })
        ));

        // Integrals must diverge: a p = 2 threshold or an exponential gain
        // total a finite amount.
        let finite_eps = vec![hyp(0.05, 2), hyp(0.05, 1)];
        assert!(matches!(
            certified_dwell_floors(&finite_eps, &gamma, &g),
            Err(ProtocolError::MustDiverge { .. })
        ));
        let finite_gamma = vec![expo(0.5, 1.0), expo(0.25, 1.0)];
        assert!(matches!(
            certified_dwell_floors(&eps, &finite_gamma, &g),
            Err(ProtocolError::MustDiverge { .. })
        ));

        assert!(matches!(
            certified_dwell_floors(&eps[..1], &gamma, &g),
            Err(ProtocolError::ScheduleCount { .. })
        ));
    }

    #[test]
    fn nonuniform_isolated_agents_never_poll() {
        let g = Arc::new(Graph::from_edges(3, [(0, 1)]).unwrap());
        let eps = vec![hyp(0.05, 1); 3];
        let gamma = vec![hyp(0.25, 1); 3];
        let floors = certified_dwell_floors(&eps, &gamma, &g).unwrap();
        assert_eq!(floors[2], f64::INFINITY);
        let mut model =
            TimeVaryingNonUniform::new(g.clone(), eps, gamma, vec![-1.0, 1.0, 5.0]).unwrap();
        let (trace, _) = run(&mut model, &g, &opts(50.0)).unwrap();
        assert!(trace.poll_times(Owner::Agent(2)).is_empty());
        assert_eq!(model.x()[2], 5.0);
        assert!(!trace.poll_times(Owner::Agent(0)).is_empty());
    }

    #[test]
    fn nonuniform_pair_shrinks_disagreement() {
        let g = Arc::new(Graph::from_edges(2, [(0, 1)]).unwrap());
        let eps = vec![hyp(0.05, 1), hyp(0.02, 1)];
        let gamma = vec![hyp(0.5, 1), hyp(0.25, 1)];
        let floors = certified_dwell_floors(&eps, &gamma, &g).unwrap();
        let mut model =
            TimeVaryingNonUniform::new(g.clone(), eps, gamma, vec![-1.0, 1.0]).unwrap();
        let (trace, outcome) = run(&mut model, &g, &opts(400.0)).unwrap();
        assert_eq!(outcome.exit, ExitReason::Horizon);
        let w_final = trace.samples.last().unwrap().w;
        assert!(w_final < 0.2, "w_final = {w_final}");
        for (i, floor) in floors.iter().enumerate() {
            let polls = trace.poll_times(Owner::Agent(i));
            for pair in polls.windows(2) {
                assert!(pair[1] - pair[0] >= floor - 1e-12);
            }
        }
    }
}
