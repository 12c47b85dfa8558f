//! Turning a configuration into artifacts: run, verify, summarize.
//!
//! [`execute_run`] is the one entry point the command line, the sweep driver,
//! and the C ABI all share, so "the summary the library computes" and "the
//! summary in `summary.json`" are the same object by construction.

use std::sync::Arc;

use serde::Serialize;

use crate::analysis::{self, bound_report, verify_trace, BoundReport, MonitorReport};
use crate::config::{ConfigError, RunConfig};
use crate::engine::{run, ExitReason, Owner, RunOptions, RunOutcome, Trace, TraceEventKind};
use crate::graph::Graph;
use crate::protocol::node::Feasibility;
use crate::protocol::{ProtocolError, ProtocolSpec};

/// The certified no-Zeno constant(s) of a run, in the protocol's natural
/// granularity.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum DwellCertificate {
    /// Fixed-threshold protocols: the smallest per-owner floor.
    FloorMin { floor_min: f64 },
    /// One global constant shared by every agent.
    Uniform { c: f64 },
    /// Per-agent constants (`null` = unbounded, the agent never re-polls).
    PerAgent { c: Vec<f64> },
    /// Per-edge constant plus the coarser node-degree form for comparison.
    PerEdge { c_edge: f64, c_node: f64 },
}

fn dwell_certificate(g: &Graph, spec: &ProtocolSpec) -> DwellCertificate {
    match spec {
        ProtocolSpec::B { c, .. } => DwellCertificate::Uniform { c: *c },
        ProtocolSpec::BNonUniform { c, .. } => DwellCertificate::PerAgent { c: c.clone() },
        ProtocolSpec::CTv { c_edge, c_node, .. } => DwellCertificate::PerEdge {
            c_edge: *c_edge,
            c_node: *c_node,
        },
        _ => {
            let owners: Vec<Owner> = if spec.edge_triggered() {
                (0..g.m()).map(Owner::Edge).collect()
            } else {
                (0..g.n()).map(Owner::Agent).collect()
            };
            let floor_min = owners
                .into_iter()
                .map(|o| analysis::dwell_floor(g, spec, o))
                .fold(f64::INFINITY, f64::min);
            DwellCertificate::FloorMin { floor_min }
        }
    }
}

/// Everything a run reports besides the raw trace.
///
/// `c` is the largest zero-based poll index over owners at or before the
/// entry time, following the convention that an owner's polls are numbered
/// from zero; it is absent when the protocol has no target set or entry never
/// happened. `beta` is the consensus estimate — the state average at the end
/// of a converged run (for edge-triggered protocols exactly the conserved
/// initial average) — and absent otherwise.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub protocol: String,
    pub n: usize,
    pub m: usize,
    pub exit: ExitReason,
    pub converged: bool,
    pub t_end: f64,
    pub t_enter: Option<f64>,
    pub t_freeze: Option<f64>,
    pub c: Option<u64>,
    pub total_polls: u64,
    pub total_messages: u64,
    pub events_applied: u64,
    pub event_cap_hit: bool,
    pub beta: Option<f64>,
    pub w_initial: f64,
    pub w_final: f64,
    pub v_final: f64,
    /// Least-squares slope of `ln W` against `ln (1 + t)`; reported for the
    /// asymptotic protocols, where `W` decays like a power of time.
    pub w_trend_exponent: Option<f64>,
    pub w_target: Option<f64>,
    pub x_final: Vec<f64>,
    pub isolated_agents: Vec<usize>,
    /// Side conditions of the delay/quantization variants, when they apply.
    pub feasibility: Option<Feasibility>,
    pub dwell_certificate: DwellCertificate,
    /// Analytic per-owner re-poll period after the freeze (the engine does
    /// not simulate the infinite polling tail).
    pub freeze_tail: Option<Vec<f64>>,
    pub bound_report: Option<BoundReport>,
    pub monitors: MonitorReport,
}

/// A finished run: inputs, raw trace, and the derived summary.
pub struct RunArtifacts {
    pub graph: Arc<Graph>,
    pub spec: ProtocolSpec,
    pub trace: Trace,
    pub outcome: RunOutcome,
    pub summary: RunSummary,
}

/// Largest zero-based poll index over owners with `t ≤ t_cut`.
fn max_poll_index(trace: &Trace, t_cut: f64) -> u64 {
    let mut counts: std::collections::HashMap<Owner, u64> = std::collections::HashMap::new();
    for ev in &trace.events {
        if ev.t <= t_cut && ev.kind != TraceEventKind::Actuate {
            *counts.entry(ev.owner).or_insert(0) += 1;
        }
    }
    counts.values().map(|&c| c - 1).max().unwrap_or(0)
}

/// Least-squares slope of `ln W` vs `ln (1 + t)` over samples with `W > 0`.
fn w_trend_exponent(trace: &Trace) -> Option<f64> {
    let pts: Vec<(f64, f64)> = trace
        .samples
        .iter()
        .filter(|s| s.w > 0.0)
        .map(|s| ((1.0 + s.t).ln(), s.w.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let var: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if var == 0.0 {
        return None;
    }
    let cov: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(cov / var)
}

/// Build the graph and model from a config, simulate, verify, and summarize.
pub fn execute_run(cfg: &RunConfig) -> Result<RunArtifacts, ConfigError> {
    let graph = Arc::new(cfg.graph.build(&cfg.base_dir)?);
    let x0 = cfg.x0.resolve(graph.n())?;
    let (spec, mut model) = cfg.protocol.build(&graph, x0.clone())?;
    let opts = RunOptions {
        horizon: cfg.horizon,
        max_events: cfg.max_events,
        sample_dt: cfg.sample_dt,
    };
    opts.validate()?;
    let (trace, outcome) = run(model.as_mut(), &graph, &opts)?;
    if let (Some(te), Some(tf)) = (outcome.t_enter, outcome.t_freeze) {
        assert!(te <= tf, "entry after freeze: {te} > {tf}");
    }

    let monitors = verify_trace(&graph, &spec, &trace, &outcome);
    let report = match &spec {
        ProtocolSpec::A { eps } | ProtocolSpec::C { eps } => {
            Some(bound_report(&graph, &x0, *eps, &trace, &outcome))
        }
        _ => None,
    };

    let last = trace.samples.last().expect("a run always samples");
    let first = trace.samples.first().expect("a run always samples");
    let asymptotic = matches!(
        spec,
        ProtocolSpec::B { .. } | ProtocolSpec::BNonUniform { .. } | ProtocolSpec::CTv { .. }
    );
    let w_target = cfg.protocol.w_target();
    let frozen = outcome.exit == ExitReason::Frozen;
    let converged = if asymptotic {
        frozen || w_target.map(|wt| last.w <= wt).unwrap_or(false)
    } else {
        frozen
    };
    let beta = if converged {
        Some(last.x.iter().sum::<f64>() / last.x.len().max(1) as f64)
    } else {
        None
    };
    let feasibility = match &spec {
        ProtocolSpec::ADelay { feasibility, .. } | ProtocolSpec::AQuant { feasibility, .. } => {
            Some(feasibility.clone())
        }
        _ => None,
    };

    let summary = RunSummary {
        protocol: spec.id().to_string(),
        n: graph.n(),
        m: graph.m(),
        exit: outcome.exit,
        converged,
        t_end: outcome.t_end,
        t_enter: outcome.t_enter,
        t_freeze: outcome.t_freeze,
        c: outcome.t_enter.map(|te| max_poll_index(&trace, te)),
        total_polls: trace
            .events
            .iter()
            .filter(|e| e.kind != TraceEventKind::Actuate)
            .count() as u64,
        total_messages: trace.events.iter().map(|e| e.messages).sum(),
        events_applied: outcome.events_applied,
        event_cap_hit: outcome.exit == ExitReason::EventCap,
        beta,
        w_initial: first.w,
        w_final: last.w,
        v_final: last.v,
        w_trend_exponent: if asymptotic {
            w_trend_exponent(&trace)
        } else {
            None
        },
        w_target,
        x_final: last.x.clone(),
        isolated_agents: graph.isolated_nodes(),
        feasibility,
        dwell_certificate: dwell_certificate(&graph, &spec),
        freeze_tail: if frozen { model.freeze_tail() } else { None },
        bound_report: report,
        monitors,
    };
    Ok(RunArtifacts {
        graph,
        spec,
        trace,
        outcome,
        summary,
    })
}

/// One sweep cell: the threshold and seed it ran with, plus the summary.
pub struct SweepRow {
    pub eps: f64,
    pub seed: u64,
    pub summary: RunSummary,
}

/// Run the `(eps × seed)` grid. Rows come back sorted by `(eps, seed)`
/// regardless of execution order; each seed reseeds the x0 draw.
pub fn execute_sweep(cfg: &RunConfig) -> Result<Vec<SweepRow>, ConfigError> {
    let sweep = cfg.sweep.as_ref().ok_or(ConfigError::NoSweep)?;
    if sweep.eps.is_empty() || sweep.seeds.is_empty() {
        return Err(ConfigError::EmptySweep);
    }
    let mut rows = Vec::with_capacity(sweep.eps.len() * sweep.seeds.len());
    for &eps in &sweep.eps {
        let protocol = cfg.protocol.with_eps(eps)?;
        for &seed in &sweep.seeds {
            let cell = RunConfig {
                protocol: protocol.clone(),
                x0: cfg.x0.reseeded(seed),
                sweep: None,
                ..cfg.clone()
            };
            let artifacts = execute_run(&cell)?;
            rows.push(SweepRow {
                eps,
                seed,
                summary: artifacts.summary,
            });
        }
    }
    rows.sort_by(|a, b| a.eps.total_cmp(&b.eps).then(a.seed.cmp(&b.seed)));
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Feasibility check (no simulation)
// ---------------------------------------------------------------------------

/// One line of a feasibility printout: a named condition or certified floor
/// together with its evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub satisfied: bool,
    pub detail: String,
}

/// Verdict on a configuration's convergence guarantees, computed without
/// simulating: dwell floors where they are unconditional, the robustness
/// margins where they are not. `feasible` is false when some printed
/// condition fails or no positive dwell floor can be certified.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub protocol: String,
    pub feasible: bool,
    pub lines: Vec<CheckLine>,
}

/// True for build failures that mean "no guarantee", not "malformed input":
/// a schedule pair whose trigger-to-gain ratio collapses, a schedule that
/// fails the decay or divergence requirements, or gains that mix shapes.
fn is_guarantee_failure(e: &ConfigError) -> bool {
    matches!(
        e,
        ConfigError::Protocol(
            ProtocolError::MustDecay { .. }
                | ProtocolError::MustDiverge { .. }
                | ProtocolError::ZenoProne { .. }
                | ProtocolError::MixedGainFamilies { .. }
        )
    )
}

fn floor_line(name: &str, floor: f64) -> CheckLine {
    CheckLine {
        name: name.to_string(),
        satisfied: floor > 0.0,
        detail: format!("{floor}"),
    }
}

fn condition_lines(f: &Feasibility) -> Vec<CheckLine> {
    f.conditions
        .iter()
        .map(|c| CheckLine {
            name: c.name.clone(),
            satisfied: c.satisfied,
            detail: format!("lhs = {}, rhs = {}, margin = {}", c.lhs, c.rhs, c.margin),
        })
        .collect()
}

/// Evaluate the configured protocol's feasibility conditions and dwell
/// floors on the configured graph, without running anything. Malformed
/// parameters are errors; parameters that merely void the guarantees
/// produce a report with `feasible = false`.
pub fn check_config(cfg: &RunConfig) -> Result<CheckReport, ConfigError> {
    let g = Arc::new(cfg.graph.build(&cfg.base_dir)?);
    let x0 = cfg.x0.resolve(g.n())?;
    let spec = match cfg.protocol.build(&g, x0) {
        Ok((spec, _)) => spec,
        Err(e) if is_guarantee_failure(&e) => {
            return Ok(CheckReport {
                protocol: cfg.protocol.id().to_string(),
                feasible: false,
                lines: vec![CheckLine {
                    name: "no-Zeno certificate".to_string(),
                    satisfied: false,
                    detail: e.to_string(),
                }],
            });
        }
        Err(e) => return Err(e),
    };

    let agent_floor_min = || {
        (0..g.n())
            .map(|i| analysis::dwell_floor(&g, &spec, Owner::Agent(i)))
            .fold(f64::INFINITY, f64::min)
    };
    let (feasible, lines) = match &spec {
        ProtocolSpec::A { .. } => (true, vec![floor_line("dwell floor", agent_floor_min())]),
        ProtocolSpec::C { .. } => {
            let floor = (0..g.m())
                .map(|e| analysis::dwell_floor(&g, &spec, Owner::Edge(e)))
                .fold(f64::INFINITY, f64::min);
            (true, vec![floor_line("edge dwell floor", floor)])
        }
        ProtocolSpec::ADelay { feasibility, .. } | ProtocolSpec::AQuant { feasibility, .. } => {
            let mut lines = condition_lines(feasibility);
            lines.push(floor_line("dwell floor", agent_floor_min()));
            (feasibility.feasible, lines)
        }
        ProtocolSpec::B { c, .. } => (true, vec![floor_line("certified dwell floor", *c)]),
        ProtocolSpec::BNonUniform { c, .. } => {
            let finite_min = c.iter().copied().filter(|v| v.is_finite()).fold(
                f64::INFINITY,
                f64::min,
            );
            let isolated = c.iter().filter(|v| v.is_infinite()).count();
            let detail = if isolated > 0 {
                format!("{finite_min} ({isolated} isolated agents never poll)")
            } else {
                format!("{finite_min}")
            };
            (
                true,
                vec![CheckLine {
                    name: "certified per-agent dwell floor (minimum)".to_string(),
                    satisfied: true,
                    detail,
                }],
            )
        }
        ProtocolSpec::CTv { c_edge, c_node, .. } => (
            true,
            vec![
                floor_line("certified edge dwell floor", *c_edge),
                floor_line("node-degree form of the same floor", *c_node),
            ],
        ),
    };

    Ok(CheckReport {
        protocol: spec.id().to_string(),
        feasible,
        lines,
    })
}
