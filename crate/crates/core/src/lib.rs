//! Exact event-driven simulation and verification of self-triggered
//! consensus protocols with ternary controls.
//!
//! Agents (or edges) poll at self-scheduled instants, quantize what they
//! measure to `{-1, 0, +1}`, and coast in between, so every trajectory is
//! piecewise linear and can be simulated exactly: the engine advances in
//! closed form from event to event and never integrates numerically.
//! Alongside simulation, the crate verifies what the protocols promise —
//! dwell-time floors, monotone disagreement, deadzone capture, convergence
//! and cost bounds — against the traces it produces.
//!
//! Modules:
//!
//! * [`graph`] — undirected simple graphs, parsing and generators.
//! * [`schedule`] — time-varying gain/threshold schedules with exact
//!   integrals and ratio infima.
//! * [`quantize`] — ternary deadzone sign and uniform quantizer.
//! * [`engine`] — event queue, hybrid run loop, traces.
//! * [`protocol`] — the protocol family itself.
//! * [`analysis`] — disagreement functionals, cost bounds, and the
//!   post-hoc verification monitors.
//! * [`config`] — the JSON run configuration and its resolution.
//! * [`runner`] — configuration in, verified artifacts out; sweeps and
//!   feasibility checks.
//! * [`output`] — CSV/JSON artifact writers.
//! * [`cli`] — the `stcsim` command-line front end.

// Validation throughout uses `!(x > 0.0)`-style negations on purpose: unlike
// `x <= 0.0`, they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod config;
pub mod engine;
pub mod graph;
pub mod output;
pub mod protocol;
pub mod quantize;
pub mod runner;
pub mod schedule;
