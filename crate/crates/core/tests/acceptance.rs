//! Acceptance gate: one test per criterion, each printing a PASS line with
//! the quantities it pinned. Tolerances are written into the assertions;
//! anything exact is asserted with `==` on the float.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stcsim::analysis::{in_deadzone, in_deadzone_relaxed, spread};
use stcsim::config::{
    DelayConfig, GraphConfig, ProtocolConfig, RatesConfig, RunConfig, UniformRates, UniformX0,
    X0Config,
};
use stcsim::engine::{ExitReason, Owner};
use stcsim::output::write_run_artifacts;
use stcsim::protocol::timevarying::certified_dwell_floor;
use stcsim::quantize::{q_uniform, sign_eps, Ternary};
use stcsim::runner::{execute_run, DwellCertificate, RunArtifacts};
use stcsim::schedule::ScalarSchedule;

fn base(graph: GraphConfig, protocol: ProtocolConfig, x0: X0Config) -> RunConfig {
    RunConfig {
        graph,
        protocol,
        x0,
        horizon: 100.0,
        max_events: 10_000_000,
        sample_dt: 0.1,
        out_dir: None,
        sweep: None,
        base_dir: PathBuf::new(),
    }
}

fn single_edge() -> GraphConfig {
    GraphConfig::Edges {
        n: 2,
        edges: vec![(0, 1)],
    }
}

fn hyp(a: f64, p: u8) -> ScalarSchedule {
    ScalarSchedule::hyperbolic(a, p).unwrap()
}

fn pass(criterion: u32, what: &str) {
    println!("acceptance criterion {criterion}: PASS - {what}");
}

/// The dyadic poll ladder of the symmetric two-agent run.
const LADDER: [f64; 8] = [
    0.0, 0.5, 0.75, 0.875, 0.9375, 0.96875, 0.984375, 0.9921875,
];

#[test]
fn criterion_01_two_node_oracle() {
    let cfg = base(
        single_edge(),
        ProtocolConfig::A { eps: 0.02 },
        X0Config::Explicit(vec![1.0, -1.0]),
    );
    execute_run(&cfg).unwrap(); // warm caches before timing
    let t0 = Instant::now();
    let artifacts = execute_run(&cfg).unwrap();
    let elapsed = t0.elapsed();

    for agent in 0..2 {
        assert_eq!(
            artifacts.trace.poll_times(Owner::Agent(agent)),
            LADDER.to_vec(),
            "poll times of agent {agent}"
        );
    }
    let s = &artifacts.summary;
    assert_eq!(s.x_final, vec![0.0078125, -0.0078125]);
    assert!((s.t_enter.unwrap() - 0.99).abs() <= 1e-12);
    assert_eq!(s.c, Some(6));
    assert_eq!(s.t_freeze, Some(0.9921875));
    assert!(s.monitors.all_passed);
    assert!(
        elapsed < Duration::from_millis(1),
        "run took {elapsed:?}, limit 1 ms"
    );
    pass(
        1,
        "dyadic poll ladder, final state +/-0.0078125, T_enter 0.99, C = 6, \
         T_freeze 0.9921875, under 1 ms",
    );
}

#[test]
fn criterion_02_edge_protocol_matches_on_a_pair() {
    let node = execute_run(&base(
        single_edge(),
        ProtocolConfig::A { eps: 0.02 },
        X0Config::Explicit(vec![1.0, -1.0]),
    ))
    .unwrap();
    let edge = execute_run(&base(
        single_edge(),
        ProtocolConfig::C { eps: 0.02 },
        X0Config::Explicit(vec![1.0, -1.0]),
    ))
    .unwrap();

    let times = |a: &RunArtifacts| {
        let mut t: Vec<f64> = a.trace.events.iter().map(|e| e.t).collect();
        t.dedup();
        t
    };
    assert_eq!(times(&node), LADDER.to_vec());
    assert_eq!(times(&edge), LADDER.to_vec());
    assert_eq!(node.summary.x_final, edge.summary.x_final);
    assert_eq!(node.summary.t_freeze, edge.summary.t_freeze);
    pass(
        2,
        "node- and edge-triggered runs share the event-time sequence and final state on a pair",
    );
}

#[test]
fn criterion_03_ring20_thresholds_within_bounds() {
    let mut w_final = Vec::new();
    for &eps in &[0.01, 0.001] {
        let mut cfg = base(
            GraphConfig::Ring { n: 20 },
            ProtocolConfig::A { eps },
            X0Config::Uniform(UniformX0 {
                lo: -1.0,
                hi: 1.0,
                seed: 2,
            }),
        );
        cfg.horizon = 400.0;
        let t0 = Instant::now();
        let artifacts = execute_run(&cfg).unwrap();
        let elapsed = t0.elapsed();
        let s = &artifacts.summary;
        assert!((1.5..2.1).contains(&s.w_initial), "seeded spread ~2");
        assert_eq!(s.exit, ExitReason::Frozen, "eps = {eps} converges");
        assert!(in_deadzone(&artifacts.graph, &s.x_final, eps));
        let b = s.bound_report.as_ref().unwrap();
        assert!(b.t_slack.unwrap() > 0.0, "entry-time bound with strict slack");
        assert!(b.c_slack.unwrap() > 0.0, "poll-count bound with strict slack");
        assert!(s.monitors.all_passed);
        assert!(
            elapsed < Duration::from_secs(5),
            "eps = {eps} took {elapsed:?}, limit 5 s"
        );
        w_final.push(s.w_final);
    }
    assert!(
        w_final[1] <= w_final[0],
        "sharper threshold leaves no more spread ({} vs {})",
        w_final[1],
        w_final[0]
    );
    pass(
        3,
        "ring(20) converges for eps 0.01 and 0.001 strictly inside the printed bounds, \
         finer threshold agrees at least as well, under 5 s each",
    );
}

#[test]
fn criterion_04_certified_dwell_constant_on_ring5() {
    let eps = hyp(0.05, 1);
    let gamma = hyp(0.25, 1);
    let g = GraphConfig::Ring { n: 5 }.build(&PathBuf::new()).unwrap();
    let c = certified_dwell_floor(&eps, &gamma, g.d_max()).unwrap();
    assert_eq!(c, 0.025);

    let mut cfg = base(
        GraphConfig::Ring { n: 5 },
        ProtocolConfig::B {
            eps_sched: eps,
            gamma_sched: gamma,
            w_target: None,
        },
        X0Config::Uniform(UniformX0 {
            lo: -1.0,
            hi: 1.0,
            seed: 3,
        }),
    );
    cfg.horizon = 50.0;
    let artifacts = execute_run(&cfg).unwrap();
    assert_eq!(
        artifacts.summary.dwell_certificate,
        DwellCertificate::Uniform { c: 0.025 }
    );
    let mut gaps = 0u32;
    for agent in 0..5 {
        let times = artifacts.trace.poll_times(Owner::Agent(agent));
        for w in times.windows(2) {
            assert!(
                w[1] - w[0] >= 0.025 - 1e-12,
                "gap {} below the certified floor",
                w[1] - w[0]
            );
            gaps += 1;
        }
    }
    assert!(gaps > 100, "enough polls to make the floor meaningful");
    assert!(artifacts.summary.monitors.all_passed);
    pass(
        4,
        "uniform time-varying run certifies exactly 0.025 and every observed \
         inter-poll gap respects it",
    );
}

#[test]
fn criterion_05_insufficient_gain_budget_never_agrees() {
    let mut cfg = base(
        single_edge(),
        ProtocolConfig::B {
            eps_sched: hyp(0.05, 1),
            gamma_sched: hyp(0.25, 2), // total actuation budget 0.25 per agent
            w_target: None,
        },
        X0Config::Explicit(vec![1.25, -1.25]),
    );
    cfg.horizon = 1000.0;
    let artifacts = execute_run(&cfg).unwrap();
    assert_eq!(artifacts.summary.exit, ExitReason::Horizon);
    for s in &artifacts.trace.samples {
        assert!(s.x[0] >= 1.0, "x_0 dipped to {} at t = {}", s.x[0], s.t);
        assert!(s.x[1] <= -1.0, "x_1 rose to {} at t = {}", s.x[1], s.t);
        assert!(spread(&s.x) >= 2.0);
    }
    assert!(artifacts.summary.monitors.all_passed);
    pass(
        5,
        "with a summable gain the pair stays at least 2 apart over a 10^3 horizon",
    );
}

#[test]
fn criterion_06_delay_and_skew_robustness_over_seeds() {
    let t0 = Instant::now();
    for seed in 0..20 {
        let mut cfg = base(
            GraphConfig::Ring { n: 5 },
            ProtocolConfig::ADelay {
                eps: 0.02,
                alpha: 0.3,
                tau_max: 0.001,
                delay_model: DelayConfig::Constant,
                rates: RatesConfig::Uniform(UniformRates { r_min: 0.9, seed }),
            },
            X0Config::Uniform(UniformX0 {
                lo: -1.0,
                hi: 1.0,
                seed: 1000 + seed,
            }),
        );
        cfg.horizon = 200.0;
        let artifacts = execute_run(&cfg).unwrap();
        let s = &artifacts.summary;
        assert!(s.feasibility.as_ref().unwrap().feasible);
        assert_eq!(s.exit, ExitReason::Frozen, "seed {seed} converges");
        assert!(
            in_deadzone(&artifacts.graph, &s.x_final, 0.02),
            "seed {seed} final state in the target set"
        );
        assert!(s.monitors.all_passed, "seed {seed} monitors");
    }
    let elapsed = t0.elapsed();
    assert!(
        elapsed < Duration::from_secs(10),
        "20 delayed runs took {elapsed:?}, limit 10 s"
    );
    pass(
        6,
        "constant actuation lag with skewed clocks converges into the target set \
         for 20/20 seeds under 10 s",
    );
}

#[test]
fn criterion_07_quantization_robustness_over_seeds() {
    for seed in 0..20 {
        let mut cfg = base(
            GraphConfig::Ring { n: 5 },
            ProtocolConfig::AQuant {
                eps: 0.02,
                alpha: 0.3,
                delta: 0.01,
                rates: RatesConfig::Uniform(UniformRates { r_min: 0.9, seed }),
            },
            X0Config::Uniform(UniformX0 {
                lo: -1.0,
                hi: 1.0,
                seed: 2000 + seed,
            }),
        );
        cfg.horizon = 200.0;
        let artifacts = execute_run(&cfg).unwrap();
        let s = &artifacts.summary;
        assert!(s.feasibility.as_ref().unwrap().feasible);
        assert_eq!(s.exit, ExitReason::Frozen, "seed {seed} converges");
        // Quantization relaxes the reachable set to twice the threshold.
        assert!(
            in_deadzone_relaxed(&artifacts.graph, &s.x_final, 0.02),
            "seed {seed} final state in the relaxed target set"
        );
        assert!(s.monitors.all_passed, "seed {seed} monitors");
    }
    pass(
        7,
        "quantized measurements converge into the doubled deadzone for 20/20 seeds",
    );
}

fn ensemble_graphs() -> Vec<GraphConfig> {
    let er = |n: usize, p: f64, seed: u64| GraphConfig::ErdosRenyi { n, p, seed };
    vec![
        GraphConfig::Ring { n: 3 },
        GraphConfig::Ring { n: 5 },
        GraphConfig::Ring { n: 8 },
        GraphConfig::Ring { n: 12 },
        GraphConfig::Ring { n: 20 },
        GraphConfig::Path { n: 2 },
        GraphConfig::Path { n: 4 },
        GraphConfig::Path { n: 9 },
        GraphConfig::Path { n: 15 },
        GraphConfig::Complete { n: 3 },
        GraphConfig::Complete { n: 4 },
        GraphConfig::Complete { n: 5 },
        GraphConfig::Complete { n: 8 },
        er(6, 0.5, 61),
        er(8, 0.6, 62),
        er(10, 0.4, 63),
        er(12, 0.3, 64),
        er(15, 0.3, 65),
        er(20, 0.2, 66),
        er(20, 0.35, 67),
    ]
}

/// Every protocol at feasible parameters scaled to the graph's degree.
fn ensemble_protocols(n: usize, d_max: usize) -> Vec<ProtocolConfig> {
    let eps = 0.05;
    let dm = d_max.max(1) as f64;
    let stagger = |lo: f64, step: f64| -> Vec<ScalarSchedule> {
        (0..n).map(|i| hyp(lo + step * (i % 5) as f64, 1)).collect()
    };
    vec![
        ProtocolConfig::A { eps },
        ProtocolConfig::ADelay {
            eps,
            alpha: 0.3,
            tau_max: eps / (8.0 * dm),
            delay_model: DelayConfig::Uniform { seed: 7 },
            rates: RatesConfig::Uniform(UniformRates { r_min: 0.9, seed: 8 }),
        },
        ProtocolConfig::AQuant {
            eps,
            alpha: 0.3,
            delta: eps / dm,
            rates: RatesConfig::Uniform(UniformRates { r_min: 0.9, seed: 9 }),
        },
        ProtocolConfig::B {
            eps_sched: hyp(0.05, 1),
            gamma_sched: hyp(0.25, 1),
            w_target: None,
        },
        ProtocolConfig::BNonUniform {
            eps_sched: stagger(0.04, 0.002),
            gamma_sched: stagger(0.4, 0.02),
            w_target: None,
        },
        ProtocolConfig::C { eps },
        ProtocolConfig::CTv {
            eps_sched: hyp(0.05, 1),
            gamma_sched: hyp(0.25, 1),
            w_target: None,
        },
    ]
}

#[test]
fn criterion_08_randomized_ensemble_has_zero_monitor_violations() {
    let t0 = Instant::now();
    let mut runs = 0u32;
    for graph in ensemble_graphs() {
        let g = Arc::new(graph.build(&PathBuf::new()).unwrap());
        for protocol in ensemble_protocols(g.n(), g.d_max()) {
            // Fixed-threshold runs freeze on their own; asymptotic runs get a
            // short horizon, which the invariants do not depend on.
            let horizon = match &protocol {
                ProtocolConfig::B { .. }
                | ProtocolConfig::BNonUniform { .. }
                | ProtocolConfig::CTv { .. } => 10.0,
                _ => 100.0,
            };
            for seed in 0..5 {
                let mut cfg = base(
                    graph.clone(),
                    protocol.clone(),
                    X0Config::Uniform(UniformX0 {
                        lo: -1.0,
                        hi: 1.0,
                        seed,
                    }),
                );
                cfg.horizon = horizon;
                let artifacts = execute_run(&cfg).unwrap();
                let s = &artifacts.summary;
                assert!(!s.event_cap_hit);
                assert!(
                    s.monitors.all_passed,
                    "violations {:?} for {:?} / {:?} / seed {seed}",
                    s.monitors.violations(),
                    graph,
                    s.protocol,
                );
                runs += 1;
            }
        }
    }
    let elapsed = t0.elapsed();
    assert_eq!(runs, 20 * 7 * 5);
    assert!(
        elapsed < Duration::from_secs(60),
        "{runs} runs took {elapsed:?}, limit 60 s"
    );
    pass(
        8,
        "700 runs across 20 graphs, 7 protocols, 5 seeds: zero monitor violations under 60 s",
    );
}

#[test]
fn criterion_09_quantizer_and_schedule_unit_properties() {
    // The threshold itself is active: the deadzone is the open interval.
    assert_eq!(sign_eps(0.5, 0.5).unwrap(), Ternary::Plus);
    assert_eq!(sign_eps(-0.5, 0.5).unwrap(), Ternary::Minus);
    assert_eq!(sign_eps(0.5 - 1e-12, 0.5).unwrap(), Ternary::Zero);
    assert_eq!(sign_eps(-0.5 + 1e-12, 0.5).unwrap(), Ternary::Zero);
    assert_eq!(sign_eps(0.0, 0.5).unwrap(), Ternary::Zero);

    // Uniform quantizer error stays within half a step over 10^6 samples.
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..1_000_000u32 {
        let x: f64 = rng.random_range(-100.0..100.0);
        let delta: f64 = rng.random_range(1e-6..10.0);
        let q = q_uniform(x, delta).unwrap();
        assert!((q - x).abs() <= delta / 2.0, "x = {x}, delta = {delta}");
    }

    // Integrals are additive to 1e-12 and match quadrature to 1e-9.
    let schedules = [
        hyp(0.7, 1),
        hyp(0.25, 2),
        ScalarSchedule::exponential(0.5, 0.8).unwrap(),
        ScalarSchedule::constant(0.35).unwrap(),
    ];
    for s in &schedules {
        for (a, b, c) in [(0.0, 1.3, 4.0), (0.2, 2.7, 9.5), (1.0, 1.0, 2.0)] {
            let split = s.integral(a, b).unwrap() + s.integral(b, c).unwrap();
            let whole = s.integral(a, c).unwrap();
            assert!((split - whole).abs() <= 1e-12);
        }
        // Simpson's rule on [0, 5].
        let (a, b, steps) = (0.0, 5.0, 100_000u32);
        let h = (b - a) / steps as f64;
        let mut acc = s.value(a).unwrap() + s.value(b).unwrap();
        for k in 1..steps {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * s.value(a + k as f64 * h).unwrap();
        }
        let quad = acc * h / 3.0;
        let exact = s.integral(a, b).unwrap();
        assert!(
            (quad - exact).abs() <= 1e-9,
            "quadrature {quad} vs closed form {exact}"
        );
    }
    pass(
        9,
        "threshold boundary is active, quantizer error <= delta/2 over 10^6 samples, \
         integral additivity to 1e-12, quadrature agreement to 1e-9",
    );
}

#[test]
fn criterion_10_repeated_runs_are_byte_identical() {
    for &eps in &[0.01, 0.001] {
        let mut cfg = base(
            GraphConfig::Ring { n: 20 },
            ProtocolConfig::A { eps },
            X0Config::Uniform(UniformX0 {
                lo: -1.0,
                hi: 1.0,
                seed: 2,
            }),
        );
        cfg.horizon = 400.0;
        let dir = tempfile::tempdir().unwrap();
        let first = dir.path().join("first");
        let second = dir.path().join("second");
        write_run_artifacts(&first, &execute_run(&cfg).unwrap()).unwrap();
        write_run_artifacts(&second, &execute_run(&cfg).unwrap()).unwrap();
        let a = std::fs::read(first.join("trace.csv")).unwrap();
        let b = std::fs::read(second.join("trace.csv")).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "eps = {eps} traces differ between runs");
    }
    pass(10, "re-running the threshold study reproduces trace.csv byte for byte");
}
