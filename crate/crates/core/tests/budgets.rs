//! Sub-TG partitioning, bridges and segment-pool fallback.

mod common;

use common::*;
use gridrpq::config::Fault;
use gridrpq::workload::RPQ_SHAPES;
use gridrpq::{EngineConfig, Error, EpsilonPairs, ExecutionPlan, LgfStore, PlanVariant};

#[test]
fn fixture_sub_tgs_match_the_unconstrained_run() {
    let store = fixture_store();
    let base = run(&store, "abc*", PlanVariant::Forward, &fixture_config());
    for budget in (100..=400).step_by(2) {
        let config = EngineConfig {
            input_buffer_bytes: budget,
            ..fixture_config()
        };
        let out = run(&store, "abc*", PlanVariant::Forward, &config);
        assert_eq!(out.pairs, base.pairs, "input budget {budget}");
        assert_eq!(out.stats.segments_leaked, 0);
    }
    let tight = EngineConfig {
        input_buffer_bytes: 110,
        ..fixture_config()
    };
    assert_eq!(run(&store, "abc*", PlanVariant::Forward, &tight).stats.sub_tgs, 3);
}

#[test]
fn skipping_bridges_loses_pairs() {
    let store = fixture_store();
    let config = EngineConfig {
        input_buffer_bytes: 110,
        fault: Some(Fault::SkipBridge),
        ..fixture_config()
    };
    let faulty = run(&store, "abc*", PlanVariant::Forward, &config).pairs;
    let full = run(&store, "abc*", PlanVariant::Forward, &fixture_config()).pairs;
    let missing: Vec<_> = full.iter().filter(|&p| !faulty.contains(p)).collect();
    assert_eq!(missing, vec![(0, 9), (0, 11), (0, 13)]);
}

#[test]
fn below_the_single_path_budget_is_unsatisfiable() {
    let store = fixture_store();
    let plan = ExecutionPlan::build(&gridrpq::regex::parse_regex("abc*").unwrap(), PlanVariant::Forward).unwrap();
    let config = EngineConfig {
        input_buffer_bytes: 99,
        ..fixture_config()
    };
    assert!(matches!(
        gridrpq::run_rpq(&plan, &store, &config),
        Err(Error::UnsatisfiableBudget(_))
    ));
}

/// Eight `P` vertices, each with one `a` edge to its own `T` vertex.
fn fan_out() -> gridrpq::RawGraph {
    let mut g = gridrpq::RawGraph::new();
    for i in 0..8 {
        let s = g.add_vertex(&format!("s{i}"), "P").unwrap();
        let t = g.add_vertex(&format!("t{i}"), "T").unwrap();
        g.add_edge(s, t, "a");
    }
    g
}

#[test]
fn pool_exhaustion_halves_batches() {
    let g = fan_out();
    let store = LgfStore::from_graph(&g, 4).unwrap();
    let roomy = EngineConfig {
        static_hop: 3,
        batch_size: 8,
        ..EngineConfig::default()
    };
    let single = EngineConfig {
        batch_size: 1,
        ..roomy.clone()
    };
    let per_start = run(&store, "a", PlanVariant::Forward, &single).stats.segments_peak_bytes as usize;
    let full = run(&store, "a", PlanVariant::Forward, &roomy);
    let demand = full.stats.segments_peak_bytes as usize;
    assert_eq!(demand, 8 * per_start);
    assert_eq!(full.stats.fallback_halvings, 0);

    let half = EngineConfig {
        segment_buffer_bytes: demand / 2,
        ..roomy.clone()
    };
    let out = run(&store, "a", PlanVariant::Forward, &half);
    assert_eq!(out.pairs, full.pairs);
    assert_eq!(out.pairs, oracle(&g, "a", EpsilonPairs::All));
    assert_eq!(out.stats.fallback_halvings, 1);
    assert!(out.stats.segments_peak_bytes as usize <= demand / 2);
    assert_eq!(out.stats.segments_leaked, 0);

    let plan = ExecutionPlan::build(&gridrpq::regex::parse_regex("a").unwrap(), PlanVariant::Forward).unwrap();
    let starved = EngineConfig {
        segment_buffer_bytes: per_start - 1,
        ..roomy
    };
    match gridrpq::run_rpq(&plan, &store, &starved) {
        Err(Error::PoolExhausted { capacity, demand }) => {
            assert_eq!(capacity, per_start - 1);
            assert!(demand >= per_start);
        }
        other => panic!("expected pool exhaustion, got {other:?}"),
    }
}

#[test]
fn random_budget_sweeps_preserve_results() {
    for seed in 0..24u64 {
        let g = random_graph(seed, 24, [0.05, 0.1, 0.2][seed as usize % 3]);
        let store = LgfStore::from_graph(&g, 3).unwrap();
        let (_, expr) = RPQ_SHAPES[seed as usize % RPQ_SHAPES.len()];
        let free = EngineConfig {
            static_hop: 2,
            batch_size: 4,
            theta: 3,
            ..EngineConfig::default()
        };
        let want = oracle(&g, expr, EpsilonPairs::All);
        let base = run(&store, expr, PlanVariant::Forward, &free);
        assert_eq!(base.pairs, want, "seed {seed} {expr}");
        let mut input = 1usize << 16;
        while input >= 8 {
            for segment in [1usize << 20, 4096, 512, 128] {
                let config = EngineConfig {
                    input_buffer_bytes: input,
                    segment_buffer_bytes: segment,
                    ..free.clone()
                };
                let plan = ExecutionPlan::build(&gridrpq::regex::parse_regex(expr).unwrap(), PlanVariant::Forward).unwrap();
                match gridrpq::run_rpq(&plan, &store, &config) {
                    Ok(out) => {
                        assert_eq!(out.pairs, want, "seed {seed} {expr} input {input} segment {segment}");
                        assert_eq!(out.stats.segments_leaked, 0);
                    }
                    Err(Error::UnsatisfiableBudget(_) | Error::PoolExhausted { .. }) => {}
                    Err(e) => panic!("seed {seed}: {e}"),
                }
            }
            input /= 2;
        }
    }
}
