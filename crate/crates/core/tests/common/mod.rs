#![allow(dead_code)]

use gridrpq::graph::RandomGraphSpec;
use gridrpq::oracle::oracle_rpq;
use gridrpq::regex::parse_regex;
use gridrpq::{Automaton, EngineConfig, EpsilonPairs, ExecutionPlan, LgfStore, PlanVariant, RawGraph, ResultPairSet, RpqOutput};

pub fn fixture_store() -> LgfStore {
    LgfStore::from_graph(&gridrpq::fixture::graph(), 4).unwrap()
}

pub fn fixture_config() -> EngineConfig {
    EngineConfig {
        static_hop: 3,
        batch_size: 1,
        theta: 4,
        ..EngineConfig::default()
    }
}

pub fn run(store: &LgfStore, expr: &str, variant: PlanVariant, config: &EngineConfig) -> RpqOutput {
    let plan = ExecutionPlan::build(&parse_regex(expr).unwrap(), variant).unwrap();
    gridrpq::run_rpq(&plan, store, config).unwrap()
}

pub fn oracle(graph: &RawGraph, expr: &str, epsilon: EpsilonPairs) -> ResultPairSet {
    oracle_rpq(&graph.canonical(), &Automaton::compile(&parse_regex(expr).unwrap()), epsilon)
}

/// Seeded random graph: up to 4 edge labels `a`..`d`, few vertex labels.
pub fn random_graph(seed: u64, vertices: usize, density: f64) -> RawGraph {
    let labels = 1 + (seed % 3) as usize;
    RawGraph::random(&RandomGraphSpec::new(vertices, labels, density), seed)
}
