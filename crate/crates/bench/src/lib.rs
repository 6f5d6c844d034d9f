//! Workloads shared by the criterion benchmarks.

use gridrpq::graph::RandomGraphSpec;
use gridrpq::regex::parse_regex;
use gridrpq::{EngineConfig, ExecutionPlan, LgfStore, PlanVariant, RawGraph};

pub use gridrpq::workload::RPQ_SHAPES;

/// A generated graph and its store.
pub struct Workload {
    pub graph: RawGraph,
    pub store: LgfStore,
}

impl Workload {
    pub fn random(vertices: usize, vertex_labels: usize, density: f64, seed: u64) -> Workload {
        let graph = RawGraph::random(&RandomGraphSpec::new(vertices, vertex_labels, density), seed);
        let store = LgfStore::from_graph(&graph, 256).expect("generated graphs ingest");
        Workload { graph, store }
    }

    pub fn fixture() -> Workload {
        let graph = gridrpq::fixture::graph();
        let store = LgfStore::from_graph(&graph, 4).expect("fixture ingests");
        Workload { graph, store }
    }
}

pub fn plan(expr: &str, variant: PlanVariant) -> ExecutionPlan {
    ExecutionPlan::build(&parse_regex(expr).expect("valid expression"), variant).expect("valid plan")
}

pub fn config(static_hop: usize, batch_size: usize) -> EngineConfig {
    EngineConfig {
        static_hop,
        batch_size,
        theta: 256,
        ..EngineConfig::default()
    }
}
