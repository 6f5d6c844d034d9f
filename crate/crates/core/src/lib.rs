//! Regular path query (RPQ) and conjunctive RPQ evaluation over edge-labeled
//! directed graphs stored in a labeled grid layout.
//!
//! The crate is organised bottom-up:
//!
//! - [`regex`], [`automaton`] and [`plan`] turn a path expression into an
//!   epsilon-free automaton and an execution plan.
//! - [`lgf`] stores graphs as per-label grids of vertex-label blocks, each
//!   split into slices of at most `theta` edges, in both edge directions.
//! - [`traversal`] runs hop-limited level-wise DFS over traversal groups,
//!   drawing visited/checkpoint/bridge bitmaps from [`segment`].
//! - [`materialize`] stages result pairs through a bounded buffer and turns
//!   them into slices incrementally.
//! - [`crpq`] combines materialized atoms with a multiway intersection join.
//! - [`oracle`] holds the brute-force reference evaluators.

pub mod automaton;
pub mod config;
pub mod crpq;
pub mod error;
pub mod fixture;
pub mod graph;
pub mod lgf;
pub mod materialize;
pub mod oracle;
pub mod plan;
pub mod regex;
pub mod segment;
pub mod stats;
pub mod traversal;
pub mod workload;

pub use automaton::{Automaton, StateId, Transition};
pub use config::{EngineConfig, EpsilonPairs, MaterializeMode, PlanVariant};
pub use crpq::{execute_crpq, plan_crpq, CrpqPlan, CrpqQuery, CrpqResult};
pub use error::{Error, Result};
pub use graph::RawGraph;
pub use lgf::{Direction, GridId, LgfStore, Slice};
pub use plan::{ExecutionPlan, PlanStage};
pub use regex::Regex;
pub use stats::QueryStats;
pub use traversal::{run_rpq, run_rpq_from, single_source_rpq, ResultPairSet, RpqOutput, TraceRecord};

/// Dense vertex identifier after label-grouped renumbering.
pub type VertexId = u32;
