//! Hop-limited level-wise DFS over traversal groups.
//!
//! A query stage builds the traversal tree of candidate slices from the
//! automaton's initial state, groups its roots by block row into base
//! traversal groups (TGs) and runs them in batches of start vertices. Each
//! batch explores `static_hop` hops by DFS; vertices reached at the boundary
//! are checkpointed and continued by expansion TGs, which the queue always
//! prefers over shallower work.

mod engine;
mod tree;

use std::borrow::Cow;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use tree::{form_base_tgs, kway_merge, merged_sources, NodeId, TreeArena, TreeNode};

use crate::config::{EngineConfig, EpsilonPairs};
use crate::error::{Error, Result};
use crate::lgf::{LgfStore, Slice};
use crate::plan::{ExecutionPlan, PlanStage};
use crate::stats::{memory_estimate, QueryStats};
use crate::VertexId;

/// A distinct, ascending set of result pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResultPairSet(Vec<(VertexId, VertexId)>);

impl ResultPairSet {
    pub fn new(mut pairs: Vec<(VertexId, VertexId)>) -> Self {
        pairs.sort_unstable();
        pairs.dedup();
        ResultPairSet(pairs)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, pair: (VertexId, VertexId)) -> bool {
        self.0.binary_search(&pair).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[(VertexId, VertexId)] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<(VertexId, VertexId)> {
        self.0
    }

    /// Pairs starting at `source`.
    pub fn from_source(&self, source: VertexId) -> ResultPairSet {
        let lo = self.0.partition_point(|p| p.0 < source);
        let hi = self.0.partition_point(|p| p.0 <= source);
        ResultPairSet(self.0[lo..hi].to_vec())
    }
}

impl FromIterator<(VertexId, VertexId)> for ResultPairSet {
    fn from_iter<I: IntoIterator<Item = (VertexId, VertexId)>>(iter: I) -> Self {
        ResultPairSet::new(iter.into_iter().collect())
    }
}

/// One executed queue record.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// Plan stage the record belongs to.
    pub stage: u32,
    pub iter: u64,
    pub tg: u32,
    pub batch: u32,
    /// Hops already covered before this record's window.
    pub depth: u32,
    /// Start-vertex range `[lo, hi)` of the originating base batch.
    pub range: [VertexId; 2],
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "iter={} tg={} batch={} depth={} range=[{},{})",
            self.iter, self.tg, self.batch, self.depth, self.range[0], self.range[1]
        )
    }
}

#[derive(Clone, Debug, Default)]
pub struct RpqOutput {
    pub pairs: ResultPairSet,
    pub stats: QueryStats,
    pub trace: Vec<TraceRecord>,
    /// Finalized result slices of the last stage.
    pub slices: Vec<Slice>,
}

/// Evaluates `plan` over `store`, stage by stage.
pub fn run_rpq(plan: &ExecutionPlan, store: &LgfStore, config: &EngineConfig) -> Result<RpqOutput> {
    run_plan(plan, store, config, None)
}

/// Pairs of the plan's result starting at `source`.
pub fn single_source_rpq(
    plan: &ExecutionPlan,
    store: &LgfStore,
    config: &EngineConfig,
    source: VertexId,
) -> Result<ResultPairSet> {
    Ok(run_rpq_from(plan, store, config, source)?.pairs)
}

/// [`single_source_rpq`] with stats and trace.
pub fn run_rpq_from(plan: &ExecutionPlan, store: &LgfStore, config: &EngineConfig, source: VertexId) -> Result<RpqOutput> {
    if source as usize >= store.num_vertices() {
        return Err(Error::UnknownVertex(source.to_string()));
    }
    let mut out = run_plan(plan, store, config, Some(source))?;
    out.pairs = out.pairs.from_source(source);
    Ok(out)
}

fn run_plan(
    plan: &ExecutionPlan,
    store: &LgfStore,
    config: &EngineConfig,
    source: Option<VertexId>,
) -> Result<RpqOutput> {
    config.validate()?;
    let mut store = Cow::Borrowed(store);
    let mut out = RpqOutput::default();
    for (i, stage) in plan.stages.iter().enumerate() {
        let (swap, epsilon, restrict) = match stage {
            PlanStage::Materialize { .. } => (false, false, None),
            PlanStage::Traverse { automaton, swap } => (
                *swap,
                config.epsilon_pairs == EpsilonPairs::All && automaton.epsilon_accepting(),
                if *swap { None } else { source },
            ),
        };
        let spec = engine::StageSpec {
            automaton: stage.automaton(),
            swap,
            epsilon,
            source: restrict,
            stage: i as u32,
            first_iter: out.stats.iterations + 1,
        };
        let run = engine::run_stage(&store, config, &spec)?;
        out.stats.absorb(&run.stats);
        out.trace.extend(run.trace);
        match stage {
            PlanStage::Materialize {
                output, transpose, ..
            } => {
                let st = store.to_mut();
                let id = st.register_result_grid(output, run.slices, config.theta)?;
                if *transpose {
                    st.transpose_grid(id)?;
                }
            }
            PlanStage::Traverse { .. } => {
                out.pairs = run.slices.iter().flat_map(|s| s.edges()).collect();
                out.slices = run.slices;
            }
        }
    }
    out.stats.memory_estimate_bytes = memory_estimate(store.num_vertices(), plan.source.num_states());
    Ok(out)
}
