use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::sync::Arc;

use rayon::prelude::*;

use super::tree::{form_base_tgs, merged_sources, NodeId, TreeArena};
use super::TraceRecord;
use crate::automaton::{Automaton, StateId};
use crate::config::{EngineConfig, Fault};
use crate::error::{Error, Result};
use crate::lgf::{LgfStore, Slice};
use crate::materialize::{ResultSink, SinkOptions};
use crate::segment::{partition_sub_tgs, PathCost, Role, Segment, SegmentId, SegmentKey, SegmentPool};
use crate::stats::QueryStats;
use crate::VertexId;

/// Upper bound on unfolded tree nodes enumerated for sub-TG partitioning.
const MAX_UNFOLDED: u64 = 1 << 22;

pub(crate) struct StageSpec<'a> {
    pub automaton: &'a Automaton,
    /// Report `(end, start)` instead of `(start, end)`.
    pub swap: bool,
    /// Emit `(v, v)` for every vertex.
    pub epsilon: bool,
    /// Restrict base batches to one start vertex.
    pub source: Option<VertexId>,
    pub stage: u32,
    pub first_iter: u64,
}

pub(crate) struct StageRun {
    pub slices: Vec<Slice>,
    pub stats: QueryStats,
    pub trace: Vec<TraceRecord>,
}

pub(crate) fn run_stage(store: &LgfStore, config: &EngineConfig, spec: &StageSpec<'_>) -> Result<StageRun> {
    let mut arena = TreeArena::new(store, spec.automaton, config.static_hop, true)?;
    let roots = arena.base_roots();
    let sink = ResultSink::new(
        store,
        &SinkOptions {
            theta: config.theta,
            ur_buffer_bytes: config.ur_buffer_bytes,
            ur_chunk_bytes: config.ur_chunk_bytes,
            mode: config.materialize_mode,
            epsilon_pairs: spec.epsilon,
        },
    );
    let threads = if config.workers > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(config.workers)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?,
        )
    } else {
        None
    };
    let mut engine = Engine {
        store,
        config,
        spec,
        h: config.static_hop as u32,
        pool: SegmentPool::new(config.segment_buffer_bytes),
        sink,
        tgs: Vec::new(),
        queue: BinaryHeap::new(),
        lineages: Vec::new(),
        stats: QueryStats::default(),
        trace: Vec::new(),
        threads,
        multi_final: spec.automaton.final_states().len() > 1,
        footprints: Vec::new(),
    };
    for (row, tg_roots) in form_base_tgs(&arena, &roots) {
        let mut starts = merged_sources(&arena, &tg_roots);
        if let Some(s) = spec.source {
            starts.retain(|&v| v == s);
        }
        let id = engine.tgs.len() as u32;
        if let Some(&lo) = starts.first() {
            engine.queue.push(Record {
                depth: 0,
                tg: id,
                batch: 0,
                range: [lo, lo + 1],
                job: Job::Base,
            });
        }
        engine.tgs.push(Tg {
            roots: tg_roots,
            depth: 0,
            kind: TgKind::Base { row, starts, cursor: 0 },
            batch_size: config.batch_size,
            next_batch: 1,
            layout: None,
        });
    }
    engine.stats.tg_count = engine.tgs.len() as u64;
    while let Some(rec) = engine.queue.pop() {
        engine.step(&mut arena, rec)?;
    }
    let Engine {
        pool,
        sink,
        mut stats,
        trace,
        ..
    } = engine;
    let out = sink.finish();
    stats.segments_peak_bytes = pool.peak() as u64;
    stats.segments_leaked = pool.used() as u64;
    stats.drains = out.drains;
    stats.overlap_ratio = out.overlap_ratio;
    stats.finalized_slices = out.slices.len() as u64;
    stats.tier_violations = out.tier_violations;
    stats.duplicate_pairs = out.duplicate_pairs;
    Ok(StageRun {
        slices: out.slices,
        stats,
        trace,
    })
}

enum TgKind {
    Base {
        row: u32,
        starts: Vec<VertexId>,
        cursor: usize,
    },
    Expansion,
}

struct Tg {
    roots: Vec<NodeId>,
    /// Hops covered before this TG's window.
    depth: u32,
    kind: TgKind,
    /// Current batch size; halved on pool exhaustion and kept for later
    /// batches.
    batch_size: usize,
    next_batch: u32,
    layout: Option<Layout>,
}

enum Job {
    Base,
    Expansion {
        lineage: usize,
        /// Start vertices with the checkpoint segment holding their frontier.
        starts: Vec<(VertexId, SegmentId)>,
    },
}

struct Record {
    depth: u32,
    tg: u32,
    batch: u32,
    range: [VertexId; 2],
    job: Job,
}

impl Record {
    fn key(&self) -> (u32, Reverse<u32>, Reverse<VertexId>, Reverse<u32>) {
        (self.depth, Reverse(self.tg), Reverse(self.range[0]), Reverse(self.batch))
    }
}

impl PartialEq for Record {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Record {}

impl PartialOrd for Record {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Record {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

/// A base batch together with all its expansions.
struct Lineage {
    pending: usize,
    row: u32,
    hi: VertexId,
    /// Visited and emitted segments, released when the lineage completes.
    owned: Vec<SegmentId>,
}

struct TrieNode {
    dag: NodeId,
    children: Vec<u32>,
    /// `(boundary, depth)` of the incoming bridge governing this node.
    bridge_in: Option<(u32, u32)>,
    /// `(boundary, depth)` of the outgoing bridge this node records into.
    bridge_out: Option<(u32, u32)>,
}

/// The explicitly unfolded tree of one sub-TG.
struct SubTree {
    nodes: Vec<TrieNode>,
    roots: Vec<u32>,
}

enum Layout {
    Whole,
    Split {
        subs: Vec<SubTree>,
        /// Cut-set nodes after each sub-TG but the last.
        cuts: Vec<Vec<NodeId>>,
    },
}

trait View: Sync {
    fn roots(&self) -> &[u32];
    fn dag(&self, n: u32) -> NodeId;
    fn children(&self, n: u32) -> &[u32];
    fn bridge_in(&self, n: u32) -> Option<(u32, u32)>;
    fn bridge_out(&self, n: u32) -> Option<(u32, u32)>;
}

struct DagView<'a, 's> {
    arena: &'a TreeArena<'s>,
    roots: &'a [NodeId],
}

impl View for DagView<'_, '_> {
    fn roots(&self) -> &[u32] {
        self.roots
    }
    fn dag(&self, n: u32) -> NodeId {
        n
    }
    fn children(&self, n: u32) -> &[u32] {
        &self.arena.get(n).children
    }
    fn bridge_in(&self, _: u32) -> Option<(u32, u32)> {
        None
    }
    fn bridge_out(&self, _: u32) -> Option<(u32, u32)> {
        None
    }
}

impl View for SubTree {
    fn roots(&self) -> &[u32] {
        &self.roots
    }
    fn dag(&self, n: u32) -> NodeId {
        self.nodes[n as usize].dag
    }
    fn children(&self, n: u32) -> &[u32] {
        &self.nodes[n as usize].children
    }
    fn bridge_in(&self, n: u32) -> Option<(u32, u32)> {
        self.nodes[n as usize].bridge_in
    }
    fn bridge_out(&self, n: u32) -> Option<(u32, u32)> {
        self.nodes[n as usize].bridge_out
    }
}

struct ArenaCost<'a, 's>(&'a TreeArena<'s>);

impl PathCost for ArenaCost<'_, '_> {
    fn slice(&self, node: u32) -> (u64, usize) {
        let s = self.0.get(node).slice;
        (((s.dir.index() as u64) << 32) | s.id as u64, s.bytes())
    }
    fn segments(&self, node: u32) -> usize {
        1 + self.0.get(node).continues as usize
    }
}

fn build_subtrees(paths: &[Vec<NodeId>], ranges: &[std::ops::Range<usize>], cuts: &[usize]) -> Vec<SubTree> {
    let mut subs = Vec::with_capacity(ranges.len());
    for (k, range) in ranges.iter().enumerate() {
        let cut_in = if k > 0 { cuts[k - 1] } else { 0 };
        let cut_out = cuts.get(k).copied().unwrap_or(0);
        let mut t = SubTree {
            nodes: Vec::new(),
            roots: Vec::new(),
        };
        for (i, path) in paths[range.clone()].iter().enumerate() {
            let first = i == 0;
            let last = range.start + i + 1 == range.end;
            let mut parent: Option<u32> = None;
            for (d, &dag) in path.iter().enumerate() {
                let siblings = match parent {
                    Some(p) => &t.nodes[p as usize].children,
                    None => &t.roots,
                };
                let at = match siblings.last() {
                    Some(&c) if t.nodes[c as usize].dag == dag => c,
                    _ => {
                        let c = t.nodes.len() as u32;
                        t.nodes.push(TrieNode {
                            dag,
                            children: Vec::new(),
                            bridge_in: None,
                            bridge_out: None,
                        });
                        match parent {
                            Some(p) => t.nodes[p as usize].children.push(c),
                            None => t.roots.push(c),
                        }
                        c
                    }
                };
                let node = &mut t.nodes[at as usize];
                if first && d < cut_in {
                    node.bridge_in = Some((k as u32 - 1, d as u32));
                }
                if last && d < cut_out {
                    node.bridge_out = Some((k as u32, d as u32));
                }
                parent = Some(at);
            }
        }
        subs.push(t);
    }
    subs
}

/// Per-start exploration state with its segments checked out of the pool.
struct Work {
    start: VertexId,
    frontier: Option<(SegmentId, Segment)>,
    segs: Vec<(SegmentKey, SegmentId, Segment)>,
    index: HashMap<SegmentKey, usize>,
    out: Vec<VertexId>,
}

impl Work {
    fn seg(&mut self, key: &SegmentKey) -> &mut Segment {
        let i = self.index[key];
        &mut self.segs[i].2
    }
}

struct Ctx<'a, 's> {
    arena: &'a TreeArena<'s>,
    tg: u32,
    multi_final: bool,
    suppress_self: bool,
    skip_bridge: bool,
}

impl Ctx<'_, '_> {
    fn emit(&self, w: &mut Work, col: u32, v: VertexId) {
        if self.suppress_self && v == w.start {
            return;
        }
        if self.multi_final
            && w
                .seg(&SegmentKey::Emitted {
                    start: w.start,
                    col,
                })
                .test_and_set(v)
        {
            return;
        }
        w.out.push(v);
    }

    fn arrive<V: View>(&self, view: &V, w: &mut Work, n: u32, v: VertexId) {
        let node = self.arena.get(view.dag(n));
        let (s, col) = (w.start, node.slice.col);
        let bridge_in = view.bridge_in(n).filter(|_| !self.skip_bridge);
        if let Some((boundary, depth)) = bridge_in {
            let key = SegmentKey::Bridge {
                start: s,
                tg: self.tg,
                boundary,
                depth,
            };
            if !w.seg(&key).take(v) {
                return;
            }
        } else {
            let key = SegmentKey::Visited {
                start: s,
                state: node.state,
                col,
            };
            if w.seg(&key).test_and_set(v) {
                return;
            }
            if node.is_final {
                self.emit(w, col, v);
            }
        }
        if let Some((boundary, depth)) = view.bridge_out(n).filter(|_| !self.skip_bridge) {
            let key = SegmentKey::Bridge {
                start: s,
                tg: self.tg,
                boundary,
                depth,
            };
            w.seg(&key).set(v);
        }
        if node.boundary {
            if node.continues {
                let key = SegmentKey::Checkpoint {
                    start: s,
                    state: node.state,
                    col,
                    tg: self.tg,
                };
                w.seg(&key).set(v);
            }
            return;
        }
        for &c in view.children(n) {
            let slice = self.arena.get(view.dag(c)).slice;
            for &u in slice.neighbors(v) {
                self.arrive(view, w, c, u);
            }
        }
    }

    fn run_view<V: View>(&self, view: &V, w: &mut Work) {
        for &r in view.roots() {
            let slice = self.arena.get(view.dag(r)).slice;
            let seeds: Vec<VertexId> = match &w.frontier {
                None => slice.neighbors(w.start).to_vec(),
                Some((_, f)) => f.ones().flat_map(|u| slice.neighbors(u).iter().copied()).collect(),
            };
            for v in seeds {
                self.arrive(view, w, r, v);
            }
        }
    }

    fn explore(&self, layout: &Layout, roots: &[NodeId], w: &mut Work) {
        match layout {
            Layout::Whole => self.run_view(
                &DagView {
                    arena: self.arena,
                    roots,
                },
                w,
            ),
            Layout::Split { subs, .. } => {
                for sub in subs {
                    self.run_view(sub, w);
                }
            }
        }
    }
}

struct Engine<'a, 's> {
    store: &'s LgfStore,
    config: &'a EngineConfig,
    spec: &'a StageSpec<'a>,
    h: u32,
    pool: SegmentPool,
    sink: ResultSink,
    tgs: Vec<Tg>,
    queue: BinaryHeap<Record>,
    lineages: Vec<Lineage>,
    stats: QueryStats,
    trace: Vec<TraceRecord>,
    threads: Option<rayon::ThreadPool>,
    multi_final: bool,
    footprints: Vec<Option<Arc<Footprint>>>,
}

#[derive(Default)]
struct Footprint {
    visited: Vec<(StateId, u32)>,
    checkpoints: Vec<(StateId, u32)>,
    final_cols: Vec<u32>,
}

impl Footprint {
    fn normalize(&mut self) {
        for v in [&mut self.visited, &mut self.checkpoints] {
            v.sort_unstable();
            v.dedup();
        }
        self.final_cols.sort_unstable();
        self.final_cols.dedup();
    }
}

/// Segments to draw for one start, in allocation order.
type Demand = Vec<(SegmentKey, VertexId, u32)>;

impl<'s> Engine<'_, 's> {
    fn col_range(&self, col: u32) -> (VertexId, u32) {
        let r = self.store.block_range(col);
        (r.lo, r.width())
    }

    fn ensure_layout(&mut self, arena: &TreeArena<'s>, tg: u32) -> Result<()> {
        let t = &self.tgs[tg as usize];
        if t.layout.is_some() {
            return Ok(());
        }
        let budget = self.config.input_buffer_bytes;
        let layout = if arena.slice_bytes(&t.roots) <= budget {
            Layout::Whole
        } else {
            if arena.unfolded_size(&t.roots) > MAX_UNFOLDED {
                return Err(Error::UnsatisfiableBudget(format!(
                    "traversal group {tg} is too large to partition under {budget} input bytes"
                )));
            }
            let paths = arena.paths(&t.roots);
            let part = partition_sub_tgs(&paths, &ArenaCost(arena), budget, usize::MAX)?;
            let ranges: Vec<_> = part.sub_tgs.iter().map(|s| s.paths.clone()).collect();
            let cuts = (0..part.cuts.len()).map(|k| part.cut_set(&paths, k).to_vec()).collect();
            self.stats.sub_tgs += ranges.len() as u64;
            Layout::Split {
                subs: build_subtrees(&paths, &ranges, &part.cuts),
                cuts,
            }
        };
        self.tgs[tg as usize].layout = Some(layout);
        Ok(())
    }

    /// Segment demand of `start`: visited and checkpoint segments in tree
    /// preorder over the roots it can enter, then emitted sets, then bridges.
    /// Visited and checkpoint keys and final columns below `n`, memoized
    /// per DAG node.
    fn footprint(&mut self, arena: &TreeArena<'s>, n: NodeId) -> Arc<Footprint> {
        if self.footprints.len() < arena.len() {
            self.footprints.resize(arena.len(), None);
        }
        if let Some(fp) = &self.footprints[n as usize] {
            return fp.clone();
        }
        let node = arena.get(n);
        let mut fp = Footprint::default();
        fp.visited.push((node.state, node.slice.col));
        if node.boundary && node.continues {
            fp.checkpoints.push((node.state, node.slice.col));
        }
        if node.is_final {
            fp.final_cols.push(node.slice.col);
        }
        for &c in &node.children {
            let child = self.footprint(arena, c);
            fp.visited.extend_from_slice(&child.visited);
            fp.checkpoints.extend_from_slice(&child.checkpoints);
            fp.final_cols.extend_from_slice(&child.final_cols);
        }
        fp.normalize();
        let fp = Arc::new(fp);
        self.footprints[n as usize] = Some(fp.clone());
        fp
    }

    fn demand(&mut self, arena: &TreeArena<'s>, tg: u32, start: VertexId, frontier: Option<SegmentId>) -> Demand {
        let frontier: Option<Vec<VertexId>> = frontier.map(|id| self.pool.get(id).ones().collect());
        let relevant = |n: NodeId| {
            let slice = arena.get(n).slice;
            match &frontier {
                None => slice.has_source(start),
                Some(f) => f.iter().any(|&u| slice.has_source(u)),
            }
        };
        let roots: Vec<NodeId> = self.tgs[tg as usize].roots.iter().copied().filter(|&r| relevant(r)).collect();
        let mut all = Footprint::default();
        for r in roots {
            let fp = self.footprint(arena, r);
            all.visited.extend_from_slice(&fp.visited);
            all.checkpoints.extend_from_slice(&fp.checkpoints);
            all.final_cols.extend_from_slice(&fp.final_cols);
        }
        all.normalize();
        let mut out = Demand::new();
        for &(state, col) in &all.visited {
            let (lo, width) = self.col_range(col);
            out.push((SegmentKey::Visited { start, state, col }, lo, width));
        }
        for &(state, col) in &all.checkpoints {
            let (lo, width) = self.col_range(col);
            out.push((SegmentKey::Checkpoint { start, state, col, tg }, lo, width));
        }
        if self.multi_final {
            for &col in &all.final_cols {
                let (lo, width) = self.col_range(col);
                out.push((SegmentKey::Emitted { start, col }, lo, width));
            }
        }
        let t = &self.tgs[tg as usize];
        if let Some(Layout::Split { cuts, .. }) = &t.layout {
            if self.config.fault != Some(Fault::SkipBridge) {
                for (k, cut) in cuts.iter().enumerate() {
                    if cut.first().is_some_and(|&r| relevant(r)) {
                        for (d, &n) in cut.iter().enumerate() {
                            let (lo, width) = self.col_range(arena.get(n).slice.col);
                            let key = SegmentKey::Bridge {
                                start,
                                tg,
                                boundary: k as u32,
                                depth: d as u32,
                            };
                            out.push((key, lo, width));
                        }
                    }
                }
            }
        }
        out
    }

    /// Draws every demanded segment or none: on failure the segments newly
    /// drawn by this attempt are returned to the pool.
    fn allocate(&mut self, demands: &[Demand]) -> Result<(Vec<Vec<SegmentId>>, Vec<SegmentId>)> {
        let mut ids = Vec::with_capacity(demands.len());
        let mut fresh = Vec::new();
        for demand in demands {
            let mut mine = Vec::with_capacity(demand.len());
            for &(key, lo, width) in demand {
                match self.pool.acquire_tracked(key, lo, width) {
                    Ok((id, new)) => {
                        if new {
                            fresh.push(id);
                        }
                        mine.push(id);
                    }
                    Err(e) => {
                        self.pool.release_all(fresh);
                        return Err(e);
                    }
                }
            }
            ids.push(mine);
        }
        Ok((ids, fresh))
    }

    fn step(&mut self, arena: &mut TreeArena<'s>, rec: Record) -> Result<()> {
        self.ensure_layout(arena, rec.tg)?;
        match rec.job {
            Job::Base => self.step_base(arena, rec.tg, rec.batch),
            Job::Expansion { lineage, starts } => self.step_expansion(arena, rec.tg, rec.batch, rec.range, lineage, starts),
        }
    }

    fn step_base(&mut self, arena: &mut TreeArena<'s>, tg: u32, batch: u32) -> Result<()> {
        loop {
            let t = &self.tgs[tg as usize];
            let TgKind::Base { row, starts, cursor } = &t.kind else {
                unreachable!("base record for an expansion TG")
            };
            let (row, cursor) = (*row, *cursor);
            let end = (cursor + t.batch_size).min(starts.len());
            let batch_starts: Vec<(VertexId, Option<SegmentId>)> = starts[cursor..end].iter().map(|&s| (s, None)).collect();
            let demands: Vec<Demand> = batch_starts.iter().map(|&(s, _)| self.demand(arena, tg, s, None)).collect();
            match self.allocate(&demands) {
                Ok((ids, fresh)) => {
                    let range = [batch_starts[0].0, batch_starts[batch_starts.len() - 1].0 + 1];
                    let lineage = self.lineages.len();
                    self.lineages.push(Lineage {
                        pending: 1,
                        row,
                        hi: range[1],
                        owned: Vec::new(),
                    });
                    self.keep_owned(lineage, &fresh);
                    if let TgKind::Base { cursor, .. } = &mut self.tgs[tg as usize].kind {
                        *cursor = end;
                    }
                    self.execute(arena, tg, batch, range, lineage, &batch_starts, ids);
                    let t = &mut self.tgs[tg as usize];
                    if let TgKind::Base { starts, cursor, .. } = &t.kind {
                        if *cursor < starts.len() {
                            let lo = starts[*cursor];
                            let next = t.next_batch;
                            t.next_batch += 1;
                            self.queue.push(Record {
                                depth: 0,
                                tg,
                                batch: next,
                                range: [lo, lo + 1],
                                job: Job::Base,
                            });
                        }
                    }
                    self.finish_record(lineage);
                    return Ok(());
                }
                Err(Error::PoolExhausted { .. }) if end - cursor > 1 => {
                    let t = &mut self.tgs[tg as usize];
                    t.batch_size = (end - cursor) / 2;
                    self.stats.fallback_halvings += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn step_expansion(
        &mut self,
        arena: &mut TreeArena<'s>,
        tg: u32,
        batch: u32,
        range: [VertexId; 2],
        lineage: usize,
        mut starts: Vec<(VertexId, SegmentId)>,
    ) -> Result<()> {
        loop {
            let demands: Vec<Demand> = starts.iter().map(|&(s, f)| self.demand(arena, tg, s, Some(f))).collect();
            match self.allocate(&demands) {
                Ok((ids, fresh)) => {
                    self.keep_owned(lineage, &fresh);
                    let batch_starts: Vec<(VertexId, Option<SegmentId>)> = starts.iter().map(|&(s, f)| (s, Some(f))).collect();
                    self.execute(arena, tg, batch, range, lineage, &batch_starts, ids);
                    self.pool.release_all(starts.iter().map(|&(_, f)| f));
                    self.finish_record(lineage);
                    return Ok(());
                }
                Err(Error::PoolExhausted { .. }) if starts.len() > 1 => {
                    let rest = starts.split_off(starts.len() / 2);
                    let t = &mut self.tgs[tg as usize];
                    let next = t.next_batch;
                    t.next_batch += 1;
                    self.lineages[lineage].pending += 1;
                    self.queue.push(Record {
                        depth: t.depth,
                        tg,
                        batch: next,
                        range,
                        job: Job::Expansion { lineage, starts: rest },
                    });
                    self.stats.fallback_halvings += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn keep_owned(&mut self, lineage: usize, fresh: &[SegmentId]) {
        for &id in fresh {
            if matches!(self.pool.key(id).map(|k| k.role()), Some(Role::Visited | Role::Emitted)) {
                self.lineages[lineage].owned.push(id);
            }
        }
    }

    fn finish_record(&mut self, lineage: usize) {
        let l = &mut self.lineages[lineage];
        l.pending -= 1;
        if l.pending > 0 {
            return;
        }
        let owned = std::mem::take(&mut l.owned);
        let (row, hi) = (l.row, l.hi);
        self.pool.release_all(owned);
        if !self.spec.swap {
            self.sink.certify(row, hi);
        }
    }

    /// Runs one batch whose segments are already drawn, emits its pairs and
    /// enqueues the expansions of its checkpoints.
    #[allow(clippy::too_many_arguments)]
    fn execute(
        &mut self,
        arena: &mut TreeArena<'s>,
        tg: u32,
        batch: u32,
        range: [VertexId; 2],
        lineage: usize,
        starts: &[(VertexId, Option<SegmentId>)],
        ids: Vec<Vec<SegmentId>>,
    ) {
        let mut works: Vec<Work> = starts
            .iter()
            .zip(ids)
            .map(|(&(start, frontier), ids)| {
                let mut index = HashMap::with_capacity(ids.len());
                let mut segs = Vec::with_capacity(ids.len());
                for id in ids {
                    let key = self.pool.key(id).expect("allocated segment");
                    if let std::collections::hash_map::Entry::Vacant(e) = index.entry(key) {
                        e.insert(segs.len());
                        segs.push((key, id, self.pool.check_out(id)));
                    }
                }
                Work {
                    start,
                    frontier: frontier.map(|f| (f, self.pool.check_out(f))),
                    segs,
                    index,
                    out: Vec::new(),
                }
            })
            .collect();

        let t = &self.tgs[tg as usize];
        let ctx = Ctx {
            arena,
            tg,
            multi_final: self.multi_final,
            suppress_self: self.spec.epsilon,
            skip_bridge: self.config.fault == Some(Fault::SkipBridge),
        };
        let layout = t.layout.as_ref().expect("layout computed");
        let roots = &t.roots;
        match &self.threads {
            Some(pool) => pool.install(|| works.par_iter_mut().for_each(|w| ctx.explore(layout, roots, w))),
            None => works.iter_mut().for_each(|w| ctx.explore(layout, roots, w)),
        }

        self.trace.push(TraceRecord {
            stage: self.spec.stage,
            iter: self.spec.first_iter + self.stats.iterations,
            tg,
            batch,
            depth: t.depth,
            range,
        });
        self.stats.iterations += 1;
        let depth = t.depth;
        self.stats.max_tg_depth = self.stats.max_tg_depth.max((depth / self.h) as u64 + 1);
        self.stats.max_hops = self.stats.max_tg_depth * self.h as u64;

        let mut groups: BTreeMap<(StateId, u32), Vec<(VertexId, SegmentId)>> = BTreeMap::new();
        let mut spent = Vec::new();
        for w in works {
            for &v in &w.out {
                if self.spec.swap {
                    self.sink.emit(v, w.start);
                } else {
                    self.sink.emit(w.start, v);
                }
            }
            if let Some((f, seg)) = w.frontier {
                self.pool.check_in(f, seg);
            }
            for (key, id, seg) in w.segs {
                let keep = !seg.is_empty();
                self.pool.check_in(id, seg);
                match key {
                    SegmentKey::Checkpoint { state, col, .. } if keep => {
                        groups.entry((state, col)).or_default().push((w.start, id))
                    }
                    SegmentKey::Checkpoint { .. } | SegmentKey::Bridge { .. } => spent.push(id),
                    _ => {}
                }
            }
        }
        self.pool.release_all(spent);

        for ((state, col), starts) in groups {
            let mut lo = VertexId::MAX;
            let mut hi = 0;
            for &(_, id) in &starts {
                let seg = self.pool.get(id);
                for v in seg.ones() {
                    lo = lo.min(v);
                    hi = hi.max(v + 1);
                }
            }
            let roots = arena.expansion_roots(state, col, lo, hi);
            if roots.is_empty() {
                self.pool.release_all(starts.iter().map(|&(_, id)| id));
                continue;
            }
            let id = self.tgs.len() as u32;
            let depth = depth + self.h;
            self.tgs.push(Tg {
                roots,
                depth,
                kind: TgKind::Expansion,
                batch_size: self.config.batch_size,
                next_batch: 1,
                layout: None,
            });
            self.stats.tg_count += 1;
            self.lineages[lineage].pending += 1;
            self.queue.push(Record {
                depth,
                tg: id,
                batch: 0,
                range,
                job: Job::Expansion { lineage, starts },
            });
        }
    }
}
