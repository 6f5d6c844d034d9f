//! The RPQ traversal tree.
//!
//! A tree node is a candidate slice reached by an automaton transition at a
//! given depth of the static-hop window. Nodes with equal (slice, state,
//! depth) have identical subtrees, so the arena stores each such node once
//! and the tree is the unfolding of the resulting DAG.

use std::collections::HashMap;

use crate::automaton::{Automaton, StateId};
use crate::error::{Error, Result};
use crate::lgf::{Direction, GridDir, LgfStore, Slice};
use crate::VertexId;

pub type NodeId = u32;

#[derive(Debug)]
pub struct TreeNode<'s> {
    pub slice: &'s Slice,
    /// State reached by the transition into this node.
    pub state: StateId,
    /// Hop index within the static-hop window, starting at 0 for roots.
    pub depth: u32,
    pub is_final: bool,
    /// At the window boundary.
    pub boundary: bool,
    /// Boundary node with at least one candidate slice for the next hop.
    pub continues: bool,
    pub children: Vec<NodeId>,
}

pub struct TreeArena<'s> {
    store: &'s LgfStore,
    automaton: &'s Automaton,
    static_hop: u32,
    lanes: HashMap<(&'s str, Direction), &'s GridDir>,
    nodes: Vec<TreeNode<'s>>,
    index: HashMap<(Direction, u32, StateId, u32), NodeId>,
}

impl<'s> TreeArena<'s> {
    /// Resolves the automaton's labels. Labels missing from the store give
    /// empty candidate sets; `strict` turns them into errors, as does a grid
    /// lacking the required direction.
    pub fn new(store: &'s LgfStore, automaton: &'s Automaton, static_hop: usize, strict: bool) -> Result<Self> {
        let mut lanes = HashMap::new();
        for t in automaton.transitions() {
            match store.grid_id(&t.label) {
                Some(id) => {
                    lanes.insert((t.label.as_str(), t.dir), store.grid_dir(id, t.dir)?);
                }
                None if strict => return Err(Error::UnknownLabel(t.label.clone())),
                None => {}
            }
        }
        Ok(TreeArena {
            store,
            automaton,
            static_hop: static_hop.max(1) as u32,
            lanes,
            nodes: Vec::new(),
            index: HashMap::new(),
        })
    }

    pub fn store(&self) -> &'s LgfStore {
        self.store
    }

    pub fn automaton(&self) -> &'s Automaton {
        self.automaton
    }

    pub fn get(&self, id: NodeId) -> &TreeNode<'s> {
        &self.nodes[id as usize]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Candidate (slice, target state) pairs for transitions leaving `q`,
    /// restricted to slices whose source side lies in block row `row` (all
    /// rows when `None`) and overlaps `[lo, hi)`, ordered by (slice id,
    /// state).
    fn candidates(&self, q: StateId, row: Option<u32>, lo: VertexId, hi: VertexId) -> Vec<(&'s Slice, StateId)> {
        let mut out = Vec::new();
        for t in self.automaton.transitions_from(q) {
            let Some(&dir) = self.lanes.get(&(t.label.as_str(), t.dir)) else { continue };
            match row {
                Some(r) => {
                    for s in dir.row_slices(r) {
                        if s.from_overlaps(lo, hi) {
                            out.push((s, t.to));
                        }
                    }
                }
                None => {
                    for s in dir.slices() {
                        if s.from_overlaps(lo, hi) {
                            out.push((s, t.to));
                        }
                    }
                }
            }
        }
        out.sort_by_key(|(s, q)| (s.dir, s.id, *q));
        out.dedup_by_key(|(s, q)| (s.dir, s.id, *q));
        out
    }

    fn node(&mut self, slice: &'s Slice, state: StateId, depth: u32) -> NodeId {
        let key = (slice.dir, slice.id, state, depth);
        if let Some(&id) = self.index.get(&key) {
            return id;
        }
        let boundary = depth + 1 >= self.static_hop;
        let cands = self.candidates(state, Some(slice.col), slice.to_range[0], slice.to_range[1]);
        let continues = boundary && !cands.is_empty();
        let children = if boundary {
            Vec::new()
        } else {
            cands.into_iter().map(|(s, q)| self.node(s, q, depth + 1)).collect()
        };
        let id = self.nodes.len() as NodeId;
        self.nodes.push(TreeNode {
            slice,
            state,
            depth,
            is_final: self.automaton.is_final(state),
            boundary,
            continues,
            children,
        });
        self.index.insert(key, id);
        id
    }

    /// Roots leaving the initial state: every candidate slice of every
    /// block row.
    pub fn base_roots(&mut self) -> Vec<NodeId> {
        let q0 = self.automaton.initial();
        let cands = self.candidates(q0, None, 0, VertexId::MAX);
        cands.into_iter().map(|(s, q)| self.node(s, q, 0)).collect()
    }

    /// Roots of an expansion from `state` over frontier vertices in
    /// `[lo, hi)` of block `row`.
    pub fn expansion_roots(&mut self, state: StateId, row: u32, lo: VertexId, hi: VertexId) -> Vec<NodeId> {
        let cands = self.candidates(state, Some(row), lo, hi);
        cands.into_iter().map(|(s, q)| self.node(s, q, 0)).collect()
    }

    /// Root-leaf paths of the unfolded tree below `roots`, in DFS order.
    pub fn paths(&self, roots: &[NodeId]) -> Vec<Vec<NodeId>> {
        fn go(arena: &TreeArena<'_>, n: NodeId, cur: &mut Vec<NodeId>, out: &mut Vec<Vec<NodeId>>) {
            cur.push(n);
            let node = arena.get(n);
            if node.children.is_empty() {
                out.push(cur.clone());
            } else {
                for &c in &node.children {
                    go(arena, c, cur, out);
                }
            }
            cur.pop();
        }
        let mut out = Vec::new();
        for &r in roots {
            go(self, r, &mut Vec::new(), &mut out);
        }
        out
    }

    /// Distinct slices reachable from `roots`, with their resident bytes.
    pub fn slice_bytes(&self, roots: &[NodeId]) -> usize {
        let mut seen_nodes = vec![false; self.nodes.len()];
        let mut seen_slices = std::collections::HashSet::new();
        let mut stack: Vec<NodeId> = roots.to_vec();
        let mut bytes = 0;
        while let Some(n) = stack.pop() {
            if std::mem::replace(&mut seen_nodes[n as usize], true) {
                continue;
            }
            let node = self.get(n);
            if seen_slices.insert((node.slice.dir, node.slice.id)) {
                bytes += node.slice.bytes();
            }
            stack.extend(node.children.iter().copied());
        }
        bytes
    }

    /// Number of nodes of the unfolded tree below `roots`, saturating.
    pub fn unfolded_size(&self, roots: &[NodeId]) -> u64 {
        let mut memo: HashMap<NodeId, u64> = HashMap::new();
        fn size(arena: &TreeArena<'_>, n: NodeId, memo: &mut HashMap<NodeId, u64>) -> u64 {
            if let Some(&s) = memo.get(&n) {
                return s;
            }
            let s = arena
                .get(n)
                .children
                .iter()
                .fold(1u64, |acc, &c| acc.saturating_add(size(arena, c, memo)));
            memo.insert(n, s);
            s
        }
        roots.iter().fold(0u64, |acc, &r| acc.saturating_add(size(self, r, &mut memo)))
    }

    /// Renders the unfolded tree, one node per line, indented by depth.
    pub fn render(&self, roots: &[NodeId]) -> String {
        fn go(arena: &TreeArena<'_>, n: NodeId, out: &mut String) {
            let node = arena.get(n);
            out.push_str(&"  ".repeat(node.depth as usize));
            out.push_str(&format!("S{} q{}", node.slice.id, node.state));
            if node.is_final {
                out.push_str(" final");
            }
            if node.continues {
                out.push_str(" continues");
            }
            out.push('\n');
            for &c in &node.children {
                go(arena, c, out);
            }
        }
        let mut out = String::new();
        for &r in roots {
            go(self, r, &mut out);
        }
        out
    }
}

/// Groups base roots by the block row of their slice, in row order.
pub fn form_base_tgs(arena: &TreeArena<'_>, roots: &[NodeId]) -> Vec<(u32, Vec<NodeId>)> {
    let mut rows: std::collections::BTreeMap<u32, Vec<NodeId>> = std::collections::BTreeMap::new();
    for &r in roots {
        rows.entry(arena.get(r).slice.row).or_default().push(r);
    }
    rows.into_iter().collect()
}

/// Merges the sorted source arrays of `roots` into one ascending list of
/// distinct start vertices.
pub fn merged_sources(arena: &TreeArena<'_>, roots: &[NodeId]) -> Vec<VertexId> {
    let mut seen = std::collections::HashSet::new();
    let lists: Vec<&[VertexId]> = roots
        .iter()
        .map(|&r| arena.get(r).slice)
        .filter(|s| seen.insert((s.dir, s.id)))
        .map(|s| s.sources.as_slice())
        .collect();
    kway_merge(&lists)
}

/// K-way merge of ascending lists, dropping duplicates.
pub fn kway_merge(lists: &[&[VertexId]]) -> Vec<VertexId> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;
    let mut heap: BinaryHeap<Reverse<(VertexId, usize, usize)>> = lists
        .iter()
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| Reverse((l[0], i, 0)))
        .collect();
    let mut out: Vec<VertexId> = Vec::new();
    while let Some(Reverse((v, i, j))) = heap.pop() {
        if out.last() != Some(&v) {
            out.push(v);
        }
        if let Some(&next) = lists[i].get(j + 1) {
            heap.push(Reverse((next, i, j + 1)));
        }
    }
    out
}
