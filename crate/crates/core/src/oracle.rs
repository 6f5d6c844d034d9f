//! Brute-force reference evaluators over plain adjacency lists.
//!
//! These share no code with the grid store or the traversal engine and are
//! used as test oracles. Vertex ids are those of the graph passed in; use
//! [`RawGraph::canonical`] to compare against a store built from it.

use std::collections::{HashMap, HashSet, VecDeque};

use crate::automaton::{Automaton, StateId};
use crate::config::EpsilonPairs;
use crate::crpq::CrpqQuery;
use crate::graph::RawGraph;
use crate::lgf::Direction;
use crate::traversal::ResultPairSet;
use crate::VertexId;

type Adjacency = HashMap<(String, Direction), Vec<Vec<VertexId>>>;

fn adjacency(graph: &RawGraph, automaton: &Automaton) -> Adjacency {
    let mut adj = Adjacency::new();
    for t in automaton.transitions() {
        adj.entry((t.label.clone(), t.dir)).or_insert_with(|| match t.dir {
            Direction::Out => graph.out_adjacency(&t.label),
            Direction::In => graph.in_adjacency(&t.label),
        });
    }
    adj
}

fn successors<'a>(
    adj: &'a Adjacency,
    automaton: &'a Automaton,
    v: VertexId,
    q: StateId,
) -> impl Iterator<Item = (VertexId, StateId)> + 'a {
    automaton.transitions_from(q).iter().flat_map(move |t| {
        adj[&(t.label.clone(), t.dir)]
            .get(v as usize)
            .into_iter()
            .flatten()
            .map(move |&w| (w, t.to))
    })
}

/// Vertices reachable from `start` by a non-empty accepted path, by BFS
/// over the product graph.
fn reach(adj: &Adjacency, automaton: &Automaton, n: usize, start: VertexId) -> Vec<VertexId> {
    let q = automaton.num_states() as usize;
    let mut seen = vec![false; n * q];
    let mut hit = vec![false; n];
    let mut queue: VecDeque<(VertexId, StateId)> = successors(adj, automaton, start, automaton.initial()).collect();
    for &(v, s) in &queue {
        seen[v as usize * q + s as usize] = true;
    }
    while let Some((v, s)) = queue.pop_front() {
        if automaton.is_final(s) {
            hit[v as usize] = true;
        }
        for (w, t) in successors(adj, automaton, v, s) {
            let k = w as usize * q + t as usize;
            if !seen[k] {
                seen[k] = true;
                queue.push_back((w, t));
            }
        }
    }
    (0..n as VertexId).filter(|&v| hit[v as usize]).collect()
}

/// All pairs `(x, y)` joined by a path whose label word the automaton
/// accepts.
pub fn oracle_rpq(graph: &RawGraph, automaton: &Automaton, epsilon: EpsilonPairs) -> ResultPairSet {
    let adj = adjacency(graph, automaton);
    let n = graph.num_vertices();
    let mut pairs = Vec::new();
    for s in 0..n as VertexId {
        pairs.extend(reach(&adj, automaton, n, s).into_iter().map(|v| (s, v)));
        if epsilon == EpsilonPairs::All && automaton.epsilon_accepting() {
            pairs.push((s, s));
        }
    }
    ResultPairSet::new(pairs)
}

/// The result pairs of `source` only.
pub fn oracle_single_source(
    graph: &RawGraph,
    automaton: &Automaton,
    epsilon: EpsilonPairs,
    source: VertexId,
) -> ResultPairSet {
    let adj = adjacency(graph, automaton);
    let mut pairs: Vec<_> = reach(&adj, automaton, graph.num_vertices(), source)
        .into_iter()
        .map(|v| (source, v))
        .collect();
    if epsilon == EpsilonPairs::All && automaton.epsilon_accepting() {
        pairs.push((source, source));
    }
    ResultPairSet::new(pairs)
}

/// Depth-bounded DFS with one visited set per start vertex, shared across
/// automaton states and depths: the incomplete strategy a fixed hop limit
/// without level-wise continuation amounts to.
pub fn naive_bounded_dfs(graph: &RawGraph, automaton: &Automaton, max_depth: usize) -> ResultPairSet {
    let adj = adjacency(graph, automaton);
    let mut pairs = Vec::new();
    for s in 0..graph.num_vertices() as VertexId {
        let mut visited: HashSet<(VertexId, StateId)> = HashSet::new();
        let mut stack: Vec<(VertexId, StateId, usize)> = vec![(s, automaton.initial(), 0)];
        while let Some((v, q, d)) = stack.pop() {
            if d == max_depth {
                continue;
            }
            let next: Vec<_> = successors(&adj, automaton, v, q).collect();
            for (w, t) in next.into_iter().rev() {
                if visited.insert((w, t)) {
                    if automaton.is_final(t) {
                        pairs.push((s, w));
                    }
                    stack.push((w, t, d + 1));
                }
            }
        }
    }
    ResultPairSet::new(pairs)
}

/// All assignments of the query's vertices satisfying every atom and filter,
/// as tuples in query-vertex declaration order, sorted.
pub fn oracle_crpq(graph: &RawGraph, query: &CrpqQuery, epsilon: EpsilonPairs) -> Vec<Vec<VertexId>> {
    let n = graph.num_vertices() as VertexId;
    let atoms: Vec<(usize, usize, ResultPairSet)> = query
        .atoms
        .iter()
        .map(|a| {
            let auto = Automaton::compile(&a.regex);
            (a.from, a.to, oracle_rpq(graph, &auto, epsilon))
        })
        .collect();
    let candidates: Vec<Vec<VertexId>> = query
        .vertices
        .iter()
        .map(|qv| {
            (0..n)
                .filter(|&v| qv.label.as_deref().is_none_or(|l| graph.vertex_label(v) == l))
                .filter(|&v| qv.bind.as_deref().is_none_or(|b| graph.name(v) == b))
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(query.vertices.len());
    fn go(
        i: usize,
        cur: &mut Vec<VertexId>,
        candidates: &[Vec<VertexId>],
        atoms: &[(usize, usize, ResultPairSet)],
        query: &CrpqQuery,
        out: &mut Vec<Vec<VertexId>>,
    ) {
        if i == candidates.len() {
            let ok_atoms = atoms.iter().all(|(x, y, set)| set.contains((cur[*x], cur[*y])));
            let ok_distinct = query.distinct.iter().all(|&(a, b)| cur[a] != cur[b]);
            if ok_atoms && ok_distinct {
                out.push(cur.clone());
            }
            return;
        }
        for &v in &candidates[i] {
            cur.push(v);
            let early = atoms
                .iter()
                .filter(|(x, y, _)| *x <= i && *y <= i && (*x == i || *y == i))
                .all(|(x, y, set)| set.contains((cur[*x], cur[*y])));
            if early {
                go(i + 1, cur, candidates, atoms, query, out);
            }
            cur.pop();
        }
    }
    go(0, &mut cur, &candidates, &atoms, query, &mut out);
    out.sort();
    out
}
