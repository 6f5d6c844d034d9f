//! Conjunctive RPQs: each distinct atom expression is materialized once as a
//! virtual grid, in the directions the matching order needs, and the atoms
//! are combined by a multiway intersection join one query vertex at a time.

mod parse;

use std::collections::BTreeMap;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{EngineConfig, PlanVariant};
use crate::error::{Error, Result};
use crate::lgf::{Direction, GridDir, LgfStore};
use crate::plan::{ExecutionPlan, VIRTUAL_PREFIX};
use crate::regex::Regex;
use crate::stats::QueryStats;
use crate::traversal::run_rpq;
use crate::VertexId;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryVertex {
    pub name: String,
    /// Required vertex label.
    pub label: Option<String>,
    /// Required data vertex name.
    pub bind: Option<String>,
}

/// `from -[regex]-> to`, endpoints as indices into the query vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrpqAtom {
    pub from: usize,
    pub to: usize,
    pub text: String,
    pub regex: Regex,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrpqQuery {
    pub name: String,
    pub vertices: Vec<QueryVertex>,
    pub atoms: Vec<CrpqAtom>,
    /// Vertex pairs that must map to different data vertices.
    pub distinct: Vec<(usize, usize)>,
}

impl CrpqQuery {
    pub fn parse(text: &str) -> Result<CrpqQuery> {
        parse::parse(text)
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v.name == name)
    }

    /// Whether the atoms connect every query vertex.
    pub fn is_connected(&self) -> bool {
        let n = self.vertices.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for a in &self.atoms {
                for (x, y) in [(a.from, a.to), (a.to, a.from)] {
                    if x == u && !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

impl FromStr for CrpqQuery {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CrpqQuery::parse(s)
    }
}

/// Atoms sharing one expression, materialized together.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AtomGroup {
    pub expr: String,
    pub atoms: Vec<usize>,
    /// Directions the join reads; empty until the order is fixed.
    pub directions: Vec<Direction>,
    pub grid: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrpqPlan {
    pub query: CrpqQuery,
    /// Matching order over query vertices; `None` picks one by atom
    /// cardinality after materialization.
    pub order: Option<Vec<usize>>,
    pub groups: Vec<AtomGroup>,
}

#[derive(Clone, Debug, Default)]
pub struct CrpqResult {
    /// Data vertex tuples in declared query-vertex order, ascending.
    pub tuples: Vec<Vec<VertexId>>,
    pub order: Vec<usize>,
    pub groups: Vec<AtomGroup>,
    /// Result pairs per atom group.
    pub cardinalities: Vec<usize>,
    pub stats: QueryStats,
}

/// Directions each atom group needs under `order`: out when the source
/// precedes the target, in otherwise.
fn directions(query: &CrpqQuery, groups: &mut [AtomGroup], order: &[usize]) {
    let mut rank = vec![0; query.vertices.len()];
    for (i, &u) in order.iter().enumerate() {
        rank[u] = i;
    }
    for g in groups {
        let mut dirs = Vec::new();
        for &a in &g.atoms {
            let atom = &query.atoms[a];
            let d = if rank[atom.from] <= rank[atom.to] {
                Direction::Out
            } else {
                Direction::In
            };
            if !dirs.contains(&d) {
                dirs.push(d);
            }
        }
        dirs.sort();
        g.directions = dirs;
    }
}

/// Groups atoms by expression and, for an explicit order, fixes directions.
pub fn plan_crpq(query: &CrpqQuery, order: Option<&[&str]>) -> Result<CrpqPlan> {
    if !query.is_connected() {
        return Err(Error::InvalidQuery(format!(
            "query `{}` is disconnected; cross products are not supported",
            query.name
        )));
    }
    let mut by_expr: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    let mut first_seen = Vec::new();
    for (i, a) in query.atoms.iter().enumerate() {
        let e = by_expr.entry(a.text.as_str()).or_default();
        if e.is_empty() {
            first_seen.push(a.text.as_str());
        }
        e.push(i);
    }
    let mut groups: Vec<AtomGroup> = first_seen
        .iter()
        .enumerate()
        .map(|(i, e)| AtomGroup {
            expr: e.to_string(),
            atoms: by_expr[e].clone(),
            directions: Vec::new(),
            grid: format!("{VIRTUAL_PREFIX}q{i}"),
        })
        .collect();
    let order = match order {
        None => None,
        Some(names) => {
            let mut idx = Vec::with_capacity(names.len());
            for n in names {
                let i = query
                    .vertex_index(n)
                    .ok_or_else(|| Error::InvalidQuery(format!("order names unknown query vertex `{n}`")))?;
                if idx.contains(&i) {
                    return Err(Error::InvalidQuery(format!("order repeats `{n}`")));
                }
                idx.push(i);
            }
            if idx.len() != query.vertices.len() {
                return Err(Error::InvalidQuery("order must list every query vertex".into()));
            }
            directions(query, &mut groups, &idx);
            Some(idx)
        }
    };
    Ok(CrpqPlan {
        query: query.clone(),
        order,
        groups,
    })
}

/// Order starting at the endpoints of the smallest atom, then repeatedly
/// adding the unplaced vertex joined to the placed ones by the smallest atom.
fn auto_order(query: &CrpqQuery, atom_card: &[usize]) -> Vec<usize> {
    let n = query.vertices.len();
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    if let Some((a, _)) = atom_card.iter().enumerate().min_by_key(|&(i, c)| (*c, i)) {
        let atom = &query.atoms[a];
        for u in [atom.from, atom.to] {
            if !placed[u] {
                placed[u] = true;
                order.push(u);
            }
        }
    } else {
        placed[0] = true;
        order.push(0);
    }
    while order.len() < n {
        let next = query
            .atoms
            .iter()
            .enumerate()
            .filter_map(|(i, a)| match (placed[a.from], placed[a.to]) {
                (true, false) => Some((atom_card[i], a.to)),
                (false, true) => Some((atom_card[i], a.from)),
                _ => None,
            })
            .min()
            .map(|(_, u)| u)
            .expect("query is connected");
        placed[next] = true;
        order.push(next);
    }
    order
}

/// Leapfrog intersection of ascending, duplicate-free streams.
pub fn intersect(streams: &[&[VertexId]]) -> Vec<VertexId> {
    match streams {
        [] => return Vec::new(),
        [one] => return one.to_vec(),
        _ => {}
    }
    if streams.iter().any(|s| s.is_empty()) {
        return Vec::new();
    }
    let k = streams.len();
    let mut pos = vec![0usize; k];
    let mut out = Vec::new();
    let mut max = streams.iter().map(|s| s[0]).max().unwrap();
    let mut i = 0;
    let mut agree = 0;
    loop {
        let s = streams[i];
        let p = pos[i] + s[pos[i]..].partition_point(|&v| v < max);
        if p == s.len() {
            return out;
        }
        pos[i] = p;
        if s[p] == max {
            agree += 1;
            if agree == k {
                out.push(max);
                pos[i] += 1;
                if pos[i] == s.len() {
                    return out;
                }
                max = s[pos[i]];
                agree = 1;
            }
        } else {
            max = s[p];
            agree = 1;
        }
        i = (i + 1) % k;
    }
}

struct Step {
    vertex: usize,
    /// Candidate domain after label and binding filters.
    lo: VertexId,
    hi: VertexId,
    bind: Option<VertexId>,
    /// (bound query vertex, grid direction) streams to intersect.
    streams: Vec<(usize, usize, Direction)>,
    /// Atom groups whose self-loop atoms sit on this vertex.
    loops: Vec<usize>,
    distinct: Vec<usize>,
}

struct Join<'a> {
    steps: Vec<Step>,
    dirs: Vec<[Option<&'a GridDir>; 2]>,
    store: &'a LgfStore,
}

impl Join<'_> {
    fn grid(&self, group: usize, dir: Direction) -> &GridDir {
        self.dirs[group][dir.index()].expect("declared direction")
    }

    fn candidates(&self, step: &Step, f: &[VertexId]) -> Vec<VertexId> {
        let lists: Vec<Vec<VertexId>> = step
            .streams
            .iter()
            .map(|&(other, group, dir)| {
                let v = f[other];
                let mut l = self.grid(group, dir).neighbors(self.store.block_of(v), v);
                l.dedup();
                l
            })
            .collect();
        let mut cands = if lists.is_empty() {
            (step.lo..step.hi).collect()
        } else {
            let refs: Vec<&[VertexId]> = lists.iter().map(Vec::as_slice).collect();
            intersect(&refs)
        };
        cands.retain(|&v| {
            v >= step.lo
                && v < step.hi
                && step.bind.is_none_or(|b| b == v)
                && step.distinct.iter().all(|&o| f[o] != v)
                && step.loops.iter().all(|&g| {
                    self.grid(g, Direction::Out)
                        .neighbors(self.store.block_of(v), v)
                        .binary_search(&v)
                        .is_ok()
                })
        });
        cands
    }

    fn extend(&self, i: usize, f: &mut Vec<VertexId>, out: &mut Vec<Vec<VertexId>>) {
        if i == self.steps.len() {
            out.push(f.clone());
            return;
        }
        let step = &self.steps[i];
        for v in self.candidates(step, f) {
            f[step.vertex] = v;
            self.extend(i + 1, f, out);
        }
        f[step.vertex] = VertexId::MAX;
    }
}

/// Materializes the atom groups and joins them.
pub fn execute_crpq(plan: &CrpqPlan, store: &LgfStore, config: &EngineConfig) -> Result<CrpqResult> {
    let query = &plan.query;
    let mut store = store.clone();
    let mut stats = QueryStats::default();
    let mut groups = plan.groups.clone();
    let mut cardinalities = Vec::with_capacity(groups.len());
    let mut group_of = vec![0; query.atoms.len()];
    for (gi, g) in groups.iter().enumerate() {
        for &a in &g.atoms {
            group_of[a] = gi;
        }
        let regex = &query.atoms[g.atoms[0]].regex;
        let variant = match config.plan {
            PlanVariant::Forward => PlanVariant::Forward,
            v => {
                if ExecutionPlan::build(regex, v).is_ok() {
                    v
                } else {
                    PlanVariant::Forward
                }
            }
        };
        let rpq = ExecutionPlan::build(regex, variant)?;
        let out = run_rpq(&rpq, &store, config)?;
        stats.absorb(&out.stats);
        cardinalities.push(out.pairs.len());
        store.register_result_grid(&g.grid, out.slices, config.theta)?;
    }
    let order = match &plan.order {
        Some(o) => o.clone(),
        None => {
            let atom_card: Vec<usize> = group_of.iter().map(|&g| cardinalities[g]).collect();
            let order = auto_order(query, &atom_card);
            directions(query, &mut groups, &order);
            order
        }
    };
    for g in &groups {
        if g.directions.contains(&Direction::In) {
            let id = store.grid_id(&g.grid).expect("registered");
            store.transpose_grid(id)?;
        }
    }
    let mut dirs = Vec::with_capacity(groups.len());
    for g in &groups {
        let id = store.grid_id(&g.grid).expect("registered");
        let mut d = [None, None];
        for &dir in &g.directions {
            d[dir.index()] = Some(store.grid_dir(id, dir)?);
        }
        let self_loop = g.atoms.iter().any(|&a| query.atoms[a].from == query.atoms[a].to);
        if self_loop && d[Direction::Out.index()].is_none() {
            d[Direction::Out.index()] = Some(store.grid_dir(id, Direction::Out)?);
        }
        dirs.push(d);
    }

    let mut rank = vec![0; query.vertices.len()];
    for (i, &u) in order.iter().enumerate() {
        rank[u] = i;
    }
    let mut steps = Vec::with_capacity(order.len());
    let mut empty = false;
    for (i, &u) in order.iter().enumerate() {
        let qv = &query.vertices[u];
        let (lo, hi) = match &qv.label {
            None => (0, store.num_vertices() as VertexId),
            Some(l) => match store.label_range(l) {
                Ok(r) => (r.lo, r.hi),
                Err(_) => {
                    empty = true;
                    (0, 0)
                }
            },
        };
        let bind = match &qv.bind {
            None => None,
            Some(name) => match store.vertex_id(name) {
                Ok(v) => Some(v),
                Err(_) => {
                    empty = true;
                    None
                }
            },
        };
        let mut streams = Vec::new();
        let mut loops = Vec::new();
        for (a, atom) in query.atoms.iter().enumerate() {
            let g = group_of[a];
            if atom.from == u && atom.to == u {
                if !loops.contains(&g) {
                    loops.push(g);
                }
            } else if atom.to == u && rank[atom.from] < i {
                streams.push((atom.from, g, Direction::Out));
            } else if atom.from == u && rank[atom.to] < i {
                streams.push((atom.to, g, Direction::In));
            }
        }
        let distinct = query
            .distinct
            .iter()
            .filter_map(|&(a, b)| match (a == u, b == u) {
                (true, false) if rank[b] < i => Some(b),
                (false, true) if rank[a] < i => Some(a),
                _ => None,
            })
            .collect();
        steps.push(Step {
            vertex: u,
            lo,
            hi,
            bind,
            streams,
            loops,
            distinct,
        });
    }
    let self_distinct = query.distinct.iter().any(|&(a, b)| a == b);

    let mut tuples = Vec::new();
    if !empty && !self_distinct && !steps.is_empty() {
        let join = Join {
            steps,
            dirs,
            store: &store,
        };
        let n = query.vertices.len();
        let first = join.candidates(&join.steps[0], &vec![VertexId::MAX; n]);
        let run = |v: VertexId| {
            let mut f = vec![VertexId::MAX; n];
            f[join.steps[0].vertex] = v;
            let mut out = Vec::new();
            join.extend(1, &mut f, &mut out);
            out
        };
        let parts: Vec<Vec<Vec<VertexId>>> = if config.workers > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(config.workers)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            pool.install(|| first.par_iter().map(|&v| run(v)).collect())
        } else {
            first.iter().map(|&v| run(v)).collect()
        };
        tuples = parts.into_iter().flatten().collect();
        tuples.sort();
    }
    Ok(CrpqResult {
        tuples,
        order,
        groups,
        cardinalities,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture;

    fn fixture_store() -> LgfStore {
        LgfStore::from_graph(&fixture::graph(), 4).unwrap()
    }

    fn config() -> EngineConfig {
        EngineConfig {
            theta: 4,
            static_hop: 3,
            ..EngineConfig::default()
        }
    }

    #[test]
    fn leapfrog() {
        assert_eq!(intersect(&[&[10, 12], &[10, 11, 12, 13]]), vec![10, 12]);
        assert_eq!(intersect(&[&[1, 2], &[]]), Vec::<u32>::new());
        assert_eq!(intersect(&[&[3, 5, 8]]), vec![3, 5, 8]);
        assert_eq!(intersect(&[&[1, 3, 5, 7, 9], &[3, 4, 5, 9], &[0, 3, 9, 10]]), vec![3, 9]);
        assert_eq!(intersect(&[&[1, 2, 3], &[1, 2, 3]]), vec![1, 2, 3]);
        assert!(intersect(&[]).is_empty());
    }

    #[test]
    fn fixture_directions_under_given_order() {
        let q = CrpqQuery::parse(fixture::TRIANGLE_CRPQ).unwrap();
        let plan = plan_crpq(&q, Some(&["u2", "u3", "u4"])).unwrap();
        let ab = plan.groups.iter().find(|g| g.expr == "ab").unwrap();
        let cs = plan.groups.iter().find(|g| g.expr == "c*").unwrap();
        assert_eq!(ab.directions, vec![Direction::Out, Direction::In]);
        assert_eq!(cs.directions, vec![Direction::Out]);
    }

    #[test]
    fn fixture_triangle_under_every_order() {
        let q = CrpqQuery::parse(fixture::TRIANGLE_CRPQ).unwrap();
        let want: Vec<Vec<u32>> = fixture::TRIANGLE_TUPLES.iter().map(|t| t.to_vec()).collect();
        let names = ["u2", "u3", "u4"];
        for order in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
            let o: Vec<&str> = order.iter().map(|&i| names[i]).collect();
            let plan = plan_crpq(&q, Some(&o)).unwrap();
            let got = execute_crpq(&plan, &fixture_store(), &config()).unwrap();
            assert_eq!(got.tuples, want, "order {o:?}");
        }
        let auto = execute_crpq(&plan_crpq(&q, None).unwrap(), &fixture_store(), &config()).unwrap();
        assert_eq!(auto.tuples, want);
        assert_eq!(auto.stats.segments_leaked, 0);
    }

    #[test]
    fn fixture_triangle_distinct() {
        let q = CrpqQuery::parse(fixture::TRIANGLE_CRPQ_DISTINCT).unwrap();
        let got = execute_crpq(&plan_crpq(&q, None).unwrap(), &fixture_store(), &config()).unwrap();
        assert_eq!(got.tuples, vec![vec![10, 0, 12], vec![12, 0, 10]]);
    }

    #[test]
    fn unknown_label_is_empty_and_disconnected_is_rejected() {
        let q = CrpqQuery::parse("CRPQ t { vertex x:Nope; vertex y; edge x -[a]-> y; }").unwrap();
        let got = execute_crpq(&plan_crpq(&q, None).unwrap(), &fixture_store(), &config()).unwrap();
        assert!(got.tuples.is_empty());
        let q = CrpqQuery::parse("CRPQ t { vertex x; vertex y; vertex z; edge x -[a]-> y; }").unwrap();
        assert!(matches!(plan_crpq(&q, None), Err(Error::InvalidQuery(_))));
    }

    #[test]
    fn binding_and_self_loop() {
        let q = CrpqQuery::parse("CRPQ t { vertex x:A; vertex y; edge x -[a]-> y; edge x -[cc]-> x; bind(x, \"v2\"); }").unwrap();
        let got = execute_crpq(&plan_crpq(&q, None).unwrap(), &fixture_store(), &config()).unwrap();
        assert_eq!(got.tuples, vec![vec![2, 5]]);
    }
}
