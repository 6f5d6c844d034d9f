//! Splitting a traversal group into sub-TGs along root-leaf paths.

use std::collections::HashSet;
use std::ops::Range;

use crate::error::{Error, Result};

/// Resource estimates of the nodes on a tree path.
pub trait PathCost {
    /// Identity and resident bytes of the node's slice.
    fn slice(&self, node: u32) -> (u64, usize);
    /// Segments the node needs per start vertex.
    fn segments(&self, node: u32) -> usize;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubTg {
    /// Indices into the partitioned path list.
    pub paths: Range<usize>,
    pub input_bytes: usize,
    pub segments: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubTgPartition {
    pub sub_tgs: Vec<SubTg>,
    /// `cuts[k]` is the length of the path prefix shared by sub-TG `k` and
    /// sub-TG `k + 1`: the cut set.
    pub cuts: Vec<usize>,
}

impl SubTgPartition {
    /// Nodes of the cut set after sub-TG `k`.
    pub fn cut_set<'a>(&self, paths: &'a [Vec<u32>], k: usize) -> &'a [u32] {
        let last = self.sub_tgs[k].paths.end - 1;
        &paths[last][..self.cuts[k]]
    }
}

fn common_prefix(a: &[u32], b: &[u32]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

struct Acc<'c, C: PathCost> {
    cost: &'c C,
    slices: HashSet<u64>,
    bytes: usize,
    segments: usize,
}

impl<'c, C: PathCost> Acc<'c, C> {
    fn new(cost: &'c C) -> Self {
        Acc {
            cost,
            slices: HashSet::new(),
            bytes: 0,
            segments: 0,
        }
    }

    /// Cost of adding `nodes` (the part of a path not shared with the group).
    fn increment(&self, nodes: &[u32]) -> (usize, usize) {
        let mut seen = HashSet::new();
        let mut bytes = 0;
        let mut segments = 0;
        for &n in nodes {
            let (id, b) = self.cost.slice(n);
            if !self.slices.contains(&id) && seen.insert(id) {
                bytes += b;
            }
            segments += self.cost.segments(n);
        }
        (bytes, segments)
    }

    fn add(&mut self, nodes: &[u32]) {
        let (b, s) = self.increment(nodes);
        self.bytes += b;
        self.segments += s;
        for &n in nodes {
            self.slices.insert(self.cost.slice(n).0);
        }
    }
}

/// Greedily packs root-leaf `paths` (in DFS order) into sub-TGs whose
/// distinct slice bytes and segment counts stay within the budgets.
pub fn partition_sub_tgs<C: PathCost>(
    paths: &[Vec<u32>],
    cost: &C,
    input_budget: usize,
    segment_budget: usize,
) -> Result<SubTgPartition> {
    let mut sub_tgs = Vec::new();
    let mut cuts = Vec::new();
    let mut acc = Acc::new(cost);
    let mut begin = 0;
    for (i, path) in paths.iter().enumerate() {
        let (alone_b, alone_s) = Acc::new(cost).increment(path);
        if alone_b > input_budget || alone_s > segment_budget {
            let msg = if alone_b > input_budget {
                format!("a single tree path needs {alone_b} input bytes, budget is {input_budget}")
            } else {
                format!("a single tree path needs {alone_s} segments, budget is {segment_budget}")
            };
            return Err(Error::UnsatisfiableBudget(msg));
        }
        if i == begin {
            acc.add(path);
            continue;
        }
        let shared = common_prefix(&paths[i - 1], path);
        let (b, s) = acc.increment(&path[shared..]);
        if acc.bytes + b <= input_budget && acc.segments + s <= segment_budget {
            acc.add(&path[shared..]);
            continue;
        }
        sub_tgs.push(SubTg {
            paths: begin..i,
            input_bytes: acc.bytes,
            segments: acc.segments,
        });
        cuts.push(shared);
        acc = Acc::new(cost);
        acc.add(path);
        begin = i;
    }
    if begin < paths.len() {
        sub_tgs.push(SubTg {
            paths: begin..paths.len(),
            input_bytes: acc.bytes,
            segments: acc.segments,
        });
    }
    Ok(SubTgPartition { sub_tgs, cuts })
}
