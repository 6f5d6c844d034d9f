use crate::lgf::{Direction, GridId, Slice};
use crate::VertexId;

#[derive(Debug)]
struct Node {
    from_bounds: [VertexId; 2],
    to_bounds: [VertexId; 2],
    path: Vec<u8>,
    pairs: Vec<(VertexId, VertexId)>,
    children: Vec<usize>,
    finalized: bool,
}

impl Node {
    fn contains(&self, (f, t): (VertexId, VertexId)) -> bool {
        f >= self.from_bounds[0] && f < self.from_bounds[1] && t >= self.to_bounds[0] && t < self.to_bounds[1]
    }
}

/// Temporary slice buffers of one block. A leaf holding more than `theta`
/// pairs is replaced by its quadrants and its pairs redistributed, so the
/// final leaves match a bulk quadrant partition of the same pairs.
#[derive(Debug)]
pub struct TempQuadtree {
    row: u32,
    col: u32,
    theta: usize,
    nodes: Vec<Node>,
    pending: usize,
}

fn halves(b: [VertexId; 2]) -> Vec<[VertexId; 2]> {
    if b[1] - b[0] <= 1 {
        vec![b]
    } else {
        let mid = b[0] + (b[1] - b[0]).div_ceil(2);
        vec![[b[0], mid], [mid, b[1]]]
    }
}

impl TempQuadtree {
    pub fn new(row: u32, col: u32, from_bounds: [VertexId; 2], to_bounds: [VertexId; 2], theta: usize) -> Self {
        TempQuadtree {
            row,
            col,
            theta,
            nodes: vec![Node {
                from_bounds,
                to_bounds,
                path: Vec::new(),
                pairs: Vec::new(),
                children: Vec::new(),
                finalized: false,
            }],
            pending: 0,
        }
    }

    /// Pairs held in leaves that are not finalized yet.
    pub fn pending(&self) -> usize {
        self.pending
    }

    /// Number of live leaf buffers.
    pub fn leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| n.children.is_empty() && !n.finalized)
            .count()
    }

    /// Inserts a pair. Returns `false` when it falls into an already
    /// finalized leaf (the pair is still kept and reported at the next
    /// finalization).
    pub fn insert(&mut self, pair: (VertexId, VertexId)) -> bool {
        let mut at = 0;
        while !self.nodes[at].children.is_empty() {
            at = *self.nodes[at]
                .children
                .iter()
                .find(|&&c| self.nodes[c].contains(pair))
                .expect("quadrants tile their parent");
        }
        let fresh = !self.nodes[at].finalized;
        self.nodes[at].finalized = false;
        self.nodes[at].pairs.push(pair);
        self.pending += 1;
        self.split_if_needed(at);
        fresh
    }

    fn split_if_needed(&mut self, at: usize) {
        if self.nodes[at].pairs.len() <= self.theta {
            return;
        }
        let fh = halves(self.nodes[at].from_bounds);
        let th = halves(self.nodes[at].to_bounds);
        if fh.len() * th.len() == 1 {
            return;
        }
        let pairs = std::mem::take(&mut self.nodes[at].pairs);
        let mut kids = Vec::new();
        for (i, f) in fh.iter().enumerate() {
            for (j, t) in th.iter().enumerate() {
                let mut path = self.nodes[at].path.clone();
                path.push((i * 2 + j) as u8);
                kids.push(self.nodes.len());
                self.nodes.push(Node {
                    from_bounds: *f,
                    to_bounds: *t,
                    path,
                    pairs: Vec::new(),
                    children: Vec::new(),
                    finalized: false,
                });
            }
        }
        self.nodes[at].children = kids.clone();
        for p in pairs {
            let c = *kids.iter().find(|&&c| self.nodes[c].contains(p)).unwrap();
            self.nodes[c].pairs.push(p);
        }
        for c in kids {
            self.split_if_needed(c);
        }
    }

    /// Finalizes the leaves whose source range ends at or before `hi`.
    /// Returns the new slices (ids unassigned) and the number of duplicate
    /// pairs dropped.
    pub fn finalize_upto(&mut self, hi: VertexId, grid: GridId) -> (Vec<Slice>, usize) {
        let mut out = Vec::new();
        let mut dups = 0;
        let mut stack = vec![0usize];
        while let Some(at) = stack.pop() {
            let node = &mut self.nodes[at];
            if !node.children.is_empty() {
                stack.extend(node.children.iter().rev().copied());
                continue;
            }
            if node.finalized || node.from_bounds[1] > hi {
                continue;
            }
            node.finalized = true;
            if node.pairs.is_empty() {
                continue;
            }
            let mut pairs = std::mem::take(&mut node.pairs);
            self.pending -= pairs.len();
            pairs.sort_unstable();
            let before = pairs.len();
            pairs.dedup();
            dups += before - pairs.len();
            out.push(Slice::from_sorted_edges(
                Direction::Out,
                grid,
                self.row,
                self.col,
                node.from_bounds,
                node.to_bounds,
                node.path.clone(),
                &pairs,
            ));
        }
        (out, dups)
    }

    pub fn finalize_all(&mut self, grid: GridId) -> (Vec<Slice>, usize) {
        self.finalize_upto(VertexId::MAX, grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lgf::partition_block;

    #[test]
    fn five_pairs_over_theta_four_split() {
        let mut t = TempQuadtree::new(3, 3, [10, 14], [10, 14], 4);
        for p in [(10, 11), (11, 12), (12, 13), (13, 10)] {
            t.insert(p);
        }
        assert_eq!(t.leaves(), 1);
        t.insert((10, 10));
        assert_eq!(t.leaves(), 4);
        assert_eq!(t.pending(), 5);
        let (slices, dups) = t.finalize_all(0);
        assert_eq!(dups, 0);
        assert!(slices.len() <= 4);
        assert_eq!(slices.iter().map(|s| s.edge_count()).sum::<usize>(), 5);
        assert_eq!(t.pending(), 0);
    }

    #[test]
    fn incremental_matches_bulk_partition() {
        let pairs: Vec<(u32, u32)> = (0..9).flat_map(|a| (0..7).map(move |b| (a, b + 20))).filter(|(a, b)| (a * 7 + b) % 3 != 0).collect();
        for theta in [1, 2, 3, 4, 64] {
            let mut bulk = Vec::new();
            partition_block(Direction::Out, 0, 0, 1, [0, 9], [20, 27], &pairs, theta, &mut bulk);
            let mut t = TempQuadtree::new(0, 1, [0, 9], [20, 27], theta);
            for &p in pairs.iter().rev() {
                t.insert(p);
            }
            let (mut inc, _) = t.finalize_all(0);
            inc.sort_by(|a, b| a.path.cmp(&b.path));
            bulk.sort_by(|a, b| a.path.cmp(&b.path));
            assert_eq!(inc, bulk, "theta {theta}");
        }
    }

    #[test]
    fn finalization_is_range_gated_and_idempotent() {
        let mut t = TempQuadtree::new(0, 0, [0, 4], [0, 4], 1);
        t.insert((0, 1));
        t.insert((3, 2));
        let (first, _) = t.finalize_upto(2, 0);
        assert_eq!(first.len(), 1);
        assert_eq!(first[0].edges().collect::<Vec<_>>(), vec![(0, 1)]);
        assert!(t.finalize_upto(2, 0).0.is_empty());
        let (rest, _) = t.finalize_all(0);
        assert_eq!(rest.len(), 1);
        assert!(t.finalize_all(0).0.is_empty());
        let (empty, _) = TempQuadtree::new(0, 0, [0, 4], [0, 4], 1).finalize_all(0);
        assert!(empty.is_empty());
    }
}
