use serde::{Deserialize, Serialize};

use super::Direction;
use crate::VertexId;

/// A threshold-bounded adjacency partition of one block.
///
/// Edges are stored oriented: for out-direction slices `from` is the source
/// vertex, for in-direction slices `from` is the destination vertex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slice {
    pub id: u32,
    pub grid: u32,
    pub dir: Direction,
    pub row: u32,
    pub col: u32,
    /// Quadrant bounds `[lo, hi)` along the `from` dimension.
    pub from_bounds: [VertexId; 2],
    /// Quadrant bounds `[lo, hi)` along the `to` dimension.
    pub to_bounds: [VertexId; 2],
    /// Smallest and one past the largest `from` vertex actually present.
    pub from_range: [VertexId; 2],
    /// Smallest and one past the largest `to` vertex actually present.
    pub to_range: [VertexId; 2],
    /// Quadrant path from the block root, one digit (0..4) per split.
    pub path: Vec<u8>,
    #[serde(skip)]
    pub sources: Vec<VertexId>,
    #[serde(skip)]
    pub offsets: Vec<u32>,
    #[serde(skip)]
    pub targets: Vec<VertexId>,
}

impl Slice {
    /// Builds a slice from oriented edges sorted by (from, to), no duplicates.
    pub(crate) fn from_sorted_edges(
        dir: Direction,
        grid: u32,
        row: u32,
        col: u32,
        from_bounds: [VertexId; 2],
        to_bounds: [VertexId; 2],
        path: Vec<u8>,
        edges: &[(VertexId, VertexId)],
    ) -> Slice {
        debug_assert!(!edges.is_empty());
        let mut sources = Vec::new();
        let mut offsets = vec![0u32];
        let mut targets = Vec::with_capacity(edges.len());
        let (mut to_lo, mut to_hi) = (VertexId::MAX, 0);
        for &(f, t) in edges {
            if sources.last() != Some(&f) {
                if !sources.is_empty() {
                    offsets.push(targets.len() as u32);
                }
                sources.push(f);
            }
            targets.push(t);
            to_lo = to_lo.min(t);
            to_hi = to_hi.max(t + 1);
        }
        offsets.push(targets.len() as u32);
        let from_range = [sources[0], sources[sources.len() - 1] + 1];
        Slice {
            id: 0,
            grid,
            dir,
            row,
            col,
            from_bounds,
            to_bounds,
            from_range,
            to_range: [to_lo, to_hi],
            path,
            sources,
            offsets,
            targets,
        }
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    /// Resident size of the adjacency arrays.
    pub fn bytes(&self) -> usize {
        4 * (self.sources.len() + self.offsets.len() + self.targets.len())
    }

    /// Sorted `to` vertices adjacent to `v`; empty when `v` has no edge here.
    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        match self.sources.binary_search(&v) {
            Ok(i) => &self.targets[self.offsets[i] as usize..self.offsets[i + 1] as usize],
            Err(_) => &[],
        }
    }

    pub fn has_source(&self, v: VertexId) -> bool {
        self.sources.binary_search(&v).is_ok()
    }

    /// Oriented (from, to) edges in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.sources.iter().enumerate().flat_map(move |(i, &s)| {
            self.targets[self.offsets[i] as usize..self.offsets[i + 1] as usize]
                .iter()
                .map(move |&t| (s, t))
        })
    }

    /// Whether `to_range` intersects `[lo, hi)`.
    pub fn to_overlaps(&self, lo: VertexId, hi: VertexId) -> bool {
        self.to_range[0] < hi && lo < self.to_range[1]
    }

    /// Whether `from_range` intersects `[lo, hi)`.
    pub fn from_overlaps(&self, lo: VertexId, hi: VertexId) -> bool {
        self.from_range[0] < hi && lo < self.from_range[1]
    }

    /// Checks the structural invariants, returning a description of the first
    /// violation.
    pub fn validate(&self, theta: usize) -> Result<(), String> {
        let fail = |m: &str| Err(format!("slice {} ({}): {m}", self.id, self.dir));
        if self.targets.is_empty() {
            return fail("empty slice");
        }
        if self.edge_count() > theta {
            return fail("edge count above threshold");
        }
        if self.offsets.len() != self.sources.len() + 1
            || self.offsets[0] != 0
            || *self.offsets.last().unwrap() as usize != self.targets.len()
        {
            return fail("offsets do not match arrays");
        }
        if self.sources.windows(2).any(|w| w[0] >= w[1]) {
            return fail("sources not strictly ascending");
        }
        let (mut to_lo, mut to_hi) = (VertexId::MAX, 0);
        for i in 0..self.sources.len() {
            let list = &self.targets[self.offsets[i] as usize..self.offsets[i + 1] as usize];
            if list.is_empty() {
                return fail("source without targets");
            }
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return fail("targets not strictly ascending");
            }
            for &t in list {
                if t < self.to_bounds[0] || t >= self.to_bounds[1] {
                    return fail("target outside quadrant");
                }
                to_lo = to_lo.min(t);
                to_hi = to_hi.max(t + 1);
            }
        }
        let (f_lo, f_hi) = (self.sources[0], *self.sources.last().unwrap() + 1);
        if f_lo < self.from_bounds[0] || f_hi > self.from_bounds[1] {
            return fail("source outside quadrant");
        }
        if self.from_range != [f_lo, f_hi] || self.to_range != [to_lo, to_hi] {
            return fail("range metadata does not match contents");
        }
        Ok(())
    }
}

/// Recursive quadrant partitioning of one block's oriented edges.
///
/// `edges` must be sorted by (from, to) and free of duplicates. Leaves are
/// produced in (low, low), (low, high), (high, low), (high, high) order and
/// empty quadrants are dropped.
#[allow(clippy::too_many_arguments)]
pub(crate) fn partition_block(
    dir: Direction,
    grid: u32,
    row: u32,
    col: u32,
    from_bounds: [VertexId; 2],
    to_bounds: [VertexId; 2],
    edges: &[(VertexId, VertexId)],
    theta: usize,
    out: &mut Vec<Slice>,
) {
    fn go(
        ctx: (Direction, u32, u32, u32),
        fb: [VertexId; 2],
        tb: [VertexId; 2],
        edges: Vec<(VertexId, VertexId)>,
        theta: usize,
        path: Vec<u8>,
        out: &mut Vec<Slice>,
    ) {
        if edges.is_empty() {
            return;
        }
        let (dir, grid, row, col) = ctx;
        if edges.len() <= theta {
            out.push(Slice::from_sorted_edges(dir, grid, row, col, fb, tb, path, &edges));
            return;
        }
        let halves = |b: [VertexId; 2]| -> Vec<[VertexId; 2]> {
            if b[1] - b[0] <= 1 {
                vec![b]
            } else {
                let mid = b[0] + (b[1] - b[0]).div_ceil(2);
                vec![[b[0], mid], [mid, b[1]]]
            }
        };
        let fh = halves(fb);
        let th = halves(tb);
        assert!(fh.len() * th.len() > 1, "a single cell holds at most one edge");
        for (i, f) in fh.iter().enumerate() {
            for (j, t) in th.iter().enumerate() {
                let part: Vec<_> = edges
                    .iter()
                    .copied()
                    .filter(|&(a, b)| a >= f[0] && a < f[1] && b >= t[0] && b < t[1])
                    .collect();
                let mut p = path.clone();
                p.push((i * 2 + j) as u8);
                go(ctx, *f, *t, part, theta, p, out);
            }
        }
    }
    go(
        (dir, grid, row, col),
        from_bounds,
        to_bounds,
        edges.to_vec(),
        theta,
        Vec::new(),
        out,
    );
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neighbors_and_ranges() {
        let s = Slice::from_sorted_edges(
            Direction::Out,
            0,
            0,
            0,
            [0, 4],
            [0, 4],
            vec![],
            &[(0, 1), (0, 3)],
        );
        assert_eq!(s.neighbors(0), &[1, 3]);
        assert!(s.neighbors(1).is_empty());
        assert_eq!(s.from_range, [0, 1]);
        assert_eq!(s.to_range, [1, 4]);
        assert_eq!(s.bytes(), 20);
        s.validate(4).unwrap();
        assert!(s.validate(1).is_err());
    }

    #[test]
    fn split_respects_threshold() {
        let edges: Vec<(u32, u32)> = (0..4).flat_map(|a| (4..8).map(move |b| (a, b))).collect();
        for theta in [1, 2, 3, 5, 16] {
            let mut out = Vec::new();
            partition_block(Direction::Out, 0, 0, 1, [0, 4], [4, 8], &edges, theta, &mut out);
            assert!(out.iter().all(|s| s.edge_count() <= theta));
            let total: usize = out.iter().map(|s| s.edge_count()).sum();
            assert_eq!(total, 16);
            for s in &out {
                s.validate(theta).unwrap();
            }
        }
    }

    #[test]
    fn odd_widths_split_at_ceiling() {
        let edges = vec![(0, 0), (0, 2), (2, 0), (2, 2)];
        let mut out = Vec::new();
        partition_block(Direction::Out, 0, 0, 0, [0, 3], [0, 3], &edges, 1, &mut out);
        let bounds: Vec<_> = out.iter().map(|s| (s.from_bounds, s.to_bounds)).collect();
        assert_eq!(
            bounds,
            vec![
                ([0, 2], [0, 2]),
                ([0, 2], [2, 3]),
                ([2, 3], [0, 2]),
                ([2, 3], [2, 3])
            ]
        );
    }
}
