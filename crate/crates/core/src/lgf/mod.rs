//! Labeled grid format: one grid per edge label, blocks per (source label,
//! destination label) pair, blocks split into slices of at most `theta`
//! edges, kept for both edge directions.

mod persist;
mod slice;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::RawGraph;
use crate::VertexId;

pub use slice::Slice;
pub(crate) use slice::partition_block;

pub type GridId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Out,
    In,
}

impl Direction {
    pub fn flip(self) -> Direction {
        match self {
            Direction::Out => Direction::In,
            Direction::In => Direction::Out,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Out => "out",
            Direction::In => "in",
        }
    }

    pub(crate) fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A vertex label and the id range of its block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexLabelRange {
    pub name: String,
    pub lo: VertexId,
    pub hi: VertexId,
}

impl VertexLabelRange {
    pub fn width(&self) -> u32 {
        self.hi - self.lo
    }
}

/// Slices of one grid in one direction, indexed by block coordinates.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GridDir {
    slices: Vec<Slice>,
    blocks: BTreeMap<(u32, u32), Vec<usize>>,
}

impl GridDir {
    fn new(slices: Vec<Slice>) -> GridDir {
        let mut blocks: BTreeMap<(u32, u32), Vec<usize>> = BTreeMap::new();
        for (i, s) in slices.iter().enumerate() {
            blocks.entry((s.row, s.col)).or_default().push(i);
        }
        GridDir { slices, blocks }
    }

    pub fn slices(&self) -> &[Slice] {
        &self.slices
    }

    pub fn block_coords(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.blocks.keys().copied()
    }

    pub fn block_slices(&self, row: u32, col: u32) -> Option<Vec<&Slice>> {
        self.blocks
            .get(&(row, col))
            .map(|ix| ix.iter().map(|&i| &self.slices[i]).collect())
    }

    /// Slices of one block row, in id order.
    pub fn row_slices(&self, row: u32) -> impl Iterator<Item = &Slice> + '_ {
        self.blocks
            .range((row, 0)..=(row, u32::MAX))
            .flat_map(move |(_, ix)| ix.iter().map(move |&i| &self.slices[i]))
    }

    /// Merged sorted neighbour list of `v` across the slices of its row.
    pub fn neighbors(&self, row: u32, v: VertexId) -> Vec<VertexId> {
        let mut out: Vec<VertexId> = Vec::new();
        for s in self.row_slices(row) {
            out.extend_from_slice(s.neighbors(v));
        }
        out.sort_unstable();
        out
    }

    pub fn edge_count(&self) -> usize {
        self.slices.iter().map(Slice::edge_count).sum()
    }

    /// All oriented edges, sorted.
    pub fn edges(&self) -> Vec<(VertexId, VertexId)> {
        let mut e: Vec<_> = self.slices.iter().flat_map(|s| s.edges()).collect();
        e.sort_unstable();
        e
    }
}

/// One edge label (or materialized result) with its per-direction slices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grid {
    pub id: GridId,
    pub name: String,
    pub is_virtual: bool,
    /// Threshold the slices of this grid were partitioned under.
    pub theta: usize,
    dirs: [Option<GridDir>; 2],
}

impl Grid {
    pub fn dir(&self, dir: Direction) -> Option<&GridDir> {
        self.dirs[dir.index()].as_ref()
    }

    pub fn has_dir(&self, dir: Direction) -> bool {
        self.dirs[dir.index()].is_some()
    }

    /// Distinct (source, destination) edges in out orientation.
    pub fn edge_set(&self) -> Vec<(VertexId, VertexId)> {
        if let Some(d) = self.dir(Direction::Out) {
            d.edges()
        } else if let Some(d) = self.dir(Direction::In) {
            let mut e: Vec<_> = d.edges().into_iter().map(|(a, b)| (b, a)).collect();
            e.sort_unstable();
            e
        } else {
            Vec::new()
        }
    }
}

/// A block of one grid, direction and coordinate.
#[derive(Clone, Debug)]
pub struct Block<'a> {
    pub row: u32,
    pub col: u32,
    pub grid: GridId,
    pub dir: Direction,
    pub slices: Vec<&'a Slice>,
}

/// The grid store. Cloning is cheap: grids are shared.
#[derive(Clone, Debug)]
pub struct LgfStore {
    theta: usize,
    vertex_names: Arc<Vec<String>>,
    vertex_index: Arc<HashMap<String, VertexId>>,
    labels: Arc<Vec<VertexLabelRange>>,
    block_of: Arc<Vec<u32>>,
    grids: Vec<Arc<Grid>>,
    next_slice_id: [u32; 2],
}

impl PartialEq for LgfStore {
    fn eq(&self, other: &Self) -> bool {
        self.theta == other.theta
            && self.vertex_names == other.vertex_names
            && self.labels == other.labels
            && self.grids == other.grids
            && self.next_slice_id == other.next_slice_id
    }
}

impl LgfStore {
    /// Reads the TSV files and builds the store.
    pub fn ingest(vertex_file: &Path, edge_file: &Path, theta: usize) -> Result<LgfStore> {
        let g = RawGraph::from_tsv(vertex_file, edge_file)?;
        LgfStore::from_graph(&g, theta)
    }

    /// Builds the store; vertices are renumbered in (label, name) order.
    pub fn from_graph(graph: &RawGraph, theta: usize) -> Result<LgfStore> {
        if theta == 0 {
            return Err(Error::Config("theta must be positive".into()));
        }
        let g = graph.canonical();
        let n = g.num_vertices() as VertexId;
        let mut labels: Vec<VertexLabelRange> = Vec::new();
        let mut block_of = Vec::with_capacity(n as usize);
        for v in 0..n {
            let name = g.vertex_label(v);
            if labels.last().map(|l| l.name.as_str()) != Some(name) {
                labels.push(VertexLabelRange {
                    name: name.to_string(),
                    lo: v,
                    hi: v,
                });
            }
            labels.last_mut().unwrap().hi = v + 1;
            block_of.push(labels.len() as u32 - 1);
        }
        let names: Vec<String> = (0..n).map(|v| g.name(v).to_string()).collect();
        let index = names.iter().enumerate().map(|(i, s)| (s.clone(), i as VertexId)).collect();
        let mut store = LgfStore {
            theta,
            vertex_names: Arc::new(names),
            vertex_index: Arc::new(index),
            labels: Arc::new(labels),
            block_of: Arc::new(block_of),
            grids: Vec::new(),
            next_slice_id: [0, 0],
        };
        for (z, label) in g.edge_labels().iter().enumerate() {
            let edges: Vec<(VertexId, VertexId)> = g
                .edges()
                .filter(|&(_, _, l)| l as usize == z)
                .map(|(s, d, _)| (s, d))
                .collect();
            store.add_grid(label, false, &edges, true)?;
        }
        Ok(store)
    }

    fn add_grid(
        &mut self,
        name: &str,
        is_virtual: bool,
        edges: &[(VertexId, VertexId)],
        both: bool,
    ) -> Result<GridId> {
        if self.grid_id(name).is_some() {
            return Err(Error::NameCollision(name.to_string()));
        }
        let id = self.grids.len() as GridId;
        let theta = self.theta;
        let out = self.build_dir(id, Direction::Out, edges, theta);
        let inn = if both {
            Some(self.build_dir(id, Direction::In, edges, theta))
        } else {
            None
        };
        self.grids.push(Arc::new(Grid {
            id,
            name: name.to_string(),
            is_virtual,
            theta,
            dirs: [Some(out), inn],
        }));
        Ok(id)
    }

    /// Partitions `edges` (always given as (src, dst)) into slices of one
    /// direction and assigns fresh slice ids.
    fn build_dir(
        &mut self,
        grid: GridId,
        dir: Direction,
        edges: &[(VertexId, VertexId)],
        theta: usize,
    ) -> GridDir {
        let mut oriented: Vec<(VertexId, VertexId)> = match dir {
            Direction::Out => edges.to_vec(),
            Direction::In => edges.iter().map(|&(s, d)| (d, s)).collect(),
        };
        oriented.sort_unstable();
        oriented.dedup();
        let mut by_block: BTreeMap<(u32, u32), Vec<(VertexId, VertexId)>> = BTreeMap::new();
        for &(f, t) in &oriented {
            by_block
                .entry((self.block_of[f as usize], self.block_of[t as usize]))
                .or_default()
                .push((f, t));
        }
        let mut slices = Vec::new();
        for ((row, col), list) in by_block {
            let fb = [self.labels[row as usize].lo, self.labels[row as usize].hi];
            let tb = [self.labels[col as usize].lo, self.labels[col as usize].hi];
            partition_block(dir, grid, row, col, fb, tb, &list, theta, &mut slices);
        }
        self.assign_ids(dir, &mut slices);
        GridDir::new(slices)
    }

    fn assign_ids(&mut self, dir: Direction, slices: &mut [Slice]) {
        for s in slices.iter_mut() {
            s.id = self.next_slice_id[dir.index()];
            self.next_slice_id[dir.index()] += 1;
        }
    }

    /// Registers materialized out-direction slices, partitioned under
    /// `theta`, as a new virtual grid. Slices are reordered by (row, col,
    /// quadrant path) before ids are assigned.
    pub fn register_result_grid(
        &mut self,
        name: &str,
        mut slices: Vec<Slice>,
        theta: usize,
    ) -> Result<GridId> {
        if self.grid_id(name).is_some() {
            return Err(Error::NameCollision(name.to_string()));
        }
        let id = self.grids.len() as GridId;
        slices.sort_by(|a, b| (a.row, a.col, &a.path).cmp(&(b.row, b.col, &b.path)));
        for s in slices.iter_mut() {
            if s.dir != Direction::Out {
                return Err(Error::CorruptStore("result slices must be out-direction".into()));
            }
            s.grid = id;
            s.validate(theta).map_err(Error::CorruptStore)?;
        }
        self.assign_ids(Direction::Out, &mut slices);
        self.grids.push(Arc::new(Grid {
            id,
            name: name.to_string(),
            is_virtual: true,
            theta,
            dirs: [Some(GridDir::new(slices)), None],
        }));
        Ok(id)
    }

    /// Registers a virtual grid from a plain edge list (out direction only).
    pub fn register_edge_grid(&mut self, name: &str, edges: &[(VertexId, VertexId)]) -> Result<GridId> {
        self.add_grid(name, true, edges, false)
    }

    /// Threshold used for grids built from now on.
    pub fn set_theta(&mut self, theta: usize) {
        self.theta = theta;
    }

    /// Fills in the missing direction of a grid from the one present,
    /// re-partitioned under the store threshold. No-op when both exist.
    pub fn transpose_grid(&mut self, id: GridId) -> Result<GridId> {
        let grid = self.grid(id)?.clone();
        let missing = match (grid.has_dir(Direction::Out), grid.has_dir(Direction::In)) {
            (true, true) => return Ok(id),
            (true, false) => Direction::In,
            (false, true) => Direction::Out,
            (false, false) => {
                return Err(Error::MissingDirection {
                    grid: grid.name.clone(),
                    dir: "any",
                })
            }
        };
        let edges = grid.edge_set();
        let built = self.build_dir(id, missing, &edges, grid.theta);
        let mut g = (*grid).clone();
        g.dirs[missing.index()] = Some(built);
        self.grids[id as usize] = Arc::new(g);
        Ok(id)
    }

    pub fn theta(&self) -> usize {
        self.theta
    }

    pub fn num_vertices(&self) -> usize {
        self.vertex_names.len()
    }

    pub fn vertex_name(&self, v: VertexId) -> &str {
        &self.vertex_names[v as usize]
    }

    pub fn vertex_id(&self, name: &str) -> Result<VertexId> {
        self.vertex_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownVertex(name.to_string()))
    }

    pub fn vertex_labels(&self) -> &[VertexLabelRange] {
        &self.labels
    }

    pub fn label_range(&self, name: &str) -> Result<&VertexLabelRange> {
        self.labels
            .iter()
            .find(|l| l.name == name)
            .ok_or_else(|| Error::UnknownVertexLabel(name.to_string()))
    }

    /// Block row/column index of a vertex.
    pub fn block_of(&self, v: VertexId) -> u32 {
        self.block_of[v as usize]
    }

    pub fn block_range(&self, block: u32) -> &VertexLabelRange {
        &self.labels[block as usize]
    }

    pub fn num_blocks(&self) -> u32 {
        self.labels.len() as u32
    }

    pub fn grids(&self) -> impl Iterator<Item = &Grid> + '_ {
        self.grids.iter().map(|g| g.as_ref())
    }

    pub fn grid_id(&self, name: &str) -> Option<GridId> {
        self.grids.iter().position(|g| g.name == name).map(|i| i as GridId)
    }

    pub fn grid(&self, id: GridId) -> Result<&Arc<Grid>> {
        self.grids
            .get(id as usize)
            .ok_or_else(|| Error::CorruptStore(format!("no grid {id}")))
    }

    pub fn grid_by_name(&self, name: &str) -> Result<&Grid> {
        let id = self.grid_id(name).ok_or_else(|| Error::UnknownLabel(name.to_string()))?;
        Ok(self.grids[id as usize].as_ref())
    }

    /// Slices of a grid in one direction; errors when the direction was
    /// never built.
    pub fn grid_dir(&self, id: GridId, dir: Direction) -> Result<&GridDir> {
        let g = self.grid(id)?;
        g.dir(dir).ok_or_else(|| Error::MissingDirection {
            grid: g.name.clone(),
            dir: dir.as_str(),
        })
    }

    /// GridMap lookup: the block at (x, y, z) in one direction.
    pub fn lookup(&self, dir: Direction, x: u32, y: u32, z: GridId) -> Option<Block<'_>> {
        let g = self.grids.get(z as usize)?;
        let slices = g.dir(dir)?.block_slices(x, y)?;
        Some(Block {
            row: x,
            col: y,
            grid: z,
            dir,
            slices,
        })
    }

    /// Slice by global id within a direction.
    pub fn slice(&self, dir: Direction, id: u32) -> Option<&Slice> {
        self.grids
            .iter()
            .filter_map(|g| g.dir(dir))
            .flat_map(|d| d.slices.iter())
            .find(|s| s.id == id)
    }

    /// Checks every slice invariant and the direction duality.
    pub fn validate(&self) -> Result<()> {
        for g in &self.grids {
            for dir in [Direction::Out, Direction::In] {
                if let Some(d) = g.dir(dir) {
                    for s in &d.slices {
                        s.validate(g.theta).map_err(Error::CorruptStore)?;
                        let fb = self.block_range(s.row);
                        let tb = self.block_range(s.col);
                        if s.from_bounds[0] < fb.lo
                            || s.from_bounds[1] > fb.hi
                            || s.to_bounds[0] < tb.lo
                            || s.to_bounds[1] > tb.hi
                        {
                            return Err(Error::CorruptStore(format!(
                                "slice {} exceeds its block",
                                s.id
                            )));
                        }
                    }
                }
            }
            if let (Some(o), Some(i)) = (g.dir(Direction::Out), g.dir(Direction::In)) {
                let mut rev: Vec<_> = i.edges().into_iter().map(|(a, b)| (b, a)).collect();
                rev.sort_unstable();
                if rev != o.edges() {
                    return Err(Error::CorruptStore(format!(
                        "grid {} directions disagree",
                        g.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Writes the store directory.
    pub fn save(&self, dir: &Path) -> Result<()> {
        persist::save(self, dir)
    }

    /// Reads a store directory written by [`LgfStore::save`].
    pub fn load(dir: &Path) -> Result<LgfStore> {
        persist::load(dir)
    }
}
