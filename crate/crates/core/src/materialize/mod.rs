//! Result staging and batch-incremental materialization.
//!
//! Pairs are appended to a chunked unified-results (UR) buffer. Full
//! buffers are drained into per-block temporary quadtrees whose leaves split
//! once they exceed `theta`; leaves are finalized into slices as the
//! traversal certifies that their start rows are complete.

mod sink;
mod temp;

pub use sink::{MaterializeOutput, ResultSink, SinkOptions};
pub use temp::TempQuadtree;

use crate::lgf::GridId;
use crate::VertexId;

/// Bytes per UR record: five 32-bit fields.
pub const UR_RECORD_BYTES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct UrRecord {
    pub row: u32,
    pub col: u32,
    pub grid: GridId,
    pub src: VertexId,
    pub dst: VertexId,
}

impl UrRecord {
    pub fn to_bytes(self) -> [u8; UR_RECORD_BYTES] {
        let mut out = [0u8; UR_RECORD_BYTES];
        for (i, f) in [self.row, self.col, self.grid, self.src, self.dst].into_iter().enumerate() {
            out[i * 4..i * 4 + 4].copy_from_slice(&f.to_le_bytes());
        }
        out
    }
}

/// A bounded buffer of fixed-size chunks, allocated on first use.
#[derive(Clone, Debug)]
pub struct UrBuffer {
    chunk_records: usize,
    max_chunks: usize,
    chunks: Vec<Vec<UrRecord>>,
    /// Incremented every time the buffer is cleared for reuse.
    pub generation: u64,
}

impl UrBuffer {
    pub fn new(buffer_bytes: usize, chunk_bytes: usize) -> UrBuffer {
        let chunk_records = (chunk_bytes / UR_RECORD_BYTES).max(1);
        let max_chunks = (buffer_bytes / chunk_bytes.max(1)).max(1);
        UrBuffer {
            chunk_records,
            max_chunks,
            chunks: Vec::new(),
            generation: 0,
        }
    }

    pub fn capacity_records(&self) -> usize {
        self.chunk_records * self.max_chunks
    }

    pub fn len(&self) -> usize {
        self.chunks.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.iter().all(Vec::is_empty)
    }

    pub fn allocated_chunks(&self) -> usize {
        self.chunks.len()
    }

    /// Appends into the current chunk, opening a new chunk when it is full.
    /// Hands the record back when no chunk is left.
    pub fn try_append(&mut self, rec: UrRecord) -> Result<(), UrRecord> {
        if let Some(c) = self.chunks.last_mut().filter(|c| c.len() < self.chunk_records) {
            c.push(rec);
            return Ok(());
        }
        if self.chunks.len() < self.max_chunks {
            let mut c = Vec::with_capacity(self.chunk_records);
            c.push(rec);
            self.chunks.push(c);
            return Ok(());
        }
        Err(rec)
    }

    pub fn records(&self) -> impl Iterator<Item = &UrRecord> + '_ {
        self.chunks.iter().flatten()
    }

    pub fn clear(&mut self) {
        self.chunks.clear();
        self.generation += 1;
    }
}
