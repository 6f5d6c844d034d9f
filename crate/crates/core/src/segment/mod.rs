//! Bitmap segments drawn from a fixed-capacity pool.
//!
//! A segment covers one block column: bit `i` stands for vertex
//! `lo + i`. Segments are sized in power-of-two byte classes (at least 8
//! bytes) and are looked up through the pooling table by key.

mod partition;

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use crate::error::{Error, Result};
use crate::VertexId;

pub use partition::{partition_sub_tgs, PathCost, SubTg, SubTgPartition};

pub type SegmentId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Visited,
    Checkpoint,
    Bridge,
    /// Pairs already reported for a start vertex; used when an automaton has
    /// several final states.
    Emitted,
}

/// Pooling-table key. Visited segments are shared by every tree node with
/// the same (start, state, column).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SegmentKey {
    Visited { start: VertexId, state: u32, col: u32 },
    Emitted { start: VertexId, col: u32 },
    /// Frontier recorded by traversal group `tg` at a boundary.
    Checkpoint { start: VertexId, state: u32, col: u32, tg: u32 },
    /// Vertices reached through the cut-set node at `depth` on boundary
    /// `boundary` of traversal group `tg`.
    Bridge { start: VertexId, tg: u32, boundary: u32, depth: u32 },
}

impl SegmentKey {
    pub fn role(&self) -> Role {
        match self {
            SegmentKey::Visited { .. } => Role::Visited,
            SegmentKey::Emitted { .. } => Role::Emitted,
            SegmentKey::Checkpoint { .. } => Role::Checkpoint,
            SegmentKey::Bridge { .. } => Role::Bridge,
        }
    }
}

/// Byte size class for a bitmap of `width` bits.
pub fn size_class(width: u32) -> usize {
    (width as usize).div_ceil(8).max(8).next_power_of_two()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    lo: VertexId,
    width: u32,
    words: Vec<u64>,
}

impl Segment {
    fn new(lo: VertexId, width: u32, mut words: Vec<u64>, bytes: usize) -> Segment {
        words.clear();
        words.resize(bytes / 8, 0);
        Segment { lo, width, words }
    }

    pub fn lo(&self) -> VertexId {
        self.lo
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    fn index(&self, v: VertexId) -> Result<usize> {
        if v < self.lo || v >= self.lo + self.width {
            return Err(Error::OutOfRange {
                vertex: v,
                lo: self.lo,
                hi: self.lo + self.width,
            });
        }
        Ok((v - self.lo) as usize)
    }

    /// Sets the bit of `v`, returning whether it was already set.
    pub fn test_and_set(&mut self, v: VertexId) -> bool {
        let i = (v - self.lo) as usize;
        debug_assert!(i < self.width as usize);
        let (w, b) = (i / 64, 1u64 << (i % 64));
        let prev = self.words[w] & b != 0;
        self.words[w] |= b;
        prev
    }

    pub fn set(&mut self, v: VertexId) {
        self.test_and_set(v);
    }

    pub fn get(&self, v: VertexId) -> bool {
        if v < self.lo || v >= self.lo + self.width {
            return false;
        }
        let i = (v - self.lo) as usize;
        self.words[i / 64] & (1u64 << (i % 64)) != 0
    }

    /// Clears the bit of `v`, returning whether it was set.
    pub fn take(&mut self, v: VertexId) -> bool {
        if !self.get(v) {
            return false;
        }
        let i = (v - self.lo) as usize;
        self.words[i / 64] &= !(1u64 << (i % 64));
        true
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Set vertices in ascending order.
    pub fn ones(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.words.iter().enumerate().flat_map(move |(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros();
                w &= w - 1;
                Some(self.lo + wi as u32 * 64 + b)
            })
        })
    }
}

#[derive(Debug)]
struct Slot {
    key: SegmentKey,
    bytes: usize,
    /// `None` while checked out by a worker.
    seg: Option<Segment>,
}

/// The pooling table plus the byte-accounted segment buffer.
#[derive(Debug)]
pub struct SegmentPool {
    capacity: usize,
    used: usize,
    peak: usize,
    table: HashMap<SegmentKey, SegmentId>,
    slots: Vec<Option<Slot>>,
    free_ids: BinaryHeap<Reverse<SegmentId>>,
    /// Recycled bitmaps by size class.
    free_regions: BTreeMap<usize, Vec<Vec<u64>>>,
}

impl SegmentPool {
    pub fn new(capacity: usize) -> SegmentPool {
        SegmentPool {
            capacity,
            used: 0,
            peak: 0,
            table: HashMap::new(),
            slots: Vec::new(),
            free_ids: BinaryHeap::new(),
            free_regions: BTreeMap::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn used(&self) -> usize {
        self.used
    }

    pub fn free(&self) -> usize {
        self.capacity - self.used
    }

    pub fn peak(&self) -> usize {
        self.peak
    }

    pub fn allocated(&self) -> usize {
        self.table.len()
    }

    pub fn lookup(&self, key: &SegmentKey) -> Option<SegmentId> {
        self.table.get(key).copied()
    }

    /// Returns the segment for `key`, allocating a cleared one covering
    /// `[lo, lo + width)` on first use.
    pub fn acquire(&mut self, key: SegmentKey, lo: VertexId, width: u32) -> Result<SegmentId> {
        self.acquire_tracked(key, lo, width).map(|(id, _)| id)
    }

    /// Like [`SegmentPool::acquire`], also reporting whether the segment was
    /// newly allocated.
    pub fn acquire_tracked(&mut self, key: SegmentKey, lo: VertexId, width: u32) -> Result<(SegmentId, bool)> {
        if let Some(&id) = self.table.get(&key) {
            return Ok((id, false));
        }
        let bytes = size_class(width);
        if self.used + bytes > self.capacity {
            return Err(Error::PoolExhausted {
                capacity: self.capacity,
                demand: self.used + bytes,
            });
        }
        let words = self
            .free_regions
            .get_mut(&bytes)
            .and_then(|v| v.pop())
            .unwrap_or_default();
        let id = match self.free_ids.pop() {
            Some(Reverse(id)) => id,
            None => {
                self.slots.push(None);
                self.slots.len() as SegmentId - 1
            }
        };
        self.slots[id as usize] = Some(Slot {
            key,
            bytes,
            seg: Some(Segment::new(lo, width, words, bytes)),
        });
        self.table.insert(key, id);
        self.used += bytes;
        self.peak = self.peak.max(self.used);
        Ok((id, true))
    }

    pub fn key(&self, id: SegmentId) -> Option<SegmentKey> {
        self.slots.get(id as usize)?.as_ref().map(|s| s.key)
    }

    /// Returns the segment to the pool. Unknown ids are ignored.
    pub fn release(&mut self, id: SegmentId) -> bool {
        let Some(slot) = self.slots.get_mut(id as usize).and_then(Option::take) else {
            return false;
        };
        self.table.remove(&slot.key);
        self.used -= slot.bytes;
        if let Some(seg) = slot.seg {
            self.free_regions.entry(slot.bytes).or_default().push(seg.words);
        }
        self.free_ids.push(Reverse(id));
        true
    }

    /// Releases every segment in `ids`, returning how many were held.
    pub fn release_all(&mut self, ids: impl IntoIterator<Item = SegmentId>) -> usize {
        ids.into_iter().filter(|&id| self.release(id)).count()
    }

    fn slot(&self, id: SegmentId) -> &Slot {
        self.slots[id as usize].as_ref().expect("segment is allocated")
    }

    fn slot_mut(&mut self, id: SegmentId) -> &mut Slot {
        self.slots[id as usize].as_mut().expect("segment is allocated")
    }

    pub fn get(&self, id: SegmentId) -> &Segment {
        self.slot(id).seg.as_ref().expect("segment is not checked out")
    }

    /// Sets the bit of `v` and returns its previous value.
    pub fn mark_and_test(&mut self, id: SegmentId, v: VertexId) -> Result<bool> {
        let seg = self.slot_mut(id).seg.as_mut().expect("segment is not checked out");
        seg.index(v)?;
        Ok(seg.test_and_set(v))
    }

    /// Moves a segment out for exclusive use by a worker.
    pub fn check_out(&mut self, id: SegmentId) -> Segment {
        self.slot_mut(id).seg.take().expect("segment is not checked out")
    }

    pub fn check_in(&mut self, id: SegmentId, seg: Segment) {
        let slot = self.slot_mut(id);
        debug_assert!(slot.seg.is_none());
        slot.seg = Some(seg);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn visited(start: u32, state: u32, col: u32) -> SegmentKey {
        SegmentKey::Visited { start, state, col }
    }

    #[test]
    fn size_classes() {
        assert_eq!(size_class(1), 8);
        assert_eq!(size_class(64), 8);
        assert_eq!(size_class(65), 16);
        assert_eq!(size_class(100), 16);
        assert_eq!(size_class(129), 32);
    }

    #[test]
    fn acquire_is_idempotent_and_reuses_smallest_id() {
        let mut pool = SegmentPool::new(64);
        let a = pool.acquire(visited(0, 1, 0), 0, 4).unwrap();
        let b = pool.acquire(visited(0, 2, 0), 0, 4).unwrap();
        assert_eq!((a, b), (0, 1));
        assert_eq!(pool.acquire(visited(0, 1, 0), 0, 4).unwrap(), a);
        assert_eq!(pool.used(), 16);
        pool.release(a);
        assert_eq!(pool.acquire(visited(5, 1, 0), 0, 4).unwrap(), 0);
        assert!(!pool.get(0).get(1));
    }

    #[test]
    fn mark_and_test_reports_previous_bit() {
        let mut pool = SegmentPool::new(64);
        let id = pool.acquire(visited(0, 2, 3), 10, 4).unwrap();
        assert!(!pool.mark_and_test(id, 11).unwrap());
        assert!(pool.mark_and_test(id, 11).unwrap());
        pool.mark_and_test(id, 13).unwrap();
        assert_eq!(pool.get(id).ones().collect::<Vec<_>>(), vec![11, 13]);
        assert!(matches!(pool.mark_and_test(id, 14), Err(Error::OutOfRange { .. })));
        assert!(matches!(pool.mark_and_test(id, 9), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn exhaustion_and_conservation() {
        let mut pool = SegmentPool::new(24);
        for i in 0..3 {
            pool.acquire(visited(i, 0, 0), 0, 10).unwrap();
            assert_eq!(pool.used() + pool.free(), pool.capacity());
        }
        let err = pool.acquire(visited(9, 0, 0), 0, 10).unwrap_err();
        assert!(matches!(err, Error::PoolExhausted { capacity: 24, demand: 32 }));
        let freed = pool.release_all(0..3);
        assert_eq!(freed, 3);
        assert_eq!(pool.free(), 24);
        assert_eq!(pool.peak(), 24);
    }

    #[test]
    fn released_bitmaps_come_back_clear() {
        let mut pool = SegmentPool::new(1 << 10);
        let id = pool.acquire(visited(0, 0, 0), 0, 200).unwrap();
        for v in (0..200).step_by(3) {
            pool.mark_and_test(id, v).unwrap();
        }
        assert_eq!(pool.get(id).count_ones(), 67);
        pool.release(id);
        let id = pool.acquire(visited(1, 0, 0), 0, 200).unwrap();
        assert!(pool.get(id).is_empty());
    }

    #[test]
    fn checked_out_segments_round_trip() {
        let mut pool = SegmentPool::new(64);
        let id = pool.acquire(visited(0, 0, 0), 4, 2).unwrap();
        let mut seg = pool.check_out(id);
        assert!(!seg.test_and_set(5));
        pool.check_in(id, seg);
        assert!(pool.get(id).get(5));
        assert!(pool.get(id).clone().take(5));
    }
}
