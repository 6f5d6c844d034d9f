use std::collections::BTreeMap;
use std::sync::mpsc::{self, Receiver, Sender};
use std::thread::{self, JoinHandle};
use std::time::Instant;

use super::{TempQuadtree, UrBuffer, UrRecord};
use crate::config::MaterializeMode;
use crate::lgf::{GridId, LgfStore, Slice};
use crate::VertexId;

#[derive(Clone, Debug)]
pub struct SinkOptions {
    pub theta: usize,
    pub ur_buffer_bytes: usize,
    pub ur_chunk_bytes: usize,
    pub mode: MaterializeMode,
    /// Emit `(v, v)` for every vertex as rows complete.
    pub epsilon_pairs: bool,
}

#[derive(Clone, Debug, Default)]
pub struct MaterializeOutput {
    /// Finalized out-direction slices; grid ids and slice ids unassigned.
    pub slices: Vec<Slice>,
    pub appended: u64,
    pub drains: u64,
    pub tier_violations: u64,
    pub duplicate_pairs: u64,
    pub overlap_ratio: f64,
}

impl MaterializeOutput {
    /// All finalized pairs in ascending order.
    pub fn pairs(&self) -> Vec<(VertexId, VertexId)> {
        let mut out: Vec<_> = self.slices.iter().flat_map(|s| s.edges()).collect();
        out.sort_unstable();
        out
    }
}

type Interval = (Instant, Instant);

struct Drainer {
    theta: usize,
    bounds: Vec<[VertexId; 2]>,
    temps: BTreeMap<(u32, u32), TempQuadtree>,
    slices: Vec<Slice>,
    finalized_pairs: u64,
    drains: u64,
    tier_violations: u64,
    duplicates: u64,
    busy: Vec<Interval>,
}

impl Drainer {
    fn drain(&mut self, buf: &UrBuffer, appended_at_seal: u64) {
        let t0 = Instant::now();
        if !buf.is_empty() {
            self.drains += 1;
        }
        for r in buf.records() {
            let (row, col) = (r.row, r.col);
            let tree = self.temps.entry((row, col)).or_insert_with(|| {
                TempQuadtree::new(row, col, self.bounds[row as usize], self.bounds[col as usize], self.theta)
            });
            if !tree.insert((r.src, r.dst)) {
                self.tier_violations += 1;
            }
        }
        let temp: u64 = self.temps.values().map(|t| t.pending() as u64).sum();
        if self.finalized_pairs + temp != appended_at_seal {
            self.tier_violations += 1;
        }
        self.busy.push((t0, Instant::now()));
    }

    fn collect(&mut self, out: (Vec<Slice>, usize)) {
        let (slices, dups) = out;
        self.finalized_pairs += slices.iter().map(|s| s.edge_count() as u64).sum::<u64>() + dups as u64;
        self.duplicates += dups as u64;
        self.slices.extend(slices);
    }

    fn finalize(&mut self, row: u32, hi: VertexId) {
        let t0 = Instant::now();
        let keys: Vec<_> = self.temps.range((row, 0)..=(row, u32::MAX)).map(|(k, _)| *k).collect();
        for k in keys {
            let out = self.temps.get_mut(&k).unwrap().finalize_upto(hi, 0);
            self.collect(out);
        }
        self.busy.push((t0, Instant::now()));
    }

    fn finalize_all(&mut self) {
        let keys: Vec<_> = self.temps.keys().copied().collect();
        for k in keys {
            let out = self.temps.get_mut(&k).unwrap().finalize_all(0);
            self.collect(out);
        }
    }
}

enum Msg {
    Drain(UrBuffer, u64),
    Finalize(u32, VertexId),
}

enum Backend {
    Inline(Box<Drainer>),
    Thread {
        tx: Sender<Msg>,
        free_rx: Receiver<UrBuffer>,
        spare: Option<UrBuffer>,
        handle: JoinHandle<Drainer>,
    },
}

/// Producer side of materialization: the active UR buffer, epsilon-pair
/// bookkeeping and the drain backend.
pub struct ResultSink {
    active: UrBuffer,
    backend: Backend,
    appended: u64,
    bounds: Vec<[VertexId; 2]>,
    epsilon: bool,
    /// Next vertex per row still owed its `(v, v)` pair.
    eps_next: Vec<VertexId>,
    busy: Vec<Interval>,
    busy_since: Instant,
}

impl ResultSink {
    pub fn new(store: &LgfStore, opts: &SinkOptions) -> ResultSink {
        let bounds: Vec<[VertexId; 2]> = store.vertex_labels().iter().map(|l| [l.lo, l.hi]).collect();
        let drainer = Drainer {
            theta: opts.theta,
            bounds: bounds.clone(),
            temps: BTreeMap::new(),
            slices: Vec::new(),
            finalized_pairs: 0,
            drains: 0,
            tier_violations: 0,
            duplicates: 0,
            busy: Vec::new(),
        };
        let new_buffer = || UrBuffer::new(opts.ur_buffer_bytes, opts.ur_chunk_bytes);
        let backend = match opts.mode {
            MaterializeMode::Sequential => Backend::Inline(Box::new(drainer)),
            MaterializeMode::Overlap => {
                let (tx, rx) = mpsc::channel::<Msg>();
                let (free_tx, free_rx) = mpsc::channel::<UrBuffer>();
                let handle = thread::spawn(move || {
                    let mut d = drainer;
                    for msg in rx {
                        match msg {
                            Msg::Drain(mut buf, at) => {
                                d.drain(&buf, at);
                                buf.clear();
                                let _ = free_tx.send(buf);
                            }
                            Msg::Finalize(row, hi) => d.finalize(row, hi),
                        }
                    }
                    d
                });
                Backend::Thread {
                    tx,
                    free_rx,
                    spare: Some(new_buffer()),
                    handle,
                }
            }
        };
        ResultSink {
            active: new_buffer(),
            backend,
            appended: 0,
            eps_next: bounds.iter().map(|b| b[0]).collect(),
            bounds,
            epsilon: opts.epsilon_pairs,
            busy: Vec::new(),
            busy_since: Instant::now(),
        }
    }

    fn block_of(&self, v: VertexId) -> u32 {
        self.bounds.partition_point(|b| b[1] <= v) as u32
    }

    pub fn appended(&self) -> u64 {
        self.appended
    }

    /// Appends one result pair, handing the buffer off when it is full.
    pub fn emit(&mut self, src: VertexId, dst: VertexId) {
        let mut rec = UrRecord {
            row: self.block_of(src),
            col: self.block_of(dst),
            grid: 0 as GridId,
            src,
            dst,
        };
        loop {
            match self.active.try_append(rec) {
                Ok(()) => break,
                Err(r) => {
                    rec = r;
                    self.hand_off();
                }
            }
        }
        self.appended += 1;
    }

    /// Seals the active buffer and continues with a drained one.
    fn hand_off(&mut self) {
        if self.active.is_empty() {
            return;
        }
        match &mut self.backend {
            Backend::Inline(d) => {
                d.drain(&self.active, self.appended);
                self.active.clear();
            }
            Backend::Thread {
                tx, free_rx, spare, ..
            } => {
                let next = match spare.take() {
                    Some(b) => b,
                    None => {
                        let now = Instant::now();
                        self.busy.push((self.busy_since, now));
                        let b = free_rx.recv().expect("drain worker alive");
                        self.busy_since = Instant::now();
                        b
                    }
                };
                let full = std::mem::replace(&mut self.active, next);
                tx.send(Msg::Drain(full, self.appended)).expect("drain worker alive");
            }
        }
    }

    fn emit_epsilon_upto(&mut self, row: usize, hi: VertexId) {
        if !self.epsilon {
            return;
        }
        let hi = hi.min(self.bounds[row][1]);
        while self.eps_next[row] < hi {
            let v = self.eps_next[row];
            self.eps_next[row] += 1;
            self.emit(v, v);
        }
    }

    /// Certifies that no further pair will start in `row` below `hi`:
    /// pending epsilon pairs are emitted, the active buffer is flushed and
    /// the covered temporary buffers are finalized.
    pub fn certify(&mut self, row: u32, hi: VertexId) {
        self.emit_epsilon_upto(row as usize, hi);
        self.hand_off();
        match &mut self.backend {
            Backend::Inline(d) => d.finalize(row, hi),
            Backend::Thread { tx, .. } => tx.send(Msg::Finalize(row, hi)).expect("drain worker alive"),
        }
    }

    /// Flushes everything and finalizes all remaining buffers.
    pub fn finish(mut self) -> MaterializeOutput {
        for row in 0..self.bounds.len() {
            self.emit_epsilon_upto(row, VertexId::MAX);
        }
        self.hand_off();
        let producer_end = Instant::now();
        self.busy.push((self.busy_since, producer_end));
        let (mut d, threaded) = match self.backend {
            Backend::Inline(d) => (*d, false),
            Backend::Thread { tx, handle, .. } => {
                drop(tx);
                (handle.join().expect("drain worker panicked"), true)
            }
        };
        d.finalize_all();
        let overlap_ratio = if threaded {
            overlap_ratio(&self.busy, &d.busy)
        } else {
            0.0
        };
        MaterializeOutput {
            slices: d.slices,
            appended: self.appended,
            drains: d.drains,
            tier_violations: d.tier_violations,
            duplicate_pairs: d.duplicates,
            overlap_ratio,
        }
    }
}

fn total(iv: &[Interval]) -> f64 {
    iv.iter().map(|(a, b)| b.duration_since(*a).as_secs_f64()).sum()
}

/// Overlapped time of two interval sets over the smaller busy total.
fn overlap_ratio(producer: &[Interval], consumer: &[Interval]) -> f64 {
    let denom = total(producer).min(total(consumer));
    if denom <= 0.0 {
        return 0.0;
    }
    let mut both = 0.0;
    for (pa, pb) in producer {
        for (ca, cb) in consumer {
            let lo = (*pa).max(*ca);
            let hi = (*pb).min(*cb);
            if hi > lo {
                both += hi.duration_since(lo).as_secs_f64();
            }
        }
    }
    (both / denom).min(1.0)
}
