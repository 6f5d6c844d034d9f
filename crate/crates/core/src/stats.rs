use serde::{Deserialize, Serialize};

/// Counters reported by a query run. Multi-stage plans accumulate counters
/// over all stages and keep maxima for peaks.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QueryStats {
    /// Executed queue records.
    pub iterations: u64,
    /// Base and expansion traversal groups created.
    pub tg_count: u64,
    /// Deepest traversal group level reached, counting the base level as 1.
    pub max_tg_depth: u64,
    /// `max_tg_depth * static_hop`.
    pub max_hops: u64,
    pub sub_tgs: u64,
    pub segments_peak_bytes: u64,
    /// Bytes still allocated in the segment pool after the run.
    pub segments_leaked: u64,
    pub fallback_halvings: u64,
    pub drains: u64,
    pub overlap_ratio: f64,
    pub finalized_slices: u64,
    pub tier_violations: u64,
    pub duplicate_pairs: u64,
    /// Worst-case visited-set bytes per start vertex: `ceil(|V| * |Q| / 8)`.
    pub memory_estimate_bytes: u64,
}

impl QueryStats {
    pub(crate) fn absorb(&mut self, other: &QueryStats) {
        self.iterations += other.iterations;
        self.tg_count += other.tg_count;
        self.max_tg_depth = self.max_tg_depth.max(other.max_tg_depth);
        self.max_hops = self.max_hops.max(other.max_hops);
        self.sub_tgs += other.sub_tgs;
        self.segments_peak_bytes = self.segments_peak_bytes.max(other.segments_peak_bytes);
        self.segments_leaked += other.segments_leaked;
        self.fallback_halvings += other.fallback_halvings;
        self.drains += other.drains;
        self.overlap_ratio = self.overlap_ratio.max(other.overlap_ratio);
        self.finalized_slices += other.finalized_slices;
        self.tier_violations += other.tier_violations;
        self.duplicate_pairs += other.duplicate_pairs;
        self.memory_estimate_bytes = self.memory_estimate_bytes.max(other.memory_estimate_bytes);
    }
}

/// Per-start-vertex worst case of the visited sets: one bit per product
/// state.
pub fn memory_estimate(num_vertices: usize, num_states: u32) -> u64 {
    (num_vertices as u64 * num_states as u64).div_ceil(8)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_rounds_up() {
        assert_eq!(memory_estimate(14, 3), 6);
        assert_eq!(memory_estimate(16, 1), 2);
        assert_eq!(memory_estimate(0, 5), 0);
        assert_eq!(memory_estimate(1, 1), 1);
    }
}
