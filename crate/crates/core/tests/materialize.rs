//! Result staging and incremental slice finalization.

mod common;

use common::*;
use gridrpq::materialize::{ResultSink, SinkOptions};
use gridrpq::workload::RPQ_SHAPES;
use gridrpq::{EngineConfig, EpsilonPairs, LgfStore, MaterializeMode, PlanVariant};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn finalized_slices_respect_theta() {
    for seed in 0..12u64 {
        let g = random_graph(seed, 30, 0.1);
        for theta in [1, 2, 4, 64] {
            let store = LgfStore::from_graph(&g, theta).unwrap();
            for (name, expr) in RPQ_SHAPES {
                let cfg = EngineConfig {
                    static_hop: 2,
                    batch_size: 5,
                    theta,
                    ur_buffer_bytes: 80,
                    ur_chunk_bytes: 40,
                    ..EngineConfig::default()
                };
                let out = run(&store, expr, PlanVariant::Forward, &cfg);
                assert_eq!(out.pairs, oracle(&g, expr, EpsilonPairs::All), "seed {seed} {name} theta {theta}");
                for s in &out.slices {
                    s.validate(theta).unwrap_or_else(|e| panic!("seed {seed} {name} theta {theta}: {e}"));
                }
                assert_eq!(out.stats.tier_violations, 0);
                assert_eq!(out.stats.duplicate_pairs, 0);
                assert_eq!(out.stats.finalized_slices as usize, out.slices.len());
            }
        }
    }
}

#[test]
fn overlap_mode_equals_sequential_mode() {
    for seed in 20..35u64 {
        let g = random_graph(seed, 35, 0.08);
        let store = LgfStore::from_graph(&g, 4).unwrap();
        for (_, expr) in RPQ_SHAPES {
            for ur in [20usize, 60, 1 << 20] {
                let seq = EngineConfig {
                    static_hop: 3,
                    batch_size: 4,
                    theta: 4,
                    ur_buffer_bytes: ur,
                    ur_chunk_bytes: 20,
                    ..EngineConfig::default()
                };
                let ovl = EngineConfig {
                    materialize_mode: MaterializeMode::Overlap,
                    ..seq.clone()
                };
                let a = run(&store, expr, PlanVariant::Forward, &seq);
                let b = run(&store, expr, PlanVariant::Forward, &ovl);
                assert_eq!(a.pairs, b.pairs, "seed {seed} {expr} ur {ur}");
                assert_eq!(a.slices, b.slices, "seed {seed} {expr} ur {ur}");
                assert_eq!(b.stats.tier_violations, 0);
            }
        }
    }
}

#[test]
fn sink_finalizes_shuffled_certified_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for round in 0..40 {
        let g = random_graph(round, 40, 0.0);
        let store = LgfStore::from_graph(&g, 4).unwrap();
        let theta = [1, 2, 4, 64][round as usize % 4];
        let n = store.num_vertices() as u32;
        let mut pairs: Vec<(u32, u32)> = (0..rng.gen_range(0..300))
            .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n)))
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        for mode in [MaterializeMode::Sequential, MaterializeMode::Overlap] {
            let opts = SinkOptions {
                theta,
                ur_buffer_bytes: 40,
                ur_chunk_bytes: 20,
                mode,
                epsilon_pairs: false,
            };
            let mut sink = ResultSink::new(&store, &opts);
            for label in store.vertex_labels().to_vec() {
                let mut mine: Vec<_> = pairs.iter().filter(|p| label.lo <= p.0 && p.0 < label.hi).copied().collect();
                mine.shuffle(&mut rng);
                for (s, d) in mine {
                    sink.emit(s, d);
                }
                let row = store.block_of(label.lo);
                sink.certify(row, label.hi);
            }
            let out = sink.finish();
            assert_eq!(out.pairs(), pairs, "round {round} {mode:?}");
            assert_eq!(out.tier_violations, 0);
            assert!(out.slices.iter().all(|s| s.validate(theta).is_ok()));
        }
    }
}
