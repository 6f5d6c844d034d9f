//! Conjunctive queries against the exhaustive assignment oracle.

use gridrpq::graph::RandomGraphSpec;
use gridrpq::oracle::oracle_crpq;
use gridrpq::workload::{random_crpq_text, CRPQ_SHAPES};
use gridrpq::{execute_crpq, fixture, plan_crpq, CrpqQuery, EngineConfig, EpsilonPairs, Error, LgfStore, PlanVariant, RawGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config() -> EngineConfig {
    EngineConfig {
        static_hop: 2,
        batch_size: 8,
        theta: 4,
        ..EngineConfig::default()
    }
}

#[test]
fn random_queries_match_the_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for seed in 0..60u64 {
        let labels = rng.gen_range(1..=3);
        let spec = RandomGraphSpec::new(rng.gen_range(5..=20), labels, [0.05, 0.1, 0.2][seed as usize % 3]);
        let g = RawGraph::random(&spec, seed);
        let store = LgfStore::from_graph(&g, 4).unwrap();
        for shape in 0..CRPQ_SHAPES.len() {
            let text = random_crpq_text(shape, labels, &mut rng);
            let q = CrpqQuery::parse(&text).unwrap();
            let want = oracle_crpq(&g, &q, EpsilonPairs::All);
            let got = execute_crpq(&plan_crpq(&q, None).unwrap(), &store, &config()).unwrap();
            assert_eq!(got.tuples, want, "seed {seed}: {text}");
            assert_eq!(got.stats.segments_leaked, 0);
        }
    }
}

#[test]
fn join_order_does_not_change_tuples() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for seed in 100..120u64 {
        let g = RawGraph::random(&RandomGraphSpec::new(14, 2, 0.12), seed);
        let store = LgfStore::from_graph(&g, 3).unwrap();
        let text = random_crpq_text(seed as usize, 2, &mut rng);
        let q = CrpqQuery::parse(&text).unwrap();
        let auto = execute_crpq(&plan_crpq(&q, None).unwrap(), &store, &config()).unwrap();
        let names: Vec<&str> = q.vertices.iter().map(|v| v.name.as_str()).collect();
        let mut rev = names.clone();
        rev.reverse();
        for order in [names.clone(), rev] {
            let plan = match plan_crpq(&q, Some(&order)) {
                Ok(p) => p,
                Err(Error::InvalidQuery(_)) => continue,
                Err(e) => panic!("{e}"),
            };
            assert_eq!(execute_crpq(&plan, &store, &config()).unwrap().tuples, auto.tuples, "{text} {order:?}");
        }
    }
}

#[test]
fn plan_variant_does_not_change_tuples() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in 200..215u64 {
        let g = RawGraph::random(&RandomGraphSpec::new(16, 2, 0.1), seed);
        let store = LgfStore::from_graph(&g, 4).unwrap();
        let text = random_crpq_text(seed as usize, 2, &mut rng);
        let q = CrpqQuery::parse(&text).unwrap();
        let plan = plan_crpq(&q, None).unwrap();
        let want = oracle_crpq(&g, &q, EpsilonPairs::All);
        for variant in [PlanVariant::Reverse, PlanVariant::Middle(1), PlanVariant::LoopCache(0)] {
            let cfg = EngineConfig {
                plan: variant,
                ..config()
            };
            assert_eq!(execute_crpq(&plan, &store, &cfg).unwrap().tuples, want, "{text} {variant}");
        }
    }
}

#[test]
fn fixture_triangle() {
    let store = LgfStore::from_graph(&fixture::graph(), 4).unwrap();
    let q = CrpqQuery::parse(fixture::TRIANGLE_CRPQ).unwrap();
    let got = execute_crpq(&plan_crpq(&q, None).unwrap(), &store, &config()).unwrap();
    let want: Vec<Vec<u32>> = fixture::TRIANGLE_TUPLES.iter().map(|t| t.to_vec()).collect();
    assert_eq!(got.tuples, want);
    assert_eq!(oracle_crpq(&fixture::graph(), &q, EpsilonPairs::All), want);
}

#[test]
fn unknown_edge_label_is_an_error() {
    let store = LgfStore::from_graph(&fixture::graph(), 4).unwrap();
    let q = CrpqQuery::parse("CRPQ t { vertex x; vertex y; edge x -[z]-> y; }").unwrap();
    assert!(matches!(
        execute_crpq(&plan_crpq(&q, None).unwrap(), &store, &config()),
        Err(Error::UnknownLabel(_))
    ));
}
