use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gridrpq::{execute_crpq, plan_crpq, run_rpq, CrpqQuery, EngineConfig, MaterializeMode, PlanVariant};
use gridrpq_bench::{config, plan, Workload, RPQ_SHAPES};

fn shapes(c: &mut Criterion) {
    let w = Workload::random(400, 3, 0.004, 1);
    let mut g = c.benchmark_group("rpq_shapes");
    for (name, expr) in RPQ_SHAPES {
        let p = plan(expr, PlanVariant::Forward);
        g.bench_function(name, |b| b.iter(|| run_rpq(&p, &w.store, &config(5, 4096)).unwrap()));
    }
    g.finish();
}

fn static_hop(c: &mut Criterion) {
    let w = Workload::random(400, 3, 0.004, 2);
    let p = plan("ab*c*", PlanVariant::Forward);
    let mut g = c.benchmark_group("static_hop");
    for hop in [1, 2, 3, 5, 8] {
        g.bench_with_input(BenchmarkId::from_parameter(hop), &hop, |b, &hop| {
            b.iter(|| run_rpq(&p, &w.store, &config(hop, 4096)).unwrap())
        });
    }
    g.finish();
}

fn plan_variants(c: &mut Criterion) {
    let w = Workload::random(400, 3, 0.004, 3);
    let mut g = c.benchmark_group("plan_variants");
    for variant in [PlanVariant::Forward, PlanVariant::Reverse, PlanVariant::Middle(1), PlanVariant::LoopCache(2)] {
        let p = plan("abc*", variant);
        g.bench_function(variant.to_string(), |b| b.iter(|| run_rpq(&p, &w.store, &config(5, 4096)).unwrap()));
    }
    g.finish();
}

fn segment_budget(c: &mut Criterion) {
    let w = Workload::random(400, 3, 0.004, 4);
    let p = plan("(a+b+c+d)*", PlanVariant::Forward);
    let mut g = c.benchmark_group("segment_budget");
    for bytes in [1usize << 20, 64 << 10, 8 << 10] {
        let cfg = EngineConfig {
            segment_buffer_bytes: bytes,
            ..config(5, 4096)
        };
        g.bench_with_input(BenchmarkId::from_parameter(bytes), &cfg, |b, cfg| {
            b.iter(|| run_rpq(&p, &w.store, cfg).unwrap())
        });
    }
    g.finish();
}

fn materialize_mode(c: &mut Criterion) {
    let w = Workload::random(400, 3, 0.004, 5);
    let p = plan("a*b*", PlanVariant::Forward);
    let mut g = c.benchmark_group("materialize_mode");
    for (name, mode) in [("sequential", MaterializeMode::Sequential), ("overlap", MaterializeMode::Overlap)] {
        let cfg = EngineConfig {
            materialize_mode: mode,
            ur_buffer_bytes: 4000,
            ur_chunk_bytes: 1000,
            ..config(5, 4096)
        };
        g.bench_function(name, |b| b.iter(|| run_rpq(&p, &w.store, &cfg).unwrap()));
    }
    g.finish();
}

fn crpq(c: &mut Criterion) {
    let w = Workload::fixture();
    let q = CrpqQuery::parse(gridrpq::fixture::TRIANGLE_CRPQ).unwrap();
    let p = plan_crpq(&q, None).unwrap();
    let cfg = EngineConfig {
        theta: 4,
        ..EngineConfig::default()
    };
    c.bench_function("crpq_fixture_triangle", |b| b.iter(|| execute_crpq(&p, &w.store, &cfg).unwrap()));
}

criterion_group!(benches, shapes, static_hop, plan_variants, segment_budget, materialize_mode, crpq);
criterion_main!(benches);
