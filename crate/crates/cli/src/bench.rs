use std::io;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::Result;
use clap::Args;
use gridrpq::graph::RandomGraphSpec;
use gridrpq::regex::parse_regex;
use gridrpq::workload::RPQ_SHAPES;
use gridrpq::{run_rpq, Error, ExecutionPlan, LgfStore, RawGraph};
use serde::Serialize;

use crate::EngineArgs;

#[derive(Args)]
pub struct BenchArgs {
    /// Store to query; a seeded random graph is generated when absent.
    #[arg(long)]
    store: Option<PathBuf>,
    #[arg(long, default_value_t = 2000)]
    vertices: usize,
    #[arg(long, default_value_t = 0.002)]
    density: f64,
    /// `;`-separated path expressions; defaults to the ten standard shapes.
    #[arg(long, short, value_delimiter = ';')]
    query: Option<Vec<String>>,
    /// Segment buffer sizes in bytes; defaults to `--segment-buffer`.
    #[arg(long, value_delimiter = ',')]
    segment_sweep: Option<Vec<usize>>,
    /// Result buffer sizes in bytes; defaults to `--ur-buffer`.
    #[arg(long, value_delimiter = ',')]
    ur_sweep: Option<Vec<usize>>,
    /// Timed runs per row; the fastest is reported.
    #[arg(long, default_value_t = 1)]
    repeat: usize,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Serialize)]
struct Row<'a> {
    query: &'a str,
    plan: String,
    segment_buffer: usize,
    ur_buffer: usize,
    status: &'static str,
    wall_ms: f64,
    count: usize,
    iterations: u64,
    sub_tgs: u64,
    segments_peak_bytes: u64,
    fallback_halvings: u64,
    drains: u64,
    overlap_ratio: f64,
}

pub fn cmd_bench(a: &BenchArgs) -> Result<u8> {
    let store = match &a.store {
        Some(p) => crate::load_store(p)?,
        None => {
            let spec = RandomGraphSpec::new(a.vertices, 4, a.density);
            LgfStore::from_graph(&RawGraph::random(&spec, a.engine.seed), 4096)?
        }
    };
    let exprs: Vec<String> = match &a.query {
        Some(q) => q.clone(),
        None => RPQ_SHAPES.iter().map(|(_, e)| e.to_string()).collect(),
    };
    let base = a.engine.config(store.theta(), false);
    let segments = a.segment_sweep.clone().unwrap_or(vec![base.segment_buffer_bytes]);
    let urs = a.ur_sweep.clone().unwrap_or(vec![base.ur_buffer_bytes]);
    let mut out = csv::Writer::from_writer(io::stdout().lock());
    for expr in &exprs {
        let plan = ExecutionPlan::build(&parse_regex(expr)?, base.plan)?;
        for &segment_buffer in &segments {
            for &ur_buffer in &urs {
                let config = gridrpq::EngineConfig {
                    segment_buffer_bytes: segment_buffer,
                    ur_buffer_bytes: ur_buffer,
                    ur_chunk_bytes: base.ur_chunk_bytes.min(ur_buffer),
                    ..base.clone()
                };
                let mut best: Option<(f64, gridrpq::RpqOutput)> = None;
                let mut status = "ok";
                for _ in 0..a.repeat.max(1) {
                    let t0 = Instant::now();
                    match run_rpq(&plan, &store, &config) {
                        Ok(o) => {
                            let ms = t0.elapsed().as_secs_f64() * 1e3;
                            if best.as_ref().is_none_or(|(b, _)| ms < *b) {
                                best = Some((ms, o));
                            }
                        }
                        Err(Error::PoolExhausted { .. }) => status = "pool-exhausted",
                        Err(Error::UnsatisfiableBudget(_)) => status = "unsatisfiable",
                        Err(e) => return Err(e.into()),
                    }
                }
                let (wall_ms, o) = best.unwrap_or_default();
                out.serialize(Row {
                    query: expr,
                    plan: config.plan.to_string(),
                    segment_buffer,
                    ur_buffer,
                    status,
                    wall_ms,
                    count: o.pairs.len(),
                    iterations: o.stats.iterations,
                    sub_tgs: o.stats.sub_tgs,
                    segments_peak_bytes: o.stats.segments_peak_bytes,
                    fallback_halvings: o.stats.fallback_halvings,
                    drains: o.stats.drains,
                    overlap_ratio: o.stats.overlap_ratio,
                })?;
            }
        }
    }
    out.flush()?;
    Ok(0)
}
