mod bench;
mod verify;

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gridrpq::config::Fault;
use gridrpq::regex::parse_regex;
use gridrpq::{
    execute_crpq, plan_crpq, run_rpq, run_rpq_from, CrpqQuery, EngineConfig, EpsilonPairs, Error,
    ExecutionPlan, LgfStore, MaterializeMode, PlanVariant, QueryStats,
};

/// Regular and conjunctive path queries over labeled grid stores.
#[derive(Parser)]
#[command(name = "gridrpq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest vertex and edge TSV files into a store directory.
    Build(BuildArgs),
    /// Evaluate a regular path query.
    Rpq(RpqArgs),
    /// Evaluate a conjunctive regular path query.
    Crpq(CrpqArgs),
    /// Compare the engine against the brute-force oracle.
    Verify(verify::VerifyArgs),
    /// Time queries over a matrix of budgets and print CSV.
    Bench(bench::BenchArgs),
}

#[derive(Args)]
struct BuildArgs {
    /// `name<TAB>label` per line.
    #[arg(long)]
    vertices: PathBuf,
    /// `src<TAB>dst<TAB>label` per line.
    #[arg(long)]
    edges: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Maximum edges per slice.
    #[arg(long, default_value_t = 4096)]
    theta: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    SkipBridge,
}

/// Engine knobs shared by every query subcommand.
#[derive(Args, Clone)]
pub struct EngineArgs {
    #[arg(long, default_value_t = 5)]
    static_hop: usize,
    #[arg(long, default_value_t = 4096)]
    batch_size: usize,
    /// Slice threshold for materialized result grids.
    #[arg(long)]
    theta: Option<usize>,
    #[arg(long, default_value_t = 8 << 20)]
    input_buffer: usize,
    #[arg(long, default_value_t = 16 << 20)]
    segment_buffer: usize,
    /// Bytes of each of the two result buffers.
    #[arg(long, default_value_t = 2 << 20)]
    ur_buffer: usize,
    #[arg(long, default_value_t = 64 << 10)]
    ur_chunk: usize,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// `all` or `none`.
    #[arg(long, default_value = "all")]
    epsilon_pairs: EpsilonPairs,
    /// `forward`, `reverse`, `middle:K` or `loop-cache:K`.
    #[arg(long, default_value = "forward")]
    plan: PlanVariant,
    /// `sequential` or `overlap`.
    #[arg(long, default_value = "sequential")]
    materialize_mode: MaterializeMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, hide = true)]
    fault: Option<FaultArg>,
}

impl EngineArgs {
    pub fn config(&self, store_theta: usize, trace: bool) -> EngineConfig {
        EngineConfig {
            static_hop: self.static_hop,
            batch_size: self.batch_size,
            theta: self.theta.unwrap_or(store_theta),
            input_buffer_bytes: self.input_buffer,
            segment_buffer_bytes: self.segment_buffer,
            ur_buffer_bytes: self.ur_buffer,
            ur_chunk_bytes: self.ur_chunk,
            workers: self.workers,
            epsilon_pairs: self.epsilon_pairs,
            plan: self.plan,
            materialize_mode: self.materialize_mode,
            trace,
            seed: self.seed,
            fault: self.fault.map(|FaultArg::SkipBridge| Fault::SkipBridge),
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Print every result row as TSV of vertex names.
    #[arg(long)]
    emit_pairs: bool,
    /// Print one line per executed traversal-queue record.
    #[arg(long)]
    trace: bool,
    /// Write stats as JSON here instead of to stderr.
    #[arg(long)]
    stats_json: Option<PathBuf>,
}

#[derive(Args)]
struct RpqArgs {
    #[arg(long)]
    store: PathBuf,
    /// Path expression, e.g. `abc*`.
    #[arg(long, short)]
    query: String,
    /// Only pairs starting at this vertex name.
    #[arg(long)]
    source: Option<String>,
    /// Print the execution plan to stderr.
    #[arg(long)]
    explain: bool,
    #[command(flatten)]
    engine: EngineArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CrpqArgs {
    #[arg(long)]
    store: PathBuf,
    /// Query text; see the README for the syntax.
    #[arg(long, short, conflicts_with = "query_file", required_unless_present = "query_file")]
    query: Option<String>,
    #[arg(long)]
    query_file: Option<PathBuf>,
    /// Comma-separated query vertex matching order.
    #[arg(long, value_delimiter = ',')]
    order: Option<Vec<String>>,
    #[command(flatten)]
    engine: EngineArgs,
    #[command(flatten)]
    output: OutputArgs,
}

pub const EXIT_QUERY: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_BUDGET: u8 = 4;
pub const EXIT_MISMATCH: u8 = 5;

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Syntax { .. }
                | Error::UnknownOperator { .. }
                | Error::UnknownLabel(_)
                | Error::UnknownVertexLabel(_)
                | Error::UnknownVertex(_)
                | Error::InvalidPlan(_)
                | Error::InvalidQuery(_)
                | Error::Config(_) => EXIT_QUERY,
                Error::PoolExhausted { .. } | Error::UnsatisfiableBudget(_) => EXIT_BUDGET,
                _ => EXIT_DATA,
            };
        }
        if cause.is::<io::Error>() {
            return EXIT_DATA;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Build(a) => cmd_build(&a),
        Command::Rpq(a) => cmd_rpq(&a),
        Command::Crpq(a) => cmd_crpq(&a),
        Command::Verify(a) => verify::cmd_verify(&a),
        Command::Bench(a) => bench::cmd_bench(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn load_store(path: &Path) -> Result<LgfStore> {
    LgfStore::load(path).with_context(|| format!("loading store {}", path.display()))
}

fn cmd_build(a: &BuildArgs) -> Result<u8> {
    let store = LgfStore::ingest(&a.vertices, &a.edges, a.theta)?;
    store.save(&a.out).with_context(|| format!("writing store {}", a.out.display()))?;
    let grids: Vec<String> = store.grids().map(|g| g.name.clone()).collect();
    println!("vertices={}", store.num_vertices());
    println!("grids={}", grids.join(","));
    Ok(0)
}

/// `key=value` lines in a fixed order.
pub fn stats_lines(s: &QueryStats) -> Vec<String> {
    vec![
        format!("iterations={}", s.iterations),
        format!("tg_count={}", s.tg_count),
        format!("max_tg_depth={}", s.max_tg_depth),
        format!("max_hops={}", s.max_hops),
        format!("sub_tgs={}", s.sub_tgs),
        format!("segments_peak_bytes={}", s.segments_peak_bytes),
        format!("segments_leaked={}", s.segments_leaked),
        format!("fallback_halvings={}", s.fallback_halvings),
        format!("drains={}", s.drains),
        format!("overlap_ratio={:.3}", s.overlap_ratio),
        format!("finalized_slices={}", s.finalized_slices),
        format!("memory_estimate_bytes={}", s.memory_estimate_bytes),
    ]
}

fn report_stats(stats: &QueryStats, out: &OutputArgs) -> Result<()> {
    match &out.stats_json {
        Some(path) => {
            let json = serde_json::to_string_pretty(stats)?;
            fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))?;
        }
        None => {
            for line in stats_lines(stats) {
                eprintln!("{line}");
            }
        }
    }
    Ok(())
}

fn cmd_rpq(a: &RpqArgs) -> Result<u8> {
    let store = load_store(&a.store)?;
    let regex = parse_regex(&a.query)?;
    let config = a.engine.config(store.theta(), a.output.trace);
    let plan = ExecutionPlan::build(&regex, config.plan)?;
    if a.explain {
        eprint!("{}", plan.describe());
    }
    let out = match &a.source {
        Some(name) => run_rpq_from(&plan, &store, &config, store.vertex_id(name)?)?,
        None => run_rpq(&plan, &store, &config)?,
    };
    let mut stdout = BufWriter::new(io::stdout().lock());
    if config.trace {
        for t in &out.trace {
            writeln!(stdout, "{t}")?;
        }
    }
    let pairs = &out.pairs;
    writeln!(stdout, "count={}", pairs.len())?;
    if a.output.emit_pairs {
        for (s, d) in pairs.iter() {
            writeln!(stdout, "{}\t{}", store.vertex_name(s), store.vertex_name(d))?;
        }
    }
    stdout.flush()?;
    report_stats(&out.stats, &a.output)?;
    Ok(0)
}

fn cmd_crpq(a: &CrpqArgs) -> Result<u8> {
    let store = load_store(&a.store)?;
    let text = match (&a.query, &a.query_file) {
        (Some(q), _) => q.clone(),
        (None, Some(p)) => fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        (None, None) => unreachable!("clap requires one of them"),
    };
    let query = CrpqQuery::parse(&text)?;
    let order: Option<Vec<&str>> = a.order.as_ref().map(|o| o.iter().map(String::as_str).collect());
    let plan = plan_crpq(&query, order.as_deref())?;
    let config = a.engine.config(store.theta(), a.output.trace);
    let result = execute_crpq(&plan, &store, &config)?;
    let mut stdout = BufWriter::new(io::stdout().lock());
    writeln!(stdout, "count={}", result.tuples.len())?;
    if a.output.emit_pairs {
        let header: Vec<&str> = query.vertices.iter().map(|v| v.name.as_str()).collect();
        writeln!(stdout, "{}", header.join("\t"))?;
        for t in &result.tuples {
            let names: Vec<&str> = t.iter().map(|&v| store.vertex_name(v)).collect();
            writeln!(stdout, "{}", names.join("\t"))?;
        }
    }
    stdout.flush()?;
    report_stats(&result.stats, &a.output)?;
    Ok(0)
}
