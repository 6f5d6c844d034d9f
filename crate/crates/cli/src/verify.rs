use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, ValueEnum};
use gridrpq::graph::RandomGraphSpec;
use gridrpq::oracle::{oracle_crpq, oracle_rpq};
use gridrpq::regex::parse_regex;
use gridrpq::workload::{random_crpq_text, CRPQ_SHAPES, RPQ_SHAPES};
use gridrpq::{
    execute_crpq, plan_crpq, run_rpq, Automaton, CrpqQuery, EngineConfig, Error, ExecutionPlan, LgfStore, RawGraph,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{EngineArgs, EXIT_MISMATCH};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    /// Path expressions on random graphs.
    Rpq,
    /// Conjunctive queries on random graphs.
    Crpq,
    /// Closures over chains four static hops long.
    Chain,
}

#[derive(Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "rpq")]
    family: Family,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Verify this graph instead of generated ones.
    #[arg(long, requires = "edges")]
    vertices: Option<PathBuf>,
    #[arg(long, requires = "vertices")]
    edges: Option<PathBuf>,
    /// Path expressions to check; defaults to the ten standard shapes.
    #[arg(long, short, value_delimiter = ';')]
    query: Option<Vec<String>>,
    #[arg(long, default_value_t = 50)]
    max_vertices: usize,
    #[arg(long, default_value_t = 3)]
    vertex_labels: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.02,0.1,0.3")]
    densities: Vec<f64>,
    #[command(flatten)]
    engine: EngineArgs,
}

struct Mismatch {
    graph: RawGraph,
    query: String,
    missing: Vec<String>,
    extra: Vec<String>,
}

fn diff<T: Ord + Clone>(want: &[T], got: &[T], show: impl Fn(&T) -> String) -> (Vec<String>, Vec<String>) {
    let missing = want.iter().filter(|x| got.binary_search(x).is_err()).map(&show).collect();
    let extra = got.iter().filter(|x| want.binary_search(x).is_err()).map(&show).collect();
    (missing, extra)
}

fn check_rpq(graph: &RawGraph, expr: &str, config: &EngineConfig) -> Result<Option<Mismatch>> {
    let g = graph.canonical();
    let regex = parse_regex(expr)?;
    let store = LgfStore::from_graph(&g, config.theta)?;
    let plan = ExecutionPlan::build(&regex, config.plan)?;
    let got = match run_rpq(&plan, &store, config) {
        Err(Error::UnknownLabel(_)) if !regex.labels().iter().all(|l| g.edge_label_id(l).is_some()) => {
            return Ok(None);
        }
        r => r?.pairs,
    };
    let want = oracle_rpq(&g, &Automaton::compile(&regex), config.epsilon_pairs);
    if got == want {
        return Ok(None);
    }
    let show = |&(s, d): &(u32, u32)| format!("{}\t{}", g.name(s), g.name(d));
    let (missing, extra) = diff(want.as_slice(), got.as_slice(), show);
    Ok(Some(Mismatch {
        graph: g,
        query: expr.to_string(),
        missing,
        extra,
    }))
}

fn check_crpq(graph: &RawGraph, text: &str, config: &EngineConfig) -> Result<Option<Mismatch>> {
    let g = graph.canonical();
    let query = CrpqQuery::parse(text)?;
    let store = LgfStore::from_graph(&g, config.theta)?;
    let got = match execute_crpq(&plan_crpq(&query, None)?, &store, config) {
        Err(Error::UnknownLabel(_)) => return Ok(None),
        r => r?.tuples,
    };
    let want = oracle_crpq(&g, &query, config.epsilon_pairs);
    if got == want {
        return Ok(None);
    }
    let show = |t: &Vec<u32>| t.iter().map(|&v| g.name(v)).collect::<Vec<_>>().join("\t");
    let (missing, extra) = diff(&want, &got, show);
    Ok(Some(Mismatch {
        graph: g,
        query: text.to_string(),
        missing,
        extra,
    }))
}

fn chain(len: usize, rng: &mut impl Rng) -> RawGraph {
    let mut g = RawGraph::new();
    for i in 0..=len {
        let label = if rng.gen_bool(0.5) { "E" } else { "O" };
        g.add_vertex(&format!("v{i:03}"), label).unwrap();
    }
    for i in 0..len as u32 {
        g.add_edge(i, i + 1, "a");
    }
    g
}

fn report(m: &Mismatch) -> String {
    let (vertices, edges) = m.graph.to_tsv();
    let mut out = String::new();
    writeln!(out, "query: {}", m.query).unwrap();
    writeln!(out, "vertices:\n{}", vertices.trim_end()).unwrap();
    writeln!(out, "edges:\n{}", edges.trim_end()).unwrap();
    for p in &m.missing {
        writeln!(out, "- {p}").unwrap();
    }
    for p in &m.extra {
        writeln!(out, "+ {p}").unwrap();
    }
    out
}

pub fn cmd_verify(a: &VerifyArgs) -> Result<u8> {
    if a.densities.iter().any(|d| !(0.0..=1.0).contains(d)) || a.densities.is_empty() {
        bail!(Error::Config("densities must lie in [0, 1]".into()));
    }
    let theta = a.engine.theta.unwrap_or(4);
    let config = EngineConfig {
        theta,
        ..a.engine.config(theta, false)
    };
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let given = match (&a.vertices, &a.edges) {
        (Some(v), Some(e)) => Some(RawGraph::from_tsv(v, e)?),
        _ => None,
    };
    let exprs: Vec<String> = match &a.query {
        Some(q) => q.clone(),
        None if a.family == Family::Chain => vec!["a*".into(), "aa*".into(), "(a+b+c+d)*".into()],
        None => RPQ_SHAPES.iter().map(|(_, e)| e.to_string()).collect(),
    };
    let mut checks = 0usize;
    let mut mismatches = 0usize;
    let mut first: Option<Mismatch> = None;
    for trial in 0..a.trials {
        let graph = match &given {
            Some(g) => g.clone(),
            None if a.family == Family::Chain => chain(4 * config.static_hop + trial % 3, &mut rng),
            None => {
                let cap = match a.family {
                    Family::Crpq => a.max_vertices.min(30),
                    _ => a.max_vertices,
                };
                let n = rng.gen_range(1..=cap.max(1));
                let labels = rng.gen_range(1..=a.vertex_labels.max(1));
                let density = a.densities[trial % a.densities.len()];
                RawGraph::random_with(&RandomGraphSpec::new(n, labels, density), &mut rng)
            }
        };
        let found = if a.family == Family::Crpq {
            let text = random_crpq_text(trial % CRPQ_SHAPES.len(), a.vertex_labels, &mut rng);
            checks += 1;
            check_crpq(&graph, &text, &config)?.into_iter().collect::<Vec<_>>()
        } else {
            let mut found = Vec::new();
            for expr in &exprs {
                checks += 1;
                found.extend(check_rpq(&graph, expr, &config)?);
            }
            found
        };
        mismatches += found.len();
        if first.is_none() {
            first = found.into_iter().next();
        }
    }
    println!("trials={} checks={checks} mismatches={mismatches}", a.trials);
    match first {
        None => {
            println!("PASS");
            Ok(0)
        }
        Some(m) => {
            println!("FAIL");
            print!("{}", report(&m));
            Ok(EXIT_MISMATCH)
        }
    }
}
