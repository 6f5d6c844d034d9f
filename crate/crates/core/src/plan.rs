//! Execution plans: the forward plan, its reverse, loop-cache rewriting of a
//! starred factor, and start-in-the-middle splitting with a transposed
//! suffix.

use std::fmt::Write as _;

use crate::automaton::Automaton;
use crate::config::PlanVariant;
use crate::error::{Error, Result};
use crate::regex::Regex;

/// One step of a plan.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PlanStage {
    /// Evaluate `automaton` and store its answers as the virtual edge label
    /// `output`, optionally adding the in-direction (transposed) slices.
    Materialize {
        automaton: Automaton,
        output: String,
        transpose: bool,
    },
    /// Evaluate `automaton`, producing the plan's answers. With `swap`, each
    /// traversal pair (x, y) is reported as (y, x).
    Traverse { automaton: Automaton, swap: bool },
}

impl PlanStage {
    pub fn automaton(&self) -> &Automaton {
        match self {
            PlanStage::Materialize { automaton, .. } | PlanStage::Traverse { automaton, .. } => automaton,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExecutionPlan {
    pub variant: PlanVariant,
    /// Materialize stages first, then exactly one traverse stage.
    pub stages: Vec<PlanStage>,
    /// Automaton of the whole expression, used for the memory estimate.
    pub source: Automaton,
}

/// Prefix for virtual label names; cannot be produced by the query lexer's
/// short labels.
pub const VIRTUAL_PREFIX: &str = "~";

impl ExecutionPlan {
    pub fn build(regex: &Regex, variant: PlanVariant) -> Result<ExecutionPlan> {
        match variant {
            PlanVariant::Forward => Ok(forward_plan(regex)),
            PlanVariant::Reverse => Ok(reverse_plan(regex)),
            PlanVariant::Middle(k) => middle_plan(regex, k),
            PlanVariant::LoopCache(k) => loop_cache_plan(regex, k),
        }
    }

    /// The stage producing the answers.
    pub fn final_stage(&self) -> &PlanStage {
        self.stages.last().expect("plans are never empty")
    }

    /// Every plan variant applicable to `regex`.
    pub fn variants(regex: &Regex) -> Vec<PlanVariant> {
        let factors = regex.factors();
        let mut out = vec![PlanVariant::Forward, PlanVariant::Reverse];
        for k in 1..factors.len() {
            out.push(PlanVariant::Middle(k));
        }
        for (k, f) in factors.iter().enumerate() {
            if matches!(f, Regex::Star(_)) {
                out.push(PlanVariant::LoopCache(k));
            }
        }
        out
    }

    /// Human-readable plan description.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        for (i, stage) in self.stages.iter().enumerate() {
            match stage {
                PlanStage::Materialize {
                    automaton,
                    output,
                    transpose,
                } => {
                    let t = if *transpose { " transpose" } else { "" };
                    writeln!(out, "stage {i}: materialize -> {output}{t}").unwrap();
                    out.push_str(&indent(&automaton.dump()));
                }
                PlanStage::Traverse { automaton, swap } => {
                    let s = if *swap { " swap" } else { "" };
                    writeln!(out, "stage {i}: traverse{s}").unwrap();
                    out.push_str(&indent(&automaton.dump()));
                }
            }
        }
        out
    }
}

fn indent(text: &str) -> String {
    text.lines().map(|l| format!("  {l}\n")).collect()
}

pub fn forward_plan(regex: &Regex) -> ExecutionPlan {
    let a = Automaton::compile(regex);
    ExecutionPlan {
        variant: PlanVariant::Forward,
        stages: vec![PlanStage::Traverse {
            automaton: a.clone(),
            swap: false,
        }],
        source: a,
    }
}

/// Single in-direction traversal from the destination side.
pub fn reverse_plan(regex: &Regex) -> ExecutionPlan {
    let a = Automaton::compile(regex);
    ExecutionPlan {
        variant: PlanVariant::Reverse,
        stages: vec![PlanStage::Traverse {
            automaton: a.reversed(),
            swap: true,
        }],
        source: a,
    }
}

/// Splits before factor `split`. The suffix is materialized forward and
/// transposed; the main stage starts from the suffix's source vertices and
/// walks the prefix backwards. Splits at either end are the forward plan.
pub fn middle_plan(regex: &Regex, split: usize) -> Result<ExecutionPlan> {
    let factors = regex.factors();
    if split > factors.len() {
        return Err(Error::InvalidPlan(format!(
            "split {split} is not a concatenation boundary (expression has {} factors)",
            factors.len()
        )));
    }
    if split == 0 || split == factors.len() {
        let mut p = forward_plan(regex);
        p.variant = PlanVariant::Middle(split);
        return Ok(p);
    }
    let source = Automaton::compile(regex);
    let suffix = Regex::concat(factors[split..].iter().map(|f| (*f).clone()).collect());
    let name = format!("{VIRTUAL_PREFIX}m{split}");
    let mut main: Vec<Regex> = factors[..split].iter().map(|f| (*f).clone()).collect();
    let v = Regex::label(name.clone());
    main.push(if suffix.nullable() { Regex::optional(v) } else { v });
    let main = Automaton::compile(&Regex::concat(main)).reversed();
    Ok(ExecutionPlan {
        variant: PlanVariant::Middle(split),
        stages: vec![
            PlanStage::Materialize {
                automaton: Automaton::compile(&suffix),
                output: name,
                transpose: true,
            },
            PlanStage::Traverse {
                automaton: main,
                swap: true,
            },
        ],
        source,
    })
}

/// Materializes the one-or-more closure of starred factor `k` as a virtual
/// label and replaces the factor by an optional step over it.
pub fn loop_cache_plan(regex: &Regex, k: usize) -> Result<ExecutionPlan> {
    let factors = regex.factors();
    let inner = match factors.get(k) {
        Some(Regex::Star(inner)) => inner.as_ref().clone(),
        Some(_) => return Err(Error::InvalidPlan(format!("factor {k} is not starred"))),
        None => return Err(Error::InvalidPlan(format!("no factor {k}"))),
    };
    let name = format!("{VIRTUAL_PREFIX}l{k}");
    let mut main: Vec<Regex> = factors.iter().map(|f| (*f).clone()).collect();
    main[k] = Regex::optional(Regex::label(name.clone()));
    Ok(ExecutionPlan {
        variant: PlanVariant::LoopCache(k),
        stages: vec![
            PlanStage::Materialize {
                automaton: Automaton::compile(&Regex::plus(inner)),
                output: name,
                transpose: false,
            },
            PlanStage::Traverse {
                automaton: Automaton::compile(&Regex::concat(main)),
                swap: false,
            },
        ],
        source: Automaton::compile(regex),
    })
}
