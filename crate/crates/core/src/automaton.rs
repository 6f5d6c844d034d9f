//! Epsilon-free label automata.
//!
//! Compilation goes through the position (Glushkov) construction, so every
//! transition consumes exactly one edge label. The result is trimmed to
//! useful states, quotiented by forward bisimulation (language preserving;
//! it collapses the interchangeable position states of starred factors) and
//! renumbered breadth-first from the initial state so dumps are canonical.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lgf::Direction;
use crate::regex::Regex;

pub type StateId = u32;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Transition {
    pub from: StateId,
    pub label: String,
    pub dir: Direction,
    pub to: StateId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Automaton {
    num_states: u32,
    finals: Vec<bool>,
    /// Sorted by (from, label, dir, to).
    transitions: Vec<Transition>,
    /// Index into `transitions` of the first transition of each state.
    starts: Vec<usize>,
}

impl Automaton {
    /// Position automaton of `regex`, normalized.
    pub fn compile(regex: &Regex) -> Automaton {
        let mut g = Glushkov::default();
        let info = g.walk(regex);
        let n = g.labels.len() as u32 + 1;
        let mut finals = vec![false; n as usize];
        finals[0] = info.nullable;
        for &p in &info.last {
            finals[p as usize] = true;
        }
        let mut transitions = Vec::new();
        for &p in &info.first {
            transitions.push(Transition {
                from: 0,
                label: g.labels[p as usize - 1].clone(),
                dir: Direction::Out,
                to: p,
            });
        }
        for (p, follow) in g.follow.iter() {
            for &q in follow {
                transitions.push(Transition {
                    from: *p,
                    label: g.labels[q as usize - 1].clone(),
                    dir: Direction::Out,
                    to: q,
                });
            }
        }
        Automaton::from_parts(n, finals, transitions)
    }

    /// Builds a normalized automaton with initial state 0.
    pub fn from_parts(num_states: u32, finals: Vec<bool>, transitions: Vec<Transition>) -> Automaton {
        assert_eq!(finals.len(), num_states as usize);
        let (n, finals, transitions) = trim(num_states, finals, transitions);
        let (n, finals, transitions) = quotient(n, finals, transitions);
        let (n, finals, transitions) = renumber(n, finals, transitions);
        Automaton::raw(n, finals, transitions)
    }

    fn raw(num_states: u32, finals: Vec<bool>, mut transitions: Vec<Transition>) -> Automaton {
        transitions.sort();
        transitions.dedup();
        let mut starts = vec![transitions.len(); num_states as usize + 1];
        for (i, t) in transitions.iter().enumerate().rev() {
            starts[t.from as usize] = i;
        }
        for s in (0..num_states as usize).rev() {
            starts[s] = starts[s].min(starts[s + 1]);
        }
        Automaton {
            num_states,
            finals,
            transitions,
            starts,
        }
    }

    pub fn initial(&self) -> StateId {
        0
    }

    pub fn num_states(&self) -> u32 {
        self.num_states
    }

    pub fn is_final(&self, q: StateId) -> bool {
        self.finals[q as usize]
    }

    pub fn final_states(&self) -> Vec<StateId> {
        (0..self.num_states).filter(|&q| self.is_final(q)).collect()
    }

    /// True when the empty word is accepted.
    pub fn epsilon_accepting(&self) -> bool {
        self.finals[0]
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn transitions_from(&self, q: StateId) -> &[Transition] {
        &self.transitions[self.starts[q as usize]..self.starts[q as usize + 1]]
    }

    /// Distinct labels in sorted order.
    pub fn alphabet(&self) -> Vec<&str> {
        let set: BTreeSet<&str> = self.transitions.iter().map(|t| t.label.as_str()).collect();
        set.into_iter().collect()
    }

    /// Whether the language is empty.
    pub fn is_empty_language(&self) -> bool {
        !self.epsilon_accepting() && self.transitions.is_empty()
    }

    /// Membership for a word of out-direction labels.
    pub fn accepts<S: AsRef<str>>(&self, word: &[S]) -> Result<bool> {
        let word: Vec<(&str, Direction)> = word.iter().map(|l| (l.as_ref(), Direction::Out)).collect();
        self.accepts_directed(&word)
    }

    /// Membership for a word of (label, direction) symbols.
    pub fn accepts_directed(&self, word: &[(&str, Direction)]) -> Result<bool> {
        let alphabet = self.alphabet();
        let mut current = vec![false; self.num_states as usize];
        current[0] = true;
        for &(label, dir) in word {
            if !alphabet.contains(&label) {
                return Err(Error::UnknownLabel(label.to_string()));
            }
            let mut next = vec![false; self.num_states as usize];
            for q in 0..self.num_states {
                if !current[q as usize] {
                    continue;
                }
                for t in self.transitions_from(q) {
                    if t.label == label && t.dir == dir {
                        next[t.to as usize] = true;
                    }
                }
            }
            current = next;
        }
        Ok((0..self.num_states).any(|q| current[q as usize] && self.is_final(q)))
    }

    /// Automaton of the reversed language with every direction flipped.
    ///
    /// A fresh initial state takes over the transitions that entered final
    /// states; the old initial state becomes the only final state.
    pub fn reversed(&self) -> Automaton {
        let fresh = self.num_states;
        let mut transitions = Vec::with_capacity(self.transitions.len() * 2);
        for t in &self.transitions {
            transitions.push(Transition {
                from: t.to,
                label: t.label.clone(),
                dir: t.dir.flip(),
                to: t.from,
            });
            if self.is_final(t.to) {
                transitions.push(Transition {
                    from: fresh,
                    label: t.label.clone(),
                    dir: t.dir.flip(),
                    to: t.from,
                });
            }
        }
        let mut finals = vec![false; self.num_states as usize + 1];
        finals[0] = true;
        finals[fresh as usize] = self.epsilon_accepting();
        // renumber so that the fresh state is 0
        let map = |q: StateId| if q == fresh { 0 } else { q + 1 };
        let transitions = transitions
            .into_iter()
            .map(|t| Transition {
                from: map(t.from),
                to: map(t.to),
                ..t
            })
            .collect();
        let mut mapped_finals = vec![false; fresh as usize + 1];
        for (q, &f) in finals.iter().enumerate() {
            mapped_finals[map(q as StateId) as usize] = f;
        }
        Automaton::from_parts(fresh + 1, mapped_finals, transitions)
    }

    /// Textual dump: `initial`, `final` lines, then one transition per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        writeln!(out, "initial q0").unwrap();
        for q in self.final_states() {
            writeln!(out, "final q{q}").unwrap();
        }
        for t in &self.transitions {
            writeln!(out, "q{} -{}/{}-> q{}", t.from, t.label, t.dir, t.to).unwrap();
        }
        out
    }
}

#[derive(Default)]
struct Glushkov {
    labels: Vec<String>,
    follow: BTreeMap<u32, BTreeSet<u32>>,
}

struct PosInfo {
    nullable: bool,
    first: BTreeSet<u32>,
    last: BTreeSet<u32>,
}

impl Glushkov {
    fn add_follow(&mut self, from: &BTreeSet<u32>, to: &BTreeSet<u32>) {
        for &p in from {
            self.follow.entry(p).or_default().extend(to.iter().copied());
        }
    }

    fn walk(&mut self, node: &Regex) -> PosInfo {
        match node {
            Regex::Label(name) => {
                self.labels.push(name.clone());
                let p = self.labels.len() as u32;
                PosInfo {
                    nullable: false,
                    first: BTreeSet::from([p]),
                    last: BTreeSet::from([p]),
                }
            }
            Regex::Concat(items) => {
                let mut acc = PosInfo {
                    nullable: true,
                    first: BTreeSet::new(),
                    last: BTreeSet::new(),
                };
                for item in items {
                    let info = self.walk(item);
                    self.add_follow(&acc.last, &info.first);
                    if acc.nullable {
                        acc.first.extend(info.first.iter().copied());
                    }
                    if info.nullable {
                        acc.last.extend(info.last.iter().copied());
                    } else {
                        acc.last = info.last;
                    }
                    acc.nullable &= info.nullable;
                }
                acc
            }
            Regex::Alt(items) => {
                let mut acc = PosInfo {
                    nullable: false,
                    first: BTreeSet::new(),
                    last: BTreeSet::new(),
                };
                for item in items {
                    let info = self.walk(item);
                    acc.nullable |= info.nullable;
                    acc.first.extend(info.first);
                    acc.last.extend(info.last);
                }
                acc
            }
            Regex::Star(inner) | Regex::Plus(inner) => {
                let info = self.walk(inner);
                self.add_follow(&info.last, &info.first);
                PosInfo {
                    nullable: matches!(node, Regex::Star(_)) || info.nullable,
                    ..info
                }
            }
            Regex::Optional(inner) => {
                let info = self.walk(inner);
                PosInfo {
                    nullable: true,
                    ..info
                }
            }
        }
    }
}

type Parts = (u32, Vec<bool>, Vec<Transition>);

/// Keeps states reachable from 0 and co-reachable to a final state.
/// State 0 always survives.
fn trim(n: u32, finals: Vec<bool>, transitions: Vec<Transition>) -> Parts {
    let mut fwd = vec![Vec::new(); n as usize];
    let mut bwd = vec![Vec::new(); n as usize];
    for t in &transitions {
        fwd[t.from as usize].push(t.to);
        bwd[t.to as usize].push(t.from);
    }
    let reach = closure(&fwd, std::iter::once(0));
    let coreach = closure(&bwd, (0..n).filter(|&q| finals[q as usize]));
    let keep: Vec<bool> = (0..n as usize).map(|q| q == 0 || (reach[q] && coreach[q])).collect();
    let mut map = vec![u32::MAX; n as usize];
    let mut next = 0;
    for q in 0..n as usize {
        if keep[q] {
            map[q] = next;
            next += 1;
        }
    }
    let new_finals = (0..n as usize).filter(|&q| keep[q]).map(|q| finals[q]).collect();
    let new_transitions = transitions
        .into_iter()
        .filter(|t| {
            let (f, to) = (t.from as usize, t.to as usize);
            keep[f] && keep[to] && reach[f] && coreach[to]
        })
        .map(|t| Transition {
            from: map[t.from as usize],
            to: map[t.to as usize],
            ..t
        })
        .collect();
    (next, new_finals, new_transitions)
}

fn closure(adj: &[Vec<u32>], seeds: impl Iterator<Item = u32>) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    let mut stack: Vec<u32> = Vec::new();
    for s in seeds {
        if !seen[s as usize] {
            seen[s as usize] = true;
            stack.push(s);
        }
    }
    while let Some(q) = stack.pop() {
        for &r in &adj[q as usize] {
            if !seen[r as usize] {
                seen[r as usize] = true;
                stack.push(r);
            }
        }
    }
    seen
}

/// Coarsest forward bisimulation by iterated signature refinement.
fn quotient(n: u32, finals: Vec<bool>, transitions: Vec<Transition>) -> Parts {
    let mut class: Vec<u32> = finals.iter().map(|&f| f as u32).collect();
    let mut count = class.iter().copied().collect::<BTreeSet<_>>().len();
    loop {
        let mut sigs: Vec<(u32, BTreeSet<(&str, Direction, u32)>)> =
            class.iter().map(|&c| (c, BTreeSet::new())).collect();
        for t in &transitions {
            sigs[t.from as usize]
                .1
                .insert((t.label.as_str(), t.dir, class[t.to as usize]));
        }
        let mut ids: HashMap<&(u32, BTreeSet<(&str, Direction, u32)>), u32> = HashMap::new();
        let mut next = Vec::with_capacity(n as usize);
        for sig in &sigs {
            let len = ids.len() as u32;
            next.push(*ids.entry(sig).or_insert(len));
        }
        let new_count = ids.len();
        drop(ids);
        class = next;
        if new_count == count {
            break;
        }
        count = new_count;
    }
    let mut new_finals = vec![false; count];
    for q in 0..n as usize {
        new_finals[class[q] as usize] |= finals[q];
    }
    let new_transitions: Vec<Transition> = transitions
        .into_iter()
        .map(|t| Transition {
            from: class[t.from as usize],
            to: class[t.to as usize],
            ..t
        })
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    // class ids are arbitrary; make the initial state's class 0
    let init = class[0];
    let swap = |c: u32| {
        if c == init {
            0
        } else if c == 0 {
            init
        } else {
            c
        }
    };
    let new_transitions: Vec<Transition> = new_transitions
        .into_iter()
        .map(|t: Transition| Transition {
            from: swap(t.from),
            to: swap(t.to),
            ..t
        })
        .collect();
    new_finals.swap(0, init as usize);
    (count as u32, new_finals, new_transitions)
}

/// Breadth-first renumbering from state 0, following transitions in
/// (label, direction, target) order.
fn renumber(n: u32, finals: Vec<bool>, transitions: Vec<Transition>) -> Parts {
    let mut out: Vec<Vec<&Transition>> = vec![Vec::new(); n as usize];
    for t in &transitions {
        out[t.from as usize].push(t);
    }
    for list in &mut out {
        list.sort_by(|a, b| (&a.label, a.dir, a.to).cmp(&(&b.label, b.dir, b.to)));
    }
    let mut map = vec![u32::MAX; n as usize];
    let mut queue = VecDeque::from([0u32]);
    map[0] = 0;
    let mut next = 1;
    while let Some(q) = queue.pop_front() {
        for t in &out[q as usize] {
            if map[t.to as usize] == u32::MAX {
                map[t.to as usize] = next;
                next += 1;
                queue.push_back(t.to);
            }
        }
    }
    // unreachable states cannot exist after trimming
    debug_assert!(map.iter().all(|&m| m != u32::MAX));
    let mut new_finals = vec![false; n as usize];
    for q in 0..n as usize {
        new_finals[map[q] as usize] = finals[q];
    }
    let new_transitions = transitions
        .iter()
        .map(|t| Transition {
            from: map[t.from as usize],
            label: t.label.clone(),
            dir: t.dir,
            to: map[t.to as usize],
        })
        .collect();
    (n, new_finals, new_transitions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regex::parse_regex;

    fn compile(s: &str) -> Automaton {
        Automaton::compile(&parse_regex(s).unwrap())
    }

    /// Direct recursive matcher over the syntax tree.
    fn matches(r: &Regex, w: &[&str]) -> bool {
        match r {
            Regex::Label(l) => w.len() == 1 && w[0] == l,
            Regex::Concat(items) => concat_matches(items, w),
            Regex::Alt(items) => items.iter().any(|i| matches(i, w)),
            Regex::Optional(inner) => w.is_empty() || matches(inner, w),
            Regex::Star(inner) => {
                w.is_empty() || (1..=w.len()).any(|k| matches(inner, &w[..k]) && matches(r, &w[k..]))
            }
            Regex::Plus(inner) => {
                matches(inner, w)
                    || (1..=w.len()).any(|k| {
                        matches(inner, &w[..k]) && matches(r, &w[k..])
                    })
            }
        }
    }

    fn concat_matches(items: &[Regex], w: &[&str]) -> bool {
        match items.split_first() {
            None => w.is_empty(),
            Some((head, rest)) => (0..=w.len()).any(|k| matches(head, &w[..k]) && concat_matches(rest, &w[k..])),
        }
    }

    fn words(alphabet: &[&'static str], max_len: usize) -> Vec<Vec<&'static str>> {
        let mut all = vec![vec![]];
        let mut layer = vec![vec![]];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for w in &layer {
                for &a in alphabet {
                    let mut x: Vec<&str> = w.clone();
                    x.push(a);
                    next.push(x);
                }
            }
            all.extend(next.iter().cloned());
            layer = next;
        }
        all
    }

    #[test]
    fn abc_star_has_three_states() {
        let a = compile("abc*");
        assert_eq!(a.num_states(), 3);
        assert_eq!(
            a.dump(),
            "initial q0\nfinal q2\nq0 -a/out-> q1\nq1 -b/out-> q2\nq2 -c/out-> q2\n"
        );
        assert!(a.accepts(&["a", "b"]).unwrap());
        assert!(a.accepts(&["a", "b", "c", "c", "c"]).unwrap());
        assert!(!a.accepts::<&str>(&[]).unwrap());
        assert!(!a.accepts(&["a"]).unwrap());
    }

    #[test]
    fn single_atom_and_star() {
        let a = compile("a");
        assert_eq!(a.num_states(), 2);
        assert_eq!(a.final_states(), vec![1]);
        let s = compile("a*");
        assert!(s.epsilon_accepting());
        assert!(s.accepts::<&str>(&[]).unwrap());
        assert!(s.accepts(&["a"]).unwrap());
        assert!(s.accepts(&["a", "a"]).unwrap());
        assert!(matches!(s.accepts(&["b"]), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn epsilon_free_and_trim() {
        for src in ["a*", "a?b*", "(a+b+c)*", "ab*c*", "(ab)+", "a*b*", "(a?)*"] {
            let a = compile(src);
            assert!(a.transitions().iter().all(|t| !t.label.is_empty()));
            // every state reachable and co-reachable
            let mut fwd = vec![Vec::new(); a.num_states() as usize];
            let mut bwd = vec![Vec::new(); a.num_states() as usize];
            for t in a.transitions() {
                fwd[t.from as usize].push(t.to);
                bwd[t.to as usize].push(t.from);
            }
            let r = closure(&fwd, std::iter::once(0));
            let c = closure(&bwd, a.final_states().into_iter());
            assert!(r.iter().all(|&x| x), "{src}");
            assert!(c.iter().all(|&x| x), "{src}");
        }
    }

    #[test]
    fn language_matches_recursive_matcher() {
        let alphabet = ["a", "b", "c"];
        let all = words(&alphabet, 6);
        for src in [
            "a*", "a?b*", "ab*", "abcd", "abc*", "ab*c", "(a+c+b)b*", "a*b*", "ab*c*", "(a+b+c)*",
            "(ab)+", "a+.b", "(a?b)*c", "((a+b)c)*a?", "a(b+c)*a",
        ] {
            let r = parse_regex(src).unwrap();
            let auto = Automaton::compile(&r);
            let alpha = auto.alphabet();
            for w in &all {
                if w.iter().any(|l| !alpha.contains(l)) {
                    continue;
                }
                assert_eq!(auto.accepts(w).unwrap(), matches(&r, w), "{src} on {w:?}");
            }
        }
    }

    #[test]
    fn reversed_accepts_mirror_words() {
        let all = words(&["a", "b", "c"], 5);
        for src in ["abc*", "a", "a*", "(a+b)c?", "ab*c", "a?b*"] {
            let auto = compile(src);
            let rev = auto.reversed();
            assert!(rev.transitions().iter().all(|t| t.dir == Direction::In));
            assert_eq!(rev.epsilon_accepting(), auto.epsilon_accepting());
            let alpha = auto.alphabet();
            for w in &all {
                if w.iter().any(|l| !alpha.contains(l)) {
                    continue;
                }
                let mirrored: Vec<(&str, Direction)> =
                    w.iter().rev().map(|&l| (l, Direction::In)).collect();
                assert_eq!(
                    rev.accepts_directed(&mirrored).unwrap(),
                    auto.accepts(w).unwrap(),
                    "{src} {w:?}"
                );
            }
        }
    }

    #[test]
    fn self_loop_reversal_is_symmetric() {
        let a = compile("a*");
        let r = a.reversed();
        assert_eq!(r.num_states(), a.num_states());
        assert_eq!(r.dump(), a.dump().replace("/out", "/in"));
    }
}
