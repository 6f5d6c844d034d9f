//! Standard RPQ and CRPQ shapes over the edge labels `a`..`d`.

use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::Rng;

/// `(name, expression)` pairs, from the simplest closure to the full
/// alphabet closure.
pub const RPQ_SHAPES: [(&str, &str); 10] = [
    ("Q1", "a*"),
    ("Q2", "a?b*"),
    ("Q3", "ab*"),
    ("Q4", "abcd"),
    ("Q5", "abc*"),
    ("Q6", "ab*c"),
    ("Q7", "(a+c+d)b*"),
    ("Q8", "a*b*"),
    ("Q9", "ab*c*"),
    ("Q10", "(a+b+c+d)*"),
];

/// Conjunctive pattern shapes as `(name, vertex count, atom endpoints)`.
pub const CRPQ_SHAPES: [(&str, usize, &[(usize, usize)]); 5] = [
    ("chain", 3, &[(0, 1), (1, 2)]),
    ("star", 4, &[(0, 1), (0, 2), (0, 3)]),
    ("triangle", 3, &[(0, 1), (0, 2), (1, 2)]),
    ("cycle", 4, &[(0, 1), (1, 2), (2, 3), (3, 0)]),
    ("diamond", 4, &[(0, 1), (0, 2), (1, 3), (2, 3)]),
];

/// Atom expressions the CRPQ generator draws from.
pub const ATOM_EXPRS: [&str; 10] = ["a", "b", "c", "d", "ab", "a*", "b+c", "a?b", "c*d", "(a+b)*"];

/// A random query text in one of the [`CRPQ_SHAPES`], with vertex labels
/// drawn from `L0..L{vertex_labels}` and occasional distinct filters.
pub fn random_crpq_text(shape: usize, vertex_labels: usize, rng: &mut impl Rng) -> String {
    let (name, n, atoms) = CRPQ_SHAPES[shape % CRPQ_SHAPES.len()];
    let mut text = format!("CRPQ {name} {{");
    for v in 0..n {
        write!(text, " vertex u{v}").unwrap();
        if rng.gen_bool(0.3) {
            write!(text, ":L{}", rng.gen_range(0..vertex_labels.max(1))).unwrap();
        }
        text.push(';');
    }
    for &(x, y) in atoms {
        let expr = ATOM_EXPRS.choose(rng).unwrap();
        write!(text, " edge u{x} -[{expr}]-> u{y};").unwrap();
    }
    if rng.gen_bool(0.3) {
        let a = rng.gen_range(0..n);
        let b = (a + rng.gen_range(1..n)) % n;
        write!(text, " distinct(u{a}, u{b});").unwrap();
    }
    text.push_str(" }");
    text
}
