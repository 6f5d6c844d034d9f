//! The fourteen-vertex example graph used throughout the tests and docs.
//!
//! Vertex labels: A = v0..v3, B = v4..v5, C = v6..v9, D = v10..v13.
//! Edge labels a, b, c; nineteen edges.

use crate::graph::RawGraph;

pub const VERTEX_LABELS: [(&str, std::ops::Range<u32>); 4] =
    [("A", 0..4), ("B", 4..6), ("C", 6..10), ("D", 10..14)];

pub const EDGES: [(u32, u32, &str); 19] = [
    (0, 1, "a"),
    (0, 3, "a"),
    (2, 5, "a"),
    (0, 6, "a"),
    (7, 5, "a"),
    (1, 4, "b"),
    (1, 10, "b"),
    (3, 12, "b"),
    (5, 2, "b"),
    (6, 1, "b"),
    (2, 3, "c"),
    (3, 2, "c"),
    (4, 7, "c"),
    (10, 8, "c"),
    (13, 9, "c"),
    (10, 11, "c"),
    (11, 12, "c"),
    (12, 13, "c"),
    (13, 10, "c"),
];

/// The thirteen answers of `abc*`.
pub const ABC_STAR_PAIRS: [(u32, u32); 13] = [
    (0, 1),
    (0, 4),
    (0, 7),
    (0, 8),
    (0, 9),
    (0, 10),
    (0, 11),
    (0, 12),
    (0, 13),
    (2, 2),
    (2, 3),
    (7, 2),
    (7, 3),
];

/// Triangle pattern over (u2, u3, u4).
pub const TRIANGLE_CRPQ: &str =
    "CRPQ q2 { vertex u2:D; vertex u3:A; vertex u4:D; edge u3 -[ab]-> u2; edge u3 -[ab]-> u4; edge u2 -[c*]-> u4; }";

pub const TRIANGLE_CRPQ_DISTINCT: &str =
    "CRPQ q2d { vertex u2:D; vertex u3:A; vertex u4:D; edge u3 -[ab]-> u2; edge u3 -[ab]-> u4; edge u2 -[c*]-> u4; distinct(u2,u4); }";

pub const TRIANGLE_TUPLES: [[u32; 3]; 4] = [[10, 0, 10], [10, 0, 12], [12, 0, 10], [12, 0, 12]];

pub fn graph() -> RawGraph {
    let mut g = RawGraph::new();
    for (label, range) in VERTEX_LABELS {
        for v in range {
            g.add_vertex(&format!("v{v}"), label).unwrap();
        }
    }
    for l in ["a", "b", "c"] {
        g.declare_edge_label(l);
    }
    for (s, d, l) in EDGES {
        g.add_edge(s, d, l);
    }
    g
}

/// Vertex and edge TSV files for the fixture.
pub fn tsv() -> (String, String) {
    graph().to_tsv()
}
