//! Plain edge-labeled graphs: TSV input, canonical vertex order and a seeded
//! random generator. The oracle evaluates directly on this representation.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::VertexId;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawGraph {
    names: Vec<String>,
    vertex_labels: Vec<String>,
    edge_labels: Vec<String>,
    edges: BTreeSet<(VertexId, VertexId, u32)>,
    index: HashMap<String, VertexId>,
}

/// Parameters of the Erdős–Rényi style generator.
#[derive(Clone, Debug)]
pub struct RandomGraphSpec {
    pub vertices: usize,
    pub vertex_labels: usize,
    pub edge_labels: Vec<String>,
    /// Independent probability of each ordered pair per edge label.
    pub density: f64,
}

impl RandomGraphSpec {
    pub fn new(vertices: usize, vertex_labels: usize, density: f64) -> Self {
        RandomGraphSpec {
            vertices,
            vertex_labels,
            edge_labels: ["a", "b", "c", "d"].map(String::from).to_vec(),
            density,
        }
    }
}

impl RawGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, name: &str, label: &str) -> Result<VertexId> {
        if self.index.contains_key(name) {
            return Err(Error::DuplicateVertex(name.to_string()));
        }
        let id = self.names.len() as VertexId;
        self.names.push(name.to_string());
        self.vertex_labels.push(label.to_string());
        self.index.insert(name.to_string(), id);
        Ok(id)
    }

    /// Declares an edge label, returning its index. Idempotent.
    pub fn declare_edge_label(&mut self, label: &str) -> u32 {
        match self.edge_labels.iter().position(|l| l == label) {
            Some(i) => i as u32,
            None => {
                self.edge_labels.push(label.to_string());
                (self.edge_labels.len() - 1) as u32
            }
        }
    }

    /// Adds an edge by vertex ids; duplicates collapse.
    pub fn add_edge(&mut self, src: VertexId, dst: VertexId, label: &str) {
        let l = self.declare_edge_label(label);
        self.edges.insert((src, dst, l));
    }

    pub fn add_edge_by_name(&mut self, src: &str, dst: &str, label: &str) -> Result<()> {
        let s = self.vertex_id(src)?;
        let d = self.vertex_id(dst)?;
        self.add_edge(s, d, label);
        Ok(())
    }

    pub fn vertex_id(&self, name: &str) -> Result<VertexId> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownVertex(name.to_string()))
    }

    pub fn num_vertices(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, v: VertexId) -> &str {
        &self.names[v as usize]
    }

    pub fn vertex_label(&self, v: VertexId) -> &str {
        &self.vertex_labels[v as usize]
    }

    pub fn edge_labels(&self) -> &[String] {
        &self.edge_labels
    }

    pub fn edge_label_id(&self, label: &str) -> Option<u32> {
        self.edge_labels.iter().position(|l| l == label).map(|i| i as u32)
    }

    /// Distinct edges as (src, dst, label index).
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId, u32)> + '_ {
        self.edges.iter().copied()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Sorted distinct vertex labels.
    pub fn label_names(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.vertex_labels.iter().collect();
        set.into_iter().cloned().collect()
    }

    /// Sorted out-neighbour lists for one edge label.
    pub fn out_adjacency(&self, label: &str) -> Vec<Vec<VertexId>> {
        let mut adj = vec![Vec::new(); self.num_vertices()];
        if let Some(l) = self.edge_label_id(label) {
            for &(s, d, el) in &self.edges {
                if el == l {
                    adj[s as usize].push(d);
                }
            }
        }
        adj
    }

    /// Sorted in-neighbour lists for one edge label.
    pub fn in_adjacency(&self, label: &str) -> Vec<Vec<VertexId>> {
        let mut adj = vec![Vec::new(); self.num_vertices()];
        if let Some(l) = self.edge_label_id(label) {
            for &(s, d, el) in &self.edges {
                if el == l {
                    adj[d as usize].push(s);
                }
            }
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Whether vertex ids already follow (label, name) order.
    pub fn is_canonical(&self) -> bool {
        (1..self.names.len()).all(|i| {
            (&self.vertex_labels[i - 1], &self.names[i - 1]) < (&self.vertex_labels[i], &self.names[i])
        })
    }

    /// Copy with vertices renumbered in (label, name) order and edge labels
    /// sorted; the order the grid store uses.
    pub fn canonical(&self) -> RawGraph {
        let mut order: Vec<VertexId> = (0..self.names.len() as VertexId).collect();
        order.sort_by(|&a, &b| {
            (&self.vertex_labels[a as usize], &self.names[a as usize])
                .cmp(&(&self.vertex_labels[b as usize], &self.names[b as usize]))
        });
        let mut out = RawGraph::new();
        let mut map = vec![0; self.names.len()];
        for (new, &old) in order.iter().enumerate() {
            map[old as usize] = new as VertexId;
            out.add_vertex(&self.names[old as usize], &self.vertex_labels[old as usize])
                .expect("names are unique");
        }
        let mut labels = self.edge_labels.clone();
        labels.sort();
        for l in &labels {
            out.declare_edge_label(l);
        }
        for &(s, d, l) in &self.edges {
            out.add_edge(map[s as usize], map[d as usize], &self.edge_labels[l as usize]);
        }
        out
    }

    /// Reads `name<TAB>label` and `src<TAB>dst<TAB>label` files. Blank lines
    /// and lines starting with `#` are skipped.
    pub fn from_tsv(vertex_file: &Path, edge_file: &Path) -> Result<RawGraph> {
        let mut g = RawGraph::new();
        let text = fs::read_to_string(vertex_file)?;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 2 || fields.iter().any(|f| f.is_empty()) {
                return Err(malformed(vertex_file, i, "expected `name<TAB>label`"));
            }
            g.add_vertex(fields[0], fields[1])?;
        }
        let text = fs::read_to_string(edge_file)?;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 || fields.iter().any(|f| f.is_empty()) {
                return Err(malformed(edge_file, i, "expected `src<TAB>dst<TAB>label`"));
            }
            g.add_edge_by_name(fields[0], fields[1], fields[2])?;
        }
        Ok(g)
    }

    /// Vertex and edge files in the format accepted by [`RawGraph::from_tsv`].
    pub fn to_tsv(&self) -> (String, String) {
        let mut vertices = String::new();
        for (name, label) in self.names.iter().zip(&self.vertex_labels) {
            vertices.push_str(&format!("{name}\t{label}\n"));
        }
        let mut edges = String::new();
        for &(s, d, l) in &self.edges {
            edges.push_str(&format!(
                "{}\t{}\t{}\n",
                self.names[s as usize], self.names[d as usize], self.edge_labels[l as usize]
            ));
        }
        (vertices, edges)
    }

    /// Seeded random graph in canonical order. Vertices are named `vNNN`
    /// and split into contiguous label groups `L0`, `L1`, ...
    pub fn random(spec: &RandomGraphSpec, seed: u64) -> RawGraph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::random_with(spec, &mut rng)
    }

    pub fn random_with(spec: &RandomGraphSpec, rng: &mut impl Rng) -> RawGraph {
        let n = spec.vertices;
        let k = spec.vertex_labels.clamp(1, n.max(1));
        // random cut points give unequal, non-empty label groups
        let mut cuts: BTreeSet<usize> = BTreeSet::new();
        while cuts.len() + 1 < k {
            cuts.insert(rng.gen_range(1..n));
        }
        let mut g = RawGraph::new();
        let mut group = 0;
        for v in 0..n {
            if cuts.contains(&v) {
                group += 1;
            }
            g.add_vertex(&format!("v{v:03}"), &format!("L{group}")).unwrap();
        }
        let mut labels = spec.edge_labels.clone();
        labels.sort();
        for l in &labels {
            g.declare_edge_label(l);
        }
        for l in &labels {
            for s in 0..n as VertexId {
                for d in 0..n as VertexId {
                    if rng.gen_bool(spec.density) {
                        g.add_edge(s, d, l);
                    }
                }
            }
        }
        g
    }
}

fn malformed(path: &Path, index: usize, message: &str) -> Error {
    Error::Malformed {
        path: path.to_path_buf(),
        line: index + 1,
        message: message.to_string(),
    }
}
