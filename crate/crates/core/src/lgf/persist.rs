//! Store directory layout:
//!
//! ```text
//! vertexlabels.tsv        name, block, lo, hi
//! edgelabels.tsv          grid id, name, virtual flag
//! vertices.tsv            vertex id, name
//! grid_<z>_<dir>.bin      per slice: sources, offsets, targets (u32 LE)
//! manifest.json           slice extents and metadata
//! ```

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Direction, Grid, GridDir, LgfStore, Slice, VertexLabelRange};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct Manifest {
    format: u32,
    theta: usize,
    num_vertices: usize,
    next_slice_id: [u32; 2],
    grids: Vec<GridEntry>,
}

#[derive(Serialize, Deserialize)]
struct GridEntry {
    id: u32,
    name: String,
    is_virtual: bool,
    theta: usize,
    dirs: Vec<DirEntry>,
}

#[derive(Serialize, Deserialize)]
struct DirEntry {
    dir: Direction,
    file: String,
    slices: Vec<SliceEntry>,
}

#[derive(Serialize, Deserialize)]
struct SliceEntry {
    #[serde(flatten)]
    meta: Slice,
    sources: usize,
    targets: usize,
}

pub(super) fn save(store: &LgfStore, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut text = String::new();
    for (i, l) in store.labels.iter().enumerate() {
        text.push_str(&format!("{}\t{}\t{}\t{}\n", l.name, i, l.lo, l.hi));
    }
    fs::write(dir.join("vertexlabels.tsv"), text)?;
    let mut text = String::new();
    for g in &store.grids {
        text.push_str(&format!("{}\t{}\t{}\n", g.id, g.name, g.is_virtual as u8));
    }
    fs::write(dir.join("edgelabels.tsv"), text)?;
    let mut text = String::new();
    for (i, name) in store.vertex_names.iter().enumerate() {
        text.push_str(&format!("{i}\t{name}\n"));
    }
    fs::write(dir.join("vertices.tsv"), text)?;

    let mut grids = Vec::new();
    for g in &store.grids {
        let mut dirs = Vec::new();
        for d in [Direction::Out, Direction::In] {
            let Some(gd) = g.dir(d) else { continue };
            let file = format!("grid_{}_{}.bin", g.id, d);
            let mut bytes = Vec::new();
            let mut slices = Vec::new();
            for s in gd.slices() {
                for &x in s.sources.iter().chain(&s.offsets).chain(&s.targets) {
                    bytes.extend_from_slice(&x.to_le_bytes());
                }
                slices.push(SliceEntry {
                    meta: s.clone(),
                    sources: s.sources.len(),
                    targets: s.targets.len(),
                });
            }
            fs::write(dir.join(&file), bytes)?;
            dirs.push(DirEntry { dir: d, file, slices });
        }
        grids.push(GridEntry {
            id: g.id,
            name: g.name.clone(),
            is_virtual: g.is_virtual,
            theta: g.theta,
            dirs,
        });
    }
    let manifest = Manifest {
        format: 1,
        theta: store.theta,
        num_vertices: store.num_vertices(),
        next_slice_id: store.next_slice_id,
        grids,
    };
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    fs::write(dir.join("manifest.json"), json)?;
    Ok(())
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptStore(msg.into())
}

pub(super) fn load(dir: &Path) -> Result<LgfStore> {
    let manifest: Manifest = serde_json::from_slice(&fs::read(dir.join("manifest.json"))?)?;
    if manifest.format != 1 {
        return Err(corrupt(format!("unsupported format {}", manifest.format)));
    }
    let mut labels = Vec::new();
    for line in fs::read_to_string(dir.join("vertexlabels.tsv"))?.lines() {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 4 {
            return Err(corrupt("bad vertexlabels.tsv line"));
        }
        let parse = |s: &str| s.parse::<u32>().map_err(|_| corrupt("bad number in vertexlabels.tsv"));
        labels.push(VertexLabelRange {
            name: f[0].to_string(),
            lo: parse(f[2])?,
            hi: parse(f[3])?,
        });
    }
    let mut names = Vec::with_capacity(manifest.num_vertices);
    for (i, line) in fs::read_to_string(dir.join("vertices.tsv"))?.lines().enumerate() {
        let (id, name) = line.split_once('\t').ok_or_else(|| corrupt("bad vertices.tsv line"))?;
        if id.parse::<usize>().ok() != Some(i) {
            return Err(corrupt("vertices.tsv out of order"));
        }
        names.push(name.to_string());
    }
    if names.len() != manifest.num_vertices {
        return Err(corrupt("vertex count mismatch"));
    }
    let mut block_of = vec![u32::MAX; names.len()];
    let mut expect_lo = 0;
    for (b, l) in labels.iter().enumerate() {
        if l.lo != expect_lo || l.hi < l.lo || l.hi as usize > names.len() {
            return Err(corrupt("vertex label ranges do not tile the vertex set"));
        }
        expect_lo = l.hi;
        for v in l.lo..l.hi {
            block_of[v as usize] = b as u32;
        }
    }
    if expect_lo as usize != names.len() {
        return Err(corrupt("vertex label ranges do not tile the vertex set"));
    }

    let mut grids = Vec::new();
    for (i, g) in manifest.grids.into_iter().enumerate() {
        if g.id as usize != i {
            return Err(corrupt("grid ids out of order"));
        }
        let mut dirs: [Option<GridDir>; 2] = [None, None];
        for d in g.dirs {
            let bytes = fs::read(dir.join(&d.file))?;
            if bytes.len() % 4 != 0 {
                return Err(corrupt(format!("{} truncated", d.file)));
            }
            let words: Vec<u32> = bytes
                .chunks_exact(4)
                .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            let mut pos = 0;
            let mut slices = Vec::new();
            for e in d.slices {
                let need = e.sources * 2 + 1 + e.targets;
                if pos + need > words.len() {
                    return Err(corrupt(format!("{} truncated", d.file)));
                }
                let mut s = e.meta;
                s.sources = words[pos..pos + e.sources].to_vec();
                pos += e.sources;
                s.offsets = words[pos..pos + e.sources + 1].to_vec();
                pos += e.sources + 1;
                s.targets = words[pos..pos + e.targets].to_vec();
                pos += e.targets;
                slices.push(s);
            }
            if pos != words.len() {
                return Err(corrupt(format!("{} has trailing data", d.file)));
            }
            dirs[d.dir as usize] = Some(GridDir::new(slices));
        }
        grids.push(Arc::new(Grid {
            id: g.id,
            name: g.name,
            is_virtual: g.is_virtual,
            theta: g.theta,
            dirs,
        }));
    }
    let index: HashMap<String, u32> = names.iter().enumerate().map(|(i, s)| (s.clone(), i as u32)).collect();
    let store = LgfStore {
        theta: manifest.theta,
        vertex_names: Arc::new(names),
        vertex_index: Arc::new(index),
        labels: Arc::new(labels),
        block_of: Arc::new(block_of),
        grids,
        next_slice_id: manifest.next_slice_id,
    };
    store.validate()?;
    Ok(store)
}

#[cfg(test)]
mod tests {
    use crate::fixture;
    use crate::graph::{RandomGraphSpec, RawGraph};
    use crate::lgf::LgfStore;

    fn dir_bytes(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
        let mut files: Vec<_> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        files
    }

    #[test]
    fn round_trip_is_exact() {
        let tmp = tempfile::tempdir().unwrap();
        for (i, g) in [fixture::graph(), RawGraph::random(&RandomGraphSpec::new(40, 3, 0.1), 9)]
            .iter()
            .enumerate()
        {
            let mut store = LgfStore::from_graph(g, 2).unwrap();
            store.register_edge_grid("virt", &[(0, 1), (1, 2)]).unwrap();
            let a = tmp.path().join(format!("a{i}"));
            let b = tmp.path().join(format!("b{i}"));
            store.save(&a).unwrap();
            let back = LgfStore::load(&a).unwrap();
            assert!(back == store);
            back.save(&b).unwrap();
            assert_eq!(dir_bytes(&a), dir_bytes(&b));
        }
    }

    #[test]
    fn truncated_file_is_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let store = LgfStore::from_graph(&fixture::graph(), 4).unwrap();
        store.save(tmp.path()).unwrap();
        let f = tmp.path().join("grid_0_out.bin");
        let mut bytes = std::fs::read(&f).unwrap();
        bytes.truncate(bytes.len() - 4);
        std::fs::write(&f, bytes).unwrap();
        assert!(LgfStore::load(tmp.path()).is_err());
    }
}
