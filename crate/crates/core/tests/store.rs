//! Ingest, persistence and layout properties of the grid store.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use gridrpq::graph::RandomGraphSpec;
use gridrpq::{fixture, Direction, LgfStore, RawGraph};

fn write_tsv(dir: &Path, graph: &RawGraph) -> (std::path::PathBuf, std::path::PathBuf) {
    let (v, e) = graph.to_tsv();
    let vp = dir.join("vertices.tsv");
    let ep = dir.join("edges.tsv");
    fs::write(&vp, v).unwrap();
    fs::write(&ep, e).unwrap();
    (vp, ep)
}

fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

fn edge_sets(store: &LgfStore) -> BTreeMap<String, Vec<(u32, u32)>> {
    store.grids().map(|g| (g.name.clone(), g.edge_set())).collect()
}

#[test]
fn fixture_ingest_has_three_grids() {
    let tmp = tempfile::tempdir().unwrap();
    let (vp, ep) = write_tsv(tmp.path(), &fixture::graph());
    let store = LgfStore::ingest(&vp, &ep, 4).unwrap();
    let names: Vec<_> = store.grids().map(|g| g.name.clone()).collect();
    assert_eq!(names, ["a", "b", "c"]);
    assert_eq!(store.num_vertices(), 14);
    store.validate().unwrap();
}

#[test]
fn rebuilds_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let g = RawGraph::random(&RandomGraphSpec::new(40, 3, 0.1), 4);
    let (vp, ep) = write_tsv(tmp.path(), &g);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    LgfStore::ingest(&vp, &ep, 4).unwrap().save(&a).unwrap();
    LgfStore::ingest(&vp, &ep, 4).unwrap().save(&b).unwrap();
    assert_eq!(dir_bytes(&a), dir_bytes(&b));
    let loaded = LgfStore::load(&a).unwrap();
    assert_eq!(edge_sets(&loaded), edge_sets(&LgfStore::from_graph(&g, 4).unwrap()));
}

#[test]
fn theta_changes_layout_not_edges() {
    for seed in 0..10 {
        let g = RawGraph::random(&RandomGraphSpec::new(30, 2, 0.15), seed);
        let base = edge_sets(&LgfStore::from_graph(&g, 4096).unwrap());
        for theta in [1, 2, 3, 7] {
            let store = LgfStore::from_graph(&g, theta).unwrap();
            assert_eq!(edge_sets(&store), base, "seed {seed} theta {theta}");
            for grid in store.grids() {
                for dir in [Direction::Out, Direction::In] {
                    if let Some(d) = grid.dir(dir) {
                        assert!(d.slices().iter().all(|s| s.edge_count() <= theta));
                    }
                }
            }
        }
    }
}
