mod common;

use common::{mini_corpus_dir, mini_corpus_expected, random_graph};
use gedlb::io::{load_dataset, read_ct, read_edgelist, write_edgelist, DatasetStats};
use gedlb::{Error, Graph};

#[test]
fn edgelist_round_trip_on_random_graphs() {
    for seed in 0..100 {
        let g = random_graph(1 + (seed as usize % 15), 0.4, seed);
        let text = write_edgelist(&g);
        assert_eq!(read_edgelist(&text).unwrap(), g);
        assert_eq!(write_edgelist(&read_edgelist(&text).unwrap()), text);
    }
}

#[test]
fn bundled_molecules_match_hand_written_adjacency() {
    let dir = mini_corpus_dir();
    for (file, n, edges) in mini_corpus_expected() {
        let text = std::fs::read_to_string(dir.join(file)).unwrap();
        assert_eq!(read_ct(&text).unwrap(), Graph::new(n, edges).unwrap(), "{file}");
    }
}

#[test]
fn mini_dataset_loads_sorted_with_stats() {
    let ds = load_dataset(&mini_corpus_dir(), "*.ct").unwrap();
    let names: Vec<&str> = ds.graphs.iter().map(|(n, _)| n.as_str()).collect();
    let want: Vec<&str> = mini_corpus_expected().iter().map(|e| e.0).collect();
    assert_eq!(names, want);
    assert!(ds.errors.is_empty());
    assert_eq!(ds.stats.count, 8);
    assert!((ds.stats.mean_vertices - 32.0 / 8.0).abs() < 1e-12);
    let mut rev = ds.graphs.clone();
    rev.reverse();
    let r = DatasetStats::of(&rev);
    assert_eq!((r.count, r.min_vertices, r.max_vertices), (ds.stats.count, ds.stats.min_vertices, ds.stats.max_vertices));
    assert!((r.mean_vertices - ds.stats.mean_vertices).abs() < 1e-12);
    assert!((r.mean_degree - ds.stats.mean_degree).abs() < 1e-12);
}

#[test]
fn dataset_errors_are_collected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.ct"), "x\n2 1\nC\nC\n1 2\n").unwrap();
    std::fs::write(dir.path().join("b.ct"), "x\n2 1\nC\nC\n1 5\n").unwrap();
    std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let ds = load_dataset(dir.path(), "*.ct").unwrap();
    assert_eq!(ds.graphs.len(), 1);
    assert_eq!(ds.errors.len(), 1);
    assert_eq!(ds.errors[0].0, "b.ct");

    let empty = tempfile::tempdir().unwrap();
    assert!(matches!(load_dataset(empty.path(), "*.ct"), Err(Error::EmptyDataset(_))));
}

/// Published Alkane and PAH datasets, when present: GEDLB_DATASET_DIR/{alkane,pah}.
#[test]
fn published_dataset_statistics() {
    let Ok(root) = std::env::var("GEDLB_DATASET_DIR") else {
        eprintln!("GEDLB_DATASET_DIR not set; skipping");
        return;
    };
    let root = std::path::PathBuf::from(root);
    let alkane = load_dataset(&root.join("alkane"), "*.ct").unwrap();
    assert_eq!(alkane.stats.count, 150);
    assert!((alkane.stats.mean_vertices - 8.9).abs() <= 0.05);
    assert!((alkane.stats.mean_degree - 1.8).abs() <= 0.05);
    let pah = load_dataset(&root.join("pah"), "*.ct").unwrap();
    assert_eq!(pah.stats.count, 94);
    assert!(pah.stats.min_vertices >= 10 && pah.stats.max_vertices <= 28);
    assert!((pah.stats.mean_vertices - 20.7).abs() <= 0.05);
}
