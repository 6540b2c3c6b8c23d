#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use grapho::io::write_tudataset;
use grapho_core::{generate_er, GraphCorpus};

pub fn grapho(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grapho")).current_dir(cwd).args(args).output().expect("spawn grapho")
}

/// Two density classes of small Erdős–Rényi graphs, labelled -1 (sparse)
/// and 1 (dense) as in MUTAG.
pub fn labeled_corpus(graphs_per_class: usize) -> GraphCorpus {
    let mut graphs = Vec::new();
    for i in 0..graphs_per_class {
        let seed = i as u64;
        graphs.push(generate_er(12, 0.2, 100 + seed).unwrap().with_label(Some(-1)));
        graphs.push(generate_er(12, 0.6, 200 + seed).unwrap().with_label(Some(1)));
    }
    GraphCorpus::new("TWO", graphs).unwrap()
}

pub fn write_fixture(dir: &Path) -> PathBuf {
    let data = dir.join("TWO");
    write_tudataset(&labeled_corpus(6), &data, "TWO").unwrap();
    data
}

/// Small sizes so every subcommand finishes in well under a second.
pub const FAST_CONFIG: &str = r#"{
  "oracle": {"oracle_size": 6, "barycenter_iters": 3},
  "fit": {"epochs": 4, "feature_dim": 5, "learning_rate": 0.5, "gw": {"outer_iters": 10}},
  "bases": 3,
  "basis_size": 5,
  "nodes": 15,
  "count": 3
}"#;

/// Relative path to contents of every file under `dir`.
pub fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}
