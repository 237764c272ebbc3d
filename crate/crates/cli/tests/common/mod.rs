#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const STAGES: &[&str] = &[
    "ingest",
    "partition",
    "score",
    "items",
    "fit-acceptance",
    "topics",
    "recommend",
    "layout",
    "bundle",
];

pub fn dataset_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic")
}

pub fn contrarian(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_contrarian"))
        .arg("--topic-dir")
        .arg(dir)
        .args(args)
        .output()
        .expect("spawn contrarian")
}

pub fn ok(dir: &Path, args: &[&str]) -> String {
    let out = contrarian(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Copies the input files of a topic directory into `dir`.
pub fn copy_inputs(from: &Path, dir: &Path) {
    for f in ["edges.csv", "shares.csv", "texts.csv"] {
        fs::copy(from.join(f), dir.join(f)).unwrap();
    }
}

pub fn run_pipeline(dir: &Path, seed: &str) {
    for stage in STAGES {
        ok(dir, &["--seed", seed, stage]);
    }
}

/// Relative path and contents of every file under `root`, sorted.
pub fn snapshot(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}
