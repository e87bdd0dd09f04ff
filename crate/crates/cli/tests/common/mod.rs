#![allow(dead_code)]

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use albalance_core::dataset::{write_embeddings, write_labels, Dataset};

/// Run the CLI in-process; returns (exit code, stdout, stderr).
pub fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("albalance").chain(args.iter().copied());
    let code = albalance_cli::run_cli(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

/// Write `data` as `<stem>.alemb` + `<stem>.csv` in `dir`.
pub fn write_dataset(dir: &Path, stem: &str, data: &Dataset) -> (PathBuf, PathBuf) {
    let emb = dir.join(format!("{stem}.alemb"));
    let labels = dir.join(format!("{stem}.csv"));
    write_embeddings(BufWriter::new(File::create(&emb).unwrap()), &data.store).unwrap();
    let ids: Vec<usize> = (0..data.store.n_samples()).collect();
    write_labels(
        BufWriter::new(File::create(&labels).unwrap()),
        &data.names,
        &data.oracle,
        &ids,
    )
    .unwrap();
    (emb, labels)
}

/// Labels file with `counts[c]` samples of class `k<c>`, classes interleaved.
pub fn write_count_labels(path: &Path, counts: &[usize]) {
    let mut remaining = counts.to_vec();
    let mut text = String::new();
    let mut i = 0;
    while remaining.iter().any(|&r| r > 0) {
        for (c, r) in remaining.iter_mut().enumerate() {
            if *r > 0 {
                *r -= 1;
                text.push_str(&format!("img{i},k{c}\n"));
                i += 1;
            }
        }
    }
    std::fs::write(path, text).unwrap();
}
