mod common;

use std::fs;
use std::path::Path;

use albalance_cli::commands::InductionReport;
use albalance_core::synthetic::BlobModel;
use common::{cli, write_count_labels, write_dataset};

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn experiment(dir: &Path, iterations: usize, acquisition: &str) -> std::path::PathBuf {
    let model = BlobModel::new(5, 6, 1.5, 1.0, 3);
    write_dataset(dir, "train", &model.sample(&[80, 50, 30, 15, 10], 1));
    write_dataset(dir, "test", &model.sample(&[10; 5], 2));
    let config = dir.join(format!("exp_{iterations}.toml"));
    fs::write(
        &config,
        format!(
            r#"
budget = 60
iterations = {iterations}
acquisition = "{acquisition}"
scheme_policy = "auto_switch"
seeds = [4, 2]

[data]
embeddings = "train.alemb"
labels = "train.csv"
test_embeddings = "test.alemb"
test_labels = "test.csv"

[svm]
epochs = 4

[softmax]
epochs = 4
hidden_width = 8
"#
        ),
    )
    .unwrap();
    config
}

#[test]
fn stats_of_a_single_sample() {
    let tmp = tempfile::tempdir().unwrap();
    let labels = tmp.path().join("one.csv");
    fs::write(&labels, "a,cat\n").unwrap();
    let (code, out, _) = cli(&["stats", p(&labels), "--json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["classes"], 1);
    assert_eq!(v["images"], 1);
    assert_eq!(v["mean"], 1.0);
    assert_eq!(v["std"], 0.0);
    assert_eq!(v["ir"], 0.0);
    let (code, table, _) = cli(&["stats", p(&labels)]);
    assert_eq!(code, 0);
    assert!(table.lines().nth(1).unwrap().starts_with("one "));
}

#[test]
fn stats_of_a_missing_file_fails() {
    let (code, _, err) = cli(&["stats", "/nonexistent/labels.csv"]);
    assert_eq!(code, 1);
    assert!(err.contains("/nonexistent/labels.csv"));
}

#[test]
fn induce_hits_the_target_and_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let model = BlobModel::new(10, 4, 1.0, 1.0, 5);
    let (emb, labels) = write_dataset(tmp.path(), "full", &model.sample(&[100; 10], 5));
    let (out_labels, out_emb, report) = (
        tmp.path().join("p.csv"),
        tmp.path().join("p.alemb"),
        tmp.path().join("r.json"),
    );
    let (code, _, err) = cli(&[
        "induce",
        "--embeddings",
        p(&emb),
        "--labels",
        p(&labels),
        "--target-ir",
        "0.5",
        "--min-per-class",
        "5",
        "--seed",
        "7",
        "--out-labels",
        p(&out_labels),
        "--out-embeddings",
        p(&out_emb),
        "--report",
        p(&report),
    ]);
    assert_eq!(code, 0, "{err}");
    let report: InductionReport = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert!((report.after.ir - 0.5).abs() <= 0.01);

    let (code, out, _) = cli(&["stats", p(&out_labels), "--json"]);
    assert_eq!(code, 0);
    let stats: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(stats["ir"].as_f64().unwrap(), report.after.ir);
    assert_eq!(stats["mean"].as_f64().unwrap(), report.after.mean);
    let counts: Vec<usize> = stats["per_class"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["count"].as_u64().unwrap() as usize)
        .collect();
    assert_eq!(counts, report.after.per_class);

    let store = albalance_core::dataset::read_embeddings(fs::File::open(&out_emb).unwrap()).unwrap();
    assert_eq!(store.n_samples(), report.after.total());
}

#[test]
fn induce_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let (emb, labels) = write_dataset(
        tmp.path(),
        "d",
        &BlobModel::new(3, 2, 1.0, 1.0, 1).sample(&[20, 20, 20], 1),
    );
    let out_labels = tmp.path().join("p.csv");
    let report = tmp.path().join("r.json");
    let base = ["induce", "--out-labels", p(&out_labels), "--report", p(&report)];

    let (code, _, _) = cli(&[
        &base[..],
        &[
            "--embeddings",
            "/missing.alemb",
            "--labels",
            p(&labels),
            "--target-ir",
            "0.5",
        ],
    ]
    .concat());
    assert_eq!(code, 1);

    let (code, _, err) = cli(&[
        &base[..],
        &[
            "--embeddings",
            p(&emb),
            "--labels",
            p(&labels),
            "--target-ir",
            "5.0",
            "--min-per-class",
            "20",
        ],
    ]
    .concat());
    assert_eq!(code, 2, "{err}");
    assert!(!out_labels.exists() && !report.exists());
}

#[test]
fn run_writes_records_and_curves_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let config = experiment(tmp.path(), 4, "dmcs-rand");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let (code, _, err) = cli(&["run", "--config", p(&config), "--out", p(out)]);
        assert_eq!(code, 0, "{err}");
    }
    for file in ["record_seed4.json", "record_seed2.json", "curves.csv"] {
        assert_eq!(
            fs::read(a.join(file)).unwrap(),
            fs::read(b.join(file)).unwrap(),
            "{file}"
        );
    }
    let csv = fs::read_to_string(a.join("curves.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "iteration,labeled_count,acc_mean,acc_std,ir_mean,ir_std,scheme"
    );
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("0,15,"));
    assert!(!csv.contains('\r'));

    let record: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("record_seed4.json")).unwrap()).unwrap();
    assert_eq!(record["config"]["acquisition"], "dmcs-rand");
    assert_eq!(record["metadata"]["normalized_embeddings"], true);
    assert_eq!(record["metadata"]["class_names"][0], "c0");

    // curves are idempotent and match the run's output byte for byte
    fs::remove_file(a.join("curves.csv")).unwrap();
    assert_eq!(cli(&["curves", p(&a)]).0, 0);
    assert_eq!(fs::read_to_string(a.join("curves.csv")).unwrap(), csv);
    assert_eq!(cli(&["curves", p(&a)]).0, 0);
    assert_eq!(fs::read_to_string(a.join("curves.csv")).unwrap(), csv);
}

#[test]
fn curves_rejects_empty_and_mixed_directories() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty");
    fs::create_dir(&empty).unwrap();
    assert_eq!(cli(&["curves", p(&empty)]).0, 1);

    let (four, three) = (experiment(tmp.path(), 4, "random"), experiment(tmp.path(), 3, "random"));
    let (d4, d3) = (tmp.path().join("d4"), tmp.path().join("d3"));
    assert_eq!(cli(&["run", "--config", p(&four), "--out", p(&d4)]).0, 0);
    assert_eq!(cli(&["run", "--config", p(&three), "--out", p(&d3)]).0, 0);
    fs::copy(d3.join("record_seed2.json"), d4.join("record_seed2.json")).unwrap();
    let (code, _, err) = cli(&["curves", p(&d4)]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn invalid_config_lists_every_field_and_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("bad.toml");
    fs::write(
        &config,
        "budget = \"lots\"\niterations = 0\nacquisition = \"badge\"\n[svm]\nl2 = -1.0\n",
    )
    .unwrap();
    let out = tmp.path().join("out");
    let (code, _, err) = cli(&["run", "--config", p(&config), "--out", p(&out)]);
    assert_eq!(code, 1);
    for field in ["budget:", "acquisition:"] {
        assert!(err.contains(field), "{field} missing from {err}");
    }
    assert!(!out.exists());
}

#[test]
fn failed_run_leaves_no_output() {
    let tmp = tempfile::tempdir().unwrap();
    let config = experiment(tmp.path(), 4, "random");
    // a test set with an unknown class
    fs::write(tmp.path().join("bad_test.csv"), "x,c0\ny,elephant\n").unwrap();
    let out = tmp.path().join("out");
    let (code, _, err) = cli(&[
        "run",
        "--config",
        p(&config),
        "--out",
        p(&out),
        "--test-labels",
        p(&tmp.path().join("bad_test.csv")),
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("bad_test.csv"), "{err}");
    assert!(!out.exists());

    // budget larger than the pool
    let big = tmp.path().join("big.toml");
    fs::write(
        &big,
        fs::read_to_string(&config)
            .unwrap()
            .replace("budget = 60", "budget = 6000"),
    )
    .unwrap();
    assert_eq!(cli(&["run", "--config", p(&big), "--out", p(&out)]).0, 1);
    assert!(!out.exists());
}

#[test]
fn usage_errors_are_rejected() {
    let (code, _, err) = cli(&["explode"]);
    assert_ne!(code, 0);
    assert!(err.contains("Usage"));
    assert_ne!(cli(&["stats", "--bogus", "x"]).0, 0);
}

#[test]
fn count_label_helper_matches_requested_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("c.csv");
    write_count_labels(&path, &[3, 1, 2]);
    let (code, out, _) = cli(&["stats", p(&path), "--json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["images"], 6);
}
