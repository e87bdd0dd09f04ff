use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use albalance_core::dataset::{
    load_dataset, read_labels, write_embeddings, write_labels, Dataset, DatasetError, LoadOptions,
};
use albalance_core::imbalance::{imbalance_ratio, induce_imbalance, prune_dataset, ImbalanceStats, InductionSpec};
use albalance_core::runner::{aggregate_runs, run_experiment, RunRecord};
use serde::Serialize;

use crate::config::{parse_config, DataPaths};
use crate::error::CliError;
use crate::output::{curves_csv, Outputs};

pub const CURVES_FILE: &str = "curves.csv";

pub fn record_file_name(seed: u64) -> String {
    format!("record_seed{seed}.json")
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::io(path, e))
}

fn load(embeddings: &Path, labels: &Path, classes: Option<&[String]>, normalize: bool) -> Result<Dataset, CliError> {
    load_dataset(open(embeddings)?, open(labels)?, classes, LoadOptions { normalize }).map_err(|source| {
        let path = match source {
            DatasetError::MalformedHeader(_) | DatasetError::Truncated { .. } | DatasetError::NonFinite { .. } => {
                embeddings
            }
            _ => labels,
        };
        CliError::Data {
            path: path.to_path_buf(),
            source,
        }
    })
}

#[derive(Debug, Clone)]
pub struct InduceArgs {
    pub embeddings: PathBuf,
    pub labels: PathBuf,
    pub target_ir: f64,
    pub min_per_class: usize,
    pub seed: u64,
    pub out_labels: PathBuf,
    pub out_embeddings: Option<PathBuf>,
    pub report: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct InductionReport {
    pub target_ir: f64,
    pub min_per_class: usize,
    pub seed: u64,
    pub before: ImbalanceStats,
    /// Per-class counts in the class order of the pruned labels file.
    pub after: ImbalanceStats,
    pub class_names: Vec<String>,
}

pub fn induce(args: &InduceArgs, out: &mut dyn Write) -> Result<InductionReport, CliError> {
    let data = load(&args.embeddings, &args.labels, None, false)?;
    let before = imbalance_ratio(&data.oracle.class_counts())?;
    let spec = InductionSpec::new(args.target_ir, args.min_per_class, args.seed);
    let counts = induce_imbalance(&before.per_class, &spec)?;
    let pruned = prune_dataset(&data.store, &data.oracle, &counts, args.seed)?;

    // reloading the pruned labels numbers classes by first appearance
    let mut order = Vec::new();
    for &id in &pruned.kept {
        let class = data.oracle.label(id);
        if !order.contains(&class) {
            order.push(class);
        }
    }
    let after = imbalance_ratio(&order.iter().map(|&c| counts[c]).collect::<Vec<_>>())?;
    let report = InductionReport {
        target_ir: args.target_ir,
        min_per_class: args.min_per_class,
        seed: args.seed,
        before,
        after,
        class_names: order.iter().map(|&c| data.names.class_names[c].clone()).collect(),
    };

    let mut outputs = Outputs::new();
    outputs.write_with(&args.out_labels, |w| {
        write_labels(w, &data.names, &data.oracle, &pruned.kept)
    })?;
    if let Some(path) = &args.out_embeddings {
        outputs.write_with(path, |w| write_embeddings(w, &pruned.store))?;
    }
    outputs.write_json(&args.report, &report)?;
    outputs.commit();
    let _ = writeln!(
        out,
        "kept {} of {} samples; ir {:.4} -> {:.4} (target {})",
        report.after.total(),
        report.before.total(),
        report.before.ir,
        report.after.ir,
        args.target_ir
    );
    Ok(report)
}

#[derive(Debug, Clone, Default)]
pub struct RunArgs {
    pub config: PathBuf,
    pub data: DataPaths,
    pub out_dir: PathBuf,
}

fn require(path: &Option<PathBuf>, name: &str, missing: &mut Vec<String>) -> PathBuf {
    match path {
        Some(p) => p.clone(),
        None => {
            missing.push(format!(
                "data.{name}: missing (set it in the config or pass --{})",
                name.replace('_', "-")
            ));
            PathBuf::new()
        }
    }
}

pub fn run(args: &RunArgs, out: &mut dyn Write) -> Result<Vec<RunRecord>, CliError> {
    let text = fs::read_to_string(&args.config).map_err(|e| CliError::io(&args.config, e))?;
    let base = args.config.parent().unwrap_or(Path::new("."));
    let config = parse_config(&text, base).map_err(|problems| CliError::Config {
        path: args.config.clone(),
        problems,
    })?;
    let merged = |flag: &Option<PathBuf>, file: &Option<PathBuf>| flag.clone().or_else(|| file.clone());
    let data = DataPaths {
        embeddings: merged(&args.data.embeddings, &config.data.embeddings),
        labels: merged(&args.data.labels, &config.data.labels),
        test_embeddings: merged(&args.data.test_embeddings, &config.data.test_embeddings),
        test_labels: merged(&args.data.test_labels, &config.data.test_labels),
    };
    let mut missing = Vec::new();
    let emb = require(&data.embeddings, "embeddings", &mut missing);
    let labels = require(&data.labels, "labels", &mut missing);
    let test_emb = require(&data.test_embeddings, "test_embeddings", &mut missing);
    let test_labels = require(&data.test_labels, "test_labels", &mut missing);
    if !missing.is_empty() {
        return Err(CliError::Config {
            path: args.config.clone(),
            problems: missing,
        });
    }

    let train = load(&emb, &labels, None, config.normalize)?;
    let test = load(
        &test_emb,
        &test_labels,
        Some(&train.names.class_names),
        config.normalize,
    )?;
    let records = run_experiment(&config.run, &train, &test)?;
    let curves = aggregate_runs(&records)?;

    let mut outputs = Outputs::new();
    outputs.ensure_dir(&args.out_dir)?;
    for record in &records {
        outputs.write_json(&args.out_dir.join(record_file_name(record.seed)), record)?;
    }
    outputs.write_str(&args.out_dir.join(CURVES_FILE), &curves_csv(&curves))?;
    outputs.commit();

    for warning in &records[0].metadata.warnings {
        let _ = writeln!(out, "warning: {warning}");
    }
    let last = curves.last().expect("at least one iteration");
    let _ = writeln!(
        out,
        "{} seeds x {} iterations; final accuracy {:.4} +- {:.4}, labeled ir {:.4}",
        records.len(),
        curves.len(),
        last.acc_mean,
        last.acc_std,
        last.ir_mean
    );
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassCount {
    pub class: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub classes: usize,
    pub images: usize,
    pub mean: f64,
    pub std: f64,
    pub ir: f64,
    pub per_class: Vec<ClassCount>,
}

pub fn stats(labels: &Path, json: bool, out: &mut dyn Write) -> Result<StatsReport, CliError> {
    let (names, labels_vec) = read_labels(open(labels)?, None).map_err(|source| CliError::Data {
        path: labels.to_path_buf(),
        source,
    })?;
    let mut counts = vec![0usize; names.class_names.len()];
    labels_vec.iter().for_each(|&l| counts[l] += 1);
    let s = imbalance_ratio(&counts)?;
    let report = StatsReport {
        classes: counts.len(),
        images: s.total(),
        mean: s.mean,
        std: s.std,
        ir: s.ir,
        per_class: names
            .class_names
            .into_iter()
            .zip(&counts)
            .map(|(class, &count)| ClassCount { class, count })
            .collect(),
    };
    let name = labels
        .file_stem()
        .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    let written = if json {
        serde_json::to_writer_pretty(&mut *out, &report)
            .map_err(std::io::Error::from)
            .and_then(|_| writeln!(out))
    } else {
        writeln!(
            out,
            "{:<20} {:>7} {:>7} {:>9} {:>9} {:>6}",
            "dataset", "classes", "images", "mu", "sigma", "ir"
        )
        .and_then(|_| {
            writeln!(
                out,
                "{:<20} {:>7} {:>7} {:>9.2} {:>9.2} {:>6.3}",
                name, report.classes, report.images, report.mean, report.std, report.ir
            )
        })
    };
    written.map_err(|e| CliError::io("<stdout>", e))?;
    Ok(report)
}

/// Rebuild the curves CSV from the run records in `dir`.
pub fn curves(dir: &Path, out_path: Option<&Path>, out: &mut dyn Write) -> Result<String, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut records = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if !(name.starts_with("record_seed") && name.ends_with(".json")) {
            continue;
        }
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        let record: RunRecord = serde_json::from_str(&text).map_err(|source| CliError::BadRecord {
            path: path.clone(),
            source,
        })?;
        records.push(record);
    }
    let first = records.first().ok_or_else(|| CliError::NoRecords(dir.to_path_buf()))?;
    let config = first.config.clone();
    for r in &records {
        if r.config.iterations != config.iterations || r.iterations.len() != first.iterations.len() {
            return Err(CliError::MixedConfig(format!(
                "seed {} has {} iterations, seed {} has {}",
                r.seed,
                r.iterations.len(),
                first.seed,
                first.iterations.len()
            )));
        }
        if r.config != config {
            return Err(CliError::MixedConfig(format!(
                "seeds {} and {} were run with different settings",
                first.seed, r.seed
            )));
        }
    }
    // same order as the run that produced them, so means match bit for bit
    let position = |seed| config.seeds.iter().position(|&s| s == seed).unwrap_or(usize::MAX);
    records.sort_by_key(|r| (position(r.seed), r.seed));
    let missing: Vec<String> = config
        .seeds
        .iter()
        .filter(|s| !records.iter().any(|r| r.seed == **s))
        .map(|s| s.to_string())
        .collect();
    if !missing.is_empty() {
        let _ = writeln!(out, "warning: no records for seeds {}", missing.join(", "));
    }

    let csv = curves_csv(&aggregate_runs(&records)?);
    let target = out_path.map_or_else(|| dir.join(CURVES_FILE), Path::to_path_buf);
    let mut outputs = Outputs::new();
    outputs.write_str(&target, &csv)?;
    outputs.commit();
    Ok(csv)
}
