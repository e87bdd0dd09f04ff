//! Experiment config files.
//!
//! ```toml
//! budget = 8000
//! iterations = 16
//! acquisition = "dmcs-rand"    # or acquisition = "dmcs" plus auxiliary = "rand"
//! scheme_policy = "auto_switch"  # cs_svm_only | softmax_th_only | auto_switch
//! seeds = [0, 1, 2, 3, 4]
//!
//! [data]                       # paths are relative to the config file
//! embeddings = "train.alemb"
//! labels = "train.csv"
//! test_embeddings = "test.alemb"
//! test_labels = "test.csv"
//! normalize = true
//!
//! [svm]                        # epochs, learning_rate, batch_size, l2, plateau_patience
//! [softmax]                    # the same plus hidden_width
//! ```
//!
//! Every key except `budget`, `iterations` and `acquisition` is optional.
//! Validation reports all problems at once.

use std::path::{Path, PathBuf};

use albalance_core::acquisition::{AcquisitionKind, Auxiliary};
use albalance_core::classifier::{SchemeConfigs, TrainConfig};
use albalance_core::runner::{RunConfig, SchemePolicy};
use toml::{Table, Value};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DataPaths {
    pub embeddings: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub test_embeddings: Option<PathBuf>,
    pub test_labels: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub run: RunConfig,
    pub data: DataPaths,
    pub normalize: bool,
}

const TOP_KEYS: [&str; 10] = [
    "budget",
    "iterations",
    "acquisition",
    "auxiliary",
    "scheme_policy",
    "seeds",
    "data",
    "svm",
    "softmax",
    "normalize",
];
const DATA_KEYS: [&str; 5] = ["embeddings", "labels", "test_embeddings", "test_labels", "normalize"];
const SVM_KEYS: [&str; 5] = ["epochs", "learning_rate", "batch_size", "l2", "plateau_patience"];
const SOFTMAX_KEYS: [&str; 6] = [
    "epochs",
    "learning_rate",
    "batch_size",
    "l2",
    "plateau_patience",
    "hidden_width",
];

struct Checker {
    problems: Vec<String>,
}

impl Checker {
    fn unknown_keys(&mut self, table: &Table, allowed: &[&str], prefix: &str) {
        for key in table.keys() {
            if !allowed.contains(&key.as_str()) {
                self.problems.push(format!("{prefix}{key}: unknown field"));
            }
        }
    }

    fn count(&mut self, table: &Table, key: &str, prefix: &str) -> Option<usize> {
        match table.get(key)? {
            Value::Integer(v) if *v >= 0 => Some(*v as usize),
            other => {
                self.problems.push(format!(
                    "{prefix}{key}: expected a non-negative integer, found {}",
                    describe(other)
                ));
                None
            }
        }
    }

    fn real(&mut self, table: &Table, key: &str, prefix: &str) -> Option<f64> {
        match table.get(key)? {
            Value::Float(v) => Some(*v),
            Value::Integer(v) => Some(*v as f64),
            other => {
                self.problems
                    .push(format!("{prefix}{key}: expected a number, found {}", describe(other)));
                None
            }
        }
    }

    fn string<'t>(&mut self, table: &'t Table, key: &str, prefix: &str) -> Option<&'t str> {
        match table.get(key)? {
            Value::String(s) => Some(s),
            other => {
                self.problems
                    .push(format!("{prefix}{key}: expected a string, found {}", describe(other)));
                None
            }
        }
    }

    fn boolean(&mut self, table: &Table, key: &str, prefix: &str) -> Option<bool> {
        match table.get(key)? {
            Value::Boolean(b) => Some(*b),
            other => {
                self.problems.push(format!(
                    "{prefix}{key}: expected true or false, found {}",
                    describe(other)
                ));
                None
            }
        }
    }

    fn section<'t>(&mut self, table: &'t Table, key: &str) -> Option<&'t Table> {
        match table.get(key)? {
            Value::Table(t) => Some(t),
            other => {
                self.problems
                    .push(format!("{key}: expected a table, found {}", describe(other)));
                None
            }
        }
    }

    fn required<T>(&mut self, value: Option<T>, table: &Table, key: &str) -> Option<T> {
        if value.is_none() && !table.contains_key(key) {
            self.problems.push(format!("{key}: missing"));
        }
        value
    }

    fn train_config(&mut self, root: &Table, name: &str, keys: &[&str], mut cfg: TrainConfig) -> TrainConfig {
        let Some(t) = self.section(root, name) else {
            return cfg;
        };
        let prefix = format!("{name}.");
        self.unknown_keys(t, keys, &prefix);
        if let Some(v) = self.count(t, "epochs", &prefix) {
            cfg.epochs = v;
        }
        if let Some(v) = self.real(t, "learning_rate", &prefix) {
            cfg.learning_rate = v;
        }
        if let Some(v) = self.count(t, "batch_size", &prefix) {
            cfg.batch_size = v;
        }
        if let Some(v) = self.real(t, "l2", &prefix) {
            cfg.l2 = v;
        }
        if let Some(v) = self.count(t, "plateau_patience", &prefix) {
            cfg.plateau_patience = v;
        }
        if keys.contains(&"hidden_width") {
            if let Some(v) = self.count(t, "hidden_width", &prefix) {
                cfg.hidden_width = v;
            }
        }
        cfg
    }
}

fn describe(v: &Value) -> String {
    match v {
        Value::String(s) => format!("string {s:?}"),
        Value::Integer(i) => format!("integer {i}"),
        Value::Float(f) => format!("float {f}"),
        Value::Boolean(b) => format!("boolean {b}"),
        Value::Datetime(d) => format!("datetime {d}"),
        Value::Array(_) => "an array".into(),
        Value::Table(_) => "a table".into(),
    }
}

fn acquisition(c: &mut Checker, name: Option<&str>, auxiliary: Option<&str>) -> Option<AcquisitionKind> {
    let name = name?;
    let full = match auxiliary {
        Some(aux) if matches!(name, "cmcs" | "umcs" | "dmcs") => match aux.parse::<Auxiliary>() {
            Ok(_) => format!("{name}-{aux}"),
            Err(e) => {
                c.problems.push(format!("auxiliary: {e}"));
                return None;
            }
        },
        Some(_) => {
            c.problems.push(format!(
                "auxiliary: only allowed with acquisition = \"cmcs\", \"umcs\" or \"dmcs\", not {name:?}"
            ));
            return None;
        }
        None => name.to_string(),
    };
    match full.parse() {
        Ok(kind) => Some(kind),
        Err(_) => {
            c.problems.push(format!(
                "acquisition: unknown function {name:?}; expected one of {}",
                AcquisitionKind::NAMES.join(", ")
            ));
            None
        }
    }
}

/// Parse and validate a config; relative data paths resolve against `base`.
pub fn parse_config(text: &str, base: &Path) -> Result<ExperimentConfig, Vec<String>> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| vec![e.to_string()])?;
    let mut c = Checker { problems: Vec::new() };
    c.unknown_keys(&root, &TOP_KEYS, "");
    if root.contains_key("normalize") {
        c.problems.push("normalize: belongs in the [data] section".into());
    }

    let budget = c.count(&root, "budget", "");
    let budget = c.required(budget, &root, "budget");
    let iterations = c.count(&root, "iterations", "");
    let iterations = c.required(iterations, &root, "iterations");
    let af = c.string(&root, "acquisition", "");
    let af = c.required(af, &root, "acquisition");
    let aux = c.string(&root, "auxiliary", "");
    let kind = acquisition(&mut c, af, aux);

    let policy = match c.string(&root, "scheme_policy", "") {
        None => Some(SchemePolicy::CsSvmOnly),
        Some(s) => match s {
            "cs_svm_only" => Some(SchemePolicy::CsSvmOnly),
            "softmax_th_only" => Some(SchemePolicy::SoftmaxThOnly),
            "auto_switch" => Some(SchemePolicy::AutoSwitch),
            other => {
                c.problems.push(format!(
                    "scheme_policy: unknown policy {other:?}; expected cs_svm_only, softmax_th_only or auto_switch"
                ));
                None
            }
        },
    };

    let seeds = match root.get("seeds") {
        None => Some(vec![0]),
        Some(Value::Array(items)) => {
            let mut seeds = Vec::with_capacity(items.len());
            for (i, item) in items.iter().enumerate() {
                match item {
                    Value::Integer(v) if *v >= 0 => seeds.push(*v as u64),
                    other => c.problems.push(format!(
                        "seeds[{i}]: expected a non-negative integer, found {}",
                        describe(other)
                    )),
                }
            }
            Some(seeds)
        }
        Some(other) => {
            c.problems.push(format!(
                "seeds: expected an array of integers, found {}",
                describe(other)
            ));
            None
        }
    };

    let mut data = DataPaths::default();
    let mut normalize = true;
    if let Some(t) = c.section(&root, "data") {
        c.unknown_keys(t, &DATA_KEYS, "data.");
        let path = |c: &mut Checker, key| c.string(t, key, "data.").map(|s| base.join(s));
        data.embeddings = path(&mut c, "embeddings");
        data.labels = path(&mut c, "labels");
        data.test_embeddings = path(&mut c, "test_embeddings");
        data.test_labels = path(&mut c, "test_labels");
        if let Some(n) = c.boolean(t, "normalize", "data.") {
            normalize = n;
        }
    }

    let training = SchemeConfigs {
        svm: c.train_config(&root, "svm", &SVM_KEYS, TrainConfig::svm_default()),
        softmax: c.train_config(&root, "softmax", &SOFTMAX_KEYS, TrainConfig::softmax_default()),
    };

    let (Some(budget), Some(iterations), Some(acquisition), Some(scheme_policy), Some(seeds)) =
        (budget, iterations, kind, policy, seeds)
    else {
        return Err(c.problems);
    };
    let run = RunConfig {
        budget,
        iterations,
        acquisition,
        scheme_policy,
        seeds,
        training,
    };
    c.problems.extend(run.problems());
    if c.problems.is_empty() {
        Ok(ExperimentConfig { run, data, normalize })
    } else {
        Err(c.problems)
    }
}
