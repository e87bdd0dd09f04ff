//! Sample identities, embeddings, oracle labels and the labeled/unlabeled pool.
//!
//! Embeddings come from an `ALEMB1` binary file and labels from a
//! `<sample_name>,<class_name>` text file aligned row-for-row. Sample ids are
//! dense and follow file order.

use std::collections::HashMap;
use std::io::{self, BufRead, BufReader, Read, Write};

use rand::seq::index;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

/// Magic bytes at the start of an embedding file.
pub const ALEMB_MAGIC: &[u8; 6] = b"ALEMB1";
/// The only embedding format version understood.
pub const ALEMB_VERSION: u8 = 1;
const HEADER_LEN: usize = 16;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("malformed embedding header: {0}")]
    MalformedHeader(String),
    #[error("embedding payload truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("non-finite value at sample {sample}, component {component}")]
    NonFinite { sample: usize, component: usize },
    #[error("row count mismatch: {embeddings} embedding rows, {labels} label rows")]
    RowCountMismatch { embeddings: usize, labels: usize },
    #[error("malformed label line {line}: {content:?}")]
    MalformedLabelLine { line: usize, content: String },
    #[error("label {label} of sample {sample} is out of range for {n_classes} classes")]
    LabelOutOfRange {
        sample: usize,
        label: String,
        n_classes: usize,
    },
    #[error("empty dataset")]
    Empty,
    #[error("sample {0} is already labeled")]
    AlreadyLabeled(usize),
    #[error("unknown sample id {0}")]
    UnknownId(usize),
    #[error("sample {0} appears twice in the batch")]
    DuplicateId(usize),
    #[error("cannot seed {requested} samples from a pool of {available}")]
    SeedTooLarge { requested: usize, available: usize },
}

/// Immutable `n_samples × dim` matrix of finite feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    n_samples: usize,
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingStore {
    /// Build a store from row-major data.
    pub fn from_rows(dim: usize, data: Vec<f64>) -> Result<Self, DatasetError> {
        if dim == 0 {
            return Err(DatasetError::MalformedHeader("dim must be positive".into()));
        }
        if data.is_empty() {
            return Err(DatasetError::Empty);
        }
        if !data.len().is_multiple_of(dim) {
            return Err(DatasetError::Truncated {
                expected: data.len().div_ceil(dim) * dim,
                found: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(DatasetError::NonFinite {
                sample: pos / dim,
                component: pos % dim,
            });
        }
        Ok(Self {
            n_samples: data.len() / dim,
            dim,
            data,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, id: usize) -> &[f64] {
        &self.data[id * self.dim..(id + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Scale every row to unit Euclidean norm. Zero rows are left as is.
    pub fn l2_normalized(mut self) -> Self {
        for row in self.data.chunks_mut(self.dim) {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|v| *v /= norm);
            }
        }
        self
    }

    /// Copy the given rows, in order, into a new store.
    pub fn select(&self, ids: &[usize]) -> Result<Self, DatasetError> {
        let mut data = Vec::with_capacity(ids.len() * self.dim);
        for &id in ids {
            if id >= self.n_samples {
                return Err(DatasetError::UnknownId(id));
            }
            data.extend_from_slice(self.row(id));
        }
        Self::from_rows(self.dim, data)
    }
}

/// Read an `ALEMB1` stream.
pub fn read_embeddings<R: Read>(mut reader: R) -> Result<EmbeddingStore, DatasetError> {
    let mut header = [0u8; HEADER_LEN];
    let mut got = 0;
    while got < HEADER_LEN {
        let n = reader.read(&mut header[got..])?;
        if n == 0 {
            return Err(DatasetError::MalformedHeader(format!(
                "expected {HEADER_LEN} header bytes, found {got}"
            )));
        }
        got += n;
    }
    if &header[..6] != ALEMB_MAGIC {
        return Err(DatasetError::MalformedHeader("bad magic".into()));
    }
    if header[6] != ALEMB_VERSION {
        return Err(DatasetError::MalformedHeader(format!(
            "unsupported version {}",
            header[6]
        )));
    }
    if header[7] != 0 {
        return Err(DatasetError::MalformedHeader("reserved byte must be 0".into()));
    }
    let n_samples = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    if n_samples == 0 || dim == 0 {
        return Err(DatasetError::MalformedHeader(format!(
            "n_samples={n_samples}, dim={dim} must both be positive"
        )));
    }

    let expected = n_samples * dim * 4;
    let mut payload = Vec::with_capacity(expected);
    reader.read_to_end(&mut payload)?;
    if payload.len() != expected {
        return Err(DatasetError::Truncated {
            expected,
            found: payload.len(),
        });
    }
    let data = payload
        .chunks_exact(4)
        .map(|b| f64::from(f32::from_le_bytes(b.try_into().unwrap())))
        .collect();
    EmbeddingStore::from_rows(dim, data)
}

/// Write a store as `ALEMB1` (values are narrowed to f32).
pub fn write_embeddings<W: Write>(mut writer: W, store: &EmbeddingStore) -> io::Result<()> {
    let n = u32::try_from(store.n_samples())
        .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "too many samples"))?;
    let d = u32::try_from(store.dim()).map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "dim too large"))?;
    writer.write_all(ALEMB_MAGIC)?;
    writer.write_all(&[ALEMB_VERSION, 0])?;
    writer.write_all(&n.to_le_bytes())?;
    writer.write_all(&d.to_le_bytes())?;
    for v in store.as_slice() {
        writer.write_all(&(*v as f32).to_le_bytes())?;
    }
    writer.flush()
}

/// Ground-truth labels, visible only to the annotation step and evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelOracle {
    labels: Vec<usize>,
    n_classes: usize,
}

impl LabelOracle {
    pub fn new(labels: Vec<usize>, n_classes: usize) -> Result<Self, DatasetError> {
        if labels.is_empty() {
            return Err(DatasetError::Empty);
        }
        if let Some((sample, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= n_classes) {
            return Err(DatasetError::LabelOutOfRange {
                sample,
                label: label.to_string(),
                n_classes,
            });
        }
        Ok(Self { labels, n_classes })
    }

    #[inline]
    pub fn label(&self, id: usize) -> usize {
        self.labels[id]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    /// Number of samples per class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Ids of each class, ascending.
    pub fn members_by_class(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.n_classes];
        for (id, &l) in self.labels.iter().enumerate() {
            members[l].push(id);
        }
        members
    }
}

/// External names of samples and classes, kept for reporting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelNames {
    pub sample_names: Vec<String>,
    pub class_names: Vec<String>,
}

/// Parse a labels file. When `classes` is given, class names must come from
/// it (used for test sets, which share the training class map); otherwise
/// indices are assigned by first appearance.
pub fn read_labels<R: Read>(reader: R, classes: Option<&[String]>) -> Result<(LabelNames, Vec<usize>), DatasetError> {
    let mut class_names: Vec<String> = classes.map(<[String]>::to_vec).unwrap_or_default();
    let mut index: HashMap<String, usize> = class_names.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
    let mut sample_names = Vec::new();
    let mut labels = Vec::new();
    let mut pending_blank = None;

    for (lineno, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.is_empty() {
            pending_blank.get_or_insert(lineno + 1);
            continue;
        }
        if let Some(blank) = pending_blank {
            return Err(DatasetError::MalformedLabelLine {
                line: blank,
                content: String::new(),
            });
        }
        let Some((sample, class)) = line.split_once(',') else {
            return Err(DatasetError::MalformedLabelLine {
                line: lineno + 1,
                content: line.to_string(),
            });
        };
        if sample.is_empty() || class.is_empty() {
            return Err(DatasetError::MalformedLabelLine {
                line: lineno + 1,
                content: line.to_string(),
            });
        }
        let label = match index.get(class) {
            Some(&c) => c,
            None if classes.is_some() => {
                return Err(DatasetError::LabelOutOfRange {
                    sample: labels.len(),
                    label: class.to_string(),
                    n_classes: class_names.len(),
                })
            }
            None => {
                class_names.push(class.to_string());
                index.insert(class.to_string(), class_names.len() - 1);
                class_names.len() - 1
            }
        };
        sample_names.push(sample.to_string());
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(DatasetError::Empty);
    }
    Ok((
        LabelNames {
            sample_names,
            class_names,
        },
        labels,
    ))
}

/// Write `<sample_name>,<class_name>` lines for the given ids.
pub fn write_labels<W: Write>(
    mut writer: W,
    names: &LabelNames,
    oracle: &LabelOracle,
    ids: &[usize],
) -> io::Result<()> {
    for &id in ids {
        writeln!(
            writer,
            "{},{}",
            names.sample_names[id],
            names.class_names[oracle.label(id)]
        )?;
    }
    writer.flush()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadOptions {
    /// L2-normalize every embedding row after loading.
    pub normalize: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self { normalize: true }
    }
}

/// A loaded dataset: embeddings, oracle labels and external names.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub store: EmbeddingStore,
    pub oracle: LabelOracle,
    pub names: LabelNames,
    pub normalized: bool,
}

impl Dataset {
    /// Assemble from parts, checking that the row counts agree.
    pub fn new(
        store: EmbeddingStore,
        oracle: LabelOracle,
        names: LabelNames,
        normalized: bool,
    ) -> Result<Self, DatasetError> {
        if store.n_samples() != oracle.n_samples() || names.sample_names.len() != oracle.n_samples() {
            return Err(DatasetError::RowCountMismatch {
                embeddings: store.n_samples(),
                labels: oracle.n_samples(),
            });
        }
        Ok(Self {
            store,
            oracle,
            names,
            normalized,
        })
    }

    /// Dataset with generated names `s<i>` / `c<k>`.
    pub fn unnamed(store: EmbeddingStore, oracle: LabelOracle) -> Result<Self, DatasetError> {
        let names = LabelNames {
            sample_names: (0..oracle.n_samples()).map(|i| format!("s{i}")).collect(),
            class_names: (0..oracle.n_classes()).map(|c| format!("c{c}")).collect(),
        };
        Self::new(store, oracle, names, false)
    }

    pub fn n_classes(&self) -> usize {
        self.oracle.n_classes()
    }
}

/// Load embeddings and labels. `classes` pins the class map (see [`read_labels`]).
pub fn load_dataset<E: Read, L: Read>(
    embeddings: E,
    labels: L,
    classes: Option<&[String]>,
    options: LoadOptions,
) -> Result<Dataset, DatasetError> {
    let store = read_embeddings(embeddings)?;
    let (names, labels) = read_labels(labels, classes)?;
    if store.n_samples() != labels.len() {
        return Err(DatasetError::RowCountMismatch {
            embeddings: store.n_samples(),
            labels: labels.len(),
        });
    }
    let oracle = LabelOracle::new(labels, names.class_names.len())?;
    let store = if options.normalize {
        store.l2_normalized()
    } else {
        store
    };
    Dataset::new(store, oracle, names, options.normalize)
}

/// Partition of the sample ids into labeled and unlabeled sets.
///
/// Transitions return a new snapshot; the receiver is never modified.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolState {
    labeled: Vec<usize>,
    known: Vec<Option<usize>>,
    per_class_counts: Vec<usize>,
    iteration: usize,
}

impl PoolState {
    /// Everything unlabeled.
    pub fn new(n_samples: usize, n_classes: usize) -> Self {
        Self {
            labeled: Vec::new(),
            known: vec![None; n_samples],
            per_class_counts: vec![0; n_classes],
            iteration: 0,
        }
    }

    /// Labeled ids in labeling order.
    pub fn labeled(&self) -> &[usize] {
        &self.labeled
    }

    /// Unlabeled ids, ascending.
    pub fn unlabeled(&self) -> Vec<usize> {
        self.known
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_none())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn is_labeled(&self, id: usize) -> bool {
        self.known[id].is_some()
    }

    /// The annotated class of a labeled sample.
    pub fn known_label(&self, id: usize) -> Option<usize> {
        self.known[id]
    }

    /// Labeled ids of each class, in labeling order.
    pub fn labeled_by_class(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_classes()];
        for &id in &self.labeled {
            out[self.known[id].expect("labeled ids carry a label")].push(id);
        }
        out
    }

    pub fn n_samples(&self) -> usize {
        self.known.len()
    }

    pub fn n_labeled(&self) -> usize {
        self.labeled.len()
    }

    pub fn n_unlabeled(&self) -> usize {
        self.n_samples() - self.labeled.len()
    }

    pub fn n_classes(&self) -> usize {
        self.per_class_counts.len()
    }

    pub fn per_class_counts(&self) -> &[usize] {
        &self.per_class_counts
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn with_iteration(mut self, iteration: usize) -> Self {
        self.iteration = iteration;
        self
    }

    /// Move `ids` to the labeled set, counting their oracle labels.
    pub fn label_batch(&self, ids: &[usize], oracle: &LabelOracle) -> Result<Self, DatasetError> {
        let mut next = self.clone();
        for &id in ids {
            if id >= next.n_samples() {
                return Err(DatasetError::UnknownId(id));
            }
            if next.known[id].is_some() {
                return Err(if self.known[id].is_some() {
                    DatasetError::AlreadyLabeled(id)
                } else {
                    DatasetError::DuplicateId(id)
                });
            }
            let label = oracle.label(id);
            next.known[id] = Some(label);
            next.labeled.push(id);
            next.per_class_counts[label] += 1;
        }
        Ok(next)
    }

    /// Label `count` unlabeled samples drawn uniformly without replacement.
    pub fn seed_initial(&self, count: usize, rng_seed: u64, oracle: &LabelOracle) -> Result<Self, DatasetError> {
        let unlabeled = self.unlabeled();
        if count > unlabeled.len() {
            return Err(DatasetError::SeedTooLarge {
                requested: count,
                available: unlabeled.len(),
            });
        }
        let mut rng = rng::seeded(rng_seed);
        let picks: Vec<usize> = index::sample(&mut rng, unlabeled.len(), count)
            .into_iter()
            .map(|i| unlabeled[i])
            .collect();
        self.label_batch(&picks, oracle)
    }
}
