use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use albalance_core::runner::AggregatePoint;
use serde::Serialize;

use crate::error::CliError;

pub const CURVES_HEADER: &str = "iteration,labeled_count,acc_mean,acc_std,ir_mean,ir_std,scheme";

/// Curves CSV: LF line endings, reals with 6 decimals.
pub fn curves_csv(points: &[AggregatePoint]) -> String {
    let mut out = String::from(CURVES_HEADER);
    out.push('\n');
    for p in points {
        out.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6},{:.6},{}\n",
            p.iteration, p.labeled_count, p.acc_mean, p.acc_std, p.ir_mean, p.ir_std, p.scheme
        ));
    }
    out
}

/// Files written by one command. Unless [`Outputs::commit`] is called they
/// are deleted on drop, so a failed command leaves nothing half-written.
#[derive(Debug, Default)]
pub struct Outputs {
    written: Vec<PathBuf>,
    created_dir: Option<PathBuf>,
}

impl Outputs {
    pub fn new() -> Self {
        Self::default()
    }

    /// Create `dir` if needed; it is removed again on failure if it was new
    /// and is empty by then.
    pub fn ensure_dir(&mut self, dir: &Path) -> Result<(), CliError> {
        if !dir.exists() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            self.created_dir = Some(dir.to_path_buf());
        }
        Ok(())
    }

    pub fn write_with(
        &mut self,
        path: &Path,
        f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    ) -> Result<(), CliError> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        self.written.push(path.to_path_buf());
        let mut w = BufWriter::new(file);
        f(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
    }

    pub fn write_str(&mut self, path: &Path, text: &str) -> Result<(), CliError> {
        self.write_with(path, |w| w.write_all(text.as_bytes()))
    }

    pub fn write_json<T: Serialize>(&mut self, path: &Path, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("plain data serializes");
        text.push('\n');
        self.write_str(path, &text)
    }

    pub fn commit(mut self) {
        self.written.clear();
        self.created_dir = None;
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        for path in self.written.drain(..) {
            let _ = fs::remove_file(path);
        }
        if let Some(dir) = self.created_dir.take() {
            let _ = fs::remove_dir(dir);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let points = vec![AggregatePoint {
            iteration: 0,
            labeled_count: 500,
            acc_mean: 0.5,
            acc_std: 1.0 / 3.0,
            ir_mean: 0.25,
            ir_std: 0.0,
            scheme: "CS_SVM".into(),
        }];
        assert_eq!(
            curves_csv(&points),
            "iteration,labeled_count,acc_mean,acc_std,ir_mean,ir_std,scheme\n\
             0,500,0.500000,0.333333,0.250000,0.000000,CS_SVM\n"
        );
    }

    #[test]
    fn uncommitted_outputs_are_removed() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("new");
        {
            let mut out = Outputs::new();
            out.ensure_dir(&dir).unwrap();
            out.write_str(&dir.join("a.txt"), "x").unwrap();
            assert!(dir.join("a.txt").exists());
        }
        assert!(!dir.exists());
        let mut out = Outputs::new();
        out.ensure_dir(&dir).unwrap();
        out.write_str(&dir.join("a.txt"), "x").unwrap();
        out.commit();
        assert!(dir.join("a.txt").exists());
    }
}
