//! Run artifacts, collected in memory and written once the computation is done.

use std::fs;
use std::path::{Path, PathBuf};

use elastic_grating::C64;
use serde_json::{Map, Value};

use crate::CliError;

/// Formats a float with 16 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.15e}")
}

/// Pushes a complex value as a `re, im` column pair.
pub fn push_complex(row: &mut Vec<String>, z: C64) {
    row.push(num(z.re));
    row.push(num(z.im));
}

/// Header names `base_re, base_im`.
pub fn complex_header(base: &str) -> [String; 2] {
    [format!("{base}_re"), format!("{base}_im")]
}

#[derive(Debug, Clone)]
pub struct Table {
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: &str, header: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            file: file.into(),
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }
}

/// Everything a subcommand produces.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub tables: Vec<Table>,
    pub texts: Vec<(String, Vec<u8>)>,
    pub results: Map<String, Value>,
    /// Lines for standard output.
    pub report: Vec<String>,
    /// Set when a checked bound or tolerance did not hold.
    pub violation: Option<String>,
}

impl Artifacts {
    pub fn result(&mut self, key: &str, v: impl Into<Value>) {
        self.results.insert(key.into(), v.into());
    }

    /// Writes tables and text files, then `summary.json` last.
    pub fn write(&self, dir: &Path, summary_head: Map<String, Value>) -> Result<Vec<PathBuf>, CliError> {
        let io = |p: &Path, e: &dyn std::fmt::Display| CliError::Io(format!("{}: {e}", p.display()));
        fs::create_dir_all(dir).map_err(|e| io(dir, &e))?;
        let mut written = Vec::new();
        for t in &self.tables {
            let path = dir.join(&t.file);
            let mut w = csv::Writer::from_path(&path).map_err(|e| io(&path, &e))?;
            w.write_record(&t.header).map_err(|e| io(&path, &e))?;
            for r in &t.rows {
                w.write_record(r).map_err(|e| io(&path, &e))?;
            }
            w.flush().map_err(|e| io(&path, &e))?;
            written.push(path);
        }
        for (name, bytes) in &self.texts {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(|e| io(&path, &e))?;
            written.push(path);
        }
        let mut summary = summary_head;
        let files: Vec<Value> = self
            .tables
            .iter()
            .map(|t| t.file.clone())
            .chain(self.texts.iter().map(|(n, _)| n.clone()))
            .map(Value::from)
            .collect();
        summary.insert("files".into(), Value::Array(files));
        summary.insert("results".into(), Value::Object(self.results.clone()));
        if let Some(v) = &self.violation {
            summary.insert("violation".into(), Value::from(v.clone()));
        }
        let path = dir.join("summary.json");
        let text = serde_json::to_string_pretty(&Value::Object(summary)).expect("summary serializes");
        fs::write(&path, text + "\n").map_err(|e| io(&path, &e))?;
        written.push(path);
        Ok(written)
    }
}
