//! Dataset file parsing.
//!
//! A dataset file is UTF-8 text with one document per line:
//!
//! ```text
//! label[,label...]<TAB>raw text
//! ```
//!
//! Labels are non-negative class ids; multi-label documents list several
//! separated by commas. Everything after the first tab is the raw document
//! text. Malformed lines are data errors reported with their line number.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// A parsed but not yet tokenized document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDocument {
    /// Sorted, deduplicated class ids.
    pub labels: Vec<usize>,
    pub text: String,
}

fn parse_labels(field: &str, path: &Path, line_no: usize) -> Result<Vec<usize>> {
    let mut labels = Vec::new();
    for part in field.split(',') {
        let id: usize = part.trim().parse().map_err(|_| {
            Error::data(format!(
                "{}:{line_no}: bad label {part:?} (expected a non-negative class id)",
                path.display()
            ))
        })?;
        labels.push(id);
    }
    labels.sort_unstable();
    labels.dedup();
    Ok(labels)
}

/// Reads every document in the file. Returns a data error on unreadable
/// files, missing tab separators, or unparsable labels.
pub fn load_dataset(path: &Path) -> Result<Vec<RawDocument>> {
    let content = fs::read_to_string(path)
        .map_err(|e| Error::data(format!("cannot read dataset {}: {e}", path.display())))?;
    let mut docs = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let line_no = i + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        let (labels, text) = line.split_once('\t').ok_or_else(|| {
            Error::data(format!(
                "{}:{line_no}: missing tab between labels and text",
                path.display()
            ))
        })?;
        docs.push(RawDocument {
            labels: parse_labels(labels, path, line_no)?,
            text: text.to_string(),
        });
    }
    Ok(docs)
}

/// Writes documents in the dataset format, used by tests and corpus
/// generation.
pub fn save_dataset(path: &Path, docs: &[RawDocument]) -> Result<()> {
    let mut out = String::new();
    for d in docs {
        let labels: Vec<String> = d.labels.iter().map(|l| l.to_string()).collect();
        out.push_str(&labels.join(","));
        out.push('\t');
        out.push_str(&d.text);
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}
