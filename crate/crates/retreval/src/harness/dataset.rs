//! Line-delimited dataset files.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Domain, Problem};

/// One problem record; one JSON object per line in the dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub statement: String,
    pub domain: Domain,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_answer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

impl DatasetRecord {
    pub fn into_problem(self) -> Result<Problem> {
        let mut problem = Problem::new(self.id, self.statement, self.domain)?;
        problem.reference_answer = self.reference_answer;
        if let Some(source) = self.source {
            problem.metadata.insert("source".to_string(), source);
        }
        Ok(problem)
    }
}

/// Load and validate a JSONL dataset. Rejects empty files, malformed lines
/// (reported with their 1-based line number), duplicate ids, and empty
/// statements.
pub fn load_dataset(path: &Path) -> Result<Vec<DatasetRecord>> {
    let text = std::fs::read_to_string(path)?;
    parse_dataset(&text)
}

pub fn parse_dataset(text: &str) -> Result<Vec<DatasetRecord>> {
    let mut records = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for (index, line) in text.lines().enumerate() {
        let line_no = index + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: DatasetRecord = serde_json::from_str(line).map_err(|e| Error::Dataset {
            line: line_no,
            message: e.to_string(),
        })?;
        if record.statement.trim().is_empty() {
            return Err(Error::Dataset {
                line: line_no,
                message: "statement is empty".to_string(),
            });
        }
        if !seen.insert(record.id.clone()) {
            return Err(Error::Dataset {
                line: line_no,
                message: format!("duplicate id {:?}", record.id),
            });
        }
        records.push(record);
    }
    if records.is_empty() {
        return Err(Error::Dataset {
            line: 0,
            message: "dataset file contains no records".to_string(),
        });
    }
    Ok(records)
}

/// Write records as JSONL.
pub fn save_dataset(records: &[DatasetRecord], path: &Path) -> Result<()> {
    let mut out = String::new();
    for record in records {
        out.push_str(
            &serde_json::to_string(record).map_err(|e| Error::Serialization(e.to_string()))?,
        );
        out.push('\n');
    }
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, out)?;
    Ok(())
}
