use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One prediction `M(P^k)` at query `query_index`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub prompt_id: u64,
    pub k: usize,
    pub query_index: usize,
    pub prediction: f64,
}

impl PredictionRecord {
    pub fn key(&self) -> (u64, usize, usize) {
        (self.prompt_id, self.k, self.query_index)
    }
}

/// A failed `(prompt, k)` evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub prompt_id: u64,
    pub k: usize,
    pub error: String,
}

pub fn write_records(path: &Path, records: &[PredictionRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r)?;
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Reads a prediction file, rejecting duplicate keys and non-finite values.
pub fn read_records(path: &Path) -> Result<Vec<PredictionRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let r: PredictionRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("{}:{}: {e}", path.display(), n + 1)))?;
        if !r.prediction.is_finite() {
            return Err(Error::Parse(format!("{}:{}: non-finite prediction", path.display(), n + 1)));
        }
        if !seen.insert(r.key()) {
            return Err(Error::Parse(format!(
                "{}:{}: duplicate record for prompt {}, k {}, query {}",
                path.display(),
                n + 1,
                r.prompt_id,
                r.k,
                r.query_index
            )));
        }
        out.push(r);
    }
    Ok(out)
}

pub fn write_failures(path: &Path, failures: &[Failure]) -> Result<()> {
    let text = serde_json::to_string_pretty(failures)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let recs = vec![
            PredictionRecord { prompt_id: 0, k: 0, query_index: 0, prediction: 0.1 + 0.2 },
            PredictionRecord { prompt_id: 0, k: 1, query_index: 0, prediction: -1e-300 },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        write_records(&path, &recs).unwrap();
        assert_eq!(read_records(&path).unwrap(), recs);
    }

    #[test]
    fn duplicates_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let line = r#"{"prompt_id":1,"k":0,"query_index":0,"prediction":1.0}"#;
        std::fs::write(&path, format!("{line}\n{line}\n")).unwrap();
        assert!(read_records(&path).unwrap_err().to_string().contains("duplicate"));
    }
}
