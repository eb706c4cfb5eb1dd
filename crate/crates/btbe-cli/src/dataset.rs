//! Dataset ingestion: headered comma-delimited files with columns `x1,x2`.
//!
//! Negative or unparsable values abort with the offending line number.
//! Zero event times are excluded (they indicate an event that predates the
//! observation window) and reported so the caller can log the exclusions.

use crate::CliError;
use btbe::lifetimes::EventVector;
use std::path::Path;

/// Parsed dataset plus the 1-based line numbers of excluded zero rows.
pub struct Dataset {
    pub vectors: Vec<EventVector>,
    pub excluded_rows: Vec<usize>,
}

pub fn read_csv(path: &Path, scale: f64) -> Result<Dataset, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;

    {
        let headers = reader
            .headers()
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let names: Vec<String> = headers.iter().map(|h| h.to_ascii_lowercase()).collect();
        if names.len() < 2 || names[0] != "x1" || names[1] != "x2" {
            return Err(CliError::Data(format!(
                "{}: expected header columns x1,x2 (got {:?})",
                path.display(),
                headers
            )));
        }
    }

    let mut vectors = Vec::new();
    let mut excluded_rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2; // 1-based, after the header
        let record = record
            .map_err(|e| CliError::Data(format!("{} line {line}: {e}", path.display())))?;
        let parse = |field: usize| -> Result<f64, CliError> {
            record
                .get(field)
                .ok_or_else(|| {
                    CliError::Data(format!("{} line {line}: missing column", path.display()))
                })?
                .parse::<f64>()
                .map_err(|e| CliError::Data(format!("{} line {line}: {e}", path.display())))
        };
        let x1 = parse(0)? * scale;
        let x2 = parse(1)? * scale;
        if !x1.is_finite() || !x2.is_finite() || x1 < 0.0 || x2 < 0.0 {
            return Err(CliError::Data(format!(
                "{} line {line}: event times must be finite and nonnegative (got {x1}, {x2})",
                path.display()
            )));
        }
        if x1 == 0.0 || x2 == 0.0 {
            excluded_rows.push(line);
            continue;
        }
        vectors.push(EventVector { x1, x2 });
    }
    Ok(Dataset {
        vectors,
        excluded_rows,
    })
}

pub fn write_csv(path: &Path, vectors: &[EventVector]) -> Result<(), CliError> {
    let mut out = String::with_capacity(16 * vectors.len() + 8);
    out.push_str("x1,x2\n");
    for v in vectors {
        out.push_str(&format!("{},{}\n", v.x1, v.x2));
    }
    std::fs::write(path, out)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}
