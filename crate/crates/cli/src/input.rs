//! CSV ingestion: one header row, a designated group column with string
//! labels, and numeric nonnegative measurement columns where zeros encode
//! absence. Empty cells are rejected rather than read as zero.

use scmanova::data_model::{ingest, SemicontDataset};
use std::path::Path;

pub fn read_csv(path: &Path, group_col: &str) -> Result<SemicontDataset, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let headers = reader
        .headers()
        .map_err(|e| format!("cannot read header row: {e}"))?
        .clone();
    let group_idx = headers
        .iter()
        .position(|h| h == group_col)
        .ok_or_else(|| format!("group column '{group_col}' not found in header"))?;
    let variable_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != group_idx)
        .map(|(_, h)| h.to_string())
        .collect();
    if variable_names.is_empty() {
        return Err("no measurement columns besides the group column".into());
    }

    let mut rows = Vec::new();
    let mut groups = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| format!("data row {}: {e}", r + 1))?;
        if record.len() != headers.len() {
            return Err(format!(
                "data row {} has {} fields, expected {}",
                r + 1,
                record.len(),
                headers.len()
            ));
        }
        let mut row = Vec::with_capacity(variable_names.len());
        for (j, field) in record.iter().enumerate() {
            if j == group_idx {
                if field.is_empty() {
                    return Err(format!("empty group label at data row {}", r + 1));
                }
                groups.push(field.to_string());
                continue;
            }
            if field.is_empty() {
                return Err(format!(
                    "empty cell at data row {}, column {} (missing values are not supported; zeros encode absence)",
                    r + 1,
                    headers.get(j).unwrap_or("?")
                ));
            }
            let value: f64 = field.parse().map_err(|_| {
                format!(
                    "malformed numeric value '{field}' at data row {}, column {}",
                    r + 1,
                    headers.get(j).unwrap_or("?")
                )
            })?;
            row.push(value);
        }
        rows.push(row);
    }

    ingest(rows, groups, Some(variable_names)).map_err(|e| e.to_string())
}
