//! One module per subcommand.

pub mod audit;
pub mod privilege;
pub mod report;
pub mod train;

use std::path::Path;

use anyhow::Context;

use crate::CliError;

/// Scores and optional 0-based row indices from a predictions CSV.
pub fn read_predictions(path: &Path) -> Result<(Vec<f64>, Option<Vec<usize>>), CliError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::Usage(format!("cannot read predictions {}: {e}", path.display())))?;
    let headers = reader.headers().map_err(anyhow::Error::from)?.clone();
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let score_at = find("score")
        .ok_or_else(|| CliError::Usage(format!("{} has no 'score' column", path.display())))?;
    let row_at = find("row");
    let mut scores = Vec::new();
    let mut rows = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(anyhow::Error::from)?;
        let line = k + 2;
        let parse = |at: usize| -> Result<&str, CliError> {
            rec.get(at)
                .map(str::trim)
                .ok_or_else(|| CliError::Runtime(anyhow::anyhow!("line {line}: missing field")))
        };
        let score: f64 = parse(score_at)?
            .parse()
            .with_context(|| format!("{} line {line}: bad score", path.display()))?;
        scores.push(score);
        if let Some(at) = row_at {
            let row: usize = parse(at)?
                .parse()
                .with_context(|| format!("{} line {line}: bad row index", path.display()))?;
            rows.push(row);
        }
    }
    Ok((scores, row_at.map(|_| rows)))
}

/// Share of rows whose indicator agrees with the label (fractional in
/// expected mode).
pub fn accuracy(labels: &[u8], positive: &[f64]) -> f64 {
    let hits: f64 = labels
        .iter()
        .zip(positive)
        .map(|(&y, &p)| if y == 1 { p } else { 1.0 - p })
        .sum();
    hits / labels.len().max(1) as f64
}
