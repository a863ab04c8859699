use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::NotionKind;

/// Denominators of the socio-economic terms.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Denominators {
    /// Count of low-effort underprivileged rows.
    #[serde(rename = "A")]
    pub a: f64,
    /// Weight sum over high-effort underprivileged rows.
    #[serde(rename = "B")]
    pub b: f64,
    /// Weight sum over high-effort underprivileged rows with a negative label.
    #[serde(rename = "B0")]
    pub b0: f64,
    /// Count of privileged rows with a negative label.
    #[serde(rename = "C")]
    pub c: f64,
}

/// Violation terms of one group (or one category/group cell).
///
/// Parity notions only fill `T1`. A `None` term was skipped because its
/// denominator was empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    #[serde(rename = "T1")]
    pub t1: Option<f64>,
    #[serde(rename = "T2")]
    pub t2: Option<f64>,
    #[serde(rename = "T3")]
    pub t3: Option<f64>,
    pub total: f64,
    /// Rows the record is about (group, cell, or underprivileged subgroup).
    pub support: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub denominators: Option<Denominators>,
}

impl TermRecord {
    pub(crate) fn parity(gap: f64, support: usize) -> Self {
        Self {
            t1: Some(gap),
            t2: None,
            t3: None,
            total: gap,
            support,
            denominators: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub notion: NotionKind,
    /// Indicator mode the rates were computed in (`hard` or `expected`).
    pub mode: String,
    pub epsilon: f64,
    /// Worst total over all evaluated groups / cells.
    pub aggregate: f64,
    /// Support-weighted mean of the totals.
    pub weighted_mean: f64,
    pub pass: bool,
    /// Some term or record was skipped for an empty denominator.
    pub partial: bool,
    /// Per-group records (unconditional notions).
    pub groups: BTreeMap<String, TermRecord>,
    /// category -> group -> record (CDP and CSEP).
    pub categories: BTreeMap<String, BTreeMap<String, TermRecord>>,
    pub skipped: Vec<String>,
}

impl ViolationReport {
    pub(crate) fn assemble(
        notion: NotionKind,
        mode: &str,
        epsilon: f64,
        groups: BTreeMap<String, TermRecord>,
        categories: BTreeMap<String, BTreeMap<String, TermRecord>>,
        skipped: Vec<String>,
    ) -> Self {
        let records: Vec<&TermRecord> = groups
            .values()
            .chain(categories.values().flat_map(|m| m.values()))
            .collect();
        let aggregate = records.iter().map(|r| r.total).fold(0.0, f64::max);
        let support: usize = records.iter().map(|r| r.support).sum();
        let weighted_mean = if support > 0 {
            records
                .iter()
                .map(|r| r.total * r.support as f64)
                .sum::<f64>()
                / support as f64
        } else {
            0.0
        };
        Self {
            notion,
            mode: mode.to_string(),
            epsilon,
            aggregate,
            weighted_mean,
            pass: aggregate <= epsilon,
            partial: !skipped.is_empty(),
            groups,
            categories,
            skipped,
        }
    }

    /// Records in a flat `(category, group, record)` listing.
    pub fn records(&self) -> Vec<(Option<&str>, &str, &TermRecord)> {
        let mut out: Vec<_> = self
            .groups
            .iter()
            .map(|(g, r)| (None, g.as_str(), r))
            .collect();
        for (a, m) in &self.categories {
            out.extend(m.iter().map(|(g, r)| (Some(a.as_str()), g.as_str(), r)));
        }
        out
    }
}
