//! Privilege and effort cutoffs.

use std::collections::BTreeMap;

use log::warn;
use serde::{Deserialize, Serialize};

use super::schema::ColumnTag;
use super::table::Table;
use crate::{Error, Result};

/// Cutoff splitting the privileged top-`p`% of a privilege column from the rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivilegeThreshold {
    pub column: String,
    /// Requested privileged share, in percent.
    pub p: f64,
    /// Rows with `x >= tau` are privileged.
    pub tau: f64,
    /// Observed share of rows with `x >= tau`; at most `p / 100`.
    pub realized_fraction: f64,
}

impl PrivilegeThreshold {
    pub fn is_privileged(&self, x: f64) -> bool {
        x >= self.tau
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffortScope {
    Global,
    #[default]
    PerGroup,
    PerCategoryGroup,
}

/// Mean-effort cutoffs. Rows with `x_e >= e` count as high effort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffortThresholds {
    pub column: String,
    pub scope: EffortScope,
    pub global: f64,
    /// Per protected group; filled whenever a protected column was given.
    #[serde(default)]
    pub groups: BTreeMap<String, f64>,
    /// category -> group -> cutoff; only for [`EffortScope::PerCategoryGroup`].
    #[serde(default)]
    pub cells: BTreeMap<String, BTreeMap<String, f64>>,
    /// Cells that had fewer than two rows and inherited the parent mean.
    #[serde(default)]
    pub fallbacks: Vec<String>,
}

impl EffortThresholds {
    pub fn cutoff(&self, group: &str, category: Option<&str>) -> f64 {
        let group_value = self.groups.get(group).copied().unwrap_or(self.global);
        match self.scope {
            EffortScope::Global => self.global,
            EffortScope::PerGroup => group_value,
            EffortScope::PerCategoryGroup => category
                .and_then(|a| self.cells.get(a))
                .and_then(|m| m.get(group))
                .copied()
                .unwrap_or(group_value),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Thresholds {
    pub privilege: Option<PrivilegeThreshold>,
    pub effort: Option<EffortThresholds>,
}

fn privilege_values<'a>(t: &'a Table, column: Option<&str>) -> Result<(&'a str, &'a [f64])> {
    let col = match column {
        Some(name) => t.column(name)?,
        None => t.tagged(ColumnTag::Privilege).ok_or_else(|| {
            Error::Schema("no column is tagged as the privilege attribute".into())
        })?,
    };
    let name = col.name();
    if !col.kind().is_numeric() {
        return Err(Error::Schema(format!(
            "privilege column '{name}' must be numerical or ordinal"
        )));
    }
    Ok((name, t.numeric(name)?))
}

/// Smallest observed value `v` of the privilege column with
/// `|{x >= v}| / n <= p / 100`.
///
/// `column` defaults to the column tagged [`ColumnTag::Privilege`].
pub fn privilege_threshold(t: &Table, column: Option<&str>, p: f64) -> Result<PrivilegeThreshold> {
    if !(p > 0.0 && p < 100.0) {
        return Err(Error::Config(format!("p must lie in (0, 100), got {p}")));
    }
    let (name, values) = privilege_values(t, column)?;
    let n = values.len();
    if n == 0 {
        return Err(Error::DegenerateThreshold(format!(
            "privilege column '{name}' is empty"
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted[0] == sorted[n - 1] {
        return Err(Error::DegenerateThreshold(format!(
            "privilege column '{name}' is constant"
        )));
    }
    let limit = p * n as f64;
    // Walk distinct values from the top; `at_least` is the count of x >= v.
    let mut tau = None;
    let mut i = n;
    while i > 0 {
        let v = sorted[i - 1];
        let mut j = i;
        while j > 0 && sorted[j - 1] == v {
            j -= 1;
        }
        let at_least = n - j;
        if (at_least as f64) * 100.0 <= limit {
            tau = Some((v, at_least));
            i = j;
        } else {
            break;
        }
    }
    let (tau, count) = tau.ok_or_else(|| {
        Error::DegenerateThreshold(format!(
            "no value of '{name}' leaves at most {p}% of rows privileged"
        ))
    })?;
    Ok(PrivilegeThreshold {
        column: name.to_string(),
        p,
        tau,
        realized_fraction: count as f64 / n as f64,
    })
}

fn mean_of(values: &[f64], rows: &[usize]) -> f64 {
    let mut sum = 0.0;
    for &i in rows {
        sum += values[i];
    }
    sum / rows.len() as f64
}

/// Mean effort within each scope cell.
///
/// `protected` is needed for the per-group scopes, `category` for
/// [`EffortScope::PerCategoryGroup`]. Cells with fewer than two rows inherit
/// the parent scope's mean.
pub fn effort_threshold(
    t: &Table,
    column: Option<&str>,
    scope: EffortScope,
    protected: Option<&str>,
    category: Option<&str>,
) -> Result<EffortThresholds> {
    let col = match column {
        Some(name) => t.column(name)?,
        None => t
            .tagged(ColumnTag::Effort)
            .ok_or_else(|| Error::Schema("no column is tagged as the effort attribute".into()))?,
    };
    let name = col.name().to_string();
    let values = t.numeric(&name)?;
    if values.is_empty() {
        return Err(Error::Config("effort threshold of an empty table".into()));
    }
    let all: Vec<usize> = (0..values.len()).collect();
    let global = mean_of(values, &all);
    let mut fallbacks = Vec::new();

    let mut groups = BTreeMap::new();
    let mut group_rows: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    if scope != EffortScope::Global && protected.is_none() {
        return Err(Error::Config(format!(
            "effort scope {scope:?} needs a protected column"
        )));
    }
    if let Some(prot) = protected {
        let (levels, codes) = t.categorical(prot)?;
        for (i, &c) in codes.iter().enumerate() {
            group_rows
                .entry(levels[c as usize].clone())
                .or_default()
                .push(i);
        }
        for (g, rows) in &group_rows {
            if rows.len() < 2 {
                fallbacks.push(format!("group {g}"));
                groups.insert(g.clone(), global);
            } else {
                groups.insert(g.clone(), mean_of(values, rows));
            }
        }
    }

    let mut cells = BTreeMap::new();
    if scope == EffortScope::PerCategoryGroup {
        let cat = category.ok_or_else(|| {
            Error::Config("per_category_group effort scope needs a conditional column".into())
        })?;
        let (cat_levels, cat_codes) = t.categorical(cat)?;
        let (levels, codes) = t.categorical(protected.expect("checked above"))?;
        let mut cell_rows: BTreeMap<(String, String), Vec<usize>> = BTreeMap::new();
        for i in 0..values.len() {
            cell_rows
                .entry((
                    cat_levels[cat_codes[i] as usize].clone(),
                    levels[codes[i] as usize].clone(),
                ))
                .or_default()
                .push(i);
        }
        for ((a, g), rows) in cell_rows {
            let e = if rows.len() < 2 {
                fallbacks.push(format!("cell {a}/{g}"));
                groups[&g]
            } else {
                mean_of(values, &rows)
            };
            cells.entry(a).or_insert_with(BTreeMap::new).insert(g, e);
        }
    }
    if !fallbacks.is_empty() {
        warn!(
            "effort cutoffs: {} cell(s) with < 2 rows inherit the parent mean",
            fallbacks.len()
        );
    }
    Ok(EffortThresholds {
        column: name,
        scope,
        global,
        groups,
        cells,
        fallbacks,
    })
}
