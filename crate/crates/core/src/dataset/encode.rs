//! One-hot / standardization encoding of a [`Table`] into a dense feature matrix.

use std::ops::Range;

use log::warn;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::schema::ColumnKind;
use super::table::{ColumnValues, Table};
use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EncodeOptions {
    /// Feed protected columns to the model as ordinary categoricals.
    #[serde(default)]
    pub include_protected: bool,
    /// Columns left out of the feature matrix.
    #[serde(default)]
    pub exclude: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "encoding", rename_all = "snake_case")]
pub enum FeatureSpec {
    OneHot { column: String, levels: Vec<String> },
    Standardized { column: String, mean: f64, sd: f64 },
}

impl FeatureSpec {
    pub fn column(&self) -> &str {
        match self {
            FeatureSpec::OneHot { column, .. } | FeatureSpec::Standardized { column, .. } => column,
        }
    }

    fn width(&self) -> usize {
        match self {
            FeatureSpec::OneHot { levels, .. } => levels.len(),
            FeatureSpec::Standardized { .. } => 1,
        }
    }
}

/// Encoding fitted on a training table and replayed on any table with the
/// same schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    pub features: Vec<FeatureSpec>,
}

impl Encoder {
    /// Fits the encoding on `t`. Categorical columns with a single level carry
    /// no information and are dropped with a warning.
    pub fn fit(t: &Table, opts: &EncodeOptions) -> Result<Encoder> {
        let mut features = Vec::new();
        for col in t.columns() {
            let name = col.name();
            if opts.exclude.iter().any(|e| e == name) {
                continue;
            }
            match col.kind() {
                ColumnKind::Target => continue,
                ColumnKind::Protected if !opts.include_protected => continue,
                _ => {}
            }
            match &col.values {
                ColumnValues::Categorical { .. } => {
                    let levels = t.present_levels(name)?;
                    if levels.len() < 2 {
                        warn!("dropping categorical column '{name}': only one level");
                        continue;
                    }
                    features.push(FeatureSpec::OneHot {
                        column: name.to_string(),
                        levels,
                    });
                }
                ColumnValues::Numeric(v) => {
                    let n = v.len().max(1) as f64;
                    let mean = v.iter().sum::<f64>() / n;
                    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
                    let mut sd = var.sqrt();
                    if !(sd > 0.0) {
                        warn!("column '{name}' has zero variance; centering only");
                        sd = 1.0;
                    }
                    features.push(FeatureSpec::Standardized {
                        column: name.to_string(),
                        mean,
                        sd,
                    });
                }
            }
        }
        if features.is_empty() {
            return Err(Error::Encoding("no usable feature columns".into()));
        }
        Ok(Encoder { features })
    }

    pub fn width(&self) -> usize {
        self.features.iter().map(FeatureSpec::width).sum()
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.width());
        for f in &self.features {
            match f {
                FeatureSpec::OneHot { column, levels } => {
                    names.extend(levels.iter().map(|l| format!("{column}={l}")))
                }
                FeatureSpec::Standardized { column, .. } => names.push(column.clone()),
            }
        }
        names
    }

    /// Matrix columns produced from source column `name`.
    pub fn columns_for(&self, name: &str) -> Option<Range<usize>> {
        let mut start = 0;
        for f in &self.features {
            let w = f.width();
            if f.column() == name {
                return Some(start..start + w);
            }
            start += w;
        }
        None
    }

    /// Encodes `t` row-major. Categorical levels unseen at fit time encode as
    /// all zeros.
    pub fn transform(&self, t: &Table) -> Result<Array2<f64>> {
        let n = t.n_rows();
        let mut out = Array2::<f64>::zeros((n, self.width()));
        let mut offset = 0;
        for f in &self.features {
            match f {
                FeatureSpec::OneHot { column, levels } => {
                    let (tl, codes) = t.categorical(column).map_err(|e| {
                        Error::Encoding(format!("column '{column}' cannot be encoded: {e}"))
                    })?;
                    let map: Vec<Option<usize>> = tl
                        .iter()
                        .map(|l| levels.iter().position(|x| x == l))
                        .collect();
                    for (i, &c) in codes.iter().enumerate() {
                        if let Some(j) = map[c as usize] {
                            out[[i, offset + j]] = 1.0;
                        }
                    }
                }
                FeatureSpec::Standardized { column, mean, sd } => {
                    let v = t.numeric(column).map_err(|e| {
                        Error::Encoding(format!("column '{column}' cannot be encoded: {e}"))
                    })?;
                    for (i, x) in v.iter().enumerate() {
                        out[[i, offset]] = (x - mean) / sd;
                    }
                }
            }
            offset += f.width();
        }
        Ok(out)
    }
}
