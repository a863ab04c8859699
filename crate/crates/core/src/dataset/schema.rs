use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Protected,
    Categorical,
    Ordinal,
    Numerical,
    Target,
}

impl ColumnKind {
    pub fn is_numeric(self) -> bool {
        matches!(self, ColumnKind::Ordinal | ColumnKind::Numerical)
    }
}

/// Roles layered on top of a numerical or ordinal column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnTag {
    Effort,
    Privilege,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<ColumnTag>,
    /// Raw target value mapped to 1; every other value maps to 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positive_label: Option<String>,
    /// Ordered levels for a string-valued ordinal column (rank = position).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<String>>,
}

impl ColumnSpec {
    pub fn new(name: impl Into<String>, kind: ColumnKind) -> Self {
        Self {
            name: name.into(),
            kind,
            tags: Vec::new(),
            positive_label: None,
            levels: None,
        }
    }

    pub fn tagged(mut self, tag: ColumnTag) -> Self {
        self.tags.push(tag);
        self
    }

    pub fn has_tag(&self, tag: ColumnTag) -> bool {
        self.tags.contains(&tag)
    }
}

fn default_missing_marker() -> String {
    "?".to_string()
}

fn default_delimiter() -> char {
    ','
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<ColumnSpec>,
    #[serde(default = "default_missing_marker")]
    pub missing_marker: String,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
}

impl Schema {
    pub fn new(columns: Vec<ColumnSpec>) -> Result<Self> {
        let schema = Self {
            columns,
            missing_marker: default_missing_marker(),
            delimiter: default_delimiter(),
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let schema: Schema = serde_json::from_str(text)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let targets = self
            .columns
            .iter()
            .filter(|c| c.kind == ColumnKind::Target)
            .count();
        if targets != 1 {
            return Err(Error::Schema(format!(
                "exactly one target column required, found {targets}"
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for col in &self.columns {
            if !seen.insert(col.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column '{}'", col.name)));
            }
            if !col.tags.is_empty() && !col.kind.is_numeric() {
                return Err(Error::Schema(format!(
                    "column '{}': effort/privilege tags require a numerical or ordinal column",
                    col.name
                )));
            }
            if col.levels.is_some() && col.kind != ColumnKind::Ordinal {
                return Err(Error::Schema(format!(
                    "column '{}': explicit levels are only allowed on ordinal columns",
                    col.name
                )));
            }
        }
        for tag in [ColumnTag::Effort, ColumnTag::Privilege] {
            let n = self.columns.iter().filter(|c| c.has_tag(tag)).count();
            if n > 1 {
                return Err(Error::Schema(format!(
                    "at most one column may carry the {tag:?} tag, found {n}"
                )));
            }
        }
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<&ColumnSpec> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn target(&self) -> &ColumnSpec {
        self.columns
            .iter()
            .find(|c| c.kind == ColumnKind::Target)
            .expect("validated schema has a target")
    }

    pub fn tagged(&self, tag: ColumnTag) -> Option<&ColumnSpec> {
        self.columns.iter().find(|c| c.has_tag(tag))
    }

    pub fn protected(&self) -> impl Iterator<Item = &ColumnSpec> {
        self.columns
            .iter()
            .filter(|c| c.kind == ColumnKind::Protected)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_schema_document() {
        let schema = Schema::from_json(
            r#"{"columns":[
                {"name":"sex","kind":"protected"},
                {"name":"capital-gain","kind":"numerical","tags":["privilege"]},
                {"name":"hours-per-week","kind":"numerical","tags":["effort"]},
                {"name":"income","kind":"target","positive_label":">50K"}
            ],"missing_marker":"?"}"#,
        )
        .unwrap();
        assert_eq!(schema.target().name, "income");
        assert_eq!(
            schema.tagged(ColumnTag::Effort).unwrap().name,
            "hours-per-week"
        );
        assert_eq!(schema.delimiter, ',');
    }

    #[test]
    fn rejects_two_targets() {
        let err = Schema::new(vec![
            ColumnSpec::new("a", ColumnKind::Target),
            ColumnSpec::new("b", ColumnKind::Target),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }

    #[test]
    fn rejects_privilege_tag_on_categorical() {
        let err = Schema::new(vec![
            ColumnSpec::new("y", ColumnKind::Target),
            ColumnSpec::new("occ", ColumnKind::Categorical).tagged(ColumnTag::Privilege),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }
}
