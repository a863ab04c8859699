use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::Path;

use log::info;

use super::schema::{ColumnKind, ColumnSpec, ColumnTag, Schema};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnValues {
    /// Levels are sorted; `codes[i]` indexes into `levels`.
    Categorical {
        levels: Vec<String>,
        codes: Vec<u32>,
    },
    Numeric(Vec<f64>),
}

impl ColumnValues {
    fn len(&self) -> usize {
        match self {
            ColumnValues::Categorical { codes, .. } => codes.len(),
            ColumnValues::Numeric(v) => v.len(),
        }
    }

    fn select(&self, rows: &[usize]) -> ColumnValues {
        match self {
            ColumnValues::Categorical { levels, codes } => ColumnValues::Categorical {
                levels: levels.clone(),
                codes: rows.iter().map(|&i| codes[i]).collect(),
            },
            ColumnValues::Numeric(v) => ColumnValues::Numeric(rows.iter().map(|&i| v[i]).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub spec: ColumnSpec,
    pub values: ColumnValues,
}

impl Column {
    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn kind(&self) -> ColumnKind {
        self.spec.kind
    }

    /// Raw string of row `i`, as it would be written back to CSV.
    pub fn raw_value(&self, i: usize) -> String {
        match &self.values {
            ColumnValues::Categorical { levels, codes } => levels[codes[i] as usize].clone(),
            ColumnValues::Numeric(v) => match &self.spec.levels {
                Some(levels) => levels[v[i] as usize].clone(),
                None => format!("{}", v[i]),
            },
        }
    }
}

/// Immutable columnar dataset with a binary target.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    schema: Schema,
    columns: Vec<Column>,
    labels: Vec<u8>,
    dropped_rows: usize,
}

impl Table {
    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    /// Feature columns in schema order (the target is held separately).
    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn target_name(&self) -> &str {
        &self.schema.target().name
    }

    /// Rows removed at load time because a used column held the missing marker.
    pub fn dropped_rows(&self) -> usize {
        self.dropped_rows
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.columns
            .iter()
            .find(|c| c.spec.name == name)
            .ok_or_else(|| Error::Schema(format!("unknown column '{name}'")))
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.iter().any(|c| c.spec.name == name)
    }

    pub fn numeric(&self, name: &str) -> Result<&[f64]> {
        match &self.column(name)?.values {
            ColumnValues::Numeric(v) => Ok(v),
            ColumnValues::Categorical { .. } => Err(Error::Schema(format!(
                "column '{name}' is categorical, a numeric column is required"
            ))),
        }
    }

    pub fn categorical(&self, name: &str) -> Result<(&[String], &[u32])> {
        match &self.column(name)?.values {
            ColumnValues::Categorical { levels, codes } => Ok((levels, codes)),
            ColumnValues::Numeric(_) => Err(Error::Schema(format!(
                "column '{name}' is numeric, a categorical column is required"
            ))),
        }
    }

    pub fn levels(&self, name: &str) -> Result<&[String]> {
        self.categorical(name).map(|(levels, _)| levels)
    }

    /// Levels that actually occur in the rows, in level order.
    pub fn present_levels(&self, name: &str) -> Result<Vec<String>> {
        let (levels, codes) = self.categorical(name)?;
        let mut seen = vec![false; levels.len()];
        for &c in codes {
            seen[c as usize] = true;
        }
        Ok(levels
            .iter()
            .zip(seen)
            .filter(|(_, s)| *s)
            .map(|(l, _)| l.clone())
            .collect())
    }

    pub fn tagged(&self, tag: ColumnTag) -> Option<&Column> {
        self.columns.iter().find(|c| c.spec.has_tag(tag))
    }

    pub fn protected_column(&self) -> Option<&Column> {
        self.columns
            .iter()
            .find(|c| c.spec.kind == ColumnKind::Protected)
    }

    /// New table holding `rows` (in the given order). Category levels are kept
    /// so codes stay comparable with the parent table.
    pub fn select_rows(&self, rows: &[usize]) -> Table {
        Table {
            schema: self.schema.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| Column {
                    spec: c.spec.clone(),
                    values: c.values.select(rows),
                })
                .collect(),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            dropped_rows: 0,
        }
    }

    /// Writes the table back as CSV in schema column order. Positive targets
    /// are written as the schema's positive label so that [`read_csv`] with the
    /// same schema reproduces the values.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .delimiter(self.schema.delimiter as u8)
            .from_writer(writer);
        let target = self.schema.target();
        let (pos, neg) = match target.positive_label.as_deref() {
            Some("0") => ("0".to_string(), "1".to_string()),
            Some(label) => (label.to_string(), "0".to_string()),
            None => ("1".to_string(), "0".to_string()),
        };
        out.write_record(self.schema.columns.iter().map(|c| c.name.as_str()))?;
        for i in 0..self.n_rows() {
            let record: Vec<String> = self
                .schema
                .columns
                .iter()
                .map(|spec| {
                    if spec.kind == ColumnKind::Target {
                        if self.labels[i] == 1 {
                            pos.clone()
                        } else {
                            neg.clone()
                        }
                    } else {
                        self.column(&spec.name)
                            .map(|c| c.raw_value(i))
                            .unwrap_or_default()
                    }
                })
                .collect();
            out.write_record(&record)?;
        }
        out.flush().map_err(|source| Error::Io {
            path: "<csv writer>".into(),
            source,
        })?;
        Ok(())
    }
}

/// Loads a CSV file with a header row according to `schema`.
pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Table> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let table = read_csv(std::io::BufReader::new(file), schema)?;
    info!(
        "loaded {} rows from {} ({} dropped for missing values)",
        table.n_rows(),
        path.display(),
        table.dropped_rows()
    );
    Ok(table)
}

enum RawColumn {
    Strings(Vec<String>),
    Numbers(Vec<f64>),
}

pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<Table> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter as u8)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let mut positions = Vec::with_capacity(schema.columns.len());
    for spec in &schema.columns {
        let idx = headers
            .iter()
            .position(|h| h == spec.name)
            .ok_or_else(|| Error::Schema(format!("column '{}' not found in header", spec.name)))?;
        positions.push(idx);
    }

    let mut raw: Vec<RawColumn> = schema
        .columns
        .iter()
        .map(|spec| {
            if spec.kind.is_numeric() {
                RawColumn::Numbers(Vec::new())
            } else {
                RawColumn::Strings(Vec::new())
            }
        })
        .collect();
    let mut dropped = 0usize;
    let mut record = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut record) {
            Ok(true) => {}
            Ok(false) => break,
            Err(e) => return Err(csv_error(e)),
        }
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if positions
            .iter()
            .any(|&p| record.get(p) == Some(schema.missing_marker.as_str()))
        {
            dropped += 1;
            continue;
        }
        for ((spec, &pos), col) in schema.columns.iter().zip(&positions).zip(raw.iter_mut()) {
            let field = record.get(pos).unwrap_or("");
            match col {
                RawColumn::Strings(v) => v.push(field.to_string()),
                RawColumn::Numbers(v) => v.push(parse_numeric(spec, field, line)?),
            }
        }
    }

    let mut columns = Vec::new();
    let mut labels = Vec::new();
    for (spec, col) in schema.columns.iter().zip(raw) {
        match (spec.kind, col) {
            (ColumnKind::Target, RawColumn::Strings(values)) => {
                labels = binarize_target(spec, &values)?;
            }
            (_, RawColumn::Strings(values)) => {
                let values = encode_categorical(&values);
                if spec.kind == ColumnKind::Protected {
                    if let ColumnValues::Categorical { levels, .. } = &values {
                        if !levels.is_empty() && levels.len() < 2 {
                            return Err(Error::Schema(format!(
                                "protected column '{}' needs at least 2 distinct values",
                                spec.name
                            )));
                        }
                    }
                }
                columns.push(Column {
                    spec: spec.clone(),
                    values,
                });
            }
            (_, RawColumn::Numbers(values)) => columns.push(Column {
                spec: spec.clone(),
                values: ColumnValues::Numeric(values),
            }),
        }
    }

    Ok(Table {
        schema: schema.clone(),
        columns,
        labels,
        dropped_rows: dropped,
    })
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

fn parse_numeric(spec: &ColumnSpec, field: &str, line: u64) -> Result<f64> {
    if let Some(levels) = &spec.levels {
        return levels
            .iter()
            .position(|l| l == field)
            .map(|i| i as f64)
            .ok_or_else(|| Error::Parse {
                line,
                message: format!("'{field}' is not a declared level of '{}'", spec.name),
            });
    }
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            line,
            message: format!("column '{}': '{field}' is not a finite number", spec.name),
        }),
    }
}

fn encode_categorical(values: &[String]) -> ColumnValues {
    let levels: Vec<String> = values
        .iter()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .cloned()
        .collect();
    let lookup: BTreeMap<&str, u32> = levels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i as u32))
        .collect();
    let codes = values.iter().map(|v| lookup[v.as_str()]).collect();
    ColumnValues::Categorical { levels, codes }
}

fn binarize_target(spec: &ColumnSpec, values: &[String]) -> Result<Vec<u8>> {
    if let Some(positive) = &spec.positive_label {
        return Ok(values.iter().map(|v| u8::from(v == positive)).collect());
    }
    let distinct: BTreeSet<&str> = values.iter().map(String::as_str).collect();
    if distinct.len() > 2 {
        return Err(Error::Schema(format!(
            "target '{}' has {} distinct values and no positive_label rule",
            spec.name,
            distinct.len()
        )));
    }
    values
        .iter()
        .map(|v| match v.as_str() {
            "1" => Ok(1),
            "0" => Ok(0),
            other => Err(Error::Schema(format!(
                "target '{}' value '{other}' is not 0/1; set positive_label",
                spec.name
            ))),
        })
        .collect()
}

/// In-memory construction of tables, mostly for tests and synthetic data.
#[derive(Debug, Default)]
pub struct TableBuilder {
    specs: Vec<ColumnSpec>,
    columns: Vec<Column>,
    labels: Option<Vec<u8>>,
}

impl TableBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn categorical<S: AsRef<str>>(
        mut self,
        name: &str,
        kind: ColumnKind,
        values: &[S],
    ) -> Self {
        let spec = ColumnSpec::new(name, kind);
        let owned: Vec<String> = values.iter().map(|v| v.as_ref().to_string()).collect();
        self.specs.push(spec.clone());
        self.columns.push(Column {
            spec,
            values: encode_categorical(&owned),
        });
        self
    }

    pub fn numeric(mut self, name: &str, kind: ColumnKind, values: Vec<f64>) -> Self {
        let spec = ColumnSpec::new(name, kind);
        self.specs.push(spec.clone());
        self.columns.push(Column {
            spec,
            values: ColumnValues::Numeric(values),
        });
        self
    }

    /// Tags the most recently added column.
    pub fn tag(mut self, tag: ColumnTag) -> Self {
        if let (Some(spec), Some(col)) = (self.specs.last_mut(), self.columns.last_mut()) {
            spec.tags.push(tag);
            col.spec.tags.push(tag);
        }
        self
    }

    pub fn target(mut self, name: &str, labels: Vec<u8>) -> Self {
        let mut spec = ColumnSpec::new(name, ColumnKind::Target);
        spec.positive_label = Some("1".to_string());
        self.specs.push(spec);
        self.labels = Some(labels);
        self
    }

    pub fn build(self) -> Result<Table> {
        let schema = Schema::new(self.specs)?;
        let labels = self
            .labels
            .ok_or_else(|| Error::Schema("target column missing".into()))?;
        if labels.iter().any(|&y| y > 1) {
            return Err(Error::Schema("target values must be 0 or 1".into()));
        }
        for col in &self.columns {
            if col.values.len() != labels.len() {
                return Err(Error::Schema(format!(
                    "column '{}' has {} values, target has {}",
                    col.spec.name,
                    col.values.len(),
                    labels.len()
                )));
            }
            if col.spec.kind.is_numeric() {
                if let ColumnValues::Numeric(v) = &col.values {
                    if v.iter().any(|x| !x.is_finite()) {
                        return Err(Error::Schema(format!(
                            "column '{}' contains non-finite values",
                            col.spec.name
                        )));
                    }
                }
            }
        }
        Ok(Table {
            schema,
            columns: self.columns,
            labels,
            dropped_rows: 0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_schema() -> Schema {
        Schema::from_json(
            r#"{"columns":[
                {"name":"sex","kind":"protected"},
                {"name":"cap","kind":"numerical","tags":["privilege"]},
                {"name":"hours","kind":"numerical","tags":["effort"]},
                {"name":"occ","kind":"categorical"},
                {"name":"y","kind":"target","positive_label":"1"}
            ]}"#,
        )
        .unwrap()
    }

    #[test]
    fn drops_rows_with_missing_marker() {
        let csv =
            "sex,cap,hours,occ,y,extra\nF,0,20,A,0,?\nM,?,40,B,1,x\nM,5,40,?,1,x\nM,1,30,B,1,x\n";
        let t = read_csv(csv.as_bytes(), &toy_schema()).unwrap();
        // "extra" is not in the schema, so its marker is ignored
        assert_eq!(t.n_rows(), 2);
        assert_eq!(t.dropped_rows(), 2);
        assert_eq!(t.numeric("cap").unwrap(), &[0.0, 1.0]);
        assert_eq!(t.labels(), &[0, 1]);
    }

    #[test]
    fn empty_file_with_header() {
        let t = read_csv("sex,cap,hours,occ,y\n".as_bytes(), &toy_schema()).unwrap();
        assert_eq!(t.n_rows(), 0);
        assert_eq!(t.dropped_rows(), 0);
    }

    #[test]
    fn missing_schema_column_is_a_schema_error() {
        let err = read_csv("sex,cap,occ,y\nF,0,A,1\n".as_bytes(), &toy_schema()).unwrap_err();
        assert!(matches!(err, Error::Schema(_)), "{err}");
    }

    #[test]
    fn malformed_row_reports_line() {
        let csv = "sex,cap,hours,occ,y\nF,0,20,A,0\nM,1,2\n";
        match read_csv(csv.as_bytes(), &toy_schema()).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn bad_number_reports_line() {
        let csv = "sex,cap,hours,occ,y\nF,0,20,A,0\nF,0,20,A,0\nM,abc,2,B,1\n";
        match read_csv(csv.as_bytes(), &toy_schema()).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn target_without_rule_and_many_values_is_rejected() {
        let schema = Schema::from_json(
            r#"{"columns":[{"name":"sex","kind":"protected"},{"name":"y","kind":"target"}]}"#,
        )
        .unwrap();
        let err = read_csv("sex,y\nF,a\nM,b\nF,c\n".as_bytes(), &schema).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
        let ok = read_csv("sex,y\nF,0\nM,1\n".as_bytes(), &schema).unwrap();
        assert_eq!(ok.labels(), &[0, 1]);
    }

    #[test]
    fn protected_needs_two_levels() {
        let err = read_csv(
            "sex,cap,hours,occ,y\nF,0,1,A,0\nF,0,1,A,1\n".as_bytes(),
            &toy_schema(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }

    #[test]
    fn ordinal_levels_map_to_ranks() {
        let schema = Schema::from_json(
            r#"{"columns":[
                {"name":"sex","kind":"protected"},
                {"name":"edu","kind":"ordinal","levels":["low","mid","high"]},
                {"name":"y","kind":"target","positive_label":"yes"}
            ]}"#,
        )
        .unwrap();
        let t = read_csv("sex,edu,y\nF,high,yes\nM,low,no\n".as_bytes(), &schema).unwrap();
        assert_eq!(t.numeric("edu").unwrap(), &[2.0, 0.0]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "sex,edu,y\nF,high,yes\nM,low,0\n"
        );
    }
}
