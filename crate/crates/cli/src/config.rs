//! Run configuration: one JSON file plus command-line overrides.

use std::path::{Path, PathBuf};

use fairsep_core::dataset::{EncodeOptions, Schema};
use fairsep_core::learner::ReductionParams;
use fairsep_core::notions::{NotionConfig, NotionKind, PrivilegeSpec};
use fairsep_core::privilege::ExtractionParams;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Everything a command needs besides the input files.
///
/// Relative paths are resolved against the working directory. The single
/// `seed` drives the train/test split, the base learner and the permutation
/// repeats.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub data: Option<PathBuf>,
    #[serde(default)]
    pub schema: Option<PathBuf>,
    /// Output directory; `out` when unset.
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub notion: Option<NotionConfig>,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub encode: EncodeOptions,
    #[serde(default)]
    pub learner: ReductionParams,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub audit: AuditConfig,
    #[serde(default)]
    pub privilege: PrivilegeConfig,
    #[serde(default)]
    pub report: ReportConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    /// Share of rows held out, stratified by (protected group, label).
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
}

fn default_test_fraction() -> f64 {
    0.3
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            test_fraction: default_test_fraction(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    /// Train under the notion's constraints; otherwise the notion is only
    /// used for the held-out audit.
    #[serde(default = "default_true")]
    pub constrained: bool,
    /// Also fit the unconstrained model and report it alongside.
    #[serde(default = "default_true")]
    pub baseline: bool,
}

fn default_true() -> bool {
    true
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            constrained: true,
            baseline: true,
        }
    }
}

/// Which rows of the data an audit covers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rows {
    #[default]
    All,
    Train,
    Test,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    /// CSV with a `score` column and optionally a `row` column holding
    /// 0-based data row indices.
    #[serde(default)]
    pub predictions: Option<PathBuf>,
    /// Trained model JSON, scored on the selected rows.
    #[serde(default)]
    pub model: Option<PathBuf>,
    /// Audit the labels themselves.
    #[serde(default)]
    pub ground_truth: bool,
    #[serde(default)]
    pub rows: Rows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrivilegeConfig {
    /// Non-protected group to fit on; the group with the higher label rate
    /// when unset.
    #[serde(default)]
    pub group: Option<String>,
    /// Column swept by `sweep-p`; the privilege-tagged column when unset.
    #[serde(default)]
    pub column: Option<String>,
    #[serde(default = "default_grid")]
    pub grid: Vec<f64>,
    #[serde(default = "default_ratio_rule")]
    pub ratio_rule: f64,
    /// Denominator group of the ratio; the higher label rate when unset.
    #[serde(default)]
    pub advantaged: Option<String>,
    #[serde(default)]
    pub extraction: ExtractionParams,
}

fn default_grid() -> Vec<f64> {
    (1..=20).map(f64::from).collect()
}

fn default_ratio_rule() -> f64 {
    0.8
}

impl Default for PrivilegeConfig {
    fn default() -> Self {
        Self {
            group: None,
            column: None,
            grid: default_grid(),
            ratio_rule: default_ratio_rule(),
            advantaged: None,
            extraction: ExtractionParams::default(),
        }
    }
}

/// A finished `train` run to draw in the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRef {
    pub name: String,
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    #[serde(default)]
    pub runs: Vec<RunRef>,
    /// Upper-open bin edges of the effort axis; quintiles of the data when unset.
    #[serde(default)]
    pub effort_bins: Option<Vec<f64>>,
    #[serde(default = "default_true")]
    pub by_category: bool,
    #[serde(default = "default_true")]
    pub subgroups: bool,
    #[serde(default = "default_true")]
    pub effort_ratio: bool,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            runs: Vec::new(),
            effort_bins: None,
            by_category: true,
            subgroups: true,
            effort_ratio: true,
        }
    }
}

/// Command-line values that win over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub data: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub notion: Option<NotionKind>,
    pub p: Option<f64>,
    pub epsilon: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub ground_truth: bool,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    /// Applies `o` on top of the file values.
    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(d) = &o.data {
            self.data = Some(d.clone());
        }
        if let Some(s) = &o.schema {
            self.schema = Some(s.clone());
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(d) = &o.out {
            self.out = Some(d.clone());
        }
        if let Some(p) = &o.predictions {
            self.audit.predictions = Some(p.clone());
        }
        if let Some(m) = &o.model {
            self.audit.model = Some(m.clone());
        }
        if o.ground_truth {
            self.audit.ground_truth = true;
        }
        if let Some(kind) = o.notion {
            match &mut self.notion {
                Some(n) => n.kind = kind,
                None => {
                    let protected = self.default_protected()?;
                    self.notion = Some(NotionConfig::new(kind, &protected));
                }
            }
        }
        if let Some(p) = o.p {
            let notion = self
                .notion
                .as_mut()
                .ok_or_else(|| CliError::Usage("--p needs a notion (config or --notion)".into()))?;
            match &mut notion.privilege {
                Some(spec) => spec.p = p,
                None => notion.privilege = Some(PrivilegeSpec { column: None, p }),
            }
        }
        if let Some(e) = o.epsilon {
            let notion = self.notion.as_mut().ok_or_else(|| {
                CliError::Usage("--epsilon needs a notion (config or --notion)".into())
            })?;
            notion.epsilon = e;
        }
        self.learner.base.seed = self.seed;
        self.privilege.extraction.seed = self.seed;
        Ok(())
    }

    fn default_protected(&self) -> Result<String, CliError> {
        let schema = self.load_schema()?;
        let first = schema.protected().next().map(|c| c.name.clone());
        first.ok_or_else(|| CliError::Usage("schema has no protected column".into()))
    }

    pub fn load_schema(&self) -> Result<Schema, CliError> {
        let path = self
            .schema
            .as_ref()
            .ok_or_else(|| CliError::Usage("no schema given (--schema or \"schema\")".into()))?;
        Ok(Schema::from_path(path)?)
    }

    pub fn data_path(&self) -> Result<&Path, CliError> {
        self.data
            .as_deref()
            .ok_or_else(|| CliError::Usage("no data given (--data or \"data\")".into()))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn notion(&self) -> Result<&NotionConfig, CliError> {
        self.notion
            .as_ref()
            .ok_or_else(|| CliError::Usage("no notion given (--notion or \"notion\")".into()))
    }
}
