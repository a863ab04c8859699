use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::zeta::{EffortWeighting, ZetaCell};
use crate::dataset::{
    effort_threshold, privilege_threshold, ColumnKind, ColumnTag, EffortScope, EffortThresholds,
    PrivilegeThreshold, Table,
};
use crate::groupstats::RateMode;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NotionKind {
    EP,
    DP,
    CDP,
    SEP,
    CSEP,
    #[serde(rename = "SEP_relaxed")]
    SepRelaxed,
}

impl NotionKind {
    pub fn name(self) -> &'static str {
        match self {
            NotionKind::EP => "EP",
            NotionKind::DP => "DP",
            NotionKind::CDP => "CDP",
            NotionKind::SEP => "SEP",
            NotionKind::CSEP => "CSEP",
            NotionKind::SepRelaxed => "SEP_relaxed",
        }
    }

    pub fn needs_conditional(self) -> bool {
        matches!(self, NotionKind::CDP | NotionKind::CSEP)
    }

    pub fn needs_privilege(self) -> bool {
        matches!(
            self,
            NotionKind::SEP | NotionKind::CSEP | NotionKind::SepRelaxed
        )
    }

    pub fn needs_effort(self) -> bool {
        matches!(self, NotionKind::SEP | NotionKind::CSEP)
    }
}

impl std::str::FromStr for NotionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "EP" => NotionKind::EP,
            "DP" => NotionKind::DP,
            "CDP" => NotionKind::CDP,
            "SEP" => NotionKind::SEP,
            "CSEP" => NotionKind::CSEP,
            "SEP_RELAXED" | "SEP-RELAXED" => NotionKind::SepRelaxed,
            other => return Err(Error::Config(format!("unknown notion '{other}'"))),
        })
    }
}

impl std::fmt::Display for NotionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivilegeSpec {
    /// Defaults to the column tagged `privilege` in the schema.
    #[serde(default)]
    pub column: Option<String>,
    /// Privileged share in percent.
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffortSpec {
    /// Defaults to the column tagged `effort` in the schema.
    #[serde(default)]
    pub column: Option<String>,
    #[serde(default)]
    pub scope: EffortScope,
}

/// Normalizer of the effort-weighted right-hand side of the privileged
/// false-positive term.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum T3Normalizer {
    /// Sum of weights over the high-effort rows with a negative label, so the
    /// term stays a difference of weighted averages.
    #[default]
    NegativeSubset,
    /// Sum of weights over all high-effort rows (shared with the effort term).
    AllHighEffort,
}

fn default_epsilon() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NotionConfig {
    pub kind: NotionKind,
    pub protected: String,
    /// Groups to evaluate; all levels present in the audited table by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groups: Option<Vec<String>>,
    /// Conditional categorical attribute for CDP and CSEP.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditional: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub privilege: Option<PrivilegeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effort: Option<EffortSpec>,
    #[serde(default)]
    pub zeta: EffortWeighting,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub mode: RateMode,
    #[serde(default)]
    pub t3_normalizer: T3Normalizer,
}

impl NotionConfig {
    pub fn new(kind: NotionKind, protected: &str) -> Self {
        Self {
            kind,
            protected: protected.to_string(),
            groups: None,
            conditional: None,
            privilege: None,
            effort: None,
            zeta: EffortWeighting::default(),
            epsilon: default_epsilon(),
            mode: RateMode::default(),
            t3_normalizer: T3Normalizer::default(),
        }
    }

    pub fn with_conditional(mut self, column: &str) -> Self {
        self.conditional = Some(column.to_string());
        self
    }

    pub fn with_privilege(mut self, column: &str, p: f64) -> Self {
        self.privilege = Some(PrivilegeSpec {
            column: Some(column.to_string()),
            p,
        });
        self
    }

    pub fn with_effort(mut self, column: &str, scope: EffortScope) -> Self {
        self.effort = Some(EffortSpec {
            column: Some(column.to_string()),
            scope,
        });
        self
    }

    pub fn with_zeta(mut self, zeta: EffortWeighting) -> Self {
        self.zeta = zeta;
        self
    }

    pub fn with_mode(mut self, mode: RateMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    /// Same configuration under another notion kind.
    pub fn as_kind(&self, kind: NotionKind) -> Self {
        Self {
            kind,
            ..self.clone()
        }
    }

    /// Checks kind-specific fields, independently of any data.
    pub fn validate(&self) -> Result<()> {
        let kind = self.kind;
        if !(self.epsilon >= 0.0) {
            return Err(Error::Config(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        if kind.needs_conditional() && self.conditional.is_none() {
            return Err(Error::Config(format!("{kind} needs a conditional column")));
        }
        if kind.needs_privilege() && self.privilege.is_none() {
            return Err(Error::Config(format!(
                "{kind} needs a privilege column and p"
            )));
        }
        if kind.needs_effort() {
            let effort = self
                .effort
                .as_ref()
                .ok_or_else(|| Error::Config(format!("{kind} needs an effort column")))?;
            if kind == NotionKind::SEP && effort.scope == EffortScope::PerCategoryGroup {
                return Err(Error::Config(
                    "SEP has no conditional attribute; use global or per_group effort scope".into(),
                ));
            }
        }
        self.zeta.validate()?;
        if let Some(p) = &self.privilege {
            if !(p.p > 0.0 && p.p < 100.0) {
                return Err(Error::Config(format!(
                    "p must lie in (0, 100), got {}",
                    p.p
                )));
            }
        }
        Ok(())
    }

    fn resolve_column(t: &Table, explicit: Option<&str>, tag: ColumnTag) -> Result<String> {
        match explicit {
            Some(c) => Ok(t.column(c)?.name().to_string()),
            None => t
                .tagged(tag)
                .map(|c| c.name().to_string())
                .ok_or_else(|| Error::Config(format!("no column tagged {tag:?}"))),
        }
    }

    /// Computes thresholds and effort-weight reference scales on `t`, for every
    /// privilege/effort spec present (also when the kind does not use them).
    pub fn resolve(&self, t: &Table) -> Result<ResolvedNotion> {
        self.validate()?;
        let prot = t.column(&self.protected)?;
        if prot.kind() != ColumnKind::Protected && prot.kind() != ColumnKind::Categorical {
            return Err(Error::Config(format!(
                "protected attribute '{}' must be categorical",
                self.protected
            )));
        }
        t.levels(&self.protected)?;
        if let Some(cond) = &self.conditional {
            t.levels(cond)?;
        }

        let privilege = match &self.privilege {
            Some(spec) => {
                let col = Self::resolve_column(t, spec.column.as_deref(), ColumnTag::Privilege)?;
                Some(privilege_threshold(t, Some(&col), spec.p)?)
            }
            None => None,
        };

        let (effort, effort_max) = match &self.effort {
            Some(spec) => {
                let col = Self::resolve_column(t, spec.column.as_deref(), ColumnTag::Effort)?;
                if self.kind == NotionKind::CSEP {
                    let cond = self.conditional.as_deref().unwrap_or_default();
                    if Some(cond) == privilege.as_ref().map(|p| p.column.as_str()) || cond == col {
                        return Err(Error::Config(
                            "the conditional attribute must differ from the privilege and effort columns"
                                .into(),
                        ));
                    }
                }
                let thresholds = effort_threshold(
                    t,
                    Some(&col),
                    spec.scope,
                    Some(&self.protected),
                    self.conditional.as_deref(),
                )?;
                let reference = EffortReference::compute(
                    t,
                    &col,
                    &self.protected,
                    self.conditional.as_deref(),
                )?;
                (Some(thresholds), Some(reference))
            }
            None => (None, None),
        };

        Ok(ResolvedNotion {
            config: self.clone(),
            privilege,
            effort,
            effort_max,
        })
    }
}

/// Largest observed effort per scope cell, the reference scale of the weighting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffortReference {
    pub global: f64,
    pub groups: BTreeMap<String, f64>,
    #[serde(default)]
    pub cells: BTreeMap<String, BTreeMap<String, f64>>,
}

impl EffortReference {
    fn compute(t: &Table, effort: &str, protected: &str, category: Option<&str>) -> Result<Self> {
        let x = t.numeric(effort)?;
        let (glevels, gcodes) = t.categorical(protected)?;
        let global = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut groups: BTreeMap<String, f64> = BTreeMap::new();
        for (i, &g) in gcodes.iter().enumerate() {
            let e = groups
                .entry(glevels[g as usize].clone())
                .or_insert(f64::NEG_INFINITY);
            *e = e.max(x[i]);
        }
        let mut cells: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        if let Some(cat) = category {
            let (alevels, acodes) = t.categorical(cat)?;
            for i in 0..x.len() {
                let e = cells
                    .entry(alevels[acodes[i] as usize].clone())
                    .or_default()
                    .entry(glevels[gcodes[i] as usize].clone())
                    .or_insert(f64::NEG_INFINITY);
                *e = e.max(x[i]);
            }
        }
        Ok(Self {
            global,
            groups,
            cells,
        })
    }

    pub fn group_max(&self, group: &str) -> f64 {
        self.groups.get(group).copied().unwrap_or(self.global)
    }

    pub fn cell_max(&self, category: &str, group: &str) -> f64 {
        self.cells
            .get(category)
            .and_then(|m| m.get(group))
            .copied()
            .unwrap_or_else(|| self.group_max(group))
    }
}

/// A notion configuration with all data-dependent parameters fixed.
///
/// Resolving on a training split and auditing a held-out split with the
/// same `ResolvedNotion` keeps the thresholds of the training population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedNotion {
    pub config: NotionConfig,
    pub privilege: Option<PrivilegeThreshold>,
    pub effort: Option<EffortThresholds>,
    pub effort_max: Option<EffortReference>,
}

impl ResolvedNotion {
    pub fn kind(&self) -> NotionKind {
        self.config.kind
    }

    /// Effort cutoff and weighting cell for `group` (and `category` under CSEP).
    pub fn zeta_cell(&self, group: &str, category: Option<&str>) -> Option<ZetaCell> {
        let effort = self.effort.as_ref()?;
        let max = self.effort_max.as_ref()?;
        let threshold = effort.cutoff(group, category);
        let max = match category {
            Some(a) => max.cell_max(a, group),
            None => match effort.scope {
                EffortScope::Global => max.global,
                _ => max.group_max(group),
            },
        };
        Some(ZetaCell { threshold, max })
    }

    /// Same thresholds, evaluated as another notion kind. Fails if the kind
    /// needs parameters that were not resolved.
    pub fn as_kind(&self, kind: NotionKind) -> Result<ResolvedNotion> {
        let config = self.config.as_kind(kind);
        config.validate()?;
        if kind.needs_privilege() && self.privilege.is_none()
            || kind.needs_effort() && self.effort.is_none()
        {
            return Err(Error::Config(format!(
                "{kind} needs thresholds that were not resolved"
            )));
        }
        Ok(ResolvedNotion {
            config,
            ..self.clone()
        })
    }
}
