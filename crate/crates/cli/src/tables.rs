//! Data loading and the subgroup statistics tables shared by the commands.

use std::collections::BTreeMap;

use fairsep_core::dataset::{load_csv, stratified_split, Table};
use fairsep_core::groupstats::{frame, indicators, Mask, RateMode, SubgroupFrame};
use fairsep_core::notions::ResolvedNotion;

use crate::config::{Rows, RunConfig};
use crate::output::{num, RunDir};
use crate::CliError;

/// Both readings of a score vector, hard first.
pub const MODES: [RateMode; 2] = [RateMode::Hard { cutoff: 0.5 }, RateMode::Expected];

pub const STRATA: [&str; 4] = [
    "privileged",
    "underprivileged",
    "underprivileged_low_effort",
    "underprivileged_high_effort",
];

pub fn load_table(cfg: &RunConfig) -> Result<Table, CliError> {
    let schema = cfg.load_schema()?;
    Ok(load_csv(cfg.data_path()?, &schema)?)
}

/// The notion's protected column, else the schema's first protected column.
pub fn protected_column(cfg: &RunConfig, t: &Table) -> Result<String, CliError> {
    if let Some(n) = &cfg.notion {
        return Ok(n.protected.clone());
    }
    t.protected_column()
        .map(|c| c.name().to_string())
        .ok_or_else(|| CliError::Usage("no protected column in notion or schema".into()))
}

/// Seeded (train, test) row indices.
pub fn split_rows(cfg: &RunConfig, t: &Table) -> Result<(Vec<usize>, Vec<usize>), CliError> {
    let protected = protected_column(cfg, t)?;
    Ok(stratified_split(
        t,
        &protected,
        cfg.split.test_fraction,
        cfg.seed,
    )?)
}

/// Row indices selected by `rows`.
pub fn select_rows(cfg: &RunConfig, t: &Table, rows: Rows) -> Result<Vec<usize>, CliError> {
    Ok(match rows {
        Rows::All => (0..t.n_rows()).collect(),
        Rows::Train => split_rows(cfg, t)?.0,
        Rows::Test => split_rows(cfg, t)?.1,
    })
}

/// The present group with the highest label rate (ties: first by name).
pub fn advantaged_group(t: &Table, protected: &str) -> Result<String, CliError> {
    let groups = decoded(t, protected)?;
    let mut best: Option<(String, f64)> = None;
    for g in t.present_levels(protected)? {
        let (mut n, mut pos) = (0usize, 0usize);
        for (name, &y) in groups.iter().zip(t.labels()) {
            if *name == g {
                n += 1;
                pos += usize::from(y);
            }
        }
        let rate = pos as f64 / n.max(1) as f64;
        if best.as_ref().is_none_or(|(_, r)| rate > *r) {
            best = Some((g, rate));
        }
    }
    best.map(|(g, _)| g)
        .ok_or_else(|| CliError::Usage(format!("'{protected}' has no groups")))
}

/// Codes of a categorical column decoded to level names.
pub fn decoded(t: &Table, column: &str) -> Result<Vec<String>, CliError> {
    let (levels, codes) = t.categorical(column)?;
    Ok(codes.iter().map(|&c| levels[c as usize].clone()).collect())
}

/// Levels present in `t` ordered by ascending count of positive labels,
/// ties by name.
pub fn categories_by_positives(t: &Table, column: &str) -> Result<Vec<(String, usize)>, CliError> {
    let names = decoded(t, column)?;
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for (name, &y) in names.iter().zip(t.labels()) {
        *counts.entry(name.clone()).or_default() += usize::from(y);
    }
    let mut out: Vec<(String, usize)> = counts.into_iter().collect();
    out.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
    Ok(out)
}

/// Per-row privilege and effort flags under resolved thresholds.
#[derive(Debug, Clone)]
pub struct Strata {
    pub privileged: Vec<bool>,
    pub high_effort: Vec<bool>,
    pub effort: Vec<f64>,
}

impl Strata {
    /// `None` unless both a privilege and an effort threshold were resolved.
    pub fn new(t: &Table, r: &ResolvedNotion) -> Result<Option<Strata>, CliError> {
        let (Some(p), Some(e)) = (&r.privilege, &r.effort) else {
            return Ok(None);
        };
        let xp = t.numeric(&p.column)?;
        let xe = t.numeric(&e.column)?;
        let groups = decoded(t, &r.config.protected)?;
        let categories = match &r.config.conditional {
            Some(c) => Some(decoded(t, c)?),
            None => None,
        };
        let high_effort = (0..t.n_rows())
            .map(|i| {
                let cat = categories.as_ref().map(|c| c[i].as_str());
                xe[i] >= e.cutoff(&groups[i], cat)
            })
            .collect();
        Ok(Some(Strata {
            privileged: xp.iter().map(|&x| p.is_privileged(x)).collect(),
            high_effort,
            effort: xe.to_vec(),
        }))
    }

    pub fn member(&self, stratum: &str, i: usize) -> bool {
        match stratum {
            "privileged" => self.privileged[i],
            "underprivileged" => !self.privileged[i],
            "underprivileged_low_effort" => !self.privileged[i] && !self.high_effort[i],
            "underprivileged_high_effort" => !self.privileged[i] && self.high_effort[i],
            _ => false,
        }
    }
}

/// One line of a statistics table.
#[derive(Debug, Clone)]
pub struct StatRow {
    pub mode: RateMode,
    pub category: Option<String>,
    pub group: String,
    pub stratum: Option<String>,
    pub frame: SubgroupFrame,
}

fn mask_where(n: usize, f: impl Fn(usize) -> bool) -> Mask {
    Mask::from_vec((0..n).map(f).collect())
}

pub fn group_stats(t: &Table, scores: &[f64], protected: &str) -> Result<Vec<StatRow>, CliError> {
    let groups = decoded(t, protected)?;
    let present = t.present_levels(protected)?;
    let mut out = Vec::new();
    for mode in MODES {
        let positive = indicators(t, scores, mode)?;
        for g in &present {
            let m = mask_where(t.n_rows(), |i| groups[i] == *g);
            out.push(StatRow {
                mode,
                category: None,
                group: g.clone(),
                stratum: None,
                frame: frame(t.labels(), &positive, &m),
            });
        }
    }
    Ok(out)
}

/// Per (category, group); categories ordered by ascending positive count.
pub fn category_stats(
    t: &Table,
    scores: &[f64],
    protected: &str,
    conditional: &str,
) -> Result<Vec<StatRow>, CliError> {
    let groups = decoded(t, protected)?;
    let cats = decoded(t, conditional)?;
    let present = t.present_levels(protected)?;
    let order = categories_by_positives(t, conditional)?;
    let mut out = Vec::new();
    for mode in MODES {
        let positive = indicators(t, scores, mode)?;
        for (a, _) in &order {
            for g in &present {
                let m = mask_where(t.n_rows(), |i| cats[i] == *a && groups[i] == *g);
                out.push(StatRow {
                    mode,
                    category: Some(a.clone()),
                    group: g.clone(),
                    stratum: None,
                    frame: frame(t.labels(), &positive, &m),
                });
            }
        }
    }
    Ok(out)
}

/// Per (category or all, group, privilege/effort stratum).
pub fn effort_stats(
    t: &Table,
    scores: &[f64],
    r: &ResolvedNotion,
) -> Result<Option<Vec<StatRow>>, CliError> {
    let Some(strata) = Strata::new(t, r)? else {
        return Ok(None);
    };
    let protected = &r.config.protected;
    let groups = decoded(t, protected)?;
    let present = t.present_levels(protected)?;
    let mut scopes: Vec<Option<String>> = vec![None];
    let cats = match &r.config.conditional {
        Some(c) => {
            scopes.extend(
                categories_by_positives(t, c)?
                    .into_iter()
                    .map(|(a, _)| Some(a)),
            );
            Some(decoded(t, c)?)
        }
        None => None,
    };
    let mut out = Vec::new();
    for mode in MODES {
        let positive = indicators(t, scores, mode)?;
        for scope in &scopes {
            for g in &present {
                for s in STRATA {
                    let m = mask_where(t.n_rows(), |i| {
                        groups[i] == *g
                            && strata.member(s, i)
                            && match (scope, &cats) {
                                (Some(a), Some(c)) => c[i] == *a,
                                _ => true,
                            }
                    });
                    out.push(StatRow {
                        mode,
                        category: scope.clone(),
                        group: g.clone(),
                        stratum: Some(s.to_string()),
                        frame: frame(t.labels(), &positive, &m),
                    });
                }
            }
        }
    }
    Ok(Some(out))
}

fn frame_cells(f: &SubgroupFrame) -> Vec<String> {
    vec![
        f.n.to_string(),
        f.positives.to_string(),
        f.negatives.to_string(),
        num(f.ppr),
        num(f.tpr),
        num(f.fpr),
    ]
}

const FRAME_HEADER: [&str; 6] = ["n", "positives", "negatives", "ppr", "tpr", "fpr"];

/// Writes `stats.csv`, plus `category_stats.csv` and `effort_stats.csv` when
/// the notion defines a conditional attribute or privilege/effort thresholds.
pub fn write_stats(
    dir: &mut RunDir,
    t: &Table,
    scores: &[f64],
    protected: &str,
    resolved: Option<&ResolvedNotion>,
) -> Result<(), CliError> {
    let rows = group_stats(t, scores, protected)?;
    let mut lines = Vec::new();
    for mode in MODES {
        let in_mode: Vec<&StatRow> = rows.iter().filter(|r| r.mode == mode).collect();
        let top = in_mode
            .iter()
            .filter_map(|r| r.frame.ppr)
            .fold(0.0, f64::max);
        for r in in_mode {
            let mut line = vec![mode.name().to_string(), r.group.clone()];
            line.extend(frame_cells(&r.frame));
            let label_rate = (r.frame.n > 0).then(|| r.frame.positives as f64 / r.frame.n as f64);
            line.push(num(label_rate));
            line.push(num(r.frame.ppr.filter(|_| top > 0.0).map(|p| p / top)));
            lines.push(line);
        }
    }
    let mut header = vec!["mode", "group"];
    header.extend(FRAME_HEADER);
    header.extend(["label_rate", "ppr_ratio_to_max"]);
    dir.write_csv("stats.csv", &header, &lines)?;

    let Some(r) = resolved else { return Ok(()) };
    if let Some(cond) = &r.config.conditional {
        let rows = category_stats(t, scores, protected, cond)?;
        let lines: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                let mut line = vec![
                    r.mode.name().to_string(),
                    r.category.clone().unwrap_or_default(),
                    r.group.clone(),
                ];
                line.extend(frame_cells(&r.frame));
                line
            })
            .collect();
        let mut header = vec!["mode", "category", "group"];
        header.extend(FRAME_HEADER);
        dir.write_csv("category_stats.csv", &header, &lines)?;
    }
    if let Some(rows) = effort_stats(t, scores, r)? {
        let lines: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                let mut line = vec![
                    r.mode.name().to_string(),
                    r.category.clone().unwrap_or_else(|| "*".into()),
                    r.group.clone(),
                    r.stratum.clone().unwrap_or_default(),
                ];
                line.extend(frame_cells(&r.frame));
                line
            })
            .collect();
        let mut header = vec!["mode", "category", "group", "stratum"];
        header.extend(FRAME_HEADER);
        dir.write_csv("effort_stats.csv", &header, &lines)?;
    }
    Ok(())
}
