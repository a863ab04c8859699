//! `report`: SVG charts and a markdown summary over finished runs.

use std::fmt::Write;
use std::path::Path;

use fairsep_core::dataset::Table;
use fairsep_core::groupstats::{frame, indicators, Mask, SubgroupFrame};
use fairsep_core::notions::ResolvedNotion;

use super::{accuracy, read_predictions};
use crate::config::RunRef;
use crate::output::RunDir;
use crate::svg::{grouped_bars, line_chart, panels, BarChart, LineChart, Series};
use crate::tables::{
    advantaged_group, categories_by_positives, decoded, load_table, protected_column, Strata,
};
use crate::{CliError, Outcome, RunConfig};

/// A run's held-out rows with their scores.
struct Loaded {
    name: String,
    table: Table,
    scores: Vec<f64>,
    resolved: Option<ResolvedNotion>,
}

fn load_run(
    cfg: &RunConfig,
    full: &Table,
    run: &RunRef,
) -> Result<Result<Loaded, String>, CliError> {
    let path = run.dir.join("predictions.csv");
    if !path.exists() {
        return Ok(Err(format!(
            "run '{}': {} not found",
            run.name,
            path.display()
        )));
    }
    let (scores, rows) = read_predictions(&path)?;
    let rows =
        rows.ok_or_else(|| CliError::Usage(format!("{} lacks a row column", path.display())))?;
    if let Some(bad) = rows.iter().find(|&&r| r >= full.n_rows()) {
        return Err(CliError::Usage(format!(
            "{}: row {bad} outside the data",
            path.display()
        )));
    }
    let table = full.select_rows(&rows);
    let resolved = read_thresholds(&run.dir.join("thresholds.json"))?;
    let resolved = match (resolved, &cfg.notion) {
        (Some(r), _) => Some(r),
        (None, Some(n)) => Some(n.resolve(&table)?),
        (None, None) => None,
    };
    Ok(Ok(Loaded {
        name: run.name.clone(),
        table,
        scores,
        resolved,
    }))
}

fn read_thresholds(path: &Path) -> Result<Option<ResolvedNotion>, CliError> {
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(path)?;
    let r = serde_json::from_str(&text).map_err(anyhow::Error::from)?;
    Ok(Some(r))
}

fn masked(t: &Table, positive: &[f64], keep: impl Fn(usize) -> bool) -> SubgroupFrame {
    let m = Mask::from_vec((0..t.n_rows()).map(keep).collect());
    frame(t.labels(), positive, &m)
}

/// PPR per (category, group), categories ascending by positive-label count.
fn by_category(
    title: String,
    t: &Table,
    positive: &[f64],
    protected: &str,
    conditional: Option<&str>,
) -> Result<BarChart, CliError> {
    let groups = t.present_levels(protected)?;
    let mut chart = BarChart {
        title,
        categories: Vec::new(),
        series: Vec::new(),
        y_label: "PPR".into(),
        y_max: Some(1.0),
        note: None,
    };
    let Some(cond) = conditional else {
        chart.note = Some("no conditional attribute configured".into());
        return Ok(chart);
    };
    let order = categories_by_positives(t, cond)?;
    if order.is_empty() {
        chart.note = Some("no categories".into());
        return Ok(chart);
    }
    let g_of = decoded(t, protected)?;
    let a_of = decoded(t, cond)?;
    chart.categories = order.iter().map(|(a, _)| a.clone()).collect();
    chart.series = groups
        .iter()
        .map(|g| Series {
            name: g.clone(),
            values: order
                .iter()
                .map(|(a, _)| masked(t, positive, |i| g_of[i] == *g && a_of[i] == *a).ppr)
                .collect(),
        })
        .collect();
    Ok(chart)
}

fn subgroup_panels(
    run: &Loaded,
    positive: &[f64],
    strata: &Strata,
    protected: &str,
) -> Result<Vec<BarChart>, CliError> {
    let t = &run.table;
    let groups = t.present_levels(protected)?;
    let g_of = decoded(t, protected)?;
    let mut out = Vec::new();
    for (stratum, title) in [
        ("privileged", "privileged"),
        ("underprivileged_low_effort", "underprivileged, low effort"),
        (
            "underprivileged_high_effort",
            "underprivileged, high effort",
        ),
    ] {
        let frames: Vec<SubgroupFrame> = groups
            .iter()
            .map(|g| masked(t, positive, |i| g_of[i] == *g && strata.member(stratum, i)))
            .collect();
        out.push(BarChart {
            title: title.into(),
            categories: vec!["PPR".into(), "TPR".into(), "FPR".into()],
            series: groups
                .iter()
                .zip(&frames)
                .map(|(g, f)| Series {
                    name: g.clone(),
                    values: vec![f.ppr, f.tpr, f.fpr],
                })
                .collect(),
            y_label: "rate".into(),
            y_max: Some(1.0),
            note: None,
        });
    }
    Ok(out)
}

/// Quintile edges of `x` (distinct values only).
fn quintile_edges(x: &[f64]) -> Vec<f64> {
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mut edges: Vec<f64> = (1..5)
        .map(|k| sorted[(sorted.len() * k / 5).min(sorted.len() - 1)])
        .collect();
    edges.dedup();
    edges
}

fn bin_labels(edges: &[f64]) -> Vec<String> {
    let mut out = Vec::with_capacity(edges.len() + 1);
    match edges.first() {
        Some(e) => out.push(format!("< {e}")),
        None => out.push("all".into()),
    }
    for w in edges.windows(2) {
        out.push(format!("{} to < {}", w[0], w[1]));
    }
    if let Some(e) = edges.last() {
        out.push(format!(">= {e}"));
    }
    out
}

fn bin_of(edges: &[f64], x: f64) -> usize {
    edges.iter().take_while(|&&e| x >= e).count()
}

fn fmt_rate(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into())
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let full = load_table(cfg)?;
    let protected = protected_column(cfg, &full)?;
    let conditional = cfg.notion.as_ref().and_then(|n| n.conditional.clone());
    let mode = cfg.notion.as_ref().map(|n| n.mode).unwrap_or_default();
    let rc = &cfg.report;
    let mut dir = RunDir::create(&cfg.out_dir(), "report")?;
    dir.write_json("report.config.json", cfg)?;
    let mut notes: Vec<String> = Vec::new();
    let mut md = String::new();
    let _ = writeln!(md, "# Fairness report\n");
    let _ = writeln!(
        md,
        "Data: {} rows, protected attribute `{protected}`.",
        full.n_rows()
    );
    let _ = writeln!(md, "Predicted rates use {} mode.\n", mode.name());

    if rc.by_category {
        let truth: Vec<f64> = full.labels().iter().map(|&y| f64::from(y)).collect();
        let chart = by_category(
            "Ground-truth positive rate by category".into(),
            &full,
            &truth,
            &protected,
            conditional.as_deref(),
        )?;
        if let Some(n) = &chart.note {
            notes.push(format!("ground_truth_by_category.svg is empty: {n}"));
        }
        dir.write_bytes(
            "ground_truth_by_category.svg",
            grouped_bars(&chart).as_bytes(),
        )?;
    }

    let mut runs = Vec::new();
    for r in &rc.runs {
        match load_run(cfg, &full, r)? {
            Ok(l) => runs.push(l),
            Err(note) => notes.push(format!("skipped: {note}")),
        }
    }

    let adv = advantaged_group(&full, &protected)?;
    let groups = full.present_levels(&protected)?;
    let dis = groups.iter().find(|g| **g != adv).cloned();
    if !runs.is_empty() {
        let _ = writeln!(md, "## Runs\n");
        let mut header = vec!["run".to_string(), "rows".into(), "accuracy".into()];
        for g in &groups {
            header.push(format!("PPR {g}"));
            header.push(format!("high-effort underprivileged PPR {g}"));
            header.push(format!("privileged FPR {g}"));
        }
        let _ = writeln!(md, "| {} |", header.join(" | "));
        let _ = writeln!(md, "|{}", "---|".repeat(header.len()));
    }
    for run in &runs {
        let t = &run.table;
        let positive = indicators(t, &run.scores, mode)?;
        let strata = match &run.resolved {
            Some(r) => Strata::new(t, r)?,
            None => None,
        };
        let g_of = decoded(t, &protected)?;
        let mut cells = vec![
            run.name.clone(),
            t.n_rows().to_string(),
            format!("{:.4}", accuracy(t.labels(), &positive)),
        ];
        for g in &groups {
            cells.push(fmt_rate(masked(t, &positive, |i| g_of[i] == *g).ppr));
            let (heu, pfpr) = match &strata {
                Some(s) => (
                    masked(t, &positive, |i| {
                        g_of[i] == *g && s.member("underprivileged_high_effort", i)
                    })
                    .ppr,
                    masked(t, &positive, |i| g_of[i] == *g && s.privileged[i]).fpr,
                ),
                None => (None, None),
            };
            cells.push(fmt_rate(heu));
            cells.push(fmt_rate(pfpr));
        }
        let _ = writeln!(md, "| {} |", cells.join(" | "));

        if rc.by_category {
            let chart = by_category(
                format!("{}: predicted PPR by category", run.name),
                t,
                &positive,
                &protected,
                conditional.as_deref(),
            )?;
            dir.write_bytes(
                &format!("{}_by_category.svg", run.name),
                grouped_bars(&chart).as_bytes(),
            )?;
        }
        if rc.subgroups {
            match &strata {
                Some(s) => {
                    let p = subgroup_panels(run, &positive, s, &protected)?;
                    let svg = panels(&format!("{}: subgroup rates", run.name), &p);
                    dir.write_bytes(&format!("{}_subgroups.svg", run.name), svg.as_bytes())?;
                }
                None => notes.push(format!(
                    "{}_subgroups.svg skipped: no privilege/effort thresholds",
                    run.name
                )),
            }
        }
    }

    if rc.effort_ratio && !runs.is_empty() {
        match (&dis, groups.len()) {
            (Some(dis), 2) => {
                let edges = match &rc.effort_bins {
                    Some(e) => e.clone(),
                    None => match runs
                        .iter()
                        .find_map(|r| r.resolved.as_ref()?.effort.clone())
                    {
                        Some(e) => quintile_edges(full.numeric(&e.column)?),
                        None => Vec::new(),
                    },
                };
                let labels = bin_labels(&edges);
                let mut series = Vec::new();
                for run in &runs {
                    let t = &run.table;
                    let Some(s) = run
                        .resolved
                        .as_ref()
                        .map(|r| Strata::new(t, r))
                        .transpose()?
                        .flatten()
                    else {
                        notes.push(format!(
                            "{}: no effort series in ppr_ratio_by_effort.svg",
                            run.name
                        ));
                        continue;
                    };
                    let positive = indicators(t, &run.scores, mode)?;
                    let g_of = decoded(t, &protected)?;
                    let values = (0..labels.len())
                        .map(|b| {
                            let rate = |g: &str| {
                                masked(t, &positive, |i| {
                                    g_of[i] == g
                                        && !s.privileged[i]
                                        && bin_of(&edges, s.effort[i]) == b
                                })
                                .ppr
                            };
                            match (rate(dis), rate(&adv)) {
                                (Some(d), Some(a)) if a > 0.0 => Some(d / a),
                                _ => None,
                            }
                        })
                        .collect();
                    series.push(Series {
                        name: run.name.clone(),
                        values,
                    });
                }
                if series.is_empty() {
                    notes.push(
                        "ppr_ratio_by_effort.svg skipped: no run has effort thresholds".into(),
                    );
                } else {
                    let chart = LineChart {
                        title: format!("Underprivileged PPR ratio {dis}/{adv} by effort"),
                        x_labels: labels,
                        series,
                        y_label: "PPR ratio".into(),
                        reference: Some(1.0),
                    };
                    dir.write_bytes("ppr_ratio_by_effort.svg", line_chart(&chart).as_bytes())?;
                }
            }
            _ => notes.push("ppr_ratio_by_effort.svg skipped: needs exactly two groups".into()),
        }
    }

    if !notes.is_empty() {
        let _ = writeln!(md, "\n## Notes\n");
        for n in &notes {
            let _ = writeln!(md, "- {n}");
        }
    }
    dir.write_bytes("summary.md", md.as_bytes())?;
    dir.finish(true)
}
