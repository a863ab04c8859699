//! `extract-privilege` and `sweep-p`.

use fairsep_core::dataset::ColumnTag;
use fairsep_core::privilege::{extract_privilege_attribute, select_p};

use crate::output::{num, RunDir};
use crate::tables::{advantaged_group, load_table, protected_column};
use crate::{CliError, Outcome, RunConfig};

pub fn extract(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let t = load_table(cfg)?;
    let protected = protected_column(cfg, &t)?;
    let group = match &cfg.privilege.group {
        Some(g) => g.clone(),
        None => advantaged_group(&t, &protected)?,
    };
    let table = extract_privilege_attribute(&t, &protected, &group, &cfg.privilege.extraction)?;
    if table.tie {
        log::warn!(
            "importance tie at the top; '{}' chosen by the tie rule",
            table.chosen
        );
    }
    let rows: Vec<Vec<String>> = table
        .entries
        .iter()
        .enumerate()
        .map(|(k, e)| {
            vec![
                (k + 1).to_string(),
                e.column.clone(),
                num(Some(e.mean)),
                num(Some(e.sd)),
                (e.column == table.chosen).to_string(),
            ]
        })
        .collect();
    let mut dir = RunDir::create(&cfg.out_dir(), "extract-privilege")?;
    dir.write_json("extract-privilege.config.json", cfg)?;
    dir.write_csv(
        "importance.csv",
        &["rank", "column", "mean", "sd", "chosen"],
        &rows,
    )?;
    dir.write_json("importance.json", &table)?;
    log::info!("privilege attribute for group '{group}': {}", table.chosen);
    dir.finish(true)
}

pub fn sweep(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let t = load_table(cfg)?;
    let protected = protected_column(cfg, &t)?;
    let column = match &cfg.privilege.column {
        Some(c) => c.clone(),
        None => cfg
            .notion
            .as_ref()
            .and_then(|n| n.privilege.as_ref())
            .and_then(|p| p.column.clone())
            .or_else(|| t.tagged(ColumnTag::Privilege).map(|c| c.name().to_string()))
            .ok_or_else(|| CliError::Usage("no privilege column to sweep".into()))?,
    };
    let p = &cfg.privilege;
    let result = select_p(
        &t,
        &column,
        &protected,
        &p.grid,
        p.ratio_rule,
        p.advantaged.as_deref(),
    )?;
    let (adv, dis) = (&result.advantaged, &result.disadvantaged);
    let rows: Vec<Vec<String>> = result
        .entries
        .iter()
        .map(|e| {
            let group = |g: &str| e.groups.get(g).copied().unwrap_or((0, None));
            let (na, pa) = group(adv);
            let (nd, pd) = group(dis);
            vec![
                num(Some(e.p)),
                num(e.tau),
                num(e.realized_fraction),
                na.to_string(),
                num(pa),
                nd.to_string(),
                num(pd),
                num(e.ratio),
                e.satisfies.to_string(),
                e.note.clone().unwrap_or_default(),
            ]
        })
        .collect();
    let header = [
        "p",
        "tau",
        "realized_fraction",
        "n_advantaged",
        "label_rate_advantaged",
        "n_disadvantaged",
        "label_rate_disadvantaged",
        "ratio",
        "satisfies",
        "note",
    ];
    let mut dir = RunDir::create(&cfg.out_dir(), "sweep-p")?;
    dir.write_json("sweep-p.config.json", cfg)?;
    dir.write_csv("sweep.csv", &header, &rows)?;
    dir.write_json("sweep.json", &result)?;
    match result.selected {
        Some(p) => log::info!("smallest p meeting the {} rule: {p}", result.ratio_rule),
        None => log::warn!("no p satisfies the {} rule", result.ratio_rule),
    }
    dir.finish(true)
}
