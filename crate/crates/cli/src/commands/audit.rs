//! `audit`: violation report and subgroup statistics for given predictions.

use fairsep_core::learner::{PredictMode, TrainedModel};
use fairsep_core::notions::evaluate;

use super::read_predictions;
use crate::output::RunDir;
use crate::tables::{load_table, select_rows, write_stats};
use crate::{CliError, Outcome, RunConfig};

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let notion = cfg.notion()?.clone();
    let a = &cfg.audit;
    let sources = usize::from(a.predictions.is_some())
        + usize::from(a.model.is_some())
        + usize::from(a.ground_truth);
    if sources != 1 {
        return Err(CliError::Usage(
            "audit needs exactly one of --predictions, --model or --ground-truth".into(),
        ));
    }
    let full = load_table(cfg)?;
    let (rows, scores) = if let Some(path) = &a.predictions {
        let (scores, rows) = read_predictions(path)?;
        let rows = match rows {
            Some(rows) => {
                if let Some(bad) = rows.iter().find(|&&r| r >= full.n_rows()) {
                    return Err(CliError::Usage(format!(
                        "prediction row {bad} outside the data ({} rows)",
                        full.n_rows()
                    )));
                }
                rows
            }
            None => select_rows(cfg, &full, a.rows)?,
        };
        (rows, scores)
    } else if let Some(path) = &a.model {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read model {}: {e}", path.display())))?;
        let model = TrainedModel::from_json(&text)?;
        let rows = select_rows(cfg, &full, a.rows)?;
        let scores = model.predict(&full.select_rows(&rows), PredictMode::Score)?;
        (rows, scores)
    } else {
        let rows = select_rows(cfg, &full, a.rows)?;
        let scores = rows.iter().map(|&i| f64::from(full.labels()[i])).collect();
        (rows, scores)
    };
    let t = full.select_rows(&rows);
    let resolved = notion.resolve(&t)?;
    let report = evaluate(&t, &scores, &resolved)?;
    if report.partial {
        log::warn!("some terms were skipped: {}", report.skipped.join(", "));
    }

    let mut dir = RunDir::create(&cfg.out_dir(), "audit")?;
    dir.write_json("audit.config.json", cfg)?;
    dir.write_json("report.json", &report)?;
    dir.write_json("thresholds.json", &resolved)?;
    write_stats(&mut dir, &t, &scores, &notion.protected, Some(&resolved))?;
    log::info!(
        "{} aggregate {:.4} (epsilon {}) -> {}",
        report.notion,
        report.aggregate,
        report.epsilon,
        if report.pass { "pass" } else { "fail" }
    );
    dir.finish(report.pass)
}
