//! `train`: fit on the training split, audit on the held-out split.

use fairsep_core::dataset::Table;
use fairsep_core::groupstats::{indicators, RateMode};
use fairsep_core::learner::{train, PredictMode, TrainedModel};
use fairsep_core::notions::{evaluate, ResolvedNotion};
use serde::Serialize;

use super::accuracy;
use crate::output::{num, RunDir};
use crate::tables::{load_table, protected_column, split_rows, write_stats};
use crate::{CliError, Outcome, RunConfig};

#[derive(Debug, Serialize)]
struct Accuracy {
    hard: f64,
    expected: f64,
}

#[derive(Debug, Serialize)]
struct Evaluation {
    accuracy: Accuracy,
    /// Held-out violation under the configured notion.
    #[serde(skip_serializing_if = "Option::is_none")]
    aggregate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pass: Option<bool>,
}

#[derive(Debug, Serialize)]
struct Summary {
    notion: Option<String>,
    constrained: bool,
    train_rows: usize,
    test_rows: usize,
    constraints: usize,
    dropped_constraints: Vec<String>,
    members: usize,
    best_iteration: usize,
    training_error: f64,
    final_max_violation: f64,
    infeasible: bool,
    early_stopped: bool,
    warnings: Vec<String>,
    test: Evaluation,
    #[serde(skip_serializing_if = "Option::is_none")]
    baseline: Option<Evaluation>,
}

fn evaluation(
    t: &Table,
    scores: &[f64],
    resolved: Option<&ResolvedNotion>,
) -> Result<Evaluation, CliError> {
    let hard = indicators(t, scores, RateMode::Hard { cutoff: 0.5 })?;
    let expected = indicators(t, scores, RateMode::Expected)?;
    let report = match resolved {
        Some(r) => Some(evaluate(t, scores, r)?),
        None => None,
    };
    Ok(Evaluation {
        accuracy: Accuracy {
            hard: accuracy(t.labels(), &hard),
            expected: accuracy(t.labels(), &expected),
        },
        aggregate: report.as_ref().map(|r| r.aggregate),
        pass: report.as_ref().map(|r| r.pass),
    })
}

fn prediction_rows(rows: &[usize], t: &Table, scores: &[f64]) -> Vec<Vec<String>> {
    rows.iter()
        .zip(t.labels())
        .zip(scores)
        .map(|((r, y), s)| vec![r.to_string(), y.to_string(), s.to_string()])
        .collect()
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.learner.validate()?;
    let full = load_table(cfg)?;
    let protected = protected_column(cfg, &full)?;
    let (train_rows, test_rows) = split_rows(cfg, &full)?;
    let train_t = full.select_rows(&train_rows);
    let test_t = full.select_rows(&test_rows);
    let constraint = if cfg.train.constrained {
        cfg.notion.as_ref()
    } else {
        None
    };
    let model = train(&train_t, constraint, &cfg.encode, &cfg.learner)?;
    if model.model.infeasible {
        log::warn!(
            "training constraints are violated by {:.4}; the model is written and flagged",
            model.model.final_max_violation
        );
    }
    let scores = model.predict(&test_t, PredictMode::Score)?;
    let resolved = match &cfg.notion {
        Some(n) => Some(n.resolve(&test_t)?),
        None => None,
    };

    let mut dir = RunDir::create(&cfg.out_dir(), "train")?;
    dir.write_json("train.config.json", cfg)?;
    let mut model_json = model.to_json()?;
    model_json.push('\n');
    dir.write_bytes("model.json", model_json.as_bytes())?;
    write_trajectory(&mut dir, &model)?;
    dir.write_csv(
        "predictions.csv",
        &["row", "label", "score"],
        &prediction_rows(&test_rows, &test_t, &scores),
    )?;
    if let Some(r) = &resolved {
        dir.write_json("report.json", &evaluate(&test_t, &scores, r)?)?;
        dir.write_json("thresholds.json", r)?;
    }
    write_stats(&mut dir, &test_t, &scores, &protected, resolved.as_ref())?;

    let baseline = if cfg.train.baseline && constraint.is_some() {
        let base = train(&train_t, None, &cfg.encode, &cfg.learner)?;
        let base_scores = base.predict(&test_t, PredictMode::Score)?;
        dir.write_csv(
            "baseline_predictions.csv",
            &["row", "label", "score"],
            &prediction_rows(&test_rows, &test_t, &base_scores),
        )?;
        Some(evaluation(&test_t, &base_scores, resolved.as_ref())?)
    } else {
        None
    };
    let m = &model.model;
    let summary = Summary {
        notion: constraint.map(|n| n.kind.to_string()),
        constrained: constraint.is_some(),
        train_rows: train_t.n_rows(),
        test_rows: test_t.n_rows(),
        constraints: m.constraints.len(),
        dropped_constraints: model.dropped_constraints.clone(),
        members: m.members.len(),
        best_iteration: m.best_iteration,
        training_error: m.training_error,
        final_max_violation: m.final_max_violation,
        infeasible: m.infeasible,
        early_stopped: m.early_stopped,
        warnings: m.warnings.clone(),
        test: evaluation(&test_t, &scores, resolved.as_ref())?,
        baseline,
    };
    dir.write_json("summary.json", &summary)?;
    log::info!(
        "trained {} members; held-out accuracy {:.4} (hard) {:.4} (expected)",
        summary.members,
        summary.test.accuracy.hard,
        summary.test.accuracy.expected
    );
    dir.finish(true)
}

fn write_trajectory(dir: &mut RunDir, model: &TrainedModel) -> Result<(), CliError> {
    let m = &model.model;
    let mut header: Vec<String> = [
        "iteration",
        "member_error",
        "member_max_violation",
        "mixture_error",
        "mixture_max_violation",
        "objective",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(m.constraints.iter().map(|c| format!("lambda {}", c.name)));
    let rows: Vec<Vec<String>> = m
        .trajectory
        .iter()
        .map(|r| {
            let mut line = vec![
                r.iteration.to_string(),
                num(Some(r.member_error)),
                num(Some(r.member_max_violation)),
                num(Some(r.mixture_error)),
                num(Some(r.mixture_max_violation)),
                num(Some(r.objective)),
            ];
            line.extend(r.lambda.iter().map(|l| l.to_string()));
            line
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    dir.write_csv("trajectory.csv", &header, &rows)
}
