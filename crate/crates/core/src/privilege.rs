//! Finding the privilege-source attribute and its top-p% cutoff.
//!
//! [`extract_privilege_attribute`] fits the base learner on one group's rows
//! and ranks the ordinal/numerical columns by permutation importance on a
//! held-out slice. [`select_p`] sweeps top-p% cutoffs of the chosen column and
//! picks the smallest p at which the ground-truth positive-rate ratio between
//! the groups reaches the 80% rule.

use std::collections::BTreeMap;
use std::ops::Range;

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    privilege_threshold, stratified_split, ColumnKind, ColumnTag, EncodeOptions, Encoder, Table,
};
use crate::learner::{fit_base, LogisticModel, LogisticParams};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionParams {
    /// Permutation repeats per candidate (at least 3).
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub seed: u64,
    /// Fraction of the group's rows held out for scoring importances.
    #[serde(default = "default_holdout")]
    pub holdout: f64,
    /// Leave effort-tagged columns out of the candidate set.
    #[serde(default = "default_true")]
    pub exclude_effort: bool,
    /// Columns left out of both the model and the candidates.
    #[serde(default)]
    pub exclude: Vec<String>,
    #[serde(default)]
    pub learner: LogisticParams,
}

fn default_repeats() -> usize {
    10
}

fn default_holdout() -> f64 {
    0.25
}

fn default_true() -> bool {
    true
}

impl Default for ExtractionParams {
    fn default() -> Self {
        Self {
            repeats: default_repeats(),
            seed: 0,
            holdout: default_holdout(),
            exclude_effort: true,
            exclude: Vec::new(),
            learner: LogisticParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Importance {
    pub column: String,
    /// Mean accuracy drop over the permutation repeats.
    pub mean: f64,
    /// Sample standard deviation of the drops.
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceTable {
    pub group: String,
    /// Candidates, most important first.
    pub entries: Vec<Importance>,
    pub chosen: String,
    /// Several candidates shared the top mean importance.
    pub tie: bool,
    pub baseline_accuracy: f64,
    pub holdout_rows: usize,
    pub repeats: usize,
}

/// Mean and sample sd of the accuracy drop when the columns of each
/// candidate are shuffled jointly across rows of `x`.
///
/// Repeat `r` uses the same permutation for every candidate, so identical
/// columns get identical importances.
pub fn permutation_importance(
    model: &LogisticModel,
    x: ArrayView2<f64>,
    labels: &[u8],
    candidates: &[(String, Range<usize>)],
    repeats: usize,
    seed: u64,
) -> Result<Vec<Importance>> {
    let accuracy = |x: ArrayView2<f64>| -> Result<f64> {
        let pred = model.predict_labels(x)?;
        let hits = pred.iter().zip(labels).filter(|(p, y)| p == y).count();
        Ok(hits as f64 / labels.len().max(1) as f64)
    };
    let base = accuracy(x)?;
    let n = x.nrows();
    let permutations: Vec<Vec<usize>> = (0..repeats)
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            order
        })
        .collect();
    let mut out = Vec::with_capacity(candidates.len());
    let mut work: Array2<f64> = x.to_owned();
    for (name, range) in candidates {
        let mut drops = Vec::with_capacity(repeats);
        for order in &permutations {
            for (i, &src) in order.iter().enumerate() {
                for j in range.clone() {
                    work[[i, j]] = x[[src, j]];
                }
            }
            drops.push(base - accuracy(work.view())?);
        }
        for i in 0..n {
            for j in range.clone() {
                work[[i, j]] = x[[i, j]];
            }
        }
        let mean = drops.iter().sum::<f64>() / repeats.max(1) as f64;
        let sd = if repeats > 1 {
            (drops.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (repeats - 1) as f64).sqrt()
        } else {
            0.0
        };
        out.push(Importance {
            column: name.clone(),
            mean,
            sd,
        });
    }
    Ok(out)
}

/// Orders importances best first and reports whether the top mean was tied.
/// Ties are broken by the larger `mean - sd`, then by column name.
fn rank(mut entries: Vec<Importance>) -> (Vec<Importance>, bool) {
    const TIE: f64 = 1e-12;
    entries.sort_by(|a, b| {
        b.mean
            .partial_cmp(&a.mean)
            .unwrap()
            .then((b.mean - b.sd).partial_cmp(&(a.mean - a.sd)).unwrap())
            .then(a.column.cmp(&b.column))
    });
    let tie = entries.len() > 1 && (entries[0].mean - entries[1].mean).abs() <= TIE;
    if tie {
        let top = entries[0].mean;
        let tied = entries
            .iter()
            .take_while(|e| (e.mean - top).abs() <= TIE)
            .count();
        entries[..tied].sort_by(|a, b| {
            (b.mean - b.sd)
                .partial_cmp(&(a.mean - a.sd))
                .unwrap()
                .then(a.column.cmp(&b.column))
        });
    }
    (entries, tie)
}

/// Ranks ordinal/numerical columns by how much a model of group `group`'s
/// outcomes relies on them.
pub fn extract_privilege_attribute(
    t: &Table,
    protected: &str,
    group: &str,
    params: &ExtractionParams,
) -> Result<ImportanceTable> {
    if params.repeats < 3 {
        return Err(Error::Config(format!(
            "at least 3 permutation repeats are required, got {}",
            params.repeats
        )));
    }
    if !(params.holdout > 0.0 && params.holdout < 1.0) {
        return Err(Error::Config(format!(
            "holdout fraction must lie in (0, 1), got {}",
            params.holdout
        )));
    }
    let (levels, codes) = t.categorical(protected)?;
    let code =
        levels.iter().position(|l| l == group).ok_or_else(|| {
            Error::Extraction(format!("group '{group}' not found in '{protected}'"))
        })? as u32;
    let rows: Vec<usize> = (0..t.n_rows()).filter(|&i| codes[i] == code).collect();
    if rows.is_empty() {
        return Err(Error::Extraction(format!("group '{group}' has no rows")));
    }
    let sub = t.select_rows(&rows);

    let effort = t.tagged(ColumnTag::Effort).map(|c| c.name().to_string());
    let candidate_names: Vec<String> = sub
        .columns()
        .iter()
        .filter(|c| matches!(c.kind(), ColumnKind::Ordinal | ColumnKind::Numerical))
        .map(|c| c.name().to_string())
        .filter(|name| !params.exclude.contains(name))
        .filter(|name| !(params.exclude_effort && effort.as_deref() == Some(name.as_str())))
        .collect();
    if candidate_names.len() < 2 {
        return Err(Error::Extraction(format!(
            "need at least 2 ordinal/numerical candidates, found {}",
            candidate_names.len()
        )));
    }

    let (train_rows, test_rows) = stratified_split(&sub, protected, params.holdout, params.seed)?;
    let train = sub.select_rows(&train_rows);
    let test = sub.select_rows(&test_rows);
    if test.is_empty() || train.is_empty() {
        return Err(Error::Extraction("group too small to hold out rows".into()));
    }
    let encoder = Encoder::fit(
        &train,
        &EncodeOptions {
            include_protected: false,
            exclude: params.exclude.clone(),
        },
    )?;
    let fit = fit_base(
        encoder.transform(&train)?.view(),
        train.labels(),
        None,
        &params.learner,
    )?;
    let x_test = encoder.transform(&test)?;
    let predictions = fit.model.predict_labels(x_test.view())?;
    if predictions.iter().all(|&p| p == predictions[0]) {
        return Err(Error::Extraction(format!(
            "learner predicts a constant label ({}) on group '{group}'",
            predictions[0]
        )));
    }
    let baseline_accuracy = predictions
        .iter()
        .zip(test.labels())
        .filter(|(p, y)| p == y)
        .count() as f64
        / test.n_rows() as f64;

    let candidates: Vec<(String, Range<usize>)> = candidate_names
        .into_iter()
        .filter_map(|name| encoder.columns_for(&name).map(|r| (name, r)))
        .collect();
    let importances = permutation_importance(
        &fit.model,
        x_test.view(),
        test.labels(),
        &candidates,
        params.repeats,
        params.seed,
    )?;
    let (entries, tie) = rank(importances);
    if tie {
        log::warn!(
            "importance tie at the top; chose '{}' by the tie-breaking rule",
            entries[0].column
        );
    }
    Ok(ImportanceTable {
        group: group.to_string(),
        chosen: entries[0].column.clone(),
        entries,
        tie,
        baseline_accuracy,
        holdout_rows: test.n_rows(),
        repeats: params.repeats,
    })
}

/// One grid point of the p-sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PSweepEntry {
    pub p: f64,
    pub tau: Option<f64>,
    pub realized_fraction: Option<f64>,
    /// Group -> (rows in the top slice, ground-truth PPR there).
    pub groups: BTreeMap<String, (usize, Option<f64>)>,
    /// Disadvantaged PPR over advantaged PPR; `None` if undefined.
    pub ratio: Option<f64>,
    pub satisfies: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PSweepResult {
    pub column: String,
    pub advantaged: String,
    pub disadvantaged: String,
    pub ratio_rule: f64,
    pub entries: Vec<PSweepEntry>,
    /// Grid values whose ratio is defined and at least `ratio_rule`.
    pub satisfying: Vec<f64>,
    /// Smallest satisfying p; `None` means no p satisfies the rule.
    pub selected: Option<f64>,
}

/// Sweeps top-p% cutoffs of `column` over `grid` (ascending).
///
/// The advantaged group defaults to the one with the higher overall
/// ground-truth positive rate. Exactly two groups must be present.
pub fn select_p(
    t: &Table,
    column: &str,
    protected: &str,
    grid: &[f64],
    ratio_rule: f64,
    advantaged: Option<&str>,
) -> Result<PSweepResult> {
    if grid.is_empty() {
        return Err(Error::Config("p grid is empty".into()));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config("p grid must be strictly ascending".into()));
    }
    if !(ratio_rule > 0.0) {
        return Err(Error::Config(format!(
            "ratio rule must be positive, got {ratio_rule}"
        )));
    }
    let present = t.present_levels(protected)?;
    if present.len() != 2 {
        return Err(Error::Config(format!(
            "p selection compares exactly two groups; '{protected}' has {}",
            present.len()
        )));
    }
    let (levels, codes) = t.categorical(protected)?;
    let labels = t.labels();
    let code_of = |g: &str| levels.iter().position(|l| l == g).map(|c| c as u32);
    let ppr = |g: &str, keep: &dyn Fn(usize) -> bool| -> (usize, Option<f64>) {
        let c = code_of(g).unwrap();
        let (mut n, mut pos) = (0usize, 0usize);
        for i in 0..t.n_rows() {
            if codes[i] == c && keep(i) {
                n += 1;
                pos += usize::from(labels[i]);
            }
        }
        (n, (n > 0).then(|| pos as f64 / n as f64))
    };

    let adv = match advantaged {
        Some(g) => {
            if !present.iter().any(|p| p == g) {
                return Err(Error::Config(format!("advantaged group '{g}' not present")));
            }
            g.to_string()
        }
        None => {
            let a = ppr(&present[0], &|_| true).1.unwrap_or(0.0);
            let b = ppr(&present[1], &|_| true).1.unwrap_or(0.0);
            if b > a {
                present[1].clone()
            } else {
                present[0].clone()
            }
        }
    };
    let dis = present.iter().find(|g| **g != adv).unwrap().clone();

    let x = t.numeric(column)?;
    let mut entries = Vec::with_capacity(grid.len());
    for &p in grid {
        let th = match privilege_threshold(t, Some(column), p) {
            Ok(th) => th,
            Err(Error::DegenerateThreshold(msg)) => {
                entries.push(PSweepEntry {
                    p,
                    tau: None,
                    realized_fraction: None,
                    groups: BTreeMap::new(),
                    ratio: None,
                    satisfies: false,
                    note: Some(msg),
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        let keep = |i: usize| th.is_privileged(x[i]);
        let mut groups = BTreeMap::new();
        let a = ppr(&adv, &keep);
        let d = ppr(&dis, &keep);
        groups.insert(adv.clone(), a);
        groups.insert(dis.clone(), d);
        let (ratio, note) = match (d.1, a.1) {
            (Some(dp), Some(ap)) if ap > 0.0 => (Some(dp / ap), None),
            (Some(_), Some(_)) => (None, Some("advantaged group has no positives".to_string())),
            _ => (
                None,
                Some("a group is missing from the top slice".to_string()),
            ),
        };
        entries.push(PSweepEntry {
            p,
            tau: Some(th.tau),
            realized_fraction: Some(th.realized_fraction),
            groups,
            satisfies: ratio.is_some_and(|r| r >= ratio_rule),
            ratio,
            note,
        });
    }
    let satisfying: Vec<f64> = entries
        .iter()
        .filter(|e| e.satisfies)
        .map(|e| e.p)
        .collect();
    Ok(PSweepResult {
        column: column.to_string(),
        advantaged: adv,
        disadvantaged: dis,
        ratio_rule,
        selected: satisfying.first().copied(),
        satisfying,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_breaks_ties_and_flags() {
        let e = |c: &str, mean, sd| Importance {
            column: c.into(),
            mean,
            sd,
        };
        let (r, tie) = rank(vec![e("b", 0.1, 0.01), e("a", 0.1, 0.01), e("c", 0.2, 0.5)]);
        assert!(!tie);
        assert_eq!(r[0].column, "c");
        let (r, tie) = rank(vec![
            e("b", 0.1, 0.01),
            e("a", 0.1, 0.01),
            e("c", 0.05, 0.0),
        ]);
        assert!(tie);
        assert_eq!(r[0].column, "a");
        let (r, tie) = rank(vec![e("a", 0.1, 0.05), e("b", 0.1, 0.01)]);
        assert!(tie);
        assert_eq!(r[0].column, "b");
    }
}
