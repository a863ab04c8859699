//! Subgroup membership masks and confusion statistics.
//!
//! Every fairness measure in [`crate::notions`] reduces to means of per-row
//! positive indicators over masked rows. Those indicators come from
//! [`RateMode`]: hard labels at a cutoff, or the raw score read as the
//! probability of a positive decision (randomized classifiers).

use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnValues, Table};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Clause {
    /// Categorical column equals a level.
    Equals { column: String, value: String },
    /// Target equals `value`.
    Label { value: u8 },
    /// Numeric column `>= value`.
    AtLeast { column: String, value: f64 },
    /// Numeric column `< value`.
    Below { column: String, value: f64 },
}

/// Conjunction of clauses; the empty predicate selects every row.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub clauses: Vec<Clause>,
}

impl Predicate {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn eq(mut self, column: &str, value: &str) -> Self {
        self.clauses.push(Clause::Equals {
            column: column.into(),
            value: value.into(),
        });
        self
    }

    pub fn label(mut self, value: u8) -> Self {
        self.clauses.push(Clause::Label { value });
        self
    }

    pub fn at_least(mut self, column: &str, value: f64) -> Self {
        self.clauses.push(Clause::AtLeast {
            column: column.into(),
            value,
        });
        self
    }

    pub fn below(mut self, column: &str, value: f64) -> Self {
        self.clauses.push(Clause::Below {
            column: column.into(),
            value,
        });
        self
    }
}

/// Row membership vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask(Vec<bool>);

impl Mask {
    pub fn full(n: usize) -> Self {
        Mask(vec![true; n])
    }

    pub fn from_vec(v: Vec<bool>) -> Self {
        Mask(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn and(&self, other: &Mask) -> Mask {
        Mask(self.0.iter().zip(&other.0).map(|(a, b)| *a && *b).collect())
    }

    pub fn or(&self, other: &Mask) -> Mask {
        Mask(self.0.iter().zip(&other.0).map(|(a, b)| *a || *b).collect())
    }

    pub fn not(&self) -> Mask {
        Mask(self.0.iter().map(|a| !a).collect())
    }

    /// Indices of member rows, ascending.
    pub fn rows(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i)
    }
}

pub fn mask(t: &Table, pred: &Predicate) -> Result<Mask> {
    let mut m = Mask::full(t.n_rows());
    for clause in &pred.clauses {
        let clause_mask = clause_mask(t, clause)?;
        m = m.and(&clause_mask);
    }
    Ok(m)
}

fn clause_mask(t: &Table, clause: &Clause) -> Result<Mask> {
    let lookup = |column: &str| {
        t.column(column)
            .map_err(|_| Error::Predicate(format!("unknown column '{column}'")))
    };
    match clause {
        Clause::Equals { column, value } => match &lookup(column)?.values {
            ColumnValues::Categorical { levels, codes } => {
                let code = levels.iter().position(|l| l == value).ok_or_else(|| {
                    Error::Predicate(format!("column '{column}' has no level '{value}'"))
                })? as u32;
                Ok(Mask(codes.iter().map(|&c| c == code).collect()))
            }
            ColumnValues::Numeric(_) => Err(Error::Predicate(format!(
                "equality clause on numeric column '{column}'"
            ))),
        },
        Clause::Label { value } => {
            if *value > 1 {
                return Err(Error::Predicate(format!("label {value} is not 0/1")));
            }
            Ok(Mask(t.labels().iter().map(|y| y == value).collect()))
        }
        Clause::AtLeast { column, value } | Clause::Below { column, value } => {
            let v = match &lookup(column)?.values {
                ColumnValues::Numeric(v) => v,
                ColumnValues::Categorical { .. } => {
                    return Err(Error::Predicate(format!(
                        "threshold clause on categorical column '{column}'"
                    )))
                }
            };
            let at_least = matches!(clause, Clause::AtLeast { .. });
            Ok(Mask(v.iter().map(|x| (*x >= *value) == at_least).collect()))
        }
    }
}

/// How a prediction score becomes a positive indicator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RateMode {
    /// `1` if `score >= cutoff`, else `0`.
    Hard { cutoff: f64 },
    /// The score itself, read as `P(h(x) = 1)`.
    Expected,
}

impl Default for RateMode {
    fn default() -> Self {
        RateMode::Hard { cutoff: 0.5 }
    }
}

impl RateMode {
    pub fn indicator(self, score: f64) -> f64 {
        match self {
            RateMode::Hard { cutoff } => {
                if score >= cutoff {
                    1.0
                } else {
                    0.0
                }
            }
            RateMode::Expected => score,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RateMode::Hard { .. } => "hard",
            RateMode::Expected => "expected",
        }
    }
}

/// Checks alignment and range, then maps scores to positive indicators.
pub fn indicators(t: &Table, predictions: &[f64], mode: RateMode) -> Result<Vec<f64>> {
    if predictions.len() != t.n_rows() {
        return Err(Error::Alignment {
            expected: t.n_rows(),
            actual: predictions.len(),
        });
    }
    if let RateMode::Hard { cutoff } = mode {
        if !(cutoff > 0.0 && cutoff < 1.0) && predictions.iter().any(|p| *p != 0.0 && *p != 1.0) {
            return Err(Error::Predictions(format!(
                "cutoff {cutoff} must lie in (0, 1) for score predictions"
            )));
        }
    }
    if let Some(bad) = predictions.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Predictions(format!("score {bad} outside [0, 1]")));
    }
    Ok(predictions.iter().map(|&p| mode.indicator(p)).collect())
}

/// Confusion counts. Fractional in expected mode.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: f64,
    pub fp: f64,
    pub tn: f64,
    #[serde(rename = "fn")]
    pub fn_: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupFrame {
    pub n: usize,
    pub positives: usize,
    pub negatives: usize,
    pub counts: Confusion,
    /// `None` when the subgroup is empty.
    pub ppr: Option<f64>,
    /// `None` when the subgroup has no positive labels.
    pub tpr: Option<f64>,
    /// `None` when the subgroup has no negative labels.
    pub fpr: Option<f64>,
}

impl SubgroupFrame {
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

/// Confusion statistics over rows where `m` holds, given per-row positive
/// indicators (see [`indicators`]).
pub fn frame(labels: &[u8], positive: &[f64], m: &Mask) -> SubgroupFrame {
    let mut c = Confusion::default();
    let (mut n, mut pos, mut neg) = (0usize, 0usize, 0usize);
    let mut predicted = 0.0;
    for i in m.rows() {
        let h = positive[i];
        n += 1;
        predicted += h;
        if labels[i] == 1 {
            pos += 1;
            c.tp += h;
            c.fn_ += 1.0 - h;
        } else {
            neg += 1;
            c.fp += h;
            c.tn += 1.0 - h;
        }
    }
    let rate = |num: f64, den: usize| (den > 0).then(|| num / den as f64);
    SubgroupFrame {
        n,
        positives: pos,
        negatives: neg,
        counts: c,
        ppr: rate(predicted, n),
        tpr: rate(c.tp, pos),
        fpr: rate(c.fp, neg),
    }
}

/// Subgroup statistics of `predictions` on rows matching `pred`.
pub fn stats(
    t: &Table,
    predictions: &[f64],
    pred: &Predicate,
    mode: RateMode,
) -> Result<SubgroupFrame> {
    let positive = indicators(t, predictions, mode)?;
    let m = mask(t, pred)?;
    Ok(frame(t.labels(), &positive, &m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ColumnKind, TableBuilder};
    use proptest::prelude::*;

    fn toy() -> Table {
        TableBuilder::new()
            .categorical(
                "sex",
                ColumnKind::Protected,
                &["F", "F", "M", "M", "F", "M"],
            )
            .numeric(
                "cap",
                ColumnKind::Numerical,
                vec![0.0, 5.0, 0.0, 9.0, 1.0, 3.0],
            )
            .target("y", vec![1, 0, 1, 1, 0, 0])
            .build()
            .unwrap()
    }

    #[test]
    fn empty_predicate_selects_everything() {
        let t = toy();
        assert_eq!(mask(&t, &Predicate::all()).unwrap().count(), 6);
    }

    #[test]
    fn conjunction_is_intersection() {
        let t = toy();
        let m = mask(&t, &Predicate::all().eq("sex", "F").below("cap", 3.0)).unwrap();
        assert_eq!(m.rows().collect::<Vec<_>>(), vec![0, 4]);
        let m = mask(&t, &Predicate::all().label(1).at_least("cap", 0.0)).unwrap();
        assert_eq!(m.rows().collect::<Vec<_>>(), vec![0, 2, 3]);
    }

    #[test]
    fn unknown_column_or_level() {
        let t = toy();
        assert!(matches!(
            mask(&t, &Predicate::all().eq("race", "x")),
            Err(Error::Predicate(_))
        ));
        assert!(matches!(
            mask(&t, &Predicate::all().eq("sex", "X")),
            Err(Error::Predicate(_))
        ));
    }

    #[test]
    fn counts_on_fixed_predictions() {
        let t = toy();
        let preds = [1.0, 1.0, 0.0, 1.0, 0.0, 0.0];
        let f = stats(&t, &preds, &Predicate::all(), RateMode::default()).unwrap();
        assert_eq!(
            f.counts,
            Confusion {
                tp: 2.0,
                fp: 1.0,
                tn: 2.0,
                fn_: 1.0
            }
        );
        assert_eq!(f.ppr, Some(0.5));
        assert_eq!(f.tpr, Some(2.0 / 3.0));
        assert_eq!(f.fpr, Some(1.0 / 3.0));
    }

    #[test]
    fn constant_positive_predictor() {
        let t = toy();
        let f = stats(
            &t,
            &[1.0; 6],
            &Predicate::all().eq("sex", "M"),
            RateMode::default(),
        )
        .unwrap();
        assert_eq!((f.ppr, f.tpr, f.fpr), (Some(1.0), Some(1.0), Some(1.0)));
    }

    #[test]
    fn undefined_rates_are_flagged() {
        let t = toy();
        let f = stats(
            &t,
            &[0.0; 6],
            &Predicate::all().label(1),
            RateMode::default(),
        )
        .unwrap();
        assert_eq!(f.fpr, None);
        let f = stats(
            &t,
            &[0.0; 6],
            &Predicate::all().at_least("cap", 100.0),
            RateMode::default(),
        )
        .unwrap();
        assert!(f.is_empty());
        assert_eq!(f.ppr, None);
    }

    #[test]
    fn length_mismatch() {
        let t = toy();
        assert!(matches!(
            stats(&t, &[0.0; 5], &Predicate::all(), RateMode::default()),
            Err(Error::Alignment {
                expected: 6,
                actual: 5
            })
        ));
    }

    #[test]
    fn expected_mode_uses_scores() {
        let t = toy();
        let preds = [0.2, 0.4, 0.6, 0.8, 0.0, 1.0];
        let f = stats(
            &t,
            &preds,
            &Predicate::all().eq("sex", "F"),
            RateMode::Expected,
        )
        .unwrap();
        assert!((f.ppr.unwrap() - 0.2).abs() < 1e-15);
        assert!((f.counts.tp - 0.2).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn frame_invariants(
            rows in proptest::collection::vec((0u8..2, 0u8..2, 0.0f64..=1.0, any::<bool>()), 1..40),
            cutoff in 0.05f64..0.95,
        ) {
            let sex: Vec<&str> = rows.iter().map(|r| if r.0 == 0 { "F" } else { "M" }).collect();
            let t = TableBuilder::new()
                .categorical("sex", ColumnKind::Protected, &sex)
                .target("y", rows.iter().map(|r| r.1).collect())
                .build()
                .unwrap();
            let scores: Vec<f64> = rows.iter().map(|r| r.2).collect();
            let split = Mask::from_vec(rows.iter().map(|r| r.3).collect());
            for mode in [RateMode::Hard { cutoff }, RateMode::Expected] {
                let pos = indicators(&t, &scores, mode).unwrap();
                let a = frame(t.labels(), &pos, &split);
                let b = frame(t.labels(), &pos, &split.not());
                let all = frame(t.labels(), &pos, &Mask::full(rows.len()));
                let total = a.counts.tp + a.counts.fp + a.counts.tn + a.counts.fn_;
                prop_assert!((total - a.n as f64).abs() < 1e-9);
                // additivity over disjoint masks
                prop_assert!((a.counts.tp + b.counts.tp - all.counts.tp).abs() < 1e-9);
                prop_assert!((a.counts.fp + b.counts.fp - all.counts.fp).abs() < 1e-9);
                prop_assert_eq!(a.n + b.n, all.n);
                for r in [all.ppr, all.tpr, all.fpr].into_iter().flatten() {
                    prop_assert!((0.0..=1.0).contains(&r));
                }
            }
            // raising the cutoff never raises PPR
            let lo = stats(&t, &scores, &Predicate::all(), RateMode::Hard { cutoff }).unwrap();
            let hi = stats(&t, &scores, &Predicate::all(), RateMode::Hard { cutoff: (cutoff + 0.1).min(0.99) }).unwrap();
            prop_assert!(hi.ppr.unwrap() <= lo.ppr.unwrap());
            // perfect predictor
            let truth: Vec<f64> = t.labels().iter().map(|&y| f64::from(y)).collect();
            let f = stats(&t, &truth, &Predicate::all(), RateMode::default()).unwrap();
            if let Some(tpr) = f.tpr { prop_assert_eq!(tpr, 1.0); }
            if let Some(fpr) = f.fpr { prop_assert_eq!(fpr, 0.0); }
        }
    }
}
