//! Fairness violation measures.
//!
//! All measures are built from means of per-row positive indicators `h_i`
//! (see [`RateMode`](crate::groupstats::RateMode)) over subgroup masks:
//!
//! - **EP**: `|TPR - TPR_s|` per group `s`.
//! - **DP**: `|PPR - PPR_s|` per group.
//! - **CDP**: `|PPR_a - PPR_{a,s}|` per category `a` of the conditional attribute.
//! - **SEP_relaxed**: `|PPR - PPR_{U_s}|` where `U_s` is the underprivileged
//!   (`x_p < tau_p`) part of group `s`.
//! - **SEP**: the relaxed term `T1` plus
//!   `T2 = |mean(neg | U_s, low effort) - zeta-mean(neg | U_s, high effort)|` and
//!   `T3 = |mean(neg | privileged, y=0) - zeta-mean(neg | U_s, high effort, y=0)|`,
//!   with `neg_i = 1 - h_i`. The privileged set spans all groups.
//! - **CSEP**: SEP evaluated inside every category of the conditional attribute.
//!
//! Reports aggregate by the worst record; `pass` is `aggregate <= epsilon`.
//! Sums always run in row order so results do not depend on evaluation order.

mod config;
mod report;
mod zeta;

pub use config::{
    EffortReference, EffortSpec, NotionConfig, NotionKind, PrivilegeSpec, ResolvedNotion,
    T3Normalizer,
};
pub use report::{Denominators, TermRecord, ViolationReport};
pub use zeta::{EffortWeighting, WeightingKind, ZetaCell};

use std::collections::BTreeMap;

use log::warn;

use crate::dataset::Table;
use crate::groupstats::{indicators, Mask};
use crate::{Error, Result};

fn mean_over(values: &[f64], m: &Mask) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for i in m.rows() {
        sum += values[i];
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

pub(crate) fn category_masks(t: &Table, column: &str) -> Result<Vec<(String, Mask)>> {
    let (levels, codes) = t.categorical(column)?;
    let present = t.present_levels(column)?;
    Ok(present
        .into_iter()
        .map(|level| {
            let code = levels.iter().position(|l| *l == level).unwrap() as u32;
            let m = Mask::from_vec(codes.iter().map(|&c| c == code).collect());
            (level, m)
        })
        .collect())
}

struct Evaluation<'a> {
    resolved: &'a ResolvedNotion,
    labels: &'a [u8],
    positive: Vec<f64>,
    negative: Vec<f64>,
    groups: Vec<(String, Mask)>,
    effort: Option<&'a [f64]>,
    underprivileged: Option<Mask>,
    privileged: Option<Mask>,
    skipped: Vec<String>,
}

impl<'a> Evaluation<'a> {
    fn new(t: &'a Table, predictions: &[f64], resolved: &'a ResolvedNotion) -> Result<Self> {
        let cfg = &resolved.config;
        cfg.validate()?;
        let positive = indicators(t, predictions, cfg.mode)?;
        let negative = positive.iter().map(|h| 1.0 - h).collect();
        let mut skipped = Vec::new();

        let all_groups = category_masks(t, &cfg.protected)?;
        let groups = match &cfg.groups {
            None => all_groups,
            Some(wanted) => {
                let mut out = Vec::new();
                for g in wanted {
                    match all_groups.iter().find(|(name, _)| name == g) {
                        Some(entry) => out.push(entry.clone()),
                        None => skipped.push(format!("group {g}: not present in the data")),
                    }
                }
                out
            }
        };

        let (underprivileged, privileged) = match (&resolved.privilege, cfg.kind.needs_privilege())
        {
            (Some(th), true) => {
                let x = t.numeric(&th.column)?;
                let p = Mask::from_vec(x.iter().map(|&v| th.is_privileged(v)).collect());
                (Some(p.not()), Some(p))
            }
            (None, true) => {
                return Err(Error::Config(format!(
                    "{} needs a resolved privilege threshold",
                    cfg.kind
                )))
            }
            _ => (None, None),
        };
        let effort = match (&resolved.effort, cfg.kind.needs_effort()) {
            (Some(e), true) => Some(t.numeric(&e.column)?),
            (None, true) => {
                return Err(Error::Config(format!(
                    "{} needs resolved effort thresholds",
                    cfg.kind
                )))
            }
            _ => None,
        };

        Ok(Self {
            resolved,
            labels: t.labels(),
            positive,
            negative,
            groups,
            effort,
            underprivileged,
            privileged,
            skipped,
        })
    }

    /// `|mean(reference) - mean(member)|` over positive indicators.
    fn parity(&mut self, reference: &Mask, member: &Mask, label: &str) -> Option<TermRecord> {
        let support = member.count();
        match (
            mean_over(&self.positive, reference),
            mean_over(&self.positive, member),
        ) {
            (Some(r), Some(m)) => Some(TermRecord::parity((r - m).abs(), support)),
            _ => {
                self.skipped.push(format!("{label}: empty subgroup"));
                None
            }
        }
    }

    fn socio_economic(
        &mut self,
        reference: &Mask,
        group: &Mask,
        label: &str,
        cell: Option<ZetaCell>,
        full: bool,
    ) -> Option<TermRecord> {
        let under = reference
            .and(group)
            .and(self.underprivileged.as_ref().expect("privilege resolved"));
        let support = under.count();
        let ppr_ref = mean_over(&self.positive, reference);
        let ppr_under = mean_over(&self.positive, &under);
        let t1 = match (ppr_ref, ppr_under) {
            (Some(r), Some(u)) => (r - u).abs(),
            _ => {
                self.skipped
                    .push(format!("{label}: no underprivileged rows"));
                return None;
            }
        };
        if !full {
            return Some(TermRecord::parity(t1, support));
        }

        let cell = cell.expect("effort resolved");
        let zeta = self.resolved.config.zeta;
        if zeta.kind == WeightingKind::LinearCapped && !cell.has_spread() {
            warn!("{label}: effort has no spread above the cutoff; weights fall back to 1");
        }
        let x = self.effort.expect("effort resolved");
        let (mut a, mut a_neg) = (0.0, 0.0);
        let (mut b, mut b_neg) = (0.0, 0.0);
        let (mut b0, mut b0_neg) = (0.0, 0.0);
        for i in under.rows() {
            let neg = self.negative[i];
            if x[i] >= cell.threshold {
                let w = zeta.weight(x[i], &cell);
                b += w;
                b_neg += w * neg;
                if self.labels[i] == 0 {
                    b0 += w;
                    b0_neg += w * neg;
                }
            } else {
                a += 1.0;
                a_neg += neg;
            }
        }
        let (mut c, mut c_neg) = (0.0, 0.0);
        let privileged = reference.and(self.privileged.as_ref().expect("privilege resolved"));
        for i in privileged.rows() {
            if self.labels[i] == 0 {
                c += 1.0;
                c_neg += self.negative[i];
            }
        }

        let t2 = if a > 0.0 && b > 0.0 {
            Some((a_neg / a - b_neg / b).abs())
        } else {
            self.skipped
                .push(format!("{label}: T2 skipped (A = {a}, B = {b})"));
            None
        };
        let t3_den = match self.resolved.config.t3_normalizer {
            T3Normalizer::NegativeSubset => b0,
            T3Normalizer::AllHighEffort => b,
        };
        let t3 = if c > 0.0 && b0 > 0.0 {
            Some((c_neg / c - b0_neg / t3_den).abs())
        } else {
            self.skipped
                .push(format!("{label}: T3 skipped (C = {c}, B0 = {b0})"));
            None
        };
        let total = t1 + t2.unwrap_or(0.0) + t3.unwrap_or(0.0);
        Some(TermRecord {
            t1: Some(t1),
            t2,
            t3,
            total,
            support,
            denominators: Some(Denominators { a, b, b0, c }),
        })
    }

    fn run(mut self, t: &Table) -> Result<ViolationReport> {
        let cfg = &self.resolved.config;
        let kind = cfg.kind;
        let n = t.n_rows();
        let all = Mask::full(n);
        let mut groups = BTreeMap::new();
        let mut categories = BTreeMap::new();
        let group_list = std::mem::take(&mut self.groups);

        match kind {
            NotionKind::EP => {
                let pos = Mask::from_vec(self.labels.iter().map(|&y| y == 1).collect());
                for (g, m) in &group_list {
                    if let Some(r) = self.parity(&pos, &m.and(&pos), &format!("group {g}")) {
                        groups.insert(g.clone(), r);
                    }
                }
            }
            NotionKind::DP => {
                for (g, m) in &group_list {
                    if let Some(r) = self.parity(&all, m, &format!("group {g}")) {
                        groups.insert(g.clone(), r);
                    }
                }
            }
            NotionKind::SEP | NotionKind::SepRelaxed => {
                let full = kind == NotionKind::SEP;
                for (g, m) in &group_list {
                    let cell = self.resolved.zeta_cell(g, None);
                    if let Some(r) = self.socio_economic(&all, m, &format!("group {g}"), cell, full)
                    {
                        groups.insert(g.clone(), r);
                    }
                }
            }
            NotionKind::CDP | NotionKind::CSEP => {
                let cond = cfg.conditional.as_deref().expect("validated");
                for (a, am) in category_masks(t, cond)? {
                    let mut cell_records = BTreeMap::new();
                    for (g, gm) in &group_list {
                        let label = format!("cell {a}/{g}");
                        let record = if kind == NotionKind::CDP {
                            self.parity(&am, &am.and(gm), &label)
                        } else {
                            let cell = self.resolved.zeta_cell(g, Some(&a));
                            self.socio_economic(&am, gm, &label, cell, true)
                        };
                        if let Some(r) = record {
                            cell_records.insert(g.clone(), r);
                        }
                    }
                    if !cell_records.is_empty() {
                        categories.insert(a, cell_records);
                    }
                }
            }
        }

        Ok(ViolationReport::assemble(
            kind,
            cfg.mode.name(),
            cfg.epsilon,
            groups,
            categories,
            self.skipped,
        ))
    }
}

/// Violation report of `predictions` under the resolved notion.
pub fn evaluate(
    t: &Table,
    predictions: &[f64],
    resolved: &ResolvedNotion,
) -> Result<ViolationReport> {
    Evaluation::new(t, predictions, resolved)?.run(t)
}

fn evaluate_as(
    kind: NotionKind,
    t: &Table,
    predictions: &[f64],
    resolved: &ResolvedNotion,
) -> Result<ViolationReport> {
    if resolved.kind() != kind {
        return Err(Error::Config(format!(
            "expected a {kind} configuration, got {}",
            resolved.kind()
        )));
    }
    evaluate(t, predictions, resolved)
}

pub fn ep_violation(t: &Table, predictions: &[f64], r: &ResolvedNotion) -> Result<ViolationReport> {
    evaluate_as(NotionKind::EP, t, predictions, r)
}

pub fn dp_violation(t: &Table, predictions: &[f64], r: &ResolvedNotion) -> Result<ViolationReport> {
    evaluate_as(NotionKind::DP, t, predictions, r)
}

pub fn cdp_violation(
    t: &Table,
    predictions: &[f64],
    r: &ResolvedNotion,
) -> Result<ViolationReport> {
    evaluate_as(NotionKind::CDP, t, predictions, r)
}

pub fn sep_violation(
    t: &Table,
    predictions: &[f64],
    r: &ResolvedNotion,
) -> Result<ViolationReport> {
    evaluate_as(NotionKind::SEP, t, predictions, r)
}

pub fn csep_violation(
    t: &Table,
    predictions: &[f64],
    r: &ResolvedNotion,
) -> Result<ViolationReport> {
    evaluate_as(NotionKind::CSEP, t, predictions, r)
}

pub fn sep_relaxed(t: &Table, predictions: &[f64], r: &ResolvedNotion) -> Result<ViolationReport> {
    evaluate_as(NotionKind::SepRelaxed, t, predictions, r)
}
