//! Brute-force reference implementation of the violation measures.
//!
//! Works on plain vectors and re-derives every threshold by direct
//! enumeration; it shares no code with the library beyond building the
//! `Table` handed to the library side of a comparison.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use fairsep_core::dataset::{ColumnKind, ColumnTag, Table, TableBuilder};

#[derive(Debug, Clone)]
pub struct RawTable {
    pub sex: Vec<String>,
    pub occ: Vec<String>,
    pub xp: Vec<f64>,
    pub xe: Vec<f64>,
    pub y: Vec<u8>,
}

impl RawTable {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn to_table(&self) -> Table {
        TableBuilder::new()
            .categorical("sex", ColumnKind::Protected, &self.sex)
            .categorical("occ", ColumnKind::Categorical, &self.occ)
            .numeric("xp", ColumnKind::Numerical, self.xp.clone())
            .tag(ColumnTag::Privilege)
            .numeric("xe", ColumnKind::Numerical, self.xe.clone())
            .tag(ColumnTag::Effort)
            .target("y", self.y.clone())
            .build()
            .expect("valid random table")
    }

    /// Same rows, all in a single category.
    pub fn with_single_category(&self) -> RawTable {
        RawTable {
            occ: vec!["only".to_string(); self.n()],
            ..self.clone()
        }
    }
}

#[allow(clippy::upper_case_acronyms)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kind {
    EP,
    DP,
    CDP,
    SEP,
    CSEP,
    Relaxed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scope {
    Global,
    PerGroup,
    PerCategoryGroup,
}

#[derive(Debug, Clone, Copy)]
pub struct Setup {
    pub kind: Kind,
    pub p: f64,
    pub scope: Scope,
    /// `None` = unit weights; `Some(cap)` = linear ramp capped at `cap`.
    pub cap: Option<f64>,
    /// Normalize the privileged-negatives term by all high-effort rows.
    pub t3_all_high: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub t1: f64,
    pub t2: Option<f64>,
    pub t3: Option<f64>,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// `(category, group) -> record`; category is `None` for unconditional kinds.
    pub records: BTreeMap<(Option<String>, String), Record>,
    pub aggregate: f64,
}

/// Top-p% cutoff by scanning every distinct value: the smallest value whose
/// upper tail holds at most `p`% of the rows. `None` if no value qualifies.
pub fn tau(x: &[f64], p: f64) -> Option<f64> {
    let n = x.len() as f64;
    let distinct: BTreeSet<u64> = x.iter().map(|v| v.to_bits()).collect();
    let mut best: Option<f64> = None;
    for bits in distinct {
        let v = f64::from_bits(bits);
        let tail = x.iter().filter(|&&u| u >= v).count() as f64;
        if tail * 100.0 <= p * n && best.is_none_or(|b| v < b) {
            best = Some(v);
        }
    }
    best
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut s, mut k) = (0.0, 0usize);
    for v in values {
        s += v;
        k += 1;
    }
    (k > 0).then(|| s / k as f64)
}

fn levels(v: &[String]) -> Vec<String> {
    v.iter()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Effort cutoff for row subset `(category, group)` under `scope`.
fn effort_cutoff(t: &RawTable, scope: Scope, group: &str, category: Option<&str>) -> f64 {
    let rows = |f: &dyn Fn(usize) -> bool| -> Vec<usize> { (0..t.n()).filter(|&i| f(i)).collect() };
    let global = mean(t.xe.iter().copied()).unwrap();
    let group_rows = rows(&|i| t.sex[i] == group);
    let group_mean = if group_rows.len() >= 2 {
        mean(group_rows.iter().map(|&i| t.xe[i])).unwrap()
    } else {
        global
    };
    match (scope, category) {
        (Scope::Global, _) => global,
        (Scope::PerGroup, _) | (Scope::PerCategoryGroup, None) => group_mean,
        (Scope::PerCategoryGroup, Some(a)) => {
            let cell = rows(&|i| t.sex[i] == group && t.occ[i] == a);
            if cell.len() >= 2 {
                mean(cell.iter().map(|&i| t.xe[i])).unwrap()
            } else {
                group_mean
            }
        }
    }
}

/// Largest effort in the weighting cell.
fn effort_max(t: &RawTable, scope: Scope, group: &str, category: Option<&str>) -> f64 {
    let over = |f: &dyn Fn(usize) -> bool| {
        (0..t.n())
            .filter(|&i| f(i))
            .map(|i| t.xe[i])
            .fold(f64::NEG_INFINITY, f64::max)
    };
    match category {
        Some(a) => over(&|i| t.sex[i] == group && t.occ[i] == a),
        None if scope == Scope::Global => over(&|_| true),
        None => over(&|i| t.sex[i] == group),
    }
}

fn zeta(x: f64, cut: f64, max: f64, cap: Option<f64>) -> f64 {
    match cap {
        None => 1.0,
        Some(cap) => {
            if x < cut || max <= cut {
                1.0
            } else {
                1.0 + ((x - cut) / (max - cut)).min(cap - 1.0)
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn socio_economic(
    t: &RawTable,
    h: &[f64],
    setup: &Setup,
    tau: f64,
    reference: &[usize],
    group: &str,
    category: Option<&str>,
    full: bool,
) -> Option<Record> {
    let under: Vec<usize> = reference
        .iter()
        .copied()
        .filter(|&i| t.sex[i] == group && t.xp[i] < tau)
        .collect();
    let ppr_ref = mean(reference.iter().map(|&i| h[i]))?;
    let ppr_under = mean(under.iter().map(|&i| h[i]))?;
    let t1 = (ppr_ref - ppr_under).abs();
    if !full {
        return Some(Record {
            t1,
            t2: None,
            t3: None,
            total: t1,
        });
    }
    let cut = effort_cutoff(t, setup.scope, group, category);
    let max = effort_max(t, setup.scope, group, category);
    let neg = |i: usize| 1.0 - h[i];
    let z = |i: usize| zeta(t.xe[i], cut, max, setup.cap);
    let low: Vec<usize> = under.iter().copied().filter(|&i| t.xe[i] < cut).collect();
    let high: Vec<usize> = under.iter().copied().filter(|&i| t.xe[i] >= cut).collect();
    let high_y0: Vec<usize> = high.iter().copied().filter(|&i| t.y[i] == 0).collect();
    let b: f64 = high.iter().map(|&i| z(i)).sum();
    let b0: f64 = high_y0.iter().map(|&i| z(i)).sum();
    let t2 = if !low.is_empty() && b > 0.0 {
        let low_rate = low.iter().map(|&i| neg(i)).sum::<f64>() / low.len() as f64;
        let high_rate = high.iter().map(|&i| z(i) * neg(i)).sum::<f64>() / b;
        Some((low_rate - high_rate).abs())
    } else {
        None
    };
    let privileged_y0: Vec<usize> = reference
        .iter()
        .copied()
        .filter(|&i| t.xp[i] >= tau && t.y[i] == 0)
        .collect();
    let t3 = if !privileged_y0.is_empty() && b0 > 0.0 {
        let p_rate =
            privileged_y0.iter().map(|&i| neg(i)).sum::<f64>() / privileged_y0.len() as f64;
        let den = if setup.t3_all_high { b } else { b0 };
        let h_rate = high_y0.iter().map(|&i| z(i) * neg(i)).sum::<f64>() / den;
        Some((p_rate - h_rate).abs())
    } else {
        None
    };
    Some(Record {
        t1,
        t2,
        t3,
        total: t1 + t2.unwrap_or(0.0) + t3.unwrap_or(0.0),
    })
}

/// Violation of positive-indicator vector `h` (already thresholded or
/// expected) under `setup`. `None` if the privilege cutoff is undefined.
pub fn violation(t: &RawTable, h: &[f64], setup: &Setup) -> Option<Outcome> {
    let n = t.n();
    let all: Vec<usize> = (0..n).collect();
    let groups = levels(&t.sex);
    let categories = levels(&t.occ);
    let needs_tau = matches!(setup.kind, Kind::SEP | Kind::CSEP | Kind::Relaxed);
    let tau = if needs_tau { tau(&t.xp, setup.p)? } else { 0.0 };
    let parity = |reference: &[usize], member: &[usize]| -> Option<Record> {
        let r = mean(reference.iter().map(|&i| h[i]))?;
        let m = mean(member.iter().map(|&i| h[i]))?;
        let gap = (r - m).abs();
        Some(Record {
            t1: gap,
            t2: None,
            t3: None,
            total: gap,
        })
    };
    let mut records = BTreeMap::new();
    for g in &groups {
        match setup.kind {
            Kind::DP => {
                let member: Vec<usize> = all.iter().copied().filter(|&i| t.sex[i] == *g).collect();
                if let Some(r) = parity(&all, &member) {
                    records.insert((None, g.clone()), r);
                }
            }
            Kind::EP => {
                let pos: Vec<usize> = all.iter().copied().filter(|&i| t.y[i] == 1).collect();
                let member: Vec<usize> = pos.iter().copied().filter(|&i| t.sex[i] == *g).collect();
                if let Some(r) = parity(&pos, &member) {
                    records.insert((None, g.clone()), r);
                }
            }
            Kind::SEP | Kind::Relaxed => {
                let full = setup.kind == Kind::SEP;
                if let Some(r) = socio_economic(t, h, setup, tau, &all, g, None, full) {
                    records.insert((None, g.clone()), r);
                }
            }
            Kind::CDP | Kind::CSEP => {
                for a in &categories {
                    let reference: Vec<usize> =
                        all.iter().copied().filter(|&i| t.occ[i] == *a).collect();
                    let r = if setup.kind == Kind::CDP {
                        let member: Vec<usize> = reference
                            .iter()
                            .copied()
                            .filter(|&i| t.sex[i] == *g)
                            .collect();
                        parity(&reference, &member)
                    } else {
                        socio_economic(t, h, setup, tau, &reference, g, Some(a), true)
                    };
                    if let Some(r) = r {
                        records.insert((Some(a.clone()), g.clone()), r);
                    }
                }
            }
        }
    }
    let aggregate = records.values().map(|r| r.total).fold(0.0, f64::max);
    Some(Outcome { records, aggregate })
}
