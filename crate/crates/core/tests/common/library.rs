//! Library-side evaluation matching an oracle `Setup`.

#![allow(dead_code)]

use std::collections::BTreeMap;

use fairsep_core::dataset::{EffortScope, Table};
use fairsep_core::groupstats::RateMode;
use fairsep_core::notions::{
    evaluate, EffortWeighting, NotionConfig, NotionKind, T3Normalizer, ViolationReport,
    WeightingKind,
};
use fairsep_core::Result;

use super::oracle::{Kind, Outcome, Record, Scope, Setup};

pub fn config(setup: &Setup) -> NotionConfig {
    let kind = match setup.kind {
        Kind::EP => NotionKind::EP,
        Kind::DP => NotionKind::DP,
        Kind::CDP => NotionKind::CDP,
        Kind::SEP => NotionKind::SEP,
        Kind::CSEP => NotionKind::CSEP,
        Kind::Relaxed => NotionKind::SepRelaxed,
    };
    let scope = match setup.scope {
        Scope::Global => EffortScope::Global,
        Scope::PerGroup => EffortScope::PerGroup,
        Scope::PerCategoryGroup => EffortScope::PerCategoryGroup,
    };
    let zeta = match setup.cap {
        None => EffortWeighting::unit(),
        Some(cap) => EffortWeighting {
            kind: WeightingKind::LinearCapped,
            cap,
        },
    };
    let mut cfg = NotionConfig::new(kind, "sex")
        .with_mode(RateMode::Expected)
        .with_zeta(zeta);
    if matches!(setup.kind, Kind::CDP | Kind::CSEP) {
        cfg = cfg.with_conditional("occ");
    }
    if matches!(setup.kind, Kind::SEP | Kind::CSEP | Kind::Relaxed) {
        cfg = cfg.with_privilege("xp", setup.p);
    }
    if matches!(setup.kind, Kind::SEP | Kind::CSEP) {
        cfg = cfg.with_effort("xe", scope);
    }
    if setup.t3_all_high {
        cfg.t3_normalizer = T3Normalizer::AllHighEffort;
    }
    cfg
}

pub fn run(t: &Table, h: &[f64], setup: &Setup) -> Result<ViolationReport> {
    let resolved = config(setup).resolve(t)?;
    evaluate(t, h, &resolved)
}

/// The report in the oracle's shape.
pub fn outcome(report: &ViolationReport) -> Outcome {
    let records: BTreeMap<_, _> = report
        .records()
        .into_iter()
        .map(|(a, g, r)| {
            (
                (a.map(str::to_string), g.to_string()),
                Record {
                    t1: r.t1.unwrap(),
                    t2: r.t2,
                    t3: r.t3,
                    total: r.total,
                },
            )
        })
        .collect();
    Outcome {
        records,
        aggregate: report.aggregate,
    }
}

/// Maximum absolute difference between two outcomes, or `None` if their
/// record sets or skipped terms differ.
pub fn distance(a: &Outcome, b: &Outcome) -> Option<f64> {
    if a.records.keys().ne(b.records.keys()) {
        return None;
    }
    let opt = |x: Option<f64>, y: Option<f64>| match (x, y) {
        (Some(x), Some(y)) => Some((x - y).abs()),
        (None, None) => Some(0.0),
        _ => None,
    };
    let mut worst = (a.aggregate - b.aggregate).abs();
    for (k, ra) in &a.records {
        let rb = &b.records[k];
        worst = worst
            .max((ra.t1 - rb.t1).abs())
            .max((ra.total - rb.total).abs())
            .max(opt(ra.t2, rb.t2)?)
            .max(opt(ra.t3, rb.t3)?);
    }
    Some(worst)
}
