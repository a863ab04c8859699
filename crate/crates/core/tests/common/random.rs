//! Seeded generator of small mixed-type tables and predictions.

#![allow(dead_code)]

use rand::Rng;

use super::oracle::{Kind, RawTable, Scope, Setup};

/// A table with 4..=32 rows, both sexes present, coarse privilege/effort
/// values (so ties and empty cells are common).
pub fn table<R: Rng>(rng: &mut R) -> RawTable {
    let n = rng.gen_range(4..=32);
    let mut sex: Vec<String> = (0..n)
        .map(|_| if rng.gen_bool(0.5) { "F" } else { "M" }.to_string())
        .collect();
    sex[0] = "F".into();
    sex[1] = "M".into();
    let occ = (0..n)
        .map(|_| ["a", "b", "c"][rng.gen_range(0..3)].to_string())
        .collect();
    let xp = (0..n)
        .map(|_| [0.0, 0.0, 1.0, 2.0, 5.0, 10.0][rng.gen_range(0..6)])
        .collect();
    let xe = (0..n)
        .map(|_| [10.0, 20.0, 30.0, 40.0, 50.0][rng.gen_range(0..5)])
        .collect();
    let y = (0..n).map(|_| u8::from(rng.gen_bool(0.4))).collect();
    RawTable {
        sex,
        occ,
        xp,
        xe,
        y,
    }
}

/// Predictions: hard labels or scores in [0, 1], chosen at random.
pub fn predictions<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    if rng.gen_bool(0.5) {
        (0..n)
            .map(|_| f64::from(u8::from(rng.gen_bool(0.5))))
            .collect()
    } else {
        (0..n).map(|_| rng.gen::<f64>()).collect()
    }
}

/// Random threshold, scope and weighting choices for `kind`.
pub fn setup<R: Rng>(rng: &mut R, kind: Kind) -> Setup {
    let scope = match (kind, rng.gen_range(0..3)) {
        (_, 0) => Scope::Global,
        (Kind::CSEP, 2) => Scope::PerCategoryGroup,
        _ => Scope::PerGroup,
    };
    Setup {
        kind,
        p: [10.0, 25.0, 40.0, 60.0][rng.gen_range(0..4)],
        scope,
        cap: if rng.gen_bool(0.3) {
            None
        } else {
            Some(rng.gen_range(1.0..3.0))
        },
        t3_all_high: rng.gen_bool(0.2),
    }
}
