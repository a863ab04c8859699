//! Generated tables with planted structure.

#![allow(dead_code)]

use fairsep_core::dataset::{ColumnKind, ColumnTag, Table, TableBuilder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Sex is independent of everything: every row appears once as `F` and once
/// as `M` with identical features and label.
pub fn independent_sex(pairs: usize, seed: u64) -> Table {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::<f64>::new(0.0, 1.0).unwrap();
    let (mut sex, mut x1, mut x2, mut y) = (vec![], vec![], vec![], vec![]);
    for _ in 0..pairs {
        let a: f64 = normal.sample(&mut rng);
        let b: f64 = normal.sample(&mut rng);
        let label = u8::from(a + 0.5 * b + 0.3 * normal.sample(&mut rng) > 0.3);
        for s in ["F", "M"] {
            sex.push(s);
            x1.push(a);
            x2.push(b);
            y.push(label);
        }
    }
    TableBuilder::new()
        .categorical("sex", ColumnKind::Protected, &sex)
        .numeric("x1", ColumnKind::Numerical, x1)
        .numeric("x2", ColumnKind::Numerical, x2)
        .target("y", y)
        .build()
        .unwrap()
}

/// A feature shifted by sex drives the label, so an accurate classifier has a
/// large demographic-parity gap.
pub fn planted_dp(n: usize, seed: u64) -> Table {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::<f64>::new(0.0, 1.0).unwrap();
    let (mut sex, mut x, mut z, mut y) = (vec![], vec![], vec![], vec![]);
    for i in 0..n {
        let male = i % 2 == 1;
        let xi = normal.sample(&mut rng) + if male { 1.5 } else { 0.0 };
        sex.push(if male { "M" } else { "F" });
        y.push(u8::from(xi + 0.3 * normal.sample(&mut rng) > 0.75));
        x.push(xi);
        z.push(normal.sample(&mut rng));
    }
    TableBuilder::new()
        .categorical("sex", ColumnKind::Protected, &sex)
        .numeric("x", ColumnKind::Numerical, x)
        .numeric("z", ColumnKind::Numerical, z)
        .target("y", y)
        .build()
        .unwrap()
}

/// Wealth (privilege) alone decides the label: `y = 1` iff wealth is in the
/// top quarter. Women hold less wealth. Hours (effort) and a noise column are
/// unrelated to the label.
pub fn privilege_driven(n: usize, seed: u64) -> Table {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::<f64>::new(0.0, 1.0).unwrap();
    let mut sex = Vec::with_capacity(n);
    let mut wealth = Vec::with_capacity(n);
    let mut hours = Vec::with_capacity(n);
    let mut noise = Vec::with_capacity(n);
    for _ in 0..n {
        let female = rng.gen_bool(0.5);
        let shift = if female { 0.0 } else { 1.0 };
        sex.push(if female { "F" } else { "M" });
        wealth.push((normal.sample(&mut rng) + shift).exp() * 1000.0);
        hours.push(
            (40.0 + 8.0 * normal.sample(&mut rng))
                .round()
                .clamp(1.0, 99.0),
        );
        noise.push(normal.sample(&mut rng));
    }
    let mut sorted = wealth.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let cut = sorted[n - n / 4];
    let y = wealth.iter().map(|&w| u8::from(w >= cut)).collect();
    TableBuilder::new()
        .categorical("sex", ColumnKind::Protected, &sex)
        .numeric("wealth", ColumnKind::Numerical, wealth)
        .tag(ColumnTag::Privilege)
        .numeric("hours", ColumnKind::Numerical, hours)
        .tag(ColumnTag::Effort)
        .numeric("noise", ColumnKind::Numerical, noise)
        .target("y", y)
        .build()
        .unwrap()
}
