use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::table::Table;
use crate::{Error, Result};

/// Seeded train/test split stratified by (protected group, label).
///
/// Returns ascending row indices `(train, test)`; each stratum contributes
/// `round(len * test_fraction)` rows to the test side.
pub fn stratified_split(
    t: &Table,
    protected: &str,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::Config(format!(
            "test fraction must lie in [0, 1), got {test_fraction}"
        )));
    }
    let (_, codes) = t.categorical(protected)?;
    let mut strata: BTreeMap<(u32, u8), Vec<usize>> = BTreeMap::new();
    for (i, (&c, &y)) in codes.iter().zip(t.labels()).enumerate() {
        strata.entry((c, y)).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::with_capacity(t.n_rows());
    let mut test = Vec::new();
    for (_, mut rows) in strata {
        rows.shuffle(&mut rng);
        let k = (rows.len() as f64 * test_fraction).round() as usize;
        test.extend_from_slice(&rows[..k]);
        train.extend_from_slice(&rows[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}
