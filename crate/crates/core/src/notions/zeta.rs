use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightingKind {
    Unit,
    LinearCapped,
}

/// Effort weighting applied to high-effort underprivileged rows.
///
/// `LinearCapped` ramps from 1 at the cell's effort cutoff `e` to `cap` at the
/// cell's maximum observed effort `m`:
/// `1 + min((x - e) / (m - e), cap - 1)` for `x >= e`, and 1 below `e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffortWeighting {
    pub kind: WeightingKind,
    #[serde(default = "default_cap")]
    pub cap: f64,
}

fn default_cap() -> f64 {
    2.0
}

impl Default for EffortWeighting {
    fn default() -> Self {
        Self {
            kind: WeightingKind::LinearCapped,
            cap: default_cap(),
        }
    }
}

/// Scope cell a weight is referenced to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZetaCell {
    /// Effort cutoff `e` of the cell.
    pub threshold: f64,
    /// Largest observed effort `m` in the cell.
    pub max: f64,
}

impl ZetaCell {
    pub fn has_spread(&self) -> bool {
        self.max > self.threshold
    }
}

impl EffortWeighting {
    pub fn unit() -> Self {
        Self {
            kind: WeightingKind::Unit,
            cap: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cap >= 1.0) || !self.cap.is_finite() {
            return Err(Error::Config(format!(
                "effort weighting cap must be a finite value >= 1, got {}",
                self.cap
            )));
        }
        Ok(())
    }

    /// Weight of effort `x` in `cell`. Always in `[1, cap]`.
    pub fn weight(&self, x: f64, cell: &ZetaCell) -> f64 {
        match self.kind {
            WeightingKind::Unit => 1.0,
            WeightingKind::LinearCapped => {
                if x < cell.threshold || !cell.has_spread() {
                    1.0
                } else {
                    let ramp = (x - cell.threshold) / (cell.max - cell.threshold);
                    1.0 + ramp.min(self.cap - 1.0)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const CELL: ZetaCell = ZetaCell {
        threshold: 40.0,
        max: 60.0,
    };

    #[test]
    fn boundary_and_cap() {
        let z = EffortWeighting::default();
        assert_eq!(z.weight(40.0, &CELL), 1.0);
        assert_eq!(z.weight(60.0, &CELL), 2.0);
        assert_eq!(z.weight(50.0, &CELL), 1.5);
        assert_eq!(z.weight(99.0, &CELL), 2.0);
        assert_eq!(z.weight(10.0, &CELL), 1.0);
    }

    #[test]
    fn no_spread_gives_one() {
        let z = EffortWeighting::default();
        let flat = ZetaCell {
            threshold: 40.0,
            max: 40.0,
        };
        assert_eq!(z.weight(40.0, &flat), 1.0);
        assert!(!flat.has_spread());
    }

    #[test]
    fn cap_below_one_rejected() {
        let z = EffortWeighting {
            kind: WeightingKind::LinearCapped,
            cap: 0.5,
        };
        assert!(z.validate().is_err());
    }

    proptest! {
        #[test]
        fn weight_properties(
            e in 0.0f64..50.0, spread in 0.0f64..50.0, cap in 1.0f64..5.0,
            a in -10.0f64..120.0, b in -10.0f64..120.0,
        ) {
            let cell = ZetaCell { threshold: e, max: e + spread };
            let z = EffortWeighting { kind: WeightingKind::LinearCapped, cap };
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (wl, wh) = (z.weight(lo, &cell), z.weight(hi, &cell));
            prop_assert!(wl <= wh);
            prop_assert!(wl >= 1.0 && wh <= cap);
            if lo < e { prop_assert_eq!(wl, 1.0); }
            prop_assert_eq!(EffortWeighting::unit().weight(a, &cell), 1.0);
        }
    }
}
