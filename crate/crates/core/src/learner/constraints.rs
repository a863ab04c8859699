//! Linear moment constraints `sum_i w_i h_i + offset <= slack` derived from a
//! fairness notion.
//!
//! Each absolute-difference term `|mean_R(h) - mean_M(h)|` becomes the pair
//! `mean_R(h) - mean_M(h) <= eps` and `mean_M(h) - mean_R(h) <= eps`. The
//! one-sided effort terms become a single constraint stating that
//! high-effort underprivileged rows are not rejected more often than the
//! matching low-effort or privileged reference set. [`EffortSides::TwoSided`]
//! adds the reverse direction, so the constraints bound the absolute effort
//! terms of the violation measure. The weights depend only on
//! the data, never on the classifier, so every moment is linear in `h`.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::dataset::Table;
use crate::groupstats::Mask;
use crate::notions::{category_masks, NotionKind, ResolvedNotion, T3Normalizer, ZetaCell};
use crate::{Error, Result};

/// How the effort terms of SEP and CSEP are compiled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffortSides {
    /// Only favour high-effort underprivileged rows, as in the notion's
    /// definition.
    #[default]
    OneSided,
    /// Also cap the reverse difference, matching the absolute terms of the
    /// violation measure.
    TwoSided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentConstraint {
    pub name: String,
    /// Per-row weights `w_i`.
    pub weights: Vec<f64>,
    pub offset: f64,
    pub slack: f64,
}

impl MomentConstraint {
    /// `g(h) = sum_i w_i h_i + offset` for per-row positive scores `h`.
    pub fn moment(&self, scores: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(scores)
            .map(|(w, h)| w * h)
            .sum::<f64>()
            + self.offset
    }

    /// `g(h) - slack`; positive means violated.
    pub fn violation(&self, scores: &[f64]) -> f64 {
        self.moment(scores) - self.slack
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub constraints: Vec<MomentConstraint>,
    /// Terms left out because a subgroup was empty.
    pub dropped: Vec<String>,
}

impl ConstraintSet {
    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.constraints.iter().map(|c| c.name.clone()).collect()
    }
}

/// Weights averaging `h` over `m` (each member `1 / |m|`).
fn mean_weights(n: usize, m: &Mask) -> Option<Vec<f64>> {
    let count = m.count();
    if count == 0 {
        return None;
    }
    let mut w = vec![0.0; n];
    let inv = 1.0 / count as f64;
    for i in m.rows() {
        w[i] = inv;
    }
    Some(w)
}

/// Weights `zeta_i / denominator` over `m`.
fn weighted_weights(n: usize, m: &Mask, zeta: &[f64], denominator: f64) -> Option<Vec<f64>> {
    if !(denominator > 0.0) || m.count() == 0 {
        return None;
    }
    let mut w = vec![0.0; n];
    for i in m.rows() {
        w[i] = zeta[i] / denominator;
    }
    Some(w)
}

fn difference(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

struct Builder<'a> {
    n: usize,
    eps: f64,
    labels: &'a [u8],
    sides: EffortSides,
    out: ConstraintSet,
}

impl Builder<'_> {
    fn push(&mut self, name: String, weights: Vec<f64>) {
        self.out.constraints.push(MomentConstraint {
            name,
            weights,
            offset: 0.0,
            slack: self.eps,
        });
    }

    /// `weights` as stated, plus the reverse direction when two-sided.
    fn push_sided(&mut self, name: String, weights: Vec<f64>) {
        let reverse = weights.iter().map(|w| -w).collect();
        self.push(name.clone(), weights);
        if self.sides == EffortSides::TwoSided {
            self.push(format!("{name} reverse"), reverse);
        }
    }

    fn drop_term(&mut self, name: String) {
        warn!("constraint {name} dropped: empty subgroup");
        self.out.dropped.push(name);
    }

    /// `mean_member(h) - mean_reference(h)` in both directions.
    fn parity_pair(&mut self, name: &str, reference: &Mask, member: &Mask) {
        match (
            mean_weights(self.n, reference),
            mean_weights(self.n, member),
        ) {
            (Some(r), Some(m)) => {
                let up = difference(&m, &r);
                let down = up.iter().map(|w| -w).collect();
                self.push(format!("{name} parity+"), up);
                self.push(format!("{name} parity-"), down);
            }
            _ => self.drop_term(format!("{name} parity")),
        }
    }

    /// Effort terms of the socio-economic notion for one underprivileged set.
    #[allow(clippy::too_many_arguments)]
    fn effort_terms(
        &mut self,
        name: &str,
        under: &Mask,
        privileged: &Mask,
        effort: &[f64],
        cell: ZetaCell,
        resolved: &ResolvedNotion,
    ) {
        let zeta_cfg = resolved.config.zeta;
        let zeta: Vec<f64> = effort.iter().map(|&x| zeta_cfg.weight(x, &cell)).collect();
        let high = Mask::from_vec(effort.iter().map(|&x| x >= cell.threshold).collect());
        let y0 = Mask::from_vec(self.labels.iter().map(|&y| y == 0).collect());
        let under_high = under.and(&high);
        let under_low = under.and(&high.not());
        let under_high_y0 = under_high.and(&y0);
        let b: f64 = under_high.rows().map(|i| zeta[i]).sum();
        let b0: f64 = under_high_y0.rows().map(|i| zeta[i]).sum();

        // High-effort rows are accepted at least as often (zeta-weighted) as
        // low-effort rows: mean_low(h) - zeta-mean_high(h) <= eps.
        match (
            mean_weights(self.n, &under_low),
            weighted_weights(self.n, &under_high, &zeta, b),
        ) {
            (Some(low), Some(high_w)) => {
                self.push_sided(format!("{name} effort"), difference(&low, &high_w))
            }
            _ => self.drop_term(format!("{name} effort")),
        }

        let t3_den = match resolved.config.t3_normalizer {
            T3Normalizer::NegativeSubset => b0,
            T3Normalizer::AllHighEffort => b,
        };
        let priv_y0 = privileged.and(&y0);
        match (
            mean_weights(self.n, &priv_y0),
            weighted_weights(self.n, &under_high_y0, &zeta, t3_den),
        ) {
            // Privileged negatives are not accepted more often than
            // high-effort underprivileged negatives.
            (Some(p), Some(high_w)) if b0 > 0.0 => {
                self.push_sided(
                    format!("{name} privileged-negatives"),
                    difference(&p, &high_w),
                );
            }
            _ => self.drop_term(format!("{name} privileged-negatives")),
        }
    }
}

/// Translates `resolved` into linear moment constraints with slack `eps_train`.
///
/// Per protected group: EP and DP give one parity pair, CDP one pair per
/// category, SEP a parity pair plus two effort constraints, CSEP the SEP set
/// per category, and SEP_relaxed the parity pair only.
pub fn compile_constraints(
    t: &Table,
    resolved: &ResolvedNotion,
    eps_train: f64,
) -> Result<ConstraintSet> {
    compile_constraints_with(t, resolved, eps_train, EffortSides::OneSided)
}

/// [`compile_constraints`] with a choice of effort-term sides.
pub fn compile_constraints_with(
    t: &Table,
    resolved: &ResolvedNotion,
    eps_train: f64,
    sides: EffortSides,
) -> Result<ConstraintSet> {
    let cfg = &resolved.config;
    cfg.validate()?;
    if !(eps_train >= 0.0) {
        return Err(Error::Config(format!(
            "training slack must be >= 0, got {eps_train}"
        )));
    }
    let n = t.n_rows();
    let labels = t.labels();
    let mut builder = Builder {
        n,
        eps: eps_train,
        labels,
        sides,
        out: ConstraintSet {
            constraints: Vec::new(),
            dropped: Vec::new(),
        },
    };

    let all_groups = category_masks(t, &cfg.protected)?;
    let groups: Vec<(String, Mask)> = match &cfg.groups {
        None => all_groups,
        Some(wanted) => wanted
            .iter()
            .filter_map(|g| {
                let found = all_groups.iter().find(|(name, _)| name == g).cloned();
                if found.is_none() {
                    builder.drop_term(format!("group {g}"));
                }
                found
            })
            .collect(),
    };

    let kind = cfg.kind;
    let all = Mask::full(n);
    let privileged = match (&resolved.privilege, kind.needs_privilege()) {
        (Some(th), true) => {
            let x = t.numeric(&th.column)?;
            Some(Mask::from_vec(
                x.iter().map(|&v| th.is_privileged(v)).collect(),
            ))
        }
        (None, true) => {
            return Err(Error::Config(format!(
                "{kind} needs a resolved privilege threshold"
            )))
        }
        _ => None,
    };
    let effort = match (&resolved.effort, kind.needs_effort()) {
        (Some(e), true) => Some(t.numeric(&e.column)?),
        (None, true) => {
            return Err(Error::Config(format!(
                "{kind} needs resolved effort thresholds"
            )))
        }
        _ => None,
    };

    let socio_economic = |b: &mut Builder,
                          name: &str,
                          reference: &Mask,
                          group: &Mask,
                          category: Option<&str>,
                          g: &str| {
        let privileged = privileged.as_ref().expect("checked above");
        let under = reference.and(group).and(&privileged.not());
        b.parity_pair(name, reference, &under);
        if let Some(effort) = effort {
            let cell = resolved.zeta_cell(g, category).expect("effort resolved");
            b.effort_terms(
                name,
                &under,
                &reference.and(privileged),
                effort,
                cell,
                resolved,
            );
        }
    };

    match kind {
        NotionKind::DP => {
            for (g, m) in &groups {
                builder.parity_pair(&format!("DP[{g}]"), &all, m);
            }
        }
        NotionKind::EP => {
            let pos = Mask::from_vec(labels.iter().map(|&y| y == 1).collect());
            for (g, m) in &groups {
                builder.parity_pair(&format!("EP[{g}]"), &pos, &m.and(&pos));
            }
        }
        NotionKind::SEP | NotionKind::SepRelaxed => {
            for (g, m) in &groups {
                socio_economic(&mut builder, &format!("{kind}[{g}]"), &all, m, None, g);
            }
        }
        NotionKind::CDP | NotionKind::CSEP => {
            let cond = cfg.conditional.as_deref().expect("validated");
            for (a, am) in category_masks(t, cond)? {
                for (g, gm) in &groups {
                    let name = format!("{kind}[{a}/{g}]");
                    if kind == NotionKind::CDP {
                        builder.parity_pair(&name, &am, &am.and(gm));
                    } else {
                        socio_economic(&mut builder, &name, &am, gm, Some(&a), g);
                    }
                }
            }
        }
    }
    Ok(builder.out)
}
