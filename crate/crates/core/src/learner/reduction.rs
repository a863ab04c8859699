//! Exponentiated-gradient reduction: a multiplier player raises the price of
//! violated constraints, a cost-sensitive base learner best-responds, and the
//! returned classifier is the uniform mixture of the best responses.

use log::warn;
use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::constraints::{EffortSides, MomentConstraint};
use super::logistic::{fit_base, fit_design, Design, LogisticModel, LogisticParams};
use crate::{Error, Result};

/// What a mixture member contributes for a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemberOutput {
    /// Thresholded label at 0.5: the mixture score is the probability that
    /// the randomized classifier predicts positive.
    #[default]
    Label,
    /// Raw probability.
    Probability,
}

impl MemberOutput {
    fn apply(self, p: f64) -> f64 {
        match self {
            Self::Label => f64::from(u8::from(p >= 0.5)),
            Self::Probability => p,
        }
    }
}

/// How the returned mixture weights its members.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixtureRule {
    /// Uniform weights over iterations `1..=best`.
    Uniform,
    /// Weights over all iterations minimizing
    /// `error + B * max(0, max violation)` (a small linear program); falls
    /// back to `Uniform` when that is not better.
    #[default]
    Optimized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionParams {
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Multiplier step `eta`; the log-multipliers move by
    /// `eta / multiplier_bound` times the constraint gap per iteration.
    #[serde(default = "default_eta")]
    pub learning_rate: f64,
    /// Bound `B` on the total multiplier mass.
    #[serde(default = "default_bound")]
    pub multiplier_bound: f64,
    /// Constraint slack used during training.
    #[serde(default = "default_eps_train")]
    pub eps_train: f64,
    /// Stop after this many iterations without a better mixture.
    #[serde(default)]
    pub patience: Option<usize>,
    /// Sides of the SEP/CSEP effort constraints.
    #[serde(default)]
    pub effort_sides: EffortSides,
    #[serde(default)]
    pub member_output: MemberOutput,
    #[serde(default)]
    pub mixture: MixtureRule,
    #[serde(default)]
    pub base: LogisticParams,
}

fn default_max_iter() -> usize {
    50
}

fn default_eta() -> f64 {
    2.0
}

fn default_bound() -> f64 {
    100.0
}

fn default_eps_train() -> f64 {
    0.02
}

impl Default for ReductionParams {
    fn default() -> Self {
        Self {
            max_iter: default_max_iter(),
            learning_rate: default_eta(),
            multiplier_bound: default_bound(),
            eps_train: default_eps_train(),
            patience: None,
            effort_sides: EffortSides::default(),
            member_output: MemberOutput::default(),
            mixture: MixtureRule::default(),
            base: LogisticParams::default(),
        }
    }
}

impl ReductionParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be positive".into()));
        }
        for (name, v) in [
            ("learning_rate", self.learning_rate),
            ("multiplier_bound", self.multiplier_bound),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.eps_train >= 0.0) {
            return Err(Error::Config(format!(
                "eps_train must be >= 0, got {}",
                self.eps_train
            )));
        }
        if self.patience == Some(0) {
            return Err(Error::Config("patience must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub model: LogisticModel,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSummary {
    pub name: String,
    pub slack: f64,
}

/// Bookkeeping of one iteration, all on the training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Multipliers used for this iteration's best response.
    pub lambda: Vec<f64>,
    pub member_error: f64,
    /// `max_j g_j - slack_j` of this iteration's best response.
    pub member_max_violation: f64,
    pub mixture_error: f64,
    /// `max_j g_j - slack_j` of the mixture of iterations `1..=iteration`.
    pub mixture_max_violation: f64,
    /// `error + B * max(0, mixture_max_violation)`.
    pub objective: f64,
}

/// A (possibly randomized) classifier: a weighted mixture of logistic models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedModel {
    pub members: Vec<Member>,
    pub member_output: MemberOutput,
    pub params: ReductionParams,
    pub constraints: Vec<ConstraintSummary>,
    pub trajectory: Vec<IterationRecord>,
    /// Iteration whose mixture was returned (0 without constraints).
    pub best_iteration: usize,
    /// `max(0, max_j g_j - slack_j)` of the returned mixture on training data.
    pub final_max_violation: f64,
    pub training_error: f64,
    pub early_stopped: bool,
    /// Returned mixture violates a training constraint.
    pub infeasible: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PredictMode {
    /// Mixture score in [0, 1].
    Score,
    /// `1` iff the score is `>= cutoff`.
    Hard { cutoff: f64 },
}

impl ReducedModel {
    /// Wraps a single unconstrained model.
    pub fn single(model: LogisticModel, params: ReductionParams) -> Self {
        Self {
            members: vec![Member { model, weight: 1.0 }],
            member_output: MemberOutput::Probability,
            params,
            constraints: Vec::new(),
            trajectory: Vec::new(),
            best_iteration: 0,
            final_max_violation: 0.0,
            training_error: f64::NAN,
            early_stopped: false,
            infeasible: false,
            warnings: Vec::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.members.first().map_or(0, |m| m.model.width())
    }

    pub fn predict(&self, x: ArrayView2<f64>, mode: PredictMode) -> Result<Vec<f64>> {
        let mut scores = vec![0.0; x.nrows()];
        for member in &self.members {
            let p = member.model.predict_proba(x)?;
            for (s, p) in scores.iter_mut().zip(p) {
                *s += member.weight * self.member_output.apply(p);
            }
        }
        // Weights sum to one only up to rounding.
        scores.iter_mut().for_each(|s| *s = s.clamp(0.0, 1.0));
        Ok(match mode {
            PredictMode::Score => scores,
            PredictMode::Hard { cutoff } => scores
                .into_iter()
                .map(|s| f64::from(u8::from(s >= cutoff)))
                .collect(),
        })
    }
}

/// Predictions of `model` on `x`; errors if the feature width differs.
pub fn predict(model: &ReducedModel, x: ArrayView2<f64>, mode: PredictMode) -> Result<Vec<f64>> {
    model.predict(x, mode)
}

/// Multipliers `lambda_j = B exp(theta_j) / (1 + sum_k exp(theta_k))`,
/// computed stably.
fn multipliers(theta: &[f64], bound: f64) -> Vec<f64> {
    let top = theta.iter().copied().fold(0.0, f64::max);
    let denom = (-top).exp() + theta.iter().map(|t| (t - top).exp()).sum::<f64>();
    theta
        .iter()
        .map(|t| bound * (t - top).exp() / denom)
        .collect()
}

fn error_rate(outputs: &[f64], labels: &[u8]) -> f64 {
    let n = labels.len().max(1) as f64;
    outputs
        .iter()
        .zip(labels)
        .map(|(&o, &y)| if y == 1 { 1.0 - o } else { o })
        .sum::<f64>()
        / n
}

/// Trains a mixture satisfying `constraints` approximately.
///
/// With no constraints this is exactly [`fit_base`] wrapped as a one-member
/// mixture. Otherwise each iteration fits the base learner on per-row costs
/// `c_i = (1 - 2 y_i) / n + sum_j lambda_j w_ji`, then moves the
/// log-multipliers by `(eta / B) * (g_j(h_t) - slack_j)`. The mixture with the lowest
/// `error + B * max violation` is returned.
pub fn exponentiated_gradient(
    x: ArrayView2<f64>,
    labels: &[u8],
    constraints: &[MomentConstraint],
    params: &ReductionParams,
) -> Result<ReducedModel> {
    params.validate()?;
    let n = x.nrows();
    if labels.len() != n {
        return Err(Error::Alignment {
            expected: n,
            actual: labels.len(),
        });
    }
    if constraints.is_empty() {
        let fit = fit_base(x, labels, None, &params.base)?;
        let mut model = ReducedModel::single(fit.model, params.clone());
        let p = model.predict(x, PredictMode::Score)?;
        model.training_error = error_rate(&p, labels);
        return Ok(model);
    }
    for c in constraints {
        if c.weights.len() != n {
            return Err(Error::Alignment {
                expected: n,
                actual: c.weights.len(),
            });
        }
    }
    if let Some(v) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::Training(format!("non-finite feature value {v}")));
    }

    let design = Design::from_dense(x);
    let step = params.learning_rate / params.multiplier_bound;
    let m = constraints.len();
    let bound = params.multiplier_bound;
    let mut theta = vec![0.0; m];
    let mut members: Vec<LogisticModel> = Vec::new();
    let mut moment_sums = vec![0.0; m];
    let mut error_sum = 0.0;
    let mut trajectory = Vec::new();
    let mut member_gaps: Vec<Vec<f64>> = Vec::new();
    let mut best: Option<(usize, f64)> = None;
    let mut early_stopped = false;
    let mut warnings = Vec::new();
    let base_cost: Vec<f64> = labels
        .iter()
        .map(|&y| (1.0 - 2.0 * f64::from(y)) / n as f64)
        .collect();

    for iteration in 1..=params.max_iter {
        let lambda = multipliers(&theta, bound);
        let mut costs = base_cost.clone();
        for (c, l) in constraints.iter().zip(&lambda) {
            for (ci, w) in costs.iter_mut().zip(&c.weights) {
                *ci += l * w;
            }
        }
        let (targets, weights): (Vec<f64>, Vec<f64>) = costs
            .iter()
            .map(|&c| (if c < 0.0 { 1.0 } else { 0.0 }, c.abs()))
            .unzip();
        let fit = fit_design(&design, &targets, &weights, &params.base);
        let outputs: Vec<f64> = design
            .predict_proba(&fit.model)
            .into_iter()
            .map(|p| params.member_output.apply(p))
            .collect();
        members.push(fit.model);

        let member_error = error_rate(&outputs, labels);
        let gaps: Vec<f64> = constraints.iter().map(|c| c.violation(&outputs)).collect();
        for ((t, s), g) in theta.iter_mut().zip(moment_sums.iter_mut()).zip(&gaps) {
            *t += step * g;
            *s += g;
        }
        error_sum += member_error;
        member_gaps.push(gaps.clone());

        let k = iteration as f64;
        let mixture_error = error_sum / k;
        let mixture_max_violation = moment_sums
            .iter()
            .map(|s| s / k)
            .fold(f64::NEG_INFINITY, f64::max);
        let objective = mixture_error + bound * mixture_max_violation.max(0.0);
        trajectory.push(IterationRecord {
            iteration,
            lambda,
            member_error,
            member_max_violation: gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mixture_error,
            mixture_max_violation,
            objective,
        });
        if best.is_none_or(|(_, o)| objective < o) {
            best = Some((iteration, objective));
        }
        if let (Some(patience), Some((b, _))) = (params.patience, best) {
            if iteration - b >= patience && iteration < params.max_iter {
                early_stopped = true;
                warnings.push(format!(
                    "stopped at iteration {iteration}: no improvement for {patience} iterations"
                ));
                break;
            }
        }
    }

    let (best_iteration, best_objective) = best.expect("at least one iteration");
    let uniform = {
        let mut q = vec![0.0; members.len()];
        q[..best_iteration]
            .iter_mut()
            .for_each(|w| *w = 1.0 / best_iteration as f64);
        q
    };
    let errors: Vec<f64> = trajectory.iter().map(|r| r.member_error).collect();
    let weights = match params.mixture {
        MixtureRule::Uniform => uniform,
        MixtureRule::Optimized => match optimal_mixture(&errors, &member_gaps, bound) {
            Some(q) if mixture_objective(&q, &errors, &member_gaps, bound) < best_objective => q,
            Some(_) => uniform,
            None => {
                let msg = "mixture optimization failed; using the uniform best prefix".to_string();
                warn!("{msg}");
                warnings.push(msg);
                uniform
            }
        },
    };
    let (training_error, max_gap) = mixture_stats(&weights, &errors, &member_gaps);
    let final_max_violation = max_gap.max(0.0);
    let infeasible = final_max_violation > 0.0;
    if infeasible {
        let msg =
            format!("returned mixture violates a training constraint by {final_max_violation:.4}");
        warn!("{msg}");
        warnings.push(msg);
    }
    Ok(ReducedModel {
        members: members
            .into_iter()
            .zip(weights)
            .filter(|(_, w)| *w > 0.0)
            .map(|(model, weight)| Member { model, weight })
            .collect(),
        member_output: params.member_output,
        params: params.clone(),
        constraints: constraints
            .iter()
            .map(|c| ConstraintSummary {
                name: c.name.clone(),
                slack: c.slack,
            })
            .collect(),
        training_error,
        trajectory,
        best_iteration,
        final_max_violation,
        early_stopped,
        infeasible,
        warnings,
    })
}

/// Error and largest constraint gap of the mixture `q` (moments are linear).
fn mixture_stats(q: &[f64], errors: &[f64], gaps: &[Vec<f64>]) -> (f64, f64) {
    let error = q.iter().zip(errors).map(|(w, e)| w * e).sum();
    let m = gaps.first().map_or(0, Vec::len);
    let max_gap = (0..m)
        .map(|j| q.iter().zip(gaps).map(|(w, g)| w * g[j]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    (error, max_gap)
}

fn mixture_objective(q: &[f64], errors: &[f64], gaps: &[Vec<f64>], bound: f64) -> f64 {
    let (error, max_gap) = mixture_stats(q, errors, gaps);
    error + bound * max_gap.max(0.0)
}

/// Mixture weights minimizing `error(q) + B * v` subject to
/// `gap_j(q) <= v`, `v >= 0`, `q` in the simplex.
fn optimal_mixture(errors: &[f64], gaps: &[Vec<f64>], bound: f64) -> Option<Vec<f64>> {
    use microlp::{ComparisonOp, OptimizationDirection, Problem};
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let q: Vec<_> = errors.iter().map(|&e| lp.add_var(e, (0.0, 1.0))).collect();
    let v = lp.add_var(bound, (0.0, f64::INFINITY));
    let ones: Vec<_> = q.iter().map(|&var| (var, 1.0)).collect();
    lp.add_constraint(ones.as_slice(), ComparisonOp::Eq, 1.0);
    let m = gaps.first().map_or(0, Vec::len);
    for j in 0..m {
        let mut row: Vec<_> = q.iter().zip(gaps).map(|(&var, g)| (var, g[j])).collect();
        row.push((v, -1.0));
        lp.add_constraint(row.as_slice(), ComparisonOp::Le, 0.0);
    }
    let solution = lp.solve().ok()?;
    let mut weights: Vec<f64> = q
        .iter()
        .map(|&var| {
            let w = *solution.var_value(var);
            if w > 1e-9 {
                w
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    weights.iter_mut().for_each(|w| *w /= total);
    Some(weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn multipliers_stay_in_scaled_simplex() {
        for theta in [vec![0.0, 0.0], vec![800.0, -3.0], vec![-900.0, -900.0]] {
            let l = multipliers(&theta, 10.0);
            let s: f64 = l.iter().sum();
            assert!(l.iter().all(|&v| v >= 0.0));
            assert!(s <= 10.0 + 1e-9, "{s}");
        }
    }

    #[test]
    fn zero_constraints_equal_base_fit() {
        let x = array![[0.1, 1.0], [0.9, -1.0], [0.4, 0.2], [-0.3, 0.7]];
        let y = [0, 1, 1, 0];
        let params = ReductionParams::default();
        let reduced = exponentiated_gradient(x.view(), &y, &[], &params).unwrap();
        let base = fit_base(x.view(), &y, None, &params.base).unwrap();
        assert_eq!(reduced.members.len(), 1);
        assert_eq!(reduced.members[0].model, base.model);
        let a = reduced.predict(x.view(), PredictMode::Score).unwrap();
        let b = base.model.predict_proba(x.view()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn predict_rejects_width_mismatch() {
        let model = ReducedModel::single(LogisticModel::zeros(3), ReductionParams::default());
        let x = array![[1.0, 2.0]];
        assert!(matches!(
            model.predict(x.view(), PredictMode::Score),
            Err(Error::Encoding(_))
        ));
    }
}
