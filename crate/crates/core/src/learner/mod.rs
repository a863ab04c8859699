//! Base classifier and fairness-constrained training.
//!
//! [`fit_base`] fits an L2-regularized logistic regression.
//! [`compile_constraints`] turns a resolved notion into linear moment
//! constraints, and [`exponentiated_gradient`] trains a randomized mixture of
//! base models under them. [`train`] ties both to a [`Table`].

mod constraints;
mod logistic;
mod reduction;

pub use constraints::{
    compile_constraints, compile_constraints_with, ConstraintSet, EffortSides, MomentConstraint,
};
pub use logistic::{fit_base, BaseLearner, LogisticModel, LogisticParams};
pub use reduction::{
    exponentiated_gradient, predict, ConstraintSummary, IterationRecord, Member, MemberOutput,
    MixtureRule, PredictMode, ReducedModel, ReductionParams,
};

use serde::{Deserialize, Serialize};

use crate::dataset::{EncodeOptions, Encoder, Table};
use crate::notions::{NotionConfig, ResolvedNotion};
use crate::Result;

/// Everything needed to score new rows and to re-audit the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub encoder: Encoder,
    /// Constraint notion with thresholds resolved on the training rows.
    pub notion: Option<ResolvedNotion>,
    pub model: ReducedModel,
    /// Constraint terms dropped for empty subgroups.
    pub dropped_constraints: Vec<String>,
}

impl TrainedModel {
    pub fn predict(&self, t: &Table, mode: PredictMode) -> Result<Vec<f64>> {
        let x = self.encoder.transform(t)?;
        self.model.predict(x.view(), mode)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Fits the encoder on `t` and trains, constrained by `notion` if given.
pub fn train(
    t: &Table,
    notion: Option<&NotionConfig>,
    encode: &EncodeOptions,
    params: &ReductionParams,
) -> Result<TrainedModel> {
    let encoder = Encoder::fit(t, encode)?;
    let x = encoder.transform(t)?;
    let (resolved, set) = match notion {
        Some(cfg) => {
            let resolved = cfg.resolve(t)?;
            let set =
                compile_constraints_with(t, &resolved, params.eps_train, params.effort_sides)?;
            (Some(resolved), set)
        }
        None => (
            None,
            ConstraintSet {
                constraints: Vec::new(),
                dropped: Vec::new(),
            },
        ),
    };
    let model = exponentiated_gradient(x.view(), t.labels(), &set.constraints, params)?;
    Ok(TrainedModel {
        encoder,
        notion: resolved,
        model,
        dropped_constraints: set.dropped,
    })
}
