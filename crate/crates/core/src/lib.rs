//! Fairness audits and fairness-constrained training for tabular binary
//! classification.
//!
//! The crate is organised bottom-up:
//!
//! - [`dataset`]: typed CSV ingestion, privilege/effort thresholds, feature encoding.
//! - [`groupstats`]: subgroup masks and confusion statistics (PPR, TPR, FPR).
//! - [`notions`]: violation measures for equal opportunity, demographic parity,
//!   conditional demographic parity and the socio-economic parity family.
//! - [`privilege`]: data-driven choice of the privilege attribute and of the
//!   privileged top-`p`% cutoff.
//! - [`learner`]: logistic base learner and the exponentiated-gradient reduction
//!   that trains randomized classifiers under moment constraints.

// Notion names are the established acronyms; `!(x >= 0.0)` style checks
// deliberately reject NaN.
#![allow(clippy::upper_case_acronyms, clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod groupstats;
pub mod learner;
pub mod notions;
pub mod privilege;

pub use error::{Error, Result};
