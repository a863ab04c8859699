//! Typed tabular data: schema, ingestion, thresholds and feature encoding.

mod encode;
mod schema;
mod split;
mod table;
mod thresholds;

pub use encode::{EncodeOptions, Encoder, FeatureSpec};
pub use schema::{ColumnKind, ColumnSpec, ColumnTag, Schema};
pub use split::stratified_split;
pub use table::{load_csv, read_csv, Column, ColumnValues, Table, TableBuilder};
pub use thresholds::{
    effort_threshold, privilege_threshold, EffortScope, EffortThresholds, PrivilegeThreshold,
    Thresholds,
};
