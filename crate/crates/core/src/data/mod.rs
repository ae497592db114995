//! Dataset ingestion, schema-driven encoding, splitting, and synthetic
//! scenario generation.

pub mod dataset;
pub mod schema;
pub mod synth;

pub use dataset::{Dataset, SplitPair, Standardization};
pub use schema::{ColumnKind, ColumnRole, ColumnSpec, EncodedBlock, FeatureSchema};
pub use synth::{adult_schema, synth_adult, synth_table1, table1_schema, TABLE1_DEFAULT_RATES};
