//! Multilingual (English/German/Hindi) abusive-text classification.
//!
//! The pipeline: rule-based preprocessing, two concatenated sentence
//! embeddings (768 + 1024 → 1792), one gradient-boosted-tree classifier per
//! sub-task, a hierarchical A→B/C prediction cascade, and macro-F1
//! evaluation reports.
//!
//! Sub-task A decides hateful/offensive (HOF) vs not (NOT); sub-task B
//! refines HOF posts into HATE/OFFN/PRFN; sub-task C marks them targeted
//! (TIN) or untargeted (UNT). German data has no sub-task C.

pub mod config;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod eval;
pub mod model;
pub mod pipeline;
pub mod preprocess;

pub use config::PipelineConfig;
pub use error::{Error, ErrorCategory, Result};
pub use pipeline::Pipeline;
