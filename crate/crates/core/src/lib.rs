//! Group-audited multi-class gradient boosting for risk assessment studies.
//!
//! The crate covers the full experimental loop: schema-driven tabular data
//! with weighted rows, a from-scratch Newton-boosted tree learner with a
//! softmax link, per-group confusion-table audits with bootstrap intervals,
//! the intervention levers (class weighting, cost-ratio calibration,
//! test-time predictor transforms), importance / partial-dependence
//! diagnostics, and a seeded synthetic population generator.

pub mod adjust;
pub mod audit;
pub mod dataset;
pub mod error;
pub mod gbm;
pub mod hash;
pub mod interpret;
pub mod io;
pub mod report;
pub mod rng;
pub mod schema;
pub mod synth;

pub use dataset::{split_equal, Dataset, Row, SplitPair};
pub use error::{Error, Result};
pub use gbm::{BoostModel, ClassProbabilities, GbmConfig};
pub use schema::{Feature, FeatureFlag, FeatureKind, Schema};
