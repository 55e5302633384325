//! Cross-lingual entity linking.
//!
//! The pipeline runs in stages: anchor statistics ([`kb`]), candidate lists
//! ([`candgen`]), candidate features ([`features`]) and disambiguation with
//! either greedy linear scoring ([`linear`]) or iterative belief updates
//! ([`burn`]). [`train`] fits either disambiguator and [`eval`] scores the
//! result.

pub mod burn;
pub mod candgen;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod gradcheck;
pub mod kb;
pub mod linear;
pub mod model;
pub mod model_file;
pub mod optim;
pub mod parallel;
pub mod synthetic;
pub mod train;

pub use corpus::{Candidate, Document, EntityId, Mention, MentionKey, Predictions};
pub use error::{Error, Result};
pub use features::{DocFeatures, FeatureSet};
pub use kb::KbStatistics;
pub use model::Model;
pub use parallel::Parallelism;
