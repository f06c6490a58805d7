//! Drive-level expected points from clustered play-by-play data.
//!
//! Plays are grouped into drives and every play of a drive shares the
//! drive's outcome. The crate provides outcome-probability learners that
//! account for that clustering (inverse-drive-length weights, averaged
//! one-play-per-drive subsamples), cluster-bootstrap uncertainty, a
//! catalytic-prior smoother for boosted trees, the one-play-per-drive
//! evaluation protocol, EPA aggregation, and a synthetic league with a known
//! outcome model for checking all of the above.

pub mod domain;
pub mod epa;
pub mod eval;
pub mod error;
pub mod features;
pub mod gbdt;
pub mod ingest;
pub mod manifest;
pub mod mlr;
pub mod model;
pub mod rng;
pub mod summary;
pub mod synth;
pub mod trainers;
pub mod uncertainty;

pub use domain::{ep_from_probs, points_of_outcome, DriveOutcome, ProbVector};
pub use error::{Error, ErrorCategory, Result};
pub use ingest::{GameState, PlayDataset, PlayRecord, PlayType, WeightingScheme};
