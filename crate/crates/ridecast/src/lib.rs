//! Ride-duration prediction for cycling routes.
//!
//! `ridecast` turns a GPX route and an athlete's training history into a
//! predicted ride duration with per-feature attributions. The pipeline:
//!
//! 1. [`ingest`] parses GPX tracks and activity/wellness CSV exports into
//!    uniformly resampled route profiles and activity records.
//! 2. [`topology`] extracts route-shape features (climb detection and
//!    scoring, gradient distributions, turn and descent measures).
//! 3. [`athlete`] reconstructs training-load state (CTL/ATL/TSB, rolling
//!    zone hours) from the activity history, strictly from past data.
//! 4. [`dataset`] joins topology and athlete state into feature rows under
//!    a versioned schema, with leakage auditing.
//! 5. [`regression`] fits regularized linear models (lasso / elastic net /
//!    ridge / OLS) by coordinate descent on standardized features.
//! 6. [`validation`] runs nested cross-validation with distance-stratified
//!    folds and reports fold-level error statistics.
//! 7. [`explain`] decomposes predictions into additive per-feature
//!    contributions for linear models.
//! 8. [`checkpoint`] re-predicts at fractional route prefixes and answers
//!    what-if queries over fitness-state overrides.
//! 9. [`synthetic`] generates seeded synthetic corpora for end-to-end
//!    testing and calibration experiments.

pub mod athlete;
pub mod checkpoint;
pub mod dataset;
pub mod error;
pub mod explain;
pub mod ingest;
pub mod regression;
pub mod schema;
pub mod synthetic;
pub mod topology;
pub mod validation;

pub use error::RidecastError;
