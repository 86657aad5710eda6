//! Simulation and analysis engine for error-prone dietary exposures in
//! time-to-event models.
//!
//! The crate generates synthetic cohorts in which a self-reported intake, a
//! true long-term blood concentration, and a noisy biomarker measurement are
//! linked through an explicit measurement-error model, fits Cox proportional
//! hazards models under six analysis strategies (truth, naive and calibrated
//! biomarker, naive and calibrated self-report, and an inverse-variance
//! optimal combination), and aggregates bias, coverage, and power across
//! Monte-Carlo replications. A descriptive toolkit (adjusted geometric
//! means, duplicate-sample ICC/CV, R-squared variants, stepwise AIC,
//! bootstrap optimism) covers the companion analyses.

pub mod cli;
pub mod datagen;
pub mod descriptive;
pub mod estimators;
pub mod linmod;
pub mod numerics;
pub mod simharness;
pub mod survival;
