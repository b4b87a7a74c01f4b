//! Experimental protocol: unit-test suites, runs, references, scoring and the
//! experiment database.

pub mod classify;
pub mod db;
pub mod execute;
pub mod reference;
pub mod runner;
pub mod suite;

pub use classify::{classify, classify_scores, ColorClass};
pub use db::{parse_query, ExperimentDB, Failure};
pub use execute::{classify_all, compute_references, run_suite, SuiteOptions, SuiteSummary};
pub use reference::{compute_reference, sweep_rates, ReferenceResult, SweepPoint};
pub use runner::{normalize, run_experiment, run_stage, RunRecord, StageOutcome, REPEATS, STEPS};
pub use suite::{default_suite, GroupKey, Landscape, UnitTest, UnitTestDoc};
