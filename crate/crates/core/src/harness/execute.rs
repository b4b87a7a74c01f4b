//! Suite execution over a bounded worker pool.

use std::panic::{catch_unwind, AssertUnwindSafe};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harness::classify::classify;
use crate::harness::db::{ExperimentDB, Failure};
use crate::harness::reference::{compute_reference, ReferenceResult};
use crate::harness::runner::{normalize_records, run_experiment, RunRecord, REPEATS, STEPS};
use crate::harness::suite::UnitTest;
use crate::optimizers::AlgorithmSetup;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SuiteOptions {
    pub workers: usize,
    pub repeats: u32,
    pub steps: u32,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            repeats: REPEATS,
            steps: STEPS,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SuiteSummary {
    pub references_computed: usize,
    pub unreferenced: usize,
    pub experiments_run: usize,
    pub experiments_failed: usize,
    pub classified: usize,
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

fn guarded<T>(f: impl FnOnce() -> Result<T>) -> Result<T, String> {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(v)) => Ok(v),
        Ok(Err(e)) => Err(e.to_string()),
        Err(panic) => Err(panic
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| panic.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "panic".into())),
    }
}

/// Compute missing references; tests where every sweep value is unstable are
/// recorded as unreferenced failures.
pub fn compute_references(db: &mut ExperimentDB, tests: &[UnitTest], opts: &SuiteOptions) -> Result<SuiteSummary> {
    for t in tests {
        db.add_test(t);
    }
    let todo: Vec<&UnitTest> = tests
        .iter()
        .filter(|t| !db.references.contains_key(t.id()) && !db.is_unreferenced(t.id()))
        .collect();
    let seed = db.suite_seed;
    let results: Vec<(String, Result<ReferenceResult, String>)> = pool(opts.workers)?.install(|| {
        todo.par_iter()
            .map(|t| {
                (
                    t.id().to_string(),
                    guarded(|| compute_reference(t, opts.repeats, opts.steps, seed)),
                )
            })
            .collect()
    });
    let mut summary = SuiteSummary::default();
    for (test_id, r) in results {
        match r {
            Ok(r) => {
                db.references.insert(test_id, r);
                summary.references_computed += 1;
            }
            Err(reason) => {
                log::warn!("no reference for test {test_id}: {reason}");
                db.failures.insert(
                    (test_id.clone(), String::new()),
                    Failure {
                        test_id,
                        setup_id: None,
                        reason,
                    },
                );
                summary.unreferenced += 1;
            }
        }
    }
    Ok(summary)
}

/// Recompute the class of every pairing with a complete set of normalized records.
pub fn classify_all(db: &mut ExperimentDB) -> usize {
    let mut pairs: Vec<(String, String)> = db.runs.keys().map(|(t, s, _)| (t.clone(), s.clone())).collect();
    pairs.dedup();
    let mut n = 0;
    for pair in pairs {
        let records: Vec<RunRecord> = db.records_for(&pair.0, &pair.1).into_iter().cloned().collect();
        if let Ok(class) = classify(&records) {
            db.classes.insert(pair, class);
            n += 1;
        }
    }
    n
}

/// References first, then every (referenced test × setup) pairing not yet in
/// the database. The result is independent of the worker count.
pub fn run_suite(
    db: &mut ExperimentDB,
    tests: &[UnitTest],
    setups: &[AlgorithmSetup],
    opts: &SuiteOptions,
) -> Result<SuiteSummary> {
    let mut summary = compute_references(db, tests, opts)?;
    let setup_ids: Vec<String> = setups.iter().map(|s| db.add_setup(s)).collect();
    let mut work = Vec::new();
    for t in tests {
        let Some(reference) = db.references.get(t.id()) else {
            continue;
        };
        for (setup, sid) in setups.iter().zip(&setup_ids) {
            let pair = (t.id().to_string(), sid.clone());
            if db.failures.contains_key(&pair) || db.records_for(t.id(), sid).len() >= opts.repeats as usize {
                continue;
            }
            work.push((t, setup, sid.clone(), reference.l_sgd));
        }
    }
    let seed = db.suite_seed;
    let results: Vec<(String, String, Result<Vec<RunRecord>, String>)> = pool(opts.workers)?.install(|| {
        work.par_iter()
            .map(|(t, setup, sid, l_sgd)| {
                let r = guarded(|| {
                    let mut recs = run_experiment(t, setup, opts.repeats, opts.steps, seed)?;
                    normalize_records(&mut recs, *l_sgd);
                    Ok(recs)
                });
                (t.id().to_string(), sid.clone(), r)
            })
            .collect()
    });
    for (test_id, sid, r) in results {
        match r {
            Ok(records) => {
                let class = classify(&records).ok();
                for rec in records {
                    db.insert_run(rec);
                }
                if let Some(c) = class {
                    db.classes.insert((test_id, sid), c);
                    summary.classified += 1;
                }
                summary.experiments_run += 1;
            }
            Err(reason) => {
                log::warn!("experiment ({test_id}, {sid}) failed: {reason}");
                db.failures.insert(
                    (test_id.clone(), sid.clone()),
                    Failure {
                        test_id,
                        setup_id: Some(sid),
                        reason,
                    },
                );
                summary.experiments_failed += 1;
            }
        }
    }
    Ok(summary)
}
