//! Experiment database: line-delimited JSON with a header and an end marker.
//!
//! Lines appear in a fixed order (header, tests, setups, references, runs,
//! classes, failures, end) and each section is sorted by key, so a database
//! serializes to the same bytes regardless of how it was filled.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::harness::classify::ColorClass;
use crate::harness::reference::ReferenceResult;
use crate::harness::runner::{setup_id, RunRecord};
use crate::harness::suite::UnitTest;
use crate::optimizers::{all_hyper_names, AlgorithmSetup};

pub const DB_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub test_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub setup_id: Option<String>,
    pub reason: String,
}

pub type RunKey = (String, String, u32);
pub type PairKey = (String, String);

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ExperimentDB {
    pub format_version: u32,
    pub suite_seed: u64,
    pub tests: BTreeMap<String, UnitTest>,
    pub setups: BTreeMap<String, AlgorithmSetup>,
    pub references: BTreeMap<String, ReferenceResult>,
    pub runs: BTreeMap<RunKey, RunRecord>,
    pub classes: BTreeMap<PairKey, ColorClass>,
    /// Keyed by (test id, setup id or "").
    pub failures: BTreeMap<PairKey, Failure>,
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
enum LineOut<'a> {
    Header {
        format_version: u32,
        suite_seed: u64,
    },
    Test {
        id: &'a str,
        test: &'a UnitTest,
    },
    Setup {
        id: &'a str,
        setup: &'a AlgorithmSetup,
    },
    Reference(&'a ReferenceResult),
    Run(&'a RunRecord),
    Class {
        test_id: &'a str,
        setup_id: &'a str,
        class: ColorClass,
    },
    Failure(&'a Failure),
    End {
        lines: u64,
    },
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
enum LineIn {
    Header {
        format_version: u32,
        suite_seed: u64,
    },
    Test {
        id: String,
        test: UnitTest,
    },
    Setup {
        id: String,
        setup: AlgorithmSetup,
    },
    Reference(ReferenceResult),
    Run(RunRecord),
    Class {
        test_id: String,
        setup_id: String,
        class: ColorClass,
    },
    Failure(Failure),
    End {
        lines: u64,
    },
}

impl ExperimentDB {
    pub fn new(suite_seed: u64) -> Self {
        ExperimentDB {
            format_version: DB_FORMAT_VERSION,
            suite_seed,
            ..Default::default()
        }
    }

    /// Load `path` if it exists, otherwise start an empty database.
    pub fn open_or_create(path: &Path, suite_seed: u64) -> Result<Self> {
        if path.exists() {
            let db = Self::load(path)?;
            if db.suite_seed != suite_seed {
                return Err(Error::Config(format!(
                    "{} was built with suite seed {}, not {suite_seed}",
                    path.display(),
                    db.suite_seed
                )));
            }
            Ok(db)
        } else {
            Ok(Self::new(suite_seed))
        }
    }

    pub fn add_test(&mut self, test: &UnitTest) {
        self.tests.entry(test.id().to_string()).or_insert_with(|| test.clone());
    }

    pub fn add_setup(&mut self, setup: &AlgorithmSetup) -> String {
        let id = setup_id(setup);
        self.setups.entry(id.clone()).or_insert_with(|| setup.clone());
        id
    }

    pub fn records_for(&self, test_id: &str, setup_id: &str) -> Vec<&RunRecord> {
        let lo = (test_id.to_string(), setup_id.to_string(), 0);
        let hi = (test_id.to_string(), setup_id.to_string(), u32::MAX);
        self.runs.range(lo..=hi).map(|(_, r)| r).collect()
    }

    pub fn insert_run(&mut self, record: RunRecord) {
        let key = (record.test_id.clone(), record.setup_id.clone(), record.repeat_index);
        self.runs.insert(key, record);
    }

    pub fn is_unreferenced(&self, test_id: &str) -> bool {
        self.failures.contains_key(&(test_id.to_string(), String::new()))
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        let lines = 2
            + self.tests.len()
            + self.setups.len()
            + self.references.len()
            + self.runs.len()
            + self.classes.len()
            + self.failures.len();
        let mut emit = |line: LineOut| -> Result<()> {
            serde_json::to_writer(&mut out, &line)?;
            out.push(b'\n');
            Ok(())
        };
        emit(LineOut::Header {
            format_version: self.format_version,
            suite_seed: self.suite_seed,
        })?;
        for (id, test) in &self.tests {
            emit(LineOut::Test { id, test })?;
        }
        for (id, setup) in &self.setups {
            emit(LineOut::Setup { id, setup })?;
        }
        for r in self.references.values() {
            emit(LineOut::Reference(r))?;
        }
        for r in self.runs.values() {
            emit(LineOut::Run(r))?;
        }
        for ((test_id, setup_id), class) in &self.classes {
            emit(LineOut::Class {
                test_id,
                setup_id,
                class: *class,
            })?;
        }
        for f in self.failures.values() {
            emit(LineOut::Failure(f))?;
        }
        emit(LineOut::End { lines: lines as u64 })?;
        Ok(out)
    }

    /// Write via a temporary file in the same directory, then rename.
    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        let dir = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        let tmp = dir.join(format!(
            ".{}.tmp",
            path.file_name().map_or("db".into(), |n| n.to_string_lossy())
        ));
        let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(&bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.iter().all(u8::is_ascii_whitespace) {
            return Err(Error::EmptyDatabase);
        }
        let mut db = ExperimentDB::default();
        let mut offset = 0usize;
        let mut count = 0u64;
        let mut ended = false;
        for (i, raw) in bytes.split_inclusive(|&b| b == b'\n').enumerate() {
            let line_no = i + 1;
            let corrupt = |reason: String| Error::Corrupt {
                line: line_no,
                offset,
                reason,
            };
            let text = std::str::from_utf8(raw).map_err(|e| corrupt(e.to_string()))?;
            let text = text.strip_suffix('\n').unwrap_or(text);
            if ended {
                if text.trim().is_empty() {
                    offset += raw.len();
                    continue;
                }
                return Err(corrupt("content after end marker".into()));
            }
            if !raw.ends_with(b"\n") {
                return Err(Error::Truncated(format!(
                    "line {line_no} (byte offset {offset}) is incomplete"
                )));
            }
            count += 1;
            if line_no == 1 {
                let v: Value = serde_json::from_str(text).map_err(|e| corrupt(e.to_string()))?;
                if v.get("type").and_then(Value::as_str) != Some("header") {
                    return Err(corrupt("first line is not a header".into()));
                }
                let found = v
                    .get("format_version")
                    .and_then(Value::as_u64)
                    .ok_or_else(|| corrupt("header lacks format_version".into()))?;
                if found != DB_FORMAT_VERSION as u64 {
                    return Err(Error::VersionMismatch {
                        found: found as u32,
                        expected: DB_FORMAT_VERSION,
                    });
                }
            }
            let line: LineIn = serde_json::from_str(text).map_err(|e| corrupt(e.to_string()))?;
            match line {
                LineIn::Header {
                    format_version,
                    suite_seed,
                } => {
                    if line_no != 1 {
                        return Err(corrupt("duplicate header".into()));
                    }
                    db.format_version = format_version;
                    db.suite_seed = suite_seed;
                }
                LineIn::Test { id, test } => {
                    if id != test.id() {
                        return Err(corrupt(format!(
                            "test id {id} does not match content hash {}",
                            test.id()
                        )));
                    }
                    db.tests.insert(id, test);
                }
                LineIn::Setup { id, setup } => {
                    setup.validate().map_err(|e| corrupt(e.to_string()))?;
                    if id != setup_id(&setup) {
                        return Err(corrupt(format!("setup id {id} does not match content hash")));
                    }
                    db.setups.insert(id, setup);
                }
                LineIn::Reference(r) => {
                    db.references.insert(r.test_id.clone(), r);
                }
                LineIn::Run(r) => {
                    let key = (r.test_id.clone(), r.setup_id.clone(), r.repeat_index);
                    if db.runs.insert(key, r).is_some() {
                        return Err(corrupt("duplicate run record".into()));
                    }
                }
                LineIn::Class {
                    test_id,
                    setup_id,
                    class,
                } => {
                    db.classes.insert((test_id, setup_id), class);
                }
                LineIn::Failure(f) => {
                    db.failures
                        .insert((f.test_id.clone(), f.setup_id.clone().unwrap_or_default()), f);
                }
                LineIn::End { lines } => {
                    if lines != count {
                        return Err(Error::Truncated(format!(
                            "end marker counts {lines} lines, found {count}"
                        )));
                    }
                    ended = true;
                }
            }
            offset += raw.len();
        }
        if !ended {
            return Err(Error::Truncated("missing end marker".into()));
        }
        Ok(db)
    }

    /// Keys accepted by [`ExperimentDB::filter`].
    pub fn filter_keys() -> Vec<String> {
        let mut keys: Vec<String> = ["fun", "noise", "scale", "dims", "algo"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        keys.extend(all_hyper_names().into_iter().map(String::from));
        keys
    }

    /// Conjunctive query; list values mean set membership.
    pub fn filter(&self, query: &serde_json::Map<String, Value>) -> Result<Vec<&RunRecord>> {
        let valid = Self::filter_keys();
        let mut clauses = Vec::new();
        for (key, value) in query {
            if !valid.contains(key) {
                return Err(Error::UnknownFilterKey {
                    key: key.clone(),
                    valid,
                });
            }
            let items: Vec<&Value> = match value {
                Value::Array(a) => a.iter().collect(),
                v => vec![v],
            };
            clauses.push(Clause::parse(key, &items)?);
        }
        let mut test_ok: BTreeMap<&str, bool> = BTreeMap::new();
        let mut setup_ok: BTreeMap<&str, bool> = BTreeMap::new();
        Ok(self
            .runs
            .values()
            .filter(|r| {
                let t = *test_ok.entry(r.test_id.as_str()).or_insert_with(|| {
                    self.tests
                        .get(&r.test_id)
                        .is_some_and(|t| clauses.iter().all(|c| c.matches_test(t)))
                });
                let s = *setup_ok.entry(r.setup_id.as_str()).or_insert_with(|| {
                    self.setups
                        .get(&r.setup_id)
                        .is_some_and(|s| clauses.iter().all(|c| c.matches_setup(s)))
                });
                t && s
            })
            .collect())
    }
}

enum Clause {
    Fun(BTreeSet<String>),
    Noise(BTreeSet<String>),
    Scale(Vec<f64>),
    Dims(Vec<u64>),
    Algo(BTreeSet<String>),
    Hyper(String, Vec<f64>),
}

impl Clause {
    fn parse(key: &str, items: &[&Value]) -> Result<Self> {
        let bad = || Error::Config(format!("filter value for `{key}` has the wrong type"));
        let strings = || -> Result<BTreeSet<String>> {
            items
                .iter()
                .map(|v| v.as_str().map(String::from).ok_or_else(bad))
                .collect()
        };
        let numbers = || -> Result<Vec<f64>> { items.iter().map(|v| v.as_f64().ok_or_else(bad)).collect() };
        Ok(match key {
            "fun" => Clause::Fun(strings()?),
            "noise" => Clause::Noise(strings()?),
            "scale" => Clause::Scale(numbers()?),
            "dims" => Clause::Dims(
                items
                    .iter()
                    .map(|v| v.as_u64().ok_or_else(bad))
                    .collect::<Result<_>>()?,
            ),
            "algo" => Clause::Algo(strings()?),
            name => Clause::Hyper(name.to_string(), numbers()?),
        })
    }

    fn matches_test(&self, t: &UnitTest) -> bool {
        match self {
            Clause::Fun(set) => t.fun_names().iter().any(|f| set.contains(f)),
            Clause::Noise(set) => set.contains(t.noise_tag()),
            Clause::Scale(vals) => t.scales().iter().any(|s| vals.contains(s)),
            Clause::Dims(vals) => vals.contains(&(t.dim() as u64)),
            _ => true,
        }
    }

    fn matches_setup(&self, s: &AlgorithmSetup) -> bool {
        match self {
            Clause::Algo(set) => set.contains(s.family.tag()),
            Clause::Hyper(name, vals) => s.hyper.get(name).is_some_and(|v| vals.contains(v)),
            _ => true,
        }
    }
}

/// Parse a filter query from JSON text (an object).
pub fn parse_query(text: &str) -> Result<serde_json::Map<String, Value>> {
    match serde_json::from_str::<Value>(text)? {
        Value::Object(m) => Ok(m),
        _ => Err(Error::Config("filter query must be a JSON object".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(ExperimentDB::from_bytes(b""), Err(Error::EmptyDatabase)));
        assert!(matches!(ExperimentDB::from_bytes(b"\n \n"), Err(Error::EmptyDatabase)));
    }

    #[test]
    fn empty_database_round_trip() {
        let db = ExperimentDB::new(9);
        let bytes = db.to_bytes().unwrap();
        assert_eq!(
            String::from_utf8(bytes.clone()).unwrap(),
            "{\"type\":\"header\",\"format_version\":1,\"suite_seed\":9}\n{\"type\":\"end\",\"lines\":2}\n"
        );
        assert_eq!(ExperimentDB::from_bytes(&bytes).unwrap(), db);
    }

    #[test]
    fn version_and_truncation_errors() {
        let wrong = b"{\"type\":\"header\",\"format_version\":7,\"suite_seed\":1}\n{\"type\":\"end\",\"lines\":2}\n";
        assert!(matches!(
            ExperimentDB::from_bytes(wrong),
            Err(Error::VersionMismatch { found: 7, expected: 1 })
        ));
        let no_end = b"{\"type\":\"header\",\"format_version\":1,\"suite_seed\":1}\n";
        assert!(matches!(ExperimentDB::from_bytes(no_end), Err(Error::Truncated(_))));
    }

    #[test]
    fn unknown_filter_key_lists_valid_keys() {
        let db = ExperimentDB::new(1);
        let err = db.filter(&parse_query(r#"{"colour":"red"}"#).unwrap()).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("colour") && text.contains("learningRate") && text.contains("fun"));
    }
}
