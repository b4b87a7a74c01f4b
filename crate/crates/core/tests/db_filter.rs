mod common;

use common::one_dim_slice;
use optbench::harness::reference::sgd_setup;
use optbench::harness::{parse_query, run_suite, ExperimentDB, SuiteOptions};
use optbench::optimizers::{AlgorithmSetup, Family};
use optbench::stochastic::NoiseKind;
use optbench::Error;

fn setups() -> Vec<AlgorithmSetup> {
    let mut s: Vec<AlgorithmSetup> = [1e-4, 1e-3, 1e-2, 1e-1, 1.0].iter().map(|&e| sgd_setup(e)).collect();
    s.push(AlgorithmSetup::new(Family::Adagrad, &[("learningRate", 1e-4)]).unwrap());
    s.push(AlgorithmSetup::new(Family::Rprop, &[("learningRate", 1e-2)]).unwrap());
    s.push(AlgorithmSetup::new(Family::Adadelta, &[("decay", 0.1), ("regularizer", 1e-4)]).unwrap());
    s.push(AlgorithmSetup::new(Family::Momentum, &[("learningRate", 1e-4), ("momentum", 0.9)]).unwrap());
    s.push(
        AlgorithmSetup::new(
            Family::Averaging,
            &[("learningRate", 0.1), ("decay", 0.01), ("exponent", 0.5)],
        )
        .unwrap(),
    );
    s
}

/// Ten 1-d tests × ten setups × ten repeats.
fn thousand_record_db() -> ExperimentDB {
    let tests: Vec<_> = one_dim_slice(
        &["quad", "line", "abs", "gauss"],
        &[NoiseKind::None, NoiseKind::AdditiveGauss],
    )
    .into_iter()
    .step_by(2)
    .take(10)
    .collect();
    let mut db = ExperimentDB::new(21);
    let opts = SuiteOptions {
        workers: 4,
        repeats: 10,
        steps: 20,
    };
    run_suite(&mut db, &tests, &setups(), &opts).unwrap();
    db
}

#[test]
fn thousand_records_round_trip() {
    let db = thousand_record_db();
    assert_eq!(db.runs.len(), 1000);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("db.jsonl");
    db.save(&path).unwrap();
    let back = ExperimentDB::load(&path).unwrap();
    assert_eq!(back.runs.len(), 1000);
    for (key, rec) in &db.runs {
        assert_eq!(&back.runs[key], rec);
    }
    assert_eq!(back.references, db.references);
    assert_eq!(back.classes, db.classes);
    assert_eq!(back.tests, db.tests);
    assert!(back.to_bytes().unwrap() == db.to_bytes().unwrap());
}

#[test]
fn corrupt_line_reports_its_byte_offset() {
    let db = thousand_record_db();
    let bytes = db.to_bytes().unwrap();
    let lines: Vec<&[u8]> = bytes.split_inclusive(|&b| b == b'\n').collect();
    let target = lines.len() / 2;
    let expected_offset: usize = lines[..target].iter().map(|l| l.len()).sum();
    let mut broken = Vec::new();
    for (i, l) in lines.iter().enumerate() {
        if i == target {
            broken.extend_from_slice(&l[..l.len() / 2]);
            broken.extend_from_slice(b"#garbage\n");
        } else {
            broken.extend_from_slice(l);
        }
    }
    match ExperimentDB::from_bytes(&broken) {
        Err(Error::Corrupt { line, offset, .. }) => {
            assert_eq!(line, target + 1);
            assert_eq!(offset, expected_offset);
        }
        other => panic!("expected corruption error, got {other:?}"),
    }
}

#[test]
fn truncation_and_version_errors() {
    let db = thousand_record_db();
    let bytes = db.to_bytes().unwrap();
    assert!(matches!(
        ExperimentDB::from_bytes(&bytes[..bytes.len() - 1]),
        Err(Error::Truncated(_))
    ));
    let cut = bytes.len() * 2 / 3;
    assert!(matches!(
        ExperimentDB::from_bytes(&bytes[..cut]),
        Err(Error::Truncated(_))
    ));
    let lines: Vec<&[u8]> = bytes.split_inclusive(|&b| b == b'\n').collect();
    let without_end: Vec<u8> = lines[..lines.len() - 1].concat();
    assert!(matches!(
        ExperimentDB::from_bytes(&without_end),
        Err(Error::Truncated(_))
    ));
    let text = String::from_utf8(bytes.clone())
        .unwrap()
        .replacen("\"format_version\":1", "\"format_version\":99", 1);
    assert!(matches!(
        ExperimentDB::from_bytes(text.as_bytes()),
        Err(Error::VersionMismatch { found: 99, expected: 1 })
    ));
    assert!(matches!(ExperimentDB::from_bytes(b""), Err(Error::EmptyDatabase)));
}

#[test]
fn filter_counts_follow_the_manifest() {
    let db = thousand_record_db();
    let q = |text: &str| db.filter(&parse_query(text).unwrap()).unwrap();
    assert_eq!(q("{}").len(), 1000);
    let quad_gauss = db
        .tests
        .values()
        .filter(|t| t.fun_names() == ["quad"] && t.noise().kind == NoiseKind::AdditiveGauss)
        .count();
    assert!(quad_gauss > 0);
    assert_eq!(
        q(r#"{"fun":["quad"],"noise":["additive-gauss"]}"#).len(),
        quad_gauss * 10 * 10
    );
    let hits = q(r#"{"fun":["quad","line"],"algo":["sgd"],"learningRate":1e-4}"#);
    let quad_line = db
        .tests
        .values()
        .filter(|t| ["quad", "line"].contains(&t.fun_names()[0].as_str()))
        .count();
    assert_eq!(hits.len(), quad_line * 10);
    for r in hits {
        let s = &db.setups[&r.setup_id];
        assert_eq!(s.family, Family::Sgd);
        assert_eq!(s.get("learningRate"), 1e-4);
    }
    assert_eq!(q(r#"{"algo":["adagrad","rprop"]}"#).len(), 200);
    assert_eq!(q(r#"{"dims":[2]}"#).len(), 0);
}

#[test]
fn unknown_filter_key_lists_valid_keys() {
    let db = ExperimentDB::new(0);
    let err = db.filter(&parse_query(r#"{"colour":["red"]}"#).unwrap()).unwrap_err();
    let msg = err.to_string();
    assert!(
        msg.contains("colour") && msg.contains("learningRate") && msg.contains("algo"),
        "{msg}"
    );
}
