use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn optbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_optbench"))
        .args(args)
        .env_remove("OPTBENCH_DB")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = optbench(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

/// Manifest holding the stationary 1-d tests on the given prototypes.
fn small_manifest(dir: &Path, funs: &[&str]) -> PathBuf {
    let full = dir.join("full.json");
    ok(&["generate", "--out", p(&full), "--dims", "1"]);
    let tests: Vec<Value> = serde_json::from_str(&std::fs::read_to_string(&full).unwrap()).unwrap();
    let keep: Vec<Value> = tests
        .into_iter()
        .filter(|t| {
            let comps = &t["landscape"]["components"];
            let name = comps[0]["name"].as_str().unwrap_or("");
            funs.contains(&name)
                && comps[0]["scale"] == 1.0
                && t["nonstationarity"]["kind"] == "none"
                && matches!(
                    t["landscape"]["noise"]["kind"].as_str(),
                    Some("none" | "additive-gauss")
                )
        })
        .collect();
    assert!(!keep.is_empty());
    let out = dir.join("manifest.json");
    std::fs::write(&out, serde_json::to_string_pretty(&keep).unwrap()).unwrap();
    out
}

fn setups_file(dir: &Path) -> PathBuf {
    let path = dir.join("setups.json");
    ok(&[
        "add-algo-grid",
        "--family",
        "sgd",
        "--grid",
        r#"{"learningRate":[1e-4,1e-2]}"#,
        "--setups",
        p(&path),
    ]);
    ok(&[
        "add-algo-grid",
        "--family",
        "adagrad",
        "--grid",
        r#"{"learningRate":[1e-4]}"#,
        "--setups",
        p(&path),
    ]);
    path
}

#[test]
fn generate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (
        dir.path().join("a.json"),
        dir.path().join("b.json"),
        dir.path().join("c.json"),
    );
    assert_eq!(ok(&["generate", "--out", p(&a), "--seed", "4"]).trim(), "3478");
    ok(&["generate", "--out", p(&b), "--seed", "4"]);
    ok(&["generate", "--out", p(&c), "--seed", "5"]);
    let read = |x: &Path| std::fs::read(x).unwrap();
    assert!(read(&a) == read(&b));
    assert!(read(&a) != read(&c));
    let one = dir.path().join("one.json");
    assert_eq!(ok(&["generate", "--out", p(&one), "--dims", "1"]).trim(), "1782");
}

#[test]
fn run_twice_leaves_the_database_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_manifest(dir.path(), &["quad", "abs"]);
    let setups = setups_file(dir.path());
    let db = dir.path().join("db.jsonl");
    let run = |workers: &str| {
        ok(&[
            "run",
            "--manifest",
            p(&manifest),
            "--setups",
            p(&setups),
            "--db",
            p(&db),
            "--workers",
            workers,
        ])
    };
    let first = run("4");
    assert!(first.contains("0 failed"), "{first}");
    let bytes = std::fs::read(&db).unwrap();
    let second = run("1");
    assert!(second.contains("experiments: 0 run"), "{second}");
    assert!(std::fs::read(&db).unwrap() == bytes);

    // The same run with one worker from scratch gives the same file.
    let db1 = dir.path().join("db1.jsonl");
    ok(&[
        "run",
        "--manifest",
        p(&manifest),
        "--setups",
        p(&setups),
        "--db",
        p(&db1),
        "--workers",
        "1",
    ]);
    assert!(std::fs::read(&db1).unwrap() == bytes);
}

#[test]
fn filter_example_query_returns_only_slow_sgd() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_manifest(dir.path(), &["quad", "line", "gauss"]);
    let setups = setups_file(dir.path());
    let db = dir.path().join("db.jsonl");
    ok(&[
        "run",
        "--manifest",
        p(&manifest),
        "--setups",
        p(&setups),
        "--db",
        p(&db),
    ]);
    let query = r#"{"fun":["quad","line"],"algo":["sgd"],"learningRate":1e-4}"#;
    let lines = ok(&["filter", "--db", p(&db), "--query", query]);
    let manifest_tests: Vec<Value> = serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    let quad_line = manifest_tests
        .iter()
        .filter(|t| matches!(t["landscape"]["components"][0]["name"].as_str(), Some("quad" | "line")))
        .count();
    assert_eq!(lines.lines().count(), quad_line * 10);
    let sgd_slow: Vec<String> = std::fs::read_to_string(&db)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str::<Value>(l).unwrap())
        .filter(|v| {
            v["type"] == "setup" && v["setup"]["family"] == "sgd" && v["setup"]["hyper"]["learningRate"] == 1e-4
        })
        .map(|v| v["id"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(sgd_slow.len(), 1);
    for l in lines.lines() {
        let r: Value = serde_json::from_str(l).unwrap();
        assert_eq!(r["setup_id"], sgd_slow[0].as_str());
    }
    let count = ok(&["filter", "--db", p(&db), "--query", query, "--count"]);
    assert_eq!(count.trim().parse::<usize>().unwrap(), quad_line * 10);
}

#[test]
fn report_reproduces_the_golden_image() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("heatmap.ppm");
    ok(&["report", "--db", p(&fixture("fixture_db.jsonl")), "--out", p(&out)]);
    assert!(std::fs::read(&out).unwrap() == std::fs::read(fixture("fixture.ppm")).unwrap());
    let svg = dir.path().join("heatmap.svg");
    ok(&["report", "--db", p(&fixture("fixture_db.jsonl")), "--out", p(&svg)]);
    assert!(std::fs::read_to_string(&svg).unwrap().contains("</svg>"));
}

#[test]
fn database_path_can_come_from_the_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_optbench"))
        .args(["filter", "--count"])
        .env("OPTBENCH_DB", fixture("fixture_db.jsonl"))
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "1200");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.jsonl");
    assert_eq!(optbench(&["filter", "--db", p(&missing)]).status.code(), Some(2));
    assert_eq!(optbench(&["classify", "--db", p(&missing)]).status.code(), Some(2));
    let bad_key = optbench(&[
        "filter",
        "--db",
        p(&fixture("fixture_db.jsonl")),
        "--query",
        r#"{"colour":1}"#,
    ]);
    assert_eq!(bad_key.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad_key.stderr).contains("learningRate"));
    assert_eq!(
        optbench(&["generate", "--out", p(&dir.path().join("x.json")), "--dims", "11"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(optbench(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        optbench(&["report", "--db", p(&fixture("fixture_db.jsonl")), "--out", "x.gif"])
            .status
            .code(),
        Some(1)
    );
    let unknown_family = optbench(&[
        "add-algo-grid",
        "--family",
        "adam",
        "--grid",
        "{}",
        "--setups",
        p(&dir.path().join("s.json")),
    ]);
    assert_eq!(unknown_family.status.code(), Some(1));
    assert_eq!(optbench(&["--help"]).status.code(), Some(0));
    let corrupt = dir.path().join("corrupt.jsonl");
    std::fs::write(&corrupt, b"{\"type\":\"header\"\n").unwrap();
    assert_eq!(optbench(&["filter", "--db", p(&corrupt)]).status.code(), Some(1));
}

#[test]
fn add_algo_grid_appends_without_duplicates() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("setups.json");
    let grid = r#"{"learningRate":[0.1,1],"momentum":[0.9]}"#;
    assert!(ok(&[
        "add-algo-grid",
        "--family",
        "momentum",
        "--grid",
        grid,
        "--setups",
        p(&path)
    ])
    .contains("added 2 setups (2 total)"));
    assert!(ok(&[
        "add-algo-grid",
        "--family",
        "momentum",
        "--grid",
        grid,
        "--setups",
        p(&path)
    ])
    .contains("added 0 setups (2 total)"));
    let unknown = optbench(&[
        "add-algo-grid",
        "--family",
        "momentum",
        "--grid",
        r#"{"learningRate":[0.1],"beta":[1]}"#,
        "--setups",
        p(&path),
    ]);
    assert_eq!(unknown.status.code(), Some(1));
    let setups: Vec<Value> = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(setups.len(), 2);
}

#[test]
fn chain_keeps_optimizer_state_between_stages() {
    let dir = tempfile::tempdir().unwrap();
    let db = fixture("fixture_db.jsonl");
    let ids: Vec<String> = std::fs::read_to_string(&db)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str::<Value>(l).unwrap())
        .filter(|v| v["type"] == "test")
        .map(|v| v["id"].as_str().unwrap().to_string())
        .take(2)
        .collect();
    let spec = dir.path().join("chain.json");
    std::fs::write(
        &spec,
        serde_json::json!({"stages": [{"test": ids[0], "steps": 50}, {"test": ids[1], "steps": 50}]}).to_string(),
    )
    .unwrap();
    let setup = dir.path().join("setup.json");
    std::fs::write(&setup, r#"{"family":"adagrad","hyper":{"learningRate":0.1}}"#).unwrap();
    let out = dir.path().join("chain.jsonl");
    ok(&[
        "chain",
        "--spec",
        p(&spec),
        "--setup",
        p(&setup),
        "--db",
        p(&db),
        "--repeats",
        "2",
        "--out",
        p(&out),
    ]);
    let text = std::fs::read_to_string(&out).unwrap();
    let runs: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(runs.len(), 2);
    for r in &runs {
        let stages = r["stages"].as_array().unwrap();
        assert_eq!(stages.len(), 2);
        assert_eq!(stages[1]["entry_state"], stages[0]["exit_state"]);
        assert_eq!(stages[1]["entry_state"]["step"], 50);
    }
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"stages":[{"test":"0000000000000000","steps":5}]}"#).unwrap();
    assert_eq!(
        optbench(&["chain", "--spec", p(&bad), "--setup", p(&setup), "--db", p(&db)])
            .status
            .code(),
        Some(1)
    );
}
