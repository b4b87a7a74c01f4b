#![allow(dead_code)]

use optbench::landscape::{build_default, PrototypeFunction, ShapeKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const H: f64 = 1e-6;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Central differences of `f` at `x`, one coordinate at a time.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            y[i] = x[i] + h;
            let up = f(&y);
            y[i] = x[i] - h;
            let down = f(&y);
            y[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Relative agreement with a floor for the round-off of a central difference,
/// which is about eps·|f|/h no matter how small the gradient is.
pub fn fd_agrees(fd: f64, exact: f64, f_value: f64, rtol: f64) -> bool {
    let floor = 1e-8 * f_value.abs().max(1.0);
    (fd - exact).abs() <= rtol * fd.abs().max(exact.abs()) + floor
}

pub fn near_any(x: f64, points: &[f64], radius: f64) -> bool {
    points.iter().any(|p| (x - p).abs() <= radius)
}

const BODY_KINDS: [ShapeKind; 10] = [
    ShapeKind::Line,
    ShapeKind::Quad,
    ShapeKind::Abs,
    ShapeKind::RectBend,
    ShapeKind::ExpUp,
    ShapeKind::ExpDown,
    ShapeKind::GaussBowl,
    ShapeKind::LaplaceBowl,
    ShapeKind::ConvexCurve,
    ShapeKind::ConcaveCurve,
];

/// Random kind sequence of 2..=6 segments; cliff markers only between pieces.
pub fn random_kinds(rng: &mut ChaCha8Rng) -> Vec<ShapeKind> {
    let n = rng.random_range(2..=6);
    let mut kinds = Vec::with_capacity(n);
    for i in 0..n {
        let interior = i > 0 && i + 1 < n;
        let prev_cliff = kinds.last() == Some(&ShapeKind::CliffMarker);
        if interior && !prev_cliff && rng.random_bool(0.25) {
            kinds.push(ShapeKind::CliffMarker);
        } else {
            kinds.push(BODY_KINDS[rng.random_range(0..BODY_KINDS.len())]);
        }
    }
    kinds
}

/// Draw random concatenations until `count` of them build.
pub fn random_prototypes(seed: u64, count: usize) -> Vec<PrototypeFunction> {
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let kinds = random_kinds(&mut r);
        let scale = 10f64.powf(r.random_range(-2.0..2.0));
        if let Ok(f) = build_default(&kinds, scale, r.random_range(-2.0..0.0)) {
            out.push(f);
        }
    }
    out
}

/// Points where a prototype's derivative may jump.
pub fn singular_points(f: &PrototypeFunction) -> Vec<f64> {
    let mut pts = f.kinks();
    pts.extend(f.junctions().iter().map(|j| j.position));
    pts.push(f.domain_start());
    pts.push(f.domain_end());
    pts
}

use optbench::dynamics::NonstationaryKind;
use optbench::harness::suite::default_suite;
use optbench::harness::{ColorClass, UnitTest};
use optbench::stochastic::NoiseKind;

/// Stationary 1-d tests of the default suite whose prototype is in `funs`
/// and whose noise kind is in `noises`.
pub fn one_dim_slice(funs: &[&str], noises: &[NoiseKind]) -> Vec<UnitTest> {
    default_suite(0, &[1])
        .unwrap()
        .into_iter()
        .filter(|t| {
            t.nonstationarity().kind == NonstationaryKind::None
                && funs.contains(&t.fun_names()[0].as_str())
                && noises.contains(&t.noise().kind)
        })
        .collect()
}

fn rep(n: usize, v: Option<f64>) -> Vec<Option<f64>> {
    vec![v; n]
}

fn cat(parts: &[Vec<Option<f64>>]) -> Vec<Option<f64>> {
    parts.concat()
}

/// Constructed score groups (None = unstable run) and their expected class.
pub fn classification_table() -> Vec<(&'static str, Vec<Option<f64>>, ColorClass)> {
    use ColorClass::*;
    let s = Some;
    vec![
        ("all unstable", rep(10, None), Red),
        ("all unstable, twelve runs", rep(12, None), Red),
        (
            "one unstable, rest matching sgd",
            cat(&[rep(1, None), rep(9, s(1.0))]),
            Violet,
        ),
        ("nine unstable", cat(&[rep(9, None), rep(1, s(1.0))]), Violet),
        ("half unstable", cat(&[rep(5, None), rep(5, s(3.0))]), Violet),
        (
            "one unstable among excellent runs",
            cat(&[rep(9, s(5.0)), rep(1, None)]),
            Violet,
        ),
        (
            "one unstable among stalled runs",
            cat(&[rep(9, s(0.0)), rep(1, None)]),
            Violet,
        ),
        ("one unstable of eleven", cat(&[rep(10, s(1.0)), rep(1, None)]), Violet),
        ("all at zero", rep(10, s(0.0)), Orange),
        ("all negative", rep(10, s(-1.0)), Orange),
        ("median just below threshold", rep(10, s(0.099)), Orange),
        ("mostly stalled", cat(&[rep(6, s(0.05)), rep(4, s(5.0))]), Orange),
        ("median exactly 2.01", rep(10, s(2.01)), Blue),
        ("median well above 2", rep(10, s(2.5)), Blue),
        ("huge progress", rep(10, s(100.0)), Blue),
        (
            "excellent despite low runs",
            cat(&[rep(4, s(0.0)), rep(6, s(3.0))]),
            Blue,
        ),
        ("median barely above 2", rep(10, s(2.000_000_1)), Blue),
        ("median exactly 2", rep(10, s(2.0)), Green),
        (
            "median 2 from two halves",
            cat(&[rep(5, s(1.0)), rep(5, s(3.0))]),
            Green,
        ),
        ("matches sgd", rep(10, s(1.0)), Green),
        ("all exactly at threshold", rep(10, s(0.1)), Green),
        ("a tenth low", cat(&[rep(1, s(0.0)), rep(9, s(1.0))]), Green),
        ("two of ten low", cat(&[rep(2, s(0.05)), rep(8, s(1.0))]), Green),
        ("two of twelve low", cat(&[rep(2, s(0.05)), rep(10, s(1.0))]), Green),
        (
            "threshold values are not low",
            cat(&[rep(3, s(0.1)), rep(7, s(1.0))]),
            Green,
        ),
        ("three of ten low", cat(&[rep(3, s(0.05)), rep(7, s(0.5))]), Yellow),
        ("exactly a quarter low", cat(&[rep(3, s(0.05)), rep(9, s(1.0))]), Yellow),
        ("median exactly 0.1", cat(&[rep(5, s(0.0)), rep(5, s(0.2))]), Yellow),
        ("four low, median 1", cat(&[rep(4, s(0.05)), rep(6, s(1.0))]), Yellow),
        (
            "just under threshold counts as low",
            cat(&[rep(3, s(0.099_999)), rep(7, s(1.0))]),
            Yellow,
        ),
    ]
}

use optbench::harness::{run_suite, ExperimentDB, SuiteOptions};
use optbench::optimizers::{AlgorithmSetup, Family};
use std::path::PathBuf;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn fixture_setups() -> Vec<AlgorithmSetup> {
    let s = |f: Family, h: &[(&str, f64)]| AlgorithmSetup::new(f, h).unwrap();
    vec![
        s(Family::Sgd, &[("learningRate", 1e-4)]),
        s(Family::Sgd, &[("learningRate", 1e-2)]),
        s(Family::Sgd, &[("learningRate", 1e-1)]),
        s(Family::Sgd, &[("learningRate", 1.0)]),
        s(Family::Sgd, &[("learningRate", 10.0)]),
        s(Family::Momentum, &[("learningRate", 1e-2), ("momentum", 0.9)]),
        s(Family::Adagrad, &[("learningRate", 1e-1)]),
        s(Family::Adadelta, &[("decay", 0.1), ("regularizer", 1e-4)]),
        s(Family::Rprop, &[("learningRate", 1e-2)]),
        s(
            Family::Rmsprop,
            &[("learningRate", 1e-3), ("maxLearningRate", 10.0), ("decay", 0.1)],
        ),
    ]
}

/// The database frozen in `tests/fixtures/fixture_db.jsonl`, rebuilt from scratch.
pub fn build_fixture_db() -> ExperimentDB {
    let tests: Vec<UnitTest> = one_dim_slice(
        &["quad", "abs", "cliff-quad", "gauss"],
        &[NoiseKind::None, NoiseKind::AdditiveGauss],
    )
    .into_iter()
    .filter(|t| t.scales() == [1.0])
    .collect();
    let mut db = ExperimentDB::new(2024);
    let opts = SuiteOptions {
        workers: 4,
        ..SuiteOptions::default()
    };
    run_suite(&mut db, &tests, &fixture_setups(), &opts).unwrap();
    db
}
