//! Tuned-SGD reference: the best fixed learning rate over a log-uniform sweep.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::runner::run_experiment;
use crate::harness::suite::UnitTest;
use crate::jsonf64;
use crate::optimizers::{AlgorithmSetup, Family};

pub const SWEEP_SIZE: usize = 34;
pub const SWEEP_MIN_EXP: i32 = -10;

/// 10^(-10 + k/3) for k = 0..33. Whole decades are parsed from literals so
/// they coincide bitwise with the SGD grid values.
pub fn sweep_rates() -> Vec<f64> {
    (0..SWEEP_SIZE as i32)
        .map(|k| {
            if k % 3 == 0 {
                format!("1e{}", SWEEP_MIN_EXP + k / 3).parse().unwrap()
            } else {
                10f64.powf((3 * SWEEP_MIN_EXP + k) as f64 / 3.0)
            }
        })
        .collect()
}

pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty list");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub eta: f64,
    /// Median final loss over repeats; unstable repeats count as +∞.
    #[serde(with = "jsonf64")]
    pub median_loss: f64,
    pub unstable_repeats: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceResult {
    pub test_id: String,
    pub eta_best: f64,
    pub l_sgd: f64,
    pub l_init: f64,
    pub sweep: Vec<SweepPoint>,
}

pub fn sgd_setup(eta: f64) -> AlgorithmSetup {
    AlgorithmSetup::new(Family::Sgd, &[("learningRate", eta)]).expect("sweep rates are positive")
}

/// Sweep SGD over [`sweep_rates`] and keep the rate with the lowest median
/// final loss; ties go to the smaller rate.
pub fn compute_reference(test: &UnitTest, repeats: u32, steps: u32, suite_seed: u64) -> Result<ReferenceResult> {
    let mut sweep = Vec::with_capacity(SWEEP_SIZE);
    let mut l_init = f64::NAN;
    for eta in sweep_rates() {
        let recs = run_experiment(test, &sgd_setup(eta), repeats, steps, suite_seed)?;
        l_init = recs
            .first()
            .map_or(test.loss(&test.default_start()), |r| r.outcome.init_loss);
        let losses: Vec<f64> = recs
            .iter()
            .map(|r| {
                if r.outcome.unstable {
                    f64::INFINITY
                } else {
                    r.outcome.final_loss
                }
            })
            .collect();
        sweep.push(SweepPoint {
            eta,
            median_loss: if losses.is_empty() { l_init } else { median(&losses) },
            unstable_repeats: recs.iter().filter(|r| r.outcome.unstable).count() as u32,
        });
    }
    let mut best: Option<&SweepPoint> = None;
    for p in &sweep {
        if p.median_loss.is_finite() && best.is_none_or(|b| p.median_loss < b.median_loss) {
            best = Some(p);
        }
    }
    let best = best.ok_or_else(|| Error::NoReference {
        test_id: test.id().to_string(),
    })?;
    Ok(ReferenceResult {
        test_id: test.id().to_string(),
        eta_best: best.eta,
        l_sgd: best.median_loss,
        l_init,
        sweep: sweep.clone(),
    })
}
