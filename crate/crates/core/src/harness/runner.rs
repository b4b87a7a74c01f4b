//! The per-experiment protocol: repeated short runs from the default start.

use serde::{Deserialize, Serialize};

use crate::dynamics::{evolve, LandscapeState};
use crate::error::Result;
use crate::harness::suite::{content_id, UnitTest};
use crate::jsonf64;
use crate::optimizers::{AlgorithmSetup, Optimizer};
use crate::stochastic::SeedContext;

pub const REPEATS: u32 = 10;
pub const STEPS: u32 = 100;
/// A run is unstable once its loss exceeds this multiple of max(L_init, 1).
pub const DIVERGENCE_FACTOR: f64 = 1e10;

/// Eval-point losses and parameters every `stride` steps, starting at step 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub stride: u32,
    #[serde(with = "jsonf64::vec")]
    pub losses: Vec<f64>,
    pub thetas: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageOutcome {
    #[serde(with = "jsonf64")]
    pub init_loss: f64,
    #[serde(with = "jsonf64")]
    pub final_loss: f64,
    #[serde(with = "jsonf64::vec")]
    pub final_theta: Vec<f64>,
    pub unstable: bool,
    pub steps_taken: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Trajectory>,
}

/// Run `steps` updates of `optimizer` on `test`, starting from `theta`.
///
/// Each step evolves the landscape, queries a sampled gradient at the
/// optimizer's query point and applies the update. The run stops early once
/// it is flagged unstable.
pub fn run_stage(
    test: &UnitTest,
    optimizer: &mut Optimizer,
    theta: &mut [f64],
    steps: u32,
    ctx: SeedContext,
    trajectory_stride: Option<u32>,
) -> StageOutcome {
    let mut state = LandscapeState::neutral(test.dim());
    let init_loss = test.loss_in(theta, &state);
    let limit = DIVERGENCE_FACTOR * init_loss.max(1.0);
    let mut trajectory = trajectory_stride.map(|stride| Trajectory {
        stride: stride.max(1),
        losses: vec![init_loss],
        thetas: vec![theta.to_vec()],
    });
    let mut unstable = !init_loss.is_finite();
    let mut steps_taken = 0;
    let mut loss = init_loss;
    for t in 0..steps {
        if unstable {
            break;
        }
        let step = t as u64;
        evolve(&mut state, test.nonstationarity(), step, &ctx);
        let query = optimizer.query_point(theta);
        let grad = test.sample_gradient(&query, &state, &ctx.at_step(step));
        let healthy = optimizer.step(theta, &grad);
        steps_taken += 1;
        let eval = optimizer.eval_point(theta);
        loss = test.loss_in(&eval, &state);
        if !healthy || !loss.is_finite() || loss > limit {
            unstable = true;
            break;
        }
        if let Some(tr) = trajectory.as_mut() {
            if steps_taken % tr.stride == 0 {
                tr.losses.push(loss);
                tr.thetas.push(eval);
            }
        }
    }
    StageOutcome {
        init_loss,
        final_loss: loss,
        final_theta: optimizer.eval_point(theta),
        unstable,
        steps_taken,
        trajectory,
    }
}

/// One repeat of one (unit test, setup) pairing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub test_id: String,
    pub setup_id: String,
    pub repeat_index: u32,
    #[serde(flatten)]
    pub outcome: StageOutcome,
    /// (L - L_init) / (L_sgd - L_init); `None` when unstable or unreferenced.
    #[serde(with = "jsonf64::opt")]
    pub normalized: Option<f64>,
}

pub fn setup_id(setup: &AlgorithmSetup) -> String {
    content_id(setup).expect("setups serialize").0
}

/// One fresh run; the seed context deliberately carries no setup identity.
pub fn run_repeat(
    test: &UnitTest,
    setup: &AlgorithmSetup,
    repeat_index: u32,
    steps: u32,
    suite_seed: u64,
    trajectory_stride: Option<u32>,
) -> Result<StageOutcome> {
    let mut theta = test.default_start();
    let mut optimizer = Optimizer::new(setup, &theta)?;
    let ctx = SeedContext::new(suite_seed, test.seed_key(), repeat_index);
    Ok(run_stage(
        test,
        &mut optimizer,
        &mut theta,
        steps,
        ctx,
        trajectory_stride,
    ))
}

pub fn run_experiment(
    test: &UnitTest,
    setup: &AlgorithmSetup,
    repeats: u32,
    steps: u32,
    suite_seed: u64,
) -> Result<Vec<RunRecord>> {
    let sid = setup_id(setup);
    (0..repeats)
        .map(|k| {
            Ok(RunRecord {
                test_id: test.id().to_string(),
                setup_id: sid.clone(),
                repeat_index: k,
                outcome: run_repeat(test, setup, k, steps, suite_seed, None)?,
                normalized: None,
            })
        })
        .collect()
}

/// (L - L_init) / (L_sgd - L_init), undefined when the reference made no change.
pub fn normalize(loss: f64, init_loss: f64, reference_loss: f64) -> Option<f64> {
    let denom = reference_loss - init_loss;
    if denom == 0.0 || !denom.is_finite() || !loss.is_finite() {
        return None;
    }
    Some((loss - init_loss) / denom)
}

/// Fill `normalized` for every stable record.
pub fn normalize_records(records: &mut [RunRecord], reference_loss: f64) {
    for r in records {
        r.normalized = if r.outcome.unstable {
            None
        } else {
            normalize(r.outcome.final_loss, r.outcome.init_loss, reference_loss)
        };
    }
}
