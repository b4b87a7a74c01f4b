//! Non-stationary landscapes and chains of unit tests.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::runner::{run_stage, StageOutcome};
use crate::harness::suite::UnitTest;
use crate::optimizers::{AlgorithmSetup, Optimizer, OptimizerState};
use crate::stochastic::{SeedContext, StreamPurpose};

pub const DEFAULT_PERIOD: u32 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NonstationaryKind {
    None,
    TranslateOptimum,
    RescaleShape,
    RescaleNoise,
}

impl NonstationaryKind {
    pub fn tag(self) -> &'static str {
        match self {
            NonstationaryKind::None => "none",
            NonstationaryKind::TranslateOptimum => "translate-optimum",
            NonstationaryKind::RescaleShape => "rescale-shape",
            NonstationaryKind::RescaleNoise => "rescale-noise",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonstationaritySpec {
    pub kind: NonstationaryKind,
    #[serde(default = "default_period")]
    pub period: u32,
    /// Translation std per dimension, or mean absolute relative scale change.
    #[serde(default)]
    pub magnitude: f64,
}

fn default_period() -> u32 {
    DEFAULT_PERIOD
}

impl Default for NonstationaritySpec {
    fn default() -> Self {
        NonstationaritySpec::none()
    }
}

impl NonstationaritySpec {
    pub fn none() -> Self {
        NonstationaritySpec {
            kind: NonstationaryKind::None,
            period: DEFAULT_PERIOD,
            magnitude: 0.0,
        }
    }

    pub fn new(kind: NonstationaryKind, magnitude: f64) -> Self {
        NonstationaritySpec {
            kind,
            period: DEFAULT_PERIOD,
            magnitude,
        }
    }

    pub fn validate(&self, noisy: bool) -> Result<()> {
        if self.period == 0 {
            return Err(Error::Config("non-stationarity period must be >= 1".into()));
        }
        if !(self.magnitude.is_finite() && self.magnitude >= 0.0) {
            return Err(Error::Config(format!(
                "non-stationarity magnitude must be >= 0, got {}",
                self.magnitude
            )));
        }
        if self.kind == NonstationaryKind::RescaleNoise && !noisy {
            return Err(Error::Config("rescale-noise needs a noisy unit test".into()));
        }
        Ok(())
    }

    pub fn fires_at(&self, step: u64) -> bool {
        self.kind != NonstationaryKind::None && step > 0 && step.is_multiple_of(self.period as u64)
    }
}

/// Mutable part of a landscape during one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapeState {
    /// Translation of the origin, in θ coordinates.
    pub offset: Vec<f64>,
    /// Multiplier on each component's scale.
    pub shape_scale: Vec<f64>,
    /// Multiplier on each dimension's noise scale.
    pub noise_scale: Vec<f64>,
}

impl LandscapeState {
    pub fn neutral(dim: usize) -> Self {
        LandscapeState {
            offset: vec![0.0; dim],
            shape_scale: vec![1.0; dim],
            noise_scale: vec![1.0; dim],
        }
    }
}

/// σ of a centred log-normal factor e^{σz} with E|e^{σz} - 1| = `mean_abs_change`.
///
/// E|e^{σz} - 1| = e^{σ²/2} erf(σ/√2), which is increasing in σ; solved by bisection.
pub fn lognormal_sigma(mean_abs_change: f64) -> f64 {
    if mean_abs_change <= 0.0 {
        return 0.0;
    }
    let target = |s: f64| (0.5 * s * s).exp() * libm::erf(s / std::f64::consts::SQRT_2);
    let (mut lo, mut hi) = (0.0, 1.0);
    while target(hi) < mean_abs_change {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if target(mid) < mean_abs_change {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Apply the schedule for `step`; a no-op unless `step` is a positive multiple of the period.
pub fn evolve(state: &mut LandscapeState, spec: &NonstationaritySpec, step: u64, ctx: &SeedContext) {
    if !spec.fires_at(step) {
        return;
    }
    let sigma = match spec.kind {
        NonstationaryKind::RescaleShape | NonstationaryKind::RescaleNoise => lognormal_sigma(spec.magnitude),
        _ => 0.0,
    };
    for i in 0..state.offset.len() {
        let z = ctx
            .at_step(step)
            .at_dim(i as u32)
            .stream(StreamPurpose::Landscape)
            .normal();
        match spec.kind {
            NonstationaryKind::None => {}
            NonstationaryKind::TranslateOptimum => state.offset[i] += spec.magnitude * z,
            NonstationaryKind::RescaleShape => state.shape_scale[i] *= (sigma * z).exp(),
            NonstationaryKind::RescaleNoise => state.noise_scale[i] *= (sigma * z).exp(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainStage {
    /// Unit-test id.
    pub test: String,
    pub steps: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub stages: Vec<ChainStage>,
}

impl ChainSpec {
    pub fn total_steps(&self) -> u64 {
        self.stages.iter().map(|s| s.steps as u64).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainStageOutcome {
    pub entry_state: OptimizerState,
    pub exit_state: OptimizerState,
    #[serde(flatten)]
    pub outcome: StageOutcome,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainOutcome {
    pub repeat_index: u32,
    pub stages: Vec<ChainStageOutcome>,
}

/// Run the stages back to back with one optimizer whose state is never reset.
/// At each stage boundary θ moves to the new stage's default start.
pub fn run_chain<'a>(
    chain: &ChainSpec,
    resolve: impl Fn(&str) -> Option<&'a UnitTest>,
    setup: &AlgorithmSetup,
    suite_seed: u64,
    repeat_index: u32,
) -> Result<ChainOutcome> {
    let tests = chain
        .stages
        .iter()
        .map(|s| resolve(&s.test).ok_or_else(|| Error::Config(format!("unknown unit test `{}` in chain", s.test))))
        .collect::<Result<Vec<_>>>()?;
    let Some(first) = tests.first() else {
        return Err(Error::Config("chain has no stages".into()));
    };
    let dim = first.dim();
    if let Some(t) = tests.iter().find(|t| t.dim() != dim) {
        return Err(Error::Config(format!(
            "chain stage `{}` has dimension {}, expected {dim}",
            t.id(),
            t.dim()
        )));
    }
    let mut theta = first.default_start();
    let mut optimizer = Optimizer::new(setup, &theta)?;
    let mut stages = Vec::with_capacity(tests.len());
    for (stage, test) in chain.stages.iter().zip(&tests) {
        theta = test.default_start();
        let entry_state = optimizer.state().clone();
        let ctx = SeedContext::new(suite_seed, test.seed_key(), repeat_index);
        let outcome = run_stage(test, &mut optimizer, &mut theta, stage.steps, ctx, Some(1));
        stages.push(ChainStageOutcome {
            entry_state,
            exit_state: optimizer.state().clone(),
            outcome,
        });
    }
    Ok(ChainOutcome { repeat_index, stages })
}
