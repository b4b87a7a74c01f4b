//! Gradient noise models and seed derivation.
//!
//! Every random draw in a run comes from a counter-based ChaCha stream keyed
//! by a [`SeedContext`]. The context holds no algorithm identity, so all
//! optimizer setups evaluated on the same (test, repeat, step, dimension)
//! see the same noise realization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    None,
    AdditiveGauss,
    MultiplicativeGauss,
    AdditiveCauchy,
    MaskOut,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 5] = [
        NoiseKind::None,
        NoiseKind::AdditiveGauss,
        NoiseKind::MultiplicativeGauss,
        NoiseKind::AdditiveCauchy,
        NoiseKind::MaskOut,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            NoiseKind::None => "none",
            NoiseKind::AdditiveGauss => "additive-gauss",
            NoiseKind::MultiplicativeGauss => "multiplicative-gauss",
            NoiseKind::AdditiveCauchy => "additive-cauchy",
            NoiseKind::MaskOut => "mask-out",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// σ for the Gaussian and Cauchy kinds.
    #[serde(default)]
    pub scale: f64,
    /// Probability of zeroing a component, mask-out only.
    #[serde(default)]
    pub drop_prob: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec::none()
    }
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec {
            kind: NoiseKind::None,
            scale: 0.0,
            drop_prob: 0.0,
        }
    }

    pub fn additive_gauss(scale: f64) -> Self {
        NoiseSpec {
            kind: NoiseKind::AdditiveGauss,
            scale,
            drop_prob: 0.0,
        }
    }

    pub fn multiplicative_gauss(scale: f64) -> Self {
        NoiseSpec {
            kind: NoiseKind::MultiplicativeGauss,
            scale,
            drop_prob: 0.0,
        }
    }

    pub fn additive_cauchy(scale: f64) -> Self {
        NoiseSpec {
            kind: NoiseKind::AdditiveCauchy,
            scale,
            drop_prob: 0.0,
        }
    }

    pub fn mask_out(drop_prob: f64) -> Self {
        NoiseSpec {
            kind: NoiseKind::MaskOut,
            scale: 0.0,
            drop_prob,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale.is_finite() && self.scale >= 0.0) {
            return Err(Error::Config(format!("noise scale must be >= 0, got {}", self.scale)));
        }
        if !(0.0..=1.0).contains(&self.drop_prob) {
            return Err(Error::Config(format!(
                "drop_prob must lie in [0, 1], got {}",
                self.drop_prob
            )));
        }
        Ok(())
    }

    pub fn is_noisy(&self) -> bool {
        self.kind != NoiseKind::None
    }
}

/// Coordinates of one random draw in the experiment protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct SeedContext {
    pub suite_seed: u64,
    pub test_id: u64,
    pub repeat_index: u32,
    pub step_index: u64,
    pub dim_index: u32,
}

impl SeedContext {
    pub fn new(suite_seed: u64, test_id: u64, repeat_index: u32) -> Self {
        SeedContext {
            suite_seed,
            test_id,
            repeat_index,
            step_index: 0,
            dim_index: 0,
        }
    }

    pub fn at_step(self, step_index: u64) -> Self {
        SeedContext { step_index, ..self }
    }

    pub fn at_dim(self, dim_index: u32) -> Self {
        SeedContext { dim_index, ..self }
    }

    /// Stream for one purpose; distinct purposes never share draws.
    pub fn stream(&self, purpose: StreamPurpose) -> NoiseStream {
        let mut key = mix(0x6f70_7462_656e_6368 ^ purpose as u64);
        for field in [
            self.suite_seed,
            self.test_id,
            self.repeat_index as u64,
            self.step_index,
            self.dim_index as u64,
        ] {
            key = mix(key ^ field);
        }
        let mut seed = [0u8; 32];
        let mut word = key;
        for chunk in seed.chunks_exact_mut(8) {
            word = mix(word);
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        NoiseStream(ChaCha8Rng::from_seed(seed))
    }
}

/// Domain separation between the random streams of one context.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamPurpose {
    Gradient = 1,
    Landscape = 2,
    Transition = 3,
    Rotation = 4,
}

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic random stream derived from a seed context.
#[derive(Clone, Debug)]
pub struct NoiseStream(ChaCha8Rng);

impl NoiseStream {
    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.0)
    }

    pub fn cauchy(&mut self) -> f64 {
        Cauchy::new(0.0, 1.0).expect("unit Cauchy").sample(&mut self.0)
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.0.random::<f64>()
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.0
    }
}

/// Gradient-noise stream for `ctx`.
pub fn derive_stream(ctx: &SeedContext) -> NoiseStream {
    ctx.stream(StreamPurpose::Gradient)
}

/// Stream used to draw a test's input rotation from its seed.
pub fn rotation_stream(rotation_seed: u64) -> NoiseStream {
    SeedContext {
        suite_seed: rotation_seed,
        ..SeedContext::default()
    }
    .stream(StreamPurpose::Rotation)
}

/// Perturb one gradient component. `scale_factor` multiplies σ (or the drop
/// probability, clamped to 1) and is 1 for stationary noise.
pub fn perturb(g: f64, spec: &NoiseSpec, scale_factor: f64, stream: &mut NoiseStream) -> f64 {
    match spec.kind {
        NoiseKind::None => g,
        NoiseKind::AdditiveGauss => g + spec.scale * scale_factor * stream.normal(),
        NoiseKind::MultiplicativeGauss => g * (spec.scale * scale_factor * stream.normal()).exp(),
        NoiseKind::AdditiveCauchy => g + spec.scale * scale_factor * stream.cauchy(),
        NoiseKind::MaskOut => {
            let p = (spec.drop_prob * scale_factor).min(1.0);
            if stream.uniform() < p {
                0.0
            } else {
                g
            }
        }
    }
}

/// Sampled gradient; each dimension draws from its own stream.
pub fn sample_gradient(true_grad: &[f64], spec: &NoiseSpec, ctx: &SeedContext) -> Vec<f64> {
    sample_gradient_scaled(true_grad, spec, None, ctx)
}

/// As [`sample_gradient`], with optional per-dimension noise-scale factors.
pub fn sample_gradient_scaled(
    true_grad: &[f64],
    spec: &NoiseSpec,
    factors: Option<&[f64]>,
    ctx: &SeedContext,
) -> Vec<f64> {
    if spec.kind == NoiseKind::None {
        return true_grad.to_vec();
    }
    true_grad
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            let mut stream = derive_stream(&ctx.at_dim(i as u32));
            let factor = factors.map_or(1.0, |f| f[i]);
            perturb(g, spec, factor, &mut stream)
        })
        .collect()
}
