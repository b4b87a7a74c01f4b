//! Unit-test documents, content-hash identities, and the default suite generator.

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::compose::{MultiTest, MultiTestDoc, MAX_DIM};
use crate::dynamics::{LandscapeState, NonstationaritySpec, NonstationaryKind};
use crate::error::{Error, Result};
use crate::landscape::{catalog, PrototypeFunction};
use crate::reference_landscapes::{Autoencoder1D, TwoStateTD};
use crate::stochastic::{sample_gradient_scaled, NoiseKind, NoiseSpec, SeedContext, StreamPurpose};

/// Canonical JSON of `value`: object keys sorted, shortest round-trip floats.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string(&serde_json::to_value(value)?)?)
}

/// First 16 hex digits of the SHA-256 of the canonical JSON, and the same
/// 8 bytes as an integer for seeding.
pub fn content_id<T: Serialize>(value: &T) -> Result<(String, u64)> {
    let digest = Sha256::digest(canonical_json(value)?.as_bytes());
    let key = u64::from_be_bytes(digest[..8].try_into().unwrap());
    Ok((hex::encode(&digest[..8]), key))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Landscape {
    Synthetic(MultiTest),
    Td2(TwoStateTD),
    Ae1d(Autoencoder1D),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitTestDoc {
    pub landscape: Landscape,
    #[serde(default)]
    pub nonstationarity: NonstationaritySpec,
}

/// A validated unit test with its content-hash id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "UnitTestDoc", into = "UnitTestDoc")]
pub struct UnitTest {
    doc: UnitTestDoc,
    id: String,
    seed_key: u64,
}

impl TryFrom<UnitTestDoc> for UnitTest {
    type Error = Error;

    fn try_from(doc: UnitTestDoc) -> Result<Self> {
        UnitTest::new(doc)
    }
}

impl From<UnitTest> for UnitTestDoc {
    fn from(t: UnitTest) -> Self {
        t.doc
    }
}

/// Column group of a unit test in reports.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupKey {
    pub dims: usize,
    pub nonstationarity: NonstationaryKind,
    pub noise: String,
    pub differentiable: bool,
}

impl GroupKey {
    pub fn label(&self) -> String {
        format!(
            "{}d {} {} {}",
            self.dims,
            self.nonstationarity.tag(),
            self.noise,
            if self.differentiable { "smooth" } else { "kinked" }
        )
    }
}

impl UnitTest {
    pub fn new(doc: UnitTestDoc) -> Result<Self> {
        match &doc.landscape {
            Landscape::Synthetic(m) => doc.nonstationarity.validate(m.noise().is_noisy())?,
            Landscape::Td2(m) => m.validate()?,
            Landscape::Ae1d(a) => a.noise.validate()?,
        }
        if !matches!(doc.landscape, Landscape::Synthetic(_)) && doc.nonstationarity.kind != NonstationaryKind::None {
            return Err(Error::Config(
                "non-stationarity is only supported on synthetic landscapes".into(),
            ));
        }
        let (id, seed_key) = content_id(&doc)?;
        Ok(UnitTest { doc, id, seed_key })
    }

    pub fn synthetic(multi: MultiTest, nonstationarity: NonstationaritySpec) -> Result<Self> {
        Self::new(UnitTestDoc {
            landscape: Landscape::Synthetic(multi),
            nonstationarity,
        })
    }

    /// Stationary one-dimensional test on a single prototype.
    pub fn one_dim(f: PrototypeFunction, noise: NoiseSpec) -> Result<Self> {
        Self::synthetic(MultiTest::plain(vec![f], 1.0, noise)?, NonstationaritySpec::none())
    }

    pub fn doc(&self) -> &UnitTestDoc {
        &self.doc
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Integer form of the id, used as `test_id` in seed contexts.
    pub fn seed_key(&self) -> u64 {
        self.seed_key
    }

    pub fn landscape(&self) -> &Landscape {
        &self.doc.landscape
    }

    pub fn nonstationarity(&self) -> &NonstationaritySpec {
        &self.doc.nonstationarity
    }

    pub fn dim(&self) -> usize {
        match &self.doc.landscape {
            Landscape::Synthetic(m) => m.dim(),
            Landscape::Td2(_) | Landscape::Ae1d(_) => 2,
        }
    }

    pub fn default_start(&self) -> Vec<f64> {
        match &self.doc.landscape {
            Landscape::Synthetic(m) => m.default_start(),
            Landscape::Td2(_) => vec![0.0, 0.0],
            Landscape::Ae1d(_) => Autoencoder1D::DEFAULT_START.to_vec(),
        }
    }

    pub fn noise(&self) -> NoiseSpec {
        match &self.doc.landscape {
            Landscape::Synthetic(m) => *m.noise(),
            Landscape::Td2(_) => NoiseSpec::none(),
            Landscape::Ae1d(a) => a.noise,
        }
    }

    /// Noise tag used for filtering and grouping; TD tests are stochastic through transition sampling.
    pub fn noise_tag(&self) -> &'static str {
        match &self.doc.landscape {
            Landscape::Td2(_) => "td-sampling",
            _ => self.noise().kind.tag(),
        }
    }

    pub fn fun_names(&self) -> Vec<String> {
        match &self.doc.landscape {
            Landscape::Synthetic(m) => m
                .components()
                .iter()
                .map(|c| c.name().unwrap_or("custom").to_string())
                .collect(),
            Landscape::Td2(_) => vec!["td2".into()],
            Landscape::Ae1d(_) => vec!["ae1d".into()],
        }
    }

    pub fn scales(&self) -> Vec<f64> {
        match &self.doc.landscape {
            Landscape::Synthetic(m) => m.components().iter().map(|c| c.scale()).collect(),
            _ => vec![1.0],
        }
    }

    pub fn is_differentiable(&self) -> bool {
        match &self.doc.landscape {
            Landscape::Synthetic(m) => m.is_differentiable(),
            _ => true,
        }
    }

    pub fn group(&self) -> GroupKey {
        GroupKey {
            dims: self.dim(),
            nonstationarity: self.doc.nonstationarity.kind,
            noise: self.noise_tag().to_string(),
            differentiable: self.is_differentiable(),
        }
    }

    pub fn label(&self) -> String {
        let funs = self.fun_names().join("+");
        let noise = self.noise();
        let level = match noise.kind {
            NoiseKind::None => String::new(),
            NoiseKind::MaskOut => format!("({})", noise.drop_prob),
            _ => format!("({:.3e})", noise.scale),
        };
        format!("{funs} {}{level}", self.noise_tag())
    }

    /// Noise-free loss under a landscape state.
    pub fn loss_in(&self, theta: &[f64], state: &LandscapeState) -> f64 {
        match &self.doc.landscape {
            Landscape::Synthetic(m) => m.loss_in(theta, Some(state)),
            Landscape::Td2(m) => m.loss(theta),
            Landscape::Ae1d(a) => a.ae_loss(theta),
        }
    }

    pub fn loss(&self, theta: &[f64]) -> f64 {
        self.loss_in(theta, &LandscapeState::neutral(self.dim()))
    }

    /// Mean update field handed to optimizers (a gradient unless curl or TD).
    pub fn true_field(&self, theta: &[f64], state: &LandscapeState) -> Vec<f64> {
        match &self.doc.landscape {
            Landscape::Synthetic(m) => m.field_in(theta, Some(state)),
            Landscape::Td2(m) => m.td_mean_update(theta).iter().map(|u| -u).collect(),
            Landscape::Ae1d(a) => a.ae_grad(theta).to_vec(),
        }
    }

    /// Sampled gradient at `theta`; `ctx` must carry the step index.
    pub fn sample_gradient(&self, theta: &[f64], state: &LandscapeState, ctx: &SeedContext) -> Vec<f64> {
        match &self.doc.landscape {
            Landscape::Td2(m) => m.td_sample_update(theta, ctx).iter().map(|u| -u).collect(),
            _ => {
                let field = self.true_field(theta, state);
                sample_gradient_scaled(&field, &self.noise(), Some(&state.noise_scale), ctx)
            }
        }
    }
}

/// Scale values per dimension used by the generator.
pub const SUITE_SCALES: [f64; 3] = [0.01, 1.0, 100.0];
pub const SUITE_CURL_ANGLES: [f64; 2] = [0.05, 0.3];
pub const SUITE_NONSTATIONARY_MAGNITUDE: f64 = 0.1;
/// Prototypes combined in multi-dimensional tests.
pub const MULTI_DIM_PROTOTYPES: [&str; 6] = ["quad", "abs", "line", "cliff-quad", "gauss", "laplace"];

#[derive(Clone, Copy, Debug, PartialEq)]
enum NoiseLevel {
    None,
    /// σ relative to the RMS gradient at θ₀.
    Gauss(f64),
    Cauchy(f64),
    Multiplicative(f64),
    Mask(f64),
}

const ONE_DIM_NOISE: [NoiseLevel; 9] = [
    NoiseLevel::None,
    NoiseLevel::Gauss(0.1),
    NoiseLevel::Gauss(1.0),
    NoiseLevel::Multiplicative(0.1),
    NoiseLevel::Multiplicative(1.0),
    NoiseLevel::Cauchy(0.1),
    NoiseLevel::Cauchy(1.0),
    NoiseLevel::Mask(0.2),
    NoiseLevel::Mask(0.5),
];

const MULTI_DIM_NOISE: [NoiseLevel; 3] = [NoiseLevel::None, NoiseLevel::Gauss(1.0), NoiseLevel::Mask(0.5)];

fn characteristic_gradient(multi: &MultiTest) -> f64 {
    let g = multi.field(&multi.default_start());
    let rms = (g.iter().map(|x| x * x).sum::<f64>() / g.len() as f64).sqrt();
    if rms > 0.0 && rms.is_finite() {
        rms
    } else {
        1.0
    }
}

fn noise_for(level: NoiseLevel, g_char: f64) -> NoiseSpec {
    match level {
        NoiseLevel::None => NoiseSpec::none(),
        NoiseLevel::Gauss(s) => NoiseSpec::additive_gauss(s * g_char),
        NoiseLevel::Cauchy(s) => NoiseSpec::additive_cauchy(s * g_char),
        NoiseLevel::Multiplicative(s) => NoiseSpec::multiplicative_gauss(s),
        NoiseLevel::Mask(p) => NoiseSpec::mask_out(p),
    }
}

fn with_noise(doc: &MultiTestDoc, level: NoiseLevel) -> Result<MultiTest> {
    let base = MultiTest::new(MultiTestDoc {
        noise: NoiseSpec::none(),
        ..doc.clone()
    })?;
    let g_char = characteristic_gradient(&base);
    MultiTest::new(MultiTestDoc {
        noise: noise_for(level, g_char),
        ..doc.clone()
    })
}

struct Builder {
    seed: u64,
    counter: u64,
    tests: Vec<UnitTest>,
    seen: std::collections::HashSet<String>,
}

impl Builder {
    fn rotation_seed(&mut self) -> u64 {
        self.counter += 1;
        SeedContext::new(self.seed, self.counter, 0)
            .stream(StreamPurpose::Rotation)
            .rng()
            .random()
    }

    fn push(&mut self, test: UnitTest) {
        if self.seen.insert(test.id().to_string()) {
            self.tests.push(test);
        }
    }

    fn one_dim(&mut self) -> Result<()> {
        for name in catalog::names() {
            for &scale in &SUITE_SCALES {
                let f = catalog::prototype(name, scale)?;
                let doc = MultiTestDoc {
                    components: vec![f],
                    p: 1.0,
                    rotation_seed: None,
                    curl_angle: 0.0,
                    noise: NoiseSpec::none(),
                };
                for level in ONE_DIM_NOISE {
                    let multi = with_noise(&doc, level)?;
                    let noisy = multi.noise().is_noisy();
                    self.push(UnitTest::synthetic(multi.clone(), NonstationaritySpec::none())?);
                    for kind in [
                        NonstationaryKind::TranslateOptimum,
                        NonstationaryKind::RescaleShape,
                        NonstationaryKind::RescaleNoise,
                    ] {
                        let skip = kind == NonstationaryKind::RescaleNoise
                            && (!noisy || multi.noise().kind == NoiseKind::MaskOut);
                        if skip {
                            continue;
                        }
                        let spec = NonstationaritySpec::new(kind, SUITE_NONSTATIONARY_MAGNITUDE);
                        self.push(UnitTest::synthetic(multi.clone(), spec)?);
                    }
                }
            }
        }
        Ok(())
    }

    fn multi(&mut self, components: Vec<PrototypeFunction>) -> Result<()> {
        let bounded = components.iter().all(|c| c.is_bounded_below());
        let d = components.len();
        for p in [1.0, 2.0] {
            if p > 1.0 && !bounded {
                continue;
            }
            for rotate in [false, true] {
                let rotation_seed = if rotate { Some(self.rotation_seed()) } else { None };
                for curl in std::iter::once(0.0).chain(SUITE_CURL_ANGLES) {
                    let doc = MultiTestDoc {
                        components: components.clone(),
                        p,
                        rotation_seed,
                        curl_angle: if d >= 2 { curl } else { 0.0 },
                        noise: NoiseSpec::none(),
                    };
                    for level in MULTI_DIM_NOISE {
                        self.push(UnitTest::synthetic(
                            with_noise(&doc, level)?,
                            NonstationaritySpec::none(),
                        )?);
                    }
                }
            }
        }
        Ok(())
    }

    fn two_dim(&mut self) -> Result<()> {
        let names = MULTI_DIM_PROTOTYPES;
        for i in 0..names.len() {
            for j in i..names.len() {
                for scales in [(1.0, 1.0), (0.01, 100.0)] {
                    self.multi(vec![
                        catalog::prototype(names[i], scales.0)?,
                        catalog::prototype(names[j], scales.1)?,
                    ])?;
                }
            }
        }
        self.push(UnitTest::new(UnitTestDoc {
            landscape: Landscape::Td2(TwoStateTD::default()),
            nonstationarity: NonstationaritySpec::none(),
        })?);
        for noise in [
            NoiseSpec::none(),
            NoiseSpec::additive_gauss(0.1),
            NoiseSpec::additive_gauss(1.0),
        ] {
            self.push(UnitTest::new(UnitTestDoc {
                landscape: Landscape::Ae1d(Autoencoder1D { x: 1.0, noise }),
                nonstationarity: NonstationaritySpec::none(),
            })?);
        }
        Ok(())
    }

    /// Homogeneous components with uniform or log-graded scales.
    fn high_dim(&mut self, d: usize) -> Result<()> {
        for name in MULTI_DIM_PROTOTYPES {
            let uniform = vec![1.0; d];
            let graded: Vec<f64> = (0..d)
                .map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / (d - 1) as f64))
                .collect();
            for scales in [uniform, graded] {
                let comps = scales
                    .iter()
                    .map(|&s| catalog::prototype(name, s))
                    .collect::<Result<Vec<_>>>()?;
                self.multi(comps)?;
            }
        }
        Ok(())
    }
}

/// Parse and check a dimension list such as `1,2,10`.
pub fn parse_dims(text: &str) -> Result<Vec<usize>> {
    let dims = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("invalid dimension `{}` in dims list", s.trim())))
        })
        .collect::<Result<Vec<_>>>()?;
    validate_dims(&dims)?;
    Ok(dims)
}

pub fn validate_dims(dims: &[usize]) -> Result<()> {
    if dims.is_empty() {
        return Err(Error::Config("dims list is empty".into()));
    }
    for (i, &d) in dims.iter().enumerate() {
        if d == 0 || d > MAX_DIM {
            return Err(Error::Config(format!("dimension {d} outside 1..={MAX_DIM}")));
        }
        if dims[..i].contains(&d) {
            return Err(Error::Config(format!("dimension {d} listed twice")));
        }
    }
    Ok(())
}

pub const DEFAULT_DIMS: [usize; 3] = [1, 2, 10];

/// The default suite: catalog × scales × noise × non-stationarity in 1-d;
/// p-norm compositions with rotation and curl in higher dimensions; plus
/// the TD and auto-encoder landscapes when 2 is among `dims`.
pub fn default_suite(seed: u64, dims: &[usize]) -> Result<Vec<UnitTest>> {
    validate_dims(dims)?;
    let mut b = Builder {
        seed,
        counter: 0,
        tests: Vec::new(),
        seen: Default::default(),
    };
    for &d in dims {
        match d {
            1 => b.one_dim()?,
            2 => b.two_dim()?,
            _ => b.high_dim(d)?,
        }
    }
    Ok(b.tests)
}

/// Read a manifest: a JSON array of unit-test documents.
pub fn parse_manifest(text: &str) -> Result<Vec<UnitTest>> {
    Ok(serde_json::from_str(text)?)
}

pub fn write_manifest(tests: &[UnitTest]) -> Result<String> {
    let mut out = serde_json::to_string_pretty(tests)?;
    out.push('\n');
    Ok(out)
}
