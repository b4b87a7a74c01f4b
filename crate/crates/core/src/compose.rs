//! Multi-dimensional unit tests composed from one-dimensional prototypes.
//!
//! The loss is the p-norm of the component losses evaluated at φ = R·θ,
//! where R is an optional input rotation. The vector field handed to
//! optimizers is Rᵀ∇_φL, optionally rotated once more by a fixed curl
//! matrix, which makes it non-conservative.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::LandscapeState;
use crate::error::{Error, Result};
use crate::landscape::PrototypeFunction;
use crate::stochastic::{rotation_stream, NoiseSpec, NoiseStream};

pub const MAX_DIM: usize = 10;

/// Below this value of Σ L_i^p the p-norm gradient is taken to be zero.
pub const EPSILON_GUARD: f64 = 1e-30;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiTestDoc {
    pub components: Vec<PrototypeFunction>,
    pub p: f64,
    pub rotation_seed: Option<u64>,
    #[serde(default)]
    pub curl_angle: f64,
    #[serde(default)]
    pub noise: NoiseSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MultiTestDoc", into = "MultiTestDoc")]
pub struct MultiTest {
    doc: MultiTestDoc,
    rotation: Option<DMatrix<f64>>,
    curl: Option<DMatrix<f64>>,
    epsilon_guard: f64,
}

impl TryFrom<MultiTestDoc> for MultiTest {
    type Error = Error;

    fn try_from(doc: MultiTestDoc) -> Result<Self> {
        MultiTest::new(doc)
    }
}

impl From<MultiTest> for MultiTestDoc {
    fn from(t: MultiTest) -> Self {
        t.doc
    }
}

impl MultiTest {
    pub fn new(doc: MultiTestDoc) -> Result<Self> {
        let d = doc.components.len();
        if d == 0 || d > MAX_DIM {
            return Err(Error::Config(format!("dimension must lie in 1..={MAX_DIM}, got {d}")));
        }
        if !(doc.p.is_finite() && doc.p >= 1.0) {
            return Err(Error::Config(format!("p must be >= 1, got {}", doc.p)));
        }
        if doc.p > 1.0 {
            if let Some(i) = doc.components.iter().position(|c| !c.is_bounded_below()) {
                return Err(Error::Config(format!(
                    "component {i} is unbounded below; p-norm composition with p > 1 needs non-negative components"
                )));
            }
        }
        if !doc.curl_angle.is_finite() {
            return Err(Error::Config("curl_angle must be finite".into()));
        }
        if doc.curl_angle != 0.0 && d < 2 {
            return Err(Error::Config("curl needs at least two dimensions".into()));
        }
        doc.noise.validate()?;
        let rotation = doc
            .rotation_seed
            .map(|seed| random_rotation(d, &mut rotation_stream(seed)));
        let curl = (doc.curl_angle != 0.0).then(|| curl_matrix(d, doc.curl_angle));
        Ok(MultiTest {
            doc,
            rotation,
            curl,
            epsilon_guard: EPSILON_GUARD,
        })
    }

    /// Axis-aligned, curl-free composition.
    pub fn plain(components: Vec<PrototypeFunction>, p: f64, noise: NoiseSpec) -> Result<Self> {
        Self::new(MultiTestDoc {
            components,
            p,
            rotation_seed: None,
            curl_angle: 0.0,
            noise,
        })
    }

    pub fn doc(&self) -> &MultiTestDoc {
        &self.doc
    }

    pub fn dim(&self) -> usize {
        self.doc.components.len()
    }

    pub fn components(&self) -> &[PrototypeFunction] {
        &self.doc.components
    }

    pub fn p(&self) -> f64 {
        self.doc.p
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.doc.noise
    }

    pub fn rotation(&self) -> Option<&DMatrix<f64>> {
        self.rotation.as_ref()
    }

    pub fn curl(&self) -> Option<&DMatrix<f64>> {
        self.curl.as_ref()
    }

    /// θ₀ such that R·θ₀ is the vector of component default starts.
    pub fn default_start(&self) -> Vec<f64> {
        let phi: Vec<f64> = self.doc.components.iter().map(|c| c.default_start()).collect();
        match &self.rotation {
            None => phi,
            Some(r) => r.tr_mul(&DVector::from_vec(phi)).as_slice().to_vec(),
        }
    }

    /// Location of the minimum in θ coordinates, for the neutral landscape state.
    pub fn min_location(&self) -> Vec<f64> {
        let phi: Vec<f64> = self.doc.components.iter().map(|c| c.min_location()).collect();
        match &self.rotation {
            None => phi,
            Some(r) => r.tr_mul(&DVector::from_vec(phi)).as_slice().to_vec(),
        }
    }

    /// φ = R (θ - offset).
    pub fn input_map(&self, theta: &[f64], state: Option<&LandscapeState>) -> Vec<f64> {
        assert_eq!(theta.len(), self.dim(), "theta has the wrong dimension");
        let shifted: Vec<f64> = match state {
            Some(s) => theta.iter().zip(&s.offset).map(|(t, o)| t - o).collect(),
            None => theta.to_vec(),
        };
        match &self.rotation {
            None => shifted,
            Some(r) => (r * DVector::from_vec(shifted)).as_slice().to_vec(),
        }
    }

    fn component_values(&self, phi: &[f64], state: Option<&LandscapeState>) -> Vec<f64> {
        self.doc
            .components
            .iter()
            .zip(phi)
            .enumerate()
            .map(|(i, (c, &x))| match state {
                Some(s) => s.shape_scale[i] * c.value(x),
                None => c.value(x),
            })
            .collect()
    }

    fn combine(&self, values: &[f64]) -> f64 {
        let p = self.doc.p;
        if p == 1.0 {
            values.iter().sum()
        } else {
            values.iter().map(|v| v.max(0.0).powf(p)).sum::<f64>().powf(1.0 / p)
        }
    }

    pub fn loss(&self, theta: &[f64]) -> f64 {
        self.loss_in(theta, None)
    }

    pub fn loss_in(&self, theta: &[f64], state: Option<&LandscapeState>) -> f64 {
        let phi = self.input_map(theta, state);
        self.combine(&self.component_values(&phi, state))
    }

    pub fn field(&self, theta: &[f64]) -> Vec<f64> {
        self.field_in(theta, None)
    }

    /// curl · Rᵀ · ∇_φ L, with ∇_φ by the chain rule through the p-norm.
    pub fn field_in(&self, theta: &[f64], state: Option<&LandscapeState>) -> Vec<f64> {
        let phi = self.input_map(theta, state);
        let p = self.doc.p;
        let slopes: Vec<f64> = self
            .doc
            .components
            .iter()
            .zip(&phi)
            .enumerate()
            .map(|(i, (c, &x))| match state {
                Some(s) => s.shape_scale[i] * c.true_gradient(x),
                None => c.true_gradient(x),
            })
            .collect();
        let grad_phi = if p == 1.0 {
            slopes
        } else {
            let values: Vec<f64> = self
                .component_values(&phi, state)
                .into_iter()
                .map(|v| v.max(0.0))
                .collect();
            let total: f64 = values.iter().map(|v| v.powf(p)).sum();
            if total < self.epsilon_guard {
                return vec![0.0; self.dim()];
            }
            let outer = total.powf((1.0 - p) / p);
            values
                .iter()
                .zip(&slopes)
                .map(|(v, s)| v.powf(p - 1.0) * s * outer)
                .collect()
        };
        let grad = match &self.rotation {
            None => grad_phi,
            Some(r) => r.tr_mul(&DVector::from_vec(grad_phi)).as_slice().to_vec(),
        };
        match &self.curl {
            None => grad,
            Some(c) => (c * DVector::from_vec(grad)).as_slice().to_vec(),
        }
    }

    pub fn is_differentiable(&self) -> bool {
        self.doc.components.iter().all(|c| c.is_differentiable())
    }
}

/// Haar-distributed special-orthogonal matrix: QR of a Gaussian matrix, with
/// columns sign-corrected by diag(R) and the first column flipped if det < 0.
pub fn random_rotation(d: usize, stream: &mut NoiseStream) -> DMatrix<f64> {
    if d < 2 {
        log::warn!("random rotation requested for dimension {d}; using identity");
        return DMatrix::identity(d.max(1), d.max(1));
    }
    let gauss = DMatrix::from_fn(d, d, |_, _| stream.normal());
    let qr = gauss.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

/// Block-diagonal Givens rotations by `angle` in planes (1,2), (3,4), …:
/// each block is [[cos α, sin α], [-sin α, cos α]].
pub fn curl_matrix(d: usize, angle: f64) -> DMatrix<f64> {
    let mut m = DMatrix::identity(d, d);
    if angle == 0.0 {
        return m;
    }
    let (s, c) = angle.sin_cos();
    for k in (0..d.saturating_sub(1)).step_by(2) {
        m[(k, k)] = c;
        m[(k, k + 1)] = s;
        m[(k + 1, k)] = -s;
        m[(k + 1, k + 1)] = c;
    }
    m
}
