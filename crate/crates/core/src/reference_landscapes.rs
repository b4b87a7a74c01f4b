//! Two small landscapes that are not built from shape prototypes: the vector
//! field of TD(0) on a two-state Markov chain, and the loss of a
//! one-dimensional auto-encoder.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stochastic::{NoiseSpec, SeedContext, StreamPurpose};

/// How TD updates pick the state to update.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Visitation {
    /// Each update starts in a uniformly drawn state.
    Uniform,
    /// States are drawn from the chain's stationary distribution.
    Stationary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoStateTD {
    /// Row-stochastic: `transition[s][s']`.
    pub transition: [[f64; 2]; 2],
    pub rewards: [f64; 2],
    pub discount: f64,
    pub visitation: Visitation,
}

impl Default for TwoStateTD {
    fn default() -> Self {
        TwoStateTD {
            transition: [[0.9, 0.1], [0.5, 0.5]],
            rewards: [0.0, 1.0],
            discount: 0.2,
            visitation: Visitation::Uniform,
        }
    }
}

impl TwoStateTD {
    pub fn validate(&self) -> Result<()> {
        for (s, row) in self.transition.iter().enumerate() {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) || (row[0] + row[1] - 1.0).abs() > 1e-12 {
                return Err(Error::Config(format!("transition row {s} is not a probability vector")));
            }
        }
        if !(0.0..1.0).contains(&self.discount) {
            return Err(Error::Config(format!(
                "discount must lie in [0, 1), got {}",
                self.discount
            )));
        }
        if self.rewards.iter().any(|r| !r.is_finite()) {
            return Err(Error::Config("rewards must be finite".into()));
        }
        Ok(())
    }

    fn p(&self) -> Matrix2<f64> {
        let t = &self.transition;
        Matrix2::new(t[0][0], t[0][1], t[1][0], t[1][1])
    }

    /// V* solving (I − γP) V = R.
    pub fn fixed_point(&self) -> [f64; 2] {
        let a = Matrix2::identity() - self.p() * self.discount;
        let v = a
            .lu()
            .solve(&Vector2::new(self.rewards[0], self.rewards[1]))
            .expect("I - γP is invertible for γ < 1");
        [v[0], v[1]]
    }

    /// Stationary distribution of the chain.
    pub fn stationary(&self) -> [f64; 2] {
        let a = self.transition[0][1];
        let b = self.transition[1][0];
        if a + b == 0.0 {
            return [0.5, 0.5];
        }
        [b / (a + b), a / (a + b)]
    }

    pub fn visitation_weights(&self) -> [f64; 2] {
        match self.visitation {
            Visitation::Uniform => [0.5, 0.5],
            Visitation::Stationary => self.stationary(),
        }
    }

    /// Expected TD(0) update of each state's value, given a visit to that state:
    /// F_s = R_s + γ (P θ)_s − θ_s.
    pub fn td_expected_field(&self, theta: &[f64]) -> [f64; 2] {
        let t = &self.transition;
        let g = self.discount;
        [
            self.rewards[0] + g * (t[0][0] * theta[0] + t[0][1] * theta[1]) - theta[0],
            self.rewards[1] + g * (t[1][0] * theta[0] + t[1][1] * theta[1]) - theta[1],
        ]
    }

    /// Mean of [`TwoStateTD::td_sample_update`]: each component weighted by its visitation probability.
    pub fn td_mean_update(&self, theta: &[f64]) -> [f64; 2] {
        let f = self.td_expected_field(theta);
        let w = self.visitation_weights();
        [w[0] * f[0], w[1] * f[1]]
    }

    /// One sampled transition; only the visited state's component is non-zero.
    pub fn td_sample_update(&self, theta: &[f64], ctx: &SeedContext) -> [f64; 2] {
        let mut stream = ctx.stream(StreamPurpose::Transition);
        let w = self.visitation_weights();
        let s = usize::from(stream.uniform() >= w[0]);
        let next = usize::from(stream.uniform() >= self.transition[s][0]);
        let mut out = [0.0; 2];
        out[s] = self.rewards[s] + self.discount * theta[next] - theta[s];
        out
    }

    /// Progress measure for the unit test: ½‖θ − V*‖².
    pub fn loss(&self, theta: &[f64]) -> f64 {
        let v = self.fixed_point();
        0.5 * ((theta[0] - v[0]).powi(2) + (theta[1] - v[1]).powi(2))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Autoencoder1D {
    pub x: f64,
    #[serde(default)]
    pub noise: NoiseSpec,
}

impl Default for Autoencoder1D {
    fn default() -> Self {
        Autoencoder1D {
            x: 1.0,
            noise: NoiseSpec::none(),
        }
    }
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Autoencoder1D {
    pub const DEFAULT_START: [f64; 2] = [0.1, 0.1];

    /// (x + θ₂ σ(x θ₁))².
    pub fn ae_loss(&self, theta: &[f64]) -> f64 {
        let r = self.x + theta[1] * logistic(self.x * theta[0]);
        r * r
    }

    pub fn ae_grad(&self, theta: &[f64]) -> [f64; 2] {
        let s = logistic(self.x * theta[0]);
        let r = self.x + theta[1] * s;
        [2.0 * r * theta[1] * s * (1.0 - s) * self.x, 2.0 * r * s]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_point_zeroes_the_field() {
        let m = TwoStateTD::default();
        let v = m.fixed_point();
        let f = m.td_expected_field(&v);
        assert!(f[0].abs() < 1e-12 && f[1].abs() < 1e-12);
        // Direct elimination: (1-γp00)v0 - γp01 v1 = 0, -γp10 v0 + (1-γp11) v1 = 1.
        let (g, t) = (m.discount, m.transition);
        let det = (1.0 - g * t[0][0]) * (1.0 - g * t[1][1]) - g * g * t[0][1] * t[1][0];
        let v0 = g * t[0][1] / det;
        let v1 = (1.0 - g * t[0][0]) / det;
        assert!((v[0] - v0).abs() < 1e-14 && (v[1] - v1).abs() < 1e-14);
    }

    #[test]
    fn deterministic_chain_sample_equals_expectation() {
        let m = TwoStateTD {
            transition: [[0.0, 1.0], [1.0, 0.0]],
            ..TwoStateTD::default()
        };
        let theta = [0.3, -0.7];
        let f = m.td_expected_field(&theta);
        for step in 0..100 {
            let u = m.td_sample_update(&theta, &SeedContext::new(1, 2, 0).at_step(step));
            let s = if u[0] != 0.0 { 0 } else { 1 };
            assert_eq!(u[s], f[s]);
            assert_eq!(u[1 - s], 0.0);
        }
    }

    #[test]
    fn stationary_distribution_is_invariant() {
        let m = TwoStateTD::default();
        let d = m.stationary();
        let t = m.transition;
        assert!((d[0] * t[0][0] + d[1] * t[1][0] - d[0]).abs() < 1e-15);
        assert!((d[0] + d[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_models_are_rejected() {
        let mut m = TwoStateTD::default();
        m.transition[0] = [0.5, 0.6];
        assert!(m.validate().is_err());
        let m = TwoStateTD {
            discount: 1.0,
            ..TwoStateTD::default()
        };
        assert!(m.validate().is_err());
        assert!(TwoStateTD::default().validate().is_ok());
    }

    #[test]
    fn autoencoder_at_origin() {
        let a = Autoencoder1D::default();
        assert_eq!(a.ae_loss(&[0.0, 0.0]), 1.0);
        assert_eq!(a.ae_grad(&[0.0, 0.0]), [0.0, 1.0]);
    }

    #[test]
    fn logistic_is_stable_for_large_arguments() {
        assert_eq!(logistic(1000.0), 1.0);
        assert_eq!(logistic(-1000.0), 0.0);
        assert_eq!(logistic(0.0), 0.5);
    }
}
