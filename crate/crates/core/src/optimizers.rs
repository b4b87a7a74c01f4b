//! Optimizer families behind one step interface, and their hyperparameter grids.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonf64;

pub const STATE_FORMAT_VERSION: u32 = 1;

/// Regularizer for adagrad and rmsprop unless given as `epsilon`.
pub const DEFAULT_EPSILON: f64 = 1e-10;
pub const RPROP_STEP_MIN: f64 = 1e-12;
pub const RPROP_STEP_MAX: f64 = 50.0;
pub const RPROP_GROW: f64 = 1.2;
pub const RPROP_SHRINK: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Sgd,
    SgdAnneal,
    Momentum,
    Nesterov,
    Averaging,
    Adagrad,
    Adadelta,
    Idbd,
    Rprop,
    Rmsprop,
    Cg,
}

impl Family {
    pub const ALL: [Family; 11] = [
        Family::Sgd,
        Family::SgdAnneal,
        Family::Momentum,
        Family::Nesterov,
        Family::Averaging,
        Family::Adagrad,
        Family::Adadelta,
        Family::Idbd,
        Family::Rprop,
        Family::Rmsprop,
        Family::Cg,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Family::Sgd => "sgd",
            Family::SgdAnneal => "sgd-anneal",
            Family::Momentum => "momentum",
            Family::Nesterov => "nesterov",
            Family::Averaging => "averaging",
            Family::Adagrad => "adagrad",
            Family::Adadelta => "adadelta",
            Family::Idbd => "idbd",
            Family::Rprop => "rprop",
            Family::Rmsprop => "rmsprop",
            Family::Cg => "cg",
        }
    }

    /// Required hyperparameter names.
    pub fn hyper_names(self) -> &'static [&'static str] {
        match self {
            Family::Sgd | Family::Adagrad | Family::Rprop | Family::Cg => &["learningRate"],
            Family::SgdAnneal => &["learningRate", "learningRateDecay"],
            Family::Momentum | Family::Nesterov => &["learningRate", "momentum"],
            Family::Averaging => &["learningRate", "decay", "exponent"],
            Family::Adadelta => &["decay", "regularizer"],
            Family::Idbd => &["learningRate", "metaRate"],
            Family::Rmsprop => &["learningRate", "maxLearningRate", "decay"],
        }
    }

    /// Names a setup may add on top of the required ones.
    pub fn optional_hyper_names(self) -> &'static [&'static str] {
        match self {
            Family::Adagrad | Family::Rmsprop => &["epsilon"],
            _ => &[],
        }
    }

    pub fn is_adaptive(self) -> bool {
        matches!(
            self,
            Family::Adagrad | Family::Adadelta | Family::Rprop | Family::Rmsprop
        )
    }
}

/// Every hyperparameter name used by any family, sorted.
pub fn all_hyper_names() -> Vec<&'static str> {
    let mut names: Vec<&'static str> = Family::ALL
        .iter()
        .flat_map(|f| f.hyper_names().iter().chain(f.optional_hyper_names()).copied())
        .collect();
    names.sort_unstable();
    names.dedup();
    names
}

/// An optimizer family with one fully bound hyperparameter assignment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSetup {
    pub family: Family,
    pub hyper: BTreeMap<String, f64>,
}

impl AlgorithmSetup {
    pub fn new(family: Family, hyper: &[(&str, f64)]) -> Result<Self> {
        let setup = AlgorithmSetup {
            family,
            hyper: hyper.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        };
        setup.validate()?;
        Ok(setup)
    }

    pub fn get(&self, name: &str) -> f64 {
        self.hyper[name]
    }

    pub fn validate(&self) -> Result<()> {
        let family = self.family;
        for name in self.hyper.keys() {
            if !family.hyper_names().contains(&name.as_str()) && !family.optional_hyper_names().contains(&name.as_str())
            {
                return Err(Error::UnknownHyper {
                    family: family.tag().into(),
                    name: name.clone(),
                });
            }
        }
        for name in family.hyper_names() {
            if !self.hyper.contains_key(*name) {
                return Err(Error::Config(format!(
                    "{} setup is missing hyperparameter `{name}`",
                    family.tag()
                )));
            }
        }
        for (name, &v) in &self.hyper {
            let ok = v.is_finite()
                && match name.as_str() {
                    "momentum" => (0.0..1.0).contains(&v),
                    "decay" => v > 0.0 && v <= 1.0,
                    "exponent" => v > 0.0,
                    "learningRateDecay" | "metaRate" | "regularizer" | "epsilon" => v >= 0.0,
                    _ => v > 0.0,
                };
            if !ok {
                return Err(Error::Config(format!(
                    "{} hyperparameter `{name}` = {v} is out of range",
                    family.tag()
                )));
            }
        }
        if family == Family::Rmsprop && self.get("maxLearningRate") < self.get("learningRate") {
            return Err(Error::Config("rmsprop maxLearningRate below learningRate".into()));
        }
        Ok(())
    }

    /// Short human-readable label, e.g. `momentum(learningRate=0.1,momentum=0.9)`.
    pub fn label(&self) -> String {
        let inner: Vec<String> = self.hyper.iter().map(|(k, v)| format!("{k}={v:e}")).collect();
        format!("{}({})", self.family.tag(), inner.join(","))
    }
}

/// Family-specific accumulators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Memory {
    Sgd,
    SgdAnneal,
    Momentum {
        #[serde(with = "jsonf64::vec")]
        velocity: Vec<f64>,
    },
    Nesterov {
        #[serde(with = "jsonf64::vec")]
        velocity: Vec<f64>,
    },
    Averaging {
        #[serde(with = "jsonf64::vec")]
        average: Vec<f64>,
    },
    Adagrad {
        #[serde(with = "jsonf64::vec")]
        accumulator: Vec<f64>,
    },
    Adadelta {
        #[serde(with = "jsonf64::vec")]
        mean_sq_grad: Vec<f64>,
        #[serde(with = "jsonf64::vec")]
        mean_sq_delta: Vec<f64>,
    },
    Idbd {
        #[serde(with = "jsonf64::vec")]
        log_step: Vec<f64>,
        #[serde(with = "jsonf64::vec")]
        trace: Vec<f64>,
    },
    Rprop {
        #[serde(with = "jsonf64::vec")]
        step_size: Vec<f64>,
        #[serde(with = "jsonf64::vec")]
        prev_grad: Vec<f64>,
    },
    Rmsprop {
        #[serde(with = "jsonf64::vec")]
        mean_sq_grad: Vec<f64>,
    },
    Cg {
        #[serde(with = "jsonf64::vec")]
        prev_grad: Vec<f64>,
        #[serde(with = "jsonf64::vec")]
        direction: Vec<f64>,
    },
}

impl Memory {
    fn arrays(&self) -> Vec<&[f64]> {
        match self {
            Memory::Sgd | Memory::SgdAnneal => vec![],
            Memory::Momentum { velocity } | Memory::Nesterov { velocity } => vec![velocity],
            Memory::Averaging { average } => vec![average],
            Memory::Adagrad { accumulator } => vec![accumulator],
            Memory::Adadelta {
                mean_sq_grad,
                mean_sq_delta,
            } => vec![mean_sq_grad, mean_sq_delta],
            Memory::Idbd { log_step, trace } => vec![log_step, trace],
            Memory::Rprop { step_size, prev_grad } => vec![step_size, prev_grad],
            Memory::Rmsprop { mean_sq_grad } => vec![mean_sq_grad],
            Memory::Cg { prev_grad, direction } => vec![prev_grad, direction],
        }
    }
}

/// Snapshot of an optimizer's internal state; restorable bit-exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub format_version: u32,
    pub step: u64,
    pub memory: Memory,
}

impl OptimizerState {
    pub fn is_finite(&self) -> bool {
        self.memory.arrays().iter().all(|a| a.iter().all(|x| x.is_finite()))
    }
}

/// Resolved update rule.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Rule {
    Sgd { lr: f64 },
    Anneal { lr: f64, decay: f64 },
    Momentum { lr: f64, mu: f64, nesterov: bool },
    Averaging { lr: f64, decay: f64, exponent: f64 },
    Adagrad { lr: f64, eps: f64 },
    Adadelta { rho: f64, reg: f64 },
    Idbd { meta: f64 },
    Rprop,
    Rmsprop { lr: f64, lr_max: f64, rho: f64, eps: f64 },
    Cg { lr: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Optimizer {
    setup: AlgorithmSetup,
    rule: Rule,
    state: OptimizerState,
}

impl Optimizer {
    /// Fresh optimizer with neutral accumulators for parameters like `theta0`.
    pub fn new(setup: &AlgorithmSetup, theta0: &[f64]) -> Result<Self> {
        setup.validate()?;
        if theta0.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("initial parameters must be finite".into()));
        }
        let d = theta0.len();
        let h = |n: &str| setup.get(n);
        let eps = setup.hyper.get("epsilon").copied().unwrap_or(DEFAULT_EPSILON);
        let (rule, memory) = match setup.family {
            Family::Sgd => (Rule::Sgd { lr: h("learningRate") }, Memory::Sgd),
            Family::SgdAnneal => (
                Rule::Anneal {
                    lr: h("learningRate"),
                    decay: h("learningRateDecay"),
                },
                Memory::SgdAnneal,
            ),
            Family::Momentum | Family::Nesterov => {
                let velocity = vec![0.0; d];
                let nesterov = setup.family == Family::Nesterov;
                (
                    Rule::Momentum {
                        lr: h("learningRate"),
                        mu: h("momentum"),
                        nesterov,
                    },
                    if nesterov {
                        Memory::Nesterov { velocity }
                    } else {
                        Memory::Momentum { velocity }
                    },
                )
            }
            Family::Averaging => (
                Rule::Averaging {
                    lr: h("learningRate"),
                    decay: h("decay"),
                    exponent: h("exponent"),
                },
                Memory::Averaging {
                    average: theta0.to_vec(),
                },
            ),
            Family::Adagrad => (
                Rule::Adagrad {
                    lr: h("learningRate"),
                    eps,
                },
                Memory::Adagrad {
                    accumulator: vec![0.0; d],
                },
            ),
            Family::Adadelta => (
                Rule::Adadelta {
                    rho: 1.0 - h("decay"),
                    reg: h("regularizer"),
                },
                Memory::Adadelta {
                    mean_sq_grad: vec![0.0; d],
                    mean_sq_delta: vec![0.0; d],
                },
            ),
            Family::Idbd => (
                Rule::Idbd { meta: h("metaRate") },
                Memory::Idbd {
                    log_step: vec![h("learningRate").ln(); d],
                    trace: vec![0.0; d],
                },
            ),
            Family::Rprop => (
                Rule::Rprop,
                Memory::Rprop {
                    step_size: vec![h("learningRate"); d],
                    prev_grad: vec![0.0; d],
                },
            ),
            Family::Rmsprop => (
                Rule::Rmsprop {
                    lr: h("learningRate"),
                    lr_max: h("maxLearningRate"),
                    rho: 1.0 - h("decay"),
                    eps,
                },
                Memory::Rmsprop {
                    mean_sq_grad: vec![0.0; d],
                },
            ),
            Family::Cg => (
                Rule::Cg { lr: h("learningRate") },
                Memory::Cg {
                    prev_grad: vec![0.0; d],
                    direction: vec![0.0; d],
                },
            ),
        };
        Ok(Optimizer {
            setup: setup.clone(),
            rule,
            state: OptimizerState {
                format_version: STATE_FORMAT_VERSION,
                step: 0,
                memory,
            },
        })
    }

    /// Restore an optimizer from a snapshot taken with [`Optimizer::state`].
    pub fn restore(setup: &AlgorithmSetup, state: OptimizerState) -> Result<Self> {
        if state.format_version != STATE_FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found: state.format_version,
                expected: STATE_FORMAT_VERSION,
            });
        }
        let dim = state.memory.arrays().first().map_or(0, |a| a.len());
        let mut opt = Optimizer::new(setup, &vec![0.0; dim])?;
        if std::mem::discriminant(&opt.state.memory) != std::mem::discriminant(&state.memory) {
            return Err(Error::Config(format!(
                "state snapshot does not belong to family {}",
                setup.family.tag()
            )));
        }
        opt.state = state;
        Ok(opt)
    }

    pub fn setup(&self) -> &AlgorithmSetup {
        &self.setup
    }

    pub fn state(&self) -> &OptimizerState {
        &self.state
    }

    /// Where the next gradient should be queried (Nesterov looks ahead by μv).
    pub fn query_point(&self, theta: &[f64]) -> Vec<f64> {
        match (&self.rule, &self.state.memory) {
            (Rule::Momentum { mu, nesterov: true, .. }, Memory::Nesterov { velocity }) => {
                theta.iter().zip(velocity).map(|(t, v)| t + mu * v).collect()
            }
            _ => theta.to_vec(),
        }
    }

    /// Parameters the loss is evaluated at (the running average for averaging SGD).
    pub fn eval_point(&self, theta: &[f64]) -> Vec<f64> {
        match &self.state.memory {
            Memory::Averaging { average } => average.clone(),
            _ => theta.to_vec(),
        }
    }

    /// Apply one update in place. Returns false if θ or the state became non-finite.
    pub fn step(&mut self, theta: &mut [f64], grad: &[f64]) -> bool {
        assert_eq!(theta.len(), grad.len(), "gradient has the wrong dimension");
        let t = self.state.step;
        let d = theta.len();
        match (self.rule, &mut self.state.memory) {
            (Rule::Sgd { lr }, _) => {
                for (x, g) in theta.iter_mut().zip(grad) {
                    *x -= lr * g;
                }
            }
            (Rule::Anneal { lr, decay }, _) => {
                let eta = lr / (1.0 + decay * t as f64);
                for (x, g) in theta.iter_mut().zip(grad) {
                    *x -= eta * g;
                }
            }
            (Rule::Momentum { lr, mu, .. }, Memory::Momentum { velocity } | Memory::Nesterov { velocity }) => {
                for i in 0..d {
                    velocity[i] = mu * velocity[i] - lr * grad[i];
                    theta[i] += velocity[i];
                }
            }
            (Rule::Averaging { lr, decay, exponent }, Memory::Averaging { average }) => {
                let k = (t + 1) as f64;
                let eta = lr * k.powf(-exponent);
                let w = decay.max(1.0 / k);
                for i in 0..d {
                    theta[i] -= eta * grad[i];
                    average[i] = (1.0 - w) * average[i] + w * theta[i];
                }
            }
            (Rule::Adagrad { lr, eps }, Memory::Adagrad { accumulator }) => {
                for i in 0..d {
                    accumulator[i] += grad[i] * grad[i];
                    theta[i] -= lr * grad[i] / (accumulator[i].sqrt() + eps);
                }
            }
            (
                Rule::Adadelta { rho, reg },
                Memory::Adadelta {
                    mean_sq_grad,
                    mean_sq_delta,
                },
            ) => {
                for i in 0..d {
                    let g = grad[i];
                    mean_sq_grad[i] = rho * mean_sq_grad[i] + (1.0 - rho) * g * g;
                    let delta = -((mean_sq_delta[i] + reg).sqrt() / (mean_sq_grad[i] + reg).sqrt()) * g;
                    mean_sq_delta[i] = rho * mean_sq_delta[i] + (1.0 - rho) * delta * delta;
                    theta[i] += delta;
                }
            }
            (Rule::Idbd { meta }, Memory::Idbd { log_step, trace }) => {
                for i in 0..d {
                    let g = grad[i];
                    // Sutton's β += θ δ x h with δx = -g.
                    log_step[i] -= meta * g * trace[i];
                    let eta = log_step[i].exp();
                    theta[i] -= eta * g;
                    trace[i] = trace[i] * (1.0 - eta).max(0.0) - eta * g;
                }
            }
            (Rule::Rprop, Memory::Rprop { step_size, prev_grad }) => {
                for i in 0..d {
                    let mut g = grad[i];
                    let agreement = g * prev_grad[i];
                    if agreement > 0.0 {
                        step_size[i] = (step_size[i] * RPROP_GROW).min(RPROP_STEP_MAX);
                    } else if agreement < 0.0 {
                        step_size[i] = (step_size[i] * RPROP_SHRINK).max(RPROP_STEP_MIN);
                        g = 0.0;
                    }
                    if g > 0.0 {
                        theta[i] -= step_size[i];
                    } else if g < 0.0 {
                        theta[i] += step_size[i];
                    }
                    prev_grad[i] = g;
                }
            }
            (Rule::Rmsprop { lr, lr_max, rho, eps }, Memory::Rmsprop { mean_sq_grad }) => {
                for i in 0..d {
                    let g = grad[i];
                    mean_sq_grad[i] = rho * mean_sq_grad[i] + (1.0 - rho) * g * g;
                    let raw = lr / (mean_sq_grad[i] + eps).sqrt();
                    theta[i] -= raw.clamp(lr, lr_max) * g;
                }
            }
            (Rule::Cg { lr }, Memory::Cg { prev_grad, direction }) => {
                let restart = t.is_multiple_of(d.max(1) as u64);
                let beta = if restart {
                    0.0
                } else {
                    let num: f64 = (0..d).map(|i| grad[i] * (grad[i] - prev_grad[i])).sum();
                    let den: f64 = prev_grad.iter().map(|g| g * g).sum();
                    if den > 0.0 {
                        (num / den).max(0.0)
                    } else {
                        0.0
                    }
                };
                for i in 0..d {
                    direction[i] = -grad[i] + beta * direction[i];
                    theta[i] += lr * direction[i];
                    prev_grad[i] = grad[i];
                }
            }
            (rule, memory) => unreachable!("rule {rule:?} paired with memory {memory:?}"),
        }
        self.state.step += 1;
        theta.iter().all(|x| x.is_finite()) && self.state.is_finite()
    }
}

/// Values `10^lo, …, 10^hi`, parsed from decimal literals so that e.g. 1e-4 is
/// bit-identical to the literal.
pub fn decades(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|e| format!("1e{e}").parse().unwrap()).collect()
}

/// One value per order of magnitude for η₀: 10⁻⁶ … 10.
pub fn learning_rates() -> Vec<f64> {
    decades(-6, 1)
}

fn cartesian(axes: &[(&str, Vec<f64>)]) -> Vec<Vec<(String, f64)>> {
    let mut out: Vec<Vec<(String, f64)>> = vec![vec![]];
    for (name, values) in axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |&v| {
                    let mut row = prefix.clone();
                    row.push((name.to_string(), v));
                    row
                })
            })
            .collect();
    }
    out
}

/// Value lists per hyperparameter for the default grid of `family`.
pub fn grid_axes(family: Family) -> Vec<(&'static str, Vec<f64>)> {
    let lr = ("learningRate", learning_rates());
    match family {
        Family::Sgd | Family::Adagrad | Family::Rprop | Family::Cg => vec![lr],
        Family::SgdAnneal => vec![lr, ("learningRateDecay", decades(-2, 0))],
        Family::Momentum | Family::Nesterov => vec![lr, ("momentum", vec![0.1, 0.9, 0.99, 0.999])],
        Family::Averaging => {
            let mut decay = decades(-4, -1);
            decay.push(0.5);
            vec![lr, ("decay", decay), ("exponent", vec![0.5, 0.75, 1.0])]
        }
        Family::Adadelta => {
            let mut decay = decades(-4, -1);
            decay.push(0.5);
            vec![("decay", decay), ("regularizer", decades(-6, -2))]
        }
        Family::Idbd => vec![lr, ("metaRate", decades(-3, -1))],
        Family::Rmsprop => vec![lr, ("maxLearningRate", decades(1, 3)), ("decay", decades(-2, -1))],
    }
}

/// Expand explicit value lists into setups.
pub fn expand_grid(family: Family, axes: &[(&str, Vec<f64>)]) -> Result<Vec<AlgorithmSetup>> {
    cartesian(axes)
        .into_iter()
        .map(|row| {
            let setup = AlgorithmSetup {
                family,
                hyper: row.into_iter().collect(),
            };
            setup.validate().map(|_| setup)
        })
        .collect()
}

/// Default grid for one family.
pub fn grid(family: Family) -> Vec<AlgorithmSetup> {
    expand_grid(family, &grid_axes(family)).expect("default grids are valid")
}

/// Default grids of all families, in family order.
pub fn default_setups() -> Vec<AlgorithmSetup> {
    Family::ALL.iter().flat_map(|&f| grid(f)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(family: Family, hyper: &[(&str, f64)]) -> AlgorithmSetup {
        AlgorithmSetup::new(family, hyper).unwrap()
    }

    #[test]
    fn sgd_update() {
        let s = setup(Family::Sgd, &[("learningRate", 0.1)]);
        let mut opt = Optimizer::new(&s, &[1.0]).unwrap();
        assert_eq!(opt.state().memory, Memory::Sgd);
        let mut theta = [1.0];
        assert!(opt.step(&mut theta, &[4.0]));
        assert!((theta[0] - 0.6).abs() < 1e-15);
        assert_eq!(opt.state().step, 1);
    }

    #[test]
    fn neutral_initial_states() {
        let m = Optimizer::new(
            &setup(Family::Momentum, &[("learningRate", 0.1), ("momentum", 0.9)]),
            &[1.0, 2.0],
        )
        .unwrap();
        assert_eq!(
            m.state().memory,
            Memory::Momentum {
                velocity: vec![0.0, 0.0]
            }
        );
        let r = Optimizer::new(&setup(Family::Rprop, &[("learningRate", 0.01)]), &[0.0]).unwrap();
        assert_eq!(
            r.state().memory,
            Memory::Rprop {
                step_size: vec![0.01],
                prev_grad: vec![0.0]
            }
        );
        let i = Optimizer::new(
            &setup(Family::Idbd, &[("learningRate", 0.01), ("metaRate", 0.1)]),
            &[0.0],
        )
        .unwrap();
        match &i.state().memory {
            Memory::Idbd { log_step, trace } => {
                assert_eq!(log_step[0], 0.01f64.ln());
                assert_eq!(trace[0], 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn adadelta_first_step_size() {
        // Hand-evaluated: |Δ₁| = sqrt(ρ / ((1-γ) g² + ρ)) |g|.
        let (decay, reg, g) = (0.1, 1e-4, 2.0);
        let s = setup(Family::Adadelta, &[("decay", decay), ("regularizer", reg)]);
        let mut opt = Optimizer::new(&s, &[0.0]).unwrap();
        let mut theta = [0.0];
        opt.step(&mut theta, &[g]);
        let expected = -(reg / (g * g * decay + reg)).sqrt() * g;
        assert!((theta[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn rprop_grows_step_on_agreeing_signs() {
        let s = setup(Family::Rprop, &[("learningRate", 0.1)]);
        let mut opt = Optimizer::new(&s, &[0.0]).unwrap();
        let mut theta = [0.0];
        opt.step(&mut theta, &[1.0]);
        opt.step(&mut theta, &[2.0]);
        match &opt.state().memory {
            Memory::Rprop { step_size, .. } => assert!((step_size[0] - 0.12).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
        assert!((theta[0] + 0.22).abs() < 1e-15);
        // Sign flip: shrink and hold.
        opt.step(&mut theta, &[-1.0]);
        match &opt.state().memory {
            Memory::Rprop { step_size, prev_grad } => {
                assert!((step_size[0] - 0.06).abs() < 1e-15);
                assert_eq!(prev_grad[0], 0.0);
            }
            other => panic!("{other:?}"),
        }
        assert!((theta[0] + 0.22).abs() < 1e-15);
    }

    #[test]
    fn adagrad_matches_scalar_reference_simulation() {
        let eps = 1e-8;
        let s = setup(Family::Adagrad, &[("learningRate", 1.0), ("epsilon", eps)]);
        let mut opt = Optimizer::new(&s, &[0.0]).unwrap();
        let mut theta = [0.0];
        let (mut x, mut acc) = (0.0f64, 0.0f64);
        for t in 1..=100 {
            opt.step(&mut theta, &[1.0]);
            acc += 1.0;
            let dec = 1.0 / (acc.sqrt() + eps);
            x -= dec;
            assert!((theta[0] - x).abs() <= 1e-12 * x.abs());
            assert!((dec - 1.0 / (t as f64).sqrt()).abs() < 1e-7);
        }
    }

    #[test]
    fn nesterov_with_zero_momentum_is_sgd() {
        let lr = 0.3;
        let grad = |x: f64| 2.0 * x - 1.0;
        let mut a = [0.9];
        let mut b = [0.9];
        let mut nest =
            Optimizer::new(&setup(Family::Nesterov, &[("learningRate", lr), ("momentum", 0.0)]), &a).unwrap();
        let mut sgd = Optimizer::new(&setup(Family::Sgd, &[("learningRate", lr)]), &b).unwrap();
        for _ in 0..50 {
            let q = nest.query_point(&a);
            nest.step(&mut a, &[grad(q[0])]);
            let gb = grad(b[0]);
            sgd.step(&mut b, &[gb]);
            assert_eq!(a[0].to_bits(), b[0].to_bits());
        }
    }

    #[test]
    fn averaging_evaluates_running_average() {
        let s = setup(
            Family::Averaging,
            &[("learningRate", 0.5), ("decay", 0.1), ("exponent", 1.0)],
        );
        let mut opt = Optimizer::new(&s, &[1.0]).unwrap();
        assert_eq!(opt.eval_point(&[1.0]), vec![1.0]);
        let mut theta = [1.0];
        opt.step(&mut theta, &[1.0]);
        // t = 1: η = 0.5, w = 1
        assert_eq!(theta[0], 0.5);
        assert_eq!(opt.eval_point(&theta), vec![0.5]);
        opt.step(&mut theta, &[1.0]);
        // t = 2: η = 0.25, w = 0.5
        assert_eq!(theta[0], 0.25);
        assert_eq!(opt.eval_point(&theta), vec![0.375]);
    }

    #[test]
    fn cg_first_direction_is_steepest_descent() {
        let s = setup(Family::Cg, &[("learningRate", 0.1)]);
        let mut opt = Optimizer::new(&s, &[1.0, 1.0]).unwrap();
        let mut theta = [1.0, 1.0];
        opt.step(&mut theta, &[2.0, -1.0]);
        assert_eq!(theta, [0.8, 1.1]);
    }

    #[test]
    fn rmsprop_step_is_clamped() {
        let s = setup(
            Family::Rmsprop,
            &[("learningRate", 0.5), ("maxLearningRate", 10.0), ("decay", 0.1)],
        );
        let mut opt = Optimizer::new(&s, &[0.0]).unwrap();
        let mut theta = [0.0];
        // E[g²] = 0.1 · 1e-6 → raw rate ≈ 1581, clamped to 10.
        opt.step(&mut theta, &[1e-3]);
        assert!((theta[0] + 10.0 * 1e-3).abs() < 1e-15);
        // Large gradient → raw rate tiny, clamped up to 0.5.
        let mut opt = Optimizer::new(&s, &[0.0]).unwrap();
        let mut theta = [0.0];
        opt.step(&mut theta, &[1e3]);
        assert!((theta[0] + 0.5 * 1e3).abs() < 1e-9);
    }

    #[test]
    fn unknown_and_missing_hyperparameters_are_rejected() {
        assert!(matches!(
            AlgorithmSetup::new(Family::Sgd, &[("learningRate", 0.1), ("momentum", 0.9)]),
            Err(Error::UnknownHyper { .. })
        ));
        assert!(AlgorithmSetup::new(Family::Momentum, &[("learningRate", 0.1)]).is_err());
        assert!(AlgorithmSetup::new(Family::Sgd, &[("learningRate", -0.1)]).is_err());
    }

    #[test]
    fn non_finite_updates_are_flagged() {
        let s = setup(Family::Sgd, &[("learningRate", 1.0)]);
        let mut opt = Optimizer::new(&s, &[0.0]).unwrap();
        let mut theta = [0.0];
        assert!(!opt.step(&mut theta, &[f64::INFINITY]));
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(grid(Family::Sgd).len(), 8);
        assert_eq!(grid(Family::Averaging).len(), 8 * 5 * 3);
        assert_eq!(grid(Family::Adadelta).len(), 25);
        let total = default_setups().len();
        assert!((297..=402).contains(&total), "{total}");
        assert!(default_setups().iter().all(|s| s.validate().is_ok()));
        assert_eq!(learning_rates()[2], 1e-4);
    }

    #[test]
    fn state_snapshot_restores() {
        let s = setup(Family::Adadelta, &[("decay", 0.1), ("regularizer", 1e-6)]);
        let mut opt = Optimizer::new(&s, &[0.3, -0.2]).unwrap();
        let mut theta = [0.3, -0.2];
        opt.step(&mut theta, &[0.7, -1.3]);
        let text = serde_json::to_string(opt.state()).unwrap();
        let state: OptimizerState = serde_json::from_str(&text).unwrap();
        let restored = Optimizer::restore(&s, state).unwrap();
        assert_eq!(&restored, &opt);
        let wrong = setup(Family::Sgd, &[("learningRate", 0.1)]);
        assert!(Optimizer::restore(&wrong, opt.state().clone()).is_err());
    }
}
