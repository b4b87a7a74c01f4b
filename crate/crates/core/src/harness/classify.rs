//! Six-way qualitative verdict over the repeats of one (test, setup) pairing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::reference::median;
use crate::harness::runner::{RunRecord, REPEATS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorClass {
    /// Divergence or numerical instability in every run.
    Red,
    /// Instability in some runs.
    Violet,
    /// Median normalized loss below 0.1.
    Orange,
    /// At least a quarter of the runs below 0.1.
    Yellow,
    Green,
    /// Median normalized loss above 2.
    Blue,
}

impl ColorClass {
    pub const ALL: [ColorClass; 6] = [
        ColorClass::Red,
        ColorClass::Violet,
        ColorClass::Orange,
        ColorClass::Yellow,
        ColorClass::Green,
        ColorClass::Blue,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ColorClass::Red => "red",
            ColorClass::Violet => "violet",
            ColorClass::Orange => "orange",
            ColorClass::Yellow => "yellow",
            ColorClass::Green => "green",
            ColorClass::Blue => "blue",
        }
    }

    pub fn rgb(self) -> [u8; 3] {
        match self {
            ColorClass::Red => [0xd6, 0x27, 0x28],
            ColorClass::Violet => [0x94, 0x67, 0xbd],
            ColorClass::Orange => [0xff, 0x7f, 0x0e],
            ColorClass::Yellow => [0xe6, 0xd9, 0x15],
            ColorClass::Green => [0x2c, 0xa0, 0x2c],
            ColorClass::Blue => [0x1f, 0x77, 0xb4],
        }
    }
}

pub const INSUFFICIENT: f64 = 0.1;
pub const EXCELLENT: f64 = 2.0;

/// Classify from per-run scores; `None` marks an unstable run.
pub fn classify_scores(scores: &[Option<f64>]) -> Result<ColorClass> {
    if scores.len() < REPEATS as usize {
        return Err(Error::TooFewRecords {
            needed: REPEATS as usize,
            got: scores.len(),
        });
    }
    let stable: Vec<f64> = scores.iter().flatten().copied().collect();
    if stable.is_empty() {
        return Ok(ColorClass::Red);
    }
    if stable.len() < scores.len() {
        return Ok(ColorClass::Violet);
    }
    let m = median(&stable);
    if m < INSUFFICIENT {
        return Ok(ColorClass::Orange);
    }
    if m > EXCELLENT {
        return Ok(ColorClass::Blue);
    }
    let low = stable.iter().filter(|&&s| s < INSUFFICIENT).count();
    if 4 * low >= stable.len() {
        Ok(ColorClass::Yellow)
    } else {
        Ok(ColorClass::Green)
    }
}

pub fn classify(records: &[RunRecord]) -> Result<ColorClass> {
    if let Some(w) = records
        .windows(2)
        .find(|w| w[0].test_id != w[1].test_id || w[0].setup_id != w[1].setup_id)
    {
        return Err(Error::Config(format!(
            "records mix pairings ({}, {}) and ({}, {})",
            w[0].test_id, w[0].setup_id, w[1].test_id, w[1].setup_id
        )));
    }
    let scores = records
        .iter()
        .map(|r| {
            if r.outcome.unstable {
                Ok(None)
            } else {
                r.normalized.map(Some).ok_or_else(|| {
                    Error::Config(format!(
                        "record ({}, {}, {}) has no normalized score",
                        r.test_id, r.setup_id, r.repeat_index
                    ))
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    classify_scores(&scores)
}
