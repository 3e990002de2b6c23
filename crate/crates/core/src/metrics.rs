//! Binary confusion counts and precision/recall/F1 with sarcastic as the
//! positive class. Any metric whose denominator is zero is reported as 0.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn record(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let mut cm = ConfusionMatrix::default();
        for (predicted, actual) in pairs {
            cm.record(predicted, actual);
        }
        cm
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean, 0 when both inputs are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn prf1(cm: &ConfusionMatrix) -> ClassMetrics {
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    ClassMetrics {
        precision,
        recall,
        f1: f1_score(precision, recall),
        accuracy: ratio(cm.tp + cm.tn, cm.total()),
    }
}

#[derive(Debug, Error)]
#[error("macro average needs exactly 5 per-star entries, got {0}")]
pub struct ArityError(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroAverage {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Unweighted mean over the five star categories. No rounding.
///
/// The running-mean form returns five identical values unchanged.
pub fn macro_average(per_star: &[ClassMetrics]) -> Result<MacroAverage, ArityError> {
    if per_star.len() != 5 {
        return Err(ArityError(per_star.len()));
    }
    let mean = |f: fn(&ClassMetrics) -> f64| {
        per_star
            .iter()
            .map(f)
            .enumerate()
            .fold(0.0, |m, (k, v)| m + (v - m) / (k + 1) as f64)
    };
    Ok(MacroAverage {
        precision: mean(|m| m.precision),
        recall: mean(|m| m.recall),
        f1: mean(|m| m.f1),
    })
}

/// Presentation rounding to two decimals.
pub fn round2(value: f64) -> f64 {
    (value * 100.0).round() / 100.0
}
