//! Confusion counts, empirical error rates, and the Neyman-Pearson measure.
//!
//! The selection objective throughout the crate is
//!
//! ```text
//! e_hat = (1/alpha) * max(P_F - alpha, 0) + P_M
//! ```
//!
//! where `P_F` is the empirical false positive rate, `P_M` the empirical
//! false negative rate, and `alpha` the target cap on `P_F`. Below the cap
//! the measure equals the miss rate; above it, every unit of excess false
//! positive rate costs `1/alpha`.

use crate::audio_ingest::Label;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Standard binary confusion counts with +1 as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> u64 {
        self.fp + self.tn
    }
}

/// Empirical rates plus the scalar Neyman-Pearson measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NpScore {
    /// Empirical false positive rate fp / (fp + tn).
    pub p_f: f64,
    /// Empirical false negative rate fn / (tp + fn).
    pub p_m: f64,
    /// Target cap on the false positive rate.
    pub alpha: f64,
    /// (1/alpha) * max(p_f - alpha, 0) + p_m.
    pub e_hat: f64,
}

/// Counts agreement between labels and predictions.
pub fn confusion(labels: &[Label], predictions: &[Label]) -> Result<ConfusionCounts> {
    if labels.is_empty() {
        return Err(Error::EmptyInput {
            context: "confusion",
        });
    }
    if labels.len() != predictions.len() {
        return Err(Error::LengthMismatch {
            context: "confusion",
            left: labels.len(),
            right: predictions.len(),
        });
    }
    let mut c = ConfusionCounts {
        tp: 0,
        fp: 0,
        tn: 0,
        fn_: 0,
    };
    for (&y, &p) in labels.iter().zip(predictions) {
        match (y, p) {
            (Label::Positive, Label::Positive) => c.tp += 1,
            (Label::Positive, Label::Negative) => c.fn_ += 1,
            (Label::Negative, Label::Positive) => c.fp += 1,
            (Label::Negative, Label::Negative) => c.tn += 1,
        }
    }
    Ok(c)
}

/// Evaluates the Neyman-Pearson measure at cap `alpha`.
///
/// Both classes must be present in the counts; otherwise a rate is
/// undefined and the error names the missing class (this is distinct from
/// the zero-error case, where both rates exist and are 0).
pub fn np_measure(c: &ConfusionCounts, alpha: f64) -> Result<NpScore> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidFraction {
            name: "alpha",
            value: alpha,
        });
    }
    if c.negatives() == 0 {
        return Err(Error::ClassAbsent { class: "negative" });
    }
    if c.positives() == 0 {
        return Err(Error::ClassAbsent { class: "positive" });
    }
    let p_f = c.fp as f64 / c.negatives() as f64;
    let p_m = c.fn_ as f64 / c.positives() as f64;
    let e_hat = (p_f - alpha).max(0.0) / alpha + p_m;
    Ok(NpScore {
        p_f,
        p_m,
        alpha,
        e_hat,
    })
}
