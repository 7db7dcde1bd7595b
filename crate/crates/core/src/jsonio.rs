//! Serde helpers for lossless decimal persistence of model parameters.
//!
//! Parameter arrays are written as JSON numbers with 17 significant digits,
//! which round-trips every finite f64 exactly.

use serde::de::Error as _;
use serde::ser::Error as _;
use serde::{Deserialize, Deserializer, Serializer};
use serde_json::Number;

fn to_number(v: f64) -> Option<Number> {
    // {:.16e} prints one leading digit plus 16 decimals: 17 significant digits.
    format!("{v:.16e}").parse::<Number>().ok()
}

/// Serializes `Vec<f64>` as decimal numbers with 17 significant digits.
pub mod f64_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[f64], ser: S) -> Result<S::Ok, S::Error> {
        let nums: Vec<Number> = v
            .iter()
            .map(|&x| to_number(x).ok_or_else(|| S::Error::custom("non-finite parameter")))
            .collect::<Result<_, _>>()?;
        serde::Serialize::serialize(&nums, ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<f64>, D::Error> {
        let nums: Vec<Number> = Vec::deserialize(de)?;
        nums.iter()
            .map(|n| n.as_f64().ok_or_else(|| D::Error::custom("bad number")))
            .collect()
    }
}

/// Serializes a row-major matrix payload (flat `Vec<f64>`) the same way.
pub use f64_vec as f64_flat;
