//! Cost-sensitive acoustic event detection under a false-positive-rate cap.
//!
//! The pipeline: WAV recordings are segmented into fixed-length labeled
//! clips, summarized as 13-dimensional MFCC vectors, optionally
//! re-represented through the latent space of a small variational
//! autoencoder, classified by cost-sensitive 2nu support vector machines,
//! and combined by greedy ensemble selection. Selection minimizes a
//! Neyman-Pearson error measure: the false negative rate plus a soft
//! penalty on any false positive rate above a target cap.
//!
//! Modules follow the pipeline stages:
//!
//! - [`audio_ingest`]: WAV loading, clip segmentation, balancing, splits
//! - [`features`]: MFCC extraction and feature-matrix persistence
//! - [`vae`]: variational autoencoder for latent re-representation
//! - [`svm`]: 2nu-SVM dual solver with an RBF kernel
//! - [`metrics`]: confusion counts and the Neyman-Pearson measure
//! - [`ensemble`]: base-model library, greedy selection, majority vote
//! - [`synth`]: synthetic benchmark corpus generation
//! - [`experiment`]: trial and multi-trial experiment orchestration

pub mod audio_ingest;
pub mod ensemble;
pub mod error;
pub mod experiment;
pub mod features;
mod jsonio;
pub mod linalg;
pub mod metrics;
pub mod rng;
pub mod svm;
pub mod synth;
pub mod vae;

pub use audio_ingest::Label;
pub use error::{Error, Result};
pub use linalg::Matrix;
