//! Base-model library and cost-sensitive ensemble selection.
//!
//! A base model is one full pipeline: a feature configuration (raw MFCC or
//! a VAE latent re-representation), a 2nu-SVM, and a decision threshold.
//! The library enumerates the Cartesian product of feature configurations,
//! kernel widths, class-wise nu bounds and threshold percentiles, trains
//! the distinct pieces once each, and caches every model's predictions on
//! an internal holdout carved from the training split.
//!
//! Greedy forward selection with replacement then builds a committee of Q
//! members minimizing the Neyman-Pearson measure of the majority vote on
//! that holdout; prediction is by majority vote with ties resolved to the
//! negative class.

use crate::audio_ingest::Label;
use crate::error::{Error, Result};
use crate::features::Standardizer;
use crate::linalg::Matrix;
use crate::metrics::{confusion, np_measure, ConfusionCounts, NpScore};
use crate::rng::Rng;
use crate::svm::{train_2nu, SvmHyper, SvmModel};
use crate::vae::{self, VaeConfig, VaeModel};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

// stream tags
const STREAM_SUBSAMPLE: u64 = 0x4c494253; // "LIBS"
const STREAM_HOLDOUT: u64 = 0x484f4c44; // "HOLD"
const STREAM_VAE: u64 = 0x564145; // "VAE"

/// Feature path of a base model: the standardized MFCC vector itself, or
/// its re-representation through a VAE encoder mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureConfig {
    RawMfcc,
    Vae { latent_dim: usize, hidden_dim: usize },
}

impl std::fmt::Display for FeatureConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FeatureConfig::RawMfcc => write!(f, "mfcc"),
            FeatureConfig::Vae {
                latent_dim,
                hidden_dim,
            } => write!(f, "vae{latent_dim}h{hidden_dim}"),
        }
    }
}

/// One cell of the model-library grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseModelSpec {
    pub feature_config: FeatureConfig,
    pub gamma: f64,
    pub nu_plus: f64,
    pub nu_minus: f64,
    /// Each model's threshold grid adapts to its own score scale: the
    /// concrete threshold is this percentile of its holdout scores.
    pub threshold_percentile: f64,
}

/// VAE training settings shared across the library's feature configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VaeTraining {
    pub init_std: f64,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for VaeTraining {
    fn default() -> Self {
        VaeTraining {
            init_std: 0.01,
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            epochs: 200,
            batch_size: 128,
        }
    }
}

impl VaeTraining {
    fn to_config(&self, input_dim: usize, hidden: usize, latent: usize, seed: u64) -> VaeConfig {
        VaeConfig {
            input_dim,
            hidden_dim: hidden,
            latent_dim: latent,
            init_std: self.init_std,
            learning_rate: self.learning_rate,
            adam_beta1: self.adam_beta1,
            adam_beta2: self.adam_beta2,
            adam_eps: self.adam_eps,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed,
        }
    }
}

/// Candidate grids defining the base-model library.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryGrids {
    pub feature_configs: Vec<FeatureConfig>,
    pub gamma: Vec<f64>,
    pub nu_plus: Vec<f64>,
    pub nu_minus: Vec<f64>,
    pub threshold_percentiles: Vec<f64>,
    pub vae_training: VaeTraining,
    /// Fraction of the training rows held out for selection (default 0.2).
    pub holdout_fraction: f64,
    pub svm_tolerance: f64,
    pub svm_max_passes: usize,
}

/// The four VAE structures crossed in the default library.
pub fn default_vae_configs() -> Vec<FeatureConfig> {
    let mut v = Vec::new();
    for latent_dim in [3usize, 5] {
        for hidden_dim in [10usize, 50] {
            v.push(FeatureConfig::Vae {
                latent_dim,
                hidden_dim,
            });
        }
    }
    v
}

/// Score percentiles used as the per-model threshold grid. Conservative
/// (high) percentiles come first so selection tie-breaks by library index
/// favor the member least likely to raise the false positive rate.
pub fn default_threshold_percentiles() -> Vec<f64> {
    vec![95.0, 85.0, 70.0, 50.0, 30.0, 15.0, 5.0]
}

impl LibraryGrids {
    /// Full default library: raw MFCC plus the four VAE structures.
    pub fn default_full() -> Self {
        let mut feature_configs = vec![FeatureConfig::RawMfcc];
        feature_configs.extend(default_vae_configs());
        LibraryGrids {
            feature_configs,
            gamma: crate::svm::default_gamma_grid(),
            nu_plus: crate::svm::default_nu_grid(),
            nu_minus: crate::svm::default_nu_grid(),
            threshold_percentiles: default_threshold_percentiles(),
            vae_training: VaeTraining::default(),
            holdout_fraction: 0.2,
            svm_tolerance: 1e-6,
            svm_max_passes: 10_000,
        }
    }

    /// Library restricted to raw MFCC features.
    pub fn raw_mfcc_only() -> Self {
        LibraryGrids {
            feature_configs: vec![FeatureConfig::RawMfcc],
            ..Self::default_full()
        }
    }

    /// Library restricted to the VAE re-representations.
    pub fn vae_only() -> Self {
        LibraryGrids {
            feature_configs: default_vae_configs(),
            ..Self::default_full()
        }
    }
}

/// The full Cartesian product of the grids, in a fixed enumeration order.
pub fn enumerate_specs(grids: &LibraryGrids) -> Vec<BaseModelSpec> {
    let mut specs = Vec::new();
    for &feature_config in &grids.feature_configs {
        for &gamma in &grids.gamma {
            for &nu_plus in &grids.nu_plus {
                for &nu_minus in &grids.nu_minus {
                    for &threshold_percentile in &grids.threshold_percentiles {
                        specs.push(BaseModelSpec {
                            feature_config,
                            gamma,
                            nu_plus,
                            nu_minus,
                            threshold_percentile,
                        });
                    }
                }
            }
        }
    }
    specs
}

/// One trained pipeline entry of the library.
#[derive(Debug, Clone)]
pub struct BaseModel {
    pub spec: BaseModelSpec,
    pub vae: Option<Arc<VaeModel>>,
    pub svm: Arc<SvmModel>,
    /// Concrete threshold resolved from the holdout score percentile.
    pub threshold: f64,
    /// Cached holdout predictions driving ensemble selection.
    pub validation_predictions: Vec<Label>,
}

/// A trained model library plus everything needed to evaluate it.
#[derive(Debug, Clone)]
pub struct Library {
    pub models: Vec<BaseModel>,
    /// Standardization fitted on the internal training rows only.
    pub standardizer: Standardizer,
    pub internal_train_indices: Vec<usize>,
    pub holdout_indices: Vec<usize>,
    pub holdout_labels: Vec<Label>,
    /// Specs whose SVM training failed, with the reason.
    pub skipped: Vec<(BaseModelSpec, String)>,
    pub seed: u64,
}

/// A selected committee: member indices into a library (with duplicates),
/// the target cap, and the greedy selection trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub members: Vec<usize>,
    pub q: usize,
    pub alpha: f64,
    pub selection_trace: Vec<SelectionStep>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionStep {
    pub step: usize,
    pub chosen: usize,
    pub e_hat: f64,
}

/// Stratified holdout split of 0..n by label, deterministic in the seed.
fn stratified_holdout(
    labels: &[Label],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidFraction {
            name: "holdout_fraction",
            value: fraction,
        });
    }
    let mut rng = Rng::from_words(&[seed, STREAM_HOLDOUT]);
    let mut holdout = Vec::new();
    let mut train = Vec::new();
    for class in [Label::Positive, Label::Negative] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.is_empty() {
            return Err(Error::ClassAbsent {
                class: if class == Label::Positive {
                    "positive"
                } else {
                    "negative"
                },
            });
        }
        rng.shuffle(&mut idx);
        let k = ((idx.len() as f64 * fraction).round() as usize).clamp(1, idx.len() - 1);
        holdout.extend_from_slice(&idx[..k]);
        train.extend_from_slice(&idx[k..]);
    }
    holdout.sort_unstable();
    train.sort_unstable();
    Ok((train, holdout))
}

/// Empirical percentile by nearest rank on a sorted copy.
fn score_percentile(scores: &[f64], percentile: f64) -> f64 {
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let idx = ((percentile / 100.0) * (sorted.len() - 1) as f64).round() as usize;
    sorted[idx.min(sorted.len() - 1)]
}

/// Builds the base-model library.
///
/// `train_features` are raw (unstandardized) MFCC rows of the training
/// split. The function carves a stratified selection holdout, fits the
/// standardizer on the remaining internal-train rows, trains one VAE per
/// distinct VAE feature configuration and one SVM per distinct
/// (feature, gamma, nu_plus, nu_minus) cell, and caches every spec's
/// holdout predictions. Specs whose SVM training fails are recorded in
/// `skipped` and do not abort the build.
pub fn build_library(
    train_features: &Matrix,
    train_labels: &[Label],
    grids: &LibraryGrids,
    budget: usize,
    seed: u64,
) -> Result<Library> {
    if budget == 0 {
        return Err(Error::InvalidConfig("library budget must be at least 1".into()));
    }
    if train_features.rows() != train_labels.len() {
        return Err(Error::LengthMismatch {
            context: "library training data",
            left: train_features.rows(),
            right: train_labels.len(),
        });
    }

    let all_specs = enumerate_specs(grids);
    if all_specs.is_empty() {
        return Err(Error::InvalidConfig("library grids are empty".into()));
    }
    let chosen: Vec<BaseModelSpec> = if all_specs.len() <= budget {
        all_specs
    } else {
        let mut rng = Rng::from_words(&[seed, STREAM_SUBSAMPLE]);
        let mut picked = rng.sample_indices(all_specs.len(), budget);
        picked.sort_unstable();
        picked.into_iter().map(|i| all_specs[i].clone()).collect()
    };

    let (train_idx, holdout_idx) =
        stratified_holdout(train_labels, grids.holdout_fraction, seed)?;
    let standardizer = Standardizer::fit(train_features, &train_idx)?;
    let standardized = standardizer.transform(train_features);
    let inner_features = standardized.select_rows(&train_idx);
    let inner_labels: Vec<Label> = train_idx.iter().map(|&i| train_labels[i]).collect();
    let holdout_features = standardized.select_rows(&holdout_idx);
    let holdout_labels: Vec<Label> = holdout_idx.iter().map(|&i| train_labels[i]).collect();

    // One VAE per distinct feature configuration, trained on the internal
    // training rows and shared by every spec that uses it.
    let vae_configs: Vec<FeatureConfig> = {
        let mut set: Vec<FeatureConfig> = chosen
            .iter()
            .map(|s| s.feature_config)
            .filter(|f| matches!(f, FeatureConfig::Vae { .. }))
            .collect();
        set.sort();
        set.dedup();
        set
    };
    let vaes: BTreeMap<FeatureConfig, Arc<VaeModel>> = vae_configs
        .par_iter()
        .map(|fc| {
            let FeatureConfig::Vae {
                latent_dim,
                hidden_dim,
            } = *fc
            else {
                unreachable!()
            };
            let cfg = grids.vae_training.to_config(
                inner_features.cols(),
                hidden_dim,
                latent_dim,
                crate::rng::mix(&[seed, STREAM_VAE, latent_dim as u64, hidden_dim as u64]),
            );
            vae::train(&inner_features, &cfg).map(|m| (*fc, Arc::new(m)))
        })
        .collect::<Result<_>>()?;

    // Transformed views of the internal-train and holdout rows per feature
    // configuration.
    let mut feature_views: BTreeMap<FeatureConfig, (Matrix, Matrix)> = BTreeMap::new();
    for fc in chosen.iter().map(|s| s.feature_config) {
        if feature_views.contains_key(&fc) {
            continue;
        }
        let view = match fc {
            FeatureConfig::RawMfcc => (inner_features.clone(), holdout_features.clone()),
            FeatureConfig::Vae { .. } => {
                let model = &vaes[&fc];
                (
                    model.latent_features(&inner_features)?,
                    model.latent_features(&holdout_features)?,
                )
            }
        };
        feature_views.insert(fc, view);
    }

    // One SVM per distinct (feature, gamma, nu+, nu-) cell.
    type SvmKey = (FeatureConfig, u64, u64, u64);
    let svm_key = |s: &BaseModelSpec| -> SvmKey {
        (
            s.feature_config,
            s.gamma.to_bits(),
            s.nu_plus.to_bits(),
            s.nu_minus.to_bits(),
        )
    };
    let distinct_cells: Vec<(SvmKey, BaseModelSpec)> = {
        let mut seen = BTreeMap::new();
        for s in &chosen {
            seen.entry(svm_key(s)).or_insert_with(|| s.clone());
        }
        seen.into_iter().collect()
    };
    let trained: BTreeMap<SvmKey, std::result::Result<(Arc<SvmModel>, Vec<f64>), String>> =
        distinct_cells
            .par_iter()
            .map(|(key, spec)| {
                let (inner, holdout) = &feature_views[&spec.feature_config];
                let hyper = SvmHyper {
                    nu_plus: spec.nu_plus,
                    nu_minus: spec.nu_minus,
                    gamma: spec.gamma,
                    tolerance: grids.svm_tolerance,
                    max_passes: grids.svm_max_passes,
                };
                let outcome = train_2nu(inner, &inner_labels, &hyper).and_then(|model| {
                    let scores: Vec<f64> = (0..holdout.rows())
                        .map(|r| model.decision_score(holdout.row(r)))
                        .collect::<Result<_>>()?;
                    Ok((Arc::new(model), scores))
                });
                (*key, outcome.map_err(|e| e.to_string()))
            })
            .collect();

    let mut models = Vec::with_capacity(chosen.len());
    let mut skipped = Vec::new();
    for spec in chosen {
        match &trained[&svm_key(&spec)] {
            Ok((svm, holdout_scores)) => {
                let threshold = score_percentile(holdout_scores, spec.threshold_percentile);
                let validation_predictions: Vec<Label> = holdout_scores
                    .iter()
                    .map(|&s| {
                        if s >= threshold {
                            Label::Positive
                        } else {
                            Label::Negative
                        }
                    })
                    .collect();
                models.push(BaseModel {
                    vae: vaes.get(&spec.feature_config).cloned(),
                    svm: Arc::clone(svm),
                    threshold,
                    validation_predictions,
                    spec,
                });
            }
            Err(reason) => skipped.push((spec, reason.clone())),
        }
    }
    if models.is_empty() {
        return Err(Error::NoModelsTrained);
    }
    Ok(Library {
        models,
        standardizer,
        internal_train_indices: train_idx,
        holdout_indices: holdout_idx,
        holdout_labels,
        skipped,
        seed,
    })
}

/// Greedy forward selection with replacement over cached prediction
/// vectors; the core of [`select`], kept independent of trained models so
/// properties can be checked on synthetic libraries.
pub fn select_from_predictions(
    predictions: &[Vec<Label>],
    holdout_labels: &[Label],
    alpha: f64,
    q: usize,
) -> Result<(Vec<usize>, Vec<SelectionStep>)> {
    if q == 0 {
        return Err(Error::InvalidConfig("ensemble size Q must be at least 1".into()));
    }
    if predictions.is_empty() {
        return Err(Error::EmptyInput {
            context: "ensemble selection",
        });
    }
    let n = holdout_labels.len();
    if !holdout_labels.contains(&Label::Positive) {
        return Err(Error::ClassAbsent { class: "positive" });
    }
    if !holdout_labels.contains(&Label::Negative) {
        return Err(Error::ClassAbsent { class: "negative" });
    }
    for (m, p) in predictions.iter().enumerate() {
        if p.len() != n {
            return Err(Error::LengthMismatch {
                context: "cached holdout predictions",
                left: n,
                right: p.len(),
            }
            .at_clip(m));
        }
    }

    let mut vote_sum = vec![0i64; n];
    let mut members: Vec<usize> = Vec::with_capacity(q);
    let mut trace = Vec::with_capacity(q);
    let mut ensemble_preds = vec![Label::Negative; n];
    let mut current_e_hat = f64::INFINITY;
    for step in 1..=q {
        // best addition over a candidate set: (e_hat, p_m, index)
        let mut best_over = |candidates: &mut dyn Iterator<Item = usize>|
            -> Result<Option<(f64, f64, usize)>> {
            let mut best: Option<(f64, f64, usize)> = None;
            for m in candidates {
                let preds = &predictions[m];
                for (i, p) in preds.iter().enumerate() {
                    let s = vote_sum[i] + p.sign_i8() as i64;
                    ensemble_preds[i] = if s > 0 { Label::Positive } else { Label::Negative };
                }
                let c = confusion(holdout_labels, &ensemble_preds)?;
                let score = np_measure(&c, alpha)?;
                let candidate = (score.e_hat, score.p_m, m);
                let better = match best {
                    None => true,
                    Some(b) => candidate.0 < b.0 || (candidate.0 == b.0 && candidate.1 < b.1),
                };
                if better {
                    best = Some(candidate);
                }
            }
            Ok(best)
        };
        let library_best =
            best_over(&mut (0..predictions.len()))?.expect("non-empty library");
        // A new model is accepted only while it strictly improves the
        // greedy objective. Afterwards the committee entrenches: prefer an
        // addition that leaves every holdout prediction unchanged (a model
        // voting with the majority everywhere it matters; an all-positive
        // voter qualifies on odd committee sizes and an all-negative voter
        // on even ones), else duplicate whichever current member keeps
        // e_hat lowest. Entrenchment hardens the majority instead of
        // chasing holdout noise.
        let (e_hat, _, chosen) = if library_best.0 < current_e_hat {
            library_best
        } else {
            let no_op = (0..predictions.len()).find(|&m| {
                predictions[m].iter().enumerate().all(|(i, p)| {
                    let before = vote_sum[i] > 0;
                    let after = vote_sum[i] + p.sign_i8() as i64 > 0;
                    before == after
                })
            });
            match no_op {
                Some(m) => (current_e_hat, f64::INFINITY, m),
                None => {
                    let mut uniq = members.clone();
                    uniq.sort_unstable();
                    uniq.dedup();
                    best_over(&mut uniq.into_iter())?.unwrap_or(library_best)
                }
            }
        };
        for (i, p) in predictions[chosen].iter().enumerate() {
            vote_sum[i] += p.sign_i8() as i64;
        }
        current_e_hat = e_hat;
        members.push(chosen);
        trace.push(SelectionStep { step, chosen, e_hat });
    }
    Ok((members, trace))
}

/// Selects a Q-member committee minimizing the Neyman-Pearson measure of
/// the majority vote on the library's holdout.
pub fn select(library: &Library, alpha: f64, q: usize) -> Result<Ensemble> {
    let predictions: Vec<Vec<Label>> = library
        .models
        .iter()
        .map(|m| m.validation_predictions.clone())
        .collect();
    let (members, selection_trace) =
        select_from_predictions(&predictions, &library.holdout_labels, alpha, q)?;
    Ok(Ensemble {
        members,
        q,
        alpha,
        selection_trace,
    })
}

fn member_multiplicities(ensemble: &Ensemble) -> BTreeMap<usize, i64> {
    let mut counts = BTreeMap::new();
    for &m in &ensemble.members {
        *counts.entry(m).or_insert(0) += 1;
    }
    counts
}

impl BaseModel {
    /// Casts this model's vote for one standardized MFCC row.
    fn vote_standardized(&self, x_std: &[f64]) -> Result<Label> {
        let score = match &self.vae {
            None => self.svm.decision_score(x_std)?,
            Some(vae) => {
                let (mu, _) = vae.encode(x_std)?;
                self.svm.decision_score(&mu)?
            }
        };
        Ok(if score >= self.threshold {
            Label::Positive
        } else {
            Label::Negative
        })
    }
}

/// Majority vote of the committee on one raw MFCC vector. Each member
/// applies its own feature transform; ties go to the negative class so an
/// even committee never leans toward a false positive.
pub fn vote(ensemble: &Ensemble, library: &Library, x_raw: &[f64]) -> Result<Label> {
    let x_std = library.standardizer.transform_row(x_raw);
    let mut sum = 0i64;
    for (&m, &count) in &member_multiplicities(ensemble) {
        let model = library.models.get(m).ok_or(Error::InvalidConfig(format!(
            "ensemble member {m} is outside the library"
        )))?;
        sum += count * model.vote_standardized(&x_std)?.sign_i8() as i64;
    }
    Ok(if sum > 0 { Label::Positive } else { Label::Negative })
}

/// Majority-vote predictions for every row of a raw MFCC matrix.
pub fn predict_matrix(
    ensemble: &Ensemble,
    library: &Library,
    raw_features: &Matrix,
) -> Result<Vec<Label>> {
    let standardized = library.standardizer.transform(raw_features);
    let counts = member_multiplicities(ensemble);
    // score each distinct member once over the whole matrix
    let per_member: Vec<(i64, Vec<Label>)> = counts
        .par_iter()
        .map(|(&m, &count)| {
            let model = library.models.get(m).ok_or(Error::InvalidConfig(format!(
                "ensemble member {m} is outside the library"
            )))?;
            let votes: Vec<Label> = match &model.vae {
                None => (0..standardized.rows())
                    .map(|r| {
                        model.svm.decision_score(standardized.row(r)).map(|s| {
                            if s >= model.threshold {
                                Label::Positive
                            } else {
                                Label::Negative
                            }
                        })
                    })
                    .collect::<Result<_>>()?,
                Some(vae) => {
                    let latent = vae.latent_features(&standardized)?;
                    (0..latent.rows())
                        .map(|r| {
                            model.svm.decision_score(latent.row(r)).map(|s| {
                                if s >= model.threshold {
                                    Label::Positive
                                } else {
                                    Label::Negative
                                }
                            })
                        })
                        .collect::<Result<_>>()?
                }
            };
            Ok((count, votes))
        })
        .collect::<Result<_>>()?;
    let mut sums = vec![0i64; raw_features.rows()];
    for (count, votes) in &per_member {
        for (s, v) in sums.iter_mut().zip(votes) {
            *s += count * v.sign_i8() as i64;
        }
    }
    Ok(sums
        .into_iter()
        .map(|s| if s > 0 { Label::Positive } else { Label::Negative })
        .collect())
}

/// Evaluates the committee on a labeled test set of raw MFCC rows.
pub fn evaluate(
    ensemble: &Ensemble,
    library: &Library,
    test_features: &Matrix,
    test_labels: &[Label],
    alpha: f64,
) -> Result<(ConfusionCounts, NpScore)> {
    let predictions = predict_matrix(ensemble, library, test_features)?;
    let c = confusion(test_labels, &predictions)?;
    let score = np_measure(&c, alpha)?;
    Ok((c, score))
}

// ---------------------------------------------------------------------
// Persistence: a library directory holds library.json plus one JSON file
// per distinct SVM and VAE; the ensemble file references member specs.
// ---------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct LibraryModelJson {
    spec: BaseModelSpec,
    threshold: f64,
    svm_file: String,
    vae_file: Option<String>,
    validation_predictions: Vec<i8>,
}

#[derive(Serialize, Deserialize)]
struct LibraryJson {
    seed: u64,
    standardizer: Standardizer,
    internal_train_indices: Vec<usize>,
    holdout_indices: Vec<usize>,
    holdout_labels: Vec<i8>,
    models: Vec<LibraryModelJson>,
    skipped: Vec<(BaseModelSpec, String)>,
}

fn labels_to_i8(labels: &[Label]) -> Vec<i8> {
    labels.iter().map(|l| l.sign_i8()).collect()
}

fn labels_from_i8(v: &[i8]) -> Result<Vec<Label>> {
    v.iter().map(|&s| Label::from_sign(s as f64)).collect()
}

/// Writes a library directory: `library.json` plus `models/` JSON files.
pub fn save_library<P: AsRef<Path>>(dir: P, library: &Library) -> Result<()> {
    let dir = dir.as_ref();
    let models_dir = dir.join("models");
    std::fs::create_dir_all(&models_dir)?;

    // shared pieces are written once, keyed by pointer identity
    let mut svm_files: Vec<(*const SvmModel, String)> = Vec::new();
    let mut vae_files: Vec<(*const VaeModel, String)> = Vec::new();
    let mut entries = Vec::with_capacity(library.models.len());
    for model in &library.models {
        let svm_ptr = Arc::as_ptr(&model.svm);
        let svm_file = match svm_files.iter().find(|(p, _)| *p == svm_ptr) {
            Some((_, f)) => f.clone(),
            None => {
                let name = format!("models/svm_{:05}.json", svm_files.len());
                std::fs::write(dir.join(&name), model.svm.to_json()?)?;
                svm_files.push((svm_ptr, name.clone()));
                name
            }
        };
        let vae_file = match &model.vae {
            None => None,
            Some(vae) => {
                let ptr = Arc::as_ptr(vae);
                Some(match vae_files.iter().find(|(p, _)| *p == ptr) {
                    Some((_, f)) => f.clone(),
                    None => {
                        let name = format!("models/{}.json", model.spec.feature_config);
                        std::fs::write(dir.join(&name), vae.to_json()?)?;
                        vae_files.push((ptr, name.clone()));
                        name
                    }
                })
            }
        };
        entries.push(LibraryModelJson {
            spec: model.spec.clone(),
            threshold: model.threshold,
            svm_file,
            vae_file,
            validation_predictions: labels_to_i8(&model.validation_predictions),
        });
    }
    let doc = LibraryJson {
        seed: library.seed,
        standardizer: library.standardizer.clone(),
        internal_train_indices: library.internal_train_indices.clone(),
        holdout_indices: library.holdout_indices.clone(),
        holdout_labels: labels_to_i8(&library.holdout_labels),
        models: entries,
        skipped: library.skipped.clone(),
    };
    std::fs::write(dir.join("library.json"), serde_json::to_string_pretty(&doc)?)?;
    Ok(())
}

/// Reads a library directory written by [`save_library`].
pub fn load_library<P: AsRef<Path>>(dir: P) -> Result<Library> {
    let dir = dir.as_ref();
    let doc: LibraryJson =
        serde_json::from_str(&std::fs::read_to_string(dir.join("library.json"))?)?;
    let mut svm_cache: BTreeMap<String, Arc<SvmModel>> = BTreeMap::new();
    let mut vae_cache: BTreeMap<String, Arc<VaeModel>> = BTreeMap::new();
    let mut models = Vec::with_capacity(doc.models.len());
    for entry in doc.models {
        let svm = match svm_cache.get(&entry.svm_file) {
            Some(m) => Arc::clone(m),
            None => {
                let m = Arc::new(SvmModel::from_json(&std::fs::read_to_string(
                    dir.join(&entry.svm_file),
                )?)?);
                svm_cache.insert(entry.svm_file.clone(), Arc::clone(&m));
                m
            }
        };
        let vae = match &entry.vae_file {
            None => None,
            Some(file) => Some(match vae_cache.get(file) {
                Some(m) => Arc::clone(m),
                None => {
                    let m = Arc::new(VaeModel::from_json(&std::fs::read_to_string(
                        dir.join(file),
                    )?)?);
                    vae_cache.insert(file.clone(), Arc::clone(&m));
                    m
                }
            }),
        };
        models.push(BaseModel {
            spec: entry.spec,
            vae,
            svm,
            threshold: entry.threshold,
            validation_predictions: labels_from_i8(&entry.validation_predictions)?,
        });
    }
    Ok(Library {
        models,
        standardizer: doc.standardizer,
        internal_train_indices: doc.internal_train_indices,
        holdout_indices: doc.holdout_indices,
        holdout_labels: labels_from_i8(&doc.holdout_labels)?,
        skipped: doc.skipped,
        seed: doc.seed,
    })
}

#[derive(Serialize, Deserialize)]
struct EnsembleMemberJson {
    library_index: usize,
    spec: BaseModelSpec,
    threshold: f64,
    svm_file: String,
    vae_file: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct EnsembleJson {
    alpha: f64,
    q: usize,
    members: Vec<EnsembleMemberJson>,
    selection_trace: Vec<SelectionStep>,
}

/// Writes an ensemble JSON referencing the library's model files.
pub fn save_ensemble<P: AsRef<Path>>(
    path: P,
    ensemble: &Ensemble,
    library: &Library,
    library_dir_rel: &str,
) -> Result<()> {
    // rebuild the file names the library save used
    let mut svm_files: Vec<*const SvmModel> = Vec::new();
    let mut file_of_svm = BTreeMap::new();
    let mut vae_names = BTreeMap::new();
    for model in &library.models {
        let ptr = Arc::as_ptr(&model.svm);
        if !svm_files.contains(&ptr) {
            file_of_svm.insert(ptr, format!("models/svm_{:05}.json", svm_files.len()));
            svm_files.push(ptr);
        }
        if let Some(_vae) = &model.vae {
            vae_names
                .entry(model.spec.feature_config)
                .or_insert_with(|| format!("models/{}.json", model.spec.feature_config));
        }
    }
    let members = ensemble
        .members
        .iter()
        .map(|&m| {
            let model = &library.models[m];
            EnsembleMemberJson {
                library_index: m,
                spec: model.spec.clone(),
                threshold: model.threshold,
                svm_file: format!("{library_dir_rel}/{}", file_of_svm[&Arc::as_ptr(&model.svm)]),
                vae_file: model
                    .vae
                    .as_ref()
                    .map(|_| format!("{library_dir_rel}/{}", vae_names[&model.spec.feature_config])),
            }
        })
        .collect();
    let doc = EnsembleJson {
        alpha: ensemble.alpha,
        q: ensemble.q,
        members,
        selection_trace: ensemble.selection_trace.clone(),
    };
    std::fs::write(path, serde_json::to_string_pretty(&doc)?)?;
    Ok(())
}

/// Reads an ensemble JSON back into member indices and trace.
pub fn load_ensemble<P: AsRef<Path>>(path: P) -> Result<Ensemble> {
    let doc: EnsembleJson = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    Ok(Ensemble {
        members: doc.members.iter().map(|m| m.library_index).collect(),
        q: doc.q,
        alpha: doc.alpha,
        selection_trace: doc.selection_trace,
    })
}
