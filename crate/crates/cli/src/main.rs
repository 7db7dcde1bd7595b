//! `npad` — acoustic event detection with a false-positive-rate cap.
//!
//! Subcommands cover the pipeline end to end: synthetic corpus generation,
//! segmentation, MFCC featurization, VAE training, base-model library
//! construction, ensemble selection, evaluation, single trials and full
//! multi-trial experiments.

mod config;

use clap::{Parser, Subcommand};
use npad_core::audio_ingest::{segment, write_clip_manifest, Label};
use npad_core::ensemble::{
    build_library, default_vae_configs, load_ensemble, load_library, save_ensemble, save_library,
    select, FeatureConfig,
};
use npad_core::error::ErrorKind;
use npad_core::experiment::{prepare_corpus, run_experiment, run_trial, ExperimentConfig};
use npad_core::features::{
    featurize_dataset, read_features_csv, read_npaf, write_features_csv, write_npaf, Standardizer,
};
use npad_core::linalg::Matrix;
use npad_core::synth::{synth_corpus, SynthConfig};
use npad_core::vae::{train as train_vae_model, VaeConfig};
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(npad_core::Error),
    /// The experiment finished but some trials failed.
    TrialsFailed(usize),
}

impl From<npad_core::Error> for CliError {
    fn from(e: npad_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) => match e.kind() {
                ErrorKind::Data => 2,
                ErrorKind::Training => 3,
            },
            CliError::TrialsFailed(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::TrialsFailed(n) => write!(f, "{n} trial(s) failed; see the summary"),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "npad",
    about = "Cost-sensitive acoustic event detection under a false-positive-rate cap",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonOpts {
    /// Key-value config file (see the README for the schema).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic benchmark corpus of WAV recordings.
    Synth {
        #[command(flatten)]
        common: CommonOpts,
        /// Output corpus directory.
        #[arg(long)]
        out: PathBuf,
        /// Number of recordings.
        #[arg(long, default_value_t = 48)]
        recordings: usize,
        /// Duration of each recording in seconds.
        #[arg(long, default_value_t = 8.0)]
        duration_s: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Segment a corpus into labeled clips and write the clip manifest.
    Segment {
        #[command(flatten)]
        common: CommonOpts,
        /// Corpus directory (manifest.csv + labels.csv + WAV files).
        #[arg(long)]
        corpus: PathBuf,
        /// Output clip manifest CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Segment and featurize a corpus into a feature matrix file.
    Featurize {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        corpus: PathBuf,
        /// Output file; `.npaf` writes the binary format, anything else CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a VAE on a feature file and write the model JSON.
    TrainVae {
        #[command(flatten)]
        common: CommonOpts,
        /// Feature file (.npaf or .csv, label in the final column).
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 3)]
        latent: usize,
        #[arg(long, default_value_t = 10)]
        hidden: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Build a base-model library from a training feature file.
    BuildLibrary {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        features: PathBuf,
        /// Output library directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2000)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Which feature configurations to enumerate.
        #[arg(long, value_parser = ["mfcc", "vae", "all"], default_value = "all")]
        feature_set: String,
    },
    /// Select an ensemble from a library by the Neyman-Pearson measure.
    Select {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        library: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        #[arg(long, default_value_t = 100)]
        q: usize,
    },
    /// Evaluate an ensemble on a labeled feature file.
    Evaluate {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        library: PathBuf,
        #[arg(long)]
        ensemble: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        /// Optional report file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one trial (balance, split, train, evaluate all pipelines).
    Trial {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full multi-trial experiment and write reports.
    Experiment {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        corpus: PathBuf,
        /// Output directory for trial reports and the summary.
        #[arg(long)]
        out: PathBuf,
        /// Number of trials (overrides the config file).
        #[arg(long)]
        trials: Option<usize>,
        /// Master seed (overrides the config file).
        #[arg(long)]
        seed: Option<u64>,
        /// Library budget (overrides the config file).
        #[arg(long)]
        budget: Option<usize>,
        /// False-positive-rate cap (overrides the config file).
        #[arg(long)]
        alpha: Option<f64>,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's own help/version output is a success path
            if e.use_stderr() {
                eprint!("{e}");
                std::process::exit(1);
            }
            print!("{e}");
            std::process::exit(0);
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

/// Builds the experiment config from defaults plus an optional config file.
fn experiment_config(common: &CommonOpts) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::new(0);
    if let Some(path) = &common.config {
        let settings = config::parse_config_file(path)?;
        settings.apply_experiment(&mut cfg)?;
    }
    Ok(cfg)
}

fn read_features(path: &Path) -> Result<(Matrix, Vec<Label>), CliError> {
    let loaded = if path.extension().is_some_and(|e| e == "npaf") {
        read_npaf(path)?
    } else {
        read_features_csv(path)?
    };
    Ok(loaded)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth {
            common,
            out,
            recordings,
            duration_s,
            seed,
        } => {
            // validate experiment-scoped keys even here so typos surface
            experiment_config(&common)?;
            let mut cfg = SynthConfig::new(recordings, seed);
            cfg.duration_s = duration_s;
            if let Some(path) = &common.config {
                config::parse_config_file(path)?.apply_synth(&mut cfg)?;
            }
            let manifest = synth_corpus(&out, &cfg)?;
            if !common.quiet {
                let total_pos: f64 = manifest.iter().map(|e| e.positive_s).sum();
                println!(
                    "wrote {} recordings ({:.1} s positive) to {}",
                    manifest.len(),
                    total_pos,
                    out.display()
                );
            }
            Ok(())
        }
        Command::Segment { common, corpus, out } => {
            let cfg = experiment_config(&common)?;
            let recordings = npad_core::synth::load_corpus(&corpus)?;
            let mut clips = Vec::new();
            for rec in &recordings {
                clips.extend(segment(rec, cfg.clip_duration_s, cfg.positive_overlap_min)?);
            }
            write_clip_manifest(&out, &clips)?;
            if !common.quiet {
                let pos = clips.iter().filter(|c| c.label == Label::Positive).count();
                println!(
                    "wrote {} clips ({pos} positive) to {}",
                    clips.len(),
                    out.display()
                );
            }
            Ok(())
        }
        Command::Featurize { common, corpus, out } => {
            let cfg = experiment_config(&common)?;
            let recordings = npad_core::synth::load_corpus(&corpus)?;
            let mut clips = Vec::new();
            for rec in &recordings {
                clips.extend(segment(rec, cfg.clip_duration_s, cfg.positive_overlap_min)?);
            }
            let (features, labels) = featurize_dataset(&clips, &cfg.mfcc)?;
            if out.extension().is_some_and(|e| e == "npaf") {
                write_npaf(&out, &features, &labels)?;
            } else {
                write_features_csv(&out, &features, &labels)?;
            }
            if !common.quiet {
                println!(
                    "wrote {} x {} features to {}",
                    features.rows(),
                    features.cols(),
                    out.display()
                );
            }
            Ok(())
        }
        Command::TrainVae {
            common,
            features,
            out,
            latent,
            hidden,
            seed,
        } => {
            let exp = experiment_config(&common)?;
            let (matrix, _labels) = read_features(&features)?;
            // standardize with the file's own statistics; pipeline callers
            // standardize with their training split instead
            let all_rows: Vec<usize> = (0..matrix.rows()).collect();
            let standardizer = Standardizer::fit(&matrix, &all_rows)?;
            let standardized = standardizer.transform(&matrix);
            let mut vae_cfg: VaeConfig = VaeConfig::new(matrix.cols(), hidden, latent, seed);
            vae_cfg.init_std = exp.vae_training.init_std;
            vae_cfg.learning_rate = exp.vae_training.learning_rate;
            vae_cfg.adam_beta1 = exp.vae_training.adam_beta1;
            vae_cfg.adam_beta2 = exp.vae_training.adam_beta2;
            vae_cfg.adam_eps = exp.vae_training.adam_eps;
            vae_cfg.epochs = exp.vae_training.epochs;
            vae_cfg.batch_size = exp.vae_training.batch_size;
            let model = train_vae_model(&standardized, &vae_cfg)?;
            std::fs::write(&out, model.to_json()?).map_err(npad_core::Error::from)?;
            if !common.quiet {
                let trace = &model.training_elbo_trace;
                println!(
                    "trained {}->{}->{} VAE over {} epochs (mean ELBO {:.3} -> {:.3}); wrote {}",
                    matrix.cols(),
                    hidden,
                    latent,
                    trace.len(),
                    trace.first().unwrap_or(&f64::NAN),
                    trace.last().unwrap_or(&f64::NAN),
                    out.display()
                );
            }
            Ok(())
        }
        Command::BuildLibrary {
            common,
            features,
            out,
            budget,
            seed,
            feature_set,
        } => {
            let cfg = experiment_config(&common)?;
            let (matrix, labels) = read_features(&features)?;
            let feature_configs = match feature_set.as_str() {
                "mfcc" => vec![FeatureConfig::RawMfcc],
                "vae" => default_vae_configs(),
                _ => {
                    let mut v = vec![FeatureConfig::RawMfcc];
                    v.extend(default_vae_configs());
                    v
                }
            };
            let grids = cfg.grids(feature_configs);
            let library = build_library(&matrix, &labels, &grids, budget, seed)?;
            save_library(&out, &library)?;
            if !common.quiet {
                println!(
                    "trained {} base models ({} skipped) into {}",
                    library.models.len(),
                    library.skipped.len(),
                    out.display()
                );
            }
            Ok(())
        }
        Command::Select {
            common,
            library,
            out,
            alpha,
            q,
        } => {
            let lib = load_library(&library)?;
            let ensemble = select(&lib, alpha, q)?;
            let rel = library.display().to_string();
            save_ensemble(&out, &ensemble, &lib, &rel)?;
            if !common.quiet {
                let last = ensemble.selection_trace.last().map_or(f64::NAN, |s| s.e_hat);
                println!(
                    "selected {} members (holdout e_hat {last:.4}); wrote {}",
                    ensemble.members.len(),
                    out.display()
                );
            }
            Ok(())
        }
        Command::Evaluate {
            common,
            library,
            ensemble,
            features,
            alpha,
            out,
        } => {
            let lib = load_library(&library)?;
            let ens = load_ensemble(&ensemble)?;
            let (matrix, labels) = read_features(&features)?;
            let (c, np) = npad_core::ensemble::evaluate(&ens, &lib, &matrix, &labels, alpha)?;
            let report = serde_json::json!({
                "confusion": c,
                "np": np,
            });
            let text = serde_json::to_string_pretty(&report).map_err(npad_core::Error::from)?;
            match out {
                Some(path) => std::fs::write(path, text).map_err(npad_core::Error::from)?,
                None => println!("{text}"),
            }
            let _ = common;
            Ok(())
        }
        Command::Trial {
            common,
            corpus,
            seed,
            out,
        } => {
            let cfg = experiment_config(&common)?;
            let prepared = prepare_corpus(&corpus, &cfg)?;
            let output = run_trial(&cfg, 0, seed, &prepared)?;
            let text =
                serde_json::to_string_pretty(&output.report).map_err(npad_core::Error::from)?;
            match out {
                Some(path) => std::fs::write(path, text).map_err(npad_core::Error::from)?,
                None => println!("{text}"),
            }
            Ok(())
        }
        Command::Experiment {
            common,
            corpus,
            out,
            trials,
            seed,
            budget,
            alpha,
        } => {
            let mut cfg = experiment_config(&common)?;
            if let Some(t) = trials {
                cfg.n_trials = t;
            }
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            if let Some(b) = budget {
                cfg.library_budget = b;
            }
            if let Some(a) = alpha {
                cfg.alpha = a;
            }
            let prepared = prepare_corpus(&corpus, &cfg)?;
            if !common.quiet {
                println!(
                    "running {} trials on {} clips (seed {}, budget {})",
                    cfg.n_trials,
                    prepared.features.rows(),
                    cfg.master_seed,
                    cfg.library_budget
                );
            }
            let summary = run_experiment(&cfg, &prepared, Some(&out))?;
            if !common.quiet {
                print!("{}", npad_core::experiment::render_confusion_text(&summary));
                println!("reports written to {}", out.display());
            }
            if summary.n_failed > 0 {
                return Err(CliError::TrialsFailed(summary.n_failed));
            }
            Ok(())
        }
    }
}
