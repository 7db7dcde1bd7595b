//! Key-value configuration files.
//!
//! The format is one `key = value` pair per line; `#` starts a comment.
//! List-valued keys take comma-separated numbers. Unknown keys are usage
//! errors so typos never pass silently. The full key set is documented in
//! the project README.

use crate::CliError;
use npad_core::ensemble::VaeTraining;
use npad_core::experiment::ExperimentConfig;
use npad_core::synth::SynthConfig;
use std::path::Path;

#[derive(Debug, Clone, Default)]
pub struct FileSettings {
    pairs: Vec<(String, String)>,
}

pub fn parse_config_file(path: &Path) -> Result<FileSettings, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Usage(format!(
                "{}:{}: expected `key = value`, got `{raw}`",
                path.display(),
                lineno + 1
            )));
        };
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(FileSettings { pairs })
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| CliError::Usage(format!("config key `{key}`: {e}")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>, CliError> {
    value
        .split(',')
        .map(|v| parse::<f64>(key, v.trim()))
        .collect()
}

impl FileSettings {
    /// Applies experiment-scoped keys onto the config; unknown keys that
    /// are not synth-scoped are usage errors.
    pub fn apply_experiment(&self, cfg: &mut ExperimentConfig) -> Result<(), CliError> {
        for (key, value) in &self.pairs {
            if key.starts_with("synth.") {
                continue; // handled by apply_synth
            }
            self.apply_one_experiment(cfg, key, value)?;
        }
        Ok(())
    }

    fn apply_one_experiment(
        &self,
        cfg: &mut ExperimentConfig,
        key: &str,
        value: &str,
    ) -> Result<(), CliError> {
        let vae: &mut VaeTraining = &mut cfg.vae_training;
        match key {
            "alpha" => cfg.alpha = parse(key, value)?,
            "clip_duration_s" => cfg.clip_duration_s = parse(key, value)?,
            "positive_overlap_min" => cfg.positive_overlap_min = parse(key, value)?,
            "split_fraction" => cfg.split_fraction = parse(key, value)?,
            "n_trials" => cfg.n_trials = parse(key, value)?,
            "q" => cfg.q = parse(key, value)?,
            "library_budget" => cfg.library_budget = parse(key, value)?,
            "master_seed" => cfg.master_seed = parse(key, value)?,
            "holdout_fraction" => cfg.holdout_fraction = parse(key, value)?,
            "mfcc.sample_rate" => cfg.mfcc.sample_rate = parse(key, value)?,
            "mfcc.frame_length_s" => cfg.mfcc.frame_length_s = parse(key, value)?,
            "mfcc.hop_s" => cfg.mfcc.hop_s = parse(key, value)?,
            "mfcc.n_mel_filters" => cfg.mfcc.n_mel_filters = parse(key, value)?,
            "mfcc.n_coefficients" => cfg.mfcc.n_coefficients = parse(key, value)?,
            "mfcc.fmin" => cfg.mfcc.fmin = parse(key, value)?,
            "mfcc.fmax" => cfg.mfcc.fmax = Some(parse(key, value)?),
            "mfcc.log_floor" => cfg.mfcc.log_floor = parse(key, value)?,
            "mfcc.drop_c0" => cfg.mfcc.drop_c0 = parse(key, value)?,
            "vae.init_std" => vae.init_std = parse(key, value)?,
            "vae.learning_rate" => vae.learning_rate = parse(key, value)?,
            "vae.adam_beta1" => vae.adam_beta1 = parse(key, value)?,
            "vae.adam_beta2" => vae.adam_beta2 = parse(key, value)?,
            "vae.adam_eps" => vae.adam_eps = parse(key, value)?,
            "vae.epochs" => vae.epochs = parse(key, value)?,
            "vae.batch_size" => vae.batch_size = parse(key, value)?,
            "svm.tolerance" => cfg.svm_tolerance = parse(key, value)?,
            "svm.max_passes" => cfg.svm_max_passes = parse(key, value)?,
            "grids.gamma" => cfg.gamma_grid = parse_list(key, value)?,
            "grids.nu" => cfg.nu_grid = parse_list(key, value)?,
            "grids.threshold_percentiles" => {
                cfg.threshold_percentiles = parse_list(key, value)?
            }
            other => {
                return Err(CliError::Usage(format!("unknown config key `{other}`")));
            }
        }
        Ok(())
    }

    /// Applies synth-scoped keys onto a corpus generation config.
    pub fn apply_synth(&self, cfg: &mut SynthConfig) -> Result<(), CliError> {
        for (key, value) in &self.pairs {
            match key.as_str() {
                "synth.n_recordings" => cfg.n_recordings = parse(key, value)?,
                "synth.duration_s" => cfg.duration_s = parse(key, value)?,
                "synth.sample_rate" => cfg.sample_rate = parse(key, value)?,
                "synth.snr_min_db" => cfg.snr_min_db = parse(key, value)?,
                "synth.snr_max_db" => cfg.snr_max_db = parse(key, value)?,
                "synth.weak_fraction" => cfg.weak_fraction = parse(key, value)?,
                "synth.weak_snr_min_db" => cfg.weak_snr_min_db = parse(key, value)?,
                "synth.weak_snr_max_db" => cfg.weak_snr_max_db = parse(key, value)?,
                "synth.fundamental_min_hz" => cfg.fundamental_min_hz = parse(key, value)?,
                "synth.fundamental_max_hz" => cfg.fundamental_max_hz = parse(key, value)?,
                "synth.noise_rms" => cfg.noise_rms = parse(key, value)?,
                "master_seed" => cfg.seed = parse(key, value)?,
                _ => {} // experiment keys are validated by apply_experiment
            }
        }
        Ok(())
    }
}
