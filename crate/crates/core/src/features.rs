//! MFCC feature extraction.
//!
//! Each clip is cut into overlapping frames; every frame goes through a
//! Hann window, a zero-padded power spectrum, a triangular mel filterbank,
//! a floored log, and an orthonormal type-II DCT. The clip's feature vector
//! is the per-dimension mean over frames, 13-dimensional by default.

use crate::audio_ingest::{Label, LabeledClip};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use rayon::prelude::*;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

/// MFCC extraction parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MfccConfig {
    pub sample_rate: u32,
    /// Analysis frame length in seconds (default 0.025).
    pub frame_length_s: f64,
    /// Frame hop in seconds (default 0.010).
    pub hop_s: f64,
    /// Number of triangular mel filters (default 26).
    pub n_mel_filters: usize,
    /// Number of cepstral coefficients kept (default 13).
    pub n_coefficients: usize,
    /// Filterbank lower edge in Hz (default 0).
    pub fmin: f64,
    /// Filterbank upper edge in Hz (default sample_rate / 2).
    pub fmax: Option<f64>,
    /// Added to filterbank energies before the log (default 1e-10).
    pub log_floor: f64,
    /// Drop the 0th (energy) coefficient and keep the next
    /// `n_coefficients` instead (default false).
    pub drop_c0: bool,
}

impl MfccConfig {
    pub fn new(sample_rate: u32) -> Self {
        MfccConfig {
            sample_rate,
            frame_length_s: 0.025,
            hop_s: 0.010,
            n_mel_filters: 26,
            n_coefficients: 13,
            fmin: 0.0,
            fmax: None,
            log_floor: 1e-10,
            drop_c0: false,
        }
    }

    fn fmax_hz(&self) -> f64 {
        self.fmax.unwrap_or(self.sample_rate as f64 / 2.0)
    }
}

/// A single clip's feature vector plus the clip index it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub clip_ref: usize,
}

/// Precomputed window and filterbank for repeated extraction.
pub struct MfccExtractor {
    cfg: MfccConfig,
    frame_len: usize,
    hop: usize,
    fft_len: usize,
    window: Vec<f64>,
    /// filter weights per band over one-sided spectrum bins
    filters: Vec<Vec<f64>>,
    centers_hz: Vec<f64>,
}

impl MfccExtractor {
    pub fn new(cfg: MfccConfig) -> Result<Self> {
        let sr = cfg.sample_rate as f64;
        if cfg.sample_rate == 0 {
            return Err(Error::InvalidConfig("sample rate must be positive".into()));
        }
        let frame_len = (cfg.frame_length_s * sr).round() as usize;
        let hop = (cfg.hop_s * sr).round() as usize;
        if frame_len < 2 || hop == 0 {
            return Err(Error::InvalidConfig(format!(
                "frame of {frame_len} samples / hop of {hop} samples is degenerate"
            )));
        }
        if cfg.n_coefficients == 0 || cfg.n_coefficients > cfg.n_mel_filters {
            return Err(Error::InvalidConfig(format!(
                "need 1 <= n_coefficients ({}) <= n_mel_filters ({})",
                cfg.n_coefficients, cfg.n_mel_filters
            )));
        }
        let fmax = cfg.fmax_hz();
        if !(cfg.fmin >= 0.0 && cfg.fmin < fmax && fmax <= sr / 2.0 + 1e-9) {
            return Err(Error::InvalidConfig(format!(
                "need 0 <= fmin ({}) < fmax ({}) <= sample_rate/2 ({})",
                cfg.fmin,
                fmax,
                sr / 2.0
            )));
        }
        if !(cfg.log_floor > 0.0) {
            return Err(Error::InvalidConfig("log_floor must be positive".into()));
        }

        let fft_len = frame_len.next_power_of_two();
        let window = hann_window(frame_len);
        let (filters, centers_hz) =
            mel_filterbank(cfg.n_mel_filters, cfg.fmin, fmax, sr, fft_len);
        Ok(MfccExtractor {
            cfg,
            frame_len,
            hop,
            fft_len,
            window,
            filters,
            centers_hz,
        })
    }

    pub fn config(&self) -> &MfccConfig {
        &self.cfg
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn fft_len(&self) -> usize {
        self.fft_len
    }

    /// Center frequency of each mel band in Hz.
    pub fn band_centers_hz(&self) -> &[f64] {
        &self.centers_hz
    }

    /// Mean filterbank energies over all frames (before the log), mostly
    /// useful for diagnostics and tests.
    pub fn mean_mel_energies(&self, samples: &[f64]) -> Result<Vec<f64>> {
        let frames = self.frame_starts(samples.len())?;
        let mut acc = vec![0.0; self.filters.len()];
        for &start in &frames {
            let e = self.frame_mel_energies(&samples[start..start + self.frame_len]);
            for (a, v) in acc.iter_mut().zip(&e) {
                *a += v;
            }
        }
        let n = frames.len() as f64;
        for a in acc.iter_mut() {
            *a /= n;
        }
        Ok(acc)
    }

    /// MFCC vector for a sample buffer: per-dimension mean over frames.
    pub fn features(&self, samples: &[f64]) -> Result<Vec<f64>> {
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "clip samples".into(),
            });
        }
        let frames = self.frame_starts(samples.len())?;
        let d = self.cfg.n_coefficients;
        let mut acc = vec![0.0; d];
        for &start in &frames {
            let energies = self.frame_mel_energies(&samples[start..start + self.frame_len]);
            let logs: Vec<f64> = energies
                .iter()
                .map(|&e| (e + self.cfg.log_floor).ln())
                .collect();
            let cepstrum = dct_ii(&logs);
            let coeffs = if self.cfg.drop_c0 {
                &cepstrum[1..1 + d]
            } else {
                &cepstrum[..d]
            };
            for (a, c) in acc.iter_mut().zip(coeffs) {
                *a += c;
            }
        }
        let n = frames.len() as f64;
        for a in acc.iter_mut() {
            *a /= n;
        }
        Ok(acc)
    }

    fn frame_starts(&self, len: usize) -> Result<Vec<usize>> {
        if len < self.frame_len {
            return Err(Error::ClipTooShort {
                clip_len: len,
                frame_len: self.frame_len,
            });
        }
        Ok((0..=len - self.frame_len).step_by(self.hop).collect())
    }

    fn frame_mel_energies(&self, frame: &[f64]) -> Vec<f64> {
        let windowed: Vec<f64> = frame.iter().zip(&self.window).map(|(x, w)| x * w).collect();
        let power = power_spectrum(&windowed, self.fft_len);
        self.filters
            .iter()
            .map(|f| f.iter().zip(&power).map(|(w, p)| w * p).sum())
            .collect()
    }
}

/// Computes one clip's MFCC feature vector.
pub fn mfcc(clip: &LabeledClip, cfg: &MfccConfig) -> Result<FeatureVector> {
    let extractor = MfccExtractor::new(cfg.clone())?;
    Ok(FeatureVector {
        values: extractor.features(&clip.samples)?,
        clip_ref: 0,
    })
}

/// Featurizes a clip list into an (n x n_coefficients) matrix plus the
/// label vector, preserving order. Errors carry the failing clip's index.
pub fn featurize_dataset(clips: &[LabeledClip], cfg: &MfccConfig) -> Result<(Matrix, Vec<Label>)> {
    if clips.is_empty() {
        return Err(Error::EmptyInput {
            context: "featurize_dataset",
        });
    }
    let extractor = MfccExtractor::new(cfg.clone())?;
    let rows: Vec<Vec<f64>> = clips
        .par_iter()
        .enumerate()
        .map(|(i, clip)| extractor.features(&clip.samples).map_err(|e| e.at_clip(i)))
        .collect::<Result<_>>()?;
    let labels = clips.iter().map(|c| c.label).collect();
    Ok((Matrix::from_rows(rows)?, labels))
}

/// Per-dimension standardization statistics fitted on a training subset.
///
/// Test rows must be transformed with the training statistics; columns with
/// zero variance keep a unit scale.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(m: &Matrix, rows: &[usize]) -> Result<Standardizer> {
        if rows.is_empty() {
            return Err(Error::EmptyInput {
                context: "standardizer fit",
            });
        }
        let d = m.cols();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for &r in rows {
            for (s, v) in mean.iter_mut().zip(m.row(r)) {
                *s += v;
            }
        }
        for s in mean.iter_mut() {
            *s /= n;
        }
        let mut var = vec![0.0; d];
        for &r in rows {
            for j in 0..d {
                let dlt = m.row(r)[j] - mean[j];
                var[j] += dlt * dlt;
            }
        }
        let std = var
            .into_iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Standardizer { mean, std })
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn transform(&self, m: &Matrix) -> Matrix {
        let mut out = m.clone();
        for i in 0..out.rows() {
            let row = out.row_mut(i);
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.std[j];
            }
        }
        out
    }
}

/// Symmetric Hann window of length `n`.
pub fn hann_window(n: usize) -> Vec<f64> {
    let denom = (n - 1) as f64;
    (0..n)
        .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / denom).cos()))
        .collect()
}

/// One-sided power spectrum |X_k|^2 for k = 0..=fft_len/2 of a real signal
/// zero-padded to `fft_len` (a power of two).
pub fn power_spectrum(x: &[f64], fft_len: usize) -> Vec<f64> {
    assert!(fft_len.is_power_of_two() && fft_len >= x.len());
    let mut re = vec![0.0; fft_len];
    let mut im = vec![0.0; fft_len];
    re[..x.len()].copy_from_slice(x);
    fft_in_place(&mut re, &mut im);
    (0..=fft_len / 2).map(|k| re[k] * re[k] + im[k] * im[k]).collect()
}

/// Iterative radix-2 Cooley-Tukey FFT.
fn fft_in_place(re: &mut [f64], im: &mut [f64]) {
    let n = re.len();
    debug_assert!(n.is_power_of_two());
    // bit-reversal permutation
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            re.swap(i, j);
            im.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = -2.0 * std::f64::consts::PI / len as f64;
        let (wr, wi) = (ang.cos(), ang.sin());
        let mut i = 0;
        while i < n {
            let (mut cur_r, mut cur_i) = (1.0f64, 0.0f64);
            for k in 0..len / 2 {
                let (ur, ui) = (re[i + k], im[i + k]);
                let (vr, vi) = (
                    re[i + k + len / 2] * cur_r - im[i + k + len / 2] * cur_i,
                    re[i + k + len / 2] * cur_i + im[i + k + len / 2] * cur_r,
                );
                re[i + k] = ur + vr;
                im[i + k] = ui + vi;
                re[i + k + len / 2] = ur - vr;
                im[i + k + len / 2] = ui - vi;
                let next_r = cur_r * wr - cur_i * wi;
                cur_i = cur_r * wi + cur_i * wr;
                cur_r = next_r;
            }
            i += len;
        }
        len <<= 1;
    }
}

/// Triangular unit-peak mel filterbank over one-sided spectrum bins.
/// Returns (filters, band center frequencies in Hz).
fn mel_filterbank(
    n_filters: usize,
    fmin: f64,
    fmax: f64,
    sample_rate: f64,
    fft_len: usize,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mel_lo = hz_to_mel(fmin);
    let mel_hi = hz_to_mel(fmax);
    let points: Vec<f64> = (0..n_filters + 2)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (n_filters + 1) as f64))
        .collect();
    let n_bins = fft_len / 2 + 1;
    let bin_hz = sample_rate / fft_len as f64;
    let mut filters = Vec::with_capacity(n_filters);
    for b in 0..n_filters {
        let (lo, center, hi) = (points[b], points[b + 1], points[b + 2]);
        let mut w = vec![0.0; n_bins];
        for (k, wk) in w.iter_mut().enumerate() {
            let f = k as f64 * bin_hz;
            *wk = if f <= lo || f >= hi {
                0.0
            } else if f <= center {
                (f - lo) / (center - lo)
            } else {
                (hi - f) / (hi - center)
            };
        }
        filters.push(w);
    }
    let centers = points[1..=n_filters].to_vec();
    (filters, centers)
}

/// Mel scale: m = 2595 log10(1 + f / 700).
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Orthonormal type-II DCT.
///
/// Coefficients k >= 1 are invariant to constant offsets, so they are
/// evaluated on x - x[0]; this makes them exactly zero for constant input.
pub fn dct_ii(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let nf = n as f64;
    let mut y = vec![0.0; n];
    y[0] = x.iter().sum::<f64>() / nf.sqrt();
    let scale = (2.0 / nf).sqrt();
    let shift = x[0];
    for (k, yk) in y.iter_mut().enumerate().skip(1) {
        let mut s = 0.0;
        for (i, &xi) in x.iter().enumerate() {
            s += (xi - shift)
                * (std::f64::consts::PI * k as f64 * (2 * i + 1) as f64 / (2.0 * nf)).cos();
        }
        *yk = scale * s;
    }
    y
}

/// Orthonormal type-III DCT, the inverse of [`dct_ii`].
pub fn dct_iii(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let nf = n as f64;
    let scale = (2.0 / nf).sqrt();
    (0..n)
        .map(|i| {
            let mut s = y[0] / nf.sqrt();
            for (k, &yk) in y.iter().enumerate().skip(1) {
                s += scale
                    * yk
                    * (std::f64::consts::PI * k as f64 * (2 * i + 1) as f64 / (2.0 * nf)).cos();
            }
            s
        })
        .collect()
}

const NPAF_MAGIC: &[u8; 4] = b"NPAF";

/// Writes features plus a trailing label column to the binary feature
/// format: magic `NPAF`, u32 rows, u32 cols, little-endian f64 row-major.
pub fn write_npaf<P: AsRef<Path>>(path: P, features: &Matrix, labels: &[Label]) -> Result<()> {
    check_labels(features, labels)?;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let cols = features.cols() + 1;
    out.write_all(NPAF_MAGIC)?;
    out.write_all(&(features.rows() as u32).to_le_bytes())?;
    out.write_all(&(cols as u32).to_le_bytes())?;
    for i in 0..features.rows() {
        for v in features.row(i) {
            out.write_all(&v.to_le_bytes())?;
        }
        out.write_all(&labels[i].sign().to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

/// Reads the binary feature format back into (features, labels).
pub fn read_npaf<P: AsRef<Path>>(path: P) -> Result<(Matrix, Vec<Label>)> {
    let path = path.as_ref();
    let bad = |reason: String| Error::Format {
        path: path.display().to_string(),
        reason,
    };
    let mut file = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    file.read_exact(&mut magic)?;
    if &magic != NPAF_MAGIC {
        return Err(bad(format!("bad magic {magic:?}")));
    }
    let mut word = [0u8; 4];
    file.read_exact(&mut word)?;
    let rows = u32::from_le_bytes(word) as usize;
    file.read_exact(&mut word)?;
    let cols = u32::from_le_bytes(word) as usize;
    if cols < 2 {
        return Err(bad(format!("need at least 2 columns, got {cols}")));
    }
    let mut payload = vec![0u8; rows * cols * 8];
    file.read_exact(&mut payload)?;
    let mut features = Vec::with_capacity(rows);
    let mut labels = Vec::with_capacity(rows);
    for r in 0..rows {
        let mut row = Vec::with_capacity(cols - 1);
        for c in 0..cols {
            let off = (r * cols + c) * 8;
            let v = f64::from_le_bytes(payload[off..off + 8].try_into().unwrap());
            if c + 1 == cols {
                labels.push(
                    Label::from_sign(v)
                        .map_err(|_| bad(format!("row {r}: label must be +1/-1, got {v}")))?,
                );
            } else {
                row.push(v);
            }
        }
        features.push(row);
    }
    Ok((Matrix::from_rows(features)?, labels))
}

/// Writes features as CSV, one row per clip with the label in the final
/// column and a header row.
pub fn write_features_csv<P: AsRef<Path>>(
    path: P,
    features: &Matrix,
    labels: &[Label],
) -> Result<()> {
    check_labels(features, labels)?;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let header: Vec<String> = (0..features.cols()).map(|j| format!("f{j}")).collect();
    writeln!(out, "{},label", header.join(","))?;
    for i in 0..features.rows() {
        let row: Vec<String> = features.row(i).iter().map(|v| format!("{v:e}")).collect();
        writeln!(out, "{},{}", row.join(","), labels[i])?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a feature CSV written by [`write_features_csv`].
pub fn read_features_csv<P: AsRef<Path>>(path: P) -> Result<(Matrix, Vec<Label>)> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let _header = lines.next().transpose()?;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        let bad = |reason: String| Error::Format {
            path: path.display().to_string(),
            reason: format!("line {}: {reason}", lineno + 2),
        };
        if cells.len() < 2 {
            return Err(bad("need at least one feature and a label".into()));
        }
        let mut row = Vec::with_capacity(cells.len() - 1);
        for c in &cells[..cells.len() - 1] {
            row.push(
                c.trim()
                    .parse::<f64>()
                    .map_err(|e| bad(format!("feature: {e}")))?,
            );
        }
        labels.push(match cells[cells.len() - 1].trim() {
            "1" | "+1" => Label::Positive,
            "-1" => Label::Negative,
            other => return Err(bad(format!("label must be 1 or -1, got `{other}`"))),
        });
        rows.push(row);
    }
    Ok((Matrix::from_rows(rows)?, labels))
}

fn check_labels(features: &Matrix, labels: &[Label]) -> Result<()> {
    if features.rows() != labels.len() {
        return Err(Error::LengthMismatch {
            context: "features vs labels",
            left: features.rows(),
            right: labels.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clip(samples: Vec<f64>) -> LabeledClip {
        LabeledClip {
            source_id: "t".into(),
            offset_s: 0.0,
            samples,
            label: Label::Negative,
        }
    }

    fn tone(freq: f64, amp: f64, n: usize, sr: f64) -> Vec<f64> {
        (0..n)
            .map(|i| amp * (2.0 * std::f64::consts::PI * freq * i as f64 / sr).sin())
            .collect()
    }

    #[test]
    fn silence_zeroes_all_but_the_first_coefficient() {
        let cfg = MfccConfig::new(8000);
        let v = mfcc(&clip(vec![0.0; 800]), &cfg).unwrap().values;
        assert_eq!(v.len(), 13);
        for (k, &c) in v.iter().enumerate().skip(1) {
            assert_eq!(c, 0.0, "coefficient {k} must be exactly zero");
        }
        // c0 = sqrt(26) * ln(1e-10)
        let expect = (26f64).sqrt() * 1e-10f64.ln();
        assert!((v[0] - expect).abs() < 1e-9, "c0 {} vs {expect}", v[0]);
    }

    #[test]
    fn default_config_yields_13_dims() {
        let cfg = MfccConfig::new(8000);
        let v = mfcc(&clip(tone(440.0, 0.5, 800, 8000.0)), &cfg).unwrap();
        assert_eq!(v.values.len(), 13);
        assert!(v.values.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn tone_peaks_in_nearest_mel_band() {
        let cfg = MfccConfig::new(8000);
        let ex = MfccExtractor::new(cfg).unwrap();
        let samples = tone(600.0, 0.5, 800, 8000.0);
        let energies = ex.mean_mel_energies(&samples).unwrap();
        let argmax = energies
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        // independent recomputation of the band centers from the mel formula
        let mel_hi = 2595.0 * (1.0f64 + 4000.0 / 700.0).log10();
        let centers: Vec<f64> = (1..=26)
            .map(|i| 700.0 * (10f64.powf(mel_hi * i as f64 / 27.0 / 2595.0) - 1.0))
            .collect();
        let nearest = centers
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - 600.0).abs().total_cmp(&(b.1 - 600.0).abs()))
            .unwrap()
            .0;
        assert_eq!(argmax, nearest, "centers {centers:?}");
    }

    #[test]
    fn mfcc_is_deterministic_bit_for_bit() {
        let cfg = MfccConfig::new(8000);
        let c = clip(tone(523.25, 0.3, 800, 8000.0));
        let a = mfcc(&c, &cfg).unwrap().values;
        let b = mfcc(&c, &cfg).unwrap().values;
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn mfcc_rejects_short_and_non_finite_clips() {
        let cfg = MfccConfig::new(8000);
        assert!(matches!(
            mfcc(&clip(vec![0.0; 100]), &cfg),
            Err(Error::ClipTooShort { .. })
        ));
        let mut s = vec![0.0; 800];
        s[13] = f64::NAN;
        assert!(matches!(
            mfcc(&clip(s), &cfg),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn amplitude_scaling_only_moves_the_energy_coefficient() {
        // The constant-offset pattern log(c^2 E) = log(c^2) + log(E) needs
        // every band's energy to sit far above the log floor, so use a
        // broadband signal rather than a pure tone.
        let cfg = MfccConfig::new(8000);
        let mut rng = crate::rng::Rng::new(7);
        let base: Vec<f64> = (0..800).map(|_| 0.3 * (rng.uniform() - 0.5)).collect();
        let scaled: Vec<f64> = base.iter().map(|v| v * 4.0).collect();
        let a = mfcc(&clip(base), &cfg).unwrap().values;
        let b = mfcc(&clip(scaled), &cfg).unwrap().values;
        for k in 1..13 {
            assert!(
                (a[k] - b[k]).abs() < 1e-5,
                "coefficient {k} moved by {}",
                (a[k] - b[k]).abs()
            );
        }
        // c0 shifts by sqrt(B) * ln(c^2) through the constant log offset
        let expect = 26f64.sqrt() * (16f64).ln();
        assert!((b[0] - a[0] - expect).abs() < 1e-4, "{}", b[0] - a[0]);
    }

    #[test]
    fn dct_round_trip_and_orthonormality() {
        let x: Vec<f64> = (0..26).map(|i| ((i * 37 + 11) % 17) as f64 * 0.31 - 2.0).collect();
        let y = dct_ii(&x);
        let back = dct_iii(&y);
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        // orthonormal: energy preserved
        let ex: f64 = x.iter().map(|v| v * v).sum();
        let ey: f64 = y.iter().map(|v| v * v).sum();
        assert!((ex - ey).abs() < 1e-9 * ex.max(1.0));
    }

    #[test]
    fn spectrum_satisfies_parseval() {
        let frame: Vec<f64> = tone(713.0, 0.4, 200, 8000.0);
        let window = hann_window(200);
        let windowed: Vec<f64> = frame.iter().zip(&window).map(|(x, w)| x * w).collect();
        let fft_len = 256;
        let p = power_spectrum(&windowed, fft_len);
        // fold the one-sided spectrum back to the full sum
        let full: f64 = p[0] + p[fft_len / 2] + 2.0 * p[1..fft_len / 2].iter().sum::<f64>();
        let energy: f64 = windowed.iter().map(|v| v * v).sum();
        let expect = fft_len as f64 * energy;
        assert!(
            (full - expect).abs() <= 1e-6 * expect,
            "{full} vs {expect}"
        );
    }

    #[test]
    fn featurize_shapes_and_purity() {
        let cfg = MfccConfig::new(8000);
        let c1 = clip(tone(400.0, 0.5, 800, 8000.0));
        let clips = vec![c1.clone(), c1.clone()];
        let (m, labels) = featurize_dataset(&clips, &cfg).unwrap();
        assert_eq!((m.rows(), m.cols()), (2, 13));
        assert_eq!(labels.len(), 2);
        assert_eq!(m.row(0), m.row(1), "identical clips give identical rows");
    }

    #[test]
    fn featurize_attaches_clip_index_to_errors() {
        let cfg = MfccConfig::new(8000);
        let good = clip(tone(400.0, 0.5, 800, 8000.0));
        let bad = clip(vec![0.0; 10]);
        let err = featurize_dataset(&[good, bad], &cfg).unwrap_err();
        assert!(err.to_string().contains("clip 1"), "{err}");
    }

    #[test]
    fn standardizer_normalizes_training_columns() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![i as f64, 3.0 * i as f64 - 7.0, 42.0])
            .collect();
        let m = Matrix::from_rows(rows).unwrap();
        let train: Vec<usize> = (0..30).collect();
        let s = Standardizer::fit(&m, &train).unwrap();
        let t = s.transform(&m);
        for j in 0..2 {
            let mean: f64 = train.iter().map(|&r| t.row(r)[j]).sum::<f64>() / 30.0;
            let var: f64 = train.iter().map(|&r| t.row(r)[j].powi(2)).sum::<f64>() / 30.0
                - mean * mean;
            assert!(mean.abs() < 1e-9, "col {j} mean {mean}");
            assert!((var - 1.0).abs() < 1e-9, "col {j} var {var}");
        }
        // constant column: untouched scale, centered
        assert!(t.row(5)[2].abs() < 1e-12);
    }

    #[test]
    fn npaf_and_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = Matrix::from_rows(vec![
            vec![0.1, -2.5, 3.0],
            vec![1.0 / 3.0, 1e-17, -7.25],
        ])
        .unwrap();
        let labels = vec![Label::Positive, Label::Negative];

        let npaf = dir.path().join("f.npaf");
        write_npaf(&npaf, &m, &labels).unwrap();
        let (m2, l2) = read_npaf(&npaf).unwrap();
        assert_eq!(l2, labels);
        for (a, b) in m.data().iter().zip(m2.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }

        let csv = dir.path().join("f.csv");
        write_features_csv(&csv, &m, &labels).unwrap();
        let (m3, l3) = read_features_csv(&csv).unwrap();
        assert_eq!(l3, labels);
        for (a, b) in m.data().iter().zip(m3.data()) {
            assert!((a - b).abs() < 1e-15 * a.abs().max(1.0));
        }
    }

    #[test]
    fn npaf_rejects_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.npaf");
        std::fs::write(&p, b"XXXX\x01\x00\x00\x00\x02\x00\x00\x00").unwrap();
        assert!(read_npaf(&p).is_err());
    }
}
