//! Recording ingestion: WAV loading, clip segmentation, class balancing,
//! and the random train/test split.
//!
//! A recording carries its positive time spans; segmentation cuts it into
//! non-overlapping fixed-length clips and labels each clip by how much of
//! its duration the spans cover. All randomized operations take an explicit
//! seed and are pure functions of (input, seed).

use crate::error::{Error, Result};
use crate::rng::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

/// Binary clip label; +1 marks the event class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "1")]
    Positive,
    #[serde(rename = "-1")]
    Negative,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    pub fn sign_i8(self) -> i8 {
        match self {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }

    pub fn from_sign(v: f64) -> Result<Label> {
        if v == 1.0 {
            Ok(Label::Positive)
        } else if v == -1.0 {
            Ok(Label::Negative)
        } else {
            Err(Error::InvalidConfig(format!("label must be +1 or -1, got {v}")))
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Positive => write!(f, "1"),
            Label::Negative => write!(f, "-1"),
        }
    }
}

/// A raw audio recording with its positive label spans.
#[derive(Debug, Clone)]
pub struct Recording {
    pub id: String,
    /// Amplitudes in [-1, 1].
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    /// (start_s, end_s) intervals marked positive.
    pub label_spans: Vec<(f64, f64)>,
}

impl Recording {
    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Checks basic invariants and normalizes spans (sorted by start).
    ///
    /// Spans must lie within [0, duration] and must not overlap; touching
    /// endpoints are allowed.
    pub fn validate(&mut self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(Error::InvalidConfig(format!(
                "recording `{}`: sample rate must be positive",
                self.id
            )));
        }
        if self.samples.is_empty() {
            return Err(Error::EmptyInput {
                context: "recording samples",
            });
        }
        let duration = self.duration_s();
        self.label_spans
            .sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        const EPS: f64 = 1e-9;
        let mut prev_end = f64::NEG_INFINITY;
        for &(start, end) in &self.label_spans {
            let fail = |reason: &str| Error::InvalidSpan {
                recording: self.id.clone(),
                start_s: start,
                end_s: end,
                reason: reason.to_string(),
            };
            if !start.is_finite() || !end.is_finite() {
                return Err(fail("non-finite endpoint"));
            }
            if end <= start {
                return Err(fail("end must exceed start"));
            }
            if start < -EPS || end > duration + EPS {
                return Err(fail("span lies outside the recording"));
            }
            if start < prev_end - EPS {
                return Err(fail("span overlaps the previous span"));
            }
            prev_end = end;
        }
        Ok(())
    }

    /// Loads a recording from a WAV file plus its positive spans.
    pub fn from_wav<P: AsRef<Path>>(path: P, id: &str, label_spans: Vec<(f64, f64)>) -> Result<Recording> {
        let (samples, sample_rate) = load_wav(path)?;
        let mut rec = Recording {
            id: id.to_string(),
            samples,
            sample_rate,
            label_spans,
        };
        rec.validate()?;
        Ok(rec)
    }
}

/// A fixed-length labeled audio clip cut from a recording.
#[derive(Debug, Clone)]
pub struct LabeledClip {
    pub source_id: String,
    pub offset_s: f64,
    pub samples: Vec<f64>,
    pub label: Label,
}

/// Train/test index partition of a clip list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

/// Cuts a recording into consecutive non-overlapping clips of
/// `clip_duration_s` seconds, discarding the partial tail.
///
/// A clip is labeled positive iff the fraction of its duration covered by
/// the recording's label spans is at least `positive_overlap_min`.
/// A recording shorter than one clip yields an empty list.
pub fn segment(
    rec: &Recording,
    clip_duration_s: f64,
    positive_overlap_min: f64,
) -> Result<Vec<LabeledClip>> {
    if !(clip_duration_s > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "clip duration must be positive, got {clip_duration_s}"
        )));
    }
    if !(positive_overlap_min > 0.0 && positive_overlap_min <= 1.0) {
        return Err(Error::InvalidFraction {
            name: "positive_overlap_min",
            value: positive_overlap_min,
        });
    }
    let mut rec_checked = rec.clone();
    rec_checked.validate()?;
    let rec = &rec_checked;

    let clip_len = (clip_duration_s * rec.sample_rate as f64).round() as usize;
    if clip_len == 0 {
        return Err(Error::InvalidConfig(format!(
            "clip duration {clip_duration_s}s is below one sample at {} Hz",
            rec.sample_rate
        )));
    }
    let n_clips = rec.samples.len() / clip_len;
    let sr = rec.sample_rate as f64;

    let mut clips = Vec::with_capacity(n_clips);
    for i in 0..n_clips {
        let start_sample = i * clip_len;
        let t0 = start_sample as f64 / sr;
        let t1 = (start_sample + clip_len) as f64 / sr;
        let mut covered = 0.0;
        for &(s, e) in &rec.label_spans {
            let lo = s.max(t0);
            let hi = e.min(t1);
            if hi > lo {
                covered += hi - lo;
            }
        }
        let label = if covered / (t1 - t0) >= positive_overlap_min {
            Label::Positive
        } else {
            Label::Negative
        };
        clips.push(LabeledClip {
            source_id: rec.id.clone(),
            offset_s: t0,
            samples: rec.samples[start_sample..start_sample + clip_len].to_vec(),
            label,
        });
    }
    Ok(clips)
}

/// Indices of a balanced subset: the majority class is uniformly
/// subsampled without replacement down to the minority count, and the
/// combined index list is shuffled. Deterministic given the seed.
pub fn balance_indices(labels: &[Label], seed: u64) -> Result<Vec<usize>> {
    let pos: Vec<usize> = (0..labels.len())
        .filter(|&i| labels[i] == Label::Positive)
        .collect();
    let neg: Vec<usize> = (0..labels.len())
        .filter(|&i| labels[i] == Label::Negative)
        .collect();
    if pos.is_empty() {
        return Err(Error::ClassAbsent { class: "positive" });
    }
    if neg.is_empty() {
        return Err(Error::ClassAbsent { class: "negative" });
    }
    let mut rng = Rng::from_words(&[seed, 0x42414c41]); // "BALA"
    let (keep_whole, downsample) = if pos.len() <= neg.len() {
        (pos, neg)
    } else {
        (neg, pos)
    };
    let target = keep_whole.len();
    let picked: Vec<usize> = if downsample.len() == target {
        downsample
    } else {
        rng.sample_indices(downsample.len(), target)
            .into_iter()
            .map(|k| downsample[k])
            .collect()
    };
    let mut combined: Vec<usize> = keep_whole.into_iter().chain(picked).collect();
    combined.sort_unstable();
    rng.shuffle(&mut combined);
    Ok(combined)
}

/// Balances a clip list by subsampling the majority class; see
/// [`balance_indices`].
pub fn balance(clips: &[LabeledClip], seed: u64) -> Result<Vec<LabeledClip>> {
    let labels: Vec<Label> = clips.iter().map(|c| c.label).collect();
    let idx = balance_indices(&labels, seed)?;
    Ok(idx.into_iter().map(|i| clips[i].clone()).collect())
}

/// Draws `round(split_fraction * n)` train indices uniformly without
/// replacement; the remainder is the test set. Both lists are sorted.
pub fn split_indices(n: usize, split_fraction: f64, seed: u64) -> Result<DatasetSplit> {
    if !(split_fraction > 0.0 && split_fraction < 1.0) {
        return Err(Error::InvalidFraction {
            name: "split_fraction",
            value: split_fraction,
        });
    }
    if n == 0 {
        return Err(Error::EmptyInput { context: "split" });
    }
    let k = (split_fraction * n as f64).round() as usize;
    let k = k.clamp(1, n - 1);
    let mut rng = Rng::from_words(&[seed, 0x53504c49]); // "SPLI"
    let mut train = rng.sample_indices(n, k);
    train.sort_unstable();
    let mut in_train = vec![false; n];
    for &i in &train {
        in_train[i] = true;
    }
    let test: Vec<usize> = (0..n).filter(|&i| !in_train[i]).collect();
    Ok(DatasetSplit { train, test, seed })
}

/// Splits a clip list into train/test index sets; see [`split_indices`].
pub fn split(clips: &[LabeledClip], split_fraction: f64, seed: u64) -> Result<DatasetSplit> {
    split_indices(clips.len(), split_fraction, seed)
}

/// Reads a WAV file as mono samples in [-1, 1] plus the sample rate.
///
/// 16-bit integer PCM and 32-bit float are accepted; integer samples are
/// scaled by the type's maximum magnitude. Multi-channel input is downmixed
/// by averaging channels per frame.
pub fn load_wav<P: AsRef<Path>>(path: P) -> Result<(Vec<f64>, u32)> {
    let path = path.as_ref();
    let mut reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::Format {
            path: path.display().to_string(),
            reason: "zero channels".to_string(),
        });
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>()?,
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()?,
        (fmt, bits) => {
            return Err(Error::Format {
                path: path.display().to_string(),
                reason: format!("unsupported sample format {fmt:?}/{bits}-bit"),
            })
        }
    };
    let frames = interleaved.len() / channels;
    let mut mono = Vec::with_capacity(frames);
    for f in 0..frames {
        let sum: f64 = interleaved[f * channels..(f + 1) * channels].iter().sum();
        mono.push(sum / channels as f64);
    }
    Ok((mono, spec.sample_rate))
}

/// Reads a label-span sidecar CSV (`recording_id,start_s,end_s`, one header
/// row) into spans grouped by recording id.
pub fn read_label_spans<P: AsRef<Path>>(path: P) -> Result<BTreeMap<String, Vec<(f64, f64)>>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if !header.trim_start().starts_with("recording_id") {
        return Err(Error::Format {
            path: path.display().to_string(),
            reason: format!("expected header `recording_id,start_s,end_s`, got `{header}`"),
        });
    }
    let mut spans: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let bad = |reason: String| Error::Format {
            path: path.display().to_string(),
            reason: format!("line {}: {reason}", lineno + 2),
        };
        let id = parts
            .next()
            .ok_or_else(|| bad("missing recording_id".into()))?
            .trim()
            .to_string();
        let start: f64 = parts
            .next()
            .ok_or_else(|| bad("missing start_s".into()))?
            .trim()
            .parse()
            .map_err(|e| bad(format!("start_s: {e}")))?;
        let end: f64 = parts
            .next()
            .ok_or_else(|| bad("missing end_s".into()))?
            .trim()
            .parse()
            .map_err(|e| bad(format!("end_s: {e}")))?;
        spans.entry(id).or_default().push((start, end));
    }
    Ok(spans)
}

/// Writes a clip manifest CSV: `source_id,offset_s,label` with a header row.
pub fn write_clip_manifest<P: AsRef<Path>>(path: P, clips: &[LabeledClip]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "source_id,offset_s,label")?;
    for c in clips {
        writeln!(out, "{},{},{}", c.source_id, c.offset_s, c.label)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a clip manifest CSV back as (source_id, offset_s, label) rows.
pub fn read_clip_manifest<P: AsRef<Path>>(path: P) -> Result<Vec<(String, f64, Label)>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if !header.trim_start().starts_with("source_id") {
        return Err(Error::Format {
            path: path.display().to_string(),
            reason: format!("expected header `source_id,offset_s,label`, got `{header}`"),
        });
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| Error::Format {
            path: path.display().to_string(),
            reason: format!("line {}: {reason}", lineno + 2),
        };
        let mut parts = line.split(',');
        let id = parts
            .next()
            .ok_or_else(|| bad("missing source_id".into()))?
            .trim()
            .to_string();
        let offset: f64 = parts
            .next()
            .ok_or_else(|| bad("missing offset_s".into()))?
            .trim()
            .parse()
            .map_err(|e| bad(format!("offset_s: {e}")))?;
        let label = match parts.next().map(str::trim) {
            Some("1") | Some("+1") => Label::Positive,
            Some("-1") => Label::Negative,
            other => return Err(bad(format!("label must be 1 or -1, got {other:?}"))),
        };
        rows.push((id, offset, label));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(duration_s: f64, sample_rate: u32, spans: Vec<(f64, f64)>) -> Recording {
        let n = (duration_s * sample_rate as f64).round() as usize;
        Recording {
            id: "test".into(),
            samples: (0..n).map(|i| (i as f64 * 0.001).sin() * 0.5).collect(),
            sample_rate,
            label_spans: spans,
        }
    }

    #[test]
    fn segment_aligned_span_labels_first_half_positive() {
        let r = rec(1.0, 8000, vec![(0.0, 0.5)]);
        let clips = segment(&r, 0.1, 0.5).unwrap();
        assert_eq!(clips.len(), 10);
        for (i, c) in clips.iter().enumerate() {
            let expect = if i < 5 { Label::Positive } else { Label::Negative };
            assert_eq!(c.label, expect, "clip {i}");
            assert_eq!(c.samples.len(), 800);
        }
    }

    #[test]
    fn segment_short_recording_is_empty() {
        let r = rec(0.05, 8000, vec![]);
        assert!(segment(&r, 0.1, 0.5).unwrap().is_empty());
    }

    #[test]
    fn segment_partial_coverage_below_half_is_negative() {
        // span covers 40% of the single clip
        let r = rec(0.1, 8000, vec![(0.0, 0.04)]);
        let clips = segment(&r, 0.1, 0.5).unwrap();
        assert_eq!(clips.len(), 1);
        assert_eq!(clips[0].label, Label::Negative);
        // and 60% coverage flips it
        let r2 = rec(0.1, 8000, vec![(0.0, 0.06)]);
        assert_eq!(segment(&r2, 0.1, 0.5).unwrap()[0].label, Label::Positive);
    }

    #[test]
    fn segment_concatenation_reproduces_prefix() {
        let r = rec(1.003, 8000, vec![]);
        let clips = segment(&r, 0.1, 0.5).unwrap();
        let rebuilt: Vec<f64> = clips.iter().flat_map(|c| c.samples.clone()).collect();
        assert_eq!(rebuilt.len(), 8000);
        assert_eq!(&rebuilt[..], &r.samples[..8000]);
    }

    #[test]
    fn segment_rejects_bad_spans() {
        let mut r = rec(1.0, 8000, vec![(0.5, 0.2)]);
        let err = segment(&r, 0.1, 0.5).unwrap_err();
        assert!(err.to_string().contains("0.5"), "{err}");
        r.label_spans = vec![(0.0, 2.0)];
        assert!(segment(&r, 0.1, 0.5).is_err());
        r.label_spans = vec![(0.0, 0.4), (0.3, 0.6)];
        assert!(segment(&r, 0.1, 0.5).is_err());
    }

    fn clips_with_labels(n_pos: usize, n_neg: usize) -> Vec<LabeledClip> {
        (0..n_pos + n_neg)
            .map(|i| LabeledClip {
                source_id: format!("c{i}"),
                offset_s: i as f64 * 0.1,
                samples: vec![0.0; 8],
                label: if i < n_pos { Label::Positive } else { Label::Negative },
            })
            .collect()
    }

    #[test]
    fn balance_already_balanced_keeps_counts() {
        let clips = clips_with_labels(36, 36);
        let out = balance(&clips, 1).unwrap();
        assert_eq!(out.len(), 72);
        let pos = out.iter().filter(|c| c.label == Label::Positive).count();
        assert_eq!(pos, 36);
    }

    #[test]
    fn balance_downsamples_majority() {
        let clips = clips_with_labels(100, 40);
        let out = balance(&clips, 7).unwrap();
        assert_eq!(out.len(), 80);
        let pos = out.iter().filter(|c| c.label == Label::Positive).count();
        assert_eq!(pos, 40);
    }

    #[test]
    fn balance_is_deterministic() {
        let clips = clips_with_labels(30, 50);
        let a = balance(&clips, 99).unwrap();
        let b = balance(&clips, 99).unwrap();
        let ids_a: Vec<&str> = a.iter().map(|c| c.source_id.as_str()).collect();
        let ids_b: Vec<&str> = b.iter().map(|c| c.source_id.as_str()).collect();
        assert_eq!(ids_a, ids_b);
    }

    #[test]
    fn balance_requires_both_classes() {
        let clips = clips_with_labels(10, 0);
        assert!(matches!(
            balance(&clips, 0),
            Err(Error::ClassAbsent { class: "negative" })
        ));
    }

    #[test]
    fn split_sizes_match_fraction() {
        let s = split_indices(14720, 0.10, 0).unwrap();
        assert_eq!(s.train.len(), 1472);
        assert_eq!(s.test.len(), 13248);
    }

    #[test]
    fn split_is_deterministic_and_seed_sensitive() {
        let a = split_indices(10, 0.5, 11).unwrap();
        let b = split_indices(10, 0.5, 11).unwrap();
        assert_eq!(a, b);
        let c = split_indices(10, 0.5, 12).unwrap();
        assert_ne!(a.train, c.train, "seeds 11 and 12 should differ here");
    }

    #[test]
    fn split_rejects_bad_fraction() {
        assert!(split_indices(10, 0.0, 0).is_err());
        assert!(split_indices(10, 1.0, 0).is_err());
    }

    #[test]
    fn wav_round_trip_16_bit_and_stereo_downmix() {
        let dir = tempfile::tempdir().unwrap();
        let mono_path = dir.path().join("mono.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 8000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&mono_path, spec).unwrap();
        for i in 0..800i32 {
            w.write_sample((i * 40 - 16000) as i16).unwrap();
        }
        w.finalize().unwrap();
        let (samples, sr) = load_wav(&mono_path).unwrap();
        assert_eq!(sr, 8000);
        assert_eq!(samples.len(), 800);
        assert!((samples[0] - (-16000.0 / 32768.0)).abs() < 1e-12);

        let stereo_path = dir.path().join("stereo.wav");
        let spec2 = hound::WavSpec {
            channels: 2,
            ..spec
        };
        let mut w2 = hound::WavWriter::create(&stereo_path, spec2).unwrap();
        for _ in 0..100 {
            w2.write_sample(1000i16).unwrap();
            w2.write_sample(3000i16).unwrap();
        }
        w2.finalize().unwrap();
        let (mix, _) = load_wav(&stereo_path).unwrap();
        assert_eq!(mix.len(), 100);
        assert!((mix[0] - 2000.0 / 32768.0).abs() < 1e-12);
    }

    #[test]
    fn wav_float32_supported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f32.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 8000,
            bits_per_sample: 32,
            sample_format: hound::SampleFormat::Float,
        };
        let mut w = hound::WavWriter::create(&path, spec).unwrap();
        for i in 0..10 {
            w.write_sample(i as f32 * 0.05).unwrap();
        }
        w.finalize().unwrap();
        let (samples, _) = load_wav(&path).unwrap();
        assert!((samples[3] - 0.15).abs() < 1e-7);
    }

    #[test]
    fn span_csv_and_manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let spans_path = dir.path().join("labels.csv");
        std::fs::write(
            &spans_path,
            "recording_id,start_s,end_s\nrec0,0.0,0.5\nrec0,0.8,1.0\nrec1,0.25,0.75\n",
        )
        .unwrap();
        let spans = read_label_spans(&spans_path).unwrap();
        assert_eq!(spans["rec0"], vec![(0.0, 0.5), (0.8, 1.0)]);
        assert_eq!(spans["rec1"], vec![(0.25, 0.75)]);

        let clips = vec![
            LabeledClip {
                source_id: "rec0".into(),
                offset_s: 0.0,
                samples: vec![0.0],
                label: Label::Positive,
            },
            LabeledClip {
                source_id: "rec0".into(),
                offset_s: 0.1,
                samples: vec![0.0],
                label: Label::Negative,
            },
        ];
        let manifest_path = dir.path().join("clips.csv");
        write_clip_manifest(&manifest_path, &clips).unwrap();
        let rows = read_clip_manifest(&manifest_path).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0], ("rec0".to_string(), 0.0, Label::Positive));
        assert_eq!(rows[1].2, Label::Negative);
    }

    #[test]
    fn span_csv_requires_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "rec0,0.0,0.5\n").unwrap();
        assert!(read_label_spans(&p).is_err());
    }
}
