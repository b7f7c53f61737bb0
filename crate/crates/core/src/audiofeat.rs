//! Audio features for keyframe localization and conditioning.
//!
//! [`mel_spectrogram`] turns a 16 kHz clip into a 128-band log-mel matrix
//! with a fixed length of [`SPECTROGRAM_FRAMES`] columns. The remaining
//! functions describe the token geometry around it: how many patches a
//! strided patchifier yields, how positional embeddings are resampled to a
//! new token count, how tokens are mapped onto video time steps and how the
//! keyframe rows are gathered.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::ingest::{AudioClip, PIPELINE_SAMPLE_RATE};
use crate::matrix::FeatureMatrix;

pub const MEL_BANDS: usize = 128;
pub const WINDOW_SAMPLES: usize = 400;
pub const HOP_SAMPLES: usize = 160;
pub const MEL_FMAX_HZ: f64 = 8000.0;
/// Column count every spectrogram is cropped or padded to. With a 16-wide
/// kernel this gives 19 tokens at stride 10 and 46 at stride 4.
pub const SPECTROGRAM_FRAMES: usize = 196;
pub const PATCH_KERNEL: usize = 16;

/// Log-mel energies, band-major (`values[band * frames + frame]`).
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram {
    frames: usize,
    values: Vec<f64>,
}

impl MelSpectrogram {
    pub fn bands(&self) -> usize {
        MEL_BANDS
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, band: usize, frame: usize) -> f64 {
        self.values[band * self.frames + frame]
    }

    /// Band with the largest value in column `frame` (lowest band on ties).
    pub fn argmax_band(&self, frame: usize) -> usize {
        (0..MEL_BANDS).fold(0, |best, b| {
            if self.get(b, frame) > self.get(best, frame) {
                b
            } else {
                best
            }
        })
    }

    /// One CSV row per band, one column per frame, no header.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for b in 0..MEL_BANDS {
            let row = &self.values[b * self.frames..(b + 1) * self.frames];
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// Slaney mel scale: linear below 1 kHz, logarithmic above.
pub fn hz_to_mel(hz: f64) -> f64 {
    const F_SP: f64 = 200.0 / 3.0;
    const MIN_LOG_HZ: f64 = 1000.0;
    let min_log_mel = MIN_LOG_HZ / F_SP;
    let logstep = 6.4f64.ln() / 27.0;
    if hz >= MIN_LOG_HZ {
        min_log_mel + (hz / MIN_LOG_HZ).ln() / logstep
    } else {
        hz / F_SP
    }
}

pub fn mel_to_hz(mel: f64) -> f64 {
    const F_SP: f64 = 200.0 / 3.0;
    const MIN_LOG_HZ: f64 = 1000.0;
    let min_log_mel = MIN_LOG_HZ / F_SP;
    let logstep = 6.4f64.ln() / 27.0;
    if mel >= min_log_mel {
        MIN_LOG_HZ * (logstep * (mel - min_log_mel)).exp()
    } else {
        F_SP * mel
    }
}

/// Triangular, area-normalized mel filters over the one-sided FFT bins of a
/// [`WINDOW_SAMPLES`]-point transform at 16 kHz. Returns `MEL_BANDS` rows.
pub fn mel_filterbank() -> Vec<Vec<f64>> {
    let n_bins = WINDOW_SAMPLES / 2 + 1;
    let bin_hz = PIPELINE_SAMPLE_RATE as f64 / WINDOW_SAMPLES as f64;
    let mel_max = hz_to_mel(MEL_FMAX_HZ);
    let edges: Vec<f64> = (0..MEL_BANDS + 2)
        .map(|i| mel_to_hz(mel_max * i as f64 / (MEL_BANDS + 1) as f64))
        .collect();
    (0..MEL_BANDS)
        .map(|m| {
            let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            let norm = 2.0 / (hi - lo);
            (0..n_bins)
                .map(|k| {
                    let f = k as f64 * bin_hz;
                    let rise = (f - lo) / (mid - lo);
                    let fall = (hi - f) / (hi - mid);
                    rise.min(fall).max(0.0) * norm
                })
                .collect()
        })
        .collect()
}

/// Periodic Hann window.
fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect()
}

/// 128-band log-mel spectrogram: 25 ms Hann frames every 10 ms (no
/// centering), power spectrum, mel filterbank, `ln(1 + x)`, then the time
/// axis is cropped or zero-padded to [`SPECTROGRAM_FRAMES`].
pub fn mel_spectrogram(clip: &AudioClip) -> Result<MelSpectrogram> {
    if clip.sample_rate != PIPELINE_SAMPLE_RATE {
        return Err(Error::WrongSampleRate(clip.sample_rate));
    }
    if clip.samples.len() < WINDOW_SAMPLES {
        return Err(Error::TooShort(format!(
            "clip has {} samples, one window needs {WINDOW_SAMPLES}",
            clip.samples.len()
        )));
    }
    let raw_frames = (clip.samples.len() - WINDOW_SAMPLES) / HOP_SAMPLES + 1;
    let used = raw_frames.min(SPECTROGRAM_FRAMES);
    let window = hann(WINDOW_SAMPLES);
    let bank = mel_filterbank();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(WINDOW_SAMPLES);
    let n_bins = WINDOW_SAMPLES / 2 + 1;

    let mut values = vec![0.0; MEL_BANDS * SPECTROGRAM_FRAMES];
    let mut buf = vec![Complex::new(0.0, 0.0); WINDOW_SAMPLES];
    let mut power = vec![0.0; n_bins];
    for t in 0..used {
        let start = t * HOP_SAMPLES;
        for (slot, (s, w)) in buf
            .iter_mut()
            .zip(clip.samples[start..start + WINDOW_SAMPLES].iter().zip(&window))
        {
            *slot = Complex::new(s * w, 0.0);
        }
        fft.process(&mut buf);
        for (p, c) in power.iter_mut().zip(&buf) {
            *p = c.norm_sqr();
        }
        for (m, filter) in bank.iter().enumerate() {
            let energy: f64 = filter.iter().zip(&power).map(|(f, p)| f * p).sum();
            values[m * SPECTROGRAM_FRAMES + t] = energy.ln_1p();
        }
    }
    Ok(MelSpectrogram {
        frames: SPECTROGRAM_FRAMES,
        values,
    })
}

/// Number of patches a strided patchifier of width `kernel` produces along
/// an axis of length `t_a`.
pub fn patch_token_count(t_a: usize, kernel: usize, stride: usize) -> Result<usize> {
    if stride == 0 {
        return Err(Error::InvalidParameter("stride must be >= 1".into()));
    }
    if kernel == 0 {
        return Err(Error::InvalidParameter("kernel must be >= 1".into()));
    }
    if kernel > t_a {
        return Err(Error::KernelTooLarge { kernel, len: t_a });
    }
    Ok((t_a - kernel) / stride + 1)
}

/// Resamples `n` embedding rows to `n_new` by per-channel linear
/// interpolation over normalized positions. Endpoint rows are copied.
pub fn interp_pos_embeddings(emb: &FeatureMatrix, n_new: usize) -> Result<FeatureMatrix> {
    if n_new == 0 {
        return Err(Error::InvalidParameter("target length must be >= 1".into()));
    }
    let n = emb.rows();
    let c = emb.cols();
    let mut out = Vec::with_capacity(n_new * c);
    for j in 0..n_new {
        if n == 1 || n_new == 1 {
            out.extend_from_slice(emb.row(0));
            continue;
        }
        let num = j * (n - 1);
        let den = n_new - 1;
        let i0 = num / den;
        if num.is_multiple_of(den) {
            out.extend_from_slice(emb.row(i0));
            continue;
        }
        let frac = (num % den) as f64 / den as f64;
        let (a, b) = (emb.row(i0), emb.row(i0 + 1));
        out.extend(a.iter().zip(b).map(|(x, y)| x + (y - x) * frac));
    }
    FeatureMatrix::new(n_new, c, out)
}

/// Token row used for time step `s` when spreading `n` tokens over `t`
/// steps: `round(s·(n−1)/(t−1))`, halves away from zero.
pub fn token_for_step(s: usize, n: usize, t: usize) -> usize {
    if t <= 1 {
        return 0;
    }
    (2 * s * (n - 1) + (t - 1)) / (2 * (t - 1))
}

/// Maps a token sequence onto `t` time steps, one nearest token per step.
pub fn segment_features(tokens: &FeatureMatrix, t: usize) -> Result<FeatureMatrix> {
    if t == 0 {
        return Err(Error::InvalidParameter("step count must be >= 1".into()));
    }
    let n = tokens.rows();
    let mut out = Vec::with_capacity(t * tokens.cols());
    for s in 0..t {
        out.extend_from_slice(tokens.row(token_for_step(s, n, t)));
    }
    FeatureMatrix::new(t, tokens.cols(), out)
}

/// Rows of `perstep` at `indices`, in the given order.
pub fn gather_keyframe_rows(perstep: &FeatureMatrix, indices: &[usize]) -> Result<FeatureMatrix> {
    let t = perstep.rows();
    if let Some(&bad) = indices.iter().find(|&&i| i >= t) {
        return Err(Error::IndexOutOfRange { index: bad, len: t });
    }
    let mut out = Vec::with_capacity(indices.len() * perstep.cols());
    for &i in indices {
        out.extend_from_slice(perstep.row(i));
    }
    FeatureMatrix::new(indices.len(), perstep.cols(), out)
}

/// Mean absolute error over all entries.
pub fn l1_loss(pred: &FeatureMatrix, gt: &FeatureMatrix) -> Result<f64> {
    pred.ensure_same_shape(gt, "l1 loss operands")?;
    let sum: f64 = pred.values().iter().zip(gt.values()).map(|(a, b)| (a - b).abs()).sum();
    Ok(sum / pred.values().len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(values: &[f64]) -> FeatureMatrix {
        FeatureMatrix::new(values.len(), 1, values.to_vec()).unwrap()
    }

    #[test]
    fn patch_counts() {
        assert_eq!(patch_token_count(196, 16, 10).unwrap(), 19);
        assert_eq!(patch_token_count(196, 16, 4).unwrap(), 46);
        assert_eq!(patch_token_count(16, 16, 4).unwrap(), 1);
        assert!(matches!(patch_token_count(10, 16, 4), Err(Error::KernelTooLarge { .. })));
        assert!(patch_token_count(196, 16, 0).is_err());
    }

    #[test]
    fn mel_scale_roundtrip() {
        for hz in [0.0, 440.0, 1000.0, 3000.0, 8000.0] {
            assert!((mel_to_hz(hz_to_mel(hz)) - hz).abs() < 1e-9);
        }
        assert!((hz_to_mel(1000.0) - 15.0).abs() < 1e-12);
    }

    #[test]
    fn silence_is_zero() {
        let clip = AudioClip {
            samples: vec![0.0; 32000],
            sample_rate: 16000,
        };
        let m = mel_spectrogram(&clip).unwrap();
        assert_eq!((m.bands(), m.frames()), (128, 196));
        assert!(m.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn short_clip_is_zero_padded() {
        let clip = AudioClip {
            samples: (0..1000).map(|i| (i as f64 * 0.3).sin() * 0.5).collect(),
            sample_rate: 16000,
        };
        let m = mel_spectrogram(&clip).unwrap();
        // (1000 - 400) / 160 + 1 = 4 real frames.
        assert!((0..MEL_BANDS).any(|b| m.get(b, 3) > 0.0));
        assert!((0..MEL_BANDS).all(|b| m.get(b, 4) == 0.0));
        assert!(m.values().iter().all(|v| v.is_finite() && *v >= 0.0));
    }

    #[test]
    fn mel_input_errors() {
        let wrong_rate = AudioClip {
            samples: vec![0.0; 32000],
            sample_rate: 44100,
        };
        assert!(matches!(mel_spectrogram(&wrong_rate), Err(Error::WrongSampleRate(44100))));
        let short = AudioClip {
            samples: vec![0.0; 399],
            sample_rate: 16000,
        };
        assert!(matches!(mel_spectrogram(&short), Err(Error::TooShort(_))));
    }

    #[test]
    fn interp_identity_and_midpoint() {
        let m = FeatureMatrix::from_rows(&[vec![0.3, 1.0], vec![0.7, -2.0], vec![1.1, 5.0]]).unwrap();
        assert_eq!(interp_pos_embeddings(&m, 3).unwrap(), m);
        let two = col(&[0.0, 2.0]);
        assert_eq!(interp_pos_embeddings(&two, 3).unwrap().values(), &[0.0, 1.0, 2.0]);
        let single = col(&[4.0]);
        assert_eq!(interp_pos_embeddings(&single, 5).unwrap().values(), &[4.0; 5]);
    }

    #[test]
    fn interp_roundtrip_keeps_endpoints() {
        let m = col(&[0.0, 1.0, 4.0, 9.0, 16.0]);
        let back = interp_pos_embeddings(&interp_pos_embeddings(&m, 17).unwrap(), 5).unwrap();
        assert_eq!(back.get(0, 0), 0.0);
        assert_eq!(back.get(4, 0), 16.0);
        // 17 - 1 is a multiple of 5 - 1, so every original row is a sample point.
        assert_eq!(back, m);
    }

    #[test]
    fn segment_mapping() {
        let tokens = col(&(0..46).map(|i| i as f64).collect::<Vec<_>>());
        let s = segment_features(&tokens, 48).unwrap();
        assert_eq!(s.get(0, 0), 0.0);
        assert_eq!(s.get(47, 0), 45.0);
        assert_eq!(segment_features(&tokens, 46).unwrap(), tokens);
        let one = col(&[3.0]);
        assert_eq!(segment_features(&one, 7).unwrap().values(), &[3.0; 7]);
        assert_eq!(segment_features(&tokens, 1).unwrap().values(), &[0.0]);
    }

    #[test]
    fn gather_rows() {
        let m = col(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(gather_keyframe_rows(&m, &[0, 2, 5]).unwrap().values(), &[0.0, 2.0, 5.0]);
        assert_eq!(gather_keyframe_rows(&m, &[0, 1, 2, 3, 4, 5]).unwrap(), m);
        assert!(matches!(
            gather_keyframe_rows(&m, &[6]),
            Err(Error::IndexOutOfRange { index: 6, len: 6 })
        ));
    }

    #[test]
    fn l1_cases() {
        let a = FeatureMatrix::from_rows(&[vec![0.0, 2.0]]).unwrap();
        let b = FeatureMatrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        assert_eq!(l1_loss(&a, &b).unwrap(), 1.5);
        assert_eq!(l1_loss(&a, &a).unwrap(), 0.0);
        let x = FeatureMatrix::zeros(2, 3).unwrap();
        let y = FeatureMatrix::zeros(3, 2).unwrap();
        assert!(matches!(l1_loss(&x, &y), Err(Error::ShapeMismatch(_))));
    }
}
