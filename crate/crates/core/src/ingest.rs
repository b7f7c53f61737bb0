//! Reading frames and audio from disk, and (de)serializing curves and
//! schedules.
//!
//! Frames are binary PGM (`P5`, maxval 255) files; audio is 16-bit PCM mono
//! WAV. Every writer goes through [`write_atomic`] so a failed write never
//! leaves a partial file behind.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::motion::MotionCurve;
use crate::select::KeyframeSchedule;

pub const PIPELINE_SAMPLE_RATE: u32 = 16_000;

/// A single grayscale frame with luminance in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl Frame {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvariantViolation("frame dimensions must be positive".into()));
        }
        if pixels.len() != height * width {
            return Err(Error::InvariantViolation(format!(
                "{height}x{width} frame needs {} pixels, got {}",
                height * width,
                pixels.len()
            )));
        }
        if pixels.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvariantViolation("pixel values must lie in [0, 1]".into()));
        }
        Ok(Self {
            height,
            width,
            pixels,
        })
    }

    /// Builds a frame from 8-bit luminance, scaling each byte by 1/255.
    pub fn from_bytes(height: usize, width: usize, bytes: &[u8]) -> Result<Self> {
        Self::new(height, width, bytes.iter().map(|&b| b as f64 / 255.0).collect())
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    /// Encodes the frame as binary PGM, rounding back to 8 bits.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.pixels.iter().map(|&p| (p * 255.0).round() as u8));
        out
    }
}

/// Ordered frames sharing one size.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    frames: Vec<Frame>,
    fps: f64,
}

impl FrameSequence {
    pub fn new(frames: Vec<Frame>, fps: f64) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::TooShort("frame sequence needs at least one frame".into()))?;
        let dims = first.dims();
        if let Some(f) = frames.iter().find(|f| f.dims() != dims) {
            return Err(Error::DimensionMismatch {
                expected: dims,
                found: f.dims(),
            });
        }
        Ok(Self { frames, fps })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }
}

/// Mono audio with samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

/// Parses a binary PGM image. Only `P5` with maxval 255 is accepted.
pub fn parse_pgm(bytes: &[u8], path: &Path) -> Result<Frame> {
    let malformed = |reason: &str| Error::MalformedPgm {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(malformed("missing P5 magic"));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // Skip whitespace and comment lines between header tokens.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(malformed("truncated header"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| malformed("header value out of range"))?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(malformed(&format!("maxval {maxval}, expected 255")));
    }
    if width == 0 || height == 0 {
        return Err(malformed("zero dimension"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(malformed("missing separator before raster"));
    }
    pos += 1;
    let raster = &bytes[pos..];
    let need = width * height;
    if raster.len() < need {
        return Err(malformed(&format!(
            "raster has {} bytes, expected {need}",
            raster.len()
        )));
    }
    Frame::from_bytes(height, width, &raster[..need])
}

pub fn load_pgm(path: &Path) -> Result<Frame> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pgm(&bytes, path)
}

/// Loads every `.pgm` file in `dir`, ordered by file name.
pub fn load_frame_sequence(dir: &Path, fps: f64) -> Result<FrameSequence> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| e.eq_ignore_ascii_case("pgm"))
        })
        .collect();
    if paths.is_empty() {
        return Err(Error::EmptyDirectory(dir.to_path_buf()));
    }
    paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    let frames = paths
        .iter()
        .map(|p| load_pgm(p))
        .collect::<Result<Vec<_>>>()?;
    FrameSequence::new(frames, fps)
}

/// Reads a 16-bit PCM mono WAV. With `strict`, any rate other than 16 kHz
/// is rejected.
pub fn load_wav(path: &Path, strict: bool) -> Result<AudioClip> {
    let reader = hound::WavReader::open(path).map_err(|e| wav_error(path, e))?;
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::UnsupportedEncoding(format!(
            "{:?} with {} bits per sample",
            spec.sample_format, spec.bits_per_sample
        )));
    }
    if spec.channels != 1 {
        return Err(Error::UnsupportedChannels(spec.channels));
    }
    if strict && spec.sample_rate != PIPELINE_SAMPLE_RATE {
        return Err(Error::UnsupportedRate(spec.sample_rate));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| v as f64 / 32768.0))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| wav_error(path, e))?;
    if samples.is_empty() {
        return Err(Error::TooShort("WAV file has no samples".into()));
    }
    Ok(AudioClip {
        samples,
        sample_rate: spec.sample_rate,
    })
}

fn wav_error(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::io(path, io),
        hound::Error::Unsupported => Error::UnsupportedEncoding("unsupported WAV layout".into()),
        other => Error::Parse(format!("{}: {other}", path.display())),
    }
}

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Renders a curve as `index,score` CSV with a header row. Values use the
/// shortest decimal form that reads back to the same `f64`.
pub fn scores_to_csv(curve: &MotionCurve) -> String {
    let mut out = String::from("index,score\n");
    for (i, v) in curve.values().iter().enumerate() {
        out.push_str(&format!("{i},{v}\n"));
    }
    out
}

pub fn parse_scores_csv(text: &str) -> Result<MotionCurve> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .clone();
    if headers.len() != 2 || &headers[0] != "index" || &headers[1] != "score" {
        return Err(Error::Parse(format!(
            "expected header `index,score`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut values = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        let line = row + 2;
        if record.len() != 2 {
            return Err(Error::Parse(format!("line {line}: expected 2 fields")));
        }
        let index: usize = record[0]
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("line {line}: bad index `{}`", &record[0])))?;
        if index != row {
            return Err(Error::Parse(format!(
                "line {line}: index {index} out of sequence, expected {row}"
            )));
        }
        let score: f64 = record[1]
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("line {line}: bad score `{}`", &record[1])))?;
        if !score.is_finite() {
            return Err(Error::Parse(format!("line {line}: non-finite score")));
        }
        values.push(score);
    }
    MotionCurve::raw(values)
}

pub fn write_scores_csv(curve: &MotionCurve, path: &Path) -> Result<()> {
    write_atomic(path, scores_to_csv(curve).as_bytes())
}

pub fn read_scores_csv(path: &Path) -> Result<MotionCurve> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scores_csv(&text)
}

pub fn schedule_to_json(schedule: &KeyframeSchedule) -> Result<String> {
    schedule.validate()?;
    let mut s = serde_json::to_string_pretty(schedule).map_err(|e| Error::Parse(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn parse_schedule_json(text: &str) -> Result<KeyframeSchedule> {
    let schedule: KeyframeSchedule =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    schedule.validate()?;
    Ok(schedule)
}

pub fn write_schedule_json(schedule: &KeyframeSchedule, path: &Path) -> Result<()> {
    write_atomic(path, schedule_to_json(schedule)?.as_bytes())
}

pub fn read_schedule_json(path: &Path) -> Result<KeyframeSchedule> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_schedule_json(&text)
}
