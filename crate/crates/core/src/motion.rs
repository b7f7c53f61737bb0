//! Motion curves and their extrema.
//!
//! A raw curve is smoothed with a short moving average, min-max normalized
//! to `[0, 1]`, and then scanned for peaks (local maxima) and valleys (peaks
//! of the negated curve). Peaks must clear a topographic-prominence floor and
//! keep a minimum spacing; the defaults are a window of 5, a spacing of 5
//! frames and a prominence of 0.1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SMOOTH_WINDOW: usize = 5;
pub const DEFAULT_MIN_DISTANCE: usize = 5;
pub const DEFAULT_MIN_PROMINENCE: f64 = 0.1;

/// Processing stage of a [`MotionCurve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Raw,
    Smoothed,
    Normalized,
}

/// One non-negative motion score per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionCurve {
    values: Vec<f64>,
    stage: Stage,
}

impl MotionCurve {
    pub fn new(values: Vec<f64>, stage: Stage) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::TooShort("motion curve needs at least one value".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvariantViolation(format!(
                "motion scores must be finite and non-negative, got {v}"
            )));
        }
        if stage == Stage::Normalized && values.iter().any(|&v| v > 1.0) {
            return Err(Error::InvariantViolation(
                "normalized curve has values above 1".into(),
            ));
        }
        Ok(Self { values, stage })
    }

    pub fn raw(values: Vec<f64>) -> Result<Self> {
        Self::new(values, Stage::Raw)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `max(curve) - curve`, which stays inside `[0, 1]` for a normalized
    /// curve and turns valleys into peaks.
    pub fn negated(&self) -> MotionCurve {
        let top = self.max();
        MotionCurve {
            values: self.values.iter().map(|&v| top - v).collect(),
            stage: self.stage,
        }
    }
}

/// Peak and valley frame indices, each sorted ascending.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extrema {
    pub peaks: Vec<usize>,
    pub valleys: Vec<usize>,
}

impl Extrema {
    /// Detects both peaks and valleys with the same spacing and prominence.
    pub fn detect(curve: &MotionCurve, min_distance: usize, min_prominence: f64) -> Result<Self> {
        Ok(Self {
            peaks: detect_peaks(curve, min_distance, min_prominence)?,
            valleys: detect_valleys(curve, min_distance, min_prominence)?,
        })
    }
}

/// Centered moving average. Near the ends the window is truncated to the
/// samples that exist and the mean is taken over those, so constant curves
/// pass through unchanged.
pub fn smooth(curve: &MotionCurve, window: usize) -> Result<MotionCurve> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::InvalidWindow(window));
    }
    let half = window / 2;
    let v = curve.values();
    let n = v.len();
    let out = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            let span = &v[lo..=hi];
            span.iter().sum::<f64>() / span.len() as f64
        })
        .collect();
    MotionCurve::new(out, Stage::Smoothed)
}

/// Min-max normalization to `[0, 1]`; a constant curve maps to all zeros.
pub fn normalize(curve: &MotionCurve) -> MotionCurve {
    let (lo, hi) = (curve.min(), curve.max());
    let range = hi - lo;
    let values = if range > 0.0 {
        curve
            .values()
            .iter()
            .map(|&v| ((v - lo) / range).clamp(0.0, 1.0))
            .collect()
    } else {
        vec![0.0; curve.len()]
    };
    MotionCurve {
        values,
        stage: Stage::Normalized,
    }
}

/// Local maxima of `x`. A flat run higher than both of its outer neighbours
/// yields a single maximum at its leftmost index; runs touching either end
/// of the array are not maxima.
pub fn local_maxima(x: &[f64]) -> Vec<usize> {
    let n = x.len();
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if x[i - 1] < x[i] {
            let mut ahead = i + 1;
            while ahead < n - 1 && x[ahead] == x[i] {
                ahead += 1;
            }
            if x[ahead] < x[i] {
                out.push(i);
                i = ahead;
                continue;
            }
        }
        i += 1;
    }
    out
}

/// Topographic prominence of the sample at `peak`: its height minus the
/// higher of the two lowest points met while walking outwards until a
/// strictly higher sample or the end of the array.
pub fn prominence(x: &[f64], peak: usize) -> f64 {
    let h = x[peak];
    let mut left_min = h;
    for &v in x[..peak].iter().rev() {
        if v > h {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = h;
    for &v in &x[peak + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

pub fn prominences(curve: &MotionCurve, peaks: &[usize]) -> Vec<f64> {
    peaks.iter().map(|&p| prominence(curve.values(), p)).collect()
}

/// Peaks of a normalized curve.
///
/// Candidates are local maxima whose prominence reaches `min_prominence`.
/// Spacing is then enforced greedily: candidates are visited by descending
/// height (ties by ascending index) and any candidate closer than
/// `min_distance` to an already kept peak is dropped.
pub fn detect_peaks(curve: &MotionCurve, min_distance: usize, min_prominence: f64) -> Result<Vec<usize>> {
    if curve.stage() != Stage::Normalized {
        return Err(Error::NotNormalized);
    }
    let x = curve.values();
    let candidates: Vec<usize> = local_maxima(x)
        .into_iter()
        .filter(|&p| prominence(x, p) >= min_prominence)
        .collect();
    Ok(enforce_distance(x, candidates, min_distance))
}

fn enforce_distance(x: &[f64], mut candidates: Vec<usize>, min_distance: usize) -> Vec<usize> {
    if min_distance <= 1 {
        return candidates;
    }
    let mut order = candidates.clone();
    order.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::with_capacity(order.len());
    for p in order {
        if kept.iter().all(|&k| k.abs_diff(p) >= min_distance) {
            kept.push(p);
        }
    }
    candidates.retain(|p| kept.contains(p));
    candidates
}

/// Valleys of a normalized curve: peaks of `max(curve) - curve`.
pub fn detect_valleys(curve: &MotionCurve, min_distance: usize, min_prominence: f64) -> Result<Vec<usize>> {
    if curve.stage() != Stage::Normalized {
        return Err(Error::NotNormalized);
    }
    detect_peaks(&curve.negated(), min_distance, min_prominence)
}
