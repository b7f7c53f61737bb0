//! End-to-end helpers shared by the command line and the C ABI.

use crate::error::Result;
use crate::motion::{
    normalize, smooth, Extrema, MotionCurve, DEFAULT_MIN_DISTANCE, DEFAULT_MIN_PROMINENCE,
    DEFAULT_SMOOTH_WINDOW,
};
use crate::select::{select_keyframes, KeyframeSchedule, SelectionParams};

/// Smoothing and detection settings for turning raw scores into extrema.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionParams {
    pub smooth_window: usize,
    pub min_distance: usize,
    pub min_prominence: f64,
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self {
            smooth_window: DEFAULT_SMOOTH_WINDOW,
            min_distance: DEFAULT_MIN_DISTANCE,
            min_prominence: DEFAULT_MIN_PROMINENCE,
        }
    }
}

/// A raw curve after smoothing and normalization, with its extrema.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub curve: MotionCurve,
    pub extrema: Extrema,
}

pub fn analyze(raw: &MotionCurve, params: &DetectionParams) -> Result<Analysis> {
    let curve = normalize(&smooth(raw, params.smooth_window)?);
    let extrema = Extrema::detect(&curve, params.min_distance, params.min_prominence)?;
    Ok(Analysis { curve, extrema })
}

/// Smooth, normalize, detect extrema and select keyframes in one call.
pub fn schedule_from_scores(
    raw: &MotionCurve,
    detection: &DetectionParams,
    selection: &SelectionParams,
) -> Result<(Analysis, KeyframeSchedule)> {
    let analysis = analyze(raw, detection)?;
    let schedule = select_keyframes(&analysis.curve, &analysis.extrema, selection)?;
    Ok((analysis, schedule))
}
