//! Conditioning layouts for the generator and interpolator, overlapping
//! window plans for long-clip sampling, and frame-index embeddings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;
use crate::select::KeyframeSchedule;

pub const DEFAULT_WINDOW: usize = 12;
pub const DEFAULT_STRIDE: usize = 6;

/// Length-T conditioning tensor with a 0/1 mask of filled slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionLayout {
    pub total_frames: usize,
    pub mask: Vec<u8>,
    pub features: FeatureMatrix,
}

impl ConditionLayout {
    pub fn conditioned(&self) -> usize {
        self.mask.iter().filter(|&&m| m == 1).count()
    }
}

/// Places keyframe feature rows at their frame positions; every other row
/// is zero.
pub fn interpolation_layout(keyframe_feats: &FeatureMatrix, schedule: &KeyframeSchedule) -> Result<ConditionLayout> {
    let t = schedule.total_frames;
    if keyframe_feats.rows() != schedule.keyframes.len() {
        return Err(Error::CountMismatch(format!(
            "{} feature rows for {} keyframes",
            keyframe_feats.rows(),
            schedule.keyframes.len()
        )));
    }
    if let Some(&bad) = schedule.keyframes.iter().find(|&&k| k >= t) {
        return Err(Error::IndexOutOfRange { index: bad, len: t });
    }
    let mut features = FeatureMatrix::zeros(t, keyframe_feats.cols())?;
    let mut mask = vec![0u8; t];
    for (row, &k) in schedule.keyframes.iter().enumerate() {
        features.row_mut(k).copy_from_slice(keyframe_feats.row(row));
        mask[k] = 1;
    }
    Ok(ConditionLayout {
        total_frames: t,
        mask,
        features,
    })
}

/// Repeats a single first-frame feature row `t` times.
pub fn firstframe_layout(first_feat: &FeatureMatrix, t: usize) -> Result<ConditionLayout> {
    if first_feat.rows() != 1 {
        return Err(Error::ShapeMismatch(format!(
            "first-frame features must be a single row, got {}",
            first_feat.rows()
        )));
    }
    if t == 0 {
        return Err(Error::InvalidParameter("layout length must be >= 1".into()));
    }
    let values = first_feat.row(0).repeat(t);
    Ok(ConditionLayout {
        total_frames: t,
        mask: vec![1; t],
        features: FeatureMatrix::new(t, first_feat.cols(), values)?,
    })
}

/// Overlapping `[start, end)` windows over `total_frames` frames.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowPlan {
    pub total_frames: usize,
    pub window: usize,
    pub stride: usize,
    pub windows: Vec<(usize, usize)>,
}

/// Windows start at multiples of `stride` while they fit; if the last one
/// stops short of `t`, a final window `[t − window, t)` is appended.
pub fn freenoise_windows(t: usize, window: usize, stride: usize) -> Result<WindowPlan> {
    if stride == 0 || window == 0 {
        return Err(Error::BadGeometry("window and stride must be >= 1".into()));
    }
    if stride > window {
        return Err(Error::BadGeometry(format!("stride {stride} exceeds window {window}")));
    }
    if window > t {
        return Err(Error::BadGeometry(format!("window {window} exceeds {t} frames")));
    }
    let mut windows: Vec<(usize, usize)> = (0..)
        .map(|i| i * stride)
        .take_while(|s| s + window <= t)
        .map(|s| (s, s + window))
        .collect();
    if windows.last().is_some_and(|&(_, end)| end != t) {
        windows.push((t - window, t));
    }
    Ok(WindowPlan {
        total_frames: t,
        window,
        stride,
        windows,
    })
}

/// Sinusoidal index embedding: for `k = 0..c/2`, entries `2k` and `2k+1` are
/// `sin(p / 10000^(2k/c))` and `cos(p / 10000^(2k/c))`.
pub fn frame_index_embedding(indices: &[usize], c: usize) -> Result<FeatureMatrix> {
    if c < 2 || !c.is_multiple_of(2) {
        return Err(Error::OddDim(c));
    }
    if indices.is_empty() {
        return Err(Error::InvalidParameter("no indices to embed".into()));
    }
    let freqs: Vec<f64> = (0..c / 2)
        .map(|k| 10000f64.powf(-((2 * k) as f64) / c as f64))
        .collect();
    let mut values = Vec::with_capacity(indices.len() * c);
    for &p in indices {
        for f in &freqs {
            let angle = p as f64 * f;
            values.push(angle.sin());
            values.push(angle.cos());
        }
    }
    FeatureMatrix::new(indices.len(), c, values)
}
