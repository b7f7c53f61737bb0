//! Reference kernels for the conditioning arithmetic: single-head scaled
//! dot-product attention, gated three-way fusion, and multimodal
//! classifier-free guidance. All weights are explicit inputs.

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

/// Image and audio guidance scales used for both keyframe generation and
/// interpolation. The text scale defaults to 1, which passes the text
/// delta through unchanged.
pub const DEFAULT_IMAGE_SCALE: f64 = 2.0;
pub const DEFAULT_TEXT_SCALE: f64 = 1.0;
pub const DEFAULT_AUDIO_SCALE: f64 = 7.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidanceScales {
    pub s_img: f64,
    pub s_txt: f64,
    pub s_aud: f64,
}

impl Default for GuidanceScales {
    fn default() -> Self {
        Self {
            s_img: DEFAULT_IMAGE_SCALE,
            s_txt: DEFAULT_TEXT_SCALE,
            s_aud: DEFAULT_AUDIO_SCALE,
        }
    }
}

impl GuidanceScales {
    pub fn new(s_img: f64, s_txt: f64, s_aud: f64) -> Self {
        Self { s_img, s_txt, s_aud }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionWeights {
    pub lambda1: f64,
    pub lambda2: f64,
}

/// Key and value projections for one conditioning modality.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyValue {
    pub keys: FeatureMatrix,
    pub values: FeatureMatrix,
}

impl KeyValue {
    pub fn new(keys: FeatureMatrix, values: FeatureMatrix) -> Result<Self> {
        if keys.rows() != values.rows() {
            return Err(Error::ShapeMismatch(format!(
                "{} keys but {} values",
                keys.rows(),
                values.rows()
            )));
        }
        Ok(Self { keys, values })
    }
}

/// Row-wise `softmax(q·kᵀ / √d)`, shape `n × m`.
pub fn attention_weights(q: &FeatureMatrix, k: &FeatureMatrix) -> Result<FeatureMatrix> {
    if q.cols() != k.cols() {
        return Err(Error::ShapeMismatch(format!(
            "query width {} vs key width {}",
            q.cols(),
            k.cols()
        )));
    }
    let scale = 1.0 / (q.cols() as f64).sqrt();
    let (n, m) = (q.rows(), k.rows());
    let mut w = Vec::with_capacity(n * m);
    for i in 0..n {
        let qi = q.row(i);
        let logits: Vec<f64> = (0..m)
            .map(|j| qi.iter().zip(k.row(j)).map(|(a, b)| a * b).sum::<f64>() * scale)
            .collect();
        let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
        let z: f64 = exps.iter().sum();
        w.extend(exps.iter().map(|e| e / z));
    }
    Ok(FeatureMatrix::from_parts_unchecked(n, m, w))
}

pub fn attention(q: &FeatureMatrix, k: &FeatureMatrix, v: &FeatureMatrix) -> Result<FeatureMatrix> {
    if k.rows() != v.rows() {
        return Err(Error::ShapeMismatch(format!(
            "{} keys but {} values",
            k.rows(),
            v.rows()
        )));
    }
    attention_weights(q, k)?.matmul(v)
}

/// `SA(Q, K_text, V_text) + λ1·SA(Q, K_audio, V_audio) + λ2·SA(Q, K_img, V_img)`
/// with `Q = f_in · w_q`.
pub fn fuse_features(
    f_in: &FeatureMatrix,
    w_q: &FeatureMatrix,
    text: &KeyValue,
    audio: &KeyValue,
    image: &KeyValue,
    w: FusionWeights,
) -> Result<FeatureMatrix> {
    let q = f_in.matmul(w_q)?;
    let t = attention(&q, &text.keys, &text.values)?;
    let a = attention(&q, &audio.keys, &audio.values)?;
    let i = attention(&q, &image.keys, &image.values)?;
    t.ensure_same_shape(&a, "audio attention output")?;
    t.ensure_same_shape(&i, "image attention output")?;
    let values = t
        .values()
        .iter()
        .zip(a.values())
        .zip(i.values())
        .map(|((t, a), i)| t + w.lambda1 * a + w.lambda2 * i)
        .collect();
    FeatureMatrix::new(t.rows(), t.cols(), values)
}

/// Guided noise estimate from the four nested conditioning tiers:
///
/// ```text
/// e_none + s_img·(e_img − e_none) + s_txt·(e_img_txt − e_img) + s_aud·(e_full − e_img_txt)
/// ```
///
/// Evaluated in the regrouped form
/// `(1−s_img)·e_none + (s_img−s_txt)·e_img + (s_txt−s_aud)·e_img_txt + s_aud·e_full`,
/// which returns `e_full` exactly for unit scales and `e_none` exactly for
/// zero scales.
pub fn cfg_combine(
    e_none: &FeatureMatrix,
    e_img: &FeatureMatrix,
    e_img_txt: &FeatureMatrix,
    e_full: &FeatureMatrix,
    s: GuidanceScales,
) -> Result<FeatureMatrix> {
    e_none.ensure_same_shape(e_img, "image-conditioned estimate")?;
    e_none.ensure_same_shape(e_img_txt, "image+text-conditioned estimate")?;
    e_none.ensure_same_shape(e_full, "fully conditioned estimate")?;
    if ![s.s_img, s.s_txt, s.s_aud].iter().all(|x| x.is_finite()) {
        return Err(Error::InvalidParameter("guidance scales must be finite".into()));
    }
    let c_none = 1.0 - s.s_img;
    let c_img = s.s_img - s.s_txt;
    let c_txt = s.s_txt - s.s_aud;
    let c_full = s.s_aud;
    let values = e_none
        .values()
        .iter()
        .zip(e_img.values())
        .zip(e_img_txt.values())
        .zip(e_full.values())
        .map(|(((n, i), t), f)| c_none * n + c_img * i + c_txt * t + c_full * f)
        .collect();
    FeatureMatrix::new(e_none.rows(), e_none.cols(), values)
}
