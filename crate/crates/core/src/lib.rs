//! # keysched
//!
//! Keyframe scheduling for audio-driven video generation.
//!
//! The crate covers the deterministic parts of a keyframe-first pipeline:
//!
//! - [`flow`]: dense optical flow between consecutive frames and the
//!   per-frame motion score (sum or mean of `|u| + |v|`).
//! - [`motion`]: smoothing, normalization and peak/valley detection.
//! - [`select`]: keyframe selection from peaks, valleys and proportional
//!   gap filling.
//! - [`audiofeat`]: log-mel spectrograms and the token geometry that maps
//!   audio features onto video frames.
//! - [`schedule`]: conditioning layouts, overlapping window plans and
//!   frame-index embeddings.
//! - [`refops`]: attention, gated fusion and multimodal guidance kernels.
//! - [`eval`]: AP@t for keyframe localization and motion-intensity buckets.
//!
//! ```
//! use keysched::motion::MotionCurve;
//! use keysched::pipeline::{schedule_from_scores, DetectionParams};
//! use keysched::select::SelectionParams;
//!
//! let raw = MotionCurve::raw(vec![1.0; 48]).unwrap();
//! let (_, schedule) =
//!     schedule_from_scores(&raw, &DetectionParams::default(), &SelectionParams::new(12)).unwrap();
//! assert_eq!(schedule.keyframes, (0..48).step_by(4).collect::<Vec<_>>());
//! ```

pub mod audiofeat;
pub mod error;
pub mod eval;
pub mod flow;
pub mod ingest;
pub mod matrix;
pub mod motion;
pub mod pipeline;
pub mod plot;
pub mod refops;
pub mod schedule;
pub mod select;

pub use error::{Error, Result};
pub use flow::{FlowField, FlowParams};
pub use ingest::{AudioClip, Frame, FrameSequence};
pub use matrix::FeatureMatrix;
pub use motion::{Extrema, MotionCurve, Stage};
pub use select::{KeyframeSchedule, SelectionParams};
