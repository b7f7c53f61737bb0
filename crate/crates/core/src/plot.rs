//! Standalone SVG rendering of a motion curve with its extrema and
//! keyframes.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::motion::{Extrema, MotionCurve};
use crate::select::KeyframeSchedule;

const MARGIN: f64 = 24.0;
const MARKER: f64 = 5.0;

#[derive(Debug, Clone)]
pub struct PlotSpec<'a> {
    pub width: u32,
    pub height: u32,
    pub curve: &'a MotionCurve,
    pub extrema: &'a Extrema,
    pub schedule: Option<&'a KeyframeSchedule>,
}

struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    n: usize,
    lo: f64,
    hi: f64,
}

impl Frame {
    fn x(&self, i: usize) -> f64 {
        if self.n <= 1 {
            self.x0 + self.w / 2.0
        } else {
            self.x0 + self.w * i as f64 / (self.n - 1) as f64
        }
    }

    fn y(&self, v: f64) -> f64 {
        let span = self.hi - self.lo;
        let t = if span > 0.0 { (v - self.lo) / span } else { 0.5 };
        self.y0 + self.h * (1.0 - t)
    }
}

/// Renders the plot. Output is byte-stable for identical inputs.
pub fn render_svg(spec: &PlotSpec) -> Result<String> {
    if spec.width == 0 || spec.height == 0 {
        return Err(Error::InvalidParameter("plot dimensions must be positive".into()));
    }
    let values = spec.curve.values();
    let n = values.len();
    if let Some(&i) = spec
        .extrema
        .peaks
        .iter()
        .chain(&spec.extrema.valleys)
        .chain(spec.schedule.map(|s| s.keyframes.as_slice()).unwrap_or(&[]))
        .find(|&&i| i >= n)
    {
        return Err(Error::IndexOutOfRange { index: i, len: n });
    }
    let (w, h) = (spec.width as f64, spec.height as f64);
    let frame = Frame {
        x0: MARGIN,
        y0: MARGIN,
        w: (w - 2.0 * MARGIN).max(1.0),
        h: (h - 2.0 * MARGIN).max(1.0),
        n,
        lo: values.iter().copied().fold(f64::INFINITY, f64::min),
        hi: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    };

    let mut svg = String::new();
    // Writing to a String cannot fail.
    let _ = writeln!(
        svg,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{1}" viewBox="0 0 {0} {1}">"#,
        spec.width, spec.height
    );
    let _ = writeln!(svg, r#"  <rect x="0" y="0" width="{}" height="{}" fill="white"/>"#, spec.width, spec.height);
    if let Some(s) = spec.schedule {
        let _ = writeln!(svg, r#"  <g class="keyframes" stroke="gray" stroke-dasharray="3,3">"#);
        for &k in &s.keyframes {
            let x = frame.x(k);
            let _ = writeln!(
                svg,
                r#"    <line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}"/>"#,
                frame.y0,
                frame.y0 + frame.h
            );
        }
        let _ = writeln!(svg, "  </g>");
    }
    let points: Vec<String> = values
        .iter()
        .enumerate()
        .map(|(i, &v)| format!("{:.2},{:.2}", frame.x(i), frame.y(v)))
        .collect();
    let _ = writeln!(
        svg,
        r#"  <polyline class="curve" fill="none" stroke="steelblue" stroke-width="1.5" points="{}"/>"#,
        points.join(" ")
    );
    let _ = writeln!(svg, r#"  <g class="peaks" fill="crimson">"#);
    for &p in &spec.extrema.peaks {
        let (x, y) = (frame.x(p), frame.y(values[p]));
        let _ = writeln!(
            svg,
            r#"    <polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}"/>"#,
            x,
            y - MARKER,
            x - MARKER,
            y + MARKER,
            x + MARKER,
            y + MARKER
        );
    }
    let _ = writeln!(svg, "  </g>");
    let _ = writeln!(svg, r#"  <g class="valleys" fill="seagreen">"#);
    for &p in &spec.extrema.valleys {
        let (x, y) = (frame.x(p), frame.y(values[p]));
        let _ = writeln!(
            svg,
            r#"    <polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}"/>"#,
            x,
            y + MARKER,
            x - MARKER,
            y - MARKER,
            x + MARKER,
            y - MARKER
        );
    }
    let _ = writeln!(svg, "  </g>");
    let _ = writeln!(svg, "</svg>");
    Ok(svg)
}
