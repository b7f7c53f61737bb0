//! Dense optical flow and per-frame motion scores.
//!
//! Flow is estimated with a coarse-to-fine Horn–Schunck solver. At each
//! pyramid level the second frame is warped by the current estimate, the
//! brightness-constancy term is linearized around it, and the energy
//!
//! ```text
//! E(u, v) = Σ (Ix·u + Iy·v + c)² + α² Σ_edges ((u_i − u_j)² + (v_i − v_j)²)
//! ```
//!
//! is minimized by Jacobi sweeps over the 4-neighbour grid. Intensities are
//! handled on a 0..255 scale internally so `alpha` keeps its usual meaning.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::{Frame, FrameSequence};
use crate::motion::MotionCurve;

const INTENSITY_SCALE: f64 = 255.0;
const MIN_LEVEL_SIZE: usize = 8;

/// Per-pixel displacement in pixels/frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    height: usize,
    width: usize,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl FlowField {
    pub fn new(height: usize, width: usize, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if u.len() != height * width || v.len() != height * width {
            return Err(Error::ShapeMismatch(format!(
                "flow components must have {} entries",
                height * width
            )));
        }
        if u.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::InvariantViolation("flow must be finite".into()));
        }
        Ok(Self { height, width, u, v })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            u: vec![0.0; height * width],
            v: vec![0.0; height * width],
        }
    }

    /// Constant flow over the whole field.
    pub fn uniform(height: usize, width: usize, u: f64, v: f64) -> Self {
        Self {
            height,
            width,
            u: vec![u; height * width],
            v: vec![v; height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn scaled(&self, c: f64) -> FlowField {
        FlowField {
            height: self.height,
            width: self.width,
            u: self.u.iter().map(|x| x * c).collect(),
            v: self.v.iter().map(|x| x * c).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowParams {
    pub alpha: f64,
    pub iterations: usize,
    pub pyramid_levels: usize,
    pub convergence_eps: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            alpha: 15.0,
            iterations: 100,
            pyramid_levels: 3,
            convergence_eps: 1e-4,
        }
    }
}

impl FlowParams {
    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if self.iterations == 0 || self.pyramid_levels == 0 {
            return Err(Error::InvalidParameter(
                "iterations and pyramid_levels must be positive".into(),
            ));
        }
        if self.convergence_eps.is_nan() || self.convergence_eps < 0.0 {
            return Err(Error::InvalidParameter("convergence_eps must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Plane {
    h: usize,
    w: usize,
    data: Vec<f64>,
}

impl Plane {
    fn from_frame(f: &Frame) -> Self {
        Self {
            h: f.height(),
            w: f.width(),
            data: f.pixels().iter().map(|p| p * INTENSITY_SCALE).collect(),
        }
    }

    #[inline]
    fn at(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.w + x]
    }

    /// Bilinear sample with coordinates clamped to the image.
    fn sample(&self, y: f64, x: f64) -> f64 {
        let y = y.clamp(0.0, (self.h - 1) as f64);
        let x = x.clamp(0.0, (self.w - 1) as f64);
        let y0 = y.floor() as usize;
        let x0 = x.floor() as usize;
        let y1 = (y0 + 1).min(self.h - 1);
        let x1 = (x0 + 1).min(self.w - 1);
        let fy = y - y0 as f64;
        let fx = x - x0 as f64;
        let top = self.at(y0, x0) * (1.0 - fx) + self.at(y0, x1) * fx;
        let bot = self.at(y1, x0) * (1.0 - fx) + self.at(y1, x1) * fx;
        top * (1.0 - fy) + bot * fy
    }

    /// 2x2 box average; odd trailing rows/columns are dropped.
    fn downsample(&self) -> Plane {
        let (h, w) = (self.h / 2, self.w / 2);
        let mut data = Vec::with_capacity(h * w);
        for y in 0..h {
            for x in 0..w {
                let s = self.at(2 * y, 2 * x)
                    + self.at(2 * y, 2 * x + 1)
                    + self.at(2 * y + 1, 2 * x)
                    + self.at(2 * y + 1, 2 * x + 1);
                data.push(s / 4.0);
            }
        }
        Plane { h, w, data }
    }

    fn warp(&self, flow: &FlowField) -> Plane {
        let mut data = Vec::with_capacity(self.h * self.w);
        for y in 0..self.h {
            for x in 0..self.w {
                let i = y * self.w + x;
                data.push(self.sample(y as f64 + flow.v[i], x as f64 + flow.u[i]));
            }
        }
        Plane {
            h: self.h,
            w: self.w,
            data,
        }
    }
}

/// Resamples a flow field to a new size, rescaling the vectors.
fn upsample_flow(flow: &FlowField, h: usize, w: usize) -> FlowField {
    let sy = h as f64 / flow.height as f64;
    let sx = w as f64 / flow.width as f64;
    let up = Plane {
        h: flow.height,
        w: flow.width,
        data: flow.u.clone(),
    };
    let vp = Plane {
        h: flow.height,
        w: flow.width,
        data: flow.v.clone(),
    };
    let mut u = Vec::with_capacity(h * w);
    let mut v = Vec::with_capacity(h * w);
    for y in 0..h {
        let cy = (y as f64 + 0.5) / sy - 0.5;
        for x in 0..w {
            let cx = (x as f64 + 0.5) / sx - 0.5;
            u.push(up.sample(cy, cx) * sx);
            v.push(vp.sample(cy, cx) * sy);
        }
    }
    FlowField {
        height: h,
        width: w,
        u,
        v,
    }
}

/// Horn–Schunck problem at a single resolution, linearized around a fixed
/// warp. Exposed so callers can monitor the energy between sweeps.
#[derive(Debug, Clone)]
pub struct HornSchunck {
    h: usize,
    w: usize,
    alpha2: f64,
    ix: Vec<f64>,
    iy: Vec<f64>,
    /// Constant of the linearized data term, `Ix·u + Iy·v + c`.
    c: Vec<f64>,
}

impl HornSchunck {
    /// Linearizes brightness constancy between `a` and `b` around zero flow.
    pub fn new(a: &Frame, b: &Frame, alpha: f64) -> Result<Self> {
        if a.dims() != b.dims() {
            return Err(Error::DimensionMismatch {
                expected: a.dims(),
                found: b.dims(),
            });
        }
        let (h, w) = a.dims();
        Ok(Self::linearize(
            &Plane::from_frame(a),
            &Plane::from_frame(b),
            &FlowField::zeros(h, w),
            alpha,
        ))
    }

    fn linearize(a: &Plane, b: &Plane, around: &FlowField, alpha: f64) -> Self {
        let (h, w) = (a.h, a.w);
        let warped = b.warp(around);
        let mean = |y: usize, x: usize| 0.5 * (a.at(y, x) + warped.at(y, x));
        let n = h * w;
        let mut ix = Vec::with_capacity(n);
        let mut iy = Vec::with_capacity(n);
        let mut c = Vec::with_capacity(n);
        for y in 0..h {
            let (yu, yd) = (y.saturating_sub(1), (y + 1).min(h - 1));
            for x in 0..w {
                let (xl, xr) = (x.saturating_sub(1), (x + 1).min(w - 1));
                let gx = 0.5 * (mean(y, xr) - mean(y, xl));
                let gy = 0.5 * (mean(yd, x) - mean(yu, x));
                let i = y * w + x;
                let it = warped.at(y, x) - a.at(y, x);
                ix.push(gx);
                iy.push(gy);
                c.push(it - gx * around.u[i] - gy * around.v[i]);
            }
        }
        Self {
            h,
            w,
            alpha2: alpha * alpha,
            ix,
            iy,
            c,
        }
    }

    fn check(&self, flow: &FlowField) {
        assert_eq!((flow.height, flow.width), (self.h, self.w), "flow size mismatch");
    }

    /// Value of the discrete Horn–Schunck energy for `flow`.
    pub fn energy(&self, flow: &FlowField) -> f64 {
        self.check(flow);
        let (h, w) = (self.h, self.w);
        let mut data = 0.0;
        let mut smooth = 0.0;
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let r = self.ix[i] * flow.u[i] + self.iy[i] * flow.v[i] + self.c[i];
                data += r * r;
                if x + 1 < w {
                    smooth += (flow.u[i] - flow.u[i + 1]).powi(2) + (flow.v[i] - flow.v[i + 1]).powi(2);
                }
                if y + 1 < h {
                    smooth += (flow.u[i] - flow.u[i + w]).powi(2) + (flow.v[i] - flow.v[i + w]).powi(2);
                }
            }
        }
        data + self.alpha2 * smooth
    }

    /// One Jacobi sweep; returns the largest per-pixel change.
    pub fn step(&self, flow: &mut FlowField) -> f64 {
        self.check(flow);
        let (h, w) = (self.h, self.w);
        let mut nu = vec![0.0; h * w];
        let mut nv = vec![0.0; h * w];
        let mut delta: f64 = 0.0;
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let mut su = 0.0;
                let mut sv = 0.0;
                let mut count = 0.0;
                let mut add = |j: usize| {
                    su += flow.u[j];
                    sv += flow.v[j];
                    count += 1.0;
                };
                if x > 0 {
                    add(i - 1);
                }
                if x + 1 < w {
                    add(i + 1);
                }
                if y > 0 {
                    add(i - w);
                }
                if y + 1 < h {
                    add(i + w);
                }
                let (ub, vb) = if count > 0.0 { (su / count, sv / count) } else { (flow.u[i], flow.v[i]) };
                let (gx, gy) = (self.ix[i], self.iy[i]);
                let r = gx * ub + gy * vb + self.c[i];
                let denom = count * self.alpha2 + gx * gx + gy * gy;
                let k = if denom > 0.0 { r / denom } else { 0.0 };
                nu[i] = ub - gx * k;
                nv[i] = vb - gy * k;
                delta = delta.max((nu[i] - flow.u[i]).abs()).max((nv[i] - flow.v[i]).abs());
            }
        }
        flow.u = nu;
        flow.v = nv;
        delta
    }

    fn solve(&self, flow: &mut FlowField, iterations: usize, eps: f64) {
        for _ in 0..iterations {
            if self.step(flow) < eps {
                break;
            }
        }
    }
}

/// Estimates flow from `a` to `b`, so that `b(x + u, y + v) ≈ a(x, y)`.
pub fn estimate_flow(a: &Frame, b: &Frame, params: &FlowParams) -> Result<FlowField> {
    params.validate()?;
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch {
            expected: a.dims(),
            found: b.dims(),
        });
    }
    let (h, w) = a.dims();
    let shrink = 1usize << (params.pyramid_levels - 1);
    if h / shrink < MIN_LEVEL_SIZE || w / shrink < MIN_LEVEL_SIZE {
        return Err(Error::TooSmall { height: h, width: w });
    }

    let mut pyr_a = vec![Plane::from_frame(a)];
    let mut pyr_b = vec![Plane::from_frame(b)];
    for _ in 1..params.pyramid_levels {
        let next_a = pyr_a.last().map(Plane::downsample);
        let next_b = pyr_b.last().map(Plane::downsample);
        pyr_a.extend(next_a);
        pyr_b.extend(next_b);
    }

    let coarsest = pyr_a.last().expect("pyramid has at least one level");
    let mut flow = FlowField::zeros(coarsest.h, coarsest.w);
    for (pa, pb) in pyr_a.iter().zip(&pyr_b).rev() {
        if (flow.height, flow.width) != (pa.h, pa.w) {
            flow = upsample_flow(&flow, pa.h, pa.w);
        }
        let problem = HornSchunck::linearize(pa, pb, &flow, params.alpha);
        problem.solve(&mut flow, params.iterations, params.convergence_eps);
    }
    Ok(flow)
}

/// Sum of `|u| + |v|` over all pixels, or its per-pixel mean when
/// `normalize` is set.
pub fn motion_score(flow: &FlowField, normalize: bool) -> f64 {
    let total: f64 = flow.u.iter().zip(&flow.v).map(|(u, v)| u.abs() + v.abs()).sum();
    if normalize {
        total / (flow.height * flow.width) as f64
    } else {
        total
    }
}

/// One motion score per frame. Entry `t` scores the flow from frame `t` to
/// `t + 1`; the final frame repeats the previous score so the curve has one
/// value for every frame.
pub fn motion_curve(seq: &FrameSequence, params: &FlowParams, normalize: bool) -> Result<MotionCurve> {
    if seq.len() < 2 {
        return Err(Error::TooShort(format!(
            "motion curve needs at least 2 frames, got {}",
            seq.len()
        )));
    }
    let frames = seq.frames();
    let mut scores = frames
        .par_windows(2)
        .map(|pair| estimate_flow(&pair[0], &pair[1], params).map(|f| motion_score(&f, normalize)))
        .collect::<Result<Vec<f64>>>()?;
    let last = *scores.last().expect("at least one pair");
    scores.push(last);
    MotionCurve::raw(scores)
}
