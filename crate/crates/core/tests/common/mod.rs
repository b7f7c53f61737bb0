//! Independent reference implementations used as test oracles. None of
//! these call into the code paths they check.

#![allow(dead_code)]

use keysched::Frame;

/// Smooth 2-D texture translated by `(dx, dy)` pixels.
pub fn texture(h: usize, w: usize, dx: f64, dy: f64) -> Frame {
    let tau = std::f64::consts::TAU;
    let px = (0..h * w)
        .map(|i| {
            let (y, x) = ((i / w) as f64 - dy, (i % w) as f64 - dx);
            0.5 + 0.2 * (tau * x / 16.0).sin() + 0.2 * (tau * y / 13.0).cos()
        })
        .collect();
    Frame::new(h, w, px).unwrap()
}

/// Is `i` the leftmost sample of a flat run strictly above both outer
/// neighbours?
fn is_local_max(x: &[f64], i: usize) -> bool {
    let n = x.len();
    if i == 0 || i + 1 >= n || x[i - 1] >= x[i] {
        return false;
    }
    let mut r = i;
    while r + 1 < n && x[r + 1] == x[i] {
        r += 1;
    }
    r + 1 < n && x[r + 1] < x[i]
}

/// Height minus the higher of the two lowest points between `i` and the
/// nearest strictly higher sample on each side (or the array end).
pub fn brute_prominence(x: &[f64], i: usize) -> f64 {
    let h = x[i];
    let left_stop = (0..i).filter(|&j| x[j] > h).max().map_or(0, |j| j + 1);
    let right_stop = (i + 1..x.len()).filter(|&j| x[j] > h).min().unwrap_or(x.len());
    let min_left = x[left_stop..=i].iter().copied().fold(f64::INFINITY, f64::min);
    let min_right = x[i..right_stop].iter().copied().fold(f64::INFINITY, f64::min);
    h - min_left.max(min_right)
}

/// Peaks by exhaustive filtering followed by repeated
/// take-the-tallest-and-clear-its-neighbourhood.
pub fn brute_peaks(x: &[f64], min_distance: usize, min_prominence: f64) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..x.len())
        .filter(|&i| is_local_max(x, i) && brute_prominence(x, i) >= min_prominence)
        .collect();
    let mut kept = Vec::new();
    while !pool.is_empty() {
        let mut best = pool[0];
        for &p in &pool {
            if x[p] > x[best] || (x[p] == x[best] && p < best) {
                best = p;
            }
        }
        kept.push(best);
        pool.retain(|&p| p != best && (min_distance <= 1 || p.abs_diff(best) >= min_distance));
    }
    kept.sort_unstable();
    kept
}

/// Largest one-to-one matching by trying every assignment.
pub fn brute_matching(gt: &[usize], pred: &[usize], t: usize, strict: bool) -> usize {
    fn go(gt: &[usize], pred: &[usize], used: &mut Vec<bool>, t: usize, strict: bool) -> usize {
        let Some((&g, rest)) = gt.split_first() else {
            return 0;
        };
        let mut best = go(rest, pred, used, t, strict);
        for j in 0..pred.len() {
            let d = g.abs_diff(pred[j]);
            let ok = if strict { d < t } else { d <= t };
            if ok && !used[j] {
                used[j] = true;
                best = best.max(1 + go(rest, pred, used, t, strict));
                used[j] = false;
            }
        }
        best
    }
    go(gt, pred, &mut vec![false; pred.len()], t, strict)
}

/// Slaney mel scale, written out independently.
fn mel(hz: f64) -> f64 {
    if hz < 1000.0 {
        3.0 * hz / 200.0
    } else {
        15.0 + 27.0 * (hz / 1000.0).ln() / 6.4f64.ln()
    }
}

fn inv_mel(m: f64) -> f64 {
    if m < 15.0 {
        200.0 * m / 3.0
    } else {
        1000.0 * (6.4f64.ln() * (m - 15.0) / 27.0).exp()
    }
}

/// Band whose area-normalized triangle responds most strongly at `hz`,
/// for `bands` filters spanning 0..`fmax`.
pub fn oracle_band(hz: f64, bands: usize, fmax: f64) -> usize {
    let top = mel(fmax);
    let edge = |i: usize| inv_mel(top * i as f64 / (bands + 1) as f64);
    let mut best = (0, f64::NEG_INFINITY);
    for b in 0..bands {
        let (lo, c, hi) = (edge(b), edge(b + 1), edge(b + 2));
        let tri = if hz <= lo || hz >= hi {
            0.0
        } else if hz <= c {
            (hz - lo) / (c - lo)
        } else {
            (hi - hz) / (hi - c)
        };
        let w = tri * 2.0 / (hi - lo);
        if w > best.1 {
            best = (b, w);
        }
    }
    best.0
}

/// Like [`oracle_band`], but for a tone centred on FFT bin `bin` of an
/// `n_fft`-point periodic-Hann frame at `rate`: the triangles are sampled at
/// bin frequencies and the tone's power sits on `bin` with a quarter of it
/// on each neighbour.
pub fn oracle_band_on_bin(bin: usize, n_fft: usize, rate: f64, bands: usize, fmax: f64) -> usize {
    let top = mel(fmax);
    let edge = |i: usize| inv_mel(top * i as f64 / (bands + 1) as f64);
    let power = [(bin - 1, 0.25), (bin, 1.0), (bin + 1, 0.25)];
    let mut best = (0, f64::NEG_INFINITY);
    for b in 0..bands {
        let (lo, c, hi) = (edge(b), edge(b + 1), edge(b + 2));
        let tri = |hz: f64| {
            if hz <= lo || hz >= hi {
                0.0
            } else if hz <= c {
                (hz - lo) / (c - lo)
            } else {
                (hi - hz) / (hi - c)
            }
        };
        let energy: f64 = power
            .iter()
            .map(|&(k, p)| p * tri(k as f64 * rate / n_fft as f64) * 2.0 / (hi - lo))
            .sum();
        if energy > best.1 {
            best = (b, energy);
        }
    }
    best.0
}

/// Minimal 16-bit PCM mono WAV writer.
pub fn wav_bytes(samples: &[i16], rate: u32, channels: u16) -> Vec<u8> {
    let data_len = (samples.len() * 2) as u32;
    let mut out = Vec::new();
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&channels.to_le_bytes());
    out.extend_from_slice(&rate.to_le_bytes());
    out.extend_from_slice(&(rate * 2 * channels as u32).to_le_bytes());
    out.extend_from_slice(&(2 * channels).to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for s in samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

pub fn tone(hz: f64, seconds: f64, rate: u32, amplitude: f64) -> Vec<f64> {
    let n = (seconds * rate as f64) as usize;
    (0..n)
        .map(|i| amplitude * (std::f64::consts::TAU * hz * i as f64 / rate as f64).sin())
        .collect()
}

/// Tiny deterministic generator for test data (xorshift64*).
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1)
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    pub fn range(&mut self, lo: usize, hi_inclusive: usize) -> usize {
        lo + self.below(hi_inclusive - lo + 1)
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Multiple of 1/1024 in [-8, 8); arithmetic on these stays exact.
    pub fn dyadic(&mut self) -> f64 {
        (self.below(16 * 1024) as f64 - 8.0 * 1024.0) / 1024.0
    }
}

/// Random curve with plateaus, spikes and smooth stretches.
pub fn random_curve(rng: &mut TestRng, n: usize) -> Vec<f64> {
    match rng.below(3) {
        0 => (0..n).map(|_| rng.below(11) as f64 / 10.0).collect(),
        1 => {
            let mut v = 0.5;
            (0..n)
                .map(|_| {
                    v = (v + rng.unit() - 0.5).clamp(0.0, 1.0);
                    v
                })
                .collect()
        }
        _ => {
            let f = 1.0 + rng.unit() * 6.0;
            let phase = rng.unit() * 6.0;
            (0..n)
                .map(|i| {
                    let s = ((i as f64 / n as f64) * f * std::f64::consts::TAU + phase).sin();
                    (0.5 + 0.4 * s + 0.1 * rng.unit()).max(0.0)
                })
                .collect()
        }
    }
}
