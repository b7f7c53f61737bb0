//! Keyframe selection.
//!
//! Starting from frame 0, the selector adds up to `t_k / 2 - 1` peaks, one
//! valley between each consecutive pair of chosen peaks, and then fills the
//! remaining budget across the gaps between selected frames. Gap budgets are
//! apportioned by largest remainder over each gap's interior frame count and
//! placed evenly inside the gap.

use rand_core::RngCore;
use rand_xoshiro::SplitMix64;
use rand_core::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::{prominences, Extrema, MotionCurve, Stage};

pub const DEFAULT_KEYFRAMES: usize = 12;

/// Selected keyframe indices together with where each one came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyframeSchedule {
    pub total_frames: usize,
    pub keyframes: Vec<usize>,
    #[serde(rename = "peaks")]
    pub peaks_used: Vec<usize>,
    #[serde(rename = "valleys")]
    pub valleys_used: Vec<usize>,
    pub fill: Vec<usize>,
}

impl KeyframeSchedule {
    /// Checks ordering, range and provenance consistency.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvariantViolation(msg));
        if self.keyframes.is_empty() {
            return bad("schedule has no keyframes".into());
        }
        if !self.keyframes.windows(2).all(|w| w[0] < w[1]) {
            return bad("keyframes must be strictly increasing".into());
        }
        if let Some(&last) = self.keyframes.last() {
            if last >= self.total_frames {
                return bad(format!(
                    "keyframe {last} out of range for {} frames",
                    self.total_frames
                ));
            }
        }
        if self.keyframes[0] != 0 {
            return bad("frame 0 must be a keyframe".into());
        }
        let mut parts: Vec<usize> = std::iter::once(0)
            .chain(self.peaks_used.iter().copied())
            .chain(self.valleys_used.iter().copied())
            .chain(self.fill.iter().copied())
            .collect();
        parts.sort_unstable();
        if parts != self.keyframes {
            return bad("peaks, valleys and fill must partition the keyframes (besides frame 0)".into());
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.keyframes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keyframes.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PeakChoice {
    /// Highest prominence first, ties to the lower index.
    #[default]
    ByProminence,
    /// Uniform sample without replacement, reproducible from the seed.
    SeededRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelectionParams {
    pub t_k: usize,
    pub mode: PeakChoice,
    pub seed: u64,
}

impl Default for SelectionParams {
    fn default() -> Self {
        Self {
            t_k: DEFAULT_KEYFRAMES,
            mode: PeakChoice::ByProminence,
            seed: 0,
        }
    }
}

impl SelectionParams {
    pub fn new(t_k: usize) -> Self {
        Self {
            t_k,
            ..Self::default()
        }
    }

    pub fn seeded_random(t_k: usize, seed: u64) -> Self {
        Self {
            t_k,
            mode: PeakChoice::SeededRandom,
            seed,
        }
    }
}

/// Picks one valley strictly between `p1` and `p2`.
///
/// Detected valleys inside the interval win (lowest value, then lowest
/// index); otherwise the interval argmin is used. `Ok(None)` means the open
/// interval is empty.
pub fn valley_between(
    curve: &MotionCurve,
    valleys: &[usize],
    p1: usize,
    p2: usize,
) -> Result<Option<usize>> {
    if p1 >= p2 {
        return Err(Error::BadInterval(p1, p2));
    }
    if p2 > curve.len() {
        return Err(Error::IndexOutOfRange {
            index: p2,
            len: curve.len(),
        });
    }
    if p2 - p1 < 2 {
        return Ok(None);
    }
    let x = curve.values();
    let lowest = |it: &mut dyn Iterator<Item = usize>| {
        it.fold(None, |best: Option<usize>, i| match best {
            Some(b) if x[b] <= x[i] => Some(b),
            _ => Some(i),
        })
    };
    let detected = lowest(&mut valleys.iter().copied().filter(|&v| p1 < v && v < p2));
    Ok(detected.or_else(|| lowest(&mut (p1 + 1..p2))))
}

/// Chooses at most `limit` peaks; the result is sorted ascending.
pub fn choose_peaks(
    peaks: &[usize],
    prominences: &[f64],
    limit: usize,
    params: &SelectionParams,
) -> Vec<usize> {
    debug_assert_eq!(peaks.len(), prominences.len());
    let mut chosen: Vec<usize> = if peaks.len() <= limit {
        peaks.to_vec()
    } else {
        match params.mode {
            PeakChoice::ByProminence => {
                let mut order: Vec<usize> = (0..peaks.len()).collect();
                order.sort_by(|&a, &b| {
                    prominences[b]
                        .total_cmp(&prominences[a])
                        .then(peaks[a].cmp(&peaks[b]))
                });
                order.into_iter().take(limit).map(|i| peaks[i]).collect()
            }
            PeakChoice::SeededRandom => {
                let mut rng = SplitMix64::seed_from_u64(params.seed);
                let mut pool = peaks.to_vec();
                partial_fisher_yates(&mut pool, limit, &mut rng);
                pool.truncate(limit);
                pool
            }
        }
    };
    chosen.sort_unstable();
    chosen
}

/// Shuffles the first `k` slots of `items` with a forward Fisher–Yates pass.
/// Slot `i` draws uniformly from `i..len` using a rejection-free
/// `next_u64 % remaining` step, which is deterministic for a given seed.
fn partial_fisher_yates<T>(items: &mut [T], k: usize, rng: &mut impl RngCore) {
    let n = items.len();
    for i in 0..k.min(n) {
        let remaining = (n - i) as u64;
        let j = i + (rng.next_u64() % remaining) as usize;
        items.swap(i, j);
    }
}

/// Largest-remainder apportionment of `total` seats over integer weights.
///
/// Shares are `total * w_i / W`, compared exactly in integer arithmetic;
/// fractional ties go to the lower position. Allocations are capped at
/// `caps[i]`, with any overflow handed to the slot with the most spare room.
pub fn apportion(total: usize, weights: &[usize], caps: &[usize]) -> Vec<usize> {
    debug_assert_eq!(weights.len(), caps.len());
    let sum: u128 = weights.iter().map(|&w| w as u128).sum();
    if weights.is_empty() {
        return Vec::new();
    }
    if sum == 0 {
        let mut alloc = vec![0; weights.len()];
        redistribute(&mut alloc, total, caps);
        return alloc;
    }
    let mut alloc = Vec::with_capacity(weights.len());
    let mut rems = Vec::with_capacity(weights.len());
    for &w in weights {
        let num = total as u128 * w as u128;
        alloc.push((num / sum) as usize);
        rems.push(num % sum);
    }
    let assigned: usize = alloc.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| rems[b].cmp(&rems[a]).then(a.cmp(&b)));
    for &i in order.iter().take(total - assigned) {
        alloc[i] += 1;
    }
    let mut overflow = 0;
    for (a, &cap) in alloc.iter_mut().zip(caps) {
        if *a > cap {
            overflow += *a - cap;
            *a = cap;
        }
    }
    redistribute(&mut alloc, overflow, caps);
    alloc
}

fn redistribute(alloc: &mut [usize], mut extra: usize, caps: &[usize]) {
    while extra > 0 {
        let Some(best) = (0..alloc.len())
            .filter(|&i| caps[i] > alloc[i])
            .max_by(|&a, &b| (caps[a] - alloc[a]).cmp(&(caps[b] - alloc[b])).then(b.cmp(&a)))
        else {
            break;
        };
        alloc[best] += 1;
        extra -= 1;
    }
}

/// `round(num / den)` with halves rounded away from zero, for non-negative
/// operands.
fn div_round_half_up(num: usize, den: usize) -> usize {
    (2 * num + den) / (2 * den)
}

/// Evenly places `k` frames strictly inside `(start, end)`, skipping indices
/// already in `taken`. On a collision the nearest free interior index is
/// used, preferring the lower one.
fn place_in_gap(start: usize, end: usize, k: usize, taken: &mut [bool]) -> Vec<usize> {
    let len = end - start;
    let mut out = Vec::with_capacity(k);
    for j in 1..=k {
        let ideal = start + div_round_half_up(j * len, k + 1);
        let ideal = ideal.clamp(start + 1, end - 1);
        let slot = (0..len)
            .flat_map(|d| [ideal.checked_sub(d), Some(ideal + d)])
            .flatten()
            .find(|&i| i > start && i < end && !taken[i]);
        if let Some(i) = slot {
            taken[i] = true;
            out.push(i);
        }
    }
    out
}

fn check_extrema(extrema: &Extrema, total: usize) -> Result<()> {
    for (name, idx) in [("peaks", &extrema.peaks), ("valleys", &extrema.valleys)] {
        if !idx.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InconsistentExtrema(format!("{name} not strictly increasing")));
        }
        if let Some(&i) = idx.iter().find(|&&i| i >= total) {
            return Err(Error::InconsistentExtrema(format!(
                "{name} index {i} outside curve of length {total}"
            )));
        }
    }
    if let Some(p) = extrema.peaks.iter().find(|p| extrema.valleys.contains(p)) {
        return Err(Error::InconsistentExtrema(format!("{p} is both a peak and a valley")));
    }
    Ok(())
}

/// Selects exactly `params.t_k` keyframes from a normalized curve.
pub fn select_keyframes(
    curve: &MotionCurve,
    extrema: &Extrema,
    params: &SelectionParams,
) -> Result<KeyframeSchedule> {
    let total = curve.len();
    let t_k = params.t_k;
    if t_k < 2 || t_k >= total {
        return Err(Error::InvalidK { t_k, total });
    }
    if curve.stage() != Stage::Normalized {
        return Err(Error::NotNormalized);
    }
    check_extrema(extrema, total)?;

    let limit = (t_k / 2).saturating_sub(1);
    let proms = prominences(curve, &extrema.peaks);
    let peaks_used = choose_peaks(&extrema.peaks, &proms, limit, params);

    let mut valleys_used = Vec::new();
    for pair in peaks_used.windows(2) {
        if let Some(v) = valley_between(curve, &extrema.valleys, pair[0], pair[1])? {
            valleys_used.push(v);
        }
    }

    let mut taken = vec![false; total];
    taken[0] = true;
    for &i in peaks_used.iter().chain(&valleys_used) {
        taken[i] = true;
    }
    let selected: Vec<usize> = (0..total).filter(|&i| taken[i]).collect();
    let remaining = t_k - selected.len();

    // Gap i runs from selected[i] to the next selected index, the last one
    // to the virtual boundary `total`.
    let bounds: Vec<(usize, usize)> = selected
        .iter()
        .zip(selected.iter().skip(1).chain(std::iter::once(&total)))
        .map(|(&a, &b)| (a, b))
        .collect();
    let interior: Vec<usize> = bounds.iter().map(|&(a, b)| b - a - 1).collect();
    let alloc = apportion(remaining, &interior, &interior);

    let mut fill = Vec::with_capacity(remaining);
    for (&(a, b), &k) in bounds.iter().zip(&alloc) {
        if k > 0 {
            fill.extend(place_in_gap(a, b, k, &mut taken));
        }
    }
    fill.sort_unstable();

    let keyframes: Vec<usize> = (0..total).filter(|&i| taken[i]).collect();
    let schedule = KeyframeSchedule {
        total_frames: total,
        keyframes,
        peaks_used,
        valleys_used,
        fill,
    };
    debug_assert_eq!(schedule.len(), t_k);
    Ok(schedule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::normalize;

    fn flat(t: usize) -> MotionCurve {
        normalize(&MotionCurve::raw(vec![1.0; t]).unwrap())
    }

    fn bumps(t: usize, at: &[usize]) -> MotionCurve {
        let mut v = vec![0.0; t];
        for &i in at {
            v[i] = 1.0;
        }
        MotionCurve::new(v, Stage::Normalized).unwrap()
    }

    #[test]
    fn flat_curve_is_uniform() {
        let s = select_keyframes(&flat(48), &Extrema::default(), &SelectionParams::new(12)).unwrap();
        assert_eq!(s.keyframes, (0..12).map(|i| 4 * i).collect::<Vec<_>>());
        assert!(s.peaks_used.is_empty() && s.valleys_used.is_empty());
        assert_eq!(s.fill.len(), 11);
        s.validate().unwrap();
    }

    #[test]
    fn peaks_and_valley_walkthrough() {
        let curve = bumps(48, &[10, 30]);
        let extrema = Extrema {
            peaks: vec![10, 30],
            valleys: vec![20],
        };
        let s = select_keyframes(&curve, &extrema, &SelectionParams::new(12)).unwrap();
        assert_eq!(s.keyframes, vec![0, 3, 7, 10, 13, 17, 20, 25, 30, 35, 39, 44]);
        assert_eq!(s.peaks_used, vec![10, 30]);
        assert_eq!(s.valleys_used, vec![20]);
        s.validate().unwrap();
    }

    #[test]
    fn invalid_k() {
        let c = flat(48);
        for k in [0, 1, 48, 60] {
            assert!(matches!(
                select_keyframes(&c, &Extrema::default(), &SelectionParams::new(k)),
                Err(Error::InvalidK { .. })
            ));
        }
    }

    #[test]
    fn minimal_k_takes_midpoint() {
        let s = select_keyframes(&flat(48), &Extrema::default(), &SelectionParams::new(2)).unwrap();
        assert_eq!(s.keyframes, vec![0, 24]);
    }

    #[test]
    fn inconsistent_extrema_rejected() {
        let c = flat(20);
        let out_of_range = Extrema {
            peaks: vec![25],
            valleys: vec![],
        };
        assert!(matches!(
            select_keyframes(&c, &out_of_range, &SelectionParams::new(4)),
            Err(Error::InconsistentExtrema(_))
        ));
        let unsorted = Extrema {
            peaks: vec![9, 3],
            valleys: vec![],
        };
        assert!(select_keyframes(&c, &unsorted, &SelectionParams::new(4)).is_err());
    }

    #[test]
    fn valley_between_cases() {
        let c = bumps(48, &[10, 30]);
        assert_eq!(valley_between(&c, &[], 10, 30).unwrap(), Some(11));
        assert_eq!(valley_between(&c, &[], 10, 11).unwrap(), None);
        assert!(matches!(valley_between(&c, &[], 30, 10), Err(Error::BadInterval(30, 10))));
        // Detected valleys take priority over the interval argmin.
        let mut v = vec![0.5; 20];
        v[4] = 0.1;
        v[12] = 0.3;
        let c = MotionCurve::new(v, Stage::Normalized).unwrap();
        assert_eq!(valley_between(&c, &[12], 0, 19).unwrap(), Some(12));
        assert_eq!(valley_between(&c, &[], 0, 19).unwrap(), Some(4));
    }

    #[test]
    fn choose_peaks_cases() {
        let p = SelectionParams::new(12);
        assert_eq!(choose_peaks(&[4, 9], &[0.2, 0.3], 5, &p), vec![4, 9]);
        assert_eq!(choose_peaks(&[10, 30, 40], &[0.9, 0.5, 0.5], 2, &p), vec![10, 30]);
        assert!(choose_peaks(&[10, 30], &[0.9, 0.5], 0, &p).is_empty());

        let r = SelectionParams::seeded_random(12, 42);
        let peaks: Vec<usize> = (0..20).map(|i| i * 3 + 1).collect();
        let proms = vec![0.5; 20];
        let a = choose_peaks(&peaks, &proms, 5, &r);
        let b = choose_peaks(&peaks, &proms, 5, &r);
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert!(a.iter().all(|x| peaks.contains(x)));
    }

    #[test]
    fn apportion_walkthrough() {
        assert_eq!(apportion(8, &[9, 9, 9, 17], &[9, 9, 9, 17]), vec![2, 2, 1, 3]);
        assert_eq!(apportion(0, &[3, 4], &[3, 4]), vec![0, 0]);
        assert_eq!(apportion(3, &[0, 0, 5], &[0, 0, 5]), vec![0, 0, 3]);
        // Caps force redistribution.
        assert_eq!(apportion(4, &[10, 1], &[2, 5]), vec![2, 2]);
    }

    #[test]
    fn rounding_is_half_away_from_zero() {
        assert_eq!(div_round_half_up(18, 4), 5);
        assert_eq!(div_round_half_up(54, 4), 14);
        assert_eq!(div_round_half_up(10, 3), 3);
        assert_eq!(div_round_half_up(20, 3), 7);
    }

    #[test]
    fn schedule_validation() {
        let mut s = select_keyframes(&flat(48), &Extrema::default(), &SelectionParams::new(12)).unwrap();
        s.validate().unwrap();
        s.keyframes.push(48);
        assert!(s.validate().is_err());
    }
}
