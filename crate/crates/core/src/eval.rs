//! Keyframe localization metrics.
//!
//! AP@t is the mean, over instances with ground-truth keypoints, of the
//! fraction of ground-truth keypoints that can be paired one-to-one with a
//! prediction within distance `t`. Pairing uses an exact maximum-cardinality
//! bipartite matching.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeypointInstance {
    pub gt: Vec<usize>,
    pub pred: Vec<usize>,
}

/// Whether a pair at distance exactly `t` counts as a match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Threshold {
    /// `|g − p| ≤ t`
    #[default]
    Inclusive,
    /// `|g − p| < t`
    Strict,
}

impl Threshold {
    fn admits(self, g: usize, p: usize, t: usize) -> bool {
        let d = g.abs_diff(p);
        match self {
            Threshold::Inclusive => d <= t,
            Threshold::Strict => d < t,
        }
    }
}

/// Size of a maximum one-to-one matching between `gt` and `pred` where a
/// pair is admissible when its distance passes `mode` at threshold `t`.
pub fn match_keypoints(gt: &[usize], pred: &[usize], t: usize, mode: Threshold) -> usize {
    let adj: Vec<Vec<usize>> = gt
        .iter()
        .map(|&g| (0..pred.len()).filter(|&j| mode.admits(g, pred[j], t)).collect())
        .collect();
    let mut owner: Vec<Option<usize>> = vec![None; pred.len()];
    let mut matched = 0;
    for g in 0..gt.len() {
        let mut seen = vec![false; pred.len()];
        if augment(g, &adj, &mut owner, &mut seen) {
            matched += 1;
        }
    }
    matched
}

fn augment(g: usize, adj: &[Vec<usize>], owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
    for &p in &adj[g] {
        if seen[p] {
            continue;
        }
        seen[p] = true;
        let free = match owner[p] {
            None => true,
            Some(other) => augment(other, adj, owner, seen),
        };
        if free {
            owner[p] = Some(g);
            return true;
        }
    }
    false
}

/// Mean per-instance recall of ground-truth keypoints; instances without
/// ground truth are skipped.
pub fn average_precision(instances: &[KeypointInstance], t: usize, mode: Threshold) -> Result<f64> {
    let scores: Vec<f64> = instances
        .iter()
        .filter(|inst| !inst.gt.is_empty())
        .map(|inst| match_keypoints(&inst.gt, &inst.pred, t, mode) as f64 / inst.gt.len() as f64)
        .collect();
    if scores.is_empty() {
        return Err(Error::NoValidInstances);
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Parses one instance per non-empty line: `gt:1;2;3 pred:4;5`.
pub fn parse_instances(text: &str) -> Result<Vec<KeypointInstance>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |why: &str| Error::Parse(format!("line {}: {why}", n + 1));
        let mut inst = KeypointInstance::default();
        let mut seen = (false, false);
        for field in line.split_whitespace() {
            let (key, list) = field.split_once(':').ok_or_else(|| bad("expected key:list"))?;
            let values = list
                .split(';')
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<usize>().map_err(|_| bad(&format!("bad index `{s}`"))))
                .collect::<Result<Vec<_>>>()?;
            match key {
                "gt" if !seen.0 => {
                    inst.gt = values;
                    seen.0 = true;
                }
                "pred" if !seen.1 => {
                    inst.pred = values;
                    seen.1 = true;
                }
                _ => return Err(bad(&format!("unexpected field `{key}`"))),
            }
        }
        if !(seen.0 && seen.1) {
            return Err(bad("both gt: and pred: are required"));
        }
        inst.gt.sort_unstable();
        inst.pred.sort_unstable();
        out.push(inst);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntensityBuckets {
    pub subtle: Vec<String>,
    pub moderate: Vec<String>,
    pub intense: Vec<String>,
}

/// Splits classes into terciles of mean motion score (ascending; ties by
/// class name).
pub fn intensity_buckets(class_means: &BTreeMap<String, f64>) -> Result<IntensityBuckets> {
    let n = class_means.len();
    if n == 0 || !n.is_multiple_of(3) {
        return Err(Error::NotDivisibleByThree(n));
    }
    if class_means.values().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("class means must be finite".into()));
    }
    let mut order: Vec<(&String, f64)> = class_means.iter().map(|(k, &v)| (k, v)).collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)));
    let names: Vec<String> = order.into_iter().map(|(k, _)| k.clone()).collect();
    let third = n / 3;
    Ok(IntensityBuckets {
        subtle: names[..third].to_vec(),
        moderate: names[third..2 * third].to_vec(),
        intense: names[2 * third..].to_vec(),
    })
}
