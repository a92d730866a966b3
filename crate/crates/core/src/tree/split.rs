//! Split scoring shared by the exact, random-cut and histogram searches.
//!
//! Every sample carries a target `t` and a non-negative weight `h`. A node is
//! summarized by `G = sum h t` and `H = sum h`, and the score of a node is
//! `G^2 / (H + lambda)`. With `lambda = 0` the gain of a split equals the
//! weighted SSE reduction `SSE(parent) - SSE(left) - SSE(right)`; with
//! gradient/hessian inputs it is the second-order boosting gain.
//!
//! The exact and histogram searches accumulate sums in the same order
//! (samples in node order within a group, groups in ascending value order),
//! so on lossless bins they produce bitwise-identical gains.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::bins::HistogramBins;

/// Splits must gain more than this fraction of the node's `sum h t^2`.
pub(crate) const MIN_REL_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BinStat {
    pub g: f64,
    pub h: f64,
    pub count: usize,
}

impl BinStat {
    #[inline]
    fn push(&mut self, g: f64, h: f64) {
        self.g += g;
        self.h += h;
        self.count += 1;
    }

    #[inline]
    fn absorb(&mut self, other: &BinStat) {
        self.g += other.g;
        self.h += other.h;
        self.count += other.count;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct NodeStats {
    pub g: f64,
    pub h: f64,
    pub count: usize,
    pub sq: f64,
}

impl NodeStats {
    pub fn over(rows: &[usize], gt: &[f64], t: &[f64], h: &[f64]) -> Self {
        let mut s = NodeStats::default();
        for &r in rows {
            s.g += gt[r];
            s.h += h[r];
            s.sq += gt[r] * t[r];
        }
        s.count = rows.len();
        s
    }

    fn minus(&self, left: &BinStat) -> BinStat {
        BinStat {
            g: self.g - left.g,
            h: self.h - left.h,
            count: self.count - left.count,
        }
    }

    fn as_bin(&self) -> BinStat {
        BinStat {
            g: self.g,
            h: self.h,
            count: self.count,
        }
    }

    pub fn min_gain(&self) -> f64 {
        MIN_REL_GAIN * self.sq.abs().max(f64::MIN_POSITIVE)
    }
}

/// Gain function `factor * (S_L + S_R - S_P) - gamma` with `S = G^2 / (H + lambda)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub lambda: f64,
    pub gamma: f64,
    pub factor: f64,
}

impl Criterion {
    pub const VARIANCE: Criterion = Criterion {
        lambda: 0.0,
        gamma: 0.0,
        factor: 1.0,
    };

    pub fn second_order(lambda: f64, gamma: f64) -> Self {
        Criterion {
            lambda,
            gamma,
            factor: 0.5,
        }
    }

    #[inline]
    fn score(&self, g: f64, h: f64) -> f64 {
        let d = h + self.lambda;
        if d > 0.0 {
            g * g / d
        } else {
            0.0
        }
    }

    #[inline]
    pub fn gain(&self, left: &BinStat, right: &BinStat, parent: &BinStat) -> f64 {
        self.factor
            * (self.score(left.g, left.h) + self.score(right.g, right.h)
                - self.score(parent.g, parent.h))
            - self.gamma
    }

    /// `G / (H + lambda)`: weighted mean for the variance criterion,
    /// `-G/(H+lambda)` in gradient terms for second-order boosting.
    pub fn leaf_value(&self, g: f64, h: f64) -> f64 {
        let d = h + self.lambda;
        if d > 0.0 {
            g / d
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Limits {
    pub min_samples_leaf: usize,
    pub min_child_weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
    pub left_count: usize,
    pub right_count: usize,
}

pub(crate) fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m < b {
        m
    } else {
        a
    }
}

/// Scans boundaries between consecutive groups; returns `(k, gain, left_count)`
/// for the best boundary after group `k`. Strict improvement keeps the lowest
/// boundary on ties.
fn scan_groups(
    groups: &[BinStat],
    parent: &NodeStats,
    crit: &Criterion,
    limits: &Limits,
) -> Option<(usize, f64, usize)> {
    let p = parent.as_bin();
    let mut left = BinStat::default();
    let mut best: Option<(usize, f64, usize)> = None;
    for k in 0..groups.len().saturating_sub(1) {
        left.absorb(&groups[k]);
        let right = parent.minus(&left);
        if left.count < limits.min_samples_leaf || right.count < limits.min_samples_leaf {
            continue;
        }
        if left.h < limits.min_child_weight || right.h < limits.min_child_weight {
            continue;
        }
        let gain = crit.gain(&left, &right, &p);
        if best.is_none_or(|b| gain > b.1) {
            best = Some((k, gain, left.count));
        }
    }
    best
}

/// Exact search on one feature: sort node samples by value (ties by position),
/// merge equal values into groups, threshold at midpoints.
pub(crate) fn exact_feature(
    feature: usize,
    col: &[f64],
    rows: &[usize],
    gt: &[f64],
    h: &[f64],
    parent: &NodeStats,
    crit: &Criterion,
    limits: &Limits,
    order: &mut Vec<(f64, u32)>,
    groups: &mut Vec<BinStat>,
    values: &mut Vec<f64>,
) -> Option<SplitCandidate> {
    order.clear();
    order.extend(rows.iter().enumerate().map(|(pos, &r)| (col[r], pos as u32)));
    order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    groups.clear();
    values.clear();
    for &(v, pos) in order.iter() {
        let r = rows[pos as usize];
        if values.last() != Some(&v) {
            values.push(v);
            groups.push(BinStat::default());
        }
        groups.last_mut().unwrap().push(gt[r], h[r]);
    }
    let (k, gain, left_count) = scan_groups(groups, parent, crit, limits)?;
    Some(SplitCandidate {
        feature,
        threshold: midpoint(values[k], values[k + 1]),
        gain,
        left_count,
        right_count: parent.count - left_count,
    })
}

/// Histogram search on one feature: accumulate per-bin sums in node order,
/// then scan the non-empty bins. Threshold is the bin's upper edge.
pub(crate) fn histogram_feature(
    feature: usize,
    bins: &HistogramBins,
    rows: &[usize],
    gt: &[f64],
    h: &[f64],
    parent: &NodeStats,
    crit: &Criterion,
    limits: &Limits,
    hist: &mut Vec<BinStat>,
    groups: &mut Vec<BinStat>,
    group_bins: &mut Vec<usize>,
) -> Option<SplitCandidate> {
    let codes = bins.codes(feature);
    hist.clear();
    hist.resize(bins.n_bins(feature), BinStat::default());
    for &r in rows {
        hist[codes[r] as usize].push(gt[r], h[r]);
    }
    groups.clear();
    group_bins.clear();
    for (b, s) in hist.iter().enumerate() {
        if s.count > 0 {
            groups.push(*s);
            group_bins.push(b);
        }
    }
    let (k, gain, left_count) = scan_groups(groups, parent, crit, limits)?;
    Some(SplitCandidate {
        feature,
        threshold: bins.upper_edges(feature)[group_bins[k]],
        gain,
        left_count,
        right_count: parent.count - left_count,
    })
}

/// Extra-trees cut: one threshold drawn uniformly in `[min, max)` of the node's values.
pub(crate) fn random_cut_feature<R: Rng>(
    feature: usize,
    col: &[f64],
    rows: &[usize],
    gt: &[f64],
    h: &[f64],
    parent: &NodeStats,
    crit: &Criterion,
    limits: &Limits,
    rng: &mut R,
) -> Option<SplitCandidate> {
    let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
        (lo.min(col[r]), hi.max(col[r]))
    });
    if !(lo < hi) {
        return None;
    }
    let threshold = rng.random_range(lo..hi);
    let mut left = BinStat::default();
    for &r in rows {
        if col[r] <= threshold {
            left.push(gt[r], h[r]);
        }
    }
    let right = parent.minus(&left);
    if left.count < limits.min_samples_leaf || right.count < limits.min_samples_leaf {
        return None;
    }
    if left.h < limits.min_child_weight || right.h < limits.min_child_weight {
        return None;
    }
    Some(SplitCandidate {
        feature,
        threshold,
        gain: crit.gain(&left, &right, &parent.as_bin()),
        left_count: left.count,
        right_count: right.count,
    })
}

/// Best variance-reduction split of a single feature.
///
/// Thresholds are midpoints of adjacent distinct values; samples with
/// `value <= threshold` go left. Returns `None` when no boundary leaves
/// `min_samples_leaf` samples on both sides or no boundary reduces the SSE.
pub fn best_split_exact(
    feature_values: &[f64],
    targets: &[f64],
    sample_weights: &[f64],
    min_samples_leaf: usize,
) -> Option<SplitCandidate> {
    let n = feature_values.len();
    if n < 2 || targets.len() != n || sample_weights.len() != n {
        return None;
    }
    let rows: Vec<usize> = (0..n).collect();
    let gt: Vec<f64> = targets.iter().zip(sample_weights).map(|(t, w)| t * w).collect();
    let parent = NodeStats::over(&rows, &gt, targets, sample_weights);
    let limits = Limits {
        min_samples_leaf: min_samples_leaf.max(1),
        min_child_weight: 0.0,
    };
    let c = exact_feature(
        0,
        feature_values,
        &rows,
        &gt,
        sample_weights,
        &parent,
        &Criterion::VARIANCE,
        &limits,
        &mut Vec::new(),
        &mut Vec::new(),
        &mut Vec::new(),
    )?;
    (c.gain > parent.min_gain()).then_some(c)
}

/// Best split from per-bin sums of one feature. `upper_edges[b]` is the
/// threshold that sends bins `0..=b` left.
pub fn best_split_histogram(
    upper_edges: &[f64],
    bin_stats: &[BinStat],
    min_samples_leaf: usize,
) -> Option<SplitCandidate> {
    let mut parent = NodeStats::default();
    let mut groups = Vec::new();
    let mut group_bins = Vec::new();
    for (b, s) in bin_stats.iter().enumerate() {
        parent.g += s.g;
        parent.h += s.h;
        parent.count += s.count;
        if s.count > 0 {
            groups.push(*s);
            group_bins.push(b);
        }
    }
    // Uncentered second moment is not recoverable from sums; scale by G^2/H.
    parent.sq = if parent.h > 0.0 { parent.g * parent.g / parent.h } else { 0.0 };
    let limits = Limits {
        min_samples_leaf: min_samples_leaf.max(1),
        min_child_weight: 0.0,
    };
    let (k, gain, left_count) = scan_groups(&groups, &parent, &Criterion::VARIANCE, &limits)?;
    (gain > parent.min_gain()).then(|| SplitCandidate {
        feature: 0,
        threshold: upper_edges[group_bins[k]],
        gain,
        left_count,
        right_count: parent.count - left_count,
    })
}
