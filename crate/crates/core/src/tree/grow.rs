use nalgebra::DMatrix;
use rand::seq::index;
use rand::Rng;

use super::bins::HistogramBins;
use super::split::{
    exact_feature, histogram_feature, random_cut_feature, BinStat, Criterion, Limits, NodeStats,
    SplitCandidate,
};
use super::{RegressionTree, SplitMode, TreeHyperparams, TreeNode};

/// Inputs for one tree. `targets` and `hess` are indexed by matrix row.
pub(crate) struct GrowSpec<'a> {
    pub x: &'a DMatrix<f64>,
    pub bins: Option<&'a HistogramBins>,
    pub targets: &'a [f64],
    pub hess: &'a [f64],
    pub hp: &'a TreeHyperparams,
    pub crit: Criterion,
    /// Features this tree may split on, ascending.
    pub features: &'a [usize],
}

pub(crate) struct Grown {
    pub tree: RegressionTree,
    /// `(leaf node, training rows routed there)`
    pub leaf_rows: Vec<(usize, Vec<usize>)>,
}

struct Pending {
    id: usize,
    rows: Vec<usize>,
    depth: usize,
    split: Option<SplitCandidate>,
}

struct Scratch {
    order: Vec<(f64, u32)>,
    groups: Vec<BinStat>,
    values: Vec<f64>,
    hist: Vec<BinStat>,
    group_bins: Vec<usize>,
}

struct Grower<'s, 'a, R> {
    spec: &'s GrowSpec<'a>,
    gt: Vec<f64>,
    limits: Limits,
    rng: &'s mut R,
    scratch: Scratch,
}

impl<R: Rng> Grower<'_, '_, R> {
    fn column(&self, f: usize) -> &[f64] {
        let n = self.spec.x.nrows();
        &self.spec.x.as_slice()[f * n..(f + 1) * n]
    }

    fn stats(&self, rows: &[usize]) -> NodeStats {
        NodeStats::over(rows, &self.gt, self.spec.targets, self.spec.hess)
    }

    fn find_split(&mut self, rows: &[usize], depth: usize, stats: &NodeStats) -> Option<SplitCandidate> {
        let hp = self.spec.hp;
        if hp.max_depth.is_some_and(|d| depth >= d)
            || rows.len() < hp.min_samples_split
            || rows.len() < 2 * hp.min_samples_leaf
        {
            return None;
        }
        let allowed = self.spec.features;
        let k = hp.max_features.resolve(allowed.len());
        let mut cands: Vec<usize> = if k < allowed.len() {
            index::sample(self.rng, allowed.len(), k)
                .into_iter()
                .map(|i| allowed[i])
                .collect()
        } else {
            allowed.to_vec()
        };
        cands.sort_unstable();

        let crit = self.spec.crit;
        let x: &DMatrix<f64> = self.spec.x;
        let n = x.nrows();
        let mut best: Option<SplitCandidate> = None;
        for f in cands {
            let col = &x.as_slice()[f * n..(f + 1) * n];
            let c = match hp.split_mode {
                SplitMode::Exact => {
                    let s = &mut self.scratch;
                    exact_feature(
                        f,
                        col,
                        rows,
                        &self.gt,
                        self.spec.hess,
                        stats,
                        &crit,
                        &self.limits,
                        &mut s.order,
                        &mut s.groups,
                        &mut s.values,
                    )
                }
                SplitMode::Histogram => {
                    let bins = self.spec.bins.expect("histogram mode needs bins");
                    let s = &mut self.scratch;
                    histogram_feature(
                        f,
                        bins,
                        rows,
                        &self.gt,
                        self.spec.hess,
                        stats,
                        &crit,
                        &self.limits,
                        &mut s.hist,
                        &mut s.groups,
                        &mut s.group_bins,
                    )
                }
                SplitMode::RandomCut => random_cut_feature(
                        f,
                        col,
                        rows,
                        &self.gt,
                        self.spec.hess,
                        stats,
                        &crit,
                        &self.limits,
                        self.rng,
                    ),
            };
            if let Some(c) = c {
                if best.is_none_or(|b| c.gain > b.gain) {
                    best = Some(c);
                }
            }
        }
        best.filter(|b| b.gain > 0.0 && b.gain > stats.min_gain())
    }
}

/// Grows a tree over `rows` (repeats allowed).
///
/// Without `max_leaves` nodes are expanded depth-first; with it, the pending
/// leaf of largest gain is expanded next (ties to the lowest node id). Split
/// candidates are computed when a node is created, so random draws happen in
/// creation order either way.
pub(crate) fn grow<R: Rng>(spec: &GrowSpec<'_>, rows: Vec<usize>, rng: &mut R) -> Grown {
    let gt = spec
        .targets
        .iter()
        .zip(spec.hess)
        .map(|(t, h)| t * h)
        .collect();
    let mut g = Grower {
        spec,
        gt,
        limits: Limits {
            min_samples_leaf: spec.hp.min_samples_leaf,
            min_child_weight: spec.hp.min_child_weight,
        },
        rng,
        scratch: Scratch {
            order: Vec::new(),
            groups: Vec::new(),
            values: Vec::new(),
            hist: Vec::new(),
            group_bins: Vec::new(),
        },
    };
    let n_features = spec.x.ncols();
    let crit = spec.crit;
    let mut nodes = Vec::new();
    let mut leaf_rows = Vec::new();

    let root_stats = g.stats(&rows);
    nodes.push(TreeNode::Leaf {
        value: crit.leaf_value(root_stats.g, root_stats.h),
        n_samples: rows.len(),
    });
    let split = g.find_split(&rows, 0, &root_stats);
    let mut frontier = vec![Pending {
        id: 0,
        rows,
        depth: 0,
        split,
    }];
    let mut n_leaves = 1;

    loop {
        let pick = match spec.hp.max_leaves {
            None => frontier.len().checked_sub(1),
            Some(max) if n_leaves >= max => None,
            Some(_) => frontier
                .iter()
                .enumerate()
                .filter_map(|(i, p)| p.split.map(|s| (i, s.gain, p.id)))
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.2.cmp(&a.2)))
                .map(|(i, _, _)| i),
        };
        let Some(i) = pick else { break };
        let p = if spec.hp.max_leaves.is_none() {
            frontier.pop().unwrap()
        } else {
            frontier.swap_remove(i)
        };
        let Some(split) = p.split else {
            leaf_rows.push((p.id, p.rows));
            continue;
        };
        let col = g.column(split.feature);
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            p.rows.iter().partition(|&&r| col[r] <= split.threshold);
        drop(p.rows);

        let mut children = Vec::with_capacity(2);
        for child_rows in [left_rows, right_rows] {
            let s = g.stats(&child_rows);
            let id = nodes.len();
            nodes.push(TreeNode::Leaf {
                value: crit.leaf_value(s.g, s.h),
                n_samples: child_rows.len(),
            });
            let split = g.find_split(&child_rows, p.depth + 1, &s);
            children.push(Pending {
                id,
                rows: child_rows,
                depth: p.depth + 1,
                split,
            });
        }
        nodes[p.id] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: children[0].id,
            right: children[1].id,
        };
        n_leaves += 1;
        // Right pushed first so the left child is expanded next.
        let right = children.pop().unwrap();
        let left = children.pop().unwrap();
        frontier.push(right);
        frontier.push(left);
    }
    for p in frontier {
        leaf_rows.push((p.id, p.rows));
    }
    leaf_rows.sort_by_key(|(id, _)| *id);
    Grown {
        tree: RegressionTree::from_nodes(n_features, nodes),
        leaf_rows,
    }
}
