//! CART classification trees with Gini impurity.
//!
//! Candidate thresholds sit at midpoints between adjacent distinct values of
//! a feature among the node's samples. Columns are binned once per training
//! run (bin = rank among the column's distinct values); a node scans its
//! samples' bins either through a dense histogram or a sort, whichever is
//! cheaper, and both yield the same split.

use ndarray::{Array2, ArrayView1};
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::rng::Rng;

/// Minimum impurity decrease for a split to be accepted.
const MIN_DECREASE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or too small.
    #[serde(default)]
    pub max_depth: Option<usize>,
    #[serde(default = "default_min_split")]
    pub min_samples_split: usize,
}

fn default_min_split() -> usize {
    2
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Leaf {
        class: u32,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub(crate) nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn predict_row(&self, row: ArrayView1<f64>) -> u32 {
        let mut at = 0usize;
        loop {
            match self.nodes[at] {
                Node::Leaf { class } => return class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[feature] <= threshold {
                        left as usize
                    } else {
                        right as usize
                    }
                }
            }
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => {
                    1 + walk(nodes, left as usize).max(walk(nodes, right as usize))
                }
            }
        }
        walk(&self.nodes, 0)
    }

    /// Flat node array; children always follow their parent.
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> Node {
        self.nodes[0]
    }
}

/// Gini impurity of a class-count vector.
pub fn gini(counts: &[u32]) -> f64 {
    let n: u32 = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

/// Columns as bin indices into their sorted distinct values.
pub(crate) struct Binned {
    bins: Vec<Vec<u32>>,
    values: Vec<Vec<f64>>,
}

impl Binned {
    pub(crate) fn new(x: &Array2<f64>) -> Self {
        let mut bins = Vec::with_capacity(x.ncols());
        let mut values = Vec::with_capacity(x.ncols());
        for col in x.columns() {
            let mut distinct: Vec<f64> = col.to_vec();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            let b = col
                .iter()
                .map(|v| distinct.partition_point(|d| d < v) as u32)
                .collect();
            bins.push(b);
            values.push(distinct);
        }
        Self { bins, values }
    }

    pub(crate) fn n_features(&self) -> usize {
        self.bins.len()
    }
}

struct Candidate {
    feature: usize,
    /// Last bin that goes left.
    bin: u32,
    threshold: f64,
    score: f64,
}

pub(crate) struct Grower<'a> {
    binned: &'a Binned,
    labels: &'a [u32],
    n_classes: usize,
    params: TreeParams,
    /// Features examined per node; `None` means all of them.
    mtry: Option<usize>,
    rng: Option<Rng>,
    hist: Vec<u32>,
    pairs: Vec<(u32, u32)>,
    left: Vec<u32>,
    group: Vec<u32>,
}

impl<'a> Grower<'a> {
    pub(crate) fn new(
        binned: &'a Binned,
        labels: &'a [u32],
        n_classes: usize,
        params: TreeParams,
        mtry: Option<usize>,
        rng: Option<Rng>,
    ) -> Self {
        Self {
            binned,
            labels,
            n_classes,
            params,
            mtry,
            rng,
            hist: Vec::new(),
            pairs: Vec::new(),
            left: vec![0; n_classes],
            group: vec![0; n_classes],
        }
    }

    /// Grow a tree over `samples` (row indices, duplicates allowed).
    pub(crate) fn grow(mut self, mut samples: Vec<u32>) -> DecisionTree {
        let mut nodes: Vec<Node> = Vec::new();
        // (start, end, depth, node slot)
        let mut work = vec![(0usize, samples.len(), 0usize, 0usize)];
        nodes.push(Node::Leaf { class: 0 });
        let mut features: Vec<usize> = Vec::new();
        while let Some((start, end, depth, slot)) = work.pop() {
            let node_samples = &mut samples[start..end];
            let mut counts = vec![0u32; self.n_classes];
            for &s in node_samples.iter() {
                counts[self.labels[s as usize] as usize] += 1;
            }
            let majority = majority(&counts);
            let n = node_samples.len();
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            let depth_reached = self.params.max_depth.is_some_and(|d| depth >= d);
            if pure || depth_reached || n < self.params.min_samples_split {
                nodes[slot] = Node::Leaf { class: majority };
                continue;
            }
            self.candidate_features(&mut features);
            let parent = gini(&counts);
            let split = self.best_split(node_samples, &features, n, parent);
            let Some(split) = split else {
                nodes[slot] = Node::Leaf { class: majority };
                continue;
            };
            let bins = &self.binned.bins[split.feature];
            let mut mid = 0;
            for i in 0..n {
                if bins[node_samples[i] as usize] <= split.bin {
                    node_samples.swap(i, mid);
                    mid += 1;
                }
            }
            debug_assert!(mid > 0 && mid < n);
            let left = nodes.len();
            nodes.push(Node::Leaf { class: 0 });
            let right = nodes.len();
            nodes.push(Node::Leaf { class: 0 });
            nodes[slot] = Node::Split {
                feature: split.feature,
                threshold: split.threshold,
                left: left as u32,
                right: right as u32,
            };
            work.push((start + mid, end, depth + 1, right));
            work.push((start, start + mid, depth + 1, left));
        }
        DecisionTree { nodes }
    }

    fn candidate_features(&mut self, out: &mut Vec<usize>) {
        out.clear();
        let d = self.binned.n_features();
        match (self.mtry, self.rng.as_mut()) {
            (Some(m), Some(rng)) if m < d => {
                out.extend(index::sample(rng, d, m));
                out.sort_unstable();
            }
            _ => out.extend(0..d),
        }
    }

    fn best_split(&mut self, samples: &[u32], features: &[usize], n: usize, parent: f64) -> Option<Candidate> {
        let nf = n as f64;
        // weighted child impurity = (n - score) / n; must beat parent
        let min_score = nf * (1.0 - parent + MIN_DECREASE);
        let mut best: Option<Candidate> = None;
        for &f in features {
            if let Some(c) = self.best_split_on(samples, f) {
                if c.score > min_score && best.as_ref().is_none_or(|b| c.score > b.score) {
                    best = Some(c);
                }
            }
        }
        best
    }

    fn best_split_on(&mut self, samples: &[u32], feature: usize) -> Option<Candidate> {
        let binned = self.binned;
        let n_bins = binned.values[feature].len();
        if n_bins < 2 {
            return None;
        }
        let c = self.n_classes;
        let bins = &binned.bins[feature];
        let values = &binned.values[feature];
        let labels = self.labels;
        self.left.iter_mut().for_each(|v| *v = 0);
        let mut n_left = 0u32;
        let mut prev: Option<u32> = None;
        let mut best: Option<Candidate> = None;

        let total: Vec<u32> = {
            let mut t = vec![0u32; c];
            for &s in samples {
                t[labels[s as usize] as usize] += 1;
            }
            t
        };
        let n = samples.len() as u32;

        let mut consider = |bin: u32, group: &[u32], left: &mut [u32], n_left: &mut u32, prev: &mut Option<u32>| {
            if let Some(p) = *prev {
                let nl = *n_left as f64;
                let nr = (n - *n_left) as f64;
                let mut sl = 0.0;
                let mut sr = 0.0;
                for k in 0..c {
                    let l = left[k] as f64;
                    let r = (total[k] - left[k]) as f64;
                    sl += l * l;
                    sr += r * r;
                }
                let score = sl / nl + sr / nr;
                if best.as_ref().is_none_or(|b| score > b.score) {
                    let lo = values[p as usize];
                    let hi = values[bin as usize];
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if !(threshold >= lo && threshold < hi) {
                        threshold = lo;
                    }
                    best = Some(Candidate {
                        feature,
                        bin: p,
                        threshold,
                        score,
                    });
                }
            }
            for k in 0..c {
                left[k] += group[k];
                *n_left += group[k];
            }
            *prev = Some(bin);
        };

        if n_bins * c <= 4 * samples.len() {
            self.hist.clear();
            self.hist.resize(n_bins * c, 0);
            for &s in samples {
                let s = s as usize;
                self.hist[bins[s] as usize * c + labels[s] as usize] += 1;
            }
            for b in 0..n_bins {
                let group = &self.hist[b * c..(b + 1) * c];
                if group.iter().all(|&g| g == 0) {
                    continue;
                }
                consider(b as u32, group, &mut self.left, &mut n_left, &mut prev);
            }
        } else {
            self.pairs.clear();
            self.pairs
                .extend(samples.iter().map(|&s| (bins[s as usize], labels[s as usize])));
            self.pairs.sort_unstable();
            let mut i = 0;
            while i < self.pairs.len() {
                let bin = self.pairs[i].0;
                self.group.iter_mut().for_each(|g| *g = 0);
                while i < self.pairs.len() && self.pairs[i].0 == bin {
                    self.group[self.pairs[i].1 as usize] += 1;
                    i += 1;
                }
                consider(bin, &self.group, &mut self.left, &mut n_left, &mut prev);
            }
        }
        best
    }
}

/// Most frequent class, ties to the lower index.
pub(crate) fn majority(counts: &[u32]) -> u32 {
    let mut best = 0usize;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best as u32
}

pub fn train_decision_tree(x: &Array2<f64>, labels: &[u32], n_classes: usize, params: TreeParams) -> DecisionTree {
    let binned = Binned::new(x);
    let samples: Vec<u32> = (0..x.nrows() as u32).collect();
    Grower::new(&binned, labels, n_classes, params, None, None).grow(samples)
}
