//! CART trees on rank-transformed features.
//!
//! Every node draws its candidate features from its own PRNG stream, seeded
//! from the tree seed and the node's path. Growth therefore never depends on
//! how much of the tree was built before, so a tree grown to depth `D` and
//! cut at depth `d` is exactly the tree grown with `max_depth = d`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::seed::derive_seed;

/// A tree node. `counts` are bootstrap sample counts `[negative, positive]`
/// reaching the node; `score` is their weighted positive fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    /// Samples with `x[feature] <= threshold` go left.
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
        counts: [u32; 2],
        score: f64,
    },
    Leaf { counts: [u32; 2], score: f64 },
}

impl Node {
    pub fn counts(&self) -> [u32; 2] {
        match *self {
            Node::Split { counts, .. } | Node::Leaf { counts, .. } => counts,
        }
    }

    pub fn score(&self) -> f64 {
        match *self {
            Node::Split { score, .. } | Node::Leaf { score, .. } => score,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
    /// Share of training rows left out of this tree's bootstrap sample.
    pub oob_fraction: f64,
}

impl Tree {
    pub fn leaf_score(&self, x: &[f64]) -> f64 {
        self.score_within_depth(x, usize::MAX)
    }

    /// Score as if every node at `depth_limit` were a leaf.
    pub fn score_within_depth(&self, x: &[f64], depth_limit: usize) -> f64 {
        let mut i = 0;
        let mut depth = 0;
        loop {
            match self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    score,
                    ..
                } => {
                    if depth >= depth_limit {
                        return score;
                    }
                    i = if x[feature as usize] <= threshold { left } else { right } as usize;
                    depth += 1;
                }
                Node::Leaf { score, .. } => return score,
            }
        }
    }

    /// The tree with every node at `depth_limit` turned into a leaf.
    pub fn truncated(&self, depth_limit: usize) -> Tree {
        let mut nodes = vec![self.nodes[0]];
        let mut stack = vec![(0usize, 0usize, 0usize)]; // (source, destination, depth)
        while let Some((src, dst, depth)) = stack.pop() {
            match self.nodes[src] {
                Node::Split {
                    counts,
                    score,
                    ..
                } if depth >= depth_limit => nodes[dst] = Node::Leaf { counts, score },
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    counts,
                    score,
                } => {
                    let l = nodes.len();
                    nodes.push(self.nodes[left as usize]);
                    nodes.push(self.nodes[right as usize]);
                    nodes[dst] = Node::Split {
                        feature,
                        threshold,
                        left: l as u32,
                        right: l as u32 + 1,
                        counts,
                        score,
                    };
                    stack.push((right as usize, l + 1, depth + 1));
                    stack.push((left as usize, l, depth + 1));
                }
                Node::Leaf { .. } => nodes[dst] = self.nodes[src],
            }
        }
        Tree {
            nodes,
            oob_fraction: self.oob_fraction,
        }
    }

    /// Depth of every node, root at 0.
    pub fn node_depths(&self) -> Vec<usize> {
        let mut depth = vec![0; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            if let Node::Split { left, right, .. } = *node {
                depth[left as usize] = depth[i] + 1;
                depth[right as usize] = depth[i] + 1;
            }
        }
        depth
    }

    pub fn max_depth(&self) -> usize {
        self.node_depths().into_iter().max().unwrap_or(0)
    }

    pub fn leaves(&self) -> impl Iterator<Item = ([u32; 2], f64)> + '_ {
        self.nodes.iter().filter_map(|n| match *n {
            Node::Leaf { counts, score } => Some((counts, score)),
            Node::Split { .. } => None,
        })
    }
}

/// Training rows converted to dense per-feature ranks.
pub(crate) struct RankedData<'a> {
    pub rows: usize,
    pub cols: usize,
    /// Column-major: `ranks[f * rows + i]`.
    ranks: Vec<u32>,
    /// Sorted distinct values of each feature.
    distinct: Vec<Vec<f64>>,
    pub y: &'a [u8],
}

impl<'a> RankedData<'a> {
    /// `x` is row-major with `cols` values per row. Values must not be NaN.
    pub fn new(x: &[f64], cols: usize, y: &'a [u8]) -> Self {
        let rows = y.len();
        let mut ranks = vec![0u32; rows * cols];
        let mut distinct = Vec::with_capacity(cols);
        let mut order: Vec<u32> = Vec::with_capacity(rows);
        for f in 0..cols {
            order.clear();
            order.extend(0..rows as u32);
            order.sort_unstable_by(|&a, &b| x[a as usize * cols + f].total_cmp(&x[b as usize * cols + f]));
            let mut vals: Vec<f64> = Vec::new();
            for &i in &order {
                let v = x[i as usize * cols + f];
                // -0.0 and 0.0 compare equal and share a rank.
                if vals.last() != Some(&v) {
                    vals.push(v);
                }
                ranks[f * rows + i as usize] = (vals.len() - 1) as u32;
            }
            distinct.push(vals);
        }
        Self {
            rows,
            cols,
            ranks,
            distinct,
            y,
        }
    }

    fn rank(&self, f: usize, i: u32) -> u32 {
        self.ranks[f * self.rows + i as usize]
    }

    fn threshold(&self, f: usize, lo_rank: u32, hi_rank: u32) -> f64 {
        let a = self.distinct[f][lo_rank as usize];
        let b = self.distinct[f][hi_rank as usize];
        let mut mid = (a + b) / 2.0;
        if !mid.is_finite() {
            mid = a / 2.0 + b / 2.0;
        }
        if mid >= b {
            a
        } else {
            mid
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: u64,
    pub max_features: usize,
    pub class_weight: [f64; 2],
    pub bootstrap: bool,
}

/// Best split found for a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    /// Weighted Gini impurity decrease relative to the node.
    pub impurity_decrease: f64,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    left_rank: u32,
    right_rank: u32,
    score: f64,
}

/// `Σ_side (pos² + neg²) / weight`, as one division; larger is purer.
fn purity_score(l: [f64; 2], r: [f64; 2]) -> f64 {
    let (wl, wr) = (l[0] + l[1], r[0] + r[1]);
    let a = l[0] * l[0] + l[1] * l[1];
    let b = r[0] * r[0] + r[1] * r[1];
    (a * wr + b * wl) / (wl * wr)
}

fn gini(w: [f64; 2]) -> f64 {
    let t = w[0] + w[1];
    1.0 - (w[0] * w[0] + w[1] * w[1]) / (t * t)
}

/// Running best split of one node.
struct Sweep {
    total_w: [f64; 2],
    total_c: u64,
    parent: f64,
    msl: u64,
    best: Option<Candidate>,
}

impl Sweep {
    /// Considers the boundary after all samples of rank `here`, with the
    /// next occupied rank `next`. Returns false once the right side is too small.
    fn boundary(&mut self, f: usize, here: u32, next: u32, lw: [f64; 2], lc: u64) -> bool {
        if lc < self.msl {
            return true;
        }
        if self.total_c - lc < self.msl {
            return false;
        }
        let rw = [self.total_w[0] - lw[0], self.total_w[1] - lw[1]];
        let score = purity_score(lw, rw);
        if score <= self.parent {
            return true;
        }
        let better = match self.best {
            None => true,
            Some(b) => score > b.score || (score == b.score && f < b.feature),
        };
        if better {
            self.best = Some(Candidate {
                feature: f,
                left_rank: here,
                right_rank: next,
                score,
            });
        }
        true
    }
}

struct Builder<'d, 'a> {
    data: &'d RankedData<'a>,
    params: TreeParams,
    mult: Vec<u32>,
    weight: Vec<f64>,
    features: Vec<usize>,
    keys: Vec<u64>,
    hist_w: Vec<[f64; 2]>,
    hist_c: Vec<u64>,
}

impl Builder<'_, '_> {
    fn new<'d, 'a>(data: &'d RankedData<'a>, params: TreeParams, mult: Vec<u32>) -> Builder<'d, 'a> {
        let weight = mult
            .iter()
            .zip(data.y)
            .map(|(&m, &y)| f64::from(m) * params.class_weight[y as usize])
            .collect();
        let widest = data.distinct.iter().map(Vec::len).max().unwrap_or(0);
        Builder {
            data,
            params,
            mult,
            weight,
            features: (0..data.cols).collect(),
            keys: Vec::new(),
            hist_w: vec![[0.0; 2]; widest],
            hist_c: vec![0; widest],
        }
    }

    fn totals(&self, samples: &[u32]) -> ([u64; 2], [f64; 2]) {
        let mut c = [0u64; 2];
        let mut w = [0f64; 2];
        for &i in samples {
            let k = self.data.y[i as usize] as usize;
            c[k] += u64::from(self.mult[i as usize]);
            w[k] += self.weight[i as usize];
        }
        (c, w)
    }

    /// Scans feature `f` by sorting the node's samples. Returns false for a constant feature.
    fn scan_sorted(&mut self, f: usize, samples: &[u32], sweep: &mut Sweep) -> bool {
        let data = self.data;
        self.keys.clear();
        self.keys
            .extend(samples.iter().map(|&i| (u64::from(data.rank(f, i)) << 32) | u64::from(i)));
        self.keys.sort_unstable();
        if self.keys[0] >> 32 == self.keys[self.keys.len() - 1] >> 32 {
            return false;
        }
        let mut lw = [0f64; 2];
        let mut lc = 0u64;
        for pos in 0..self.keys.len() - 1 {
            let i = (self.keys[pos] & 0xFFFF_FFFF) as usize;
            lw[data.y[i] as usize] += self.weight[i];
            lc += u64::from(self.mult[i]);
            let here = (self.keys[pos] >> 32) as u32;
            let next = (self.keys[pos + 1] >> 32) as u32;
            if here != next && !sweep.boundary(f, here, next, lw, lc) {
                break;
            }
        }
        true
    }

    /// Scans feature `f` through per-rank tallies. Same result as [`Self::scan_sorted`].
    fn scan_histogram(&mut self, f: usize, samples: &[u32], sweep: &mut Sweep) -> bool {
        let data = self.data;
        let (mut lo, mut hi) = (u32::MAX, 0);
        for &i in samples {
            let r = data.rank(f, i);
            lo = lo.min(r);
            hi = hi.max(r);
            let k = data.y[i as usize] as usize;
            self.hist_w[r as usize][k] += self.weight[i as usize];
            self.hist_c[r as usize] += u64::from(self.mult[i as usize]);
        }
        let (lo, hi) = (lo as usize, hi as usize);
        if lo == hi {
            self.hist_w[lo] = [0.0; 2];
            self.hist_c[lo] = 0;
            return false;
        }
        let mut lw = [0f64; 2];
        let mut lc = 0u64;
        let mut here = lo;
        let mut open = true;
        lw[0] += self.hist_w[lo][0];
        lw[1] += self.hist_w[lo][1];
        lc += self.hist_c[lo];
        for next in lo + 1..=hi {
            if self.hist_c[next] == 0 && self.hist_w[next] == [0.0; 2] {
                continue;
            }
            if open {
                open = sweep.boundary(f, here as u32, next as u32, lw, lc);
            }
            lw[0] += self.hist_w[next][0];
            lw[1] += self.hist_w[next][1];
            lc += self.hist_c[next];
            here = next;
        }
        self.hist_w[lo..=hi].fill([0.0; 2]);
        self.hist_c[lo..=hi].fill(0);
        true
    }

    /// Searches features in random order, stopping once `max_features`
    /// non-constant features have been seen and a valid split exists.
    fn find_split(&mut self, samples: &[u32], total_w: [f64; 2], rng: &mut ChaCha8Rng) -> Option<Candidate> {
        let d = self.data.cols;
        let mut sweep = Sweep {
            total_w,
            total_c: samples.iter().map(|&i| u64::from(self.mult[i as usize])).sum(),
            parent: (total_w[0] * total_w[0] + total_w[1] * total_w[1]) / (total_w[0] + total_w[1]),
            msl: self.params.min_samples_leaf,
            best: None,
        };
        for (k, f) in self.features.iter_mut().enumerate() {
            *f = k;
        }
        let mut visited = 0;
        for k in 0..d {
            if visited >= self.params.max_features && sweep.best.is_some() {
                break;
            }
            let j = if self.params.max_features >= d { k } else { rng.random_range(k..d) };
            self.features.swap(k, j);
            let f = self.features[k];
            let non_constant = if self.data.distinct[f].len() <= 2 * samples.len() {
                self.scan_histogram(f, samples, &mut sweep)
            } else {
                self.scan_sorted(f, samples, &mut sweep)
            };
            visited += usize::from(non_constant);
        }
        sweep.best
    }

    fn stats(&self, samples: &[u32]) -> ([u32; 2], f64, [u64; 2], [f64; 2]) {
        let (c, w) = self.totals(samples);
        let total = w[0] + w[1];
        let score = if total > 0.0 { w[1] / total } else { 0.0 };
        ([c[0] as u32, c[1] as u32], score, c, w)
    }

    fn build(&mut self, mut samples: Vec<u32>, tree_seed: u64) -> Vec<Node> {
        let placeholder = Node::Leaf {
            counts: [0, 0],
            score: 0.0,
        };
        let mut nodes = vec![placeholder];
        // (start, end, depth, node slot, node seed)
        let mut stack = vec![(0usize, samples.len(), 0usize, 0usize, derive_seed(tree_seed, 1))];
        while let Some((start, end, depth, slot, node_seed)) = stack.pop() {
            let node_samples = &samples[start..end];
            let (counts, score, c, w) = self.stats(node_samples);
            let pure = c[0] == 0 || c[1] == 0;
            let too_small = c[0] + c[1] < 2 * self.params.min_samples_leaf;
            let split = if pure || too_small || depth >= self.params.max_depth {
                None
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(node_seed);
                self.find_split(node_samples, w, &mut rng)
            };
            let Some(split) = split else {
                nodes[slot] = Node::Leaf { counts, score };
                continue;
            };
            let f = split.feature;
            let slice = &mut samples[start..end];
            let mut mid = 0;
            for k in 0..slice.len() {
                if self.data.rank(f, slice[k]) <= split.left_rank {
                    slice.swap(mid, k);
                    mid += 1;
                }
            }
            let mid = start + mid;
            let left = nodes.len();
            nodes.push(placeholder);
            nodes.push(placeholder);
            nodes[slot] = Node::Split {
                feature: f as u32,
                threshold: self.data.threshold(f, split.left_rank, split.right_rank),
                left: left as u32,
                right: left as u32 + 1,
                counts,
                score,
            };
            stack.push((mid, end, depth + 1, left + 1, derive_seed(node_seed, 3)));
            stack.push((start, mid, depth + 1, left, derive_seed(node_seed, 2)));
        }
        nodes
    }
}

pub(crate) fn grow_tree(data: &RankedData<'_>, params: TreeParams, seed: u64) -> Tree {
    let n = data.rows;
    let mut mult = vec![0u32; n];
    if params.bootstrap {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
        for _ in 0..n {
            mult[rng.random_range(0..n)] += 1;
        }
    } else {
        mult.fill(1);
    }
    let oob = mult.iter().filter(|&&m| m == 0).count();
    let samples: Vec<u32> = (0..n as u32).filter(|&i| mult[i as usize] > 0).collect();
    let mut builder = Builder::new(data, params, mult);
    Tree {
        nodes: builder.build(samples, seed),
        oob_fraction: oob as f64 / n as f64,
    }
}

/// Exhaustive best split over every feature with unit weights.
///
/// Returns `None` when no threshold decreases impurity while keeping
/// `min_samples_leaf` rows on each side.
pub fn best_split(x: &[f64], cols: usize, y: &[u8], min_samples_leaf: usize) -> Option<SplitChoice> {
    if y.is_empty() || cols == 0 || x.len() != y.len() * cols {
        return None;
    }
    let data = RankedData::new(x, cols, y);
    let params = TreeParams {
        max_depth: 1,
        min_samples_leaf: min_samples_leaf.max(1) as u64,
        max_features: cols,
        class_weight: [1.0, 1.0],
        bootstrap: false,
    };
    let mut b = Builder::new(&data, params, vec![1; y.len()]);
    let samples: Vec<u32> = (0..y.len() as u32).collect();
    let (_, w) = b.totals(&samples);
    let c = b.find_split(&samples, w, &mut ChaCha8Rng::seed_from_u64(0))?;
    let total = w[0] + w[1];
    let mut lw = [0f64; 2];
    for &i in &samples {
        if data.rank(c.feature, i) <= c.left_rank {
            lw[y[i as usize] as usize] += 1.0;
        }
    }
    let rw = [w[0] - lw[0], w[1] - lw[1]];
    let (nl, nr) = (lw[0] + lw[1], rw[0] + rw[1]);
    Some(SplitChoice {
        feature: c.feature,
        threshold: data.threshold(c.feature, c.left_rank, c.right_rank),
        impurity_decrease: gini(w) - (nl / total) * gini(lw) - (nr / total) * gini(rw),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(seed: u64, rows: usize, cols: usize, levels: u32) -> (Vec<f64>, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..rows * cols).map(|_| f64::from(rng.random_range(0..levels))).collect();
        let y = (0..rows).map(|r| u8::from(x[r * cols] + x[r * cols + 1] > f64::from(levels))).collect();
        (x, y)
    }

    fn params(max_depth: usize) -> TreeParams {
        TreeParams {
            max_depth,
            min_samples_leaf: 2,
            max_features: 2,
            class_weight: [1.0, 1.0],
            bootstrap: true,
        }
    }

    #[test]
    fn truncation_equals_shallow_growth() {
        let (x, y) = data(1, 400, 6, 1000);
        let ranked = RankedData::new(&x, 6, &y);
        for seed in 0..5 {
            let deep = grow_tree(&ranked, params(30), seed);
            for d in [0, 1, 3, 6] {
                assert_eq!(deep.truncated(d), grow_tree(&ranked, params(d), seed), "depth {d}");
            }
        }
    }

    #[test]
    fn histogram_and_sorted_scans_agree() {
        // Few levels forces the histogram path at the top, many forces sorting.
        for levels in [3, 10_000] {
            let (x, y) = data(2, 300, 4, levels);
            let ranked = RankedData::new(&x, 4, &y);
            let samples: Vec<u32> = (0..300).collect();
            for f in 0..4 {
                let mut b = Builder::new(&ranked, params(5), vec![1; 300]);
                let (_, w) = b.totals(&samples);
                let mk = || Sweep {
                    total_w: w,
                    total_c: 300,
                    parent: (w[0] * w[0] + w[1] * w[1]) / 300.0,
                    msl: 2,
                    best: None,
                };
                let (mut s1, mut s2) = (mk(), mk());
                b.scan_sorted(f, &samples, &mut s1);
                b.scan_histogram(f, &samples, &mut s2);
                let key = |s: &Sweep| s.best.map(|c| (c.feature, c.left_rank, c.right_rank, c.score.to_bits()));
                assert_eq!(key(&s1), key(&s2));
            }
        }
    }
}
