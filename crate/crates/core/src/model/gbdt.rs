//! Histogram-based gradient-boosted trees with a softmax objective.
//!
//! Leaf-wise growth under a `num_leaves` budget, second-order (Newton) leaf
//! values, per-feature quantile binning. Training is fully deterministic:
//! no sampling, fixed iteration order, sequential f64 accumulation, ties in
//! split gain resolved by (feature, bin) order and ties across leaves by
//! creation order.

use crate::error::{Error, Result};

/// Boosting hyperparameters.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbdtConfig {
    pub rounds: usize,
    pub learning_rate: f64,
    pub num_leaves: usize,
    pub min_data_in_leaf: usize,
    pub lambda_l2: f64,
    pub max_bins: usize,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        GbdtConfig {
            rounds: 100,
            learning_rate: 0.1,
            num_leaves: 31,
            min_data_in_leaf: 20,
            lambda_l2: 0.0,
            max_bins: 255,
        }
    }
}

impl GbdtConfig {
    fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::Config("train.rounds must be positive".into()));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config("train.learning_rate must be positive".into()));
        }
        if self.num_leaves < 2 {
            return Err(Error::Config("train.num_leaves must be at least 2".into()));
        }
        if self.min_data_in_leaf == 0 {
            return Err(Error::Config("train.min_data_in_leaf must be positive".into()));
        }
        if self.lambda_l2 < 0.0 || !self.lambda_l2.is_finite() {
            return Err(Error::Config("train.lambda_l2 must be non-negative".into()));
        }
        if self.max_bins < 2 || self.max_bins > 255 {
            return Err(Error::Config("train.max_bins must be in 2..=255".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: u32,
        /// Goes left when `x[feature] <= threshold`.
        threshold: f64,
        left: u32,
        right: u32,
    },
}

#[derive(Debug, Clone, PartialEq)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, row: &[f32]) -> f64 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if f64::from(row[*feature as usize]) <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }
}

/// A fitted ensemble: `rounds × n_classes` trees plus per-class base scores.
#[derive(Debug, Clone, PartialEq)]
pub struct Booster {
    n_classes: usize,
    feature_dim: usize,
    init_scores: Vec<f64>,
    /// Round-major: tree for class k of round r is `trees[r * n_classes + k]`.
    trees: Vec<Tree>,
}

impl Booster {
    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Additive raw scores per class.
    pub fn raw_scores(&self, row: &[f32]) -> Vec<f64> {
        let mut scores = self.init_scores.clone();
        for (t, tree) in self.trees.iter().enumerate() {
            scores[t % self.n_classes] += tree.predict(row);
        }
        scores
    }

    /// Softmax over [`Booster::raw_scores`]; max-shifted, so always finite
    /// and summing to 1 up to rounding.
    pub fn probabilities(&self, row: &[f32]) -> Vec<f64> {
        softmax(&self.raw_scores(row))
    }
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exp.iter().sum();
    exp.iter().map(|e| e / total).collect()
}

/// Per-feature bin edges plus the column-major binned matrix.
struct BinnedData {
    n_rows: usize,
    /// Upper edge value per bin, ascending; last edge is the feature max.
    edges: Vec<Vec<f32>>,
    /// `bins[feature * n_rows + row]`
    bins: Vec<u8>,
}

fn build_bins(rows: &[&[f32]], feature_dim: usize, max_bins: usize) -> BinnedData {
    let n = rows.len();
    let mut edges = Vec::with_capacity(feature_dim);
    let mut bins = vec![0u8; feature_dim * n];
    let mut column = vec![0f32; n];
    for j in 0..feature_dim {
        for (i, row) in rows.iter().enumerate() {
            column[i] = row[j];
        }
        let mut sorted = column.clone();
        sorted.sort_unstable_by(f32::total_cmp);
        let mut feature_edges: Vec<f32> = Vec::new();
        let mut distinct = 0usize;
        for (i, &v) in sorted.iter().enumerate() {
            if i == 0 || v != sorted[i - 1] {
                distinct += 1;
                if distinct <= max_bins {
                    feature_edges.push(v);
                }
            }
        }
        if distinct > max_bins {
            // quantile cut over the sorted values, duplicates included
            feature_edges.clear();
            for k in 1..=max_bins {
                let v = sorted[k * n / max_bins - 1];
                if feature_edges.last() != Some(&v) {
                    feature_edges.push(v);
                }
            }
            let max_value = sorted[n - 1];
            if feature_edges.last() != Some(&max_value) {
                feature_edges.push(max_value);
            }
        }
        for (i, &v) in column.iter().enumerate() {
            // first edge >= v; the last edge is the max, so always in range
            let b = feature_edges.partition_point(|&e| e < v);
            bins[j * n + i] = b as u8;
        }
        edges.push(feature_edges);
    }
    BinnedData {
        n_rows: n,
        edges,
        bins,
    }
}

#[derive(Debug, Clone, Copy)]
struct Split {
    gain: f64,
    feature: u32,
    bin: u8,
    threshold: f64,
}

struct LeafState {
    node_id: u32,
    samples: Vec<u32>,
    sum_grad: f64,
    sum_hess: f64,
    best: Option<Split>,
}

struct TreeBuilder<'a> {
    data: &'a BinnedData,
    config: &'a GbdtConfig,
    grad: &'a [f64],
    hess: &'a [f64],
    // per-feature scratch, zeroed per use up to the feature's bin count
    hist_grad: [f64; 256],
    hist_hess: [f64; 256],
    hist_count: [u32; 256],
}

fn leaf_value(sum_grad: f64, sum_hess: f64, config: &GbdtConfig) -> f64 {
    let denom = sum_hess + config.lambda_l2;
    if denom <= 0.0 {
        return 0.0;
    }
    let v = -sum_grad / denom * config.learning_rate;
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

impl<'a> TreeBuilder<'a> {
    fn new(data: &'a BinnedData, config: &'a GbdtConfig, grad: &'a [f64], hess: &'a [f64]) -> Self {
        TreeBuilder {
            data,
            config,
            grad,
            hess,
            hist_grad: [0.0; 256],
            hist_hess: [0.0; 256],
            hist_count: [0; 256],
        }
    }

    /// Best split for one leaf, None when no admissible split improves on
    /// keeping the leaf.
    fn find_best_split(&mut self, leaf: &LeafState) -> Option<Split> {
        let n = self.data.n_rows;
        let lambda = self.config.lambda_l2;
        let min_data = self.config.min_data_in_leaf;
        if leaf.samples.len() < 2 * min_data {
            return None;
        }
        let parent_score = leaf.sum_grad * leaf.sum_grad / (leaf.sum_hess + lambda);
        let mut best: Option<Split> = None;
        for (j, feature_edges) in self.data.edges.iter().enumerate() {
            let n_bins = feature_edges.len();
            if n_bins < 2 {
                continue;
            }
            self.hist_grad[..n_bins].fill(0.0);
            self.hist_hess[..n_bins].fill(0.0);
            self.hist_count[..n_bins].fill(0);
            let column = &self.data.bins[j * n..(j + 1) * n];
            for &i in &leaf.samples {
                let b = column[i as usize] as usize;
                self.hist_grad[b] += self.grad[i as usize];
                self.hist_hess[b] += self.hess[i as usize];
                self.hist_count[b] += 1;
            }
            let total_count = leaf.samples.len() as u32;
            let mut left_grad = 0.0;
            let mut left_hess = 0.0;
            let mut left_count = 0u32;
            // split after bin b: left = bins 0..=b
            for b in 0..n_bins - 1 {
                left_grad += self.hist_grad[b];
                left_hess += self.hist_hess[b];
                left_count += self.hist_count[b];
                let right_count = total_count - left_count;
                if (left_count as usize) < min_data {
                    continue;
                }
                if (right_count as usize) < min_data {
                    break;
                }
                let right_grad = leaf.sum_grad - left_grad;
                let right_hess = leaf.sum_hess - left_hess;
                let gain = left_grad * left_grad / (left_hess + lambda)
                    + right_grad * right_grad / (right_hess + lambda)
                    - parent_score;
                if gain > best.map_or(0.0, |s| s.gain) {
                    best = Some(Split {
                        gain,
                        feature: j as u32,
                        bin: b as u8,
                        threshold: f64::from(feature_edges[b]),
                    });
                }
            }
        }
        best
    }

    fn build(&mut self, samples: Vec<u32>) -> Tree {
        let mut nodes: Vec<Node> = Vec::new();
        let sum_grad: f64 = samples.iter().map(|&i| self.grad[i as usize]).sum();
        let sum_hess: f64 = samples.iter().map(|&i| self.hess[i as usize]).sum();
        nodes.push(Node::Leaf {
            value: leaf_value(sum_grad, sum_hess, self.config),
        });
        let mut root = LeafState {
            node_id: 0,
            samples,
            sum_grad,
            sum_hess,
            best: None,
        };
        root.best = self.find_best_split(&root);

        let mut open: Vec<LeafState> = vec![root];
        let mut n_leaves = 1usize;
        while n_leaves < self.config.num_leaves {
            // deterministic arg-best: strictly greater gain wins, the
            // earlier slot wins ties
            let mut chosen: Option<usize> = None;
            let mut chosen_gain = 0.0;
            for (idx, leaf) in open.iter().enumerate() {
                if let Some(split) = leaf.best {
                    if split.gain > chosen_gain {
                        chosen = Some(idx);
                        chosen_gain = split.gain;
                    }
                }
            }
            let Some(idx) = chosen else { break };
            let leaf = open.swap_remove(idx);
            let split = leaf.best.expect("chosen leaf has a split");

            let n = self.data.n_rows;
            let column = &self.data.bins[split.feature as usize * n..(split.feature as usize + 1) * n];
            let mut left_samples = Vec::new();
            let mut right_samples = Vec::new();
            for &i in &leaf.samples {
                if column[i as usize] <= split.bin {
                    left_samples.push(i);
                } else {
                    right_samples.push(i);
                }
            }

            let left_id = nodes.len() as u32;
            let right_id = left_id + 1;
            let make_child = |samples: Vec<u32>, node_id: u32| {
                let sum_grad: f64 = samples.iter().map(|&i| self.grad[i as usize]).sum();
                let sum_hess: f64 = samples.iter().map(|&i| self.hess[i as usize]).sum();
                LeafState {
                    node_id,
                    samples,
                    sum_grad,
                    sum_hess,
                    best: None,
                }
            };
            let mut left = make_child(left_samples, left_id);
            let mut right = make_child(right_samples, right_id);
            nodes.push(Node::Leaf {
                value: leaf_value(left.sum_grad, left.sum_hess, self.config),
            });
            nodes.push(Node::Leaf {
                value: leaf_value(right.sum_grad, right.sum_hess, self.config),
            });
            nodes[leaf.node_id as usize] = Node::Split {
                feature: split.feature,
                threshold: split.threshold,
                left: left_id,
                right: right_id,
            };
            left.best = self.find_best_split(&left);
            right.best = self.find_best_split(&right);
            open.push(left);
            open.push(right);
            n_leaves += 1;
        }
        Tree { nodes }
    }
}

/// Fit a booster on label indices `0..n_classes`.
pub fn train(
    rows: &[&[f32]],
    labels: &[usize],
    n_classes: usize,
    config: &GbdtConfig,
) -> Result<Booster> {
    config.validate()?;
    let n = rows.len();
    assert!(n > 0 && labels.len() == n, "caller validates shapes");
    let feature_dim = rows[0].len();
    let data = build_bins(rows, feature_dim, config.max_bins);

    // base score: log class prior
    let mut counts = vec![0usize; n_classes];
    for &y in labels {
        counts[y] += 1;
    }
    let init_scores: Vec<f64> = counts
        .iter()
        .map(|&c| ((c.max(1)) as f64 / n as f64).ln())
        .collect();

    let mut scores = vec![0f64; n * n_classes];
    for row_scores in scores.chunks_exact_mut(n_classes) {
        row_scores.copy_from_slice(&init_scores);
    }

    let mut trees = Vec::with_capacity(config.rounds * n_classes);
    let mut grad = vec![0f64; n];
    let mut hess = vec![0f64; n];
    let mut prob = vec![0f64; n * n_classes];

    for _round in 0..config.rounds {
        for (i, row_scores) in scores.chunks_exact(n_classes).enumerate() {
            let p = softmax(row_scores);
            prob[i * n_classes..(i + 1) * n_classes].copy_from_slice(&p);
        }
        for k in 0..n_classes {
            for i in 0..n {
                let p = prob[i * n_classes + k];
                let y = if labels[i] == k { 1.0 } else { 0.0 };
                grad[i] = p - y;
                hess[i] = (p * (1.0 - p)).max(1e-16);
            }
            let mut builder = TreeBuilder::new(&data, config, &grad, &hess);
            let tree = builder.build((0..n as u32).collect());
            for (i, row) in rows.iter().enumerate() {
                scores[i * n_classes + k] += tree.predict(row);
            }
            trees.push(tree);
        }
    }

    Ok(Booster {
        n_classes,
        feature_dim,
        init_scores,
        trees,
    })
}

// ---------------------------------------------------------------------------
// binary serialization (the opaque ensemble payload of the model container)

fn push_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn push_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.at + n > self.buf.len() {
            return Err(Error::Data("booster payload is truncated".into()));
        }
        let s = &self.buf[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

const TAG_LEAF: u8 = 0;
const TAG_SPLIT: u8 = 1;

impl Booster {
    /// Exact binary encoding; f64 payloads round-trip bit-for-bit, so a
    /// deserialized booster predicts identically.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        push_u32(&mut out, self.n_classes as u32);
        push_u32(&mut out, self.feature_dim as u32);
        push_u32(&mut out, self.trees.len() as u32);
        for s in &self.init_scores {
            push_f64(&mut out, *s);
        }
        for tree in &self.trees {
            push_u32(&mut out, tree.nodes.len() as u32);
            for node in &tree.nodes {
                match node {
                    Node::Leaf { value } => {
                        out.push(TAG_LEAF);
                        push_f64(&mut out, *value);
                    }
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        out.push(TAG_SPLIT);
                        push_u32(&mut out, *feature);
                        push_f64(&mut out, *threshold);
                        push_u32(&mut out, *left);
                        push_u32(&mut out, *right);
                    }
                }
            }
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Booster> {
        let mut r = Reader { buf, at: 0 };
        let n_classes = r.u32()? as usize;
        let feature_dim = r.u32()? as usize;
        let n_trees = r.u32()? as usize;
        if n_classes == 0 || n_classes > 4096 {
            return Err(Error::Data("booster payload: implausible class count".into()));
        }
        let mut init_scores = Vec::with_capacity(n_classes);
        for _ in 0..n_classes {
            init_scores.push(r.f64()?);
        }
        let mut trees = Vec::with_capacity(n_trees);
        for _ in 0..n_trees {
            let n_nodes = r.u32()? as usize;
            let mut nodes = Vec::with_capacity(n_nodes);
            for _ in 0..n_nodes {
                let tag = r.take(1)?[0];
                nodes.push(match tag {
                    TAG_LEAF => Node::Leaf { value: r.f64()? },
                    TAG_SPLIT => {
                        let feature = r.u32()?;
                        let threshold = r.f64()?;
                        let left = r.u32()?;
                        let right = r.u32()?;
                        if feature as usize >= feature_dim {
                            return Err(Error::Data(
                                "booster payload: split feature out of range".into(),
                            ));
                        }
                        Node::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        }
                    }
                    other => {
                        return Err(Error::Data(format!(
                            "booster payload: unknown node tag {other}"
                        )))
                    }
                });
            }
            for node in &nodes {
                if let Node::Split { left, right, .. } = node {
                    if *left as usize >= nodes.len() || *right as usize >= nodes.len() {
                        return Err(Error::Data(
                            "booster payload: child index out of range".into(),
                        ));
                    }
                }
            }
            trees.push(Tree { nodes });
        }
        if r.at != buf.len() {
            return Err(Error::Data("booster payload has trailing bytes".into()));
        }
        Ok(Booster {
            n_classes,
            feature_dim,
            init_scores,
            trees,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two clusters along feature 0, trivially separable.
    fn cluster_rows(n_per_class: usize) -> (Vec<Vec<f32>>, Vec<usize>) {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n_per_class {
            rows.push(vec![1.0 + (i % 7) as f32 * 0.01, 0.5, (i % 3) as f32]);
            labels.push(0);
            rows.push(vec![-1.0 - (i % 5) as f32 * 0.01, 0.5, (i % 3) as f32]);
            labels.push(1);
        }
        (rows, labels)
    }

    fn as_refs(rows: &[Vec<f32>]) -> Vec<&[f32]> {
        rows.iter().map(Vec::as_slice).collect()
    }

    fn quick_config() -> GbdtConfig {
        GbdtConfig {
            rounds: 20,
            min_data_in_leaf: 5,
            ..GbdtConfig::default()
        }
    }

    #[test]
    fn separable_clusters_are_fit_exactly() {
        let (rows, labels) = cluster_rows(50);
        let booster = train(&as_refs(&rows), &labels, 2, &quick_config()).unwrap();
        for (row, &y) in rows.iter().zip(&labels) {
            let p = booster.probabilities(row);
            let pred = if p[0] >= p[1] { 0 } else { 1 };
            assert_eq!(pred, y);
            assert!(p[y] > 0.9, "confident fit expected, got {p:?}");
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let (rows, labels) = cluster_rows(30);
        let booster = train(&as_refs(&rows), &labels, 2, &quick_config()).unwrap();
        for row in &rows {
            let p = booster.probabilities(row);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn three_class_training_works() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..40 {
            let jitter = (i % 4) as f32 * 0.01;
            rows.push(vec![1.0 + jitter, 0.0]);
            labels.push(0);
            rows.push(vec![-1.0 - jitter, 0.0]);
            labels.push(1);
            rows.push(vec![0.0, 1.0 + jitter]);
            labels.push(2);
        }
        let booster = train(&as_refs(&rows), &labels, 3, &quick_config()).unwrap();
        for (row, &y) in rows.iter().zip(&labels) {
            let p = booster.probabilities(row);
            let argmax = p
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            assert_eq!(argmax, y);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let (rows, labels) = cluster_rows(25);
        let a = train(&as_refs(&rows), &labels, 2, &quick_config()).unwrap();
        let b = train(&as_refs(&rows), &labels, 2, &quick_config()).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
    }

    #[test]
    fn serialization_round_trips_bit_exactly() {
        let (rows, labels) = cluster_rows(25);
        let booster = train(&as_refs(&rows), &labels, 2, &quick_config()).unwrap();
        let restored = Booster::from_bytes(&booster.to_bytes()).unwrap();
        assert_eq!(booster, restored);
        for row in &rows {
            let a = booster.probabilities(row);
            let b = restored.probabilities(row);
            assert_eq!(
                a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
                b.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let (rows, labels) = cluster_rows(25);
        let booster = train(&as_refs(&rows), &labels, 2, &quick_config()).unwrap();
        let bytes = booster.to_bytes();
        assert!(Booster::from_bytes(&bytes[..bytes.len() - 3]).is_err());
    }

    #[test]
    fn constant_features_yield_prior_predictions() {
        // nothing to split on: predictions collapse to the class prior
        let rows: Vec<Vec<f32>> = (0..30).map(|_| vec![1.0, 1.0]).collect();
        let labels: Vec<usize> = (0..30).map(|i| usize::from(i >= 20)).collect();
        let booster = train(&as_refs(&rows), &labels, 2, &quick_config()).unwrap();
        let p = booster.probabilities(&rows[0]);
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-9, "{p:?}");
        assert!((p[1] - 1.0 / 3.0).abs() < 1e-9, "{p:?}");
    }

    #[test]
    fn min_data_in_leaf_is_respected() {
        let (rows, labels) = cluster_rows(30);
        let config = GbdtConfig {
            rounds: 3,
            min_data_in_leaf: 25,
            ..GbdtConfig::default()
        };
        let booster = train(&as_refs(&rows), &labels, 2, &config).unwrap();
        // with 60 rows and a 25-row floor, a tree can have at most 2 leaves
        for tree in &booster.trees {
            let leaves = tree
                .nodes
                .iter()
                .filter(|n| matches!(n, Node::Leaf { .. }))
                .count();
            assert!(leaves <= 2, "tree has {leaves} leaves");
        }
    }
}
