use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent float methods shadow it under std
use num_traits::Float;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cca::cca_project;
use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::lcz::{Label, NUM_LABELS};

/// Where split directions come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionKind {
    /// Canonical correlation directions of the sampled features.
    Cca,
    /// The sampled feature axes themselves (a classic random-forest tree).
    AxisAligned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub min_leaf: usize,
    /// Features sampled per node; `None` means `ceil(sqrt(p))`.
    pub lambda_features: Option<usize>,
    pub max_depth: Option<usize>,
    pub projection: ProjectionKind,
    /// Ridge added to both covariance blocks.
    pub epsilon: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { min_leaf: 1, lambda_features: None, max_depth: None, projection: ProjectionKind::Cca, epsilon: 1e-8 }
    }
}

impl TreeParams {
    pub fn lambda(&self, p: usize) -> usize {
        self.lambda_features.unwrap_or_else(|| (p as f64).sqrt().ceil() as usize).clamp(1, p)
    }
}

/// A node of a canonical correlation tree. Children are indices into the
/// tree's node list, which is kept in pre-order.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        features: Vec<usize>,
        weights: Vec<f64>,
        /// Samples with projection `<= threshold` go left.
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        counts: [u32; NUM_LABELS],
    },
}

impl Node {
    pub fn project(features: &[usize], weights: &[f64], row: &[f64]) -> f64 {
        features.iter().zip(weights).map(|(&f, w)| w * row[f]).sum()
    }
}

/// Majority label of a count vector; ties go to the lowest label.
pub fn majority(counts: &[u32; NUM_LABELS]) -> Option<Label> {
    let mut best: Option<(usize, u32)> = None;
    for (i, &c) in counts.iter().enumerate() {
        if c > 0 && best.is_none_or(|(_, b)| c > b) {
            best = Some((i, c));
        }
    }
    best.map(|(i, _)| Label::from_index(i))
}

/// A trained canonical correlation tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidParameter("tree without nodes".into()));
        }
        for (i, node) in nodes.iter().enumerate() {
            if let Node::Split { left, right, features, weights, .. } = node {
                if *left <= i || *right <= i || *left >= nodes.len() || *right >= nodes.len() {
                    return Err(Error::InvalidParameter(alloc::format!("node {i} has invalid children")));
                }
                if features.len() != weights.len() {
                    return Err(Error::InvalidParameter(alloc::format!("node {i} weight count mismatch")));
                }
            }
        }
        Ok(Tree { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn leaf_counts(&self, row: &[f64]) -> &[u32; NUM_LABELS] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { counts } => return counts,
                Node::Split { features, weights, threshold, left, right } => {
                    i = if Node::project(features, weights, row) <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn predict(&self, row: &[f64]) -> Option<Label> {
        majority(self.leaf_counts(row))
    }

    /// Largest feature index used by any split.
    pub fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { features, .. } => features.iter().copied().max(),
                Node::Leaf { .. } => None,
            })
            .max()
    }
}

fn entropy(counts: &[u32], n: u32) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / nf;
            -p * p.ln()
        })
        .sum()
}

struct Candidate {
    gain: f64,
    features: Vec<usize>,
    weights: Vec<f64>,
    threshold: f64,
}

struct Builder<'a> {
    table: &'a FeatureTable,
    labels: Vec<usize>,
    params: &'a TreeParams,
    rng: ChaCha8Rng,
}

impl Builder<'_> {
    fn counts(&self, samples: &[usize]) -> [u32; NUM_LABELS] {
        let mut c = [0u32; NUM_LABELS];
        for &s in samples {
            c[self.labels[s]] += 1;
        }
        c
    }

    /// Best threshold along one direction over `samples`.
    fn scan(&self, samples: &[usize], features: &[usize], weights: &[f64], parent: &[u32; NUM_LABELS]) -> Option<(f64, f64)> {
        let n = samples.len() as u32;
        let mut z: Vec<(f64, usize)> =
            samples.iter().map(|&s| (Node::project(features, weights, self.table.row(s)), self.labels[s])).collect();
        if z.iter().any(|(v, _)| !v.is_finite()) {
            return None;
        }
        z.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
        let h_parent = entropy(parent, n);
        let min_leaf = self.params.min_leaf.max(1) as u32;
        let mut left = [0u32; NUM_LABELS];
        let mut right = *parent;
        let mut best: Option<(f64, f64)> = None;
        for k in 0..z.len() - 1 {
            let c = z[k].1;
            left[c] += 1;
            right[c] -= 1;
            let n_left = k as u32 + 1;
            let n_right = n - n_left;
            if z[k].0 == z[k + 1].0 || n_left < min_leaf || n_right < min_leaf {
                continue;
            }
            let h = (n_left as f64 * entropy(&left, n_left) + n_right as f64 * entropy(&right, n_right)) / n as f64;
            let gain = h_parent - h;
            if best.is_none_or(|(g, _)| gain > g) {
                let (lo, hi) = (z[k].0, z[k + 1].0);
                let mid = lo + (hi - lo) / 2.0;
                best = Some((gain, if mid < hi { mid } else { lo }));
            }
        }
        best
    }

    fn best_split(&mut self, samples: &[usize], parent: &[u32; NUM_LABELS], features: &[usize], kind: ProjectionKind) -> Option<Candidate> {
        let directions: Vec<Vec<f64>> = match kind {
            ProjectionKind::AxisAligned => (0..features.len())
                .map(|i| {
                    let mut w = vec![0.0; features.len()];
                    w[i] = 1.0;
                    w
                })
                .collect(),
            ProjectionKind::Cca => {
                let p = features.len();
                let mut x = Vec::with_capacity(samples.len() * p);
                for &s in samples {
                    let row = self.table.row(s);
                    x.extend(features.iter().map(|&f| row[f]));
                }
                let classes: Vec<usize> = samples.iter().map(|&s| self.labels[s]).collect();
                match cca_project(&x, samples.len(), p, &classes, NUM_LABELS, self.params.epsilon) {
                    Ok(r) => r.projections,
                    Err(_) => Vec::new(),
                }
            }
        };
        let mut best: Option<Candidate> = None;
        for w in directions {
            // drop zero weights so stored projections stay sparse for axis splits
            let (fs, ws): (Vec<usize>, Vec<f64>) =
                features.iter().zip(&w).filter(|(_, w)| **w != 0.0).map(|(f, w)| (*f, *w)).unzip();
            if fs.is_empty() {
                continue;
            }
            if let Some((gain, threshold)) = self.scan(samples, &fs, &ws, parent) {
                if best.as_ref().is_none_or(|b| gain > b.gain) {
                    best = Some(Candidate { gain, features: fs, weights: ws, threshold });
                }
            }
        }
        best.filter(|c| c.gain > 1e-12)
    }

    fn split(&mut self, samples: &[usize], parent: &[u32; NUM_LABELS]) -> Option<Candidate> {
        let p = self.table.n_features();
        let lambda = self.params.lambda(p);
        let mut sampled: Vec<usize> = sample(&mut self.rng, p, lambda).into_vec();
        sampled.sort_unstable();
        let kind = self.params.projection;
        if let Some(c) = self.best_split(samples, parent, &sampled, kind) {
            return Some(c);
        }
        // Retry with every feature before giving up on the node.
        let all: Vec<usize> = (0..p).collect();
        if lambda < p {
            if let Some(c) = self.best_split(samples, parent, &all, kind) {
                return Some(c);
            }
        }
        if kind == ProjectionKind::Cca {
            return self.best_split(samples, parent, &all, ProjectionKind::AxisAligned);
        }
        None
    }
}

/// Train one canonical correlation tree on a fully labeled table.
///
/// Nodes stop splitting when pure, when holding fewer than `2·min_leaf`
/// samples, at `max_depth`, or when no split has positive information gain.
pub fn train_cct(table: &FeatureTable, params: &TreeParams, seed: u64) -> Result<Tree> {
    if table.is_empty() {
        return Err(Error::EmptyTable);
    }
    if table.n_features() == 0 {
        return Err(Error::InvalidParameter("table without features".into()));
    }
    let labels = table
        .labels()
        .iter()
        .map(|l| l.map(Label::index).ok_or(Error::Unlabeled))
        .collect::<Result<Vec<_>>>()?;
    if (0..table.n_rows()).any(|i| !table.row_is_finite(i)) {
        return Err(Error::InvalidParameter("training rows must be finite".into()));
    }
    let mut builder = Builder { table, labels, params, rng: ChaCha8Rng::seed_from_u64(seed) };
    let min_leaf = params.min_leaf.max(1);

    let mut nodes: Vec<Node> = Vec::new();
    // (samples, depth, parent slot to patch)
    let mut stack: Vec<(Vec<usize>, usize, Option<(usize, bool)>)> = vec![((0..table.n_rows()).collect(), 0, None)];
    while let Some((samples, depth, parent)) = stack.pop() {
        let idx = nodes.len();
        if let Some((p, is_left)) = parent {
            if let Node::Split { left, right, .. } = &mut nodes[p] {
                if is_left {
                    *left = idx;
                } else {
                    *right = idx;
                }
            }
        }
        let counts = builder.counts(&samples);
        let n_classes = counts.iter().filter(|&&c| c > 0).count();
        let at_depth_limit = params.max_depth.is_some_and(|d| depth >= d);
        let candidate = if n_classes <= 1 || samples.len() < 2 * min_leaf || at_depth_limit {
            None
        } else {
            builder.split(&samples, &counts)
        };
        match candidate {
            None => nodes.push(Node::Leaf { counts }),
            Some(c) => {
                let (l, r): (Vec<usize>, Vec<usize>) = samples
                    .iter()
                    .partition(|&&s| Node::project(&c.features, &c.weights, table.row(s)) <= c.threshold);
                debug_assert!(!l.is_empty() && !r.is_empty());
                nodes.push(Node::Split { features: c.features, weights: c.weights, threshold: c.threshold, left: 0, right: 0 });
                stack.push((r, depth + 1, Some((idx, false))));
                stack.push((l, depth + 1, Some((idx, true))));
            }
        }
    }
    Tree::from_nodes(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn table(rows: &[(&[f64], u8)]) -> FeatureTable {
        let p = rows[0].0.len();
        let mut t = FeatureTable::new((0..p).map(|i| alloc::format!("f{i}")).collect(), (1, rows.len()));
        for (i, (r, l)) in rows.iter().enumerate() {
            t.push_row((0, i), r, Label::new(*l)).unwrap();
        }
        t
    }

    #[test]
    fn pure_table_is_a_leaf() {
        let t = table(&[(&[0.0], 14), (&[1.0], 14), (&[2.0], 14)]);
        let tree = train_cct(&t, &TreeParams::default(), 1).unwrap();
        let mut expected = [0u32; NUM_LABELS];
        expected[13] = 3;
        assert_eq!(tree.nodes(), &[Node::Leaf { counts: expected }]);
    }

    #[test]
    fn one_split_separates() {
        let t = table(&[(&[0.0], 1), (&[1.0], 2)]);
        let tree = train_cct(&t, &TreeParams::default(), 1).unwrap();
        assert_eq!(tree.depth(), 1);
        match tree.root() {
            Node::Split { weights, threshold, .. } => {
                assert_eq!(weights, &[1.0]);
                assert!(*threshold > 0.0 && *threshold < 1.0);
            }
            _ => panic!("expected split"),
        }
        assert_eq!(tree.predict(&[0.0]), Label::new(1));
        assert_eq!(tree.predict(&[1.0]), Label::new(2));
    }

    #[test]
    fn errors() {
        let empty = FeatureTable::new(alloc::vec!["a".to_string()], (1, 1));
        assert_eq!(train_cct(&empty, &TreeParams::default(), 0), Err(Error::EmptyTable));
        let mut t = table(&[(&[0.0], 1)]);
        t.push_row((0, 0), &[1.0], None).unwrap();
        assert_eq!(train_cct(&t, &TreeParams::default(), 0), Err(Error::Unlabeled));
    }

    #[test]
    fn majority_ties_lowest() {
        let mut c = [0u32; NUM_LABELS];
        c[5] = 3;
        c[1] = 3;
        assert_eq!(majority(&c), Label::new(2));
        assert_eq!(majority(&[0; NUM_LABELS]), None);
    }

    #[test]
    fn min_leaf_respected() {
        let rows: Vec<(alloc::vec::Vec<f64>, u8)> = (0..40).map(|i| (alloc::vec![i as f64, (i * 7 % 11) as f64], if i % 3 == 0 { 1 } else { 2 })).collect();
        let refs: Vec<(&[f64], u8)> = rows.iter().map(|(r, l)| (r.as_slice(), *l)).collect();
        let t = table(&refs);
        let params = TreeParams { min_leaf: 5, ..TreeParams::default() };
        let tree = train_cct(&t, &params, 9).unwrap();
        for n in tree.nodes() {
            if let Node::Leaf { counts } = n {
                assert!(counts.iter().sum::<u32>() >= 5);
            }
        }
    }
}
