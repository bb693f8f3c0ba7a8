use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::tree::{train_cct, Tree, TreeParams};
use super::votes::VotesCube;
use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::lcz::{Label, NUM_LABELS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcfParams {
    pub n_trees: usize,
    #[serde(flatten)]
    pub tree: TreeParams,
    pub seed: u64,
}

impl Default for CcfParams {
    fn default() -> Self {
        CcfParams { n_trees: 20, tree: TreeParams::default(), seed: 0 }
    }
}

/// Seed of tree `index`, independent of training order.
pub(crate) fn derive_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<T>(n: usize, f: impl Fn(usize) -> T) -> Vec<T> {
    (0..n).map(f).collect()
}

/// A canonical correlation forest.
#[derive(Debug, Clone, PartialEq)]
pub struct CcfModel {
    pub feature_names: Vec<String>,
    pub trees: Vec<Tree>,
    pub seed: u64,
}

impl CcfModel {
    /// Train `n_trees` trees on the full labeled table. Each tree draws its
    /// own feature subsets from a seed derived from `(params.seed, index)`,
    /// so serial and parallel training agree exactly.
    pub fn train(table: &FeatureTable, params: &CcfParams) -> Result<Self> {
        if params.n_trees == 0 {
            return Err(Error::InvalidParameter("n_trees must be >= 1".into()));
        }
        if params.tree.min_leaf == 0 {
            return Err(Error::InvalidParameter("min_leaf must be >= 1".into()));
        }
        let trees = map_indexed(params.n_trees, |t| train_cct(table, &params.tree, derive_seed(params.seed, t as u64)));
        let trees = trees.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(CcfModel { feature_names: table.feature_names().to_vec(), trees, seed: params.seed })
    }

    pub fn from_parts(feature_names: Vec<String>, trees: Vec<Tree>, seed: u64) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::InvalidParameter("forest without trees".into()));
        }
        if let Some(f) = trees.iter().filter_map(Tree::max_feature).max() {
            if f >= feature_names.len() {
                return Err(Error::FeatureMismatch { expected: feature_names.len(), found: f + 1 });
            }
        }
        Ok(CcfModel { feature_names, trees, seed })
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    fn check_features(&self, table: &FeatureTable) -> Result<()> {
        if table.feature_names() != self.feature_names.as_slice() {
            return Err(Error::FeatureMismatch { expected: self.feature_names.len(), found: table.n_features() });
        }
        Ok(())
    }

    /// Per-row predicted label per tree; `None` for rows with non-finite features.
    fn tree_predictions(&self, table: &FeatureTable) -> Vec<Vec<Option<Label>>> {
        let finite: Vec<bool> = (0..table.n_rows()).map(|i| table.row_is_finite(i)).collect();
        map_indexed(self.trees.len(), |t| {
            let tree = &self.trees[t];
            (0..table.n_rows()).map(|i| if finite[i] { tree.predict(table.row(i)) } else { None }).collect()
        })
    }

    /// Majority-vote label per row (ties to the lowest label).
    pub fn predict(&self, table: &FeatureTable) -> Result<Vec<Option<Label>>> {
        self.check_features(table)?;
        let per_tree = self.tree_predictions(table);
        Ok((0..table.n_rows())
            .map(|i| {
                let mut counts = [0u32; NUM_LABELS];
                for preds in &per_tree {
                    if let Some(l) = preds[i] {
                        counts[l.index()] += 1;
                    }
                }
                super::tree::majority(&counts)
            })
            .collect())
    }

    /// Each tree casts one vote for its leaf's majority label at each row's patch.
    pub fn predict_votes(&self, table: &FeatureTable) -> Result<VotesCube> {
        self.check_features(table)?;
        let (rows, cols) = table.grid_dims();
        let mut cube = VotesCube::zeros(rows, cols);
        // tree-index order keeps the reduction deterministic
        for preds in self.tree_predictions(table) {
            for (i, p) in preds.iter().enumerate() {
                if let Some(l) = p {
                    let (r, c) = table.coord(i);
                    cube.get_mut(r, c)[l.index()] += 1.0;
                    cube.set_classified(r, c, true);
                }
            }
        }
        Ok(cube)
    }
}
