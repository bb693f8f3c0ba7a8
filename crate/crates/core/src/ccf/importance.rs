use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::forest::{derive_seed, CcfModel, CcfParams};
use crate::error::{Error, Result};
use crate::features::FeatureTable;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureImportance {
    pub feature: String,
    /// Mean held-out accuracy drop when the feature is shuffled.
    pub importance: f64,
    pub per_fold: Vec<f64>,
}

fn accuracy(model: &CcfModel, table: &FeatureTable) -> Result<f64> {
    let pred = model.predict(table)?;
    let hits = pred.iter().zip(table.labels()).filter(|(p, t)| p.is_some() && p == t).count();
    Ok(hits as f64 / table.n_rows() as f64)
}

/// Permutation importance under k-fold cross-validation, ranked from most
/// to least important. Ties keep the table's feature order.
pub fn feature_importance(table: &FeatureTable, params: &CcfParams, folds: usize, seed: u64) -> Result<Vec<FeatureImportance>> {
    if folds < 2 {
        return Err(Error::InvalidParameter("at least 2 folds".into()));
    }
    let table = table.labeled_subset();
    let n = table.n_rows();
    if n < folds * 2 {
        return Err(Error::InvalidParameter(alloc::format!("too few labeled rows ({n}) for {folds} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let p = table.n_features();
    let mut per_fold = alloc::vec![Vec::with_capacity(folds); p];
    for fold in 0..folds {
        let (lo, hi) = (fold * n / folds, (fold + 1) * n / folds);
        let test_idx = &order[lo..hi];
        let train_idx: Vec<usize> = order[..lo].iter().chain(&order[hi..]).copied().collect();
        let train = table.select(&train_idx);
        let test = table.select(test_idx);
        let fold_params = CcfParams { seed: derive_seed(params.seed ^ seed, fold as u64), ..params.clone() };
        let model = CcfModel::train(&train, &fold_params)?;
        let base = accuracy(&model, &test)?;
        for (f, drops) in per_fold.iter_mut().enumerate() {
            let mut column: Vec<f64> = test.column(f).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, (fold * p + f) as u64 + 1_000_003));
            column.shuffle(&mut rng);
            let mut shuffled = test.clone();
            for (i, v) in column.into_iter().enumerate() {
                shuffled.set_value(i, f, v);
            }
            drops.push(base - accuracy(&model, &shuffled)?);
        }
    }
    let mut out: Vec<FeatureImportance> = per_fold
        .into_iter()
        .enumerate()
        .map(|(f, drops)| FeatureImportance {
            feature: table.feature_names()[f].clone(),
            importance: drops.iter().sum::<f64>() / drops.len() as f64,
            per_fold: drops,
        })
        .collect();
    // stable: equal importances keep feature order
    out.sort_by(|a, b| b.importance.partial_cmp(&a.importance).unwrap_or(core::cmp::Ordering::Equal));
    Ok(out)
}
