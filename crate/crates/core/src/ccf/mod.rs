//! Canonical correlation forests: ensembles of oblique decision trees whose
//! splits are searched along canonical correlation directions between the
//! node's features and its one-hot labels.

mod cca;
mod forest;
mod importance;
mod tree;
mod votes;

pub use cca::{cca_project, CcaResult};
pub use forest::{CcfModel, CcfParams};
pub use importance::{feature_importance, FeatureImportance};
pub use tree::{majority, train_cct, Node, ProjectionKind, Tree, TreeParams};
pub use votes::VotesCube;
pub(crate) use forest::derive_seed;
