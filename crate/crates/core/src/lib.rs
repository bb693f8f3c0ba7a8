//! Local climate zone (LCZ) classification from optical satellite features
//! fused with OpenStreetMap landuse and building layers.
//!
//! The crate is `no_std` (it needs `alloc`) and holds every algorithm of the
//! pipeline: raster aggregation, feature extraction, the canonical
//! correlation forest, the landuse/building weighting models, the building
//! confidence mask, post-processing and evaluation, plus a deterministic
//! synthetic scene generator. File formats and the command line live in the
//! `lczfuse` crate.
//!
//! Enable the `parallel` feature to train and evaluate forest trees on the
//! rayon thread pool. Results are identical to the serial build.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is how NaN gets rejected along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod ccf;
pub mod error;
pub mod features;
pub mod fusion;
pub mod lcz;
mod linalg;
pub mod mask;
pub mod pipeline;
pub mod postprocess;
pub mod raster;
pub mod synth;

pub use error::{Error, Result};
pub use lcz::{Label, NUM_LABELS};
pub use raster::{PatchGrid, Raster};
