//! Per-patch feature extraction from band stacks, OSM layers and building points.

mod assemble;
pub mod glcm;
mod index;
pub mod morphology;
mod table;

pub use assemble::{assemble_features, AssembledFeatures, FeatureMode, FeatureParams, OsmLayers};
pub use glcm::{glcm_features, glcm_patch, Direction, GlcmParams, GlcmRasters, Texture};
pub use index::{spectral_index, BandRole, BandStack, SpectralIndex};
pub use morphology::{closing, dilate, erode, morphological_profile, opening, Disk};
pub use table::{building_density, BuildingPoints, FeatureTable};
