use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::glcm::{glcm_features, GlcmParams};
use super::index::{spectral_index, BandRole, BandStack, SpectralIndex};
use super::morphology::morphological_profile;
use super::table::{building_density, BuildingPoints, FeatureTable};
use crate::error::{Error, Result};
use crate::raster::{downsample_nearest, patch_reduce, PatchGrid, PatchStat, Raster, PATCH_SIZE_M};

/// Rasterized OSM layers at 5 m.
#[derive(Debug, Clone)]
pub struct OsmLayers {
    /// Landuse class ids, 0 where no landuse is mapped.
    pub landuse: Raster,
    /// Binary building footprints.
    pub building: Raster,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// Satellite features only; building density is returned separately.
    SatelliteOnly,
    /// Satellite features plus building density and the nearest-downsampled
    /// building and landuse layers.
    StackedBaseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureParams {
    pub indices: Vec<SpectralIndex>,
    pub glcm: GlcmParams,
    /// Band whose texture is measured.
    pub glcm_band: BandRole,
    pub mp_radii: Vec<usize>,
}

impl Default for FeatureParams {
    fn default() -> Self {
        FeatureParams {
            indices: SpectralIndex::ALL.to_vec(),
            glcm: GlcmParams::default(),
            glcm_band: BandRole::Nir,
            mp_radii: vec![4, 7, 10],
        }
    }
}

impl FeatureParams {
    /// Column names in table order: band means, index means, band stds,
    /// index stds, the four texture measures, then opening/closing means per
    /// radius.
    pub fn satellite_feature_names(&self, band_names: &[String]) -> Vec<String> {
        let mut names = Vec::new();
        names.extend(band_names.iter().map(|b| format!("mean_{b}")));
        names.extend(self.indices.iter().map(|i| format!("mean_{}", i.name())));
        names.extend(band_names.iter().map(|b| format!("std_{b}")));
        names.extend(self.indices.iter().map(|i| format!("std_{}", i.name())));
        names.extend(["glcm_contrast", "glcm_correlation", "glcm_energy", "glcm_homogeneity"].map(String::from));
        for r in &self.mp_radii {
            names.push(format!("mp_open_r{r}"));
            names.push(format!("mp_close_r{r}"));
        }
        names
    }
}

pub const BUILDING_DENSITY: &str = "building_density";
pub const BUILDING: &str = "building";
pub const LANDUSE: &str = "landuse";

#[derive(Debug, Clone)]
pub struct AssembledFeatures {
    pub table: FeatureTable,
    /// Building centroid counts per patch, when points were supplied.
    pub building_density: Option<Raster>,
    /// Patch grid over the 10 m bands.
    pub grid: PatchGrid,
}

/// Build the per-patch feature table of one acquisition.
pub fn assemble_features(
    stack: &BandStack,
    osm: Option<&OsmLayers>,
    points: Option<&BuildingPoints>,
    mode: FeatureMode,
    params: &FeatureParams,
) -> Result<AssembledFeatures> {
    let grid = PatchGrid::covering(stack.first())?;
    let crop = |r: &Raster| grid.crop(r);

    let band_names: Vec<String> = stack.bands().iter().map(|(n, _)| n.clone()).collect();
    let mut columns: Vec<Raster> = Vec::new();
    let mut band_means = Vec::new();
    let mut band_stds = Vec::new();
    for (_, band) in stack.bands() {
        let band = crop(band)?;
        band_means.push(patch_reduce(&band, &grid, PatchStat::Mean)?);
        band_stds.push(patch_reduce(&band, &grid, PatchStat::Std)?);
    }
    let mut index_means = Vec::new();
    let mut index_stds = Vec::new();
    let mut ndvi = None;
    for &index in &params.indices {
        let raster = crop(&spectral_index(stack, index)?)?;
        index_means.push(patch_reduce(&raster, &grid, PatchStat::Mean)?);
        index_stds.push(patch_reduce(&raster, &grid, PatchStat::Std)?);
        if index == SpectralIndex::Ndvi {
            ndvi = Some(raster);
        }
    }
    let ndvi = match ndvi {
        Some(n) => n,
        None => crop(&spectral_index(stack, SpectralIndex::Ndvi)?)?,
    };
    columns.extend(band_means);
    columns.extend(index_means);
    columns.extend(band_stds);
    columns.extend(index_stds);

    let texture = glcm_features(&crop(stack.role(params.glcm_band)?)?, &grid, &params.glcm)?;
    columns.extend([texture.contrast, texture.correlation, texture.energy, texture.homogeneity]);
    for profile in morphological_profile(&ndvi, &params.mp_radii)? {
        columns.push(patch_reduce(&profile, &grid, PatchStat::Mean)?);
    }

    let mut names = params.satellite_feature_names(&band_names);
    let density = points.map(|p| building_density(p, &grid));

    if let Some(osm) = osm {
        check_extent(&grid, &osm.landuse)?;
        check_extent(&grid, &osm.building)?;
    }
    if mode == FeatureMode::StackedBaseline {
        let osm = osm.ok_or_else(|| Error::InvalidParameter("stacked features need OSM layers".into()))?;
        let density = density.clone().ok_or_else(|| Error::InvalidParameter("stacked features need building points".into()))?;
        let osm_grid = grid.with_source(osm.landuse.pixel_size())?;
        let building = downsample_nearest(&osm_grid.crop(&osm.building)?, PATCH_SIZE_M)?;
        let landuse = downsample_nearest(&osm_grid.crop(&osm.landuse)?, PATCH_SIZE_M)?;
        columns.extend([density, building, landuse]);
        names.extend([BUILDING_DENSITY, BUILDING, LANDUSE].map(ToString::to_string));
    }

    let mut table = FeatureTable::new(names, (grid.patch_rows, grid.patch_cols));
    let mut row = vec![0.0f64; columns.len()];
    for i in 0..grid.patch_rows {
        for j in 0..grid.patch_cols {
            for (slot, col) in row.iter_mut().zip(&columns) {
                let v = col.get(i, j);
                *slot = if col.is_nodata(v) { f64::NAN } else { v as f64 };
            }
            table.push_row((i, j), &row, None)?;
        }
    }
    Ok(AssembledFeatures { table, building_density: density, grid })
}

/// OSM layers must cover the same patch grid as the bands.
fn check_extent(grid: &PatchGrid, layer: &Raster) -> Result<()> {
    let other = PatchGrid::covering(layer)?;
    if (other.patch_rows, other.patch_cols) != (grid.patch_rows, grid.patch_cols) {
        return Err(Error::DimensionMismatch {
            expected: (grid.patch_rows, grid.patch_cols),
            found: (other.patch_rows, other.patch_cols),
        });
    }
    Ok(())
}
