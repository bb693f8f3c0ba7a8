//! End-to-end training and classification over scenes.
//!
//! Training fits the forest on satellite features (or on the stacked
//! baseline features) and, depending on the fusion mode, the landuse and
//! building weight matrices. Classification produces one label map per
//! acquisition and fuses them by majority vote.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::ccf::{feature_importance, CcfModel, CcfParams, FeatureImportance, TreeParams, VotesCube};
use crate::error::{Error, Result};
use crate::features::{assemble_features, BandStack, BuildingPoints, FeatureMode, FeatureParams, FeatureTable, OsmLayers};
use crate::fusion::{
    apply_building_fusion, apply_landuse_fusion, train_building_matrix, train_landuse_matrix, BuildingSample, DensityRanges,
    WeightMatrix,
};
use crate::mask::{confidence_mask, threshold_sensitivity, BuildLanduseMatrix, ConfidenceParams, SensitivityPoint, SensitivityScene};
use crate::postprocess::{argmax_map, majority_vote_fusion, median_filter_3x3, FilterKind, LabelMap};
use crate::raster::{PatchGrid, Raster};
use crate::synth::SynthScene;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionMode {
    /// Forest votes only.
    None,
    Landuse,
    Building,
    #[default]
    Both,
}

impl FusionMode {
    pub const ALL: [FusionMode; 4] = [FusionMode::None, FusionMode::Landuse, FusionMode::Building, FusionMode::Both];

    pub fn uses_landuse(self) -> bool {
        matches!(self, FusionMode::Landuse | FusionMode::Both)
    }

    pub fn uses_building(self) -> bool {
        matches!(self, FusionMode::Building | FusionMode::Both)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FusionMode::None => "none",
            FusionMode::Landuse => "landuse",
            FusionMode::Building => "building",
            FusionMode::Both => "both",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        FusionMode::ALL.into_iter().find(|m| m.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub n_trees: usize,
    pub min_leaf: usize,
    /// Features sampled per split; `None` means `ceil(sqrt(p))`.
    pub lambda_features: Option<usize>,
    pub max_depth: Option<usize>,
    /// Width of the building density ranges.
    pub gap: u32,
    pub search_radius_px: usize,
    pub surface_fraction_threshold: f64,
    pub mask_binarize_threshold: f64,
    pub features: FeatureParams,
    pub laplace_alpha: f64,
    pub seed: u64,
    pub fusion_mode: FusionMode,
    /// Stack OSM layers into the feature vector instead of fusing them.
    pub baseline: bool,
    pub filter: FilterKind,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            n_trees: 20,
            min_leaf: 1,
            lambda_features: None,
            max_depth: None,
            gap: 5,
            search_radius_px: 5,
            surface_fraction_threshold: 0.10,
            mask_binarize_threshold: 0.8,
            features: FeatureParams::default(),
            laplace_alpha: 1.0,
            seed: 0,
            fusion_mode: FusionMode::Both,
            baseline: false,
            filter: FilterKind::Median,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(String::from(what)));
        if self.n_trees == 0 {
            return bad("n_trees must be >= 1");
        }
        if self.min_leaf == 0 {
            return bad("min_leaf must be >= 1");
        }
        if self.lambda_features == Some(0) {
            return bad("lambda_features must be >= 1");
        }
        if self.gap == 0 {
            return bad("gap must be >= 1");
        }
        if self.search_radius_px == 0 {
            return bad("search_radius_px must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.surface_fraction_threshold) {
            return bad("surface_fraction_threshold must lie in [0, 1]");
        }
        if !(self.mask_binarize_threshold.is_finite() && (-1.0..=1.0).contains(&self.mask_binarize_threshold)) {
            return bad("mask_binarize_threshold must lie in [-1, 1]");
        }
        if !(self.laplace_alpha >= 0.0 && self.laplace_alpha.is_finite()) {
            return bad("laplace_alpha must be >= 0");
        }
        let g = &self.features.glcm;
        if g.levels < 2 || g.offset < 1 || g.directions.is_empty() {
            return bad("glcm needs levels >= 2, offset >= 1 and at least one direction");
        }
        if self.features.mp_radii.contains(&0) {
            return bad("mp_radii must be >= 1");
        }
        Ok(())
    }

    pub fn ccf_params(&self) -> CcfParams {
        CcfParams {
            n_trees: self.n_trees,
            tree: TreeParams {
                min_leaf: self.min_leaf,
                lambda_features: self.lambda_features,
                max_depth: self.max_depth,
                ..TreeParams::default()
            },
            seed: self.seed,
        }
    }

    pub fn confidence_params(&self) -> ConfidenceParams {
        ConfidenceParams {
            search_radius_px: self.search_radius_px,
            surface_fraction_threshold: self.surface_fraction_threshold,
            binarize_threshold: self.mask_binarize_threshold,
        }
    }

    fn feature_mode(&self) -> FeatureMode {
        if self.baseline {
            FeatureMode::StackedBaseline
        } else {
            FeatureMode::SatelliteOnly
        }
    }
}

/// One city: its acquisitions, OSM layers and optional ground truth.
#[derive(Debug, Clone)]
pub struct Scene {
    pub id: String,
    pub acquisitions: Vec<BandStack>,
    pub osm: Option<OsmLayers>,
    pub points: Option<BuildingPoints>,
    pub labels: Option<Raster>,
}

impl From<SynthScene> for Scene {
    fn from(s: SynthScene) -> Self {
        Scene { id: s.id, acquisitions: s.acquisitions, osm: Some(s.osm), points: Some(s.points), labels: Some(s.labels) }
    }
}

impl Scene {
    /// Patch grid of the first acquisition.
    pub fn grid(&self) -> Result<PatchGrid> {
        let first = self.acquisitions.first().ok_or_else(|| Error::InvalidParameter(format!("scene {} has no acquisitions", self.id)))?;
        PatchGrid::covering(first.first())
    }

    fn osm(&self, why: &str) -> Result<&OsmLayers> {
        self.osm.as_ref().ok_or_else(|| Error::InvalidParameter(format!("scene {} lacks OSM layers needed for {why}", self.id)))
    }

    fn points(&self, why: &str) -> Result<&BuildingPoints> {
        self.points.as_ref().ok_or_else(|| Error::InvalidParameter(format!("scene {} lacks building points needed for {why}", self.id)))
    }

    /// Labels cropped to the patch grid.
    pub fn labels_on(&self, grid: &PatchGrid) -> Result<Raster> {
        let labels = self.labels.as_ref().ok_or(Error::Unlabeled)?;
        labels.crop(grid.patch_rows, grid.patch_cols)
    }

    /// OSM landuse and building layers cropped to the patch grid.
    fn osm_on(&self, grid: &PatchGrid, why: &str) -> Result<(Raster, Raster)> {
        let osm = self.osm(why)?;
        let g = grid.with_source(osm.landuse.pixel_size())?;
        Ok((g.crop(&osm.landuse)?, g.crop(&osm.building)?))
    }
}

/// Everything `classify` needs.
#[derive(Debug, Clone)]
pub struct TrainedModels {
    pub config: PipelineConfig,
    pub ccf: CcfModel,
    pub landuse: Option<WeightMatrix>,
    pub building: Option<WeightMatrix>,
    pub ranges: Option<DensityRanges>,
    pub build_landuse: Option<BuildLanduseMatrix>,
}

fn feature_table(scene: &Scene, stack: &BandStack, config: &PipelineConfig) -> Result<(FeatureTable, PatchGrid)> {
    let mode = config.feature_mode();
    let (osm, points) = if config.baseline {
        (Some(scene.osm("stacked features")?), Some(scene.points("stacked features")?))
    } else {
        (None, None)
    };
    let a = assemble_features(stack, osm, points, mode, &config.features)?;
    Ok((a.table, a.grid))
}

/// Labelled, finite rows of every acquisition of every scene.
pub fn training_table(scenes: &[Scene], config: &PipelineConfig) -> Result<FeatureTable> {
    let mut all: Option<FeatureTable> = None;
    for scene in scenes {
        if scene.labels.is_none() {
            return Err(Error::Unlabeled);
        }
        for stack in &scene.acquisitions {
            let (mut table, grid) = feature_table(scene, stack, config)?;
            table.set_labels(&scene.labels_on(&grid)?)?;
            let table = table.labeled_subset();
            match all.as_mut() {
                Some(t) => t.extend(&table)?,
                None => all = Some(table),
            }
        }
    }
    match all {
        Some(t) if !t.is_empty() => Ok(t),
        _ => Err(Error::NoTrainingData("no labeled patches with finite features")),
    }
}

/// Building density per patch from the scene's centroids.
fn density_on(scene: &Scene, grid: &PatchGrid) -> Result<Raster> {
    Ok(crate::features::building_density(scene.points("building fusion")?, grid))
}

/// The landuse matrix, building matrix, density ranges and building–landuse matrix.
type FusionModels = (Option<WeightMatrix>, Option<WeightMatrix>, Option<DensityRanges>, Option<BuildLanduseMatrix>);

fn train_fusion(scenes: &[Scene], config: &PipelineConfig) -> Result<FusionModels> {
    let mode = config.fusion_mode;
    if config.baseline || mode == FusionMode::None {
        return Ok((None, None, None, None));
    }
    let mut prepared = Vec::with_capacity(scenes.len());
    for scene in scenes {
        let grid = scene.grid()?;
        let labels = scene.labels_on(&grid)?;
        let (landuse, building) = scene.osm_on(&grid, "fusion")?;
        prepared.push((grid, labels, landuse, building));
    }

    let landuse = if mode.uses_landuse() {
        let pairs: Vec<(&Raster, &Raster)> = prepared.iter().map(|(_, l, lu, _)| (lu, l)).collect();
        Some(train_landuse_matrix(&pairs, config.laplace_alpha)?)
    } else {
        None
    };

    if !mode.uses_building() {
        return Ok((landuse, None, None, None));
    }
    let pairs: Vec<(&Raster, &Raster)> = prepared.iter().map(|(_, _, lu, b)| (lu, b)).collect();
    let build_landuse = crate::mask::train_build_landuse_matrix(&pairs)?;
    let params = config.confidence_params();
    let mut densities = Vec::with_capacity(scenes.len());
    let mut masks = Vec::with_capacity(scenes.len());
    for (scene, (grid, _, lu, b)) in scenes.iter().zip(&prepared) {
        densities.push(density_on(scene, grid)?);
        masks.push(confidence_mask(lu, b, &build_landuse, &params)?);
    }
    let ranges = DensityRanges::from_densities(densities.iter(), config.gap)?;
    let samples: Vec<BuildingSample<'_>> = prepared
        .iter()
        .zip(&densities)
        .zip(&masks)
        .map(|(((_, labels, _, _), density), mask)| BuildingSample { density, labels, mask: Some(mask) })
        .collect();
    let building = train_building_matrix(&samples, &ranges, config.laplace_alpha)?;
    Ok((landuse, Some(building), Some(ranges), Some(build_landuse)))
}

/// Fit the forest and, unless in baseline mode, the fusion models the
/// configured fusion mode needs.
pub fn train(scenes: &[Scene], config: &PipelineConfig) -> Result<TrainedModels> {
    config.validate()?;
    if scenes.is_empty() {
        return Err(Error::NoTrainingData("no training scenes"));
    }
    let table = training_table(scenes, config)?;
    let ccf = CcfModel::train(&table, &config.ccf_params())?;
    let (landuse, building, ranges, build_landuse) = train_fusion(scenes, config)?;
    Ok(TrainedModels { config: config.clone(), ccf, landuse, building, ranges, build_landuse })
}

/// Sweep the surface fraction threshold over labelled scenes and report how
/// the building matrix reacts.
pub fn mask_sensitivity(scenes: &[Scene], config: &PipelineConfig, thresholds: &[f64]) -> Result<Vec<SensitivityPoint>> {
    config.validate()?;
    let mut prepared = Vec::with_capacity(scenes.len());
    for scene in scenes {
        let grid = scene.grid()?;
        let labels = scene.labels_on(&grid)?;
        let (landuse, building) = scene.osm_on(&grid, "mask sensitivity")?;
        let density = density_on(scene, &grid)?;
        prepared.push((landuse, building, density, labels));
    }
    let pairs: Vec<(&Raster, &Raster)> = prepared.iter().map(|(lu, b, _, _)| (lu, b)).collect();
    let matrix = crate::mask::train_build_landuse_matrix(&pairs)?;
    let ranges = DensityRanges::from_densities(prepared.iter().map(|p| &p.2), config.gap)?;
    let inputs: Vec<SensitivityScene<'_>> = prepared
        .iter()
        .map(|(landuse, building, density, labels)| SensitivityScene { landuse, building, density, labels })
        .collect();
    threshold_sensitivity(&inputs, &matrix, &config.confidence_params(), thresholds, &ranges, config.laplace_alpha)
}

/// Permutation importance of the stacked baseline features.
pub fn stacked_importance(scenes: &[Scene], config: &PipelineConfig, folds: usize) -> Result<Vec<FeatureImportance>> {
    config.validate()?;
    let stacked = PipelineConfig { baseline: true, ..config.clone() };
    let table = training_table(scenes, &stacked)?;
    feature_importance(&table, &config.ccf_params(), folds, config.seed)
}

#[derive(Debug, Clone)]
pub struct Classification {
    pub mode: FusionMode,
    /// Filtered label map of each acquisition, keyed by acquisition id.
    pub per_acquisition: Vec<(String, LabelMap)>,
    /// Majority vote over the per-acquisition maps.
    pub fused: LabelMap,
    /// Building confidence mask, when building fusion ran.
    pub mask: Option<Raster>,
    /// Share of patches the mask marks unconfident.
    pub masked_fraction: Option<f64>,
    /// Share of patches without a forest prediction, per acquisition.
    pub unclassified_fraction: Vec<f64>,
}

/// Classify `scene` under `models.config`.
pub fn classify(scene: &Scene, models: &TrainedModels) -> Result<Classification> {
    let mode = if models.config.baseline { FusionMode::None } else { models.config.fusion_mode };
    Ok(classify_modes(scene, models, &[mode])?.remove(0))
}

/// Classify `scene` once per fusion mode, sharing features and forest votes.
pub fn classify_modes(scene: &Scene, models: &TrainedModels, modes: &[FusionMode]) -> Result<Vec<Classification>> {
    let config = &models.config;
    if scene.acquisitions.is_empty() {
        return Err(Error::InvalidParameter(format!("scene {} has no acquisitions", scene.id)));
    }
    if config.baseline && modes.iter().any(|&m| m != FusionMode::None) {
        return Err(Error::InvalidParameter("baseline models cannot apply fusion".into()));
    }
    let needs_landuse = modes.iter().any(|m| m.uses_landuse());
    let needs_building = modes.iter().any(|m| m.uses_building());
    if needs_landuse && models.landuse.is_none() {
        return Err(Error::InvalidParameter("landuse fusion requested but no landuse matrix was trained".into()));
    }
    if needs_building && (models.building.is_none() || models.build_landuse.is_none()) {
        return Err(Error::InvalidParameter("building fusion requested but no building matrix was trained".into()));
    }

    let grid = scene.grid()?;
    let landuse = if needs_landuse || needs_building { Some(scene.osm_on(&grid, "fusion")?) } else { None };
    let building_inputs = if needs_building {
        let (lu, b) = landuse.as_ref().expect("loaded above");
        // the building–landuse relation is learned from training and test OSM alike
        let mut matrix = models.build_landuse.clone().expect("checked above");
        let mut own = BuildLanduseMatrix::default();
        own.add_scene(lu, b)?;
        matrix.merge(&own);
        let mask = confidence_mask(lu, b, &matrix, &config.confidence_params())?;
        Some((density_on(scene, &grid)?, mask))
    } else {
        None
    };

    let mut votes: Vec<(String, VotesCube)> = Vec::with_capacity(scene.acquisitions.len());
    for stack in &scene.acquisitions {
        let (table, g) = feature_table(scene, stack, config)?;
        if (g.patch_rows, g.patch_cols) != (grid.patch_rows, grid.patch_cols) {
            return Err(Error::DimensionMismatch {
                expected: (grid.patch_rows, grid.patch_cols),
                found: (g.patch_rows, g.patch_cols),
            });
        }
        if table.feature_names() != models.ccf.feature_names.as_slice() {
            return Err(Error::InvalidParameter(format!(
                "acquisition {} yields features that do not match the model's",
                stack.acquisition_id
            )));
        }
        votes.push((stack.acquisition_id.clone(), models.ccf.predict_votes(&table)?));
    }
    let unclassified: Vec<f64> = votes.iter().map(|(_, v)| v.unclassified_fraction()).collect();

    let mut out = Vec::with_capacity(modes.len());
    for &mode in modes {
        let mut maps = Vec::with_capacity(votes.len());
        for (id, cube) in &votes {
            let mut cube = cube.clone();
            if mode.uses_landuse() {
                let (lu, _) = landuse.as_ref().expect("loaded above");
                cube = apply_landuse_fusion(&cube, lu, models.landuse.as_ref().expect("checked above"))?;
            }
            if mode.uses_building() {
                let (density, mask) = building_inputs.as_ref().expect("computed above");
                cube = apply_building_fusion(
                    &cube,
                    density,
                    models.building.as_ref().expect("checked above"),
                    models.ranges.as_ref().expect("trained with the building matrix"),
                    Some(mask),
                )?;
            }
            maps.push((id.clone(), median_filter_3x3(&argmax_map(&cube), config.filter)));
        }
        let just_maps: Vec<LabelMap> = maps.iter().map(|(_, m)| m.clone()).collect();
        let fused = majority_vote_fusion(&just_maps)?;
        let (mask, masked_fraction) = match (&building_inputs, mode.uses_building()) {
            (Some((_, m)), true) => {
                let zeros = m.values().iter().filter(|&&v| v == 0.0).count();
                (Some(m.clone()), Some(zeros as f64 / m.values().len() as f64))
            }
            _ => (None, None),
        };
        out.push(Classification {
            mode,
            per_acquisition: maps,
            fused,
            mask,
            masked_fraction,
            unclassified_fraction: unclassified.clone(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::postprocess::evaluate;
    use crate::synth::{generate, SynthSpec};

    fn tiny() -> (Scene, Scene) {
        let spec = SynthSpec::city(&[2, 6, 11, 14], 9, 6);
        (generate(&spec, "train", 1).unwrap().into(), generate(&spec, "test", 2).unwrap().into())
    }

    fn quick() -> PipelineConfig {
        PipelineConfig { n_trees: 4, features: FeatureParams { mp_radii: alloc::vec![2], ..Default::default() }, ..Default::default() }
    }

    #[test]
    fn train_and_classify_all_modes() {
        let (train_scene, test_scene) = tiny();
        let models = train(&[train_scene], &quick()).unwrap();
        assert!(models.landuse.is_some() && models.building.is_some());
        let results = classify_modes(&test_scene, &models, &FusionMode::ALL).unwrap();
        assert_eq!(results.len(), 4);
        let truth = LabelMap::from_raster(test_scene.labels.as_ref().unwrap()).unwrap();
        for r in &results {
            assert_eq!(r.per_acquisition.len(), 1);
            let cm = evaluate(&r.fused, &truth).unwrap();
            assert!(cm.oa() > 0.3, "{:?} oa {}", r.mode, cm.oa());
        }
        assert!(results[0].mask.is_none());
        assert!(results[3].masked_fraction.is_some());
    }

    #[test]
    fn none_mode_ignores_osm() {
        let (train_scene, mut test_scene) = tiny();
        let config = PipelineConfig { fusion_mode: FusionMode::None, ..quick() };
        let models = train(&[train_scene], &config).unwrap();
        assert!(models.landuse.is_none() && models.building.is_none());
        let with = classify(&test_scene, &models).unwrap();
        test_scene.osm = None;
        test_scene.points = None;
        let without = classify(&test_scene, &models).unwrap();
        assert_eq!(with.fused, without.fused);
    }

    #[test]
    fn baseline_adds_three_osm_features() {
        let (train_scene, test_scene) = tiny();
        let config = PipelineConfig { baseline: true, ..quick() };
        let names: Vec<String> = train_scene.acquisitions[0].bands().iter().map(|(n, _)| n.clone()).collect();
        let satellite = config.features.satellite_feature_names(&names).len();
        let models = train(&[train_scene], &config).unwrap();
        assert_eq!(models.ccf.feature_names.len(), satellite + 3);
        assert!(classify(&test_scene, &models).is_ok());
        assert!(classify_modes(&test_scene, &models, &[FusionMode::Both]).is_err());
    }

    #[test]
    fn unlabeled_training_fails() {
        let (mut s, _) = tiny();
        s.labels = None;
        assert_eq!(train(&[s], &quick()).unwrap_err(), Error::Unlabeled);
    }

    #[test]
    fn sensitivity_has_one_row_per_threshold() {
        let (a, b) = tiny();
        let curve = mask_sensitivity(&[a, b], &quick(), &crate::mask::default_thresholds()).unwrap();
        assert_eq!(curve.len(), 11);
    }

    #[test]
    fn config_validation() {
        assert!(PipelineConfig::default().validate().is_ok());
        assert!(PipelineConfig { n_trees: 0, ..Default::default() }.validate().is_err());
        assert!(PipelineConfig { surface_fraction_threshold: 1.5, ..Default::default() }.validate().is_err());
    }
}
