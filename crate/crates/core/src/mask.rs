//! Building confidence masks: where is the OSM building layer complete
//! enough to trust building densities?
//!
//! Landuse pixels expect buildings nearby in proportion to how often their
//! class co-occurs with buildings; unmapped pixels fall back to the patch's
//! building surface fraction.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent float methods shadow it under std
use num_traits::Float;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{train_building_matrix, BuildingSample, DensityRanges, WeightMatrix};
use crate::lcz::Label;
use crate::raster::{patch_reduce, PatchGrid, PatchStat, Raster};

pub const MASK_NODATA: f32 = 255.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceParams {
    /// Chebyshev search radius in 5 m pixels.
    pub search_radius_px: usize,
    /// Patch building fraction above which unmapped pixels count as confident.
    pub surface_fraction_threshold: f64,
    /// Patch mean confidence needed for mask 1.
    pub binarize_threshold: f64,
}

impl Default for ConfidenceParams {
    fn default() -> Self {
        ConfidenceParams { search_radius_px: 5, surface_fraction_threshold: 0.10, binarize_threshold: 0.8 }
    }
}

/// `p(build = 1 | landuse = lu)` from co-registered 5 m layers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildLanduseMatrix {
    /// `(building pixels, all pixels)` per landuse class.
    counts: BTreeMap<u32, (u64, u64)>,
}

fn is_building(v: f32) -> bool {
    v.is_finite() && v > 0.0 && v != MASK_NODATA
}

fn landuse_class(v: f32) -> Option<u32> {
    (v.is_finite() && v >= 1.0).then(|| v.round() as u32)
}

impl BuildLanduseMatrix {
    pub fn from_counts(counts: BTreeMap<u32, (u64, u64)>) -> Result<Self> {
        if counts.values().any(|(b, t)| b > t) {
            return Err(Error::InvalidParameter("building count exceeds pixel count".into()));
        }
        Ok(BuildLanduseMatrix { counts: counts.into_iter().filter(|(_, (_, t))| *t > 0).collect() })
    }

    /// Accumulate one scene's co-occurrence counts.
    pub fn add_scene(&mut self, landuse: &Raster, building: &Raster) -> Result<()> {
        landuse.ensure_same_dims(building)?;
        for (&lu, &b) in landuse.values().iter().zip(building.values()) {
            let Some(class) = landuse_class(lu) else { continue };
            if building.is_nodata(b) {
                continue;
            }
            let e = self.counts.entry(class).or_insert((0, 0));
            e.1 += 1;
            if is_building(b) {
                e.0 += 1;
            }
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &BuildLanduseMatrix) {
        for (&k, &(b, t)) in &other.counts {
            let e = self.counts.entry(k).or_insert((0, 0));
            e.0 += b;
            e.1 += t;
        }
    }

    pub fn probability(&self, class: u32) -> Option<f64> {
        self.counts.get(&class).map(|&(b, t)| b as f64 / t as f64)
    }

    pub fn counts(&self) -> &BTreeMap<u32, (u64, u64)> {
        &self.counts
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Train the building–landuse matrix over every scene's 5 m layers.
pub fn train_build_landuse_matrix(scenes: &[(&Raster, &Raster)]) -> Result<BuildLanduseMatrix> {
    let mut m = BuildLanduseMatrix::default();
    for (landuse, building) in scenes {
        m.add_scene(landuse, building)?;
    }
    if m.is_empty() {
        return Err(Error::NoTrainingData("building-landuse matrix"));
    }
    Ok(m)
}

/// `conf_p1 = p(build | lu) · flag` at every mapped 5 m pixel, where `flag`
/// is +1 if a building pixel lies within the Chebyshev radius and −1
/// otherwise. Unmapped pixels and classes unseen in the matrix get 0.
pub fn local_search_confidence(
    landuse: &Raster,
    building: &Raster,
    matrix: &BuildLanduseMatrix,
    radius_px: usize,
) -> Result<Raster> {
    landuse.ensure_same_dims(building)?;
    let (h, w) = building.dims();
    // summed-area table of building pixels
    let mut sat = vec![0u32; (h + 1) * (w + 1)];
    for r in 0..h {
        let mut row_sum = 0u32;
        for c in 0..w {
            row_sum += is_building(building.get(r, c)) as u32;
            sat[(r + 1) * (w + 1) + c + 1] = sat[r * (w + 1) + c + 1] + row_sum;
        }
    }
    let window = |r: usize, c: usize| {
        let r0 = r.saturating_sub(radius_px);
        let c0 = c.saturating_sub(radius_px);
        let r1 = (r + radius_px + 1).min(h);
        let c1 = (c + radius_px + 1).min(w);
        sat[r1 * (w + 1) + c1] + sat[r0 * (w + 1) + c0] - sat[r0 * (w + 1) + c1] - sat[r1 * (w + 1) + c0]
    };
    let mut out = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            let v = match landuse_class(landuse.get(r, c)).and_then(|lu| matrix.probability(lu)) {
                Some(p) => {
                    let flag = if window(r, c) > 0 { 1.0 } else { -1.0 };
                    p * flag
                }
                None => 0.0,
            };
            out.push(v as f32);
        }
    }
    landuse.with_values(out, f32::NAN)
}

/// `conf_p2 = 1` where the patch building fraction is strictly above `threshold`.
pub fn surface_fraction_confidence(building: &Raster, grid: &PatchGrid, threshold: f64) -> Result<Raster> {
    let frac = patch_reduce(building, grid, PatchStat::FractionNonzero)?;
    // compare in f32: fractions like 40/400 must not exceed 0.10 by rounding
    let t = threshold as f32;
    Ok(frac.map(|v| if v.is_some_and(|f| f > t) { 1.0 } else { 0.0 }, MASK_NODATA))
}

/// Per-patch mean of the combined 5 m confidence.
///
/// `conf_comb` is `conf_p2` on unmapped pixels of patches with `conf_p2 = 1`,
/// `conf_p1` on mapped pixels, and 0 on unmapped pixels of patches with
/// `conf_p2 = 0`.
pub fn combined_confidence(conf_p1: &Raster, conf_p2: &Raster, landuse: &Raster) -> Result<Raster> {
    conf_p1.ensure_same_dims(landuse)?;
    let grid = PatchGrid::new(conf_p2.height(), conf_p2.width(), landuse.pixel_size())?;
    grid.check(landuse)?;
    let k = grid.k();
    let mut out = grid.output(0.0, f32::NAN);
    for pi in 0..grid.patch_rows {
        for pj in 0..grid.patch_cols {
            let p2 = conf_p2.valid(pi, pj).unwrap_or(0.0) as f64;
            let mut sum = 0.0;
            for r in pi * k..(pi + 1) * k {
                for c in pj * k..(pj + 1) * k {
                    sum += if landuse_class(landuse.get(r, c)).is_some() {
                        conf_p1.valid(r, c).unwrap_or(0.0) as f64
                    } else if p2 == 1.0 {
                        1.0
                    } else {
                        0.0
                    };
                }
            }
            out.set(pi, pj, (sum / (k * k) as f64) as f32);
        }
    }
    Ok(out)
}

/// Threshold the patch-mean combined confidence into a 0/1 mask.
pub fn combine_and_binarize(conf_p1: &Raster, conf_p2: &Raster, landuse: &Raster, binarize_threshold: f64) -> Result<Raster> {
    let mean = combined_confidence(conf_p1, conf_p2, landuse)?;
    Ok(binarize(&mean, binarize_threshold))
}

fn binarize(mean: &Raster, threshold: f64) -> Raster {
    // compare in f32 so a mean that is exactly representable hits the threshold
    mean.map(|v| v.map_or(0.0, |m| if m >= threshold as f32 { 1.0 } else { 0.0 }), MASK_NODATA)
}

/// Full mask pipeline for one scene.
pub fn confidence_mask(landuse: &Raster, building: &Raster, matrix: &BuildLanduseMatrix, params: &ConfidenceParams) -> Result<Raster> {
    let grid = PatchGrid::covering(building)?;
    let landuse = grid.crop(landuse)?;
    let building = grid.crop(building)?;
    let p1 = local_search_confidence(&landuse, &building, matrix, params.search_radius_px)?;
    let p2 = surface_fraction_confidence(&building, &grid, params.surface_fraction_threshold)?;
    combine_and_binarize(&p1, &p2, &landuse, params.binarize_threshold)
}

/// Patches whose observed building fraction lies inside their true label's
/// surface-fraction band (percent, inclusive). Unlabelled patches are 0.
pub fn quasi_truth_mask(building: &Raster, labels: &Raster) -> Result<Raster> {
    let grid = PatchGrid::new(labels.height(), labels.width(), building.pixel_size())?;
    let frac = patch_reduce(&grid.crop(building)?, &grid, PatchStat::FractionNonzero)?;
    let mut out = labels.clone_header(vec![0.0; labels.values().len()], MASK_NODATA);
    for i in 0..labels.height() {
        for j in 0..labels.width() {
            let (Some(label), Some(f)) = (Label::from_value(labels.get(i, j)), frac.valid(i, j)) else { continue };
            let (lo, hi) = label.surface_fraction_band();
            let pct = f as f64 * 100.0;
            if pct >= lo - 1e-9 && pct <= hi + 1e-9 {
                out.set(i, j, 1.0);
            }
        }
    }
    Ok(out)
}

/// Entrywise Pearson correlation; `None` if either side has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Inputs of one training scene for the sensitivity analysis.
#[derive(Debug, Clone, Copy)]
pub struct SensitivityScene<'a> {
    pub landuse: &'a Raster,
    pub building: &'a Raster,
    pub density: &'a Raster,
    pub labels: &'a Raster,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityPoint {
    pub threshold: f64,
    /// Correlation with the matrix trained under surface-fraction-rule masks.
    pub corr_quasi_truth: Option<f64>,
    /// Correlation with the matrix trained under all-pass masks.
    pub corr_all_pass: Option<f64>,
}

/// The default sweep: 0 % to 100 % in steps of 10 %.
pub fn default_thresholds() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

/// Dense building matrix over every density range, trained with `masks`.
fn masked_matrix(
    scenes: &[SensitivityScene<'_>],
    masks: &[Option<Raster>],
    ranges: &DensityRanges,
    alpha: f64,
) -> Option<Vec<f64>> {
    let samples: Vec<BuildingSample<'_>> = scenes
        .iter()
        .zip(masks)
        .map(|(s, m)| BuildingSample { density: s.density, labels: s.labels, mask: m.as_ref() })
        .collect();
    let m: WeightMatrix = train_building_matrix(&samples, ranges, alpha).ok()?;
    Some(m.dense(0..ranges.len() as u32))
}

/// How the building weight matrix responds to the surface fraction
/// threshold used when generating confidence masks.
pub fn threshold_sensitivity(
    scenes: &[SensitivityScene<'_>],
    matrix: &BuildLanduseMatrix,
    params: &ConfidenceParams,
    thresholds: &[f64],
    ranges: &DensityRanges,
    alpha: f64,
) -> Result<Vec<SensitivityPoint>> {
    if scenes.is_empty() {
        return Err(Error::NoTrainingData("sensitivity analysis"));
    }
    let quasi: Vec<Option<Raster>> =
        scenes.iter().map(|s| quasi_truth_mask(s.building, s.labels).map(Some)).collect::<Result<_>>()?;
    let all_pass: Vec<Option<Raster>> = scenes.iter().map(|_| None).collect();
    let quasi_m = masked_matrix(scenes, &quasi, ranges, alpha);
    let all_m = masked_matrix(scenes, &all_pass, ranges, alpha);

    let mut out = Vec::with_capacity(thresholds.len());
    for &t in thresholds {
        let p = ConfidenceParams { surface_fraction_threshold: t, ..*params };
        let masks: Vec<Option<Raster>> = scenes
            .iter()
            .map(|s| confidence_mask(s.landuse, s.building, matrix, &p).map(Some))
            .collect::<Result<_>>()?;
        let m = masked_matrix(scenes, &masks, ranges, alpha);
        let corr = |other: &Option<Vec<f64>>| match (&m, other) {
            (Some(a), Some(b)) => pearson(a, b),
            _ => None,
        };
        out.push(SensitivityPoint { threshold: t, corr_quasi_truth: corr(&quasi_m), corr_all_pass: corr(&all_m) });
    }
    Ok(out)
}

/// Widest run of consecutive thresholds whose quasi-truth correlation
/// spans less than `tolerance`, as `(first, last)` threshold.
pub fn plateau(curve: &[SensitivityPoint], tolerance: f64) -> Option<(f64, f64)> {
    let mut best: Option<(usize, usize)> = None;
    for start in 0..curve.len() {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for end in start..curve.len() {
            let Some(c) = curve[end].corr_quasi_truth else { break };
            lo = lo.min(c);
            hi = hi.max(c);
            if hi - lo >= tolerance {
                break;
            }
            if best.is_none_or(|(s, e)| end - start > e - s) {
                best = Some((start, end));
            }
        }
    }
    best.map(|(s, e)| (curve[s].threshold, curve[e].threshold))
}
