//! Landuse and building weighting models.
//!
//! Both models learn a row-stochastic matrix `P(label | key)` by counting
//! over labelled training patches, then multiply each patch's vote vector
//! elementwise by the matching prior.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent float methods shadow it under std
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::ccf::VotesCube;
use crate::error::{Error, Result};
use crate::lcz::{Label, NUM_LABELS};
use crate::raster::{PatchGrid, Raster};

pub const UNIFORM_ROW: [f64; NUM_LABELS] = [1.0 / NUM_LABELS as f64; NUM_LABELS];

/// Row-stochastic matrix over the 17 labels keyed by landuse class id or
/// density range index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    rows: BTreeMap<u32, [f64; NUM_LABELS]>,
    pub laplace_alpha: f64,
}

impl WeightMatrix {
    /// Count-and-normalize with Laplace smoothing. Rows whose raw count is
    /// zero are dropped when `alpha` is zero.
    pub fn from_counts(counts: &BTreeMap<u32, [u64; NUM_LABELS]>, alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter("laplace alpha must be >= 0".into()));
        }
        let mut rows = BTreeMap::new();
        for (&key, c) in counts {
            let total: u64 = c.iter().sum();
            let denom = total as f64 + NUM_LABELS as f64 * alpha;
            if denom <= 0.0 {
                continue;
            }
            let mut row = [0.0; NUM_LABELS];
            for (p, &n) in row.iter_mut().zip(c) {
                *p = (n as f64 + alpha) / denom;
            }
            rows.insert(key, row);
        }
        Ok(WeightMatrix { rows, laplace_alpha: alpha })
    }

    pub fn from_rows(rows: BTreeMap<u32, [f64; NUM_LABELS]>, laplace_alpha: f64) -> Result<Self> {
        for (key, row) in &rows {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidParameter(alloc::format!("row {key} is not a probability distribution")));
            }
        }
        Ok(WeightMatrix { rows, laplace_alpha })
    }

    pub fn row(&self, key: u32) -> Option<&[f64; NUM_LABELS]> {
        self.rows.get(&key)
    }

    /// The row for `key`, or the uniform prior for keys never seen in training.
    pub fn row_or_uniform(&self, key: u32) -> &[f64; NUM_LABELS] {
        self.rows.get(&key).unwrap_or(&UNIFORM_ROW)
    }

    pub fn rows(&self) -> impl Iterator<Item = (u32, &[f64; NUM_LABELS])> {
        self.rows.iter().map(|(k, v)| (*k, v))
    }

    pub fn keys(&self) -> impl Iterator<Item = u32> + '_ {
        self.rows.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Entries of `keys` rows flattened row-major; missing rows are uniform.
    pub fn dense(&self, keys: impl IntoIterator<Item = u32>) -> Vec<f64> {
        keys.into_iter().flat_map(|k| self.row_or_uniform(k).iter().copied()).collect()
    }
}

fn landuse_key(v: f32) -> Option<u32> {
    if v.is_finite() && v >= 1.0 {
        Some(v.round() as u32)
    } else {
        None
    }
}

/// Check that the 5 m layer covers exactly `k × k` pixels per cell of the
/// 100 m raster.
fn fine_grid(coarse: (usize, usize), fine: &Raster) -> Result<PatchGrid> {
    let grid = PatchGrid::new(coarse.0, coarse.1, fine.pixel_size())?;
    grid.check(fine)?;
    Ok(grid)
}

/// Learn `P(label | landuse class)` from 5 m landuse pixels inside labelled
/// 100 m patches. Zero (unmapped) landuse pixels are ignored.
pub fn train_landuse_matrix(scenes: &[(&Raster, &Raster)], alpha: f64) -> Result<WeightMatrix> {
    if scenes.is_empty() {
        return Err(Error::NoTrainingData("landuse matrix"));
    }
    let mut counts: BTreeMap<u32, [u64; NUM_LABELS]> = BTreeMap::new();
    for (landuse, labels) in scenes {
        let grid = fine_grid(labels.dims(), landuse)?;
        grid.for_each_patch(landuse, |i, j, pixels| {
            if let Some(label) = Label::from_value(labels.get(i, j)) {
                for &v in pixels {
                    if let Some(lu) = landuse_key(v) {
                        counts.entry(lu).or_insert([0; NUM_LABELS])[label.index()] += 1;
                    }
                }
            }
        })?;
    }
    if counts.is_empty() {
        return Err(Error::NoTrainingData("landuse matrix"));
    }
    WeightMatrix::from_counts(&counts, alpha)
}

/// Weight each patch's votes by the sum of the landuse rows of its nonzero
/// 5 m pixels. Patches without mapped landuse keep their votes.
pub fn apply_landuse_fusion(votes: &VotesCube, landuse: &Raster, weights: &WeightMatrix) -> Result<VotesCube> {
    let grid = fine_grid(votes.dims(), landuse)?;
    let mut out = votes.clone();
    grid.for_each_patch(landuse, |i, j, pixels| {
        let mut acc = [0.0f64; NUM_LABELS];
        let mut any = false;
        for &v in pixels {
            if let Some(lu) = landuse_key(v) {
                any = true;
                for (a, w) in acc.iter_mut().zip(weights.row_or_uniform(lu)) {
                    *a += w;
                }
            }
        }
        if any {
            for (v, a) in out.get_mut(i, j).iter_mut().zip(acc) {
                *v *= a;
            }
        }
    })?;
    Ok(out)
}

/// Contiguous building density intervals `[0, gap], [gap+1, 2·gap], ...`
/// extended until the last upper bound reaches `bn_max + gap`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensityRanges {
    pub gap: u32,
    pub bn_max: u32,
}

impl DensityRanges {
    pub fn new(bn_max: u32, gap: u32) -> Result<Self> {
        if gap < 1 {
            return Err(Error::InvalidParameter("density gap must be >= 1".into()));
        }
        Ok(DensityRanges { gap, bn_max })
    }

    /// Ranges sized for the largest density in `densities`.
    pub fn from_densities<'a>(densities: impl IntoIterator<Item = &'a Raster>, gap: u32) -> Result<Self> {
        let mut max = 0.0f32;
        for r in densities {
            for &v in r.values() {
                if !r.is_nodata(v) {
                    max = max.max(v);
                }
            }
        }
        Self::new(max.round() as u32, gap)
    }

    pub fn len(&self) -> usize {
        let target = self.bn_max + self.gap;
        // upper bound of range k is (k + 1)·gap
        target.div_ceil(self.gap) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Inclusive `[lo, hi]` bounds of every range.
    pub fn ranges(&self) -> Vec<(u32, u32)> {
        (0..self.len() as u32).map(|k| (if k == 0 { 0 } else { k * self.gap + 1 }, (k + 1) * self.gap)).collect()
    }

    /// Range index of `density`, clamped to the last range.
    pub fn index(&self, density: f64) -> usize {
        let d = if density.is_finite() && density > 0.0 { density.round() as u64 } else { 0 };
        let k = if d == 0 { 0 } else { ((d - 1) / self.gap as u64) as usize };
        k.min(self.len() - 1)
    }
}

/// Build the density ranges for `bn_max` with the given `gap`.
pub fn build_density_ranges(bn_max: u32, gap: u32) -> Result<DensityRanges> {
    DensityRanges::new(bn_max, gap)
}

/// One scene's inputs to the building matrix.
#[derive(Debug, Clone, Copy)]
pub struct BuildingSample<'a> {
    pub density: &'a Raster,
    pub labels: &'a Raster,
    /// Building-confidence mask; `None` keeps every patch.
    pub mask: Option<&'a Raster>,
}

pub(crate) fn mask_allows(mask: Option<&Raster>, i: usize, j: usize) -> bool {
    mask.is_none_or(|m| m.valid(i, j).is_some_and(|v| v >= 0.5))
}

/// Learn `P(label | density range)` over labelled, building-confident patches.
pub fn train_building_matrix(samples: &[BuildingSample<'_>], ranges: &DensityRanges, alpha: f64) -> Result<WeightMatrix> {
    let mut counts: BTreeMap<u32, [u64; NUM_LABELS]> = BTreeMap::new();
    if alpha > 0.0 {
        for k in 0..ranges.len() as u32 {
            counts.insert(k, [0; NUM_LABELS]);
        }
    }
    let mut seen = 0usize;
    for s in samples {
        s.density.ensure_same_dims(s.labels)?;
        if let Some(m) = s.mask {
            s.density.ensure_same_dims(m)?;
        }
        let (h, w) = s.density.dims();
        for i in 0..h {
            for j in 0..w {
                let (Some(label), Some(d)) = (Label::from_value(s.labels.get(i, j)), s.density.valid(i, j)) else {
                    continue;
                };
                if !mask_allows(s.mask, i, j) {
                    continue;
                }
                seen += 1;
                counts.entry(ranges.index(d as f64) as u32).or_insert([0; NUM_LABELS])[label.index()] += 1;
            }
        }
    }
    if seen == 0 {
        return Err(Error::NoTrainingData("building matrix (no confident labeled patches)"));
    }
    WeightMatrix::from_counts(&counts, alpha)
}

/// Weight the votes of building-confident patches by their density range
/// row. Patches with mask 0 or nodata density pass through unchanged.
pub fn apply_building_fusion(
    votes: &VotesCube,
    density: &Raster,
    weights: &WeightMatrix,
    ranges: &DensityRanges,
    mask: Option<&Raster>,
) -> Result<VotesCube> {
    let dims = votes.dims();
    if density.dims() != dims {
        return Err(Error::DimensionMismatch { expected: dims, found: density.dims() });
    }
    if let Some(m) = mask {
        if m.dims() != dims {
            return Err(Error::DimensionMismatch { expected: dims, found: m.dims() });
        }
    }
    let mut out = votes.clone();
    for i in 0..dims.0 {
        for j in 0..dims.1 {
            let Some(d) = density.valid(i, j) else { continue };
            if !mask_allows(mask, i, j) {
                continue;
            }
            let row = weights.row_or_uniform(ranges.index(d as f64) as u32);
            for (v, w) in out.get_mut(i, j).iter_mut().zip(row) {
                *v *= w;
            }
        }
    }
    Ok(out)
}
