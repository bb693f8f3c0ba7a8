//! Gray-level co-occurrence texture measures per 100 m patch.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{PatchGrid, Raster};

/// Co-occurrence direction. Offsets follow the image convention where
/// 45° points up and to the right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "0")]
    Deg0,
    #[serde(rename = "45")]
    Deg45,
    #[serde(rename = "90")]
    Deg90,
    #[serde(rename = "135")]
    Deg135,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::Deg0, Direction::Deg45, Direction::Deg90, Direction::Deg135];

    /// `(d_row, d_col)` for a unit offset.
    fn step(self) -> (isize, isize) {
        match self {
            Direction::Deg0 => (0, 1),
            Direction::Deg45 => (-1, 1),
            Direction::Deg90 => (-1, 0),
            Direction::Deg135 => (-1, -1),
        }
    }

    pub fn from_degrees(deg: u32) -> Option<Self> {
        match deg {
            0 => Some(Direction::Deg0),
            45 => Some(Direction::Deg45),
            90 => Some(Direction::Deg90),
            135 => Some(Direction::Deg135),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GlcmParams {
    pub levels: usize,
    pub directions: Vec<Direction>,
    /// Per-direction weights used when averaging; uniform when empty.
    #[serde(default)]
    pub weights: Vec<f64>,
    pub offset: usize,
}

impl Default for GlcmParams {
    fn default() -> Self {
        GlcmParams { levels: 32, directions: Direction::ALL.to_vec(), weights: Vec::new(), offset: 1 }
    }
}

impl GlcmParams {
    fn validate(&self) -> Result<()> {
        if self.levels < 2 {
            return Err(Error::InvalidParameter("GLCM needs at least 2 gray levels".into()));
        }
        if self.offset < 1 {
            return Err(Error::InvalidParameter("GLCM offset must be >= 1".into()));
        }
        if self.directions.is_empty() {
            return Err(Error::InvalidParameter("GLCM needs at least one direction".into()));
        }
        if !self.weights.is_empty() && self.weights.len() != self.directions.len() {
            return Err(Error::InvalidParameter("one GLCM weight per direction".into()));
        }
        Ok(())
    }

    fn weight(&self, i: usize) -> f64 {
        self.weights.get(i).copied().unwrap_or(1.0)
    }
}

/// Haralick measures of one co-occurrence matrix (or their direction average).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Texture {
    pub contrast: f64,
    pub correlation: f64,
    pub energy: f64,
    pub homogeneity: f64,
}

impl Texture {
    fn from_matrix(p: &[f64], levels: usize) -> Texture {
        let mut contrast = 0.0;
        let mut energy = 0.0;
        let mut homogeneity = 0.0;
        let (mut mu_i, mut mu_j) = (0.0, 0.0);
        for i in 0..levels {
            for j in 0..levels {
                let v = p[i * levels + j];
                let d = i as f64 - j as f64;
                contrast += d * d * v;
                energy += v * v;
                homogeneity += v / (1.0 + d.abs());
                mu_i += i as f64 * v;
                mu_j += j as f64 * v;
            }
        }
        let (mut var_i, mut var_j, mut cov) = (0.0, 0.0, 0.0);
        for i in 0..levels {
            for j in 0..levels {
                let v = p[i * levels + j];
                let di = i as f64 - mu_i;
                let dj = j as f64 - mu_j;
                var_i += di * di * v;
                var_j += dj * dj * v;
                cov += di * dj * v;
            }
        }
        let denom = num_traits::Float::sqrt(var_i * var_j);
        // zero-variance matrices are perfectly correlated by convention
        let correlation = if denom <= 1e-15 { 1.0 } else { (cov / denom).clamp(-1.0, 1.0) };
        Texture { contrast, correlation, energy, homogeneity }
    }
}

/// Quantize to `levels` bins by min-max scaling over the valid values.
fn quantize(values: &[f32], valid: impl Fn(f32) -> bool, levels: usize) -> Vec<Option<usize>> {
    let (mut lo, mut hi) = (f32::INFINITY, f32::NEG_INFINITY);
    for &v in values.iter().filter(|v| valid(**v)) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let span = (hi - lo) as f64;
    values
        .iter()
        .map(|&v| {
            if !valid(v) {
                return None;
            }
            if span <= 0.0 {
                return Some(0);
            }
            let q = ((v - lo) as f64 / span * levels as f64) as usize;
            Some(q.min(levels - 1))
        })
        .collect()
}

/// Direction-averaged texture of a single `rows × cols` window.
///
/// Returns `None` when no valid pixel pair exists.
pub fn glcm_patch(
    values: &[f32],
    rows: usize,
    cols: usize,
    valid: impl Fn(f32) -> bool,
    params: &GlcmParams,
) -> Result<Option<Texture>> {
    params.validate()?;
    if rows < params.offset + 1 || cols < params.offset + 1 {
        return Err(Error::RasterTooSmall { what: "GLCM offset" });
    }
    let levels = params.levels;
    let q = quantize(values, valid, levels);
    let mut acc = Texture { contrast: 0.0, correlation: 0.0, energy: 0.0, homogeneity: 0.0 };
    let mut wsum = 0.0;
    let mut p = vec![0.0f64; levels * levels];
    for (di, dir) in params.directions.iter().enumerate() {
        p.iter_mut().for_each(|v| *v = 0.0);
        let (dr, dc) = dir.step();
        let (dr, dc) = (dr * params.offset as isize, dc * params.offset as isize);
        let mut total = 0.0;
        for r in 0..rows as isize {
            for c in 0..cols as isize {
                let (r2, c2) = (r + dr, c + dc);
                if r2 < 0 || c2 < 0 || r2 >= rows as isize || c2 >= cols as isize {
                    continue;
                }
                let a = q[(r * cols as isize + c) as usize];
                let b = q[(r2 * cols as isize + c2) as usize];
                if let (Some(a), Some(b)) = (a, b) {
                    // symmetric matrix: count both orders
                    p[a * levels + b] += 1.0;
                    p[b * levels + a] += 1.0;
                    total += 2.0;
                }
            }
        }
        if total == 0.0 {
            continue;
        }
        p.iter_mut().for_each(|v| *v /= total);
        let t = Texture::from_matrix(&p, levels);
        let w = params.weight(di);
        acc.contrast += w * t.contrast;
        acc.correlation += w * t.correlation;
        acc.energy += w * t.energy;
        acc.homogeneity += w * t.homogeneity;
        wsum += w;
    }
    if wsum == 0.0 {
        return Ok(None);
    }
    Ok(Some(Texture {
        contrast: acc.contrast / wsum,
        correlation: acc.correlation / wsum,
        energy: acc.energy / wsum,
        homogeneity: acc.homogeneity / wsum,
    }))
}

/// Texture measure rasters at patch resolution.
#[derive(Debug, Clone)]
pub struct GlcmRasters {
    pub contrast: Raster,
    pub correlation: Raster,
    pub energy: Raster,
    pub homogeneity: Raster,
}

pub fn glcm_features(band: &Raster, grid: &PatchGrid, params: &GlcmParams) -> Result<GlcmRasters> {
    params.validate()?;
    let k = grid.k();
    let mut out = [grid.output(f32::NAN, f32::NAN), grid.output(f32::NAN, f32::NAN), grid.output(f32::NAN, f32::NAN), grid.output(f32::NAN, f32::NAN)];
    let mut err = None;
    grid.for_each_patch(band, |pi, pj, values| {
        match glcm_patch(values, k, k, |v| !band.is_nodata(v), params) {
            Ok(Some(t)) => {
                for (raster, v) in out.iter_mut().zip([t.contrast, t.correlation, t.energy, t.homogeneity]) {
                    raster.set(pi, pj, v as f32);
                }
            }
            Ok(None) => {}
            Err(e) => err = Some(e),
        }
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    let [contrast, correlation, energy, homogeneity] = out;
    Ok(GlcmRasters { contrast, correlation, energy, homogeneity })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn horizontal_two_levels() -> GlcmParams {
        GlcmParams { levels: 2, directions: vec![Direction::Deg0], weights: vec![], offset: 1 }
    }

    fn tex(values: &[f32], params: &GlcmParams) -> Texture {
        glcm_patch(values, 2, 2, |v| v.is_finite(), params).unwrap().unwrap()
    }

    #[test]
    fn stripes() {
        // pairs (0,0) and (1,1), each counted twice: P = diag(0.5, 0.5)
        let t = tex(&[0.0, 0.0, 1.0, 1.0], &horizontal_two_levels());
        assert_eq!(t.contrast, 0.0);
        assert_eq!(t.energy, 0.5);
        assert_eq!(t.homogeneity, 1.0);
        assert_eq!(t.correlation, 1.0);
    }

    #[test]
    fn checkerboard() {
        // pairs (0,1) and (1,0): P = [[0, .5], [.5, 0]]
        let t = tex(&[0.0, 1.0, 1.0, 0.0], &horizontal_two_levels());
        assert_eq!(t.contrast, 1.0);
        assert_eq!(t.energy, 0.5);
        assert_eq!(t.homogeneity, 0.5);
        assert_eq!(t.correlation, -1.0);
    }

    #[test]
    fn constant_patch_is_degenerate() {
        let t = glcm_patch(&[3.0; 100], 10, 10, |v| v.is_finite(), &GlcmParams::default()).unwrap().unwrap();
        assert_eq!((t.contrast, t.energy, t.homogeneity, t.correlation), (0.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn too_small() {
        let p = GlcmParams { offset: 2, ..GlcmParams::default() };
        assert!(glcm_patch(&[0.0; 4], 2, 2, |_| true, &p).is_err());
        let p = GlcmParams { levels: 1, ..GlcmParams::default() };
        assert!(glcm_patch(&[0.0; 4], 2, 2, |_| true, &p).is_err());
    }

    #[test]
    fn raster_output_per_patch() {
        let band = Raster::from_fn(20, 10, 10.0, |r, c| ((r + c) % 2) as f32).unwrap();
        let grid = PatchGrid::covering(&band).unwrap();
        let g = glcm_features(&band, &grid, &GlcmParams::default()).unwrap();
        assert_eq!(g.contrast.dims(), (1, 2));
        assert!(g.energy.values().iter().all(|v| v.is_finite()));
    }

    proptest! {
        #[test]
        fn measure_ranges(vals in prop::collection::vec(0.0f32..1.0, 100)) {
            let t = glcm_patch(&vals, 10, 10, |v| v.is_finite(), &GlcmParams::default()).unwrap().unwrap();
            prop_assert!(t.energy > 0.0 && t.energy <= 1.0);
            prop_assert!(t.homogeneity > 0.0 && t.homogeneity <= 1.0);
            prop_assert!(t.contrast >= 0.0);
            prop_assert!((-1.0..=1.0).contains(&t.correlation));
        }
    }
}
