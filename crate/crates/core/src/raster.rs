//! Single-band rasters, resampling, and aggregation onto the 100 m patch grid.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent float methods shadow it under std
use num_traits::Float;

use crate::error::{Error, Result};

/// Ground size of one classification patch in meters.
pub const PATCH_SIZE_M: f64 = 100.0;

/// A single-band grid of `f32` values stored row-major.
///
/// NaN is always treated as nodata; `nodata` adds a second sentinel for
/// integer-valued rasters (255 for label maps).
#[derive(Debug, Clone)]
pub struct Raster {
    width: usize,
    height: usize,
    pixel_size: f64,
    values: Vec<f32>,
    nodata: f32,
}

/// Equal when headers match and every pixel is equal or nodata on both sides.
impl PartialEq for Raster {
    fn eq(&self, other: &Self) -> bool {
        let same_nodata = self.nodata == other.nodata || (self.nodata.is_nan() && other.nodata.is_nan());
        self.width == other.width
            && self.height == other.height
            && self.pixel_size == other.pixel_size
            && same_nodata
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(&a, &b)| a == b || (self.is_nodata(a) && other.is_nodata(b)))
    }
}

impl Raster {
    pub fn new(width: usize, height: usize, pixel_size: f64, values: Vec<f32>, nodata: f32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyRaster);
        }
        if values.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: (height, width),
                found: (values.len() / width.max(1), width),
            });
        }
        if !(pixel_size > 0.0 && pixel_size.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!("pixel size {pixel_size}")));
        }
        Ok(Raster { width, height, pixel_size, values, nodata })
    }

    pub fn filled(width: usize, height: usize, pixel_size: f64, value: f32, nodata: f32) -> Result<Self> {
        Self::new(width, height, pixel_size, vec![value; width * height], nodata)
    }

    /// Continuous raster with NaN as nodata.
    pub fn from_fn(
        width: usize,
        height: usize,
        pixel_size: f64,
        mut f: impl FnMut(usize, usize) -> f32,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                values.push(f(row, col));
            }
        }
        Self::new(width, height, pixel_size, values, f32::NAN)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn pixel_size(&self) -> f64 {
        self.pixel_size
    }

    pub fn nodata(&self) -> f32 {
        self.nodata
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f32] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    pub fn is_nodata(&self, v: f32) -> bool {
        v.is_nan() || v == self.nodata
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.values[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: f32) {
        self.values[row * self.width + col] = v;
    }

    /// Value at `(row, col)` or `None` when it is nodata.
    pub fn valid(&self, row: usize, col: usize) -> Option<f32> {
        let v = self.get(row, col);
        (!self.is_nodata(v)).then_some(v)
    }

    /// Same shape and pixel size, new values.
    pub fn with_values(&self, values: Vec<f32>, nodata: f32) -> Result<Self> {
        Self::new(self.width, self.height, self.pixel_size, values, nodata)
    }

    pub fn map(&self, mut f: impl FnMut(Option<f32>) -> f32, nodata: f32) -> Self {
        let values = self
            .values
            .iter()
            .map(|&v| f((!self.is_nodata(v)).then_some(v)))
            .collect();
        self.clone_header(values, nodata)
    }

    /// Scene extent in meters as `(height_m, width_m)`.
    pub fn extent_m(&self) -> (f64, f64) {
        (self.height as f64 * self.pixel_size, self.width as f64 * self.pixel_size)
    }

    /// Keep the top-left `height × width` window.
    pub fn crop(&self, height: usize, width: usize) -> Result<Self> {
        if height > self.height || width > self.width {
            return Err(Error::DimensionMismatch { expected: (self.height, self.width), found: (height, width) });
        }
        let mut values = Vec::with_capacity(height * width);
        for row in 0..height {
            let start = row * self.width;
            values.extend_from_slice(&self.values[start..start + width]);
        }
        Self::new(width, height, self.pixel_size, values, self.nodata)
    }

    pub fn ensure_same_dims(&self, other: &Raster) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch { expected: self.dims(), found: other.dims() });
        }
        Ok(())
    }

    pub(crate) fn clone_header(&self, values: Vec<f32>, nodata: f32) -> Self {
        Raster { width: self.width, height: self.height, pixel_size: self.pixel_size, values, nodata }
    }
}

/// Integer ratio `coarse / fine`, or an error when it is not an integer.
pub fn integer_factor(fine: f64, coarse: f64) -> Result<usize> {
    let ratio = coarse / fine;
    let rounded = ratio.round();
    if rounded < 1.0 || (ratio - rounded).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::NonIntegerScale { from: fine, to: coarse });
    }
    Ok(rounded as usize)
}

/// The 100 m patch grid laid over a finer raster.
///
/// Patch `(i, j)` covers source rows `[i·k, (i+1)·k)` and columns
/// `[j·k, (j+1)·k)` where `k = patch_size_m / source_pixel_size`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchGrid {
    pub patch_rows: usize,
    pub patch_cols: usize,
    pub patch_size_m: f64,
    pub source_pixel_size: f64,
}

impl PatchGrid {
    pub fn new(patch_rows: usize, patch_cols: usize, source_pixel_size: f64) -> Result<Self> {
        let grid = PatchGrid { patch_rows, patch_cols, patch_size_m: PATCH_SIZE_M, source_pixel_size };
        grid.factor()?;
        if patch_rows == 0 || patch_cols == 0 {
            return Err(Error::EmptyRaster);
        }
        Ok(grid)
    }

    /// Largest grid fitting inside `raster`; ragged bottom/right borders are dropped.
    pub fn covering(raster: &Raster) -> Result<Self> {
        let k = integer_factor(raster.pixel_size(), PATCH_SIZE_M)?;
        Self::new(raster.height() / k, raster.width() / k, raster.pixel_size())
    }

    /// Source pixels per patch side.
    pub fn factor(&self) -> Result<usize> {
        integer_factor(self.source_pixel_size, self.patch_size_m)
    }

    pub fn k(&self) -> usize {
        self.factor().expect("validated at construction")
    }

    pub fn n_patches(&self) -> usize {
        self.patch_rows * self.patch_cols
    }

    /// Same patch layout over a raster of another resolution.
    pub fn with_source(&self, source_pixel_size: f64) -> Result<Self> {
        Self::new(self.patch_rows, self.patch_cols, source_pixel_size)
    }

    /// Crop `raster` to exactly this grid.
    pub fn crop(&self, raster: &Raster) -> Result<Raster> {
        self.check_resolution(raster)?;
        let k = self.k();
        raster.crop(self.patch_rows * k, self.patch_cols * k)
    }

    fn check_resolution(&self, raster: &Raster) -> Result<()> {
        if (raster.pixel_size() - self.source_pixel_size).abs() > 1e-9 {
            return Err(Error::NonIntegerScale { from: raster.pixel_size(), to: self.source_pixel_size });
        }
        Ok(())
    }

    /// Check that `raster` matches the grid exactly.
    pub fn check(&self, raster: &Raster) -> Result<()> {
        self.check_resolution(raster)?;
        let k = self.k();
        let expected = (self.patch_rows * k, self.patch_cols * k);
        if raster.dims() != expected {
            return Err(Error::DimensionMismatch { expected, found: raster.dims() });
        }
        Ok(())
    }

    /// Empty 100 m raster on this grid.
    pub fn output(&self, value: f32, nodata: f32) -> Raster {
        Raster::filled(self.patch_cols, self.patch_rows, self.patch_size_m, value, nodata)
            .expect("grid is non-empty")
    }

    /// Calls `f(patch_row, patch_col, values)` for every patch with the
    /// patch's source values in row-major order (nodata included).
    pub fn for_each_patch(&self, raster: &Raster, mut f: impl FnMut(usize, usize, &[f32])) -> Result<()> {
        self.check(raster)?;
        let k = self.k();
        let mut buf = Vec::with_capacity(k * k);
        for pi in 0..self.patch_rows {
            for pj in 0..self.patch_cols {
                buf.clear();
                for r in pi * k..(pi + 1) * k {
                    let start = r * raster.width() + pj * k;
                    buf.extend_from_slice(&raster.values()[start..start + k]);
                }
                f(pi, pj, &buf);
            }
        }
        Ok(())
    }
}

/// Statistics computed per patch by [`patch_reduce`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatchStat {
    Mean,
    /// Population standard deviation (divides by n).
    Std,
    CountNonzero,
    FractionNonzero,
}

/// Aggregate a fine raster to one value per patch. Nodata is excluded; an
/// all-nodata patch yields NaN.
pub fn patch_reduce(raster: &Raster, grid: &PatchGrid, stat: PatchStat) -> Result<Raster> {
    let mut out = grid.output(f32::NAN, f32::NAN);
    grid.for_each_patch(raster, |pi, pj, values| {
        let valid = values.iter().copied().filter(|v| !raster.is_nodata(*v));
        out.set(pi, pj, reduce(valid, stat).map_or(f32::NAN, |v| v as f32));
    })?;
    Ok(out)
}

pub(crate) fn reduce(values: impl Iterator<Item = f32>, stat: PatchStat) -> Option<f64> {
    let mut n = 0usize;
    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    let mut nonzero = 0usize;
    let mut collected = Vec::new();
    for v in values {
        n += 1;
        let v = v as f64;
        sum += v;
        if v != 0.0 {
            nonzero += 1;
        }
        if stat == PatchStat::Std {
            collected.push(v);
        }
    }
    if n == 0 {
        return None;
    }
    let nf = n as f64;
    Some(match stat {
        PatchStat::Mean => sum / nf,
        PatchStat::Std => {
            // two-pass for stability
            let mean = sum / nf;
            for v in &collected {
                sum_sq += (v - mean) * (v - mean);
            }
            (sum_sq / nf).sqrt()
        }
        PatchStat::CountNonzero => nonzero as f64,
        PatchStat::FractionNonzero => nonzero as f64 / nf,
    })
}

/// Catmull-Rom kernel (a = -0.5).
fn cubic_weight(t: f64) -> f64 {
    let a = -0.5;
    let t = t.abs();
    if t <= 1.0 {
        (a + 2.0) * t * t * t - (a + 3.0) * t * t + 1.0
    } else if t < 2.0 {
        a * t * t * t - 5.0 * a * t * t + 8.0 * a * t - 4.0 * a
    } else {
        0.0
    }
}

/// Bicubic (Catmull-Rom) upsampling by an integer factor with clamped edges.
///
/// Output pixels whose center lies inside a nodata source pixel are nodata.
/// Nodata neighbors inside the stencil are skipped and the remaining weights
/// renormalized.
pub fn upsample_bicubic(raster: &Raster, target_pixel_size: f64) -> Result<Raster> {
    let s = integer_factor(target_pixel_size, raster.pixel_size())?;
    if raster.width() < 2 || raster.height() < 2 {
        return Err(Error::RasterTooSmall { what: "bicubic upsampling" });
    }
    let (h, w) = raster.dims();
    let (oh, ow) = (h * s, w * s);
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    // Precompute per-output-coordinate taps along each axis.
    let taps = |n_out: usize, n_in: usize| -> Vec<([usize; 4], [f64; 4], usize)> {
        (0..n_out)
            .map(|o| {
                let x = (o as f64 + 0.5) / s as f64 - 0.5;
                let base = x.floor();
                let frac = x - base;
                let base = base as isize;
                let mut idx = [0usize; 4];
                let mut wts = [0.0f64; 4];
                for m in 0..4 {
                    idx[m] = clamp(base - 1 + m as isize, n_in);
                    wts[m] = cubic_weight(frac - (m as f64 - 1.0));
                }
                (idx, wts, o / s)
            })
            .collect()
    };
    let row_taps = taps(oh, h);
    let col_taps = taps(ow, w);
    let mut values = Vec::with_capacity(oh * ow);
    for (ridx, rw, rcover) in &row_taps {
        for (cidx, cw, ccover) in &col_taps {
            if raster.valid(*rcover, *ccover).is_none() {
                values.push(raster.nodata());
                continue;
            }
            let mut acc = 0.0;
            let mut wsum = 0.0;
            for a in 0..4 {
                for b in 0..4 {
                    if let Some(v) = raster.valid(ridx[a], cidx[b]) {
                        let wt = rw[a] * cw[b];
                        acc += wt * v as f64;
                        wsum += wt;
                    }
                }
            }
            let v = if wsum.abs() > 1e-12 { acc / wsum } else { raster.get(*rcover, *ccover) as f64 };
            values.push(v as f32);
        }
    }
    Raster::new(ow, oh, target_pixel_size, values, raster.nodata())
}

/// Nearest-neighbor downsampling by an integer factor.
///
/// Each output pixel takes the source pixel whose half-open extent
/// `[i, i+1)` contains the output pixel center, so for an even factor `f` the
/// output pixel `o` reads source index `o·f + f/2`. Ragged borders are cropped.
pub fn downsample_nearest(raster: &Raster, target_pixel_size: f64) -> Result<Raster> {
    let f = integer_factor(raster.pixel_size(), target_pixel_size)?;
    let (oh, ow) = (raster.height() / f, raster.width() / f);
    if oh == 0 || ow == 0 {
        return Err(Error::RasterTooSmall { what: "nearest downsampling" });
    }
    let center = |o: usize| ((o as f64 + 0.5) * f as f64).floor() as usize;
    let mut values = Vec::with_capacity(oh * ow);
    for r in 0..oh {
        for c in 0..ow {
            values.push(raster.get(center(r), center(c)));
        }
    }
    Raster::new(ow, oh, target_pixel_size, values, raster.nodata())
}
