//! Deterministic synthetic cities for end-to-end testing.
//!
//! Every patch gets a label, a land-cover mix (vegetation, impervious,
//! soil, water) and a building surface fraction drawn from its label's
//! archetype. Buildings are painted as rectangles on the 5 m grid, 10 m
//! band reflectances are linear mixtures of four endmember spectra, and
//! landuse is drawn per 50 m quadrant from a per-label conditional table.
//! Optional rectangles of patches lose their buildings in the OSM layer
//! only, which is what the confidence mask has to find.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent float methods shadow it under std
use num_traits::Float;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::ccf::derive_seed;
use crate::error::{Error, Result};
use crate::features::{BandRole, BandStack, BuildingPoints, OsmLayers};
use crate::lcz::{Label, LABEL_NODATA};
use crate::raster::{Raster, PATCH_SIZE_M};

/// 10 m pixels per patch side.
const BAND_K: usize = 10;
/// 5 m pixels per patch side.
const OSM_K: usize = 20;
const BAND_PIXEL_M: f64 = 10.0;
const OSM_PIXEL_M: f64 = 5.0;

/// How a landuse class is drawn inside its quadrant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Paint {
    /// The whole quadrant.
    Area,
    /// Only the quadrant's building footprints, as when landuse comes from
    /// tagged building polygons.
    Footprint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanduseClass {
    pub id: u32,
    pub name: String,
    pub paint: Paint,
}

/// One entry of a label's landuse table; class 0 leaves the quadrant unmapped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LanduseDraw {
    pub class: u32,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSpec {
    pub label: u8,
    pub patches: usize,
    /// Mean land-cover shares: vegetation, impervious, soil, water.
    pub cover: [f64; 4],
    /// Building surface fraction range in percent; defaults to the label's
    /// band from the LCZ definitions.
    #[serde(default)]
    pub surface_fraction: Option<(f64, f64)>,
    /// Building side length range in 5 m pixels.
    pub building_size_px: (usize, usize),
    pub landuse: Vec<LanduseDraw>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Endmembers {
    pub vegetation: Vec<f64>,
    pub impervious: Vec<f64>,
    pub soil: Vec<f64>,
    pub water: Vec<f64>,
}

/// Per-acquisition radiometric distortion: band gains `1 + gain_shift·z`
/// and offsets `offset_shift·z'` with standard normal `z`, `z'` per band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionSpec {
    pub id: String,
    #[serde(default)]
    pub gain_shift: f64,
    #[serde(default)]
    pub offset_shift: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapSpec {
    /// Share of built patches whose buildings are removed from the OSM layer.
    pub built_fraction: f64,
    /// Largest gap rectangle side in patches.
    pub max_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    /// Patch columns; rows follow from the total patch count.
    pub cols: usize,
    /// Side of the square patch blocks that share a label.
    pub block: usize,
    pub labels: Vec<LabelSpec>,
    pub landuse_classes: Vec<LanduseClass>,
    pub bands: Vec<String>,
    pub band_roles: BTreeMap<BandRole, String>,
    pub endmembers: Endmembers,
    /// Standard deviation of the per-patch land-cover shares.
    pub cover_sd: f64,
    /// Per-pixel reflectance noise.
    pub pixel_sd: f64,
    /// How strongly a pixel's building coverage shifts its cover toward impervious.
    pub mixing: f64,
    pub acquisitions: Vec<AcquisitionSpec>,
    pub gaps: Option<GapSpec>,
}

/// Sentinel-2 style band names used by the default spec.
pub const DEFAULT_BANDS: [&str; 10] = ["B2", "B3", "B4", "B5", "B6", "B7", "B8", "B8A", "B11", "B12"];

/// Labels of the default eight-class city.
pub const DEFAULT_CITY_LABELS: [u8; 8] = [2, 3, 5, 6, 8, 9, 11, 14];

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec::city(&DEFAULT_CITY_LABELS, 250, 50)
    }
}

impl SynthSpec {
    /// A city of `labels` with `patches` patches each, using the default
    /// archetypes.
    pub fn city(labels: &[u8], patches: usize, cols: usize) -> Self {
        let roles = [
            (BandRole::Blue, "B2"),
            (BandRole::Green, "B3"),
            (BandRole::Red, "B4"),
            (BandRole::Nir, "B8"),
            (BandRole::Swir, "B11"),
        ]
        .into_iter()
        .map(|(r, b)| (r, b.to_string()))
        .collect();
        SynthSpec {
            cols,
            block: 3,
            labels: labels.iter().map(|&l| default_label(l, patches)).collect(),
            landuse_classes: default_landuse_classes(),
            bands: DEFAULT_BANDS.iter().map(|b| b.to_string()).collect(),
            band_roles: roles,
            endmembers: Endmembers {
                vegetation: vec![0.03, 0.06, 0.04, 0.10, 0.30, 0.38, 0.42, 0.44, 0.20, 0.10],
                impervious: vec![0.12, 0.13, 0.14, 0.15, 0.17, 0.18, 0.19, 0.20, 0.22, 0.20],
                soil: vec![0.08, 0.11, 0.15, 0.19, 0.22, 0.24, 0.26, 0.27, 0.33, 0.28],
                water: vec![0.06, 0.05, 0.03, 0.02, 0.01, 0.01, 0.01, 0.01, 0.005, 0.003],
            },
            cover_sd: 0.08,
            pixel_sd: 0.01,
            mixing: 0.6,
            acquisitions: vec![AcquisitionSpec { id: "acq0".into(), gain_shift: 0.0, offset_shift: 0.0 }],
            gaps: None,
        }
    }

    pub fn total_patches(&self) -> usize {
        self.labels.iter().map(|l| l.patches).sum()
    }

    pub fn rows(&self) -> usize {
        self.total_patches().div_ceil(self.cols.max(1))
    }

    fn validate(&self) -> Result<()> {
        if self.total_patches() == 0 {
            return Err(Error::InvalidParameter("synthetic spec has zero patches".into()));
        }
        if self.cols == 0 || self.block == 0 {
            return Err(Error::InvalidParameter("cols and block must be >= 1".into()));
        }
        let nb = self.bands.len();
        let e = &self.endmembers;
        if nb == 0 || [&e.vegetation, &e.impervious, &e.soil, &e.water].iter().any(|v| v.len() != nb) {
            return Err(Error::InvalidParameter("every endmember needs one value per band".into()));
        }
        if self.acquisitions.is_empty() {
            return Err(Error::InvalidParameter("synthetic spec needs an acquisition".into()));
        }
        for l in &self.labels {
            let label = Label::new(l.label).ok_or_else(|| Error::InvalidParameter(format!("label {} outside 1..=17", l.label)))?;
            let (lo, hi) = l.building_size_px;
            if lo == 0 || hi < lo || hi > OSM_K {
                return Err(Error::InvalidParameter(format!("label {label}: bad building size range")));
            }
            if l.cover.iter().any(|c| !(*c >= 0.0)) || l.cover.iter().sum::<f64>() <= 0.0 {
                return Err(Error::InvalidParameter(format!("label {label}: bad cover shares")));
            }
            for d in &l.landuse {
                if d.class != 0 && !self.landuse_classes.iter().any(|c| c.id == d.class) {
                    return Err(Error::InvalidParameter(format!("label {label}: unknown landuse class {}", d.class)));
                }
            }
        }
        if let Some(g) = self.gaps {
            if !(0.0..=1.0).contains(&g.built_fraction) || g.max_size == 0 {
                return Err(Error::InvalidParameter("bad gap spec".into()));
            }
        }
        Ok(())
    }
}

fn default_landuse_classes() -> Vec<LanduseClass> {
    [
        (1, "residential", Paint::Footprint),
        (2, "commercial", Paint::Footprint),
        (3, "industrial", Paint::Footprint),
        (4, "forest", Paint::Area),
        (5, "farmland", Paint::Area),
        (6, "grass", Paint::Area),
        (7, "water", Paint::Area),
        (8, "retail", Paint::Footprint),
    ]
    .into_iter()
    .map(|(id, name, paint)| LanduseClass { id, name: name.into(), paint })
    .collect()
}

/// Default archetype of an LCZ label.
pub fn default_label(label: u8, patches: usize) -> LabelSpec {
    let draws = |pairs: &[(u32, f64)]| pairs.iter().map(|&(class, weight)| LanduseDraw { class, weight }).collect();
    let (cover, size, landuse): ([f64; 4], (usize, usize), Vec<LanduseDraw>) = match label {
        1 => ([0.05, 0.90, 0.05, 0.0], (4, 7), draws(&[(2, 0.5), (1, 0.2), (0, 0.3)])),
        2 => ([0.10, 0.85, 0.05, 0.0], (3, 5), draws(&[(2, 0.35), (1, 0.35), (0, 0.3)])),
        3 => ([0.15, 0.80, 0.05, 0.0], (2, 4), draws(&[(1, 0.6), (0, 0.4)])),
        4 => ([0.40, 0.55, 0.05, 0.0], (4, 6), draws(&[(1, 0.4), (2, 0.3), (0, 0.3)])),
        5 => ([0.45, 0.50, 0.05, 0.0], (3, 5), draws(&[(1, 0.55), (2, 0.15), (0, 0.3)])),
        6 => ([0.50, 0.45, 0.05, 0.0], (2, 3), draws(&[(1, 0.65), (0, 0.35)])),
        7 => ([0.15, 0.55, 0.30, 0.0], (1, 2), draws(&[(1, 0.3), (3, 0.2), (0, 0.5)])),
        8 => ([0.10, 0.85, 0.05, 0.0], (7, 12), draws(&[(3, 0.45), (8, 0.3), (0, 0.25)])),
        9 => ([0.70, 0.20, 0.10, 0.0], (2, 3), draws(&[(1, 0.35), (5, 0.25), (6, 0.1), (0, 0.3)])),
        10 => ([0.15, 0.70, 0.15, 0.0], (5, 9), draws(&[(3, 0.7), (0, 0.3)])),
        11 => ([0.95, 0.0, 0.05, 0.0], (2, 3), draws(&[(4, 0.7), (0, 0.3)])),
        12 => ([0.80, 0.05, 0.15, 0.0], (2, 3), draws(&[(4, 0.4), (6, 0.3), (0, 0.3)])),
        13 => ([0.70, 0.0, 0.30, 0.0], (2, 3), draws(&[(6, 0.5), (0, 0.5)])),
        14 => ([0.85, 0.0, 0.15, 0.0], (2, 3), draws(&[(5, 0.5), (6, 0.3), (0, 0.2)])),
        15 => ([0.0, 0.90, 0.10, 0.0], (2, 3), draws(&[(3, 0.2), (0, 0.8)])),
        16 => ([0.05, 0.0, 0.95, 0.0], (2, 3), draws(&[(5, 0.3), (0, 0.7)])),
        _ => ([0.0, 0.0, 0.0, 1.0], (2, 3), draws(&[(7, 0.8), (0, 0.2)])),
    };
    // natural classes get a few scattered buildings, well inside their band
    let surface_fraction = if label > 10 { Some((0.0, 4.0)) } else { None };
    LabelSpec { label, patches, cover, surface_fraction, building_size_px: size, landuse }
}

/// Gap rectangle in patch units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapRect {
    pub row: usize,
    pub col: usize,
    pub rows: usize,
    pub cols: usize,
}

impl GapRect {
    pub fn contains(&self, i: usize, j: usize) -> bool {
        i >= self.row && i < self.row + self.rows && j >= self.col && j < self.col + self.cols
    }
}

#[derive(Debug, Clone)]
pub struct SynthScene {
    pub id: String,
    pub acquisitions: Vec<BandStack>,
    /// Landuse and the OSM building layer, with gaps applied.
    pub osm: OsmLayers,
    /// Building layer before gap injection.
    pub complete_building: Raster,
    /// Building centroids, with gaps applied.
    pub points: BuildingPoints,
    /// Ground truth at 100 m, 255 where no label was generated.
    pub labels: Raster,
    pub gaps: Vec<GapRect>,
}

impl SynthScene {
    /// 1 on patches inside a gap rectangle.
    pub fn gap_mask(&self) -> Raster {
        let (h, w) = self.labels.dims();
        Raster::from_fn(w, h, PATCH_SIZE_M, |i, j| if self.gaps.iter().any(|g| g.contains(i, j)) { 1.0 } else { 0.0 })
            .expect("label raster is non-empty")
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn pick_landuse(rng: &mut ChaCha8Rng, draws: &[LanduseDraw]) -> u32 {
    let total: f64 = draws.iter().map(|d| d.weight.max(0.0)).sum();
    if total <= 0.0 {
        return 0;
    }
    let mut u = rng.gen::<f64>() * total;
    for d in draws {
        u -= d.weight.max(0.0);
        if u < 0.0 {
            return d.class;
        }
    }
    draws.last().map_or(0, |d| d.class)
}

/// Paint non-overlapping rectangles inside one patch until about `target`
/// pixels are covered. Returns building centre points in pixel units.
fn paint_buildings(
    rng: &mut ChaCha8Rng,
    patch: &mut [bool],
    target: usize,
    size: (usize, usize),
) -> Vec<(f64, f64)> {
    let mut covered = 0usize;
    let mut centres = Vec::new();
    let mut attempts = 0;
    while covered < target && attempts < 2000 {
        attempts += 1;
        let remaining = target - covered;
        let mut h = rng.gen_range(size.0..=size.1);
        let mut w = rng.gen_range(size.0..=size.1);
        while h * w > remaining && (h > 1 || w > 1) {
            if h >= w {
                h -= 1;
            } else {
                w -= 1;
            }
        }
        let r0 = rng.gen_range(0..=OSM_K - h);
        let c0 = rng.gen_range(0..=OSM_K - w);
        let free = (r0..r0 + h).all(|r| (c0..c0 + w).all(|c| !patch[r * OSM_K + c]));
        if !free {
            continue;
        }
        for r in r0..r0 + h {
            for c in c0..c0 + w {
                patch[r * OSM_K + c] = true;
            }
        }
        covered += h * w;
        centres.push((c0 as f64 + w as f64 / 2.0, r0 as f64 + h as f64 / 2.0));
    }
    centres
}

/// Patch labels laid out in shuffled square blocks so labels form
/// contiguous neighbourhoods while per-label counts stay exact.
fn layout(rng: &mut ChaCha8Rng, spec: &SynthSpec, rows: usize) -> Vec<Option<usize>> {
    let cols = spec.cols;
    let b = spec.block;
    let block_cols = cols.div_ceil(b);
    let n_blocks = rows.div_ceil(b) * block_cols;
    let mut order: Vec<usize> = (0..n_blocks).collect();
    order.shuffle(rng);
    let mut rank = vec![0usize; n_blocks];
    for (k, &blk) in order.iter().enumerate() {
        rank[blk] = k;
    }
    let mut cells: Vec<usize> = (0..rows * cols).collect();
    cells.sort_by_key(|&c| {
        let (i, j) = (c / cols, c % cols);
        (rank[(i / b) * block_cols + j / b], c)
    });
    let mut out = vec![None; rows * cols];
    let mut it = cells.into_iter();
    for (k, l) in spec.labels.iter().enumerate() {
        for c in it.by_ref().take(l.patches) {
            out[c] = Some(k);
        }
    }
    out
}

/// Generate one scene. Identical `(spec, seed)` give identical scenes.
pub fn generate(spec: &SynthSpec, id: &str, seed: u64) -> Result<SynthScene> {
    spec.validate()?;
    let rows = spec.rows();
    let cols = spec.cols;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let assignment = layout(&mut rng, spec, rows);
    // cells left over by a ragged last row look like a random label but stay unlabeled
    let archetype: Vec<usize> =
        assignment.iter().map(|a| a.unwrap_or_else(|| rng.gen_range(0..spec.labels.len()))).collect();

    let osm_w = cols * OSM_K;
    let osm_h = rows * OSM_K;
    let mut building = vec![false; osm_w * osm_h];
    let mut landuse = vec![0.0f32; osm_w * osm_h];
    let mut points_px: Vec<(usize, f64, f64)> = Vec::new();
    let mut covers: Vec<[f64; 4]> = Vec::with_capacity(rows * cols);
    let mut fractions: Vec<f64> = Vec::with_capacity(rows * cols);
    let paint_of = |class: u32| spec.landuse_classes.iter().find(|c| c.id == class).map_or(Paint::Area, |c| c.paint);

    for cell in 0..rows * cols {
        let (pi, pj) = (cell / cols, cell % cols);
        let ls = &spec.labels[archetype[cell]];
        let label = Label::new(ls.label).expect("validated");

        let mut cover = ls.cover;
        for c in cover.iter_mut() {
            *c = (*c + spec.cover_sd * normal(&mut rng)).max(0.0);
        }
        let sum: f64 = cover.iter().sum();
        if sum > 0.0 {
            cover.iter_mut().for_each(|c| *c /= sum);
        } else {
            cover = ls.cover;
        }
        covers.push(cover);

        let (lo, hi) = ls.surface_fraction.unwrap_or_else(|| label.surface_fraction_band());
        // keep clear of the band edges so quantized coverage stays inside
        let margin = ((hi - lo) * 0.1).min(2.0);
        let pct = rng.gen_range((lo + margin)..=(hi - margin).max(lo + margin));
        let target = ((pct / 100.0) * (OSM_K * OSM_K) as f64).round() as usize;
        let mut patch = vec![false; OSM_K * OSM_K];
        let centres = paint_buildings(&mut rng, &mut patch, target, ls.building_size_px);
        fractions.push(patch.iter().filter(|&&b| b).count() as f64 / (OSM_K * OSM_K) as f64);
        for (x, y) in centres {
            points_px.push((cell, pj as f64 * OSM_K as f64 + x, pi as f64 * OSM_K as f64 + y));
        }

        let half = OSM_K / 2;
        for q in 0..4 {
            let class = pick_landuse(&mut rng, &ls.landuse);
            let (qr, qc) = ((q / 2) * half, (q % 2) * half);
            for r in qr..qr + half {
                for c in qc..qc + half {
                    let b = patch[r * OSM_K + c];
                    let v = match (class, paint_of(class)) {
                        (0, _) => 0,
                        (_, Paint::Area) => class,
                        (_, Paint::Footprint) if b => class,
                        _ => 0,
                    };
                    let idx = (pi * OSM_K + r) * osm_w + pj * OSM_K + c;
                    landuse[idx] = v as f32;
                    building[idx] = b;
                }
            }
        }
    }

    // gaps remove buildings from the OSM layer and its centroids only
    let mut gaps = Vec::new();
    let mut in_gap = vec![false; rows * cols];
    if let Some(g) = spec.gaps {
        let mut gap_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x6a70));
        let built: Vec<bool> = assignment
            .iter()
            .map(|a| a.is_some_and(|k| Label::new(spec.labels[k].label).is_some_and(Label::is_built)))
            .collect();
        let n_built = built.iter().filter(|&&b| b).count();
        let target = (g.built_fraction * n_built as f64).round() as usize;
        let mut covered = 0usize;
        let mut attempts = 0;
        while covered < target && attempts < 10_000 {
            attempts += 1;
            let h = gap_rng.gen_range(1..=g.max_size.min(rows));
            let w = gap_rng.gen_range(1..=g.max_size.min(cols));
            let rect = GapRect { row: gap_rng.gen_range(0..=rows - h), col: gap_rng.gen_range(0..=cols - w), rows: h, cols: w };
            let gain = (rect.row..rect.row + h)
                .flat_map(|i| (rect.col..rect.col + w).map(move |j| i * cols + j))
                .filter(|&c| built[c] && !in_gap[c])
                .count();
            // skip rectangles that would overshoot the target badly
            if gain == 0 || covered + gain > target + g.max_size {
                continue;
            }
            for i in rect.row..rect.row + h {
                for j in rect.col..rect.col + w {
                    in_gap[i * cols + j] = true;
                }
            }
            covered += gain;
            gaps.push(rect);
        }
    }

    let complete: Vec<f32> = building.iter().map(|&b| b as u8 as f32).collect();
    let recorded: Vec<f32> = building
        .iter()
        .enumerate()
        .map(|(idx, &b)| {
            let (r, c) = (idx / osm_w, idx % osm_w);
            if b && !in_gap[(r / OSM_K) * cols + c / OSM_K] {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let points: Vec<(f64, f64)> = points_px
        .iter()
        .filter(|(cell, _, _)| !in_gap[*cell])
        .map(|&(_, x, y)| (x * OSM_PIXEL_M, y * OSM_PIXEL_M))
        .collect();

    let complete_building = Raster::new(osm_w, osm_h, OSM_PIXEL_M, complete, f32::NAN)?;
    let osm = OsmLayers {
        landuse: Raster::new(osm_w, osm_h, OSM_PIXEL_M, landuse, f32::NAN)?,
        building: Raster::new(osm_w, osm_h, OSM_PIXEL_M, recorded, f32::NAN)?,
    };
    let labels = Raster::new(
        cols,
        rows,
        PATCH_SIZE_M,
        assignment.iter().map(|a| a.map_or(LABEL_NODATA as f32, |k| spec.labels[k].label as f32)).collect(),
        LABEL_NODATA as f32,
    )?;

    let acquisitions = spec
        .acquisitions
        .iter()
        .enumerate()
        .map(|(a, acq)| render_acquisition(spec, acq, derive_seed(seed, 0x1000 + a as u64), rows, &covers, &fractions, &complete_building))
        .collect::<Result<Vec<_>>>()?;

    Ok(SynthScene {
        id: id.to_string(),
        acquisitions,
        osm,
        complete_building,
        points: BuildingPoints { points },
        labels,
        gaps,
    })
}

/// Band reflectances of one acquisition from the per-patch cover mix.
fn render_acquisition(
    spec: &SynthSpec,
    acq: &AcquisitionSpec,
    seed: u64,
    rows: usize,
    covers: &[[f64; 4]],
    fractions: &[f64],
    building: &Raster,
) -> Result<BandStack> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nb = spec.bands.len();
    let gains: Vec<f64> = (0..nb).map(|_| 1.0 + acq.gain_shift * normal(&mut rng)).collect();
    let offsets: Vec<f64> = (0..nb).map(|_| acq.offset_shift * normal(&mut rng)).collect();
    let e = &spec.endmembers;
    let ends = [&e.vegetation, &e.impervious, &e.soil, &e.water];
    let cols = spec.cols;
    let (h, w) = (rows * BAND_K, cols * BAND_K);
    let mut bands = vec![vec![0.0f32; h * w]; nb];
    let step = OSM_K / BAND_K;
    for r in 0..h {
        for c in 0..w {
            let cell = (r / BAND_K) * cols + c / BAND_K;
            let mut bcov = 0.0;
            for dr in 0..step {
                for dc in 0..step {
                    bcov += building.get(r * step + dr, c * step + dc) as f64;
                }
            }
            bcov /= (step * step) as f64;
            let mut cover = covers[cell];
            let shift = spec.mixing * (bcov - fractions[cell]);
            cover[0] = (cover[0] - shift).max(0.0);
            cover[1] = (cover[1] + shift).max(0.0);
            let sum: f64 = cover.iter().sum();
            for (b, band) in bands.iter_mut().enumerate() {
                let refl: f64 = cover.iter().zip(&ends).map(|(s, em)| s * em[b]).sum::<f64>() / sum.max(1e-12);
                let v = refl * gains[b] + offsets[b] + spec.pixel_sd * normal(&mut rng);
                band[r * w + c] = v.clamp(1e-4, 1.0) as f32;
            }
        }
    }
    let rasters = spec
        .bands
        .iter()
        .zip(bands)
        .map(|(name, values)| Ok((name.clone(), Raster::new(w, h, BAND_PIXEL_M, values, f32::NAN)?)))
        .collect::<Result<Vec<_>>>()?;
    BandStack::new(acq.id.clone(), rasters, spec.band_roles.clone())
}
