//! Label maps from votes, 3×3 filtering, temporal majority voting and
//! confusion-matrix scoring.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::ccf::VotesCube;
use crate::error::{Error, Result};
use crate::lcz::{Label, LABEL_NODATA, NUM_LABELS};
use crate::raster::{Raster, PATCH_SIZE_M};

const NODATA: f32 = LABEL_NODATA as f32;

/// A 100 m raster of labels 1–17 with nodata 255.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    raster: Raster,
}

impl LabelMap {
    /// All-nodata map.
    pub fn empty(rows: usize, cols: usize) -> Result<Self> {
        Ok(LabelMap { raster: Raster::filled(cols, rows, PATCH_SIZE_M, NODATA, NODATA)? })
    }

    /// Wrap a raster, rejecting values outside `1..=17` other than nodata.
    pub fn from_raster(raster: &Raster) -> Result<Self> {
        let values = raster
            .values()
            .iter()
            .map(|&v| {
                if raster.is_nodata(v) || v == NODATA {
                    Ok(NODATA)
                } else {
                    Label::from_value(v)
                        .map(|l| l.get() as f32)
                        .ok_or_else(|| Error::InvalidParameter(alloc::format!("label value {v} outside 1..=17")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LabelMap { raster: raster.with_values(values, NODATA)? })
    }

    pub fn from_labels(rows: usize, cols: usize, labels: &[Option<Label>]) -> Result<Self> {
        let values = labels.iter().map(|l| l.map_or(NODATA, |l| l.get() as f32)).collect();
        Ok(LabelMap { raster: Raster::new(cols, rows, PATCH_SIZE_M, values, NODATA)? })
    }

    pub fn raster(&self) -> &Raster {
        &self.raster
    }

    pub fn into_raster(self) -> Raster {
        self.raster
    }

    pub fn dims(&self) -> (usize, usize) {
        self.raster.dims()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<Label> {
        Label::from_value(self.raster.get(i, j))
    }

    pub fn set(&mut self, i: usize, j: usize, label: Option<Label>) {
        self.raster.set(i, j, label.map_or(NODATA, |l| l.get() as f32));
    }

    pub fn labels(&self) -> impl Iterator<Item = Option<Label>> + '_ {
        self.raster.values().iter().map(|&v| Label::from_value(v))
    }

    pub fn valid_fraction(&self) -> f64 {
        let n = self.raster.values().len();
        self.labels().filter(Option::is_some).count() as f64 / n as f64
    }
}

/// Index of the largest entry; ties to the lowest index; `None` if all zero.
pub fn argmax_label(votes: &[f64]) -> Option<Label> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in votes.iter().enumerate() {
        if v > 0.0 && best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| Label::from_index(i))
}

/// Label with the most votes per patch.
pub fn argmax_map(votes: &VotesCube) -> LabelMap {
    let (rows, cols) = votes.dims();
    let labels: Vec<Option<Label>> =
        (0..rows).flat_map(|i| (0..cols).map(move |j| (i, j))).map(|(i, j)| argmax_label(votes.get(i, j))).collect();
    LabelMap::from_labels(rows, cols, &labels).expect("cube dims are nonzero")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    /// Lower median of the label integers.
    #[default]
    Median,
    /// Most frequent label, ties to the lowest.
    Mode,
}

/// 3×3 filter over valid neighbours. Nodata centres stay nodata.
pub fn median_filter_3x3(map: &LabelMap, kind: FilterKind) -> LabelMap {
    let (h, w) = map.dims();
    let mut out = map.clone();
    let mut window: Vec<u8> = Vec::with_capacity(9);
    for i in 0..h {
        for j in 0..w {
            if map.get(i, j).is_none() {
                continue;
            }
            window.clear();
            for r in i.saturating_sub(1)..(i + 2).min(h) {
                for c in j.saturating_sub(1)..(j + 2).min(w) {
                    if let Some(l) = map.get(r, c) {
                        window.push(l.get());
                    }
                }
            }
            let v = match kind {
                FilterKind::Median => {
                    window.sort_unstable();
                    window[(window.len() - 1) / 2]
                }
                FilterKind::Mode => {
                    let mut counts = [0u32; NUM_LABELS];
                    for &l in &window {
                        counts[l as usize - 1] += 1;
                    }
                    crate::ccf::majority(&counts).expect("centre is valid").get()
                }
            };
            out.set(i, j, Label::new(v));
        }
    }
    out
}

/// Most frequent valid label across maps; ties to the lowest label.
pub fn majority_vote_fusion(maps: &[LabelMap]) -> Result<LabelMap> {
    let first = maps.first().ok_or(Error::EmptyTable)?;
    let dims = first.dims();
    for m in maps {
        if m.dims() != dims {
            return Err(Error::DimensionMismatch { expected: dims, found: m.dims() });
        }
    }
    let mut out = LabelMap::empty(dims.0, dims.1)?;
    for i in 0..dims.0 {
        for j in 0..dims.1 {
            let mut counts = [0u32; NUM_LABELS];
            for m in maps {
                if let Some(l) = m.get(i, j) {
                    counts[l.index()] += 1;
                }
            }
            out.set(i, j, crate::ccf::majority(&counts));
        }
    }
    Ok(out)
}

/// 17×17 counts, rows = truth, columns = prediction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: [[u64; NUM_LABELS]; NUM_LABELS],
}

impl ConfusionMatrix {
    pub fn from_counts(counts: [[u64; NUM_LABELS]; NUM_LABELS]) -> Result<Self> {
        let m = ConfusionMatrix { counts };
        if m.total() == 0 {
            return Err(Error::NoOverlap);
        }
        Ok(m)
    }

    pub fn counts(&self) -> &[[u64; NUM_LABELS]; NUM_LABELS] {
        &self.counts
    }

    pub fn get(&self, truth: Label, pred: Label) -> u64 {
        self.counts[truth.index()][pred.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    fn row_sum(&self, l: usize) -> u64 {
        self.counts[l].iter().sum()
    }

    fn col_sum(&self, l: usize) -> u64 {
        self.counts.iter().map(|r| r[l]).sum()
    }

    pub fn oa(&self) -> f64 {
        let diag: u64 = (0..NUM_LABELS).map(|l| self.counts[l][l]).sum();
        diag as f64 / self.total() as f64
    }

    /// Chance agreement from the marginals.
    pub fn expected_agreement(&self) -> f64 {
        let n = self.total() as f64;
        (0..NUM_LABELS).map(|l| self.row_sum(l) as f64 * self.col_sum(l) as f64).sum::<f64>() / (n * n)
    }

    /// Cohen's kappa. With total chance agreement (a single class on both
    /// sides) it is 1 for perfect agreement and 0 otherwise.
    pub fn kappa(&self) -> f64 {
        let pe = self.expected_agreement();
        if pe >= 1.0 {
            return if self.oa() >= 1.0 { 1.0 } else { 0.0 };
        }
        (self.oa() - pe) / (1.0 - pe)
    }

    /// Producer accuracy (recall) of `label`; `None` if absent from truth.
    pub fn producer_accuracy(&self, label: Label) -> Option<f64> {
        let row = self.row_sum(label.index());
        (row > 0).then(|| self.counts[label.index()][label.index()] as f64 / row as f64)
    }

    /// Row-normalized percentages; rows absent from truth are `None`.
    pub fn row_percentages(&self) -> Vec<Option<[f64; NUM_LABELS]>> {
        (0..NUM_LABELS)
            .map(|l| {
                let row = self.row_sum(l);
                (row > 0).then(|| {
                    let mut p = [0.0; NUM_LABELS];
                    for (o, &c) in p.iter_mut().zip(&self.counts[l]) {
                        *o = 100.0 * c as f64 / row as f64;
                    }
                    p
                })
            })
            .collect()
    }

    /// Text table of row percentages for labels present in truth, blanking
    /// cells below `min_percent`.
    pub fn pretty_percentages(&self, min_percent: f64) -> String {
        let mut s = String::from("truth\\pred");
        for l in Label::all() {
            let _ = write!(s, "{:>5}", l.get());
        }
        s.push('\n');
        for (l, row) in Label::all().zip(self.row_percentages()) {
            let Some(row) = row else { continue };
            let _ = write!(s, "{:>10}", l.get());
            for p in row {
                if p >= min_percent {
                    let _ = write!(s, "{:>5.0}", p);
                } else {
                    s.push_str("     ");
                }
            }
            s.push('\n');
        }
        s
    }
}

/// Confusion matrix over patches labelled in both maps.
pub fn evaluate(pred: &LabelMap, truth: &LabelMap) -> Result<ConfusionMatrix> {
    if pred.dims() != truth.dims() {
        return Err(Error::DimensionMismatch { expected: truth.dims(), found: pred.dims() });
    }
    let mut counts = [[0u64; NUM_LABELS]; NUM_LABELS];
    for (p, t) in pred.labels().zip(truth.labels()) {
        if let (Some(p), Some(t)) = (p, t) {
            counts[t.index()][p.index()] += 1;
        }
    }
    ConfusionMatrix::from_counts(counts)
}
