//! Evaluation outputs, sensitivity curves, importance rankings and the
//! label palette.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use lczfuse_core::ccf::FeatureImportance;
use lczfuse_core::mask::SensitivityPoint;
use lczfuse_core::postprocess::ConfusionMatrix;
use lczfuse_core::{Label, NUM_LABELS};

use crate::error::{CliError, Result};

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// 17×17 counts, rows truth and columns prediction.
pub fn confusion_csv(cm: &ConfusionMatrix) -> String {
    let mut s = String::from("truth\\pred");
    for l in 1..=NUM_LABELS {
        let _ = write!(s, ",{l}");
    }
    s.push('\n');
    for (i, row) in cm.counts().iter().enumerate() {
        let _ = write!(s, "{}", i + 1);
        for c in row {
            let _ = write!(s, ",{c}");
        }
        s.push('\n');
    }
    s
}

/// `oa=…`, `kappa=…` and `pa_<l>=…` lines; PA of labels absent from the
/// truth reads `undefined`.
pub fn metrics_text(cm: &ConfusionMatrix) -> String {
    let mut s = format!("oa={:.4}\nkappa={:.4}\nn={}\n", cm.oa(), cm.kappa(), cm.total());
    for label in Label::all() {
        match cm.producer_accuracy(label) {
            Some(pa) => {
                let _ = writeln!(s, "pa_{}={pa:.4}", label.get());
            }
            None => {
                let _ = writeln!(s, "pa_{}=undefined", label.get());
            }
        }
    }
    s
}

pub fn write_confusion(path: &Path, cm: &ConfusionMatrix) -> Result<()> {
    write(path, &confusion_csv(cm))
}

pub fn write_metrics(path: &Path, cm: &ConfusionMatrix) -> Result<()> {
    write(path, &metrics_text(cm))
}

fn opt(v: Option<f64>) -> String {
    v.map(|c| c.to_string()).unwrap_or_default()
}

pub fn curves_csv(curve: &[SensitivityPoint]) -> String {
    let mut s = String::from("threshold,corr_quasi_truth,corr_all_pass\n");
    for p in curve {
        let _ = writeln!(s, "{},{},{}", p.threshold, opt(p.corr_quasi_truth), opt(p.corr_all_pass));
    }
    s
}

/// Ranked CSV `rank,feature,importance,fold_1,…`.
pub fn importance_csv(ranked: &[FeatureImportance]) -> String {
    let folds = ranked.first().map_or(0, |f| f.per_fold.len());
    let mut s = String::from("rank,feature,importance");
    for k in 1..=folds {
        let _ = write!(s, ",fold_{k}");
    }
    s.push('\n');
    for (i, f) in ranked.iter().enumerate() {
        let _ = write!(s, "{},{},{}", i + 1, f.feature, f.importance);
        for v in &f.per_fold {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}

/// Horizontal text bars scaled to the largest importance.
pub fn importance_bars(ranked: &[FeatureImportance], width: usize) -> String {
    let top = ranked.iter().map(|f| f.importance).fold(0.0f64, f64::max);
    let name_w = ranked.iter().map(|f| f.feature.len()).max().unwrap_or(0);
    let mut s = String::new();
    for f in ranked {
        let n = if top > 0.0 { ((f.importance.max(0.0) / top) * width as f64).round() as usize } else { 0 };
        let _ = writeln!(s, "{:<name_w$} {:>8.4} {}", f.feature, f.importance, "#".repeat(n));
    }
    s
}

/// Usual LCZ colours, indexed by label 1–17.
pub const PALETTE: [[u8; 3]; NUM_LABELS] = [
    [0x8c, 0x00, 0x00],
    [0xd1, 0x00, 0x00],
    [0xff, 0x00, 0x00],
    [0xbf, 0x4d, 0x00],
    [0xff, 0x66, 0x00],
    [0xff, 0x99, 0x55],
    [0xfa, 0xee, 0x05],
    [0xbc, 0xbc, 0xbc],
    [0xff, 0xcc, 0xaa],
    [0x55, 0x55, 0x55],
    [0x00, 0x6a, 0x00],
    [0x00, 0xaa, 0x00],
    [0x64, 0x85, 0x25],
    [0xb9, 0xdb, 0x79],
    [0x00, 0x00, 0x00],
    [0xfb, 0xf7, 0xae],
    [0x6a, 0x6a, 0xff],
];

/// Flat palette: 51 bytes, the RGB triple of label 1 first.
pub fn write_palette(path: &Path) -> Result<()> {
    let bytes: Vec<u8> = PALETTE.iter().flatten().copied().collect();
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}
