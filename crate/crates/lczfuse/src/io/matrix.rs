//! Weight matrices as CSV: row key, then one probability column per label.
//! Comment lines carry the smoothing constant and, for the building matrix,
//! the density ranges (`# gap=5 bn_max=…`).

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use lczfuse_core::fusion::{DensityRanges, WeightMatrix};
use lczfuse_core::mask::BuildLanduseMatrix;
use lczfuse_core::NUM_LABELS;

use crate::error::{CliError, Result};

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::data(path, e.to_string())
}

/// `key=value` pairs from the leading `#` lines.
fn comments(text: &str) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        for pair in line[1..].split_whitespace() {
            if let Some((k, v)) = pair.split_once('=') {
                out.insert(k.to_string(), v.to_string());
            }
        }
    }
    out
}

pub fn write_weight_matrix(path: &Path, m: &WeightMatrix, ranges: Option<&DensityRanges>) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    if let Some(r) = ranges {
        writeln!(file, "# gap={} bn_max={}", r.gap, r.bn_max).map_err(|e| CliError::io(path, e))?;
    }
    writeln!(file, "# laplace_alpha={}", m.laplace_alpha).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let mut header = vec!["key".to_string()];
    header.extend((1..=NUM_LABELS).map(|l| format!("lcz_{l}")));
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for (key, row) in m.rows() {
        let mut rec = vec![key.to_string()];
        rec.extend(row.iter().map(|p| p.to_string()));
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Reads a matrix and, when the header comment is present, its density ranges.
pub fn read_weight_matrix(path: &Path) -> Result<(WeightMatrix, Option<DensityRanges>)> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let meta = comments(&text);
    let num = |k: &str| -> Result<Option<f64>> {
        meta.get(k).map(|v| v.parse().map_err(|_| CliError::data(path, format!("bad {k} comment")))).transpose()
    };
    let alpha = num("laplace_alpha")?.unwrap_or(0.0);
    let ranges = match (num("gap")?, num("bn_max")?) {
        (Some(g), Some(b)) => Some(DensityRanges::new(b as u32, g as u32).map_err(|e| CliError::data(path, e.to_string()))?),
        (None, None) => None,
        _ => return Err(CliError::data(path, "density range comment needs both gap and bn_max")),
    };
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let mut rows = BTreeMap::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let bad = || CliError::data(path, format!("row {}: expected a key and {NUM_LABELS} probabilities", n + 1));
        if rec.len() != NUM_LABELS + 1 {
            return Err(bad());
        }
        let key: u32 = rec[0].trim().parse().map_err(|_| bad())?;
        let mut row = [0.0; NUM_LABELS];
        for (slot, v) in row.iter_mut().zip(rec.iter().skip(1)) {
            *slot = v.trim().parse().map_err(|_| bad())?;
        }
        rows.insert(key, row);
    }
    let m = WeightMatrix::from_rows(rows, alpha).map_err(|e| CliError::data(path, e.to_string()))?;
    Ok((m, ranges))
}

/// `landuse_class,building_pixels,total_pixels`.
pub fn write_build_landuse(path: &Path, m: &BuildLanduseMatrix) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["landuse_class", "building_pixels", "total_pixels"]).map_err(|e| csv_err(path, e))?;
    for (class, (b, t)) in m.counts() {
        w.write_record([class.to_string(), b.to_string(), t.to_string()]).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_build_landuse(path: &Path) -> Result<BuildLanduseMatrix> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut counts = BTreeMap::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let bad = || CliError::data(path, format!("row {}: expected class,building,total", n + 1));
        if rec.len() != 3 {
            return Err(bad());
        }
        let c: u32 = rec[0].trim().parse().map_err(|_| bad())?;
        let b: u64 = rec[1].trim().parse().map_err(|_| bad())?;
        let t: u64 = rec[2].trim().parse().map_err(|_| bad())?;
        counts.insert(c, (b, t));
    }
    BuildLanduseMatrix::from_counts(counts).map_err(|e| CliError::data(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_matrix_roundtrip_with_ranges() {
        let dir = tempfile::tempdir().unwrap();
        let mut counts = BTreeMap::new();
        counts.insert(0u32, [3u64; NUM_LABELS]);
        let mut c = [0u64; NUM_LABELS];
        c[7] = 9;
        counts.insert(2, c);
        let m = WeightMatrix::from_counts(&counts, 1.0).unwrap();
        let r = DensityRanges::new(17, 5).unwrap();
        let p = dir.path().join("bu.csv");
        write_weight_matrix(&p, &m, Some(&r)).unwrap();
        assert!(fs::read_to_string(&p).unwrap().starts_with("# gap=5 bn_max=17\n"));
        let (back, ranges) = read_weight_matrix(&p).unwrap();
        assert_eq!(back, m);
        assert_eq!(ranges, Some(r));
    }

    #[test]
    fn build_landuse_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let m = BuildLanduseMatrix::from_counts([(1, (30, 100)), (4, (0, 50))].into_iter().collect()).unwrap();
        let p = dir.path().join("m.csv");
        write_build_landuse(&p, &m).unwrap();
        assert_eq!(read_build_landuse(&p).unwrap(), m);
    }

    #[test]
    fn short_rows_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        fs::write(&p, "key,a\n1,0.5\n").unwrap();
        assert!(read_weight_matrix(&p).is_err());
    }
}
