//! Feature tables and building points as CSV.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use lczfuse_core::features::{BuildingPoints, FeatureTable};
use lczfuse_core::Label;

use crate::error::{CliError, Result};

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::data(path, e.to_string())
}

/// `patch_i,patch_j,label,<features...>`, preceded by a `# grid=rows,cols`
/// comment so the table's grid survives a round trip.
pub fn write_feature_table(path: &Path, table: &FeatureTable) -> Result<()> {
    let mut file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let (r, c) = table.grid_dims();
    writeln!(file, "# grid={r},{c}").map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let mut header = vec!["patch_i".to_string(), "patch_j".into(), "label".into()];
    header.extend(table.feature_names().iter().cloned());
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for i in 0..table.n_rows() {
        let (pi, pj) = table.coord(i);
        let mut rec = vec![pi.to_string(), pj.to_string(), table.label(i).map(|l| l.get().to_string()).unwrap_or_default()];
        rec.extend(table.row(i).iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn grid_comment(path: &Path) -> Result<Option<(usize, usize)>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut first = String::new();
    BufReader::new(file).read_line(&mut first).map_err(|e| CliError::io(path, e))?;
    let Some(rest) = first.trim().strip_prefix("# grid=") else { return Ok(None) };
    let parsed = rest.split_once(',').and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)));
    parsed.map(Some).ok_or_else(|| CliError::data(path, "bad grid comment"))
}

pub fn read_feature_table(path: &Path) -> Result<FeatureTable> {
    let grid = grid_comment(path)?;
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).map_err(|e| csv_err(path, e))?;
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.len() < 3 || &header[0] != "patch_i" || &header[1] != "patch_j" || &header[2] != "label" {
        return Err(CliError::data(path, "header must start with patch_i,patch_j,label"));
    }
    let names: Vec<String> = header.iter().skip(3).map(String::from).collect();
    let mut rows = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let bad = |what: &str| CliError::data(path, format!("row {}: bad {what}", n + 1));
        let pi: usize = rec[0].trim().parse().map_err(|_| bad("patch_i"))?;
        let pj: usize = rec[1].trim().parse().map_err(|_| bad("patch_j"))?;
        let label = match rec[2].trim() {
            "" => None,
            s => Some(s.parse::<u8>().ok().and_then(Label::new).ok_or_else(|| bad("label"))?),
        };
        let values: Vec<f64> = rec.iter().skip(3).map(|v| v.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad("feature value"))?;
        rows.push(((pi, pj), values, label));
    }
    let dims = grid.unwrap_or_else(|| {
        let r = rows.iter().map(|r| r.0 .0 + 1).max().unwrap_or(0);
        let c = rows.iter().map(|r| r.0 .1 + 1).max().unwrap_or(0);
        (r, c)
    });
    let mut table = FeatureTable::new(names, dims);
    for (coord, values, label) in rows {
        table.push_row(coord, &values, label).map_err(|e| CliError::data(path, e.to_string()))?;
    }
    Ok(table)
}

/// Centroids as `x_m,y_m`.
pub fn read_points(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).map_err(|e| csv_err(path, e))?;
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.len() != 2 || &header[0] != "x_m" || &header[1] != "y_m" {
        return Err(CliError::data(path, "header must be x_m,y_m"));
    }
    let mut out = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let x = rec[0].trim().parse().map_err(|_| CliError::data(path, format!("row {}: bad x_m", n + 1)))?;
        let y = rec[1].trim().parse().map_err(|_| CliError::data(path, format!("row {}: bad y_m", n + 1)))?;
        out.push((x, y));
    }
    Ok(out)
}

pub fn write_points(path: &Path, points: &BuildingPoints) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["x_m", "y_m"]).map_err(|e| csv_err(path, e))?;
    for &(x, y) in &points.points {
        w.write_record([x.to_string(), y.to_string()]).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}
