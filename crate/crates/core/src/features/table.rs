use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lcz::Label;
use crate::raster::{PatchGrid, Raster};

/// Per-patch feature rows in row-major patch order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    feature_names: Vec<String>,
    values: Vec<f64>,
    coords: Vec<(usize, usize)>,
    labels: Vec<Option<Label>>,
    grid_dims: (usize, usize),
}

impl FeatureTable {
    pub fn new(feature_names: Vec<String>, grid_dims: (usize, usize)) -> Self {
        FeatureTable { feature_names, values: Vec::new(), coords: Vec::new(), labels: Vec::new(), grid_dims }
    }

    pub fn push_row(&mut self, coord: (usize, usize), row: &[f64], label: Option<Label>) -> Result<()> {
        if row.len() != self.feature_names.len() {
            return Err(Error::FeatureMismatch { expected: self.feature_names.len(), found: row.len() });
        }
        self.values.extend_from_slice(row);
        self.coords.push(coord);
        self.labels.push(label);
        Ok(())
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_rows(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Patch grid shape `(rows, cols)` the coordinates refer to.
    pub fn grid_dims(&self) -> (usize, usize) {
        self.grid_dims
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.n_features();
        &self.values[i * p..(i + 1) * p]
    }

    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.values[row * self.n_features() + feature]
    }

    pub fn set_value(&mut self, row: usize, feature: usize, v: f64) {
        let p = self.n_features();
        self.values[row * p + feature] = v;
    }

    pub fn coord(&self, i: usize) -> (usize, usize) {
        self.coords[i]
    }

    pub fn coords(&self) -> &[(usize, usize)] {
        &self.coords
    }

    pub fn label(&self, i: usize) -> Option<Label> {
        self.labels[i]
    }

    pub fn labels(&self) -> &[Option<Label>] {
        &self.labels
    }

    pub fn column(&self, feature: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_rows()).map(move |i| self.value(i, feature))
    }

    pub fn row_is_finite(&self, i: usize) -> bool {
        self.row(i).iter().all(|v| v.is_finite())
    }

    /// Attach labels from a 100 m label raster aligned with the patch grid.
    pub fn set_labels(&mut self, labels: &Raster) -> Result<()> {
        if labels.dims() != self.grid_dims {
            return Err(Error::DimensionMismatch { expected: self.grid_dims, found: labels.dims() });
        }
        for (label, &(i, j)) in self.labels.iter_mut().zip(&self.coords) {
            *label = Label::from_value(labels.get(i, j));
        }
        Ok(())
    }

    /// Rows with a label and only finite features.
    pub fn labeled_subset(&self) -> FeatureTable {
        self.filter(|t, i| t.labels[i].is_some() && t.row_is_finite(i))
    }

    pub fn filter(&self, mut keep: impl FnMut(&FeatureTable, usize) -> bool) -> FeatureTable {
        let idx: Vec<usize> = (0..self.n_rows()).filter(|&i| keep(self, i)).collect();
        self.select(&idx)
    }

    pub fn select(&self, rows: &[usize]) -> FeatureTable {
        let mut out = FeatureTable::new(self.feature_names.clone(), self.grid_dims);
        for &i in rows {
            out.values.extend_from_slice(self.row(i));
            out.coords.push(self.coords[i]);
            out.labels.push(self.labels[i]);
        }
        out
    }

    /// Append all rows of `other`, which must carry the same features.
    pub fn extend(&mut self, other: &FeatureTable) -> Result<()> {
        if other.feature_names != self.feature_names {
            return Err(Error::FeatureMismatch { expected: self.n_features(), found: other.n_features() });
        }
        self.values.extend_from_slice(&other.values);
        self.coords.extend_from_slice(&other.coords);
        self.labels.extend_from_slice(&other.labels);
        Ok(())
    }

    /// Append a feature column.
    pub fn push_column(&mut self, name: String, column: &[f64]) -> Result<()> {
        if column.len() != self.n_rows() {
            return Err(Error::DimensionMismatch { expected: (self.n_rows(), 1), found: (column.len(), 1) });
        }
        let p = self.n_features();
        let mut values = Vec::with_capacity(self.values.len() + column.len());
        for (i, &c) in column.iter().enumerate() {
            values.extend_from_slice(&self.values[i * p..(i + 1) * p]);
            values.push(c);
        }
        self.values = values;
        self.feature_names.push(name);
        Ok(())
    }
}

/// Building centroid coordinates in meters, origin at the top-left scene
/// corner, `y` growing downwards.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BuildingPoints {
    pub points: Vec<(f64, f64)>,
}

impl BuildingPoints {
    /// Keep points inside `[0, width_m) × [0, height_m)`; returns the number dropped.
    pub fn ingest(points: Vec<(f64, f64)>, height_m: f64, width_m: f64) -> (Self, usize) {
        let n = points.len();
        let points: Vec<_> = points
            .into_iter()
            .filter(|&(x, y)| x.is_finite() && y.is_finite() && x >= 0.0 && y >= 0.0 && x < width_m && y < height_m)
            .collect();
        let dropped = n - points.len();
        (BuildingPoints { points }, dropped)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Number of building centroids per patch. Patch edges are left/top
/// inclusive; points beyond the grid are ignored.
pub fn building_density(points: &BuildingPoints, grid: &PatchGrid) -> Raster {
    let mut out = grid.output(0.0, f32::NAN);
    let size = grid.patch_size_m;
    for &(x, y) in &points.points {
        if x < 0.0 || y < 0.0 {
            continue;
        }
        let (i, j) = ((y / size) as usize, (x / size) as usize);
        if i < grid.patch_rows && j < grid.patch_cols {
            let v = out.get(i, j);
            out.set(i, j, v + 1.0);
        }
    }
    out
}
