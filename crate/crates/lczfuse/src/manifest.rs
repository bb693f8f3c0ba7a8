//! Scene manifests: a TOML file naming the rasters of one city.
//!
//! ```toml
//! scene_id = "berlin"
//! labels = "labels"            # optional, 100 m raster
//!
//! [osm]                        # optional
//! landuse = "osm/landuse"
//! building = "osm/building"
//! points = "osm/points.csv"    # optional
//!
//! [[acquisitions]]
//! satellite = "sentinel2"
//! date = "2017-06-01"
//! bands = [{ name = "B2", path = "s2/B2" }, { name = "B3", path = "s2/B3" }]
//! roles = { blue = "B2", green = "B3", red = "B4", nir = "B8", swir = "B11" }
//! ```
//!
//! Raster paths name the `.hdr`/`.bin` pair without extension and are
//! relative to the manifest's directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use lczfuse_core::features::{BandRole, BandStack, BuildingPoints, OsmLayers};
use lczfuse_core::pipeline::Scene;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result, WithPath};
use crate::io::raster::{raster_exists, raster_paths, read_raster};
use crate::io::table::read_points;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandEntry {
    pub name: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcquisitionEntry {
    pub satellite: String,
    pub date: String,
    /// Defaults to `<satellite>_<date>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub bands: Vec<BandEntry>,
    pub roles: BTreeMap<BandRole, String>,
}

impl AcquisitionEntry {
    pub fn acquisition_id(&self) -> String {
        self.id.clone().unwrap_or_else(|| format!("{}_{}", self.satellite, self.date))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OsmEntry {
    pub landuse: PathBuf,
    pub building: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneManifest {
    pub scene_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub osm: Option<OsmEntry>,
    pub acquisitions: Vec<AcquisitionEntry>,
    /// Directory relative paths resolve against; not serialized.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl SceneManifest {
    /// Parse `path` and check that every referenced file exists.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut m: SceneManifest = toml::from_str(&text).map_err(|e| CliError::data(path, e.to_string()))?;
        m.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        m.check(path)?;
        Ok(m)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest fields are all serializable")
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn check(&self, path: &Path) -> Result<()> {
        if self.acquisitions.is_empty() {
            return Err(CliError::data(path, "manifest lists no acquisitions"));
        }
        let raster = |p: &Path| -> Result<()> {
            let full = self.resolve(p);
            if raster_exists(&full) {
                Ok(())
            } else {
                Err(CliError::data(raster_paths(&full).0, "referenced raster not found"))
            }
        };
        for acq in &self.acquisitions {
            if acq.bands.is_empty() {
                return Err(CliError::data(path, format!("acquisition {} has no bands", acq.acquisition_id())));
            }
            for b in &acq.bands {
                raster(&b.path)?;
            }
            for (role, band) in &acq.roles {
                if !acq.bands.iter().any(|b| &b.name == band) {
                    return Err(CliError::data(path, format!("role {role} names unknown band {band}")));
                }
            }
        }
        if let Some(l) = &self.labels {
            raster(l)?;
        }
        if let Some(osm) = &self.osm {
            raster(&osm.landuse)?;
            raster(&osm.building)?;
            if let Some(p) = &osm.points {
                let full = self.resolve(p);
                if !full.is_file() {
                    return Err(CliError::data(full, "referenced points file not found"));
                }
            }
        }
        Ok(())
    }

    /// Read every referenced file into a scene.
    pub fn load_scene(&self) -> Result<Scene> {
        let mut acquisitions = Vec::with_capacity(self.acquisitions.len());
        for acq in &self.acquisitions {
            let mut bands = Vec::with_capacity(acq.bands.len());
            for b in &acq.bands {
                bands.push((b.name.clone(), read_raster(&self.resolve(&b.path))?));
            }
            let first = raster_paths(&self.resolve(&acq.bands[0].path)).0;
            acquisitions.push(BandStack::new(acq.acquisition_id(), bands, acq.roles.clone()).at(&first)?);
        }
        let (osm, points) = match &self.osm {
            Some(o) => {
                let layers = OsmLayers { landuse: read_raster(&self.resolve(&o.landuse))?, building: read_raster(&self.resolve(&o.building))? };
                let points = match &o.points {
                    Some(p) => {
                        let (h, w) = acquisitions[0].first().extent_m();
                        let (pts, _dropped) = BuildingPoints::ingest(read_points(&self.resolve(p))?, h, w);
                        Some(pts)
                    }
                    None => None,
                };
                (Some(layers), points)
            }
            None => (None, None),
        };
        let labels = self.labels.as_ref().map(|l| read_raster(&self.resolve(l))).transpose()?;
        Ok(Scene { id: self.scene_id.clone(), acquisitions, osm, points, labels })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = r#"
scene_id = "c"
labels = "labels"

[osm]
landuse = "lu"
building = "b"

[[acquisitions]]
satellite = "s2"
date = "2017"
bands = [{ name = "B3", path = "g" }]
roles = { green = "B3", red = "B3", nir = "B3" }
"#;

    #[test]
    fn parses_and_reports_missing_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.toml");
        fs::write(&p, TEXT).unwrap();
        let err = SceneManifest::load(&p).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("g.hdr"), "{err}");
        let m: SceneManifest = toml::from_str(TEXT).unwrap();
        assert_eq!(m.acquisitions[0].acquisition_id(), "s2_2017");
        assert_eq!(m.acquisitions[0].roles[&BandRole::Nir], "B3");
        let again: SceneManifest = toml::from_str(&m.to_toml()).unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<SceneManifest>(&TEXT.replace("scene_id", "scene")).is_err());
    }
}
