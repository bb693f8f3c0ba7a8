//! Writing generated scenes to disk as a manifest plus rasters.

use std::path::{Path, PathBuf};

use lczfuse_core::synth::SynthScene;

use crate::error::Result;
use crate::io::raster::{write_raster, Dtype};
use crate::io::table::write_points;
use crate::manifest::{AcquisitionEntry, BandEntry, OsmEntry, SceneManifest};
use crate::run::RunDir;

pub const SCENE_MANIFEST: &str = "scene.toml";

fn rel(p: &str) -> PathBuf {
    PathBuf::from(p)
}

/// Write `scene` under `run`, returning the path of its manifest.
///
/// Ground truth that a real scene would not have (the building layer
/// before gap injection and the gap rectangles) goes under `truth/`.
pub fn write_synth_scene(run: &mut RunDir, scene: &SynthScene) -> Result<PathBuf> {
    let mut acquisitions = Vec::new();
    for stack in &scene.acquisitions {
        let dir = format!("acq_{}", stack.acquisition_id);
        let mut bands = Vec::new();
        for (name, raster) in stack.bands() {
            let p = format!("{dir}/{name}");
            write_raster(&run.path(&p), raster, Dtype::F32)?;
            run.record(format!("{p}.hdr"), format!("band {name} of acquisition {}", stack.acquisition_id));
            bands.push(BandEntry { name: name.clone(), path: rel(&p) });
        }
        acquisitions.push(AcquisitionEntry {
            satellite: "synthetic".into(),
            date: stack.acquisition_id.clone(),
            id: Some(stack.acquisition_id.clone()),
            bands,
            roles: stack.roles().clone(),
        });
    }
    write_raster(&run.path("osm/landuse"), &scene.osm.landuse, Dtype::F32)?;
    run.record("osm/landuse.hdr", "OSM landuse classes at 5 m, 0 where unmapped");
    write_raster(&run.path("osm/building"), &scene.osm.building, Dtype::F32)?;
    run.record("osm/building.hdr", "OSM building footprints at 5 m, gaps applied");
    write_points(&run.path("osm/points.csv"), &scene.points)?;
    run.record("osm/points.csv", "building centroids, gaps applied");
    write_raster(&run.path("labels"), &scene.labels, Dtype::U8)?;
    run.record("labels.hdr", "ground-truth labels at 100 m, 255 = unlabeled");
    write_raster(&run.path("truth/complete_building"), &scene.complete_building, Dtype::F32)?;
    run.record("truth/complete_building.hdr", "building layer before gap injection");
    let mut gaps = String::from("patch_row,patch_col,rows,cols\n");
    for g in &scene.gaps {
        gaps.push_str(&format!("{},{},{},{}\n", g.row, g.col, g.rows, g.cols));
    }
    run.write_text("truth/gaps.csv", &gaps, "injected building-layer gaps in 100 m patch units")?;

    let manifest = SceneManifest {
        scene_id: scene.id.clone(),
        labels: Some(rel("labels")),
        osm: Some(OsmEntry { landuse: rel("osm/landuse"), building: rel("osm/building"), points: Some(rel("osm/points.csv")) }),
        acquisitions,
        base_dir: run.root().to_path_buf(),
    };
    run.write_text(SCENE_MANIFEST, &manifest.to_toml(), "scene manifest")?;
    Ok(run.path(SCENE_MANIFEST))
}

/// Convenience for tests: write into a fresh directory and finish it.
pub fn write_synth_dir(dir: &Path, scene: &SynthScene) -> Result<PathBuf> {
    let mut run = RunDir::create(dir)?;
    let p = write_synth_scene(&mut run, scene)?;
    run.finish()?;
    Ok(p)
}
