//! Command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lczfuse_core::mask::{default_thresholds, plateau};
use lczfuse_core::pipeline::{self, Classification, FusionMode, PipelineConfig, Scene, TrainedModels};
use lczfuse_core::postprocess::{evaluate, LabelMap};
use lczfuse_core::synth::{generate, SynthSpec};

use crate::error::{CliError, Result, WithPath};
use crate::io::matrix::{read_build_landuse, read_weight_matrix, write_build_landuse, write_weight_matrix};
use crate::io::model::{read_model, write_model};
use crate::io::raster::{raster_exists, raster_paths, read_raster, write_raster, Dtype};
use crate::io::report::{self, write_palette};
use crate::manifest::SceneManifest;
use crate::run::{read_config, RunDir, CONFIG_FILE};
use crate::synth_io::write_synth_scene;

pub const MODEL_FILE: &str = "ccf_model.txt";
pub const LANDUSE_FILE: &str = "landuse_matrix.csv";
pub const BUILDING_FILE: &str = "building_matrix.csv";
pub const BUILD_LANDUSE_FILE: &str = "build_landuse.csv";

#[derive(Debug, Parser)]
#[command(name = "lczfuse", version, about = "LCZ classification with OSM decision fusion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    None,
    Landuse,
    Building,
    Both,
}

impl From<ModeArg> for FusionMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::None => FusionMode::None,
            ModeArg::Landuse => FusionMode::Landuse,
            ModeArg::Building => FusionMode::Building,
            ModeArg::Both => FusionMode::Both,
        }
    }
}

/// Flags shared by the commands that run the pipeline.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Pipeline configuration (TOML); defaults apply to missing keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub fusion_mode: Option<ModeArg>,
    /// Stack OSM features into the forest instead of fusing decisions.
    #[arg(long)]
    pub baseline: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

impl Common {
    fn apply(&self, mut config: PipelineConfig) -> Result<PipelineConfig> {
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if let Some(m) = self.fusion_mode {
            config.fusion_mode = m.into();
        }
        if self.baseline {
            config.baseline = true;
        }
        config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(config)
    }

    fn config(&self) -> Result<PipelineConfig> {
        let base = match &self.config {
            Some(p) => read_config(p)?,
            None => PipelineConfig::default(),
        };
        self.apply(base)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the forest and the fusion models from labelled scenes.
    Train {
        /// Scene manifest; repeat for several cities.
        #[arg(long = "manifest", required = true)]
        manifests: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Classify one scene with trained artifacts.
    Classify {
        #[arg(long)]
        manifest: PathBuf,
        /// Directory written by `train`.
        #[arg(long)]
        artifacts: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Score a label map against ground truth.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Generate a synthetic scene.
    Synth {
        /// Generator spec (TOML); the default city when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "synthetic")]
        id: String,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Permutation importance of the stacked features under cross-validation.
    Importance {
        #[arg(long = "manifest", required = true)]
        manifests: Vec<PathBuf>,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Sweep the surface fraction threshold of the confidence mask.
    MaskSensitivity {
        #[arg(long = "manifest", required = true)]
        manifests: Vec<PathBuf>,
        /// Largest correlation spread still counted as a plateau.
        #[arg(long, default_value_t = 0.05)]
        tolerance: f64,
        #[command(flatten)]
        common: Common,
    },
}

fn load_scenes(paths: &[PathBuf]) -> Result<Vec<Scene>> {
    paths.iter().map(|p| SceneManifest::load(p)?.load_scene()).collect()
}

fn core_at<T>(r: lczfuse_core::Result<T>, what: &str) -> Result<T> {
    r.map_err(|e| match e {
        lczfuse_core::Error::Numerical(_) => CliError::Core(e),
        lczfuse_core::Error::InvalidParameter(m) => CliError::Usage(format!("{what}: {m}")),
        e => CliError::Data { path: PathBuf::from(what), msg: e.to_string() },
    })
}

pub fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Train { manifests, common } => cmd_train(&manifests, &common),
        Command::Classify { manifest, artifacts, common } => cmd_classify(&manifest, &artifacts, &common),
        Command::Evaluate { pred, truth, out_dir } => cmd_evaluate(&pred, &truth, &out_dir),
        Command::Synth { spec, seed, id, out_dir } => cmd_synth(spec.as_deref(), seed, &id, &out_dir),
        Command::Importance { manifests, folds, common } => cmd_importance(&manifests, folds, &common),
        Command::MaskSensitivity { manifests, tolerance, common } => cmd_mask_sensitivity(&manifests, tolerance, &common),
    }
}

pub fn cmd_train(manifests: &[PathBuf], common: &Common) -> Result<String> {
    let config = common.config()?;
    let scenes = load_scenes(manifests)?;
    if let Some((path, _)) = manifests.iter().zip(&scenes).find(|(_, s)| s.labels.is_none()) {
        return Err(CliError::data(path, "manifest has no labels; training needs labelled scenes"));
    }
    let t = Instant::now();
    let models = core_at(pipeline::train(&scenes, &config), "training")?;
    let mut run = RunDir::create(&common.out_dir)?;
    save_models(&mut run, &models)?;
    run.write_config(&config)?;
    run.finish()?;
    Ok(format!(
        "trained {} trees on {} scene(s) in {:.1}s; artifacts in {}",
        models.ccf.n_trees(),
        scenes.len(),
        t.elapsed().as_secs_f64(),
        common.out_dir.display()
    ))
}

fn save_models(run: &mut RunDir, m: &TrainedModels) -> Result<()> {
    write_model(&run.path(MODEL_FILE), &m.ccf)?;
    run.record(MODEL_FILE, "canonical correlation forest");
    if let Some(lu) = &m.landuse {
        write_weight_matrix(&run.path(LANDUSE_FILE), lu, None)?;
        run.record(LANDUSE_FILE, "landuse weight matrix, P(label | landuse class)");
    }
    if let Some(bu) = &m.building {
        write_weight_matrix(&run.path(BUILDING_FILE), bu, m.ranges.as_ref())?;
        run.record(BUILDING_FILE, "building weight matrix, P(label | density range)");
    }
    if let Some(bl) = &m.build_landuse {
        write_build_landuse(&run.path(BUILD_LANDUSE_FILE), bl)?;
        run.record(BUILD_LANDUSE_FILE, "building pixel counts per landuse class");
    }
    Ok(())
}

/// Load what `train` wrote; matrices are optional.
pub fn load_models(dir: &Path, config: PipelineConfig) -> Result<TrainedModels> {
    let ccf = read_model(&dir.join(MODEL_FILE))?;
    let opt = |name: &str| {
        let p = dir.join(name);
        p.is_file().then_some(p)
    };
    let landuse = opt(LANDUSE_FILE).map(|p| read_weight_matrix(&p)).transpose()?.map(|(m, _)| m);
    let (building, ranges) = match opt(BUILDING_FILE) {
        Some(p) => {
            let (m, r) = read_weight_matrix(&p)?;
            let r = r.ok_or_else(|| CliError::data(&p, "building matrix lacks the '# gap=… bn_max=…' line"))?;
            (Some(m), Some(r))
        }
        None => (None, None),
    };
    let build_landuse = opt(BUILD_LANDUSE_FILE).map(|p| read_build_landuse(&p)).transpose()?;
    Ok(TrainedModels { config, ccf, landuse, building, ranges, build_landuse })
}

pub fn cmd_classify(manifest: &Path, artifacts: &Path, common: &Common) -> Result<String> {
    let t0 = Instant::now();
    let trained = read_config(&artifacts.join(CONFIG_FILE))?;
    let base = match &common.config {
        Some(p) => read_config(p)?,
        None => trained.clone(),
    };
    let config = common.apply(base)?;
    if config.baseline != trained.baseline {
        return Err(CliError::Usage("--baseline must match how the artifacts were trained".into()));
    }
    let models = load_models(artifacts, config.clone())?;
    let scene = SceneManifest::load(manifest)?.load_scene()?;
    let t_load = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let result = core_at(pipeline::classify(&scene, &models), "classification")?;
    let t_classify = t1.elapsed().as_secs_f64();

    let t2 = Instant::now();
    let mut run = RunDir::create(&common.out_dir)?;
    write_raster(&run.path("fused"), result.fused.raster(), Dtype::U8)?;
    run.record("fused.hdr", "final label map after majority voting over acquisitions");
    for (id, map) in &result.per_acquisition {
        let name = format!("maps/{id}");
        write_raster(&run.path(&name), map.raster(), Dtype::U8)?;
        run.record(format!("{name}.hdr"), format!("label map of acquisition {id}"));
    }
    if let Some(mask) = &result.mask {
        write_raster(&run.path("mask"), mask, Dtype::U8)?;
        run.record("mask.hdr", "building confidence mask, 1 = confident");
    }
    write_palette(&run.path("palette.rgb"))?;
    run.record("palette.rgb", "17 RGB triples, label 1 first");
    let mut summary = format!("classified {} acquisition(s) of {} with fusion mode {}", result.per_acquisition.len(), scene.id, result.mode.as_str());
    if let Some(truth) = &scene.labels {
        let grid = core_at(scene.grid(), "scene")?;
        let truth = LabelMap::from_raster(&core_at(truth.crop(grid.patch_rows, grid.patch_cols), "labels")?).at(manifest)?;
        let cm = core_at(evaluate(&result.fused, &truth), "evaluation")?;
        report::write_confusion(&run.path("confusion.csv"), &cm)?;
        run.record("confusion.csv", "confusion matrix of the fused map against the manifest labels");
        report::write_metrics(&run.path("metrics.txt"), &cm)?;
        run.record("metrics.txt", "OA, kappa and producer accuracies");
        summary.push_str(&format!("; oa={:.4} kappa={:.4}", cm.oa(), cm.kappa()));
    }
    let t_write = t2.elapsed().as_secs_f64();
    run.write_text("report.txt", &run_report(&result, t_load, t_classify, t_write), "timings and coverage statistics")?;
    run.write_config(&config)?;
    run.finish()?;
    Ok(summary)
}

fn run_report(r: &Classification, t_load: f64, t_classify: f64, t_write: f64) -> String {
    let mut s = format!("fusion_mode={}\n", r.mode.as_str());
    s.push_str(&format!("acquisitions={}\n", r.per_acquisition.len()));
    s.push_str(&format!("time_load_s={t_load:.3}\ntime_classify_s={t_classify:.3}\ntime_write_s={t_write:.3}\n"));
    match r.masked_fraction {
        Some(f) => s.push_str(&format!("masked_patch_fraction={f:.4}\n")),
        None => s.push_str("masked_patch_fraction=n/a\n"),
    }
    for ((id, _), u) in r.per_acquisition.iter().zip(&r.unclassified_fraction) {
        s.push_str(&format!("unclassified_fraction[{id}]={u:.4}\n"));
    }
    s.push_str(&format!("fused_valid_fraction={:.4}\n", r.fused.valid_fraction()));
    s
}

pub fn cmd_evaluate(pred: &Path, truth: &Path, out_dir: &Path) -> Result<String> {
    let load = |p: &Path| -> Result<LabelMap> {
        if !raster_exists(p) {
            return Err(CliError::data(raster_paths(p).0, "raster not found"));
        }
        LabelMap::from_raster(&read_raster(p)?).at(&raster_paths(p).0)
    };
    let (p, t) = (load(pred)?, load(truth)?);
    let cm = evaluate(&p, &t).map_err(|e| match e {
        lczfuse_core::Error::DimensionMismatch { .. } => CliError::data(pred, e.to_string()),
        e => CliError::data(truth, e.to_string()),
    })?;
    let mut run = RunDir::create(out_dir)?;
    report::write_confusion(&run.path("confusion.csv"), &cm)?;
    run.record("confusion.csv", "counts, rows = truth, columns = prediction");
    let metrics = report::metrics_text(&cm);
    run.write_text("metrics.txt", &metrics, "OA, kappa and producer accuracies")?;
    run.write_text("pa_distribution.txt", &cm.pretty_percentages(10.0), "row percentages, cells below 10% hidden")?;
    run.finish()?;
    Ok(metrics.lines().take(2).collect::<Vec<_>>().join(" "))
}

pub fn cmd_synth(spec: Option<&Path>, seed: u64, id: &str, out_dir: &Path) -> Result<String> {
    let spec: SynthSpec = match spec {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            toml::from_str(&text).map_err(|e| CliError::data(p, e.to_string()))?
        }
        None => SynthSpec::default(),
    };
    let scene = generate(&spec, id, seed).map_err(|e| CliError::Usage(format!("synthetic spec: {e}")))?;
    let mut run = RunDir::create(out_dir)?;
    let manifest = write_synth_scene(&mut run, &scene)?;
    run.write_text("synth_spec.toml", &toml::to_string(&spec).expect("spec is serializable"), "generator spec")?;
    run.write_text("seed.txt", &format!("{seed}\n"), "generator seed")?;
    run.finish()?;
    let (h, w) = scene.labels.dims();
    Ok(format!("wrote {h}x{w}-patch scene {id} with {} gap(s); manifest {}", scene.gaps.len(), manifest.display()))
}

pub fn cmd_importance(manifests: &[PathBuf], folds: usize, common: &Common) -> Result<String> {
    let config = common.config()?;
    let scenes = load_scenes(manifests)?;
    let ranked = core_at(pipeline::stacked_importance(&scenes, &config, folds), "importance")?;
    let mut run = RunDir::create(&common.out_dir)?;
    run.write_text("importance.csv", &report::importance_csv(&ranked), "features ranked by permutation importance")?;
    run.write_text("importance.txt", &report::importance_bars(&ranked, 40), "text bar chart of importance.csv")?;
    run.write_config(&config)?;
    run.finish()?;
    let top = ranked.first().map(|f| f.feature.as_str()).unwrap_or("-");
    Ok(format!("ranked {} features over {folds} folds; top: {top}", ranked.len()))
}

pub fn cmd_mask_sensitivity(manifests: &[PathBuf], tolerance: f64, common: &Common) -> Result<String> {
    let config = common.config()?;
    let scenes = load_scenes(manifests)?;
    let curve = core_at(pipeline::mask_sensitivity(&scenes, &config, &default_thresholds()), "mask sensitivity")?;
    let summary = match plateau(&curve, tolerance) {
        Some((a, b)) => format!(
            "plateau from {:.0}% to {:.0}% (width {:.0} points, spread < {tolerance})",
            a * 100.0,
            b * 100.0,
            (b - a) * 100.0
        ),
        None => "no plateau: correlation undefined at every threshold".to_string(),
    };
    let mut run = RunDir::create(&common.out_dir)?;
    run.write_text("curves.csv", &report::curves_csv(&curve), "correlation against quasi-truth and all-pass matrices")?;
    run.write_text("summary.txt", &format!("{summary}\n"), "plateau of the quasi-truth curve")?;
    run.write_config(&config)?;
    run.finish()?;
    Ok(summary)
}
