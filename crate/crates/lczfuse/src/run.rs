//! Run directories, config snapshots and the `MANIFEST.txt` index.

use std::fs;
use std::path::{Path, PathBuf};

use lczfuse_core::pipeline::PipelineConfig;

use crate::error::{CliError, Result};

pub const CONFIG_FILE: &str = "config.toml";

pub fn read_config(path: &Path) -> Result<PipelineConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let config: PipelineConfig = toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    config.validate().map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(config)
}

pub fn config_to_toml(config: &PipelineConfig) -> String {
    toml::to_string(config).expect("config is serializable")
}

/// Output directory that remembers what was written to it.
#[derive(Debug)]
pub struct RunDir {
    root: PathBuf,
    entries: Vec<(String, String)>,
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(RunDir { root: root.to_path_buf(), entries: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Note `name` (relative to the root) in the index.
    pub fn record(&mut self, name: impl Into<String>, what: impl Into<String>) {
        self.entries.push((name.into(), what.into()));
    }

    pub fn write_text(&mut self, name: &str, text: &str, what: &str) -> Result<()> {
        let p = self.path(name);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        fs::write(&p, text).map_err(|e| CliError::io(&p, e))?;
        self.record(name, what);
        Ok(())
    }

    pub fn write_config(&mut self, config: &PipelineConfig) -> Result<()> {
        self.write_text(CONFIG_FILE, &config_to_toml(config), "pipeline configuration used for this run")
    }

    /// Write `MANIFEST.txt`: one `<file>\t<description>` line per output.
    pub fn finish(self) -> Result<PathBuf> {
        let mut text = String::new();
        for (name, what) in &self.entries {
            text.push_str(&format!("{name}\t{what}\n"));
        }
        let p = self.root.join("MANIFEST.txt");
        fs::write(&p, text).map_err(|e| CliError::io(&p, e))?;
        Ok(p)
    }
}
