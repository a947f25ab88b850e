//! Output directory handling and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};

use crate::config::Experiment;

pub const MANIFEST: &str = "run.manifest";

pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)
            .with_context(|| format!("cannot create output directory {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Writes through a temporary file and a rename, so an interrupted run
    /// never leaves a truncated file under the final name.
    pub fn write(&self, name: &str, contents: &str) -> Result<()> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)
                .with_context(|| format!("cannot create {}", parent.display()))?;
        }
        let tmp = path.with_extension("partial-write");
        fs::write(&tmp, contents).with_context(|| format!("cannot write {}", tmp.display()))?;
        fs::rename(&tmp, &path).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(())
    }

    pub fn read(&self, name: &str) -> Option<String> {
        fs::read_to_string(self.path(name)).ok()
    }
}

/// Flat `key=value` record of a run: the resolved configuration, every
/// derived seed and every file the run will produce.
pub struct Manifest {
    pub seeds: Vec<(String, u64)>,
    pub outputs: Vec<String>,
}

impl Manifest {
    fn config_lines(experiment: &Experiment) -> String {
        experiment
            .resolved()
            .iter()
            .map(|(k, v)| format!("config.{k}={v}\n"))
            .collect()
    }

    pub fn render(&self, experiment: &Experiment) -> String {
        let started = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let mut out = format!(
            "tool=simulate\nversion={}\nstarted_unix={started}\n",
            env!("CARGO_PKG_VERSION")
        );
        out.push_str(&Self::config_lines(experiment));
        for (name, seed) in &self.seeds {
            out.push_str(&format!("seed.{name}={seed}\n"));
        }
        for file in &self.outputs {
            out.push_str(&format!("output={file}\n"));
        }
        out
    }

    /// Whether a manifest left in the directory describes the same
    /// experiment, in which case completed pieces of it can be reused.
    pub fn matches_previous(dir: &OutputDir, experiment: &Experiment) -> bool {
        let Some(old) = dir.read(MANIFEST) else {
            return false;
        };
        let old_config: String = old
            .lines()
            .filter(|l| l.starts_with("config."))
            .map(|l| format!("{l}\n"))
            .collect();
        old_config == Self::config_lines(experiment)
    }
}
