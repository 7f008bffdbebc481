//! Optional TOML run configuration. Every key is optional; command-line
//! flags take precedence over the file, and the file over built-in defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub corpus: Option<PathBuf>,
    pub lexicons: Option<PathBuf>,
    pub words: Option<PathBuf>,
    pub alpha: Option<f64>,
    pub dedup_threshold: Option<f64>,
    /// Comma-separated `lexicon:category` list.
    pub roster: Option<String>,
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub lambda: Option<f64>,
    pub tolerance: Option<f64>,
    pub max_iterations: Option<usize>,
    pub micrownop_margin: Option<f64>,
    pub sentiwordnet_margin: Option<f64>,
    pub min_agreement: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Flag value, else file value, else `what` is missing.
pub fn required<T: Clone>(flag: &Option<T>, file: &Option<T>, what: &str) -> Result<T> {
    match flag.clone().or_else(|| file.clone()) {
        Some(v) => Ok(v),
        None => bail!("missing {what}: pass the flag or set it in the config file"),
    }
}

pub fn existing(path: PathBuf, what: &str) -> Result<PathBuf> {
    if !path.exists() {
        bail!("{what} {} does not exist", path.display());
    }
    Ok(path)
}

pub fn check_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        bail!("alpha must lie in (0, 1), got {alpha}");
    }
    Ok(alpha)
}
