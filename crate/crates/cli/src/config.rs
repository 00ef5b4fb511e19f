//! Optional TOML settings file. Every key mirrors a command-line flag
//! (dashes become underscores); flags win over the file.

use std::path::Path;

use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    // training
    pub split: Option<String>,
    pub loss: Option<String>,
    pub epochs: Option<usize>,
    pub lr: Option<f64>,
    pub patience: Option<usize>,
    pub hidden: Option<String>,
    pub output_activation: Option<String>,
    pub skips: Option<String>,
    pub bins: Option<String>,
    // extraction
    pub variant: Option<String>,
    pub min_sample: Option<usize>,
    pub max_nodes: Option<usize>,
    pub beam_width: Option<usize>,
    pub purity: Option<f64>,
    // induction
    pub criterion: Option<String>,
    pub min_leaf: Option<usize>,
    pub max_depth: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = crate::io::read(path)?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {}", path.display(), e.message())))
    }
}

/// `flag` if given, else the file's value, else `default`.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}
