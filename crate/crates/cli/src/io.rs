use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use tempfile::NamedTempFile;
use xtrepan::dataset::parse_dataset;
use xtrepan::network::load_network;
use xtrepan::{Dataset, DatasetSchema, DecisionTree, Network};

use crate::error::CliError;

pub fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_dataset(data: &Path, schema: &Path) -> Result<Dataset, CliError> {
    let schema = Arc::new(DatasetSchema::from_toml(&read(schema)?)?);
    Ok(parse_dataset(&read(data)?, &schema)?)
}

pub fn load_net(path: &Path) -> Result<Network, CliError> {
    Ok(load_network(&read(path)?)?)
}

pub fn load_tree(path: &Path) -> Result<DecisionTree, CliError> {
    Ok(DecisionTree::deserialize(&read(path)?)?)
}

/// Writes through a temporary file in the target directory, then renames,
/// so readers never see a half-written file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let fail = |source| CliError::Write {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(fail)?;
    let mut tmp = NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(contents.as_bytes()).map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

/// Writes `name` under `dir` and reports it on stdout.
pub fn emit(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    write_atomic(&path, contents)?;
    println!("wrote {}", path.display());
    Ok(path)
}
