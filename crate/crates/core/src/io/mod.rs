//! File formats, city bundles and synthetic city generation.

pub mod ascii_grid;
pub mod bundle;
pub mod network;
pub mod pgm;
pub(crate) mod table;

use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}
