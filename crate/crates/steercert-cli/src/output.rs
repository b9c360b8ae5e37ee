//! Output helpers: deterministic CSV/JSON emission under the configured
//! output directory. Floats go through Rust's shortest-roundtrip formatting,
//! so identical runs produce byte-identical files.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

pub fn ensure_out_dir(dir: &str) -> Result<PathBuf, CliError> {
    let path = PathBuf::from(dir);
    std::fs::create_dir_all(&path)
        .map_err(|e| CliError::Io(format!("creating {}: {e}", path.display())))?;
    Ok(path)
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Serializes a payload wrapped with a schema-version field.
pub fn write_json<T: Serialize>(path: &Path, payload: &T) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct Envelope<'a, T> {
        schema_version: u32,
        #[serde(flatten)]
        payload: &'a T,
    }
    let doc = serde_json::to_string_pretty(&Envelope {
        schema_version: SCHEMA_VERSION,
        payload,
    })
    .map_err(|e| CliError::Internal(format!("serializing {}: {e}", path.display())))?;
    write_file(path, &(doc + "\n"))
}

/// Formats a float with Rust's default shortest-roundtrip representation.
pub fn fmt(x: f64) -> String {
    format!("{x}")
}
