//! Run manifests: the resolved configuration plus a content hash of every
//! input file, enough to reproduce a run byte for byte. No timestamps or
//! host details, so a rerun writes an identical manifest.

use std::path::Path;

use imuda_core::error::{Error, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Serialize)]
struct InputRecord {
    label: String,
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<C: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: String,
    config: C,
    inputs: Vec<InputRecord>,
}

fn sha256_hex(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Write `<manifest_path>` describing a run of `command` with the given
/// resolved config and input files.
pub fn write_manifest<C: Serialize>(
    manifest_path: impl AsRef<Path>,
    command: &str,
    config: &C,
    inputs: &[(&str, &Path)],
) -> Result<()> {
    let records = inputs
        .iter()
        .map(|(label, path)| {
            Ok(InputRecord {
                label: (*label).to_string(),
                path: path.display().to_string(),
                sha256: sha256_hex(path)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        tool: "imuda",
        version: env!("CARGO_PKG_VERSION"),
        command: command.to_string(),
        config,
        inputs: records,
    };
    let text = toml::to_string(&manifest)
        .map_err(|e| Error::Format(format!("cannot render manifest: {e}")))?;
    std::fs::write(manifest_path, text)?;
    Ok(())
}
