use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};
use trimul_core::export::{to_stable_json_pretty, CsvTable};

use crate::Result;

/// A file to be written under the output directory.
#[derive(Clone, Debug)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn json<T: Serialize + ?Sized>(name: &str, value: &T) -> Result<Self> {
        let mut text = to_stable_json_pretty(value)?;
        text.push('\n');
        Ok(Artifact {
            name: name.into(),
            bytes: text.into_bytes(),
        })
    }

    pub fn csv(name: &str, table: &CsvTable) -> Self {
        Artifact {
            name: name.into(),
            bytes: table.render().into_bytes(),
        }
    }

    pub fn digest(&self) -> String {
        digest(&self.bytes)
    }
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes through a sibling temp file and a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, bytes)?;
    if let Err(e) = fs::rename(&tmp, dir.join(name)) {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

/// Serialises `results` to `path` and returns the SHA-256 of the bytes written.
pub fn emit_report<T: Serialize>(results: &T, table: Option<&CsvTable>, format: Format, path: &Path) -> Result<String> {
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidInput, "path has no file name"))?;
    let art = match (format, table) {
        (Format::Json, _) => Artifact::json(name, results)?,
        (Format::Csv, Some(t)) => Artifact::csv(name, t),
        (Format::Csv, None) => {
            return Err(crate::CliError::Usage("csv output needs a table".into()));
        }
    };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    write_atomic(dir, name, &art.bytes)?;
    Ok(art.digest())
}
