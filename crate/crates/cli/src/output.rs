use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use orbitlab_core::report::CheckReport;
use orbitlab_core::{Error, Result};
use serde::ser::{Serialize, SerializeMap, Serializer};

/// Named reports of one command, in run order.
#[derive(Debug, Default)]
pub struct Reports {
    pub items: Vec<(String, CheckReport)>,
    /// CSV files: name and contents.
    pub tables: Vec<(String, Vec<u8>)>,
}

impl Reports {
    pub fn push(&mut self, name: impl Into<String>, report: CheckReport) {
        self.items.push((name.into(), report));
    }

    pub fn all_pass(&self) -> bool {
        self.items.iter().all(|(_, r)| r.is_pass())
    }

    /// One TOML document with a table per report.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Io(e.to_string()))
    }

    /// Prints the combined document, and with `out` also writes
    /// `<name>.toml` per report plus the CSV tables.
    pub fn emit(&self, out: Option<&Path>) -> Result<()> {
        print!("{}", self.to_toml()?);
        if let Some(dir) = out {
            fs::create_dir_all(dir)?;
            for (name, r) in &self.items {
                let text = toml::to_string(r).map_err(|e| Error::Io(e.to_string()))?;
                write_atomic(&dir.join(format!("{name}.toml")), text.as_bytes())?;
            }
            for (name, bytes) in &self.tables {
                write_atomic(&dir.join(name), bytes)?;
            }
        }
        Ok(())
    }
}

impl Serialize for Reports {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.items.len()))?;
        for (k, v) in &self.items {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

/// Writes to a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = PathBuf::from(path);
    tmp.set_extension("tmp");
    let mut f = fs::File::create(&tmp)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    fs::rename(&tmp, path)?;
    Ok(())
}
