//! Run manifests: enough to reproduce a command's output exactly.

use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub args: Vec<String>,
    pub config: Value,
    pub seeds: Vec<u64>,
    /// Command-specific results such as moments or KS distances.
    pub results: Value,
}

impl Manifest {
    pub fn new(command: &str, config: Value) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            args: std::env::args().collect(),
            config,
            seeds: Vec::new(),
            results: Value::Null,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }
}

/// Manifest location for an output path: `out.csv` gets `out.csv.manifest.json`.
pub fn manifest_path(out: &Path) -> std::path::PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    s.into()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_json_fields() {
        let mut m = Manifest::new("coeffs", serde_json::json!({"k": 3}));
        m.seeds.push(7);
        let v: Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
        assert_eq!(v["command"], "coeffs");
        assert_eq!(v["config"]["k"], 3);
        assert_eq!(v["seeds"][0], 7);
        assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    }

    #[test]
    fn manifest_path_appends_suffix() {
        assert_eq!(manifest_path(Path::new("a/b.csv")), Path::new("a/b.csv.manifest.json"));
    }
}
