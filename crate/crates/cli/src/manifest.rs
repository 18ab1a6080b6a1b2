use std::fs;
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use serde::Serialize;

pub const SCHEMA: &str = "v1";

/// Sidecar describing how an output file was produced.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a, C: Serialize> {
    pub schema: &'static str,
    pub subcommand: &'a str,
    pub config: &'a C,
    pub version: String,
    pub seed: Option<u64>,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<String>,
}

pub fn version() -> String {
    match option_env!("QCNN_PLATEAU_DESCRIBE") {
        Some(describe) => describe.to_string(),
        None => format!("v{}", env!("CARGO_PKG_VERSION")),
    }
}

pub fn timestamp(t: SystemTime) -> String {
    humantime::format_rfc3339_millis(t).to_string()
}

/// `results.csv` -> `results.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

pub fn write_manifest<C: Serialize>(
    out: &Path,
    subcommand: &str,
    config: &C,
    seed: Option<u64>,
    started: SystemTime,
) -> std::io::Result<PathBuf> {
    let manifest = RunManifest {
        schema: SCHEMA,
        subcommand,
        config,
        version: version(),
        seed,
        started_at: timestamp(started),
        finished_at: timestamp(SystemTime::now()),
        outputs: vec![out.display().to_string()],
    };
    let path = manifest_path(out);
    let text = serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)?;
    fs::write(&path, text + "\n")?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_shares_the_basename() {
        assert_eq!(manifest_path(Path::new("a/run.csv")), PathBuf::from("a/run.manifest.json"));
        assert_eq!(manifest_path(Path::new("run")), PathBuf::from("run.manifest.json"));
    }
}
