//! Run manifests: one JSON sidecar per invocation, carrying everything
//! needed to reproduce the run bit for bit.

use crate::CliError;
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oc_params: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub side: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ats0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub smoothing: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            tool: "btbe",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            family: None,
            params: None,
            oc_params: None,
            side: None,
            alpha: None,
            ats0: None,
            smoothing: None,
            seed: None,
            reps: None,
            count: None,
            scale: None,
            threads: None,
            input: None,
            output: None,
            batch: None,
            method: None,
        }
    }

    /// Write the manifest next to the output file (`<out>.manifest.json`)
    /// or, without an output path, to `btbe-<command>-manifest.json` in the
    /// working directory. An explicit path wins over both.
    pub fn write(
        &self,
        explicit: Option<&Path>,
        output: Option<&Path>,
    ) -> Result<PathBuf, CliError> {
        let path = match (explicit, output) {
            (Some(p), _) => p.to_path_buf(),
            (None, Some(out)) => {
                let mut name = out.as_os_str().to_owned();
                name.push(".manifest.json");
                PathBuf::from(name)
            }
            (None, None) => PathBuf::from(format!("btbe-{}-manifest.json", self.command)),
        };
        let body = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Data(format!("manifest serialization failed: {e}")))?;
        std::fs::write(&path, body + "\n")
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}
