use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;

/// Provenance record written next to every file output as
/// `<output>.manifest.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub config: Vec<PathBuf>,
    pub command: String,
    pub options: serde_json::Value,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub outputs: Vec<PathBuf>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn new(
        command: &str,
        config: Vec<PathBuf>,
        options: &impl Serialize,
        seed: Option<u64>,
    ) -> Self {
        RunManifest {
            config,
            command: command.to_string(),
            options: serde_json::to_value(options).unwrap_or(serde_json::Value::Null),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: Vec::new(),
            wall_clock_seconds: 0.0,
        }
    }

    pub fn path_for(output: &Path) -> PathBuf {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }

    /// Writes the manifest next to the first output.
    pub fn write(mut self, elapsed: Duration) -> std::io::Result<()> {
        let Some(first) = self.outputs.first() else {
            return Ok(());
        };
        let path = Self::path_for(first);
        self.wall_clock_seconds = elapsed.as_secs_f64();
        let mut text = serde_json::to_string_pretty(&self).map_err(std::io::Error::other)?;
        text.push('\n');
        std::fs::write(path, text)
    }
}
