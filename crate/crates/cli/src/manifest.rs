//! Run manifest written alongside every command's results. Result
//! artifacts (predictions, tables) are byte-stable for identical inputs
//! and seeds; the manifest additionally carries wall-clock timing.

use std::path::Path;

use mpgnn::error::Error as CoreError;
use serde::Serialize;

#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<String>,
    pub model_kind: String,
    pub seed: u64,
    pub output: String,
    pub jobs: usize,
    pub graphs_per_sec: Option<f64>,
    pub mean_latency_ms: Option<f64>,
    pub peak_live_graphs: usize,
    pub saturation_events: u64,
}

impl RunManifest {
    pub fn new(
        command: &str,
        inputs: &[&Path],
        model_kind: &str,
        seed: u64,
        output: &Path,
    ) -> Self {
        Self {
            command: command.to_string(),
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            model_kind: model_kind.to_string(),
            seed,
            output: output.display().to_string(),
            jobs: 1,
            graphs_per_sec: None,
            mean_latency_ms: None,
            peak_live_graphs: 0,
            saturation_events: 0,
        }
    }

    pub fn timing(&mut self, graphs_per_sec: f64, mean_latency_ms: f64) {
        self.graphs_per_sec = Some(graphs_per_sec);
        self.mean_latency_ms = Some(mean_latency_ms);
    }

    /// Write `<output>.manifest.json` next to the result artifact.
    pub fn write_next_to(&self, output: &Path) -> Result<(), CoreError> {
        let path = output.with_extension("manifest.json");
        let body = serde_json::to_string_pretty(self)
            .map_err(|e| CoreError::Parse(format!("manifest encode: {e}")))?;
        std::fs::write(path, body)?;
        Ok(())
    }
}
