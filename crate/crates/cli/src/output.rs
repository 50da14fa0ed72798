//! Run artifacts: trace, label map, manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use assignflow::{FlowResult, TraceRecord};
use serde::{Deserialize, Serialize};

use crate::pnm::Pnm;

/// Everything needed to reproduce a run and read its results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// The subcommand's arguments, as parsed.
    pub parameters: serde_json::Value,
    pub inputs: Vec<String>,
    pub out_dir: String,
    pub outputs: Vec<String>,
    pub labels: usize,
    pub iterations: usize,
    pub final_entropy: f64,
    pub final_objective: f64,
    pub converged: bool,
    /// Fraction of pixels whose label matches the generator's ground truth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
}

/// Writes files into an output directory and remembers their names.
pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<()> {
        let path = self.root.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn image(&mut self, name: &str, img: &Pnm) -> Result<()> {
        self.write(name, img.encode())
    }

    pub fn trace(&mut self, trace: &[TraceRecord]) -> Result<()> {
        self.write("trace.csv", trace_csv(trace))
    }

    /// Writes `manifest.json` listing every file written so far.
    pub fn finish(mut self, summary: Summary<'_>) -> Result<RunManifest> {
        let mut outputs = self.written.clone();
        outputs.push("manifest.json".into());
        let last = summary.result.trace.last();
        let manifest = RunManifest {
            command: summary.command.into(),
            parameters: summary.parameters,
            inputs: summary.inputs,
            out_dir: self.root.display().to_string(),
            outputs,
            labels: summary.result.assignment.cols(),
            iterations: summary.result.iterations,
            final_entropy: last.map_or(f64::NAN, |t| t.entropy),
            final_objective: last.map_or(f64::NAN, |t| t.objective),
            converged: summary.result.converged,
            accuracy: summary.accuracy,
        };
        let mut json = serde_json::to_string_pretty(&manifest)?;
        json.push('\n');
        self.write("manifest.json", json)?;
        Ok(manifest)
    }
}

pub struct Summary<'a> {
    pub command: &'static str,
    pub parameters: serde_json::Value,
    pub inputs: Vec<String>,
    pub result: &'a FlowResult,
    pub accuracy: Option<f64>,
}

pub fn trace_csv(trace: &[TraceRecord]) -> String {
    let mut out = String::from("iter,entropy,objective\n");
    for t in trace {
        let _ = writeln!(out, "{},{:e},{:e}", t.iteration, t.entropy, t.objective);
    }
    out
}

/// Label indices as grey levels `round(l * 255 / (n - 1))`.
pub fn label_map(width: usize, height: usize, labels: &[usize], n: usize) -> Pnm {
    let scale = if n > 1 { 255.0 / (n - 1) as f64 } else { 0.0 };
    Pnm {
        width,
        height,
        channels: 1,
        data: labels.iter().map(|&l| (l as f64 * scale).round() as u8).collect(),
    }
}

pub fn accuracy(labels: &[usize], truth: &[usize]) -> f64 {
    let hits = labels.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / labels.len().max(1) as f64
}
