//! Portable inference-graph backend.
//!
//! A graph file is a self-describing JSON document (`format:
//! "vad-graph"`, `version: 1`) holding a small feed-forward network that
//! maps per-chunk statistics to a speech probability:
//!
//! ```json
//! {
//!   "format": "vad-graph",
//!   "version": 1,
//!   "name": "energy-mlp",
//!   "chunk_samples": 512,
//!   "frontend": "chunk_stats",
//!   "layers": [
//!     { "weights": [[12.0, 0.0, 0.0, 0.0]], "bias": [-0.6], "activation": "sigmoid" }
//!   ]
//! }
//! ```
//!
//! The `chunk_stats` frontend produces 4 features per chunk: RMS, RMS in
//! dBFS, zero-crossing rate, and absolute peak. Layer dimensions are
//! validated when the file is loaded, never on the audio path. The final
//! layer must have exactly one output; it is clamped to [0, 1].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::vad::{chunk_rms, ProbabilityBackend};

pub const GRAPH_FORMAT: &str = "vad-graph";
pub const GRAPH_VERSION: u32 = 1;

const FRONTEND_DIM: usize = 4;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphFile {
    pub format: String,
    pub version: u32,
    pub name: String,
    pub chunk_samples: usize,
    pub frontend: String,
    pub layers: Vec<GraphLayer>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphLayer {
    /// Row-major weight matrix: `weights[out][in]`.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub activation: String,
}

impl GraphFile {
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| CoreError::Backend {
                backend: self.name.clone(),
                message: e.to_string(),
            })?;
        std::fs::write(path, json)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum Activation {
    Identity,
    Relu,
    Tanh,
    Sigmoid,
}

impl Activation {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "identity" => Some(Self::Identity),
            "relu" => Some(Self::Relu),
            "tanh" => Some(Self::Tanh),
            "sigmoid" => Some(Self::Sigmoid),
            _ => None,
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Self::Identity => x,
            Self::Relu => x.max(0.0),
            Self::Tanh => x.tanh(),
            Self::Sigmoid => 1.0 / (1.0 + (-x).exp()),
        }
    }
}

#[derive(Debug)]
struct Layer {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    activation: Activation,
}

/// A validated, loaded inference graph.
#[derive(Debug)]
pub struct GraphBackend {
    name: String,
    chunk_samples: usize,
    layers: Vec<Layer>,
    // scratch buffers reused across chunks (the pre-warmed state)
    scratch_in: Vec<f64>,
    scratch_out: Vec<f64>,
}

/// Load and validate a graph file. All failure modes (missing file, bad
/// JSON, version mismatch, inconsistent dimensions) surface here.
pub fn graph_backend(path: &Path) -> Result<GraphBackend> {
    let fail = |message: String| CoreError::Backend {
        backend: path.display().to_string(),
        message,
    };

    let bytes = std::fs::read(path)
        .map_err(|e| fail(format!("cannot read graph file: {e}")))?;
    let file: GraphFile = serde_json::from_slice(&bytes)
        .map_err(|e| fail(format!("corrupt graph file: {e}")))?;

    if file.format != GRAPH_FORMAT {
        return Err(fail(format!(
            "format tag '{}' is not '{GRAPH_FORMAT}'",
            file.format
        )));
    }
    if file.version != GRAPH_VERSION {
        return Err(fail(format!(
            "graph version {} unsupported (this build reads version {GRAPH_VERSION})",
            file.version
        )));
    }
    if file.frontend != "chunk_stats" {
        return Err(fail(format!("unknown frontend '{}'", file.frontend)));
    }
    if file.chunk_samples == 0 {
        return Err(fail("chunk_samples must be positive".into()));
    }
    if file.layers.is_empty() {
        return Err(fail("graph has no layers".into()));
    }

    let mut layers = Vec::with_capacity(file.layers.len());
    let mut input_dim = FRONTEND_DIM;
    let mut max_dim = FRONTEND_DIM;
    for (i, spec) in file.layers.iter().enumerate() {
        let out_dim = spec.weights.len();
        if out_dim == 0 {
            return Err(fail(format!("layer {i} has no output units")));
        }
        for row in &spec.weights {
            if row.len() != input_dim {
                return Err(fail(format!(
                    "layer {i} expects {input_dim} inputs, weight row has {}",
                    row.len()
                )));
            }
        }
        if spec.bias.len() != out_dim {
            return Err(fail(format!(
                "layer {i} bias length {} does not match {out_dim} outputs",
                spec.bias.len()
            )));
        }
        let activation = Activation::parse(&spec.activation)
            .ok_or_else(|| fail(format!("layer {i}: unknown activation '{}'", spec.activation)))?;
        layers.push(Layer {
            weights: spec.weights.clone(),
            bias: spec.bias.clone(),
            activation,
        });
        input_dim = out_dim;
        max_dim = max_dim.max(out_dim);
    }
    if input_dim != 1 {
        return Err(fail(format!(
            "final layer must emit exactly 1 probability, emits {input_dim}"
        )));
    }

    Ok(GraphBackend {
        name: file.name,
        chunk_samples: file.chunk_samples,
        layers,
        scratch_in: Vec::with_capacity(max_dim),
        scratch_out: Vec::with_capacity(max_dim),
    })
}

fn chunk_stats(chunk: &[f64]) -> [f64; FRONTEND_DIM] {
    let rms = chunk_rms(chunk);
    let log_rms = 20.0 * (rms + 1e-10).log10();
    let crossings = chunk
        .windows(2)
        .filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0))
        .count();
    let zcr = if chunk.len() > 1 {
        crossings as f64 / (chunk.len() - 1) as f64
    } else {
        0.0
    };
    let peak = chunk.iter().fold(0.0f64, |m, &s| m.max(s.abs()));
    [rms, log_rms, zcr, peak]
}

impl ProbabilityBackend for GraphBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn expected_chunk_samples(&self) -> Option<usize> {
        Some(self.chunk_samples)
    }

    fn chunk_probability(&mut self, chunk: &[f64]) -> Result<f64> {
        self.scratch_in.clear();
        self.scratch_in.extend_from_slice(&chunk_stats(chunk));
        for layer in &self.layers {
            self.scratch_out.clear();
            for (row, &b) in layer.weights.iter().zip(&layer.bias) {
                let z: f64 = row
                    .iter()
                    .zip(&self.scratch_in)
                    .map(|(w, x)| w * x)
                    .sum::<f64>()
                    + b;
                self.scratch_out.push(layer.activation.apply(z));
            }
            std::mem::swap(&mut self.scratch_in, &mut self.scratch_out);
        }
        Ok(self.scratch_in[0].clamp(0.0, 1.0))
    }
}
