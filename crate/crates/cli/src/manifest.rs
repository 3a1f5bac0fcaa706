//! The JSON manifest written next to the artifacts. It records every
//! parameter and relative output path, so any later stage can be re-run
//! from it alone.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use stencilforge::decomposer::TraceEntry;
use stencilforge::{EnergyWeights, LloydOptions, PlateParams, SolverOptions, SprayParams, Stippling};

pub const MANIFEST_NAME: &str = "manifest.json";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    /// Input image path as given on the command line.
    pub input: String,
    pub seed: u64,
    pub canvas_width: usize,
    pub canvas_height: usize,
    pub decomposition: DecompositionRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stippling: Option<StipplingStage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationStage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meshes: Option<MeshStage>,
    /// SHA-256 of every file listed above, keyed by relative path.
    #[serde(default)]
    pub digests: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionRecord {
    /// Alpha layer PNGs, bottom to top (layer 1 first).
    pub layers: Vec<String>,
    /// Background first, then one color per layer, channels in [0, 1].
    pub palette: Vec<[f64; 3]>,
    pub weights: EnergyWeights,
    pub solver: SolverOptions,
    pub outer_iterations: usize,
    pub converged: bool,
    pub final_energy: TraceEntry,
    pub energy_trace: Vec<TraceEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StipplingStage {
    pub dots: usize,
    pub scale_cm_per_px: f64,
    pub lloyd: LloydOptions,
    pub layers: Vec<StipplingRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StipplingRecord {
    pub layer: usize,
    /// `None` when the layer's alpha is identically zero.
    pub file: Option<String>,
    pub empty: bool,
    pub sample_seed: u64,
    pub lloyd_seed: u64,
    pub iterations: usize,
    pub converged: bool,
    pub final_cvt_energy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationStage {
    pub runs: Vec<SimulationRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRun {
    pub spray: SprayParams,
    /// Simulated alpha PNG per layer, bottom to top.
    pub alphas: Vec<String>,
    pub composite: String,
    pub total_variation: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshStage {
    pub plate: PlateParams,
    pub plates: Vec<MeshRecord>,
    pub walls: Vec<MeshRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshRecord {
    /// Layer index for plates; absent for walls.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer: Option<usize>,
    /// Wall height in cm; absent for plates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_height_cm: Option<f64>,
    pub file: String,
    pub triangles: usize,
    pub euler_characteristic: i64,
    pub signed_volume_cm3: f64,
}

/// A stippling as stored on disk, with its relaxation trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StipplingFile {
    pub layer: usize,
    #[serde(flatten)]
    pub stippling: Stippling,
    pub sample_seed: u64,
    pub lloyd: LloydOptions,
    pub iterations: usize,
    pub converged: bool,
    /// CVT energy entering each Lloyd iteration, then of the final points.
    pub cvt_energy_trace: Vec<f64>,
    /// Whether each iteration re-sampled an empty cell.
    pub resampled: Vec<bool>,
}

impl Manifest {
    /// Relative paths of every artifact the manifest references.
    pub fn artifact_files(&self) -> Vec<String> {
        let mut files = self.decomposition.layers.clone();
        if let Some(st) = &self.stippling {
            files.extend(st.layers.iter().filter_map(|r| r.file.clone()));
        }
        if let Some(sim) = &self.simulation {
            for run in &sim.runs {
                files.extend(run.alphas.iter().cloned());
                files.push(run.composite.clone());
            }
        }
        if let Some(m) = &self.meshes {
            files.extend(m.plates.iter().chain(&m.walls).map(|r| r.file.clone()));
        }
        files
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_NAME);
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let m: Self = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        Ok(m)
    }

    /// Refresh the digests and write `manifest.json` into `dir`.
    pub fn save(&mut self, dir: &Path) -> Result<()> {
        self.digests.clear();
        for file in self.artifact_files() {
            let digest = file_digest(&dir.join(&file))?;
            self.digests.insert(file, digest);
        }
        let text = serde_json::to_string_pretty(self)?;
        let path = dir.join(MANIFEST_NAME);
        std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }
}

pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}
