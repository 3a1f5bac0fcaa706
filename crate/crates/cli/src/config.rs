//! Effective pipeline configuration: defaults, then an optional JSON file,
//! then command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use stencilforge::{EnergyWeights, LloydOptions, PlateParams, SolverOptions, SprayParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Number of alpha layers above the background.
    pub layers: usize,
    pub weights: EnergyWeights,
    pub solver: SolverOptions,
    /// Dots per layer.
    pub dots: usize,
    pub lloyd: LloydOptions,
    /// Base spray parameters; `heights` overrides `spray.height`.
    pub spray: SprayParams,
    /// Nozzle heights to simulate, one composite each.
    pub heights: Vec<f64>,
    pub plate: PlateParams,
    /// One wall mesh per height.
    pub wall_heights: Vec<f64>,
    /// Root seed; every stage and layer derives its own seed from it.
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let spray = SprayParams::default();
        let plate = PlateParams {
            hole_radius_cm: spray.radius_cm,
            ..PlateParams::default()
        };
        Self {
            layers: 3,
            weights: EnergyWeights::default(),
            solver: SolverOptions::default(),
            dots: 5000,
            lloyd: LloydOptions::default(),
            heights: vec![spray.height],
            spray,
            wall_heights: vec![plate.wall_height_cm],
            plate,
            seed: 0,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl PipelineConfig {
    /// Read a JSON config file. Missing keys keep their defaults; the hole
    /// radius follows the spray radius unless given explicitly.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let explicit_hole = value.pointer("/plate/hole_radius_cm").is_some();
        let mut cfg: Self =
            serde_json::from_value(value).with_context(|| format!("invalid config {}", path.display()))?;
        if !explicit_hole {
            cfg.plate.hole_radius_cm = cfg.spray.radius_cm;
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            bail!("layers must be >= 1");
        }
        if self.dots == 0 {
            bail!("dots must be >= 1");
        }
        self.weights.validate()?;
        self.solver.validate()?;
        self.lloyd.validate()?;
        self.spray.validate()?;
        self.plate.validate()?;
        if self.heights.is_empty() || self.wall_heights.is_empty() {
            bail!("height lists must not be empty");
        }
        for &h in &self.heights {
            SprayParams {
                height: h,
                ..self.spray
            }
            .validate()?;
        }
        for &h in &self.wall_heights {
            PlateParams {
                wall_height_cm: h,
                ..self.plate.clone()
            }
            .validate()?;
        }
        Ok(())
    }

    /// Spray parameters for one nozzle height.
    pub fn spray_at(&self, height: f64) -> SprayParams {
        SprayParams { height, ..self.spray }
    }

    /// Plate parameters for one wall height.
    pub fn plate_at(&self, wall_height: f64) -> PlateParams {
        PlateParams {
            wall_height_cm: wall_height,
            ..self.plate.clone()
        }
    }
}
