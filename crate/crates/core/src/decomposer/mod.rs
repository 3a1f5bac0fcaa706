//! Soft layer decomposition.
//!
//! Finds an [`AlphaStack`] and [`Palette`] whose composite reproduces the
//! input image while keeping each layer smooth and pushing the per-pixel sum
//! of alphas toward one. The objective is
//!
//! ```text
//! gamma_data * E_data + gamma_smooth * E_smooth + gamma_sparse * E_sparse
//! ```
//!
//! and is minimized by block coordinate descent: K-means initialization,
//! then repeated sweeps of one box-constrained quadratic solve per layer
//! followed by a joint least-squares solve for all palette colors within
//! the unit cube.

mod energy;
mod kmeans;
mod layer_qp;
mod palette;

use serde::{Deserialize, Serialize};

use crate::compositor::{AlphaStack, Palette};
use crate::error::{Error, Result};
use crate::raster::{ChannelMap, RasterImage};

pub use energy::{energy_data, energy_smooth, energy_smooth_layer, energy_sparse, total_energy, EnergyBreakdown};
pub use kmeans::init_kmeans;
pub use layer_qp::{layer_quadratic, solve_alpha_layer, LayerQuadratic};
pub use palette::solve_palette;

/// Relative weights of the three energy terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnergyWeights {
    pub gamma_data: f64,
    pub gamma_smooth: f64,
    pub gamma_sparse: f64,
}

impl Default for EnergyWeights {
    fn default() -> Self {
        Self {
            gamma_data: 1.0,
            gamma_smooth: 0.05,
            gamma_sparse: 0.05,
        }
    }
}

impl EnergyWeights {
    pub fn new(gamma_data: f64, gamma_smooth: f64, gamma_sparse: f64) -> Result<Self> {
        let w = Self {
            gamma_data,
            gamma_smooth,
            gamma_sparse,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.gamma_data, self.gamma_smooth, self.gamma_sparse];
        if all.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(Error::InvalidParameter(format!("energy weights must be finite and >= 0: {all:?}")));
        }
        if self.gamma_data <= 0.0 {
            return Err(Error::InvalidParameter("gamma_data must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub max_outer_iters: usize,
    /// Stop once one outer sweep lowers the total energy by less than this
    /// fraction of its previous value.
    pub outer_tol: f64,
    pub qp_max_iters: usize,
    /// Infinity norm of the projected gradient step at which a layer solve stops.
    pub qp_grad_tol: f64,
    pub rng_seed: u64,
    /// Also descend from a black and a white background with every layer
    /// opaque, keeping whichever of the three runs ends lowest. The energy
    /// is not convex and the sparsity term favors opaque layers, so the best
    /// background often lies outside the image's own colors.
    pub background_restarts: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_outer_iters: 50,
            outer_tol: 1e-4,
            qp_max_iters: 500,
            qp_grad_tol: 1e-6,
            rng_seed: 0,
            background_restarts: true,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_outer_iters == 0 || self.qp_max_iters == 0 {
            return Err(Error::InvalidParameter("iteration counts must be >= 1".into()));
        }
        if !(self.outer_tol > 0.0) || !(self.qp_grad_tol > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be > 0".into()));
        }
        Ok(())
    }
}

/// Which block solve produced a trace entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    Init,
    Layer(usize),
    Palette,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    /// Outer iteration, 0 for the initialization.
    pub iteration: usize,
    pub block: Block,
    pub data: f64,
    pub smooth: f64,
    pub sparse: f64,
    pub total: f64,
}

#[derive(Debug, Clone)]
pub struct DecompositionResult {
    pub stack: AlphaStack,
    pub palette: Palette,
    pub energy_trace: Vec<TraceEntry>,
    pub outer_iterations: usize,
    pub converged: bool,
}

impl DecompositionResult {
    pub fn final_energy(&self) -> &TraceEntry {
        self.energy_trace.last().expect("trace always holds the initial entry")
    }

    pub fn initial_energy(&self) -> &TraceEntry {
        &self.energy_trace[0]
    }
}

fn trace_entry(iteration: usize, block: Block, e: EnergyBreakdown) -> TraceEntry {
    TraceEntry {
        iteration,
        block,
        data: e.data,
        smooth: e.smooth,
        sparse: e.sparse,
        total: e.total,
    }
}

/// Decompose `input` into `layers` alpha layers and `layers + 1` colors.
pub fn decompose(
    input: &RasterImage,
    layers: usize,
    weights: &EnergyWeights,
    opts: &SolverOptions,
) -> Result<DecompositionResult> {
    weights.validate()?;
    opts.validate()?;
    if layers == 0 {
        return Err(Error::InvalidParameter("layer count must be >= 1".into()));
    }
    let (stack, palette) = init_kmeans(input, layers, opts.rng_seed)?;
    let mut best = decompose_from(input, stack.clone(), palette.clone(), weights, opts)?;
    if opts.background_restarts {
        let opaque = AlphaStack::new(
            (0..layers)
                .map(|_| ChannelMap::new(input.width(), input.height(), vec![1.0; input.width() * input.height()]))
                .collect::<Result<_>>()?,
        )?;
        for bg in [0.0, 1.0] {
            let mut colors = palette.colors().to_vec();
            colors[0] = [bg; 3];
            let run = decompose_from(input, opaque.clone(), Palette::new(colors)?, weights, opts)?;
            if run.final_energy().total < best.final_energy().total {
                best = run;
            }
        }
    }
    Ok(best)
}

/// Run block coordinate descent from a caller-supplied starting point.
pub fn decompose_from(
    input: &RasterImage,
    mut stack: AlphaStack,
    mut palette: Palette,
    weights: &EnergyWeights,
    opts: &SolverOptions,
) -> Result<DecompositionResult> {
    weights.validate()?;
    opts.validate()?;
    if stack.depth() == 0 || palette.colors().len() != stack.depth() + 1 {
        return Err(Error::DimensionMismatch("palette length does not match stack depth".into()));
    }
    if input.width() != stack.width() || input.height() != stack.height() {
        return Err(Error::DimensionMismatch("input and alpha stack differ in size".into()));
    }
    let layers = stack.depth();
    let mut trace = vec![trace_entry(0, Block::Init, total_energy(input, &stack, &palette, weights)?)];
    let mut previous = trace[0].total;
    let mut outer_iterations = 0;
    let mut converged = false;

    for iteration in 1..=opts.max_outer_iters {
        for l in 1..=layers {
            let alpha = solve_alpha_layer(input, &stack, &palette, weights, l, opts)?;
            stack.replace(l, alpha);
            let e = total_energy(input, &stack, &palette, weights)?;
            trace.push(trace_entry(iteration, Block::Layer(l), e));
        }
        palette = solve_palette(input, &stack, &palette, weights)?;
        let e = total_energy(input, &stack, &palette, weights)?;
        trace.push(trace_entry(iteration, Block::Palette, e));
        outer_iterations = iteration;

        log::debug!(
            "outer {iteration}: data {:.6e} smooth {:.6e} sparse {:.6e} total {:.6e}",
            e.data,
            e.smooth,
            e.sparse,
            e.total
        );
        if previous <= 0.0 || previous - e.total <= opts.outer_tol * previous {
            converged = true;
            break;
        }
        previous = e.total;
    }

    Ok(DecompositionResult {
        stack,
        palette,
        energy_trace: trace,
        outer_iterations,
        converged,
    })
}
