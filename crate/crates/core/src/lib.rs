//! stencilforge: turn an RGB image into spray-paintable stencils.
//!
//! The pipeline has four stages, each in its own module:
//!
//! 1. [`decomposer`] splits the image into alpha-blended layers and a palette
//!    by block coordinate descent on a quadratic energy.
//! 2. [`stippler`] converts each alpha layer into dot positions by importance
//!    sampling followed by Lloyd relaxation on a weighted centroidal Voronoi
//!    tessellation.
//! 3. [`spraysim`] predicts the painted result through a stencil with a
//!    clamped Gaussian deposition model.
//! 4. [`stencilmesh`] extrudes printable stencil plates and interchangeable
//!    walls, written as binary STL.
//!
//! [`raster`] and [`compositor`] hold the shared image types and the over
//! operator used throughout.

pub mod compositor;
pub mod decomposer;
pub mod error;
pub mod raster;
pub mod seed;
pub mod spraysim;
pub mod stencilmesh;
pub mod stippler;

pub use compositor::{AlphaStack, Palette, Rgb};
pub use decomposer::{DecompositionResult, EnergyWeights, SolverOptions};
pub use error::{Error, Result};
pub use raster::{ChannelMap, RasterImage};
pub use spraysim::SprayParams;
pub use stencilmesh::{MeshReport, PlateParams, TriangleMesh};
pub use stippler::{LloydOptions, Stippling};
