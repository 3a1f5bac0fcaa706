//! Stippling: turn a density (an alpha layer) into dot positions.
//!
//! Seeds are drawn by importance sampling proportional to the density, then
//! relaxed with Lloyd's algorithm on a density-weighted centroidal Voronoi
//! tessellation. The tessellation is discrete: each pixel center belongs to
//! its nearest seed (lowest index on ties).

mod grid;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::ChannelMap;
use crate::seed;

use grid::SeedGrid;

/// Continuous pixel coordinates `[x, y]`; pixel `(i, j)` covers `[i, i+1) x [j, j+1)`.
pub type Point = [f64; 2];

/// Dot centers on a canvas, with the physical size of one pixel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stippling {
    pub canvas_width: usize,
    pub canvas_height: usize,
    #[serde(rename = "scale_cm_per_px")]
    pub scale: f64,
    pub points: Vec<Point>,
}

impl Stippling {
    pub fn new(canvas_width: usize, canvas_height: usize, scale: f64, points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("a stippling needs at least one dot".into()));
        }
        let s = Self {
            canvas_width,
            canvas_height,
            scale,
            points,
        };
        s.validate()?;
        Ok(s)
    }

    /// A stippling with no dots. Only meaningful as a degenerate input to
    /// the spray simulator (an unpainted layer).
    pub fn empty(canvas_width: usize, canvas_height: usize, scale: f64) -> Result<Self> {
        let s = Self {
            canvas_width,
            canvas_height,
            scale,
            points: Vec::new(),
        };
        s.validate()?;
        Ok(s)
    }

    /// Checks everything except the dot count.
    pub fn validate(&self) -> Result<()> {
        if self.canvas_width == 0 || self.canvas_height == 0 {
            return Err(Error::ZeroDimension);
        }
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(Error::InvalidParameter(format!("scale must be > 0, got {}", self.scale)));
        }
        let (w, h) = (self.canvas_width as f64, self.canvas_height as f64);
        if let Some(p) = self.points.iter().find(|p| !(p[0] >= 0.0 && p[0] < w && p[1] >= 0.0 && p[1] < h)) {
            return Err(Error::OutOfRange(format!("dot {p:?} outside the {w}x{h} canvas")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Dot position in cm, with y flipped so the stencil reads upright when
    /// viewed from +z.
    pub fn physical(&self, p: Point) -> [f64; 2] {
        [p[0] * self.scale, (self.canvas_height as f64 - p[1]) * self.scale]
    }

    pub fn physical_extent(&self) -> [f64; 2] {
        [self.canvas_width as f64 * self.scale, self.canvas_height as f64 * self.scale]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LloydOptions {
    pub max_iters: usize,
    /// Stop once no seed moves farther than this (pixels) in one iteration.
    pub move_tol: f64,
    pub rng_seed: u64,
}

impl Default for LloydOptions {
    fn default() -> Self {
        Self {
            max_iters: 100,
            move_tol: 0.5,
            rng_seed: 0,
        }
    }
}

impl LloydOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        if !(self.move_tol > 0.0) {
            return Err(Error::InvalidParameter("move_tol must be > 0".into()));
        }
        Ok(())
    }
}

/// Result of a traced Lloyd run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LloydReport {
    pub stippling: Stippling,
    /// CVT energy of the seeds entering each iteration, followed by the
    /// energy of the final seeds; one longer than `resampled`.
    pub energy_trace: Vec<f64>,
    /// Whether iteration `t` re-sampled any empty cell.
    pub resampled: Vec<bool>,
    pub iterations: usize,
    pub converged: bool,
}

fn check_density(density: &ChannelMap) -> Result<f64> {
    let total: f64 = density.values().iter().sum();
    if total > 0.0 {
        Ok(total)
    } else {
        Err(Error::EmptyDensity)
    }
}

/// Draw `n` points i.i.d. with probability proportional to the per-pixel
/// density, each uniformly jittered inside its pixel.
pub fn importance_sample(density: &ChannelMap, n: usize, rng_seed: u64) -> Result<Vec<Point>> {
    if n == 0 {
        return Err(Error::InvalidParameter("dot count must be >= 1".into()));
    }
    check_density(density)?;
    let mut acc = 0.0;
    let cdf: Vec<f64> = density
        .values()
        .iter()
        .map(|&v| {
            acc += v;
            acc
        })
        .collect();
    let total = acc;
    let last_nonzero = density.values().iter().rposition(|&v| v > 0.0).expect("density has mass");
    let width = density.width();
    let mut rng = seed::rng(rng_seed);
    let points = (0..n)
        .map(|_| {
            let target = rng.random::<f64>() * total;
            let k = cdf.partition_point(|&c| c <= target).min(last_nonzero);
            let (px, py) = ((k % width) as f64, (k / width) as f64);
            let jx: f64 = rng.random();
            let jy: f64 = rng.random();
            [px + jx, py + jy]
        })
        .collect();
    Ok(points)
}

fn pixel_center(k: usize, width: usize) -> Point {
    [(k % width) as f64 + 0.5, (k / width) as f64 + 0.5]
}

/// Nearest-seed label of every pixel center.
fn assign(points: &[Point], width: usize, height: usize) -> Vec<u32> {
    let grid = SeedGrid::new(points, width as f64, height as f64);
    let mut labels = vec![0u32; width * height];
    labels.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
        for (x, label) in row.iter_mut().enumerate() {
            *label = grid.nearest([x as f64 + 0.5, y as f64 + 0.5]) as u32;
        }
    });
    labels
}

fn energy_of(points: &[Point], density: &ChannelMap, labels: &[u32]) -> f64 {
    let width = density.width();
    density
        .values()
        .iter()
        .zip(labels)
        .enumerate()
        .map(|(k, (&rho, &s))| {
            if rho == 0.0 {
                return 0.0;
            }
            let c = pixel_center(k, width);
            let p = points[s as usize];
            rho * ((c[0] - p[0]).powi(2) + (c[1] - p[1]).powi(2))
        })
        .sum()
}

/// Weighted CVT energy: sum over pixel centers of density times squared
/// distance to the nearest seed. Infinite when there are no seeds but some
/// density.
pub fn cvt_energy(points: &[Point], density: &ChannelMap) -> f64 {
    if points.is_empty() {
        return if density.values().iter().any(|&v| v > 0.0) { f64::INFINITY } else { 0.0 };
    }
    let labels = assign(points, density.width(), density.height());
    energy_of(points, density, &labels)
}

/// Lloyd relaxation returning only the final stippling.
pub fn lloyd_relax(points: Vec<Point>, density: &ChannelMap, opts: &LloydOptions, scale: f64) -> Result<Stippling> {
    Ok(lloyd_relax_traced(points, density, opts, scale)?.stippling)
}

/// Lloyd relaxation with the per-iteration CVT energy recorded.
pub fn lloyd_relax_traced(
    mut points: Vec<Point>,
    density: &ChannelMap,
    opts: &LloydOptions,
    scale: f64,
) -> Result<LloydReport> {
    opts.validate()?;
    check_density(density)?;
    let (width, height) = (density.width(), density.height());
    // validates canvas membership, scale and count
    Stippling::new(width, height, scale, points.clone())?;

    let n = points.len();
    let mut energy_trace = Vec::new();
    let mut resampled = Vec::new();
    let mut converged = false;
    let mut labels = assign(&points, width, height);

    for iter in 0..opts.max_iters {
        energy_trace.push(energy_of(&points, density, &labels));

        let mut mass = vec![0.0; n];
        let mut sx = vec![0.0; n];
        let mut sy = vec![0.0; n];
        for (k, (&rho, &s)) in density.values().iter().zip(&labels).enumerate() {
            if rho == 0.0 {
                continue;
            }
            let c = pixel_center(k, width);
            let s = s as usize;
            mass[s] += rho;
            sx[s] += rho * c[0];
            sy[s] += rho * c[1];
        }

        let mut any_resampled = false;
        let mut max_move: f64 = 0.0;
        for i in 0..n {
            let next = if mass[i] > 0.0 {
                // clamp guards the last ulp; centroids of pixel centers are interior
                [
                    (sx[i] / mass[i]).clamp(0.5, width as f64 - 0.5),
                    (sy[i] / mass[i]).clamp(0.5, height as f64 - 0.5),
                ]
            } else {
                any_resampled = true;
                let sub = seed::derive(opts.rng_seed, "lloyd-resample", (iter * n + i) as u64);
                importance_sample(density, 1, sub)?[0]
            };
            let d = ((next[0] - points[i][0]).powi(2) + (next[1] - points[i][1]).powi(2)).sqrt();
            if mass[i] > 0.0 {
                max_move = max_move.max(d);
            }
            points[i] = next;
        }
        resampled.push(any_resampled);
        labels = assign(&points, width, height);
        if !any_resampled && max_move < opts.move_tol {
            converged = true;
            break;
        }
    }
    energy_trace.push(energy_of(&points, density, &labels));
    let iterations = resampled.len();

    Ok(LloydReport {
        stippling: Stippling::new(width, height, scale, points)?,
        energy_trace,
        resampled,
        iterations,
        converged,
    })
}
