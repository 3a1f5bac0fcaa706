//! The objective restricted to one alpha layer is a convex quadratic with
//! box constraints; it is minimized by projected gradient descent.

use super::energy::{smooth_of, FORWARD_OFFSETS};
use super::{EnergyWeights, SolverOptions};
use crate::compositor::{layer_affine_decomposition, AlphaStack, Palette, Rgb};
use crate::error::{Error, Result};
use crate::raster::{ChannelMap, RasterImage};

/// Curvature bound of the ordered-pair 8-neighbor smoothness term: its
/// Hessian is 4x the grid Laplacian, whose spectrum on the king graph
/// (and any induced subgraph) is bounded by 12.
const SMOOTH_CURVATURE: f64 = 48.0;

/// Objective of a single layer's alphas with everything else fixed.
///
/// `value` equals the full weighted energy minus the smoothness of the other
/// layers, which does not depend on this layer.
#[derive(Debug, Clone)]
pub struct LayerQuadratic {
    width: usize,
    height: usize,
    weights: EnergyWeights,
    slope: Vec<Rgb>,
    /// `intercept - input`: the data residual at alpha = 0.
    offset: Vec<Rgb>,
    /// `1 - sum of the other layers' alphas`: the sparsity target.
    sparse_target: Vec<f64>,
}

pub fn layer_quadratic(
    input: &RasterImage,
    stack: &AlphaStack,
    palette: &Palette,
    weights: &EnergyWeights,
    l: usize,
) -> Result<LayerQuadratic> {
    if input.width() != stack.width() || input.height() != stack.height() {
        return Err(Error::DimensionMismatch("input and alpha stack differ in size".into()));
    }
    let affine = layer_affine_decomposition(stack, palette, l)?;
    let offset = affine
        .intercept
        .iter()
        .zip(input.pixels())
        .map(|(b, x)| [b[0] - x[0], b[1] - x[1], b[2] - x[2]])
        .collect();
    let sparse_target = (0..stack.pixel_count())
        .map(|k| {
            let others: f64 = stack
                .layers()
                .iter()
                .enumerate()
                .filter(|(j, _)| j + 1 != l)
                .map(|(_, m)| m.values()[k])
                .sum();
            1.0 - others
        })
        .collect();
    Ok(LayerQuadratic {
        width: stack.width(),
        height: stack.height(),
        weights: *weights,
        slope: affine.slope,
        offset,
        sparse_target,
    })
}

impl LayerQuadratic {
    pub fn len(&self) -> usize {
        self.slope.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slope.is_empty()
    }

    pub fn value(&self, alpha: &[f64]) -> f64 {
        let w = &self.weights;
        let mut data = 0.0;
        let mut sparse = 0.0;
        for k in 0..alpha.len() {
            let (s, o) = (&self.slope[k], &self.offset[k]);
            for c in 0..3 {
                let r = s[c] * alpha[k] + o[c];
                data += r * r;
            }
            let d = self.sparse_target[k] - alpha[k];
            sparse += d * d;
        }
        w.gamma_data * data + w.gamma_smooth * smooth_of(alpha, self.width, self.height) + w.gamma_sparse * sparse
    }

    pub fn gradient(&self, alpha: &[f64], grad: &mut [f64]) {
        let w = &self.weights;
        let (width, height) = (self.width, self.height);
        for k in 0..alpha.len() {
            let (s, o) = (&self.slope[k], &self.offset[k]);
            let mut g = 0.0;
            for c in 0..3 {
                g += s[c] * (s[c] * alpha[k] + o[c]);
            }
            grad[k] = 2.0 * w.gamma_data * g - 2.0 * w.gamma_sparse * (self.sparse_target[k] - alpha[k]);
        }
        if w.gamma_smooth > 0.0 {
            let coef = 4.0 * w.gamma_smooth;
            for y in 0..height {
                for x in 0..width {
                    let p = y * width + x;
                    for (dx, dy) in FORWARD_OFFSETS {
                        let (nx, ny) = (x as isize + dx, y as isize + dy);
                        if nx < 0 || nx >= width as isize || ny >= height as isize {
                            continue;
                        }
                        let n = ny as usize * width + nx as usize;
                        let d = coef * (alpha[p] - alpha[n]);
                        grad[p] += d;
                        grad[n] -= d;
                    }
                }
            }
        }
    }

    /// Upper bound on the largest Hessian eigenvalue.
    pub fn lipschitz(&self) -> f64 {
        let w = &self.weights;
        let max_slope2 = self
            .slope
            .iter()
            .map(|s| s[0] * s[0] + s[1] * s[1] + s[2] * s[2])
            .fold(0.0, f64::max);
        2.0 * w.gamma_data * max_slope2 + SMOOTH_CURVATURE * w.gamma_smooth + 2.0 * w.gamma_sparse
    }

    /// Projected gradient descent from `start`, clamped to [0, 1].
    pub fn minimize(&self, start: &[f64], max_iters: usize, grad_tol: f64) -> Result<Vec<f64>> {
        let n = start.len();
        let lip = self.lipschitz();
        let mut alpha: Vec<f64> = start.iter().map(|a| a.clamp(0.0, 1.0)).collect();
        if lip <= 0.0 {
            // every weight on this layer vanishes: any feasible point is optimal
            return Ok(alpha);
        }
        let step = 1.0 / lip;
        let mut grad = vec![0.0; n];
        for _ in 0..max_iters {
            self.gradient(&alpha, &mut grad);
            // projected-gradient residual (unit step), checked before moving
            let mut residual: f64 = 0.0;
            for (k, (&a, &g)) in alpha.iter().zip(&grad).enumerate() {
                if !g.is_finite() {
                    return Err(Error::SolverFailure(format!("non-finite gradient at pixel {k}")));
                }
                residual = residual.max((a - (a - g).clamp(0.0, 1.0)).abs());
            }
            if residual < grad_tol {
                break;
            }
            for (a, &g) in alpha.iter_mut().zip(&grad) {
                *a = (*a - step * g).clamp(0.0, 1.0);
            }
        }
        Ok(alpha)
    }
}

/// Minimize the objective over layer `l`'s alphas in [0, 1]^P with the
/// palette and all other layers fixed. Never returns a layer worse than the
/// incumbent.
pub fn solve_alpha_layer(
    input: &RasterImage,
    stack: &AlphaStack,
    palette: &Palette,
    weights: &EnergyWeights,
    l: usize,
    opts: &SolverOptions,
) -> Result<ChannelMap> {
    let q = layer_quadratic(input, stack, palette, weights, l)?;
    let incumbent = stack.layer(l).values();
    let candidate = q.minimize(incumbent, opts.qp_max_iters, opts.qp_grad_tol)?;
    let (before, after) = (q.value(incumbent), q.value(&candidate));
    if !after.is_finite() {
        return Err(Error::SolverFailure(format!("layer {l} objective is not finite")));
    }
    let values = if after <= before { candidate } else { incumbent.to_vec() };
    Ok(ChannelMap::from_clamped(stack.width(), stack.height(), values))
}
