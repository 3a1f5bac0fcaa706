use serde::{Deserialize, Serialize};

use super::EnergyWeights;
use crate::compositor::{composite, AlphaStack, Palette};
use crate::error::{Error, Result};
use crate::raster::{ChannelMap, RasterImage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub data: f64,
    pub smooth: f64,
    pub sparse: f64,
    pub total: f64,
}

/// Sum of squared channel differences between input and composite.
pub fn energy_data(input: &RasterImage, composite: &RasterImage) -> Result<f64> {
    if !input.same_shape(composite) {
        return Err(Error::DimensionMismatch(format!(
            "input {}x{} vs composite {}x{}",
            input.width(),
            input.height(),
            composite.width(),
            composite.height()
        )));
    }
    Ok(input
        .pixels()
        .iter()
        .zip(composite.pixels())
        .map(|(x, y)| (0..3).map(|c| (x[c] - y[c]).powi(2)).sum::<f64>())
        .sum())
}

/// Forward half of the 8-neighborhood; together with the mirrored offsets it
/// visits every unordered neighbor pair exactly once.
pub(crate) const FORWARD_OFFSETS: [(isize, isize); 4] = [(1, 0), (-1, 1), (0, 1), (1, 1)];

/// Smoothness of one channel: sum over pixels of squared differences to each
/// 8-neighbor, counting ordered pairs (so every unordered pair twice).
pub fn energy_smooth_layer(map: &ChannelMap) -> f64 {
    smooth_of(map.values(), map.width(), map.height())
}

pub(crate) fn smooth_of(values: &[f64], width: usize, height: usize) -> f64 {
    let mut sum = 0.0;
    for y in 0..height {
        for x in 0..width {
            let a = values[y * width + x];
            for (dx, dy) in FORWARD_OFFSETS {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx < 0 || nx >= width as isize || ny >= height as isize {
                    continue;
                }
                let d = a - values[ny as usize * width + nx as usize];
                sum += d * d;
            }
        }
    }
    2.0 * sum
}

pub fn energy_smooth(stack: &AlphaStack) -> f64 {
    stack.layers().iter().map(energy_smooth_layer).sum()
}

/// Sum over pixels of `(1 - sum_l alpha_l)^2`.
pub fn energy_sparse(stack: &AlphaStack) -> f64 {
    (0..stack.pixel_count())
        .map(|k| {
            let s: f64 = stack.layers().iter().map(|m| m.values()[k]).sum();
            (1.0 - s).powi(2)
        })
        .sum()
}

pub fn total_energy(
    input: &RasterImage,
    stack: &AlphaStack,
    palette: &Palette,
    weights: &EnergyWeights,
) -> Result<EnergyBreakdown> {
    if input.width() != stack.width() || input.height() != stack.height() {
        return Err(Error::DimensionMismatch("input and alpha stack differ in size".into()));
    }
    let data = energy_data(input, &composite(stack, palette)?)?;
    let smooth = energy_smooth(stack);
    let sparse = energy_sparse(stack);
    Ok(EnergyBreakdown {
        data,
        smooth,
        sparse,
        total: weights.gamma_data * data + weights.gamma_smooth * smooth + weights.gamma_sparse * sparse,
    })
}
