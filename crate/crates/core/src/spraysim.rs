//! Spray-paint prediction through a stencil.
//!
//! Each dot deposits an unnormalized Gaussian of peak `prefactor` whose
//! variance grows with nozzle height: `sigma^2 = r^2 (1 + h) / 4`. Coverage
//! from several dots combines as a complementary probability,
//! `I = 1 - prod_i (1 - min(N_i, 1))`, so intensity never exceeds one.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compositor::{composite, AlphaStack};
use crate::decomposer::DecompositionResult;
use crate::error::{Error, Result};
use crate::raster::{ChannelMap, RasterImage};
use crate::stippler::Stippling;

/// Footprints narrower than this (in pixels) are undersampled by the grid.
const SUB_PIXEL_SIGMA: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SprayParams {
    /// Hole radius in cm.
    pub radius_cm: f64,
    /// Nozzle height above the stencil (dimensionless multiplier).
    pub height: f64,
    /// Peak of each dot's Gaussian; a proxy for spraying time.
    pub prefactor: f64,
    /// cm per pixel.
    pub scale: f64,
    /// Contributions beyond this many standard deviations are dropped.
    pub truncation_sigmas: f64,
}

impl Default for SprayParams {
    fn default() -> Self {
        Self {
            radius_cm: 0.05,
            height: 7.0,
            prefactor: 1.0,
            scale: 0.01,
            truncation_sigmas: 4.0,
        }
    }
}

impl SprayParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.radius_cm > 0.0) || !self.radius_cm.is_finite() {
            return bad("radius_cm must be > 0");
        }
        if !(self.height >= 0.0) || !self.height.is_finite() {
            return bad("height must be >= 0");
        }
        if !(self.prefactor >= 0.0) || !self.prefactor.is_finite() {
            return bad("prefactor must be >= 0");
        }
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return bad("scale must be > 0");
        }
        if !(self.truncation_sigmas >= 3.0) {
            return bad("truncation_sigmas must be >= 3");
        }
        Ok(())
    }
}

/// Standard deviation of one dot's deposit, in cm.
pub fn dot_sigma(params: &SprayParams) -> f64 {
    (0.25 * params.radius_cm * params.radius_cm * (1.0 + params.height)).sqrt()
}

/// Simulated opacity of one layer sprayed through `stip`, sampled at pixel
/// centers of the stippling's canvas.
pub fn simulate_alpha(stip: &Stippling, params: &SprayParams) -> Result<ChannelMap> {
    params.validate()?;
    stip.validate()?;
    if (stip.scale - params.scale).abs() > 1e-12 * params.scale {
        log::warn!(
            "stippling scale {} cm/px overrides spray scale {} cm/px",
            stip.scale,
            params.scale
        );
    }
    let (width, height) = (stip.canvas_width, stip.canvas_height);
    let sigma_px = dot_sigma(params) / stip.scale;
    if sigma_px < SUB_PIXEL_SIGMA {
        log::warn!("sub-pixel footprint: sigma = {sigma_px:.4} px");
    }
    let reach = params.truncation_sigmas * sigma_px;
    let reach2 = reach * reach;
    let inv_two_var = 1.0 / (2.0 * sigma_px * sigma_px);
    let peak = params.prefactor;

    // dots sorted by y so each row only visits dots within reach
    let mut dots = stip.points.clone();
    dots.sort_by(|a, b| a[1].total_cmp(&b[1]).then(a[0].total_cmp(&b[0])));

    let mut values = vec![0.0; width * height];
    values.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
        let cy = y as f64 + 0.5;
        // one pixel of slack on every bound; the distance test decides
        let lo = dots.partition_point(|d| d[1] < cy - reach - 1.0);
        let hi = dots.partition_point(|d| d[1] <= cy + reach + 1.0);
        let mut log_keep = vec![0.0f64; width];
        let mut saturated = vec![false; width];
        for d in &dots[lo..hi] {
            let dy2 = (cy - d[1]).powi(2);
            let span = (reach2 - dy2).max(0.0).sqrt();
            let x0 = ((d[0] - span - 1.5).ceil().max(0.0)) as usize;
            let x1 = if span.is_finite() {
                ((d[0] + span + 0.5).floor().min(width as f64 - 1.0)) as isize
            } else {
                width as isize - 1
            };
            if x1 < 0 {
                continue;
            }
            for x in x0..=x1 as usize {
                let d2 = (x as f64 + 0.5 - d[0]).powi(2) + dy2;
                if d2 > reach2 {
                    continue;
                }
                let n = peak * (-d2 * inv_two_var).exp();
                if n >= 1.0 {
                    saturated[x] = true;
                } else {
                    log_keep[x] += (-n).ln_1p();
                }
            }
        }
        for x in 0..width {
            row[x] = if saturated[x] { 1.0 } else { -log_keep[x].exp_m1() };
        }
    });
    Ok(ChannelMap::from_clamped(width, height, values))
}

/// Full-color prediction: every alpha layer replaced by its simulated
/// spray, composited over the background color.
pub fn simulate_composite(
    decomp: &DecompositionResult,
    stipplings: &[Stippling],
    params: &SprayParams,
) -> Result<RasterImage> {
    let depth = decomp.stack.depth();
    if stipplings.len() != depth {
        return Err(Error::DimensionMismatch(format!(
            "{depth} layers but {} stipplings",
            stipplings.len()
        )));
    }
    let (w, h) = (decomp.stack.width(), decomp.stack.height());
    let layers = stipplings
        .iter()
        .map(|s| {
            if s.canvas_width != w || s.canvas_height != h {
                return Err(Error::DimensionMismatch(format!(
                    "stippling canvas {}x{} vs layers {w}x{h}",
                    s.canvas_width, s.canvas_height
                )));
            }
            simulate_alpha(s, params)
        })
        .collect::<Result<Vec<_>>>()?;
    composite(&AlphaStack::new(layers)?, &decomp.palette)
}

/// Anisotropic total variation: sum of absolute differences between
/// horizontally and vertically adjacent pixels.
pub fn total_variation(map: &ChannelMap) -> f64 {
    let (w, h) = (map.width(), map.height());
    let v = map.values();
    let mut tv = 0.0;
    for y in 0..h {
        for x in 0..w {
            let a = v[y * w + x];
            if x + 1 < w {
                tv += (v[y * w + x + 1] - a).abs();
            }
            if y + 1 < h {
                tv += (v[(y + 1) * w + x] - a).abs();
            }
        }
    }
    tv
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn params(prefactor: f64) -> SprayParams {
        SprayParams {
            prefactor,
            ..Default::default()
        }
    }

    /// Literal evaluation: direct product, no truncation.
    fn direct(stip: &Stippling, p: &SprayParams) -> Vec<f64> {
        let sigma = dot_sigma(p) / stip.scale;
        let mut out = Vec::new();
        for y in 0..stip.canvas_height {
            for x in 0..stip.canvas_width {
                let c = [x as f64 + 0.5, y as f64 + 0.5];
                let mut keep = 1.0;
                for d in &stip.points {
                    let d2 = (c[0] - d[0]).powi(2) + (c[1] - d[1]).powi(2);
                    let n = p.prefactor * (-d2 / (2.0 * sigma * sigma)).exp();
                    keep *= 1.0 - n.min(1.0);
                }
                out.push(1.0 - keep);
            }
        }
        out
    }

    #[test]
    fn sigma_examples() {
        let mut p = SprayParams {
            height: 15.0,
            ..Default::default()
        };
        assert!((dot_sigma(&p) - 0.1).abs() < 1e-15);
        p.height = 0.0;
        assert!((dot_sigma(&p) - 0.025).abs() < 1e-15);
        p.height = 3.0;
        assert!((dot_sigma(&p) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn empty_stippling_paints_nothing() {
        let st = Stippling::empty(8, 6, 0.01).unwrap();
        let m = simulate_alpha(&st, &params(1.0)).unwrap();
        assert!(m.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn one_and_two_dots_at_center() {
        let one = Stippling::new(21, 21, 0.01, vec![[10.5, 10.5]]).unwrap();
        let m = simulate_alpha(&one, &params(0.5)).unwrap();
        assert!((m.get(10, 10) - 0.5).abs() < 1e-15);
        let two = Stippling::new(21, 21, 0.01, vec![[10.5, 10.5], [10.5, 10.5]]).unwrap();
        let m = simulate_alpha(&two, &params(0.5)).unwrap();
        assert!((m.get(10, 10) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn clamp_region_saturates() {
        let p = params(1.5);
        let st = Stippling::new(41, 41, 0.01, vec![[20.5, 20.5]]).unwrap();
        let m = simulate_alpha(&st, &p).unwrap();
        let sigma = dot_sigma(&p) / 0.01;
        for y in 0..41 {
            for x in 0..41 {
                let d2 = (x as f64 - 20.0).powi(2) + (y as f64 - 20.0).powi(2);
                if 1.5 * (-d2 / (2.0 * sigma * sigma)).exp() >= 1.0 {
                    assert_eq!(m.get(x, y), 1.0);
                } else {
                    assert!(m.get(x, y) < 1.0);
                }
            }
        }
    }

    #[test]
    fn log_space_matches_direct_product() {
        let mut rng = crate::seed::rng(77);
        for _ in 0..20 {
            let n = rng.random_range(1..=5);
            let pts = (0..n).map(|_| [rng.random_range(0.0..16.0), rng.random_range(0.0..16.0)]).collect();
            let st = Stippling::new(16, 16, 0.01, pts).unwrap();
            let p = SprayParams {
                prefactor: rng.random_range(0.0..1.2),
                height: rng.random_range(0.0..15.0),
                truncation_sigmas: f64::INFINITY,
                ..Default::default()
            };
            let got = simulate_alpha(&st, &p).unwrap();
            for (a, b) in got.values().iter().zip(direct(&st, &p)) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn truncation_error_is_small() {
        let mut rng = crate::seed::rng(78);
        for _ in 0..5 {
            let pts = (0..5).map(|_| [rng.random_range(0.0..24.0), rng.random_range(0.0..24.0)]).collect();
            let st = Stippling::new(24, 24, 0.005, pts).unwrap();
            let p = SprayParams::default();
            let cut = simulate_alpha(&st, &p).unwrap();
            let full = simulate_alpha(&st, &SprayParams { truncation_sigmas: f64::INFINITY, ..p }).unwrap();
            for (a, b) in cut.values().iter().zip(full.values()) {
                assert!((a - b).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn single_dot_is_radially_symmetric() {
        let st = Stippling::new(31, 31, 0.01, vec![[15.5, 15.5]]).unwrap();
        let m = simulate_alpha(&st, &params(0.9)).unwrap();
        for y in 0..31 {
            for x in 0..31 {
                // mirror and transpose keep the distance exactly
                let v = m.get(x, y);
                assert_eq!(v, m.get(30 - x, y));
                assert_eq!(v, m.get(x, 30 - y));
                assert_eq!(v, m.get(y, x));
            }
        }
    }

    #[test]
    fn monotone_in_dots_and_time() {
        let mut rng = crate::seed::rng(79);
        for _ in 0..10 {
            let pts: Vec<[f64; 2]> = (0..6).map(|_| [rng.random_range(0.0..20.0), rng.random_range(0.0..20.0)]).collect();
            let fewer = Stippling::new(20, 20, 0.01, pts[..5].to_vec()).unwrap();
            let more = Stippling::new(20, 20, 0.01, pts).unwrap();
            let a = rng.random_range(0.0..2.0);
            let m1 = simulate_alpha(&fewer, &params(a)).unwrap();
            let m2 = simulate_alpha(&more, &params(a)).unwrap();
            let m3 = simulate_alpha(&more, &params(a + 0.3)).unwrap();
            for k in 0..400 {
                assert!(m2.values()[k] >= m1.values()[k]);
                assert!(m3.values()[k] >= m2.values()[k]);
            }
        }
    }

    #[test]
    fn params_validation() {
        assert!(SprayParams { truncation_sigmas: 2.0, ..Default::default() }.validate().is_err());
        assert!(SprayParams { radius_cm: 0.0, ..Default::default() }.validate().is_err());
        assert!(SprayParams { prefactor: -1.0, ..Default::default() }.validate().is_err());
        assert!(SprayParams::default().validate().is_ok());
    }

    #[test]
    fn total_variation_of_step() {
        let m = ChannelMap::new(3, 2, vec![0.0, 1.0, 1.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(total_variation(&m), 2.0);
    }
}
