//! Porter-Duff "over" composition of an alpha layer stack onto a background,
//! plus the affine views of the composite that the decomposer optimizes over.

use crate::error::{Error, Result};
use crate::raster::{ChannelMap, RasterImage};

pub type Rgb = [f64; 3];

/// Layer colors `c_0 ..= c_L`; `c_0` is the background (primer) color.
#[derive(Debug, Clone, PartialEq)]
pub struct Palette {
    colors: Vec<Rgb>,
}

impl Palette {
    pub fn new(colors: Vec<Rgb>) -> Result<Self> {
        if colors.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "palette needs at least 2 colors, got {}",
                colors.len()
            )));
        }
        for c in &colors {
            if c.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::OutOfRange(format!("palette color {c:?}")));
            }
        }
        Ok(Self { colors })
    }

    pub fn colors(&self) -> &[Rgb] {
        &self.colors
    }

    pub fn background(&self) -> Rgb {
        self.colors[0]
    }

    /// Number of layers this palette serves (`len - 1`).
    pub fn layer_count(&self) -> usize {
        self.colors.len() - 1
    }
}

/// Alpha layers ordered bottom to top. Layer `l` (1-based, as in the
/// composition recursion) is stored at `layers()[l - 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaStack {
    layers: Vec<ChannelMap>,
}

impl AlphaStack {
    pub fn new(layers: Vec<ChannelMap>) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::InvalidParameter("alpha stack needs at least one layer".into()))?;
        if layers.iter().any(|m| !m.same_shape(first)) {
            return Err(Error::DimensionMismatch("alpha layers differ in size".into()));
        }
        Ok(Self { layers })
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn width(&self) -> usize {
        self.layers[0].width()
    }

    pub fn height(&self) -> usize {
        self.layers[0].height()
    }

    pub fn pixel_count(&self) -> usize {
        self.layers[0].len()
    }

    pub fn layers(&self) -> &[ChannelMap] {
        &self.layers
    }

    /// 1-based layer access.
    pub fn layer(&self, l: usize) -> &ChannelMap {
        &self.layers[l - 1]
    }

    pub(crate) fn replace(&mut self, l: usize, map: ChannelMap) {
        debug_assert!(map.same_shape(&self.layers[0]));
        self.layers[l - 1] = map;
    }

    pub fn into_layers(self) -> Vec<ChannelMap> {
        self.layers
    }
}

/// `(1 - alpha) * below + alpha * layer_color`, per channel.
#[inline]
pub fn over(below: Rgb, layer_color: Rgb, alpha: f64) -> Rgb {
    let keep = 1.0 - alpha;
    [
        keep * below[0] + alpha * layer_color[0],
        keep * below[1] + alpha * layer_color[1],
        keep * below[2] + alpha * layer_color[2],
    ]
}

fn check_palette(stack: &AlphaStack, palette: &Palette) -> Result<()> {
    if palette.colors.len() != stack.depth() + 1 {
        return Err(Error::DimensionMismatch(format!(
            "{} layers need {} palette colors, got {}",
            stack.depth(),
            stack.depth() + 1,
            palette.colors.len()
        )));
    }
    Ok(())
}

/// Composite pixel `k` through layers `1..=upto` starting from `start`.
#[inline]
fn composite_pixel(stack: &AlphaStack, colors: &[Rgb], k: usize, start: Rgb, from: usize, upto: usize) -> Rgb {
    let mut c = start;
    for l in from..=upto {
        c = over(c, colors[l], stack.layers[l - 1].values()[k]);
    }
    c
}

/// Composite the whole stack over the background color.
pub fn composite(stack: &AlphaStack, palette: &Palette) -> Result<RasterImage> {
    check_palette(stack, palette)?;
    let colors = palette.colors();
    let depth = stack.depth();
    let pixels = (0..stack.pixel_count())
        .map(|k| composite_pixel(stack, colors, k, colors[0], 1, depth))
        .collect();
    Ok(RasterImage::from_clamped(stack.width(), stack.height(), pixels))
}

/// Per-pixel affine form of the composite in one layer's alpha:
/// `composite[k] = slope[k] * alpha_l[k] + intercept[k]`.
#[derive(Debug, Clone)]
pub struct LayerAffine {
    pub slope: Vec<Rgb>,
    pub intercept: Vec<Rgb>,
}

/// Expose the composite as an affine function of layer `l`'s alphas with
/// every other variable held fixed.
///
/// With `below` the composite through layer `l - 1`, `T` the transmittance
/// `prod_{j>l} (1 - alpha_j)` and `S` the color contributed by the layers
/// above `l`, the slope is `T (c_l - below)` and the intercept is
/// `T below + S`.
pub fn layer_affine_decomposition(stack: &AlphaStack, palette: &Palette, l: usize) -> Result<LayerAffine> {
    check_palette(stack, palette)?;
    let depth = stack.depth();
    if l == 0 || l > depth {
        return Err(Error::InvalidParameter(format!("layer index {l} outside 1..={depth}")));
    }
    let colors = palette.colors();
    let n = stack.pixel_count();
    let mut slope = Vec::with_capacity(n);
    let mut intercept = Vec::with_capacity(n);
    for k in 0..n {
        let below = composite_pixel(stack, colors, k, colors[0], 1, l - 1);
        let mut transmit = 1.0;
        let mut above = [0.0; 3];
        for j in l + 1..=depth {
            let a = stack.layers[j - 1].values()[k];
            transmit *= 1.0 - a;
            above = over(above, colors[j], a);
        }
        let cl = colors[l];
        slope.push([
            transmit * (cl[0] - below[0]),
            transmit * (cl[1] - below[1]),
            transmit * (cl[2] - below[2]),
        ]);
        intercept.push([
            transmit * below[0] + above[0],
            transmit * below[1] + above[1],
            transmit * below[2] + above[2],
        ]);
    }
    Ok(LayerAffine { slope, intercept })
}

/// Per-pixel weights `w_0 ..= w_L` expressing the composite as a convex
/// combination of palette colors: `w_i = alpha_i * prod_{j>i} (1 - alpha_j)`
/// with `alpha_0 = 1`.
pub fn palette_weight_maps(stack: &AlphaStack) -> Vec<ChannelMap> {
    let depth = stack.depth();
    let n = stack.pixel_count();
    let mut weights = vec![vec![0.0; n]; depth + 1];
    for k in 0..n {
        let mut transmit = 1.0;
        for i in (0..=depth).rev() {
            let a = if i == 0 { 1.0 } else { stack.layers[i - 1].values()[k] };
            weights[i][k] = a * transmit;
            transmit *= 1.0 - a;
        }
    }
    weights
        .into_iter()
        .map(|w| ChannelMap::from_clamped(stack.width(), stack.height(), w))
        .collect()
}
