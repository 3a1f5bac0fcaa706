use nalgebra::{DMatrix, SymmetricEigen};

use super::energy::energy_data;
use super::EnergyWeights;
use crate::compositor::{composite, palette_weight_maps, AlphaStack, Palette, Rgb};
use crate::error::{Error, Result};
use crate::raster::RasterImage;

/// Relative size below which a weight column or eigenvalue counts as zero.
const SINGULAR_RTOL: f64 = 1e-12;

/// Distance from a box face within which a palette channel is put on it.
const SNAP: f64 = 1e-14;

/// Minimum-norm correction `delta` solving `M delta = r` through the
/// pseudo-inverse of the symmetric PSD matrix `M`.
fn pinv_solve(m: &DMatrix<f64>, r: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let top = eig.eigenvalues.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    let mut out = DMatrix::zeros(r.nrows(), r.ncols());
    if top == 0.0 {
        return out;
    }
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda <= SINGULAR_RTOL * top {
            continue;
        }
        let v = eig.eigenvectors.column(i);
        let proj = v.transpose() * r;
        out += (v * proj) / lambda;
    }
    out
}

/// Jointly re-fit all palette colors by least squares on the data term with
/// the alphas fixed.
///
/// Each channel is an independent least-squares problem over the unit box,
/// solved exactly by an active-set method started from the incumbent. Colors
/// with no visible weight anywhere keep their incumbent value.
pub fn solve_palette(
    input: &RasterImage,
    stack: &AlphaStack,
    palette_in: &Palette,
    _weights: &EnergyWeights,
) -> Result<Palette> {
    if palette_in.colors().len() != stack.depth() + 1 {
        return Err(Error::DimensionMismatch("palette length does not match stack depth".into()));
    }
    if input.width() != stack.width() || input.height() != stack.height() {
        return Err(Error::DimensionMismatch("input and alpha stack differ in size".into()));
    }
    let n = palette_in.colors().len();
    let maps = palette_weight_maps(stack);
    let pixels = input.pixels();

    let mut normal = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DMatrix::<f64>::zeros(n, 3);
    for k in 0..pixels.len() {
        for i in 0..n {
            let wi = maps[i].values()[k];
            if wi == 0.0 {
                continue;
            }
            for j in i..n {
                normal[(i, j)] += wi * maps[j].values()[k];
            }
            for c in 0..3 {
                rhs[(i, c)] += wi * pixels[k][c];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            normal[(i, j)] = normal[(j, i)];
        }
    }

    let max_diag = (0..n).map(|i| normal[(i, i)]).fold(0.0, f64::max);
    let visible: Vec<usize> = (0..n).filter(|&i| normal[(i, i)] > SINGULAR_RTOL * max_diag).collect();

    let mut fitted: Vec<Rgb> = palette_in.colors().to_vec();
    for c in 0..3 {
        let x0: Vec<f64> = visible.iter().map(|&i| palette_in.colors()[i][c]).collect();
        let m = DMatrix::from_fn(visible.len(), visible.len(), |a, b| normal[(visible[a], visible[b])]);
        let b: Vec<f64> = visible.iter().map(|&i| rhs[(i, c)]).collect();
        let x = box_least_squares(&m, &b, x0);
        for (a, &i) in visible.iter().enumerate() {
            if !x[a].is_finite() {
                return Err(Error::SolverFailure(format!("non-finite palette color {i}")));
            }
            fitted[i][c] = x[a];
        }
    }

    // Guard against round-off: E_data separates by channel, so each channel
    // can fall back on its own.
    let current = channel_data_energy(input, stack, palette_in)?;
    let candidate_palette = Palette::new(fitted.clone())?;
    let proposed = channel_data_energy(input, stack, &candidate_palette)?;
    for c in 0..3 {
        if proposed[c] > current[c] {
            for (i, color) in fitted.iter_mut().enumerate() {
                color[c] = palette_in.colors()[i][c];
            }
        }
    }
    let out = Palette::new(fitted)?;
    debug_assert!(
        energy_data(input, &composite(stack, &out)?)? <= energy_data(input, &composite(stack, palette_in)?)? * (1.0 + 1e-12) + 1e-300
    );
    Ok(out)
}

fn channel_data_energy(input: &RasterImage, stack: &AlphaStack, palette: &Palette) -> Result<[f64; 3]> {
    let img = composite(stack, palette)?;
    let mut e = [0.0; 3];
    for (x, y) in input.pixels().iter().zip(img.pixels()) {
        for c in 0..3 {
            e[c] += (x[c] - y[c]).powi(2);
        }
    }
    Ok(e)
}

/// Minimize `0.5 x'Mx - b'x` over `[0, 1]^n` for symmetric PSD `M` with `b` in
/// its range, starting from feasible `x`.
///
/// Each pass takes a pseudo-inverse Newton step on the free variables and
/// cuts it at the first bound hit. Bound variables whose gradient points
/// into the box are freed; if the step would push one of them out it is
/// pinned again before retrying.
fn box_least_squares(m: &DMatrix<f64>, b: &[f64], mut x: Vec<f64>) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return x;
    }
    let scale = (0..n).map(|i| m[(i, i)]).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let gtol = 1e-14 * scale;
    let grad = |x: &[f64]| -> Vec<f64> { (0..n).map(|i| (0..n).map(|j| m[(i, j)] * x[j]).sum::<f64>() - b[i]).collect() };

    for _ in 0..(20 * n + 20) {
        let g = grad(&x);
        let mut free: Vec<usize> = (0..n)
            .filter(|&i| !((x[i] <= 0.0 && g[i] >= -gtol) || (x[i] >= 1.0 && g[i] <= gtol)))
            .collect();
        let mut stepped = false;
        while !free.is_empty() {
            let mff = DMatrix::from_fn(free.len(), free.len(), |a, c| m[(free[a], free[c])]);
            let rhs = DMatrix::from_fn(free.len(), 1, |a, _| -g[free[a]]);
            let d = pinv_solve(&mff, &rhs);
            let blocked: Vec<usize> = (0..free.len())
                .filter(|&a| {
                    let i = free[a];
                    (x[i] <= 0.0 && d[(a, 0)] < 0.0) || (x[i] >= 1.0 && d[(a, 0)] > 0.0)
                })
                .collect();
            if !blocked.is_empty() {
                free = free.iter().enumerate().filter(|(a, _)| !blocked.contains(a)).map(|(_, &i)| i).collect();
                continue;
            }
            let mut t = 1.0_f64;
            for (a, &i) in free.iter().enumerate() {
                let di = d[(a, 0)];
                if di > 0.0 {
                    t = t.min((1.0 - x[i]) / di);
                } else if di < 0.0 {
                    t = t.min(-x[i] / di);
                }
            }
            let mut moved = false;
            for (a, &i) in free.iter().enumerate() {
                let mut next = (x[i] + t * d[(a, 0)]).clamp(0.0, 1.0);
                if next < SNAP {
                    next = 0.0;
                } else if next > 1.0 - SNAP {
                    next = 1.0;
                }
                moved |= next != x[i];
                x[i] = next;
            }
            stepped = moved;
            break;
        }
        if !stepped {
            break;
        }
    }
    x
}
