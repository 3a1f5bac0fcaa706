use rand::Rng;

use crate::compositor::{AlphaStack, Palette, Rgb};
use crate::error::{Error, Result};
use crate::raster::{ChannelMap, RasterImage};

const MAX_ITERS: usize = 100;
const MOVE_TOL: f64 = 1e-6;

fn dist2(a: &Rgb, b: &Rgb) -> f64 {
    (0..3).map(|c| (a[c] - b[c]).powi(2)).sum()
}

/// Index of the nearest center; ties go to the lowest index.
fn nearest(p: &Rgb, centers: &[Rgb]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centers.iter().enumerate() {
        let d = dist2(p, c);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

fn seed_plus_plus(points: &[Rgb], k: usize, rng: &mut impl Rng) -> Vec<Rgb> {
    let mut centers = Vec::with_capacity(k);
    centers.push(points[rng.random_range(0..points.len())]);
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = d2.iter().rposition(|&d| d > 0.0).unwrap_or(0);
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            points[pick]
        } else {
            centers[0]
        };
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, &next));
        }
        centers.push(next);
    }
    centers
}

fn count_distinct(points: &[Rgb], cap: usize) -> usize {
    let mut seen: Vec<[u64; 3]> = Vec::new();
    for p in points {
        let key = p.map(f64::to_bits);
        if !seen.contains(&key) {
            seen.push(key);
            if seen.len() >= cap {
                break;
            }
        }
    }
    seen.len()
}

/// K-means initialization with `layers + 1` clusters in RGB.
///
/// The most populous cluster becomes the background color; the rest become
/// layers 1..=L in descending population order. Alphas start hard: 1 on the
/// layer whose color is nearest, 0 elsewhere (background pixels are all 0).
pub fn init_kmeans(input: &RasterImage, layers: usize, rng_seed: u64) -> Result<(AlphaStack, Palette)> {
    if layers == 0 {
        return Err(Error::InvalidParameter("layer count must be >= 1".into()));
    }
    let k = layers + 1;
    let points = input.pixels();
    if count_distinct(points, k) < k {
        log::warn!("image has fewer than {k} distinct colors; duplicate palette entries will be produced");
    }

    let mut rng = crate::seed::rng(rng_seed);
    let mut centers = seed_plus_plus(points, k, &mut rng);
    let mut assignment = vec![0usize; points.len()];
    for _ in 0..MAX_ITERS {
        for (a, p) in assignment.iter_mut().zip(points) {
            *a = nearest(p, &centers);
        }
        let mut sums = vec![[0.0; 3]; k];
        let mut counts = vec![0usize; k];
        for (&a, p) in assignment.iter().zip(points) {
            counts[a] += 1;
            for c in 0..3 {
                sums[a][c] += p[c];
            }
        }
        let mut moved: f64 = 0.0;
        for i in 0..k {
            if counts[i] == 0 {
                continue;
            }
            let mean = sums[i].map(|s| (s / counts[i] as f64).clamp(0.0, 1.0));
            moved = moved.max(dist2(&mean, &centers[i]).sqrt());
            centers[i] = mean;
        }
        if moved < MOVE_TOL {
            break;
        }
    }
    for (a, p) in assignment.iter_mut().zip(points) {
        *a = nearest(p, &centers);
    }
    let mut counts = vec![0usize; k];
    for &a in &assignment {
        counts[a] += 1;
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]));
    let colors: Vec<Rgb> = order.iter().map(|&i| centers[i]).collect();

    let n = points.len();
    let mut alphas = vec![vec![0.0; n]; layers];
    for (px, p) in points.iter().enumerate() {
        let idx = nearest(p, &colors);
        if idx > 0 {
            alphas[idx - 1][px] = 1.0;
        }
    }
    let stack = AlphaStack::new(
        alphas
            .into_iter()
            .map(|v| ChannelMap::new(input.width(), input.height(), v))
            .collect::<Result<_>>()?,
    )?;
    Ok((stack, Palette::new(colors)?))
}
