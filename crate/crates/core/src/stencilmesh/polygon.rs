//! Planar ring helpers shared by plate construction and triangulation.

use robust::{orient2d, Coord};

pub type P2 = [f64; 2];

/// Positive when `a -> b -> c` turns left (counter-clockwise), exact sign.
#[inline]
pub fn orient(a: P2, b: P2, c: P2) -> f64 {
    orient2d(
        Coord { x: a[0], y: a[1] },
        Coord { x: b[0], y: b[1] },
        Coord { x: c[0], y: c[1] },
    )
}

/// Shoelace signed area; positive for counter-clockwise rings.
pub fn signed_area(ring: &[P2]) -> f64 {
    let n = ring.len();
    let mut twice = 0.0;
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        twice += a[0] * b[1] - b[0] * a[1];
    }
    0.5 * twice
}

/// Regular `segments`-gon inscribed in the circle of `radius` about
/// `center`, counter-clockwise, first vertex on the +x axis.
pub fn regular_polygon(center: P2, radius: f64, segments: usize) -> Vec<P2> {
    (0..segments)
        .map(|j| {
            let t = std::f64::consts::TAU * j as f64 / segments as f64;
            [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
        })
        .collect()
}

/// Drop repeated vertices, a closing duplicate and exactly collinear
/// vertices. Returns an empty ring if fewer than three vertices survive.
pub fn clean_ring(ring: &[P2]) -> Vec<P2> {
    let mut out: Vec<P2> = Vec::with_capacity(ring.len());
    for &p in ring {
        if out.last() != Some(&p) {
            out.push(p);
        }
    }
    while out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    loop {
        let n = out.len();
        if n < 3 {
            return Vec::new();
        }
        let drop = (0..n).find(|&i| orient(out[(i + n - 1) % n], out[i], out[(i + 1) % n]) == 0.0);
        match drop {
            Some(i) => {
                out.remove(i);
            }
            None => return out,
        }
    }
}

/// Even-odd point-in-ring test.
pub fn point_in_ring(p: P2, ring: &[P2]) -> bool {
    let n = ring.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (ring[i], ring[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) && p[0] < (b[0] - a[0]) * (p[1] - a[1]) / (b[1] - a[1]) + a[0] {
            inside = !inside;
        }
        j = i;
    }
    inside
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn area_and_orientation() {
        let sq = [[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]];
        assert_eq!(signed_area(&sq), 2.0);
        let mut rev = sq;
        rev.reverse();
        assert_eq!(signed_area(&rev), -2.0);
        assert!(orient([0.0, 0.0], [1.0, 0.0], [1.0, 1.0]) > 0.0);
    }

    #[test]
    fn regular_polygon_area() {
        let n = 32;
        let ring = regular_polygon([1.0, 2.0], 0.5, n);
        let exact = 0.5 * n as f64 * 0.25 * (std::f64::consts::TAU / n as f64).sin();
        assert!((signed_area(&ring) - exact).abs() < 1e-14);
    }

    #[test]
    fn cleaning_removes_collinear_and_duplicates() {
        let ring = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0], [0.0, 0.0]];
        assert_eq!(clean_ring(&ring), vec![[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]]);
        assert!(clean_ring(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]).is_empty());
    }

    #[test]
    fn containment() {
        let sq = [[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]];
        assert!(point_in_ring([1.0, 1.0], &sq));
        assert!(!point_in_ring([3.0, 1.0], &sq));
    }
}
