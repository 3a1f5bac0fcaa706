use geo::{unary_union, BooleanOps, Coord, LineString, Polygon};

use super::polygon::{clean_ring, point_in_ring, regular_polygon, signed_area, P2};
use super::triangulate::triangulate;
use super::{push_side_wall, PlateParams, TriangleMesh};
use crate::error::{Error, Result};
use crate::stippler::Stippling;

/// One connected piece of plate material: an outer ring (counter-clockwise)
/// and its holes (clockwise).
#[derive(Debug, Clone)]
pub(crate) struct Region {
    pub outer: Vec<P2>,
    pub holes: Vec<Vec<P2>>,
}

/// Plate outline `[x0, y0, x1, y1]` in cm: the canvas extent plus margin.
pub fn plate_outline(stip: &Stippling, params: &PlateParams) -> [f64; 4] {
    let [w, h] = stip.physical_extent();
    let m = params.margin_cm;
    [-m, -m, w + m, h + m]
}

fn rect_ring(r: [f64; 4]) -> Vec<P2> {
    vec![[r[0], r[1]], [r[2], r[1]], [r[2], r[3]], [r[0], r[3]]]
}

fn to_geo(ring: &[P2]) -> Polygon<f64> {
    Polygon::new(LineString::from(ring.iter().map(|p| Coord { x: p[0], y: p[1] }).collect::<Vec<_>>()), vec![])
}

fn from_geo(ls: &LineString<f64>, ccw: bool) -> Vec<P2> {
    let mut ring = clean_ring(&ls.0.iter().map(|c| [c.x, c.y]).collect::<Vec<_>>());
    if !ring.is_empty() && (signed_area(&ring) > 0.0) != ccw {
        ring.reverse();
    }
    ring
}

/// Hole centers with a neighbor closer than two radii, or whose circle
/// reaches the outline, need boolean processing.
fn needs_boolean(centers: &[P2], r: f64, outline: [f64; 4]) -> Vec<bool> {
    let n = centers.len();
    let reach = 2.0 * r * (1.0 + 1e-9);
    let mut flag: Vec<bool> = centers
        .iter()
        .map(|c| !(c[0] - r > outline[0] && c[0] + r < outline[2] && c[1] - r > outline[1] && c[1] + r < outline[3]))
        .collect();
    if n < 2 {
        return flag;
    }
    let cols = (((outline[2] - outline[0]) / reach) as usize + 1).min(4096);
    let rows = (((outline[3] - outline[1]) / reach) as usize + 1).min(4096);
    let cell_of = |p: P2| -> (usize, usize) {
        let cx = (((p[0] - outline[0]) / reach).max(0.0) as usize).min(cols - 1);
        let cy = (((p[1] - outline[1]) / reach).max(0.0) as usize).min(rows - 1);
        (cx, cy)
    };
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); cols * rows];
    for (i, &c) in centers.iter().enumerate() {
        let (cx, cy) = cell_of(c);
        buckets[cy * cols + cx].push(i);
    }
    for (i, &c) in centers.iter().enumerate() {
        let (cx, cy) = cell_of(c);
        for ny in cy.saturating_sub(1)..=(cy + 1).min(rows - 1) {
            for nx in cx.saturating_sub(1)..=(cx + 1).min(cols - 1) {
                for &j in &buckets[ny * cols + nx] {
                    if j != i {
                        let d2 = (centers[j][0] - c[0]).powi(2) + (centers[j][1] - c[1]).powi(2);
                        if d2 <= reach * reach {
                            flag[i] = true;
                        }
                    }
                }
            }
        }
    }
    flag
}

/// Planar plate material after cutting every hole.
pub(crate) fn plate_regions(stip: &Stippling, params: &PlateParams) -> Result<Vec<Region>> {
    stip.validate()?;
    params.validate()?;
    let outline = plate_outline(stip, params);
    let r = params.hole_radius_cm;
    let centers: Vec<P2> = stip.points.iter().map(|&p| stip.physical(p)).collect();
    let complex = needs_boolean(&centers, r, outline);

    let boolean: Vec<Polygon<f64>> = centers
        .iter()
        .zip(&complex)
        .filter(|(_, &c)| c)
        .map(|(&c, _)| to_geo(&regular_polygon(c, r, params.hole_segments)))
        .collect();
    let mut regions = if boolean.is_empty() {
        vec![Region {
            outer: rect_ring(outline),
            holes: Vec::new(),
        }]
    } else {
        let cut = unary_union(boolean.iter());
        let material = to_geo(&rect_ring(outline)).difference(&cut);
        let mut regions = Vec::new();
        for poly in &material {
            let outer = from_geo(poly.exterior(), true);
            if outer.is_empty() {
                continue;
            }
            let holes = poly.interiors().iter().map(|h| from_geo(h, false)).filter(|h| !h.is_empty()).collect();
            regions.push(Region { outer, holes });
        }
        regions
    };
    if regions.is_empty() {
        return Err(Error::PlateFullyEroded);
    }

    for (&c, _) in centers.iter().zip(&complex).filter(|(_, &c)| !c) {
        let target = regions
            .iter_mut()
            .find(|reg| point_in_ring(c, &reg.outer) && !reg.holes.iter().any(|h| point_in_ring(c, h)))
            .ok_or_else(|| Error::Geometry(format!("hole at {c:?} lies outside the plate material")))?;
        let mut ring = regular_polygon(c, r, params.hole_segments);
        ring.reverse();
        target.holes.push(ring);
    }
    Ok(regions)
}

/// Extrude the plate from z = 0 to z = thickness with one through-hole per
/// dot. Overlapping or outline-crossing holes are merged first.
pub fn build_stencil_plate(stip: &Stippling, params: &PlateParams) -> Result<TriangleMesh> {
    let regions = plate_regions(stip, params)?;
    let t = params.thickness_cm;
    let mut mesh = TriangleMesh::default();
    for reg in &regions {
        let mut coords: Vec<P2> = Vec::new();
        let mut rings: Vec<Vec<usize>> = Vec::with_capacity(reg.holes.len() + 1);
        for ring in std::iter::once(&reg.outer).chain(&reg.holes) {
            let base = coords.len();
            coords.extend_from_slice(ring);
            rings.push((base..base + ring.len()).collect());
        }
        let tris = triangulate(&coords, &rings[0], &rings[1..])?;

        // vertex 2k at z = 0, 2k + 1 at z = thickness
        let base = mesh.vertices.len();
        for p in &coords {
            mesh.vertices.push([p[0], p[1], 0.0]);
            mesh.vertices.push([p[0], p[1], t]);
        }
        let bottom = |i: usize| base + 2 * i;
        let top = |i: usize| base + 2 * i + 1;
        for tri in &tris {
            mesh.triangles.push(tri.map(top));
            mesh.triangles.push([bottom(tri[0]), bottom(tri[2]), bottom(tri[1])]);
        }
        for ring in &rings {
            let b: Vec<usize> = ring.iter().map(|&i| bottom(i)).collect();
            let tp: Vec<usize> = ring.iter().map(|&i| top(i)).collect();
            push_side_wall(&mut mesh.triangles, &b, &tp);
        }
    }
    Ok(mesh)
}
