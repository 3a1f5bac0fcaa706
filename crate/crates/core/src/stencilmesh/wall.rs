use serde::{Deserialize, Serialize};

use super::plate::plate_outline;
use super::{push_side_wall, PlateParams, TriangleMesh};
use crate::error::{Error, Result};
use crate::stippler::Stippling;

/// Axis-aligned rectangles `[x0, y0, x1, y1]` describing a wall frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallRectangles {
    /// Outside of the frame.
    pub outer: [f64; 4],
    /// Seat opening that receives the plate, from `height - thickness` to `height`.
    pub seat: [f64; 4],
    /// Opening below the ledge, from 0 to `height - thickness`.
    pub below_ledge: [f64; 4],
}

fn grow(r: [f64; 4], d: f64) -> [f64; 4] {
    [r[0] - d, r[1] - d, r[2] + d, r[3] + d]
}

fn area(r: [f64; 4]) -> f64 {
    (r[2] - r[0]) * (r[3] - r[1])
}

pub fn wall_rectangles(stip: &Stippling, params: &PlateParams) -> WallRectangles {
    let outline = plate_outline(stip, params);
    WallRectangles {
        outer: grow(outline, params.wall_thickness_cm),
        seat: grow(outline, params.fit_clearance_cm),
        below_ledge: grow(outline, params.fit_clearance_cm - params.ledge_depth_cm),
    }
}

impl WallRectangles {
    /// Closed-form volume of the frame for a given height and seat depth.
    pub fn volume(&self, height: f64, seat_depth: f64) -> f64 {
        (area(self.outer) - area(self.below_ledge)) * (height - seat_depth)
            + (area(self.outer) - area(self.seat)) * seat_depth
    }
}

/// Rectangular frame from z = 0 to `wall_height_cm`. The top `thickness_cm`
/// is a seat sized to the plate outline plus clearance; below it the
/// opening narrows by `ledge_depth_cm`, leaving a ledge the plate rests on.
pub fn build_wall(stip: &Stippling, params: &PlateParams) -> Result<TriangleMesh> {
    stip.validate()?;
    params.validate()?;
    let rects = wall_rectangles(stip, params);
    let (h, t) = (params.wall_height_cm, params.thickness_cm);
    if h <= t {
        return Err(Error::InvalidParameter(format!(
            "wall height {h} cm must exceed the plate thickness {t} cm"
        )));
    }
    let inner = rects.below_ledge;
    if !(inner[2] > inner[0] && inner[3] > inner[1]) {
        return Err(Error::InvalidParameter("wall inner rectangle has non-positive area".into()));
    }

    let mut mesh = TriangleMesh::default();
    let mut ring_at = |r: [f64; 4], z: f64| -> Vec<usize> {
        let base = mesh.vertices.len();
        mesh.vertices
            .extend([[r[0], r[1], z], [r[2], r[1], z], [r[2], r[3], z], [r[0], r[3], z]]);
        (base..base + 4).collect()
    };
    let o0 = ring_at(rects.outer, 0.0);
    let o1 = ring_at(rects.outer, h);
    let l0 = ring_at(rects.below_ledge, 0.0);
    let l1 = ring_at(rects.below_ledge, h - t);
    let s0 = ring_at(rects.seat, h - t);
    let s1 = ring_at(rects.seat, h);

    let tris = &mut mesh.triangles;
    // annulus between counter-clockwise rings, facing +z
    let annulus_up = |tris: &mut Vec<[usize; 3]>, outer: &[usize], inner: &[usize]| {
        for k in 0..4 {
            let (a, b, c, d) = (outer[k], outer[(k + 1) % 4], inner[k], inner[(k + 1) % 4]);
            tris.push([a, b, d]);
            tris.push([a, d, c]);
        }
    };
    annulus_up(tris, &o1, &s1);
    annulus_up(tris, &s0, &l1);
    for k in 0..4 {
        let (a, b, c, d) = (o0[k], o0[(k + 1) % 4], l0[k], l0[(k + 1) % 4]);
        tris.push([a, d, b]);
        tris.push([a, c, d]);
    }
    let rev = |r: &[usize]| -> Vec<usize> { r.iter().rev().copied().collect() };
    push_side_wall(tris, &o0, &o1);
    push_side_wall(tris, &rev(&l0), &rev(&l1));
    push_side_wall(tris, &rev(&s0), &rev(&s1));
    Ok(mesh)
}
