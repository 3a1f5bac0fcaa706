//! Printable geometry: a stencil plate with one through-hole per dot and a
//! separate wall frame that holds the plate above the painted surface.
//!
//! Holes are regular n-gons inscribed in the dot circle. Holes that overlap
//! each other or cross the plate outline are merged with polygon booleans;
//! isolated holes keep their exact vertices. Plate faces are triangulated
//! by ear clipping after bridging holes into the outer boundary.
//!
//! The wall is a rectangular frame whose top carries a recessed seat of the
//! plate's outline size plus a clearance, resting on an inward ledge. The
//! seat depends only on the plate outline, so walls of any height fit every
//! plate built from the same canvas.

mod plate;
mod polygon;
mod stl;
mod triangulate;
mod wall;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use plate::{build_stencil_plate, plate_outline};
pub use polygon::{regular_polygon, signed_area, P2};
pub use stl::{read_stl, stl_bytes, write_stl};
pub use triangulate::triangulate;
pub use wall::{build_wall, wall_rectangles, WallRectangles};

/// Plate and wall dimensions, all in centimeters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlateParams {
    pub thickness_cm: f64,
    pub hole_radius_cm: f64,
    pub hole_segments: usize,
    pub margin_cm: f64,
    pub wall_height_cm: f64,
    pub fit_clearance_cm: f64,
    pub wall_thickness_cm: f64,
    pub ledge_depth_cm: f64,
}

impl Default for PlateParams {
    fn default() -> Self {
        Self {
            thickness_cm: 0.2,
            hole_radius_cm: 0.05,
            hole_segments: 32,
            margin_cm: 0.5,
            wall_height_cm: 1.0,
            fit_clearance_cm: 0.02,
            wall_thickness_cm: 0.3,
            ledge_depth_cm: 0.15,
        }
    }
}

impl PlateParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("thickness_cm", self.thickness_cm),
            ("hole_radius_cm", self.hole_radius_cm),
            ("wall_height_cm", self.wall_height_cm),
            ("wall_thickness_cm", self.wall_thickness_cm),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")));
            }
        }
        let non_negative = [
            ("margin_cm", self.margin_cm),
            ("fit_clearance_cm", self.fit_clearance_cm),
            ("ledge_depth_cm", self.ledge_depth_cm),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.hole_segments < 8 {
            return Err(Error::InvalidParameter(format!(
                "hole_segments must be >= 8, got {}",
                self.hole_segments
            )));
        }
        Ok(())
    }
}

/// Indexed triangle surface. Triangles wind counter-clockwise when seen
/// from outside.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    /// Unnormalized normal (twice the area vector) of triangle `t`.
    pub fn area_vector(&self, t: usize) -> [f64; 3] {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
        [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]]
    }
}

/// Topology and volume summary of a mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshReport {
    pub is_watertight: bool,
    pub euler_characteristic: i64,
    /// Meaningful only for watertight meshes; summed over components.
    pub genus: i64,
    pub signed_volume_cm3: f64,
    pub vertex_count: usize,
    pub edge_count: usize,
    pub triangle_count: usize,
    pub components: usize,
    pub degenerate_triangles: usize,
    pub out_of_range_indices: usize,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Edge sharing, Euler characteristic, genus and signed volume.
///
/// A mesh is watertight when every directed edge occurs exactly once and its
/// reverse occurs exactly once, all indices are in range and no triangle has
/// zero area. `V` counts referenced vertices, `E` undirected edges.
pub fn validate_mesh(mesh: &TriangleMesh) -> MeshReport {
    let nv = mesh.vertices.len();
    let mut out_of_range = 0;
    let mut degenerate = 0;
    let mut volume = 0.0;
    let mut directed: HashMap<(usize, usize), u32> = HashMap::with_capacity(mesh.triangles.len() * 3);
    let mut used = vec![false; nv];
    let mut parent: Vec<usize> = (0..nv).collect();

    for (t, tri) in mesh.triangles.iter().enumerate() {
        if tri.iter().any(|&i| i >= nv) {
            out_of_range += 1;
            continue;
        }
        if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] || mesh.area_vector(t) == [0.0; 3] {
            degenerate += 1;
        }
        let [a, b, c] = tri.map(|i| mesh.vertices[i]);
        volume += (a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
            + a[2] * (b[0] * c[1] - b[1] * c[0]))
            / 6.0;
        for k in 0..3 {
            let (u, v) = (tri[k], tri[(k + 1) % 3]);
            *directed.entry((u, v)).or_insert(0) += 1;
            used[u] = true;
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            if ru != rv {
                parent[ru.max(rv)] = ru.min(rv);
            }
        }
    }

    let mut manifold = true;
    let mut edge_count = 0;
    for (&(u, v), &count) in &directed {
        let reverse = directed.get(&(v, u)).copied().unwrap_or(0);
        if count != 1 || reverse != 1 {
            manifold = false;
        }
        if u < v || reverse == 0 {
            edge_count += 1;
        }
    }
    let vertex_count = used.iter().filter(|&&u| u).count();
    let components = (0..nv).filter(|&i| used[i] && find(&mut parent, i) == i).count();
    let triangle_count = mesh.triangles.len();
    let chi = vertex_count as i64 - edge_count as i64 + triangle_count as i64;
    let is_watertight = manifold && out_of_range == 0 && degenerate == 0 && triangle_count > 0;
    MeshReport {
        is_watertight,
        euler_characteristic: chi,
        genus: if is_watertight { (2 * components as i64 - chi) / 2 } else { 0 },
        signed_volume_cm3: volume,
        vertex_count,
        edge_count,
        triangle_count,
        components,
        degenerate_triangles: degenerate,
        out_of_range_indices: out_of_range,
    }
}

/// Append a prism side wall for a closed ring. `bottom[k]` and `top[k]` are
/// the vertex indices at the two levels; the outward side is to the right
/// of the ring direction (counter-clockwise rings face outward).
pub(crate) fn push_side_wall(tris: &mut Vec<[usize; 3]>, bottom: &[usize], top: &[usize]) {
    let n = bottom.len();
    for k in 0..n {
        let (a0, b0, a1, b1) = (bottom[k], bottom[(k + 1) % n], top[k], top[(k + 1) % n]);
        tris.push([a0, b0, b1]);
        tris.push([a0, b1, a1]);
    }
}

#[cfg(test)]
mod tests;
