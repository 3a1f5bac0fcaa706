use std::path::Path;

use super::{validate_mesh, TriangleMesh};
use crate::error::{Error, Result};

const HEADER_TAG: &[u8] = b"stencilforge binary STL";

/// Binary STL encoding: 80-byte header, triangle count, then per triangle a
/// unit normal, three vertices (all `f32`) and a zero attribute word.
pub fn stl_bytes(mesh: &TriangleMesh) -> Vec<u8> {
    let t = mesh.triangles.len();
    let mut out = Vec::with_capacity(84 + 50 * t);
    let mut header = [0u8; 80];
    header[..HEADER_TAG.len()].copy_from_slice(HEADER_TAG);
    out.extend_from_slice(&header);
    out.extend_from_slice(&(t as u32).to_le_bytes());
    for (k, tri) in mesh.triangles.iter().enumerate() {
        let n = mesh.area_vector(k);
        let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        let unit = if len > 0.0 { n.map(|c| c / len) } else { [0.0; 3] };
        for c in unit {
            out.extend_from_slice(&(c as f32).to_le_bytes());
        }
        for &i in tri {
            for c in mesh.vertices[i] {
                out.extend_from_slice(&(c as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&0u16.to_le_bytes());
    }
    out
}

/// Write a watertight mesh as binary STL. Non-watertight meshes are refused.
pub fn write_stl(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let report = validate_mesh(mesh);
    if !report.is_watertight {
        return Err(Error::NotWatertight);
    }
    std::fs::write(path, stl_bytes(mesh)).map_err(|e| Error::UnwritablePath {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Parsed binary STL: per triangle the stored normal and three vertices.
pub type StlTriangle = ([f32; 3], [[f32; 3]; 3]);

/// Parse a binary STL file.
pub fn read_stl(bytes: &[u8]) -> Result<Vec<StlTriangle>> {
    let bad = |why: &str| Error::Geometry(format!("malformed STL: {why}"));
    if bytes.len() < 84 {
        return Err(bad("shorter than the header"));
    }
    let count = u32::from_le_bytes(bytes[80..84].try_into().expect("4 bytes")) as usize;
    if bytes.len() != 84 + 50 * count {
        return Err(bad("size does not match the triangle count"));
    }
    let f = |o: usize| f32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    Ok((0..count)
        .map(|k| {
            let o = 84 + 50 * k;
            let v = |j: usize| [f(o + 12 * j), f(o + 12 * j + 4), f(o + 12 * j + 8)];
            (v(0), [v(1), v(2), v(3)])
        })
        .collect())
}
