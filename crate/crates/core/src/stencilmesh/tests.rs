use rand::Rng;

use super::*;
use crate::stippler::Stippling;

fn unit_cube() -> TriangleMesh {
    let vertices = vec![
        [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 1.0], [0.0, 1.0, 1.0],
    ];
    let triangles = vec![
        [0, 2, 1], [0, 3, 2], // bottom
        [4, 5, 6], [4, 6, 7], // top
        [0, 1, 5], [0, 5, 4], // front
        [1, 2, 6], [1, 6, 5], // right
        [2, 3, 7], [2, 7, 6], // back
        [3, 0, 4], [3, 4, 7], // left
    ];
    TriangleMesh { vertices, triangles }
}

fn stip(w: usize, h: usize, scale: f64, points: Vec<[f64; 2]>) -> Stippling {
    if points.is_empty() {
        Stippling::empty(w, h, scale).unwrap()
    } else {
        Stippling::new(w, h, scale, points).unwrap()
    }
}

/// Area of a regular n-gon inscribed in a circle of radius r.
fn ngon_area(r: f64, n: usize) -> f64 {
    0.5 * n as f64 * r * r * (std::f64::consts::TAU / n as f64).sin()
}

#[test]
fn cube_validation() {
    let report = validate_mesh(&unit_cube());
    assert!(report.is_watertight);
    assert_eq!(report.euler_characteristic, 2);
    assert_eq!(report.genus, 0);
    assert_eq!(report.components, 1);
    assert!((report.signed_volume_cm3 - 1.0).abs() < 1e-15);

    let mut open = unit_cube();
    open.triangles.truncate(10);
    assert!(!validate_mesh(&open).is_watertight);

    let mut flipped = unit_cube();
    flipped.triangles[3].swap(1, 2);
    assert!(!validate_mesh(&flipped).is_watertight);

    let mut bad = unit_cube();
    bad.triangles[0][0] = 99;
    let r = validate_mesh(&bad);
    assert!(!r.is_watertight);
    assert_eq!(r.out_of_range_indices, 1);
}

#[test]
fn zero_hole_plate_is_a_box() {
    let params = PlateParams::default();
    let s = stip(100, 50, 0.01, vec![]);
    let mesh = build_stencil_plate(&s, &params).unwrap();
    assert_eq!(mesh.vertices.len(), 8);
    assert_eq!(mesh.triangles.len(), 12);
    let r = validate_mesh(&mesh);
    assert!(r.is_watertight);
    assert_eq!(r.euler_characteristic, 2);
    let want = (1.0 + 2.0 * 0.5) * (0.5 + 2.0 * 0.5) * 0.2;
    assert!((r.signed_volume_cm3 - want).abs() < 1e-12 * want);
}

#[test]
fn one_hole_is_a_torus() {
    let s = stip(100, 100, 0.01, vec![[50.0, 50.0]]);
    let mesh = build_stencil_plate(&s, &PlateParams::default()).unwrap();
    let r = validate_mesh(&mesh);
    assert!(r.is_watertight);
    assert_eq!(r.euler_characteristic, 0);
    assert_eq!(r.genus, 1);
}

#[test]
fn disjoint_holes_topology_and_volume() {
    let mut rng = crate::seed::rng(44);
    for trial in 0..10 {
        let params = PlateParams {
            hole_segments: rng.random_range(8..40),
            ..PlateParams::default()
        };
        let (w, h, scale) = (200, 150, 0.01);
        let mut pts: Vec<[f64; 2]> = Vec::new();
        // rejection sampling keeps holes apart (> 2r in cm = 10 px)
        while pts.len() < 5 + 10 * trial {
            let p = [rng.random_range(0.0..w as f64), rng.random_range(0.0..h as f64)];
            if pts.iter().all(|q| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt() > 10.5) {
                pts.push(p);
            }
        }
        let n = pts.len();
        let s = stip(w, h, scale, pts);
        let mesh = build_stencil_plate(&s, &params).unwrap();
        let r = validate_mesh(&mesh);
        assert!(r.is_watertight);
        assert_eq!(r.euler_characteristic, 2 - 2 * n as i64);
        let outline = (2.0 + 1.0) * (1.5 + 1.0);
        let want = (outline - n as f64 * ngon_area(params.hole_radius_cm, params.hole_segments)) * params.thickness_cm;
        assert!((r.signed_volume_cm3 - want).abs() <= 1e-9 * want, "{} vs {want}", r.signed_volume_cm3);
    }
}

#[test]
fn overlapping_holes_merge() {
    // centers 3 px = 0.03 cm apart, radius 0.05 cm: one merged opening
    let s = stip(100, 100, 0.01, vec![[40.0, 50.0], [43.0, 50.0], [46.0, 50.0], [80.0, 20.0]]);
    let params = PlateParams::default();
    let mesh = build_stencil_plate(&s, &params).unwrap();
    let r = validate_mesh(&mesh);
    assert!(r.is_watertight);
    assert_eq!(r.euler_characteristic, 2 - 2 * 2);
    let outline = 2.0 * 2.0;
    let one = ngon_area(0.05, 32);
    let volume_lo = (outline - 4.0 * one) * 0.2;
    let volume_hi = (outline - 2.0 * one) * 0.2;
    assert!(r.signed_volume_cm3 > volume_lo && r.signed_volume_cm3 < volume_hi);
}

#[test]
fn boundary_holes_are_clipped() {
    let params = PlateParams {
        margin_cm: 0.0,
        ..PlateParams::default()
    };
    // a dot on the left edge and one in the corner notch the outline
    let s = stip(100, 100, 0.01, vec![[0.0, 50.0], [99.9, 0.1], [50.0, 50.0]]);
    let mesh = build_stencil_plate(&s, &params).unwrap();
    let r = validate_mesh(&mesh);
    assert!(r.is_watertight);
    assert_eq!(r.euler_characteristic, 0);
    assert!(r.signed_volume_cm3 > 0.0 && r.signed_volume_cm3 < 0.2);
}

#[test]
fn fully_eroded_plate() {
    let params = PlateParams {
        margin_cm: 0.0,
        hole_radius_cm: 1.0,
        ..PlateParams::default()
    };
    let s = stip(2, 2, 0.01, vec![[1.0, 1.0]]);
    let err = build_stencil_plate(&s, &params).unwrap_err();
    assert_eq!(err.to_string(), "plate fully eroded");
}

#[test]
fn dense_stippling_builds() {
    let mut rng = crate::seed::rng(9);
    let pts: Vec<[f64; 2]> = (0..3000).map(|_| [rng.random_range(0.0..400.0), rng.random_range(0.0..300.0)]).collect();
    let s = stip(400, 300, 0.01, pts);
    let mesh = build_stencil_plate(&s, &PlateParams::default()).unwrap();
    let r = validate_mesh(&mesh);
    assert!(r.is_watertight);
    assert!(r.signed_volume_cm3 > 0.0);
}

#[test]
fn params_validation() {
    assert!(PlateParams::default().validate().is_ok());
    for bad in [
        PlateParams { thickness_cm: 0.0, ..Default::default() },
        PlateParams { hole_radius_cm: -1.0, ..Default::default() },
        PlateParams { hole_segments: 7, ..Default::default() },
        PlateParams { margin_cm: -0.1, ..Default::default() },
        PlateParams { wall_height_cm: 0.0, ..Default::default() },
        PlateParams { fit_clearance_cm: f64::NAN, ..Default::default() },
    ] {
        assert!(bad.validate().is_err(), "{bad:?}");
    }
}

#[test]
fn wall_topology_and_volume() {
    for height in [0.5, 1.0, 3.0] {
        let params = PlateParams {
            wall_height_cm: height,
            ..PlateParams::default()
        };
        let s = stip(120, 80, 0.01, vec![[10.0, 10.0]]);
        let mesh = build_wall(&s, &params).unwrap();
        let r = validate_mesh(&mesh);
        assert!(r.is_watertight);
        assert_eq!(r.euler_characteristic, 0);
        assert_eq!(r.genus, 1);
        // outline 2.2 x 1.8
        let (ow, oh) = (2.2 + 0.6, 1.8 + 0.6);
        let (sw, sh) = (2.2 + 0.04, 1.8 + 0.04);
        let (lw, lh) = (2.2 + 0.04 - 0.3, 1.8 + 0.04 - 0.3);
        let want = (ow * oh - lw * lh) * (height - 0.2) + (ow * oh - sw * sh) * 0.2;
        assert!((r.signed_volume_cm3 - want).abs() <= 1e-9 * want);
    }
}

#[test]
fn wall_seat_independent_of_height() {
    let s = stip(64, 48, 0.02, vec![[3.0, 3.0]]);
    let seat_xy = |h: f64| -> Vec<[u64; 2]> {
        let params = PlateParams {
            wall_height_cm: h,
            ..PlateParams::default()
        };
        let mesh = build_wall(&s, &params).unwrap();
        let mut xy: Vec<[u64; 2]> = mesh
            .vertices
            .iter()
            .filter(|v| v[2] > 0.0)
            .map(|v| [v[0].to_bits(), v[1].to_bits()])
            .collect();
        xy.sort();
        xy.dedup();
        xy
    };
    assert_eq!(seat_xy(1.0), seat_xy(3.0));
    let a = wall_rectangles(&s, &PlateParams::default());
    let b = wall_rectangles(&s, &PlateParams { wall_height_cm: 3.0, ..Default::default() });
    assert_eq!(a, b);
}

#[test]
fn wall_errors() {
    let s = stip(10, 10, 0.01, vec![[1.0, 1.0]]);
    let low = PlateParams { wall_height_cm: 0.1, ..Default::default() };
    assert!(build_wall(&s, &low).is_err());
    let pinched = PlateParams { margin_cm: 0.0, ledge_depth_cm: 1.0, ..Default::default() };
    assert!(build_wall(&s, &pinched).is_err());
}

#[test]
fn stl_layout_and_round_trip() {
    let cube = unit_cube();
    let bytes = stl_bytes(&cube);
    assert_eq!(bytes.len(), 684);
    assert!(bytes[..80].windows(12).any(|w| w == b"stencilforge"));
    assert_eq!(u32::from_le_bytes(bytes[80..84].try_into().unwrap()), 12);
    let parsed = read_stl(&bytes).unwrap();
    assert_eq!(parsed.len(), 12);
    for (k, (normal, verts)) in parsed.iter().enumerate() {
        for j in 0..3 {
            let v = cube.vertices[cube.triangles[k][j]];
            for c in 0..3 {
                assert_eq!(verts[j][c], v[c] as f32);
            }
        }
        let len: f32 = normal.iter().map(|c| c * c).sum::<f32>().sqrt();
        assert!((len - 1.0).abs() < 1e-6);
    }
    // bottom triangle normal points down
    assert_eq!(parsed[0].0, [0.0, 0.0, -1.0]);
}

#[test]
fn stl_write_refuses_open_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let mut open = unit_cube();
    open.triangles.pop();
    assert!(matches!(write_stl(&open, dir.path().join("x.stl")), Err(crate::Error::NotWatertight)));
    assert!(matches!(
        write_stl(&unit_cube(), dir.path().join("missing/x.stl")),
        Err(crate::Error::UnwritablePath { .. })
    ));
    let path = dir.path().join("cube.stl");
    write_stl(&unit_cube(), &path).unwrap();
    assert_eq!(std::fs::metadata(&path).unwrap().len(), 684);
}

#[test]
fn plate_stl_round_trips_and_is_deterministic() {
    let mut rng = crate::seed::rng(2);
    let pts: Vec<[f64; 2]> = (0..200).map(|_| [rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)]).collect();
    let s = stip(100, 100, 0.01, pts);
    let a = stl_bytes(&build_stencil_plate(&s, &PlateParams::default()).unwrap());
    let b = stl_bytes(&build_stencil_plate(&s, &PlateParams::default()).unwrap());
    assert_eq!(a, b);
    let parsed = read_stl(&a).unwrap();
    assert_eq!(a.len(), 84 + 50 * parsed.len());
}
