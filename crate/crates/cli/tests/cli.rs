use std::path::{Path, PathBuf};
use std::process::Command;

use stencilforge::raster::{load_image, save_channel, save_rgb};
use stencilforge::stencilmesh::read_stl;
use stencilforge::{ChannelMap, RasterImage};
use stencilforge_cli::manifest::StipplingFile;
use stencilforge_cli::{run_decompose, run_mesh, run_pipeline, run_simulate, run_stipple, Manifest, PipelineConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stencilforge"))
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/astronaut_64.png")
}

/// 24x20 test card: two soft blobs over a warm background.
fn small_input(dir: &Path) -> PathBuf {
    let (w, h) = (24, 20);
    let pixels = (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as f64, (i / w) as f64);
            let a = (-((x - 7.0).powi(2) + (y - 8.0).powi(2)) / 18.0).exp();
            let b = (-((x - 16.0).powi(2) + (y - 12.0).powi(2)) / 12.0).exp();
            let base = [0.9, 0.8, 0.6];
            let red = [0.8, 0.1, 0.1];
            let blue = [0.1, 0.2, 0.8];
            std::array::from_fn(|c| {
                let v = base[c] * (1.0 - a) + red[c] * a;
                v * (1.0 - b) + blue[c] * b
            })
        })
        .collect();
    let path = dir.join("card.png");
    save_rgb(&RasterImage::new(w, h, pixels).unwrap(), &path).unwrap();
    path
}

fn config(out: &Path) -> PipelineConfig {
    PipelineConfig {
        layers: 2,
        dots: 60,
        seed: 5,
        output_dir: out.to_path_buf(),
        ..PipelineConfig::default()
    }
}

#[test]
fn decompose_writes_layers_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let input = small_input(dir.path());
    let out = dir.path().join("run");
    let status = bin()
        .args(["decompose", input.to_str().unwrap(), "--layers", "3", "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    assert!(String::from_utf8_lossy(&status.stdout).contains("energy: data"));
    for l in 1..=3 {
        assert!(out.join(format!("layer_{l:02}.png")).exists());
    }
    let m = Manifest::load(&out).unwrap();
    assert_eq!(m.decomposition.layers, ["layer_01.png", "layer_02.png", "layer_03.png"]);
    assert_eq!(m.decomposition.palette.len(), 4);
    assert!(m.decomposition.palette.iter().flatten().all(|v| (0.0..=1.0).contains(v)));
    assert_eq!(m.digests.len(), 3);
}

#[test]
fn zero_layers_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = small_input(dir.path());
    let out = dir.path().join("run");
    let res = bin()
        .args(["decompose", input.to_str().unwrap(), "--layers", "0", "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn same_seed_same_energies() {
    let dir = tempfile::tempdir().unwrap();
    let input = small_input(dir.path());
    let a = run_decompose(&input, &config(&dir.path().join("a"))).unwrap();
    let b = run_decompose(&input, &config(&dir.path().join("b"))).unwrap();
    assert_eq!(
        serde_json::to_string(&a.decomposition.energy_trace).unwrap(),
        serde_json::to_string(&b.decomposition.energy_trace).unwrap()
    );
}

#[test]
fn stipple_honors_dot_count_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let input = small_input(dir.path());
    let mut cfg = config(&dir.path().join("a"));
    cfg.dots = 1390;
    cfg.lloyd.max_iters = 3;
    run_decompose(&input, &cfg).unwrap();
    let m = run_stipple(&cfg).unwrap();
    let stage = m.stippling.unwrap();
    assert_eq!(stage.layers.len(), 2);
    let mut first = Vec::new();
    for rec in &stage.layers {
        let text = std::fs::read_to_string(cfg.output_dir.join(rec.file.as_ref().unwrap())).unwrap();
        let file: StipplingFile = serde_json::from_str(&text).unwrap();
        assert_eq!(file.stippling.points.len(), 1390);
        assert_eq!(file.cvt_energy_trace.len(), file.iterations + 1);
        let raw: serde_json::Value = serde_json::from_str(&text).unwrap();
        for key in ["canvas_width", "canvas_height", "scale_cm_per_px", "points"] {
            assert!(raw.get(key).is_some(), "missing {key}");
        }
        first.push(file.stippling.points);
    }
    let again = run_stipple(&cfg).unwrap().stippling.unwrap();
    for (rec, pts) in again.layers.iter().zip(&first) {
        let text = std::fs::read_to_string(cfg.output_dir.join(rec.file.as_ref().unwrap())).unwrap();
        let file: StipplingFile = serde_json::from_str(&text).unwrap();
        assert_eq!(&file.stippling.points, pts);
    }
}

#[test]
fn empty_layer_is_skipped_and_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let input = small_input(dir.path());
    let cfg = config(&dir.path().join("run"));
    let m = run_decompose(&input, &cfg).unwrap();
    save_channel(
        &ChannelMap::filled(m.canvas_width, m.canvas_height, 0.0).unwrap(),
        cfg.output_dir.join("layer_02.png"),
    )
    .unwrap();
    let m = run_stipple(&cfg).unwrap();
    let rec = &m.stippling.as_ref().unwrap().layers[1];
    assert!(rec.empty && rec.file.is_none());
    // downstream stages still run
    let m = run_simulate(&cfg).unwrap();
    assert_eq!(m.simulation.unwrap().runs[0].alphas.len(), 2);
    let m = run_mesh(&cfg).unwrap();
    assert_eq!(m.meshes.unwrap().plates.len(), 1);
}

#[test]
fn simulate_heights_and_prefactor() {
    let dir = tempfile::tempdir().unwrap();
    let input = small_input(dir.path());
    let out = dir.path().join("run");
    let mut cfg = config(&out);
    run_decompose(&input, &cfg).unwrap();
    run_stipple(&cfg).unwrap();

    let res = bin()
        .args(["simulate", "--out", out.to_str().unwrap(), "--seed", "5", "--height", "2,7,15"])
        .output()
        .unwrap();
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    for h in ["2.0", "7.0", "15.0"] {
        assert!(out.join(format!("composite_h{h}.png")).exists());
    }

    // prefactor 0 leaves the background color everywhere
    cfg.spray.prefactor = 0.0;
    let m = run_simulate(&cfg).unwrap();
    let bg = m.decomposition.palette[0];
    let img = load_image(out.join(&m.simulation.unwrap().runs[0].composite)).unwrap();
    for p in img.pixels() {
        for c in 0..3 {
            assert!((p[c] - bg[c]).abs() <= 0.5 / 255.0 + 1e-12);
        }
    }

    // increasing prefactor never lowers a simulated alpha
    let mut prev: Option<Vec<Vec<f64>>> = None;
    for a in [0.25, 0.5, 1.0, 2.0] {
        cfg.spray.prefactor = a;
        let m = run_simulate(&cfg).unwrap();
        let run = &m.simulation.unwrap().runs[0];
        let maps: Vec<Vec<f64>> = run
            .alphas
            .iter()
            .map(|f| load_image(out.join(f)).unwrap().pixels().iter().map(|p| p[0]).collect())
            .collect();
        if let Some(p) = &prev {
            for (now, before) in maps.iter().zip(p) {
                assert!(now.iter().zip(before).all(|(n, b)| n >= b));
            }
        }
        prev = Some(maps);
    }
}

#[test]
fn mesh_outputs_and_interchangeability() {
    let dir = tempfile::tempdir().unwrap();
    let input = small_input(dir.path());
    let out = dir.path().join("run");
    let cfg = config(&out);
    run_decompose(&input, &cfg).unwrap();
    run_stipple(&cfg).unwrap();
    let res = bin()
        .args(["mesh", "--out", out.to_str().unwrap(), "--wall-heights", "1.0,2.0"])
        .output()
        .unwrap();
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let files = ["stencil_layer_01.stl", "stencil_layer_02.stl", "wall_h1.0.stl", "wall_h2.0.stl"];
    let mut extents = Vec::new();
    for f in files {
        let bytes = std::fs::read(out.join(f)).unwrap();
        let tris = read_stl(&bytes).unwrap();
        assert_eq!(bytes.len(), 84 + 50 * tris.len());
        let (mut lo, mut hi) = ([f32::INFINITY; 2], [f32::NEG_INFINITY; 2]);
        for (_, vs) in &tris {
            for v in vs {
                for a in 0..2 {
                    lo[a] = lo[a].min(v[a]);
                    hi[a] = hi[a].max(v[a]);
                }
            }
        }
        extents.push((lo, hi));
    }
    // both plates share the outline; both walls share the footprint
    assert_eq!(extents[0], extents[1]);
    assert_eq!(extents[2], extents[3]);
    let m = Manifest::load(&out).unwrap();
    let meshes = m.meshes.unwrap();
    assert!(meshes.walls.iter().all(|w| w.euler_characteristic == 0));
}

#[test]
fn pipeline_missing_input_leaves_no_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let res = bin()
        .args(["pipeline", dir.path().join("nope.png").to_str().unwrap(), "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("error"));
    assert!(!out.join("manifest.json").exists());
}

#[test]
fn pipeline_smoke_and_config_override() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let cfg_path = dir.path().join("cfg.json");
    std::fs::write(&cfg_path, r#"{"layers": 2, "dots": 500, "heights": [2.0, 15.0], "plate": {"hole_segments": 12}}"#).unwrap();
    let res = bin()
        .args([
            "pipeline",
            fixture().to_str().unwrap(),
            "--config",
            cfg_path.to_str().unwrap(),
            "--height",
            "7",
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let m = Manifest::load(&out).unwrap();
    assert_eq!(m.decomposition.layers.len(), 2);
    assert_eq!(m.stippling.as_ref().unwrap().dots, 500);
    let runs = &m.simulation.as_ref().unwrap().runs;
    assert_eq!(runs.len(), 1);
    assert_eq!(runs[0].spray.height, 7.0);
    assert_eq!(m.meshes.as_ref().unwrap().plate.hole_segments, 12);
    for (file, digest) in &m.digests {
        assert_eq!(&stencilforge_cli::manifest::file_digest(&out.join(file)).unwrap(), digest);
    }
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, r#"{"layerz": 2}"#).unwrap();
    assert!(PipelineConfig::from_file(&path).is_err());
    std::fs::write(&path, r#"{"spray": {"radius_cm": 0.08}}"#).unwrap();
    let cfg = PipelineConfig::from_file(&path).unwrap();
    assert_eq!(cfg.plate.hole_radius_cm, 0.08);
}

#[test]
fn pipeline_end_to_end_library() {
    let dir = tempfile::tempdir().unwrap();
    let input = small_input(dir.path());
    let m = run_pipeline(&input, &config(&dir.path().join("run"))).unwrap();
    assert_eq!(m.artifact_files().len(), m.digests.len());
}
