//! The four pipeline stages. Each reads what it needs from the output
//! directory's manifest, writes its artifacts and updates the manifest.

use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use log::{info, warn};
use stencilforge::compositor::composite;
use stencilforge::decomposer::decompose;
use stencilforge::raster::{load_image, save_channel, save_rgb};
use stencilforge::spraysim::{simulate_alpha, total_variation};
use stencilforge::stencilmesh::{build_stencil_plate, build_wall, validate_mesh, write_stl};
use stencilforge::stippler::{importance_sample, lloyd_relax_traced};
use stencilforge::{seed, AlphaStack, ChannelMap, Palette, Stippling, TriangleMesh};

use crate::config::PipelineConfig;
use crate::manifest::{
    DecompositionRecord, Manifest, MeshRecord, MeshStage, SimulationRun, SimulationStage, StipplingFile,
    StipplingRecord, StipplingStage,
};

pub fn layer_file(l: usize) -> String {
    format!("layer_{l:02}.png")
}

pub fn stippling_file(l: usize) -> String {
    format!("stippling_layer_{l:02}.json")
}

pub fn plate_file(l: usize) -> String {
    format!("stencil_layer_{l:02}.stl")
}

pub fn wall_file(h: f64) -> String {
    format!("wall_h{h:?}.stl")
}

pub fn sim_alpha_file(h: f64, l: usize) -> String {
    format!("sim_h{h:?}_layer_{l:02}.png")
}

pub fn composite_file(h: f64) -> String {
    format!("composite_h{h:?}.png")
}

/// Decompose `input` into `cfg.layers` layers. The input is read before
/// anything is written, so a bad input leaves no manifest behind.
pub fn run_decompose(input: &Path, cfg: &PipelineConfig) -> Result<Manifest> {
    cfg.validate()?;
    let image = load_image(input).with_context(|| format!("loading {}", input.display()))?;
    let out = &cfg.output_dir;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    let solver = stencilforge::SolverOptions {
        rng_seed: seed::derive(cfg.seed, "decompose", 0),
        ..cfg.solver
    };
    let result = decompose(&image, cfg.layers, &cfg.weights, &solver).context("decomposition failed")?;
    let mut layers = Vec::with_capacity(cfg.layers);
    for (k, map) in result.stack.layers().iter().enumerate() {
        let name = layer_file(k + 1);
        save_channel(map, out.join(&name))?;
        layers.push(name);
    }
    let mut manifest = Manifest {
        format_version: crate::manifest::FORMAT_VERSION,
        input: input.display().to_string(),
        seed: cfg.seed,
        canvas_width: image.width(),
        canvas_height: image.height(),
        decomposition: DecompositionRecord {
            layers,
            palette: result.palette.colors().to_vec(),
            weights: cfg.weights,
            solver,
            outer_iterations: result.outer_iterations,
            converged: result.converged,
            final_energy: *result.final_energy(),
            energy_trace: result.energy_trace.clone(),
        },
        stippling: None,
        simulation: None,
        meshes: None,
        digests: Default::default(),
    };
    manifest.save(out)?;
    Ok(manifest)
}

fn load_density(path: &Path) -> Result<ChannelMap> {
    let img = load_image(path).with_context(|| format!("loading layer {}", path.display()))?;
    let values = img.pixels().iter().map(|p| p[0]).collect();
    Ok(ChannelMap::new(img.width(), img.height(), values)?)
}

/// Stipple every decomposed layer with `cfg.dots` dots.
pub fn run_stipple(cfg: &PipelineConfig) -> Result<Manifest> {
    cfg.validate()?;
    let out = &cfg.output_dir;
    let mut manifest = Manifest::load(out)?;
    let scale = cfg.spray.scale;
    let mut records = Vec::new();
    for (k, name) in manifest.decomposition.layers.iter().enumerate() {
        let l = k + 1;
        let density = load_density(&out.join(name))?;
        let sample_seed = seed::derive(cfg.seed, "stipple", l as u64);
        let lloyd = stencilforge::LloydOptions {
            rng_seed: seed::derive(cfg.seed, "lloyd", l as u64),
            ..cfg.lloyd
        };
        if density.values().iter().all(|&v| v == 0.0) {
            warn!("layer {l} has zero alpha everywhere; skipping its stippling");
            records.push(StipplingRecord {
                layer: l,
                file: None,
                empty: true,
                sample_seed,
                lloyd_seed: lloyd.rng_seed,
                iterations: 0,
                converged: true,
                final_cvt_energy: None,
            });
            continue;
        }
        let seeds = importance_sample(&density, cfg.dots, sample_seed)?;
        let report = lloyd_relax_traced(seeds, &density, &lloyd, scale).with_context(|| format!("stippling layer {l}"))?;
        info!("layer {l}: {} Lloyd iterations, converged {}", report.iterations, report.converged);
        let file = StipplingFile {
            layer: l,
            stippling: report.stippling,
            sample_seed,
            lloyd,
            iterations: report.iterations,
            converged: report.converged,
            cvt_energy_trace: report.energy_trace,
            resampled: report.resampled,
        };
        let fname = stippling_file(l);
        let path = out.join(&fname);
        std::fs::write(&path, serde_json::to_string(&file)? + "\n").with_context(|| format!("writing {}", path.display()))?;
        records.push(StipplingRecord {
            layer: l,
            file: Some(fname),
            empty: false,
            sample_seed,
            lloyd_seed: lloyd.rng_seed,
            iterations: file.iterations,
            converged: file.converged,
            final_cvt_energy: file.cvt_energy_trace.last().copied(),
        });
    }
    manifest.stippling = Some(StipplingStage {
        dots: cfg.dots,
        scale_cm_per_px: scale,
        lloyd: cfg.lloyd,
        layers: records,
    });
    manifest.simulation = None;
    manifest.meshes = None;
    manifest.save(out)?;
    Ok(manifest)
}

/// Stipplings in layer order; empty layers become dot-free stipplings.
fn load_stipplings(manifest: &Manifest, dir: &Path, scale: f64) -> Result<Vec<Stippling>> {
    let Some(stage) = &manifest.stippling else {
        bail!("the manifest has no stipplings; run `stipple` first");
    };
    ensure!(
        stage.layers.len() == manifest.decomposition.layers.len(),
        "manifest lists {} stipplings for {} layers",
        stage.layers.len(),
        manifest.decomposition.layers.len()
    );
    stage
        .layers
        .iter()
        .map(|rec| match &rec.file {
            None => Ok(Stippling::empty(manifest.canvas_width, manifest.canvas_height, scale)?),
            Some(f) => {
                let path = dir.join(f);
                let text = std::fs::read_to_string(&path).with_context(|| format!("missing stippling {}", path.display()))?;
                let file: StipplingFile =
                    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
                file.stippling.validate()?;
                Ok(file.stippling)
            }
        })
        .collect()
}

/// Simulate the painted result once per height in `cfg.heights`.
pub fn run_simulate(cfg: &PipelineConfig) -> Result<Manifest> {
    cfg.validate()?;
    let out = &cfg.output_dir;
    let mut manifest = Manifest::load(out)?;
    let scale = manifest.stippling.as_ref().map_or(cfg.spray.scale, |s| s.scale_cm_per_px);
    let stipplings = load_stipplings(&manifest, out, scale)?;
    let palette = Palette::new(manifest.decomposition.palette.clone())?;
    let mut runs = Vec::new();
    for &h in &cfg.heights {
        let spray = stencilforge::SprayParams {
            scale,
            ..cfg.spray_at(h)
        };
        let mut alphas = Vec::with_capacity(stipplings.len());
        let mut names = Vec::with_capacity(stipplings.len());
        let mut tv = Vec::with_capacity(stipplings.len());
        for (k, stip) in stipplings.iter().enumerate() {
            let alpha = simulate_alpha(stip, &spray).with_context(|| format!("simulating layer {} at h = {h}", k + 1))?;
            let name = sim_alpha_file(h, k + 1);
            save_channel(&alpha, out.join(&name))?;
            tv.push(total_variation(&alpha));
            names.push(name);
            alphas.push(alpha);
        }
        let image = composite(&AlphaStack::new(alphas)?, &palette)?;
        let name = composite_file(h);
        save_rgb(&image, out.join(&name))?;
        runs.push(SimulationRun {
            spray,
            alphas: names,
            composite: name,
            total_variation: tv,
        });
    }
    manifest.simulation = Some(SimulationStage { runs });
    manifest.save(out)?;
    Ok(manifest)
}

fn write_checked(mesh: &TriangleMesh, path: &Path) -> Result<stencilforge::MeshReport> {
    let report = validate_mesh(mesh);
    ensure!(
        report.is_watertight && report.signed_volume_cm3 > 0.0,
        "internal error: {} is not a closed positive-volume mesh",
        path.display()
    );
    write_stl(mesh, path)?;
    Ok(report)
}

/// One plate per non-empty layer and one wall per entry of `cfg.wall_heights`.
pub fn run_mesh(cfg: &PipelineConfig) -> Result<Manifest> {
    cfg.validate()?;
    let out = &cfg.output_dir;
    let mut manifest = Manifest::load(out)?;
    let scale = manifest.stippling.as_ref().map_or(cfg.spray.scale, |s| s.scale_cm_per_px);
    let stipplings = load_stipplings(&manifest, out, scale)?;
    let mut plates = Vec::new();
    for (k, stip) in stipplings.iter().enumerate() {
        let l = k + 1;
        if stip.is_empty() {
            warn!("layer {l} has no dots; no plate written");
            continue;
        }
        let mesh = build_stencil_plate(stip, &cfg.plate).with_context(|| format!("building plate for layer {l}"))?;
        let name = plate_file(l);
        let report = write_checked(&mesh, &out.join(&name))?;
        plates.push(MeshRecord {
            layer: Some(l),
            wall_height_cm: None,
            file: name,
            triangles: report.triangle_count,
            euler_characteristic: report.euler_characteristic,
            signed_volume_cm3: report.signed_volume_cm3,
        });
    }
    let canvas = Stippling::empty(manifest.canvas_width, manifest.canvas_height, scale)?;
    let mut walls = Vec::new();
    for &h in &cfg.wall_heights {
        let mesh = build_wall(&canvas, &cfg.plate_at(h)).with_context(|| format!("building wall of height {h}"))?;
        let name = wall_file(h);
        let report = write_checked(&mesh, &out.join(&name))?;
        walls.push(MeshRecord {
            layer: None,
            wall_height_cm: Some(h),
            file: name,
            triangles: report.triangle_count,
            euler_characteristic: report.euler_characteristic,
            signed_volume_cm3: report.signed_volume_cm3,
        });
    }
    manifest.meshes = Some(MeshStage {
        plate: cfg.plate.clone(),
        plates,
        walls,
    });
    manifest.save(out)?;
    Ok(manifest)
}

/// All four stages in order.
pub fn run_pipeline(input: &Path, cfg: &PipelineConfig) -> Result<Manifest> {
    run_decompose(input, cfg).context("decompose stage")?;
    run_stipple(cfg).context("stipple stage")?;
    run_simulate(cfg).context("simulate stage")?;
    run_mesh(cfg).context("mesh stage")
}
