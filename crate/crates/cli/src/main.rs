use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use stencilforge_cli::{run_decompose, run_mesh, run_pipeline, run_simulate, run_stipple, Manifest, PipelineConfig};

/// Turn an RGB image into spray-paint stencils.
#[derive(Parser)]
#[command(name = "stencilforge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split an image into alpha layers and a palette.
    Decompose {
        input: PathBuf,
        #[command(flatten)]
        shared: Shared,
        #[command(flatten)]
        decompose: DecomposeFlags,
    },
    /// Stipple every layer listed in the manifest.
    Stipple {
        #[command(flatten)]
        shared: Shared,
        #[command(flatten)]
        stipple: StippleFlags,
    },
    /// Simulate the spray-painted result.
    Simulate {
        #[command(flatten)]
        shared: Shared,
        #[command(flatten)]
        simulate: SimulateFlags,
    },
    /// Build stencil plates and walls as binary STL.
    Mesh {
        #[command(flatten)]
        shared: Shared,
        #[command(flatten)]
        mesh: MeshFlags,
    },
    /// Run every stage.
    Pipeline {
        input: PathBuf,
        #[command(flatten)]
        shared: Shared,
        #[command(flatten)]
        decompose: DecomposeFlags,
        #[command(flatten)]
        stipple: StippleFlags,
        #[command(flatten)]
        simulate: SimulateFlags,
        #[command(flatten)]
        mesh: MeshFlags,
    },
}

#[derive(Args)]
struct Shared {
    /// Output directory (holds manifest.json).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Root random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Args)]
struct DecomposeFlags {
    /// Number of layers above the background.
    #[arg(long, value_parser = positive)]
    layers: Option<usize>,
    #[arg(long)]
    gamma_data: Option<f64>,
    #[arg(long)]
    gamma_smooth: Option<f64>,
    #[arg(long)]
    gamma_sparse: Option<f64>,
    #[arg(long)]
    max_outer_iters: Option<usize>,
}

#[derive(Args)]
struct StippleFlags {
    /// Dots per layer.
    #[arg(long, value_parser = positive)]
    dots: Option<usize>,
    #[arg(long)]
    lloyd_iters: Option<usize>,
    /// Physical size of one pixel in cm.
    #[arg(long)]
    scale: Option<f64>,
}

#[derive(Args)]
struct SimulateFlags {
    /// Nozzle heights, comma separated; one composite each.
    #[arg(long, value_delimiter = ',')]
    height: Option<Vec<f64>>,
    /// Gaussian peak height (spray time).
    #[arg(long)]
    prefactor: Option<f64>,
    /// Dot and hole radius in cm.
    #[arg(long)]
    radius: Option<f64>,
}

#[derive(Args)]
struct MeshFlags {
    /// Wall heights in cm, comma separated; one wall each.
    #[arg(long, value_delimiter = ',')]
    wall_heights: Option<Vec<f64>>,
    #[arg(long)]
    thickness: Option<f64>,
    #[arg(long)]
    hole_segments: Option<usize>,
}

impl Shared {
    fn config(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::from_file(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

impl DecomposeFlags {
    fn apply(&self, cfg: &mut PipelineConfig) {
        set(&mut cfg.layers, self.layers);
        set(&mut cfg.weights.gamma_data, self.gamma_data);
        set(&mut cfg.weights.gamma_smooth, self.gamma_smooth);
        set(&mut cfg.weights.gamma_sparse, self.gamma_sparse);
        set(&mut cfg.solver.max_outer_iters, self.max_outer_iters);
    }
}

impl StippleFlags {
    fn apply(&self, cfg: &mut PipelineConfig) {
        set(&mut cfg.dots, self.dots);
        set(&mut cfg.lloyd.max_iters, self.lloyd_iters);
        set(&mut cfg.spray.scale, self.scale);
    }
}

impl SimulateFlags {
    fn apply(&self, cfg: &mut PipelineConfig) {
        set(&mut cfg.heights, self.height.clone());
        set(&mut cfg.spray.prefactor, self.prefactor);
        if let Some(r) = self.radius {
            cfg.spray.radius_cm = r;
            cfg.plate.hole_radius_cm = r;
        }
    }
}

impl MeshFlags {
    fn apply(&self, cfg: &mut PipelineConfig) {
        set(&mut cfg.wall_heights, self.wall_heights.clone());
        set(&mut cfg.plate.thickness_cm, self.thickness);
        set(&mut cfg.plate.hole_segments, self.hole_segments);
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn report(m: &Manifest) {
    let e = &m.decomposition.final_energy;
    println!(
        "energy: data {:.6e} smooth {:.6e} sparse {:.6e} total {:.6e} ({} outer iterations, converged {})",
        e.data, e.smooth, e.sparse, e.total, m.decomposition.outer_iterations, m.decomposition.converged
    );
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Decompose { input, shared, decompose } => {
            let mut cfg = shared.config()?;
            decompose.apply(&mut cfg);
            let m = run_decompose(&input, &cfg)?;
            report(&m);
            println!("wrote {} layers to {}", m.decomposition.layers.len(), cfg.output_dir.display());
        }
        Command::Stipple { shared, stipple } => {
            let mut cfg = shared.config()?;
            stipple.apply(&mut cfg);
            let m = run_stipple(&cfg)?;
            for rec in m.stippling.iter().flat_map(|s| &s.layers) {
                match &rec.file {
                    Some(f) => println!("layer {}: {f} ({} Lloyd iterations)", rec.layer, rec.iterations),
                    None => println!("layer {}: empty, skipped", rec.layer),
                }
            }
        }
        Command::Simulate { shared, simulate } => {
            let mut cfg = shared.config()?;
            simulate.apply(&mut cfg);
            let m = run_simulate(&cfg)?;
            for run in m.simulation.iter().flat_map(|s| &s.runs) {
                println!("h = {}: {}", run.spray.height, run.composite);
            }
        }
        Command::Mesh { shared, mesh } => {
            let mut cfg = shared.config()?;
            mesh.apply(&mut cfg);
            let m = run_mesh(&cfg)?;
            for rec in m.meshes.iter().flat_map(|s| s.plates.iter().chain(&s.walls)) {
                println!("{}: {} triangles", rec.file, rec.triangles);
            }
        }
        Command::Pipeline {
            input,
            shared,
            decompose,
            stipple,
            simulate,
            mesh,
        } => {
            let mut cfg = shared.config()?;
            decompose.apply(&mut cfg);
            stipple.apply(&mut cfg);
            simulate.apply(&mut cfg);
            mesh.apply(&mut cfg);
            let m = run_pipeline(&input, &cfg)?;
            report(&m);
            println!("{} artifacts in {}", m.digests.len(), cfg.output_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
