//! Command line front end. Every subcommand computes first and writes
//! outputs last, so a failed run leaves no partial files behind.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ads::evaluation::{
    chamfer_l1, comparison_table, high_curvature_vertices, iteration_report, CompareOptions,
    ReferenceCloud,
};
use ads::field::Label;
use ads::geom::Vec3;
use ads::io::{self, IoError};
use ads::manifest::{self, ManifestError};
use ads::mesh::{manifold_report, optimize_mesh, reject_subsample, SurfaceMesh};
use ads::pipeline::{run, AdsConfig, PipelineError, RunOutput};
use ads::spatial::GridIndex;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "ads",
    version,
    about = "Surface sampling and meshing of occupancy functions via an adaptive Delaunay scaffold"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sampling pipeline; writes samples.ply, mesh.obj, stats.json,
    /// iterations.csv.
    Sample(SampleArgs),
    /// ADS against grid marching cubes and ray stabbing tuned to matched
    /// accuracy; writes comparison.csv and comparison.json.
    Compare(CompareArgs),
    /// Barrier and mesh-refinement ablations; writes per-variant outputs and
    /// ablation.csv.
    Ablate(AblateArgs),
    /// Collapse short edges and flip for degree balance. Pure post-processing,
    /// never touches the field.
    MeshOpt(MeshOptArgs),
    /// Thin a point cloud by repeatedly dropping the tightest pair. Also pure
    /// post-processing.
    Subsample(SubsampleArgs),
}

/// Pipeline knobs, one flag per config field. Unset flags keep the default.
#[derive(Args)]
struct ConfigFlags {
    /// Crossing-edge length threshold, the resolution knob.
    #[arg(long)]
    tau: Option<f64>,
    /// Poisson-disc scatter size for the initial scaffold.
    #[arg(long)]
    initial_points: Option<usize>,
    /// Bisection stop distance; defaults to tau / 32.
    #[arg(long)]
    search_tolerance: Option<f64>,
    /// Probe near-midpoint points before inserting the midpoint itself.
    #[arg(long)]
    barrier: Option<bool>,
    /// Barrier probe offset as a fraction of edge length.
    #[arg(long)]
    barrier_offset_fraction: Option<f64>,
    /// Face-normal divergence (degrees) that flags a mesh edge for
    /// refinement.
    #[arg(long)]
    normal_angle_threshold: Option<f64>,
    /// Mesh edges shorter than this are never flagged; defaults to tau / 2.
    #[arg(long)]
    mesh_edge_min_length: Option<f64>,
    /// Tet edges shorter than this are not split further; defaults to tau / 2.
    #[arg(long)]
    tet_edge_min_length: Option<f64>,
    /// Mesh-guided refinement rounds after the first extraction.
    #[arg(long)]
    refinement_rounds: Option<usize>,
    /// Edge-refinement wave cap per round.
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Seed for every random choice in the run.
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigFlags {
    fn apply(&self, mut config: AdsConfig) -> AdsConfig {
        if let Some(v) = self.tau {
            config.tau = v;
        }
        if let Some(v) = self.initial_points {
            config.initial_points = v;
        }
        if let Some(v) = self.search_tolerance {
            config.search_tolerance = Some(v);
        }
        if let Some(v) = self.barrier {
            config.barrier = v;
        }
        if let Some(v) = self.barrier_offset_fraction {
            config.barrier_offset_fraction = v;
        }
        if let Some(v) = self.normal_angle_threshold {
            config.normal_angle_threshold = v;
        }
        if let Some(v) = self.mesh_edge_min_length {
            config.mesh_edge_min_length = Some(v);
        }
        if let Some(v) = self.tet_edge_min_length {
            config.tet_edge_min_length = Some(v);
        }
        if let Some(v) = self.refinement_rounds {
            config.refinement_rounds = v;
        }
        if let Some(v) = self.max_iterations {
            config.max_iterations = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        config
    }
}

#[derive(Args)]
struct SampleArgs {
    /// Field to sample: .json spec, .obj mesh (winding number), or grid file.
    #[arg(long)]
    field: PathBuf,
    /// Output directory, created if missing.
    #[arg(short, long)]
    output: PathBuf,
    #[command(flatten)]
    config: ConfigFlags,
    /// Also write scaffold.csv with every scaffold vertex and its label.
    #[arg(long)]
    dump_scaffold: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Ads,
    MarchingCubes,
    RayStab,
}

#[derive(Args)]
struct CompareArgs {
    /// Field to sample: .json spec, .obj mesh (winding number), or grid file.
    #[arg(long)]
    field: PathBuf,
    /// Output directory, created if missing.
    #[arg(short, long)]
    output: PathBuf,
    /// Comma-separated tau values, one ADS resolution per value.
    #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.03, 0.02])]
    taus: Vec<f64>,
    /// Methods to tabulate. Baselines are tuned against ADS accuracy, so ADS
    /// still runs even when its rows are omitted.
    #[arg(
        long,
        value_delimiter = ',',
        default_values_t = [Method::Ads, Method::MarchingCubes, Method::RayStab],
        value_enum
    )]
    methods: Vec<Method>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Reference cloud (binary PLY). Required for grid fields, which have no
    /// surface to sample ground truth from.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Bisection rounds per marching-cubes crossing edge.
    #[arg(long, default_value_t = 5)]
    mc_refine_steps: u32,
    /// Bisection rounds per ray-stab bracket.
    #[arg(long, default_value_t = 10)]
    rrs_refine_steps: u32,
}

#[derive(Args)]
struct AblateArgs {
    /// Field to sample: .json spec, .obj mesh (winding number), or grid file.
    #[arg(long)]
    field: PathBuf,
    /// Output directory; each variant writes into its own subdirectory.
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, default_value_t = 0.03)]
    tau: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Reference cloud (binary PLY). Required for grid fields.
    #[arg(long)]
    reference: Option<PathBuf>,
}

#[derive(Args)]
struct MeshOptArgs {
    /// Input mesh (OBJ).
    #[arg(long)]
    input: PathBuf,
    /// Output directory, created if missing.
    #[arg(short, long)]
    output: PathBuf,
    /// Collapse edges shorter than this.
    #[arg(long)]
    min_edge_length: f64,
    #[arg(long, default_value_t = 3)]
    max_passes: usize,
}

#[derive(Args)]
struct SubsampleArgs {
    /// Input point cloud (binary PLY, normals carried through if present).
    #[arg(long)]
    input: PathBuf,
    /// Output directory, created if missing.
    #[arg(short, long)]
    output: PathBuf,
    /// Fraction of points to keep, in (0, 1].
    #[arg(long)]
    keep_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{0}")]
    Msg(String),
}

fn msg(m: impl Into<String>) -> CliError {
    CliError::Msg(m.into())
}

fn main() -> ExitCode {
    match run_cli() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run_cli() -> Result<ExitCode, CliError> {
    let cli = Cli::parse();
    configure_threads()?;
    match cli.command {
        Command::Sample(args) => cmd_sample(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Ablate(args) => cmd_ablate(args),
        Command::MeshOpt(args) => cmd_mesh_opt(args),
        Command::Subsample(args) => cmd_subsample(args),
    }
}

/// ADS_THREADS caps worker parallelism. Results are identical either way;
/// the knob only trades latency for core usage.
fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("ADS_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| msg(format!("ADS_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| msg(format!("failed to size thread pool: {e}")))
}

fn cmd_sample(args: SampleArgs) -> Result<ExitCode, CliError> {
    let built = manifest::load_field(&args.field)?;
    let config = args.config.apply(AdsConfig::default());
    let output = run(built.field(), &config)?;

    create_dir(&args.output)?;
    write_run_artifacts(&args.output, &output)?;
    if args.dump_scaffold {
        write_text(&args.output.join("scaffold.csv"), &scaffold_csv(&output))?;
    }

    let t = &output.stats.totals;
    println!(
        "{} samples, {} triangles, {} evaluations ({:.2} per sample)",
        t.samples, t.triangles, t.evaluations, t.evals_per_sample
    );
    if t.capped {
        eprintln!("warning: iteration cap hit before all crossing edges shrank below tau");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn write_run_artifacts(dir: &Path, output: &RunOutput) -> Result<(), CliError> {
    io::write_points_ply(
        &dir.join("samples.ply"),
        &output.samples.points,
        output.samples.normals.as_deref(),
    )?;
    io::write_mesh_obj(&dir.join("mesh.obj"), &output.mesh)?;
    write_json(&dir.join("stats.json"), &output.stats)?;
    write_text(&dir.join("iterations.csv"), &iteration_report(&output.stats))?;
    Ok(())
}

fn scaffold_csv(output: &RunOutput) -> String {
    let scaffold = &output.scaffold;
    let mut out = String::from("vertex,x,y,z,label\n");
    for (i, p) in scaffold.positions().iter().enumerate() {
        let label = match scaffold.label(i as u32) {
            Some(Label::Inside) => "inside",
            Some(Label::Outside) => "outside",
            None => "unlabeled",
        };
        out.push_str(&format!("{i},{},{},{},{label}\n", p.x, p.y, p.z));
    }
    out
}

fn load_reference(
    built: &manifest::BuiltField,
    reference: &Option<PathBuf>,
    seed: u64,
) -> Result<ReferenceCloud, CliError> {
    match reference {
        Some(path) => {
            let (points, _) = io::read_points_ply(path)?;
            if points.is_empty() {
                return Err(msg(format!("reference cloud {} is empty", path.display())));
            }
            Ok(ReferenceCloud::external(points))
        }
        None => Ok(built.reference(seed)?),
    }
}

fn cmd_compare(args: CompareArgs) -> Result<ExitCode, CliError> {
    if args.taus.is_empty() {
        return Err(msg("--taus needs at least one value"));
    }
    if args.methods.is_empty() {
        return Err(msg("--methods needs at least one value"));
    }
    let built = manifest::load_field(&args.field)?;
    let reference = load_reference(&built, &args.reference, args.seed)?;
    let opts = CompareOptions {
        taus: args.taus.clone(),
        seed: args.seed,
        with_ads: args.methods.contains(&Method::Ads),
        with_marching_cubes: args.methods.contains(&Method::MarchingCubes),
        with_ray_stab: args.methods.contains(&Method::RayStab),
        mc_refine_steps: args.mc_refine_steps,
        rrs_refine_steps: args.rrs_refine_steps,
    };
    let table = comparison_table(built.field(), &reference, &opts)?;

    create_dir(&args.output)?;
    let csv = table.to_csv();
    write_text(&args.output.join("comparison.csv"), &csv)?;
    write_text(&args.output.join("comparison.json"), &(table.to_json() + "\n"))?;
    print!("{csv}");
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct AblationRow {
    variant: String,
    barrier: bool,
    refinement_rounds: usize,
    samples: usize,
    evals: u64,
    evals_per_sample: f64,
    chamfer_x1000: f64,
    /// Fraction of samples with a neighbor closer than tau / 20.
    clustering_fraction: f64,
    /// Mesh vertices whose incident face normals spread past 30 degrees.
    high_curvature_vertices: usize,
}

fn cmd_ablate(args: AblateArgs) -> Result<ExitCode, CliError> {
    let built = manifest::load_field(&args.field)?;
    let reference = load_reference(&built, &args.reference, args.seed)?;

    // One run per distinct configuration: the default, the barrier removed,
    // and mesh-guided refinement off / doubled.
    let variants: [(&str, bool, usize); 4] = [
        ("baseline", true, 1),
        ("no_barrier", false, 1),
        ("no_mesh_refinement", true, 0),
        ("extra_mesh_refinement", true, 2),
    ];

    let mut rows: Vec<AblationRow> = Vec::new();
    let mut outputs: Vec<(String, RunOutput)> = Vec::new();
    for (name, barrier, rounds) in variants {
        let config = AdsConfig {
            tau: args.tau,
            seed: args.seed,
            barrier,
            refinement_rounds: rounds,
            ..AdsConfig::default()
        };
        let output = run(built.field(), &config)?;
        let chamfer = if output.samples.points.is_empty() {
            f64::INFINITY
        } else {
            1000.0 * chamfer_l1(&output.samples.points, &reference.points)
        };
        let t = &output.stats.totals;
        rows.push(AblationRow {
            variant: name.to_string(),
            barrier,
            refinement_rounds: rounds,
            samples: t.samples,
            evals: t.evaluations,
            evals_per_sample: t.evals_per_sample,
            chamfer_x1000: chamfer,
            clustering_fraction: clustering_fraction(&output.samples.points, args.tau / 20.0),
            high_curvature_vertices: high_curvature_vertices(&output.mesh, 30.0),
        });
        outputs.push((name.to_string(), output));
    }

    create_dir(&args.output)?;
    for (name, output) in &outputs {
        let dir = args.output.join(name);
        create_dir(&dir)?;
        write_run_artifacts(&dir, output)?;
    }
    let mut csv = String::from(
        "variant,barrier,refinement_rounds,samples,evals,evals_per_sample,\
         chamfer_x1000,clustering_fraction,high_curvature_vertices\n",
    );
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{:.4},{:.4},{:.4},{}\n",
            r.variant,
            r.barrier,
            r.refinement_rounds,
            r.samples,
            r.evals,
            r.evals_per_sample,
            r.chamfer_x1000,
            r.clustering_fraction,
            r.high_curvature_vertices
        ));
    }
    write_text(&args.output.join("ablation.csv"), &csv)?;
    write_json(&args.output.join("ablation.json"), &rows)?;
    print!("{csv}");
    Ok(ExitCode::SUCCESS)
}

/// Share of points whose nearest neighbor sits closer than `radius`.
fn clustering_fraction(points: &[Vec3], radius: f64) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let index = GridIndex::new(points);
    let close = points
        .iter()
        .enumerate()
        .filter(|(i, p)| {
            index.nearest(**p, Some(*i as u32)).is_some_and(|(_, d)| d < radius)
        })
        .count();
    close as f64 / points.len() as f64
}

fn cmd_mesh_opt(args: MeshOptArgs) -> Result<ExitCode, CliError> {
    if args.min_edge_length <= 0.0 {
        return Err(msg("--min-edge-length must be positive"));
    }
    let (vertices, triangles) = io::read_mesh_obj(&args.input)?;
    let mut mesh = SurfaceMesh { vertices, triangles, source_tets: Vec::new() };
    let before = manifold_report(&mesh);
    let stats = optimize_mesh(&mut mesh, args.min_edge_length, args.max_passes);
    let after = manifold_report(&mesh);

    create_dir(&args.output)?;
    io::write_mesh_obj(&args.output.join("optimized.obj"), &mesh)?;
    write_json(
        &args.output.join("mesh_opt.json"),
        &json!({
            "min_edge_length": args.min_edge_length,
            "max_passes": args.max_passes,
            "stats": stats,
            "before": before,
            "after": after,
        }),
    )?;
    println!(
        "collapsed {} edges, flipped {} in {} passes; {} vertices, {} triangles remain",
        stats.collapsed_edges,
        stats.flipped_edges,
        stats.passes,
        after.vertices,
        after.faces
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_subsample(args: SubsampleArgs) -> Result<ExitCode, CliError> {
    if !(args.keep_fraction > 0.0 && args.keep_fraction <= 1.0) {
        return Err(msg("--keep-fraction must be in (0, 1]"));
    }
    let (points, normals) = io::read_points_ply(&args.input)?;
    if points.is_empty() {
        return Err(msg(format!("input cloud {} is empty", args.input.display())));
    }
    let kept = reject_subsample(&points, args.keep_fraction, args.seed);
    let sub_points: Vec<Vec3> = kept.iter().map(|&i| points[i]).collect();
    let sub_normals: Option<Vec<Vec3>> =
        normals.map(|ns| kept.iter().map(|&i| ns[i]).collect());

    create_dir(&args.output)?;
    io::write_points_ply(
        &args.output.join("subsampled.ply"),
        &sub_points,
        sub_normals.as_deref(),
    )?;
    write_json(
        &args.output.join("subsample.json"),
        &json!({
            "input_points": points.len(),
            "kept_points": sub_points.len(),
            "keep_fraction": args.keep_fraction,
        }),
    )?;
    println!("kept {} of {} points", sub_points.len(), points.len());
    Ok(ExitCode::SUCCESS)
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path)
        .map_err(|e| msg(format!("create directory {}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| msg(format!("write {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| msg(format!("serialize {}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}
