//! `vrm`: image-space motion planning for simulated planar robots.

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

use vrm_cli::bench::{run_benchmark, ExperimentSpec};
use vrm_cli::plan::{cmd_plan, PlanConfig, QuerySource};
use vrm_core::metrics::Metric;
use vrm_core::planner::PlannerId;

#[derive(Parser)]
#[command(
    name = "vrm",
    about = "Plan collision-free motions for a simulated planar robot entirely in image space",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample poses, render them, and write a dataset directory.
    Generate {
        /// Scene description file (TOML).
        #[arg(long)]
        scene: PathBuf,
        /// Number of poses to sample.
        #[arg(short, long)]
        n: usize,
        /// Root seed (defaults to the scene's seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Output dataset directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Plan a path between a start and a goal pose image.
    Plan(PlanArgs),
    /// Sweep metrics, planners and densities; audit edges with the gold
    /// standard; emit a CSV report.
    Benchmark {
        /// Scene description file (TOML).
        #[arg(long)]
        scene: PathBuf,
        /// Node counts, ascending.
        #[arg(long, value_delimiter = ',', default_value = "500,1000,2000,5000")]
        densities: Vec<usize>,
        /// Metrics to sweep (img_l2, rp_l2, theta_g, itp_l2, st_h).
        #[arg(long, value_delimiter = ',', default_value = "img_l2,rp_l2,theta_g,itp_l2,st_h")]
        metrics: Vec<String>,
        /// Local planners to sweep (none, lts, itp, jnst).
        #[arg(long, value_delimiter = ',', default_value = "none,lts,itp,jnst")]
        planners: Vec<String>,
        /// Neighbourhood size.
        #[arg(short, long, default_value_t = 8)]
        k: usize,
        /// Root seed (defaults to the scene's seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Gold-standard interpolation resolution in degrees.
        #[arg(long, default_value_t = 1.0)]
        epsilon_deg: f64,
        /// Random-projection dimension.
        #[arg(long, default_value_t = 2000)]
        rp_dim: usize,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Residual-variance scree of a dataset (intrinsic dimension estimate).
    Scree {
        /// Dataset directory written by `generate`.
        #[arg(long)]
        dataset: PathBuf,
        /// Neighbourhood size.
        #[arg(short, long, default_value_t = 8)]
        k: usize,
        /// Largest dimension to report.
        #[arg(long, default_value_t = 6)]
        d_max: usize,
        /// Low-pass filter radius in pixels applied before the local PCA.
        #[arg(long, default_value_t = vrm_core::roadmap::SCREE_BLUR_RADIUS)]
        blur: usize,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct PlanArgs {
    /// Dataset directory written by `generate`.
    #[arg(long)]
    dataset: PathBuf,
    /// Obstacle image (repeat per view). Defaults to the dataset scene's
    /// obstacles.
    #[arg(long)]
    obstacle: Vec<PathBuf>,
    /// Start pose image (repeat per view).
    #[arg(long)]
    start: Vec<PathBuf>,
    /// Goal pose image (repeat per view).
    #[arg(long)]
    goal: Vec<PathBuf>,
    /// Start configuration (comma-separated radians) instead of an image.
    #[arg(long, value_delimiter = ',', conflicts_with = "start")]
    start_config: Vec<f64>,
    /// Goal configuration (comma-separated radians) instead of an image.
    #[arg(long, value_delimiter = ',', conflicts_with = "goal")]
    goal_config: Vec<f64>,
    /// Metric id (img_l2, rp_l2, theta_g, itp_l2, st_h).
    #[arg(long, default_value = "st_h")]
    metric: String,
    /// Local planner id (none, lts, itp, jnst).
    #[arg(long, default_value = "jnst")]
    planner: String,
    /// Neighbourhood size.
    #[arg(short, long, default_value_t = 8)]
    k: usize,
    /// Gold-standard resolution in degrees (recorded in artifacts).
    #[arg(long, default_value_t = 1.0)]
    epsilon_deg: f64,
    /// Random-projection dimension.
    #[arg(long, default_value_t = 2000)]
    rp_dim: usize,
    /// Output directory for path artifacts.
    #[arg(long)]
    out: PathBuf,
}

fn query_source(images: Vec<PathBuf>, config: Vec<f64>, what: &str) -> Result<QuerySource> {
    match (images.is_empty(), config.is_empty()) {
        (false, true) => Ok(QuerySource::Images(images)),
        (true, false) => Ok(QuerySource::Config(config)),
        _ => bail!("give exactly one of --{what} or --{what}-config"),
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate { scene, n, seed, out } => {
            vrm_cli::cmd_generate(&scene, n, seed, &out)?;
            println!("wrote {n} poses to {}", out.display());
        }
        Command::Plan(args) => {
            let cfg = PlanConfig {
                dataset_dir: args.dataset,
                obstacle_paths: args.obstacle,
                start: query_source(args.start, args.start_config, "start")?,
                goal: query_source(args.goal, args.goal_config, "goal")?,
                metric: Metric::parse(&args.metric)?,
                planner: PlannerId::parse(&args.planner)?,
                k: args.k,
                epsilon_deg: args.epsilon_deg,
                rp_dim: args.rp_dim,
                out_dir: args.out.clone(),
            };
            let outcome = cmd_plan(&cfg)?;
            match (&outcome.path, &outcome.no_path_reason) {
                (Some(nodes), _) => println!(
                    "path with {} poses, weight {:.4}; artifacts in {}",
                    nodes.len(),
                    outcome.total_weight,
                    args.out.display()
                ),
                (None, Some(reason)) => println!("no path: {reason}"),
                _ => unreachable!(),
            }
        }
        Command::Benchmark {
            scene,
            densities,
            metrics,
            planners,
            k,
            seed,
            epsilon_deg,
            rp_dim,
            out,
        } => {
            let spec = ExperimentSpec {
                scene_path: scene,
                densities,
                metrics: metrics
                    .iter()
                    .map(|m| Metric::parse(m))
                    .collect::<vrm_core::Result<_>>()?,
                planners: planners
                    .iter()
                    .map(|p| PlannerId::parse(p))
                    .collect::<vrm_core::Result<_>>()?,
                k,
                seed,
                epsilon_deg,
                rp_dim,
            };
            let report = run_benchmark(&spec)?;
            report.write_csv(&out)?;
            let meta = out.with_extension("meta.txt");
            report.write_meta(&meta)?;
            println!("wrote {} cells to {}", report.cells.len(), out.display());
        }
        Command::Scree { dataset, k, d_max, blur, out } => {
            vrm_cli::cmd_scree(&dataset, k, d_max, blur, &out)?;
            println!("wrote scree to {}", out.display());
        }
    }
    Ok(())
}
