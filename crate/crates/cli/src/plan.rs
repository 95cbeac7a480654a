//! Planning runs: load a dataset, build and prune the roadmap once, then
//! answer start/goal queries and write path artifacts.

use anyhow::{bail, Context, Result};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use vrm_core::dataset::{load_png, save_png, sprite_to_image, Dataset};
use vrm_core::image::{background_subtract, ObstacleImage, RobotImage};
use vrm_core::metrics::Metric;
use vrm_core::planner::{CheckContext, CheckTrace, PlannerCertificate, PlannerId};
use vrm_core::raster::SupportMask;
use vrm_core::render::SparseSprite;
use vrm_core::roadmap::{
    build_graph_rp, insert_query, prune_obstacle_nodes, prune_unsafe_edges, shortest_path,
    PathOutcome, PrunedRoadmap, QueryNode,
};
use vrm_core::robot::Configuration;
use vrm_core::{Error, Real};

/// How a query pose is given on the command line.
pub enum QuerySource {
    /// One image path per camera view.
    Images(Vec<PathBuf>),
    /// A configuration rendered through the scene cameras.
    Config(Vec<f64>),
}

pub struct PlanConfig {
    pub dataset_dir: PathBuf,
    /// Obstacle image per view; empty means "use the dataset scene's own
    /// obstacles".
    pub obstacle_paths: Vec<PathBuf>,
    pub start: QuerySource,
    pub goal: QuerySource,
    pub metric: Metric,
    pub planner: PlannerId,
    pub k: usize,
    pub epsilon_deg: f64,
    pub rp_dim: usize,
    pub out_dir: PathBuf,
}

/// A dataset with its roadmap built, nodes pruned against the obstacle, and
/// edges vetted by the chosen planner; ready to answer queries.
pub struct PreparedPlanner {
    pub data: Dataset<Real>,
    pub masks: Vec<SupportMask>,
    pub vetted: PrunedRoadmap<Real>,
    pub planner: PlannerId,
    pub k: usize,
    pub epsilon_deg: f64,
}

/// Result of one query against a prepared planner.
pub struct PlanRun {
    /// Node ids start..goal when a path was found.
    pub path: Option<Vec<usize>>,
    pub total_weight: f64,
    pub no_path_reason: Option<String>,
    /// Diagnostic configurations along the path (for evaluation audits).
    pub path_configs: Vec<Option<Configuration<Real>>>,
    /// The graph with query nodes inserted (certificates included).
    pub extended: Option<PrunedRoadmap<Real>>,
    /// `(label, view-0 sprite, configuration)` of the two queries.
    pub query_art: Vec<(String, SparseSprite<Real>, Option<Configuration<Real>>)>,
    pub distance_computations: usize,
    pub settled_pops: usize,
}

impl PreparedPlanner {
    /// Build from an in-memory dataset, obstacles taken from its scene.
    pub fn from_dataset(
        mut data: Dataset<Real>,
        metric: Metric,
        planner: PlannerId,
        k: usize,
        epsilon_deg: f64,
        rp_dim: usize,
    ) -> Result<Self> {
        if planner == PlannerId::Jnst || metric == Metric::StH {
            data.ensure_features();
        }
        if planner == PlannerId::Itp || metric == Metric::ItpL2 {
            data.ensure_markers()?;
        }
        let masks = data.obstacle_masks()?;
        let graph = build_graph_rp(&mut data, metric, k, rp_dim)?;
        let pruned = prune_obstacle_nodes(&graph, &data, &masks)?;
        let vetted = {
            let mut ctx = CheckContext::new(
                &data.scene.robot,
                &data.scene.cameras,
                data.scene.background_intensities(),
                &masks,
            );
            ctx.epsilon = epsilon_deg.to_radians();
            prune_unsafe_edges(&pruned, planner, &data, &ctx)?
        };
        Ok(Self { data, masks, vetted, planner, k, epsilon_deg })
    }

    /// Load a dataset directory and prepare it, optionally with external
    /// obstacle images replacing the scene's own.
    pub fn load(
        dataset_dir: &Path,
        obstacle_paths: &[PathBuf],
        metric: Metric,
        planner: PlannerId,
        k: usize,
        epsilon_deg: f64,
        rp_dim: usize,
    ) -> Result<Self> {
        let mut data = Dataset::<Real>::load(dataset_dir)?;
        if planner == PlannerId::Jnst || metric == Metric::StH {
            data.ensure_features();
        }
        if planner == PlannerId::Itp || metric == Metric::ItpL2 {
            data.ensure_markers()?;
        }
        let masks = if obstacle_paths.is_empty() {
            data.obstacle_masks()?
        } else {
            if obstacle_paths.len() != data.views() {
                bail!(
                    "{} obstacle images given, dataset has {} views",
                    obstacle_paths.len(),
                    data.views()
                );
            }
            let bg = data.scene.background_image();
            let mut masks = Vec::with_capacity(obstacle_paths.len());
            for p in obstacle_paths {
                let img =
                    load_png::<Real>(p).with_context(|| format!("loading {}", p.display()))?;
                if img.rows != bg.rows || img.cols != bg.cols {
                    bail!("obstacle raster {}x{} does not match dataset", img.rows, img.cols);
                }
                let ob = ObstacleImage::from_foreground(background_subtract(&img, &bg)?);
                masks.push(ob.mask().clone());
            }
            masks
        };
        let graph = build_graph_rp(&mut data, metric, k, rp_dim)?;
        let pruned = prune_obstacle_nodes(&graph, &data, &masks)?;
        let vetted = {
            let mut ctx = CheckContext::new(
                &data.scene.robot,
                &data.scene.cameras,
                data.scene.background_intensities(),
                &masks,
            );
            ctx.epsilon = epsilon_deg.to_radians();
            prune_unsafe_edges(&pruned, planner, &data, &ctx)?
        };
        Ok(Self { data, masks, vetted, planner, k, epsilon_deg })
    }

    pub fn metric(&self) -> Metric {
        self.vetted.metric
    }

    fn ctx(&self) -> CheckContext<'_, Real> {
        let mut ctx = CheckContext::new(
            &self.data.scene.robot,
            &self.data.scene.cameras,
            self.data.scene.background_intensities(),
            &self.masks,
        );
        ctx.epsilon = self.epsilon_deg.to_radians();
        ctx
    }

    /// Answer one start/goal query. Collision or isolation of a query pose
    /// and unreachable goals are reported outcomes, not errors.
    pub fn plan(&self, start: QueryNode<Real>, goal: QueryNode<Real>) -> Result<PlanRun> {
        let query_art: Vec<(String, SparseSprite<Real>, Option<Configuration<Real>>)> =
            [&start, &goal]
                .iter()
                .map(|q| (q.label.clone(), q.sprites[0].clone(), q.config.clone()))
                .collect();
        let ctx = self.ctx();
        // Goal already reached: an identical start/goal image is a zero-length
        // path through the single (free) query pose.
        if start.sprites == goal.sprites {
            let free = start
                .sprites
                .iter()
                .zip(&self.masks)
                .any(|(sprite, mask)| !sprite.overlaps_mask(mask));
            if !free {
                return Ok(PlanRun {
                    path: None,
                    total_weight: 0.0,
                    no_path_reason: Some(
                        Error::QueryInCollision { which: "start".into() }.to_string(),
                    ),
                    path_configs: Vec::new(),
                    extended: None,
                    query_art,
                    distance_computations: 0,
                    settled_pops: 0,
                });
            }
            let config = start.config.clone();
            return Ok(PlanRun {
                path: Some(vec![self.data.len()]),
                total_weight: 0.0,
                no_path_reason: None,
                path_configs: vec![config],
                extended: None,
                query_art,
                distance_computations: 0,
                settled_pops: 0,
            });
        }
        let inserted =
            insert_query(&self.vetted, &self.data, vec![start, goal], self.k, self.planner, &ctx);
        let (extended, qstats, ids) = match inserted {
            Ok(v) => v,
            Err(e @ (Error::QueryInCollision { .. } | Error::IsolatedQuery { .. })) => {
                return Ok(PlanRun {
                    path: None,
                    total_weight: 0.0,
                    no_path_reason: Some(e.to_string()),
                    path_configs: Vec::new(),
                    extended: None,
                    query_art,
                    distance_computations: 0,
                    settled_pops: 0,
                });
            }
            Err(e) => return Err(e.into()),
        };
        let (outcome, sstats) = shortest_path(&extended, ids[0], ids[1])?;
        match outcome {
            PathOutcome::Unreachable => Ok(PlanRun {
                path: None,
                total_weight: 0.0,
                no_path_reason: Some("goal unreachable in the pruned roadmap".into()),
                path_configs: Vec::new(),
                extended: Some(extended),
                query_art,
                distance_computations: qstats.distance_computations,
                settled_pops: sstats.settled_pops,
            }),
            PathOutcome::Found(path) => {
                let n = self.data.len();
                let path_configs = path
                    .nodes
                    .iter()
                    .map(|&node| {
                        if node < n {
                            Some(self.data.nodes[node].config.clone())
                        } else {
                            query_art[node - n].2.clone()
                        }
                    })
                    .collect();
                Ok(PlanRun {
                    path: Some(path.nodes),
                    total_weight: path.total_weight,
                    no_path_reason: None,
                    path_configs,
                    extended: Some(extended),
                    query_art,
                    distance_computations: qstats.distance_computations,
                    settled_pops: sstats.settled_pops,
                })
            }
        }
    }

    /// Build a query node from the configured source.
    pub fn query(&self, label: &str, source: &QuerySource) -> Result<QueryNode<Real>> {
        Ok(match source {
            QuerySource::Images(paths) => {
                let mut images: Vec<RobotImage<Real>> = Vec::with_capacity(paths.len());
                for p in paths {
                    images.push(load_png(p).with_context(|| format!("loading {}", p.display()))?);
                }
                QueryNode::from_images(label, &images, &self.data)?
            }
            QuerySource::Config(values) => {
                let q = Configuration::new(values.clone(), &self.data.scene.robot)
                    .map_err(|e| anyhow::anyhow!("bad {label} configuration: {e}"))?;
                QueryNode::from_config(label, &q, &self.data)?
            }
        })
    }
}

fn certificate_line(cert: &PlannerCertificate<Real>) -> String {
    let trace = match &cert.trace {
        CheckTrace::Alphas(a) => format!(
            "alphas=[{}]",
            a.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(",")
        ),
        CheckTrace::Superimpose { members } => format!("superimpose_members={members}"),
        CheckTrace::Joins { segments } => format!("join_segments={segments}"),
        CheckTrace::Poses { count } => format!("poses={count}"),
        CheckTrace::Empty => "empty".to_string(),
    };
    format!(
        "planner={} u={} v={} verdict={} worst_overlap={} degenerate={} {}",
        cert.planner,
        cert.edge.0,
        cert.edge.1,
        if cert.safe { "safe" } else { "unsafe" },
        cert.worst_overlap,
        cert.degenerate,
        trace
    )
}

fn write_certificate_log(path: &Path, pruned: &PrunedRoadmap<Real>) -> Result<()> {
    let mut log = String::new();
    for cert in pruned.certificates.values() {
        log.push_str(&certificate_line(cert));
        log.push('\n');
    }
    for (edge, reason) in &pruned.removed_edges {
        writeln!(log, "removed u={} v={} reason={}", edge.0, edge.1, reason)?;
    }
    for node in &pruned.removed_nodes {
        writeln!(log, "removed_node id={node} reason=obstacle_overlap")?;
    }
    std::fs::write(path, log)?;
    Ok(())
}

fn write_roadmap_edges(path: &Path, dataset: &Path, pruned: &PrunedRoadmap<Real>) -> Result<()> {
    let mut text = format!("dataset {}\n", dataset.display());
    for (u, v, w) in pruned.edges() {
        writeln!(text, "{u} {v} {w}")?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn write_filmstrip(path: &Path, frames: &[RobotImage<Real>]) -> Result<()> {
    if frames.is_empty() {
        return Ok(());
    }
    let rows = frames[0].rows;
    let cols = frames[0].cols;
    let total_cols = cols * frames.len();
    let mut pixels = vec![0.0f64; 3 * rows * total_cols];
    for (f, img) in frames.iter().enumerate() {
        for r in 0..rows {
            for c in 0..cols {
                let src = 3 * (r * cols + c);
                let dst = 3 * (r * total_cols + f * cols + c);
                pixels[dst..dst + 3].copy_from_slice(&img.pixels[src..src + 3]);
            }
        }
    }
    save_png(path, &pixels, rows, total_cols)?;
    Ok(())
}

/// Run one planning query end to end and write artifacts into the output
/// directory: `path.txt` (ordered image-file list), the listed images,
/// `filmstrip.png`, `roadmap.txt` (edge list `i j weight`), and
/// `certificates.log`; `no_path.txt` replaces the path artifacts when
/// planning reports no path (an outcome, not an error).
pub fn cmd_plan(cfg: &PlanConfig) -> Result<PlanRun> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    let prepared = PreparedPlanner::load(
        &cfg.dataset_dir,
        &cfg.obstacle_paths,
        cfg.metric,
        cfg.planner,
        cfg.k,
        cfg.epsilon_deg,
        cfg.rp_dim,
    )?;
    write_roadmap_edges(&cfg.out_dir.join("roadmap.txt"), &cfg.dataset_dir, &prepared.vetted)?;
    let start = prepared.query("start", &cfg.start)?;
    let goal = prepared.query("goal", &cfg.goal)?;
    let run = prepared.plan(start, goal)?;
    if let Some(extended) = &run.extended {
        write_certificate_log(&cfg.out_dir.join("certificates.log"), extended)?;
    } else {
        write_certificate_log(&cfg.out_dir.join("certificates.log"), &prepared.vetted)?;
    }
    match (&run.path, &run.no_path_reason) {
        (Some(nodes), _) => {
            let n = prepared.data.len();
            let bg = prepared.data.scene.background_image();
            let mut file_list = String::new();
            let mut strip: Vec<RobotImage<Real>> = Vec::new();
            for &node in nodes {
                let (name, img) = if node < n {
                    let sprite = &prepared.data.nodes[node].sprites[0];
                    (format!("path_{node:05}.png"), sprite_to_image(sprite, &bg))
                } else {
                    let (label, sprite, _) = &run.query_art[node - n];
                    (format!("query_{label}.png"), sprite_to_image(sprite, &bg))
                };
                save_png(&cfg.out_dir.join(&name), &img.pixels, img.rows, img.cols)?;
                writeln!(file_list, "{name}")?;
                strip.push(img);
            }
            std::fs::write(cfg.out_dir.join("path.txt"), &file_list)?;
            write_filmstrip(&cfg.out_dir.join("filmstrip.png"), &strip)?;
        }
        (None, Some(reason)) => {
            std::fs::write(cfg.out_dir.join("no_path.txt"), format!("{reason}\n"))?;
        }
        _ => unreachable!(),
    }
    Ok(run)
}
