//! The metric x planner x density benchmark: build a roadmap per cell,
//! prune it, audit every surviving edge with the joint-space gold standard,
//! and report bad-edge percentages as CSV.
//!
//! The gold-standard auditor shares no state with the visual pipeline: it
//! consumes only the diagnostic configurations held out on each node.

use anyhow::{Context, Result};
use rayon::prelude::*;
use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use vrm_core::dataset::{derive_seed, Dataset};
use vrm_core::metrics::Metric;
use vrm_core::planner::{CheckContext, PlannerId};
use vrm_core::render::SpritePainter;
use vrm_core::roadmap::{
    build_graph_rp, gold_audit_edge, prune_obstacle_nodes, prune_unsafe_edges,
};
use vrm_core::scene::Scene;
use vrm_core::Real;

/// Benchmark configuration (mirrors the CLI flags).
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub scene_path: PathBuf,
    /// Node counts, ascending.
    pub densities: Vec<usize>,
    pub metrics: Vec<Metric>,
    pub planners: Vec<PlannerId>,
    pub k: usize,
    /// Root seed; defaults to the scene seed.
    pub seed: Option<u64>,
    /// Gold-standard interpolation resolution in degrees.
    pub epsilon_deg: f64,
    pub rp_dim: usize,
}

impl ExperimentSpec {
    pub fn desk_scale(scene_path: PathBuf) -> Self {
        Self {
            scene_path,
            densities: vec![500, 1000, 2000, 5000],
            metrics: Metric::ALL.to_vec(),
            planners: PlannerId::ALL.to_vec(),
            k: 8,
            seed: None,
            epsilon_deg: 1.0,
            rp_dim: 2000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        anyhow::ensure!(!self.densities.is_empty(), "no densities configured");
        anyhow::ensure!(
            self.densities.windows(2).all(|w| w[0] < w[1]),
            "densities must be strictly ascending"
        );
        anyhow::ensure!(!self.metrics.is_empty(), "no metrics configured");
        anyhow::ensure!(!self.planners.is_empty(), "no planners configured");
        anyhow::ensure!(self.epsilon_deg > 0.0, "epsilon must be positive");
        Ok(())
    }
}

/// One benchmark cell.
#[derive(Debug, Clone)]
pub struct CellReport {
    pub density: usize,
    pub metric: Metric,
    pub planner: PlannerId,
    pub outcome: CellOutcome,
}

#[derive(Debug, Clone)]
pub enum CellOutcome {
    Done {
        /// Edges after obstacle-node pruning (the bad-percentage denominator).
        edges_total: usize,
        /// Edges the local planner removed.
        edges_pruned: usize,
        /// Surviving edges the gold standard finds unsafe.
        bad_edges: usize,
        /// `100 * bad_edges / edges_total` (0 when the graph has no edges).
        bad_pct: f64,
        wall_time_s: f64,
    },
    Failed {
        reason: String,
    },
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub root_seed: u64,
    pub k: usize,
    pub epsilon_deg: f64,
    pub cells: Vec<CellReport>,
    /// Per-density / per-metric build notes (component counts, timings).
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn cell(&self, density: usize, metric: Metric, planner: PlannerId) -> Option<&CellReport> {
        self.cells
            .iter()
            .find(|c| c.density == density && c.metric == metric && c.planner == planner)
    }

    pub fn bad_pct(&self, density: usize, metric: Metric, planner: PlannerId) -> Option<f64> {
        match self.cell(density, metric, planner)?.outcome {
            CellOutcome::Done { bad_pct, .. } => Some(bad_pct),
            CellOutcome::Failed { .. } => None,
        }
    }

    /// CSV with the columns `density,metric,planner,edges_total,edges_pruned,
    /// bad_pct,wall_time`. Failed cells leave the numeric fields empty.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "density",
            "metric",
            "planner",
            "edges_total",
            "edges_pruned",
            "bad_pct",
            "wall_time",
        ])?;
        for cell in &self.cells {
            match &cell.outcome {
                CellOutcome::Done { edges_total, edges_pruned, bad_pct, wall_time_s, .. } => {
                    w.write_record([
                        cell.density.to_string(),
                        cell.metric.id().to_string(),
                        cell.planner.id().to_string(),
                        edges_total.to_string(),
                        edges_pruned.to_string(),
                        format!("{bad_pct:.4}"),
                        format!("{wall_time_s:.3}"),
                    ])?;
                }
                CellOutcome::Failed { .. } => {
                    w.write_record([
                        cell.density.to_string(),
                        cell.metric.id().to_string(),
                        cell.planner.id().to_string(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Sidecar metadata: seed, parameters, notes, and failure reasons.
    pub fn write_meta(&self, path: &Path) -> Result<()> {
        let mut text = String::new();
        writeln!(text, "root_seed {}", self.root_seed)?;
        writeln!(text, "k {}", self.k)?;
        writeln!(text, "epsilon_deg {}", self.epsilon_deg)?;
        for note in &self.notes {
            writeln!(text, "note {note}")?;
        }
        for cell in &self.cells {
            if let CellOutcome::Failed { reason } = &cell.outcome {
                writeln!(
                    text,
                    "failed density={} metric={} planner={} reason={}",
                    cell.density,
                    cell.metric.id(),
                    cell.planner.id(),
                    reason
                )?;
            }
        }
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// Gold-standard verdicts per edge, shared across metrics and planners of
/// one dataset (an edge's safety depends only on its endpoint poses).
pub struct AuditCache {
    safe: HashMap<(usize, usize), bool>,
}

impl AuditCache {
    pub fn new() -> Self {
        Self { safe: HashMap::new() }
    }

    /// Audit `edges`, filling the cache; returns the number of fresh audits.
    pub fn audit_edges(
        &mut self,
        edges: &[(usize, usize)],
        data: &Dataset<Real>,
        ctx: &CheckContext<'_, Real>,
    ) -> Result<usize> {
        let fresh: Vec<(usize, usize)> =
            edges.iter().copied().filter(|e| !self.safe.contains_key(e)).collect();
        let results: Vec<((usize, usize), bool)> = fresh
            .par_iter()
            .map_init(
                || {
                    data.scene
                        .cameras
                        .iter()
                        .map(|c| SpritePainter::new(c.rows, c.cols))
                        .collect::<Vec<_>>()
                },
                |painters, &(u, v)| {
                    let cert = gold_audit_edge(u, v, data, ctx, painters)?;
                    Ok(((u, v), cert.safe))
                },
            )
            .collect::<vrm_core::Result<_>>()?;
        let n = results.len();
        self.safe.extend(results);
        Ok(n)
    }

    pub fn is_bad(&self, edge: &(usize, usize)) -> bool {
        !self.safe.get(edge).copied().unwrap_or(true)
    }
}

impl Default for AuditCache {
    fn default() -> Self {
        Self::new()
    }
}

/// Run the full benchmark sweep. Cells fail independently; everything is
/// deterministic in the root seed.
pub fn run_benchmark(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let scene: Scene<Real> = Scene::from_path(&spec.scene_path)
        .with_context(|| format!("reading scene {}", spec.scene_path.display()))?;
    let root_seed = spec.seed.unwrap_or(scene.seed);
    let mut report = ExperimentReport {
        root_seed,
        k: spec.k,
        epsilon_deg: spec.epsilon_deg,
        cells: Vec::new(),
        notes: Vec::new(),
    };

    let need_features = spec.metrics.contains(&Metric::StH)
        || spec.planners.contains(&PlannerId::Jnst);
    let need_markers = spec.metrics.contains(&Metric::ItpL2)
        || spec.planners.contains(&PlannerId::Itp);

    for &density in &spec.densities {
        let t_data = Instant::now();
        let data_seed = derive_seed(root_seed, density as u64);
        let mut data = Dataset::generate(scene.clone(), density, data_seed)?;
        if need_features {
            data.ensure_features();
        }
        if need_markers {
            data.ensure_markers()?;
        }
        let masks = data.obstacle_masks()?;
        report
            .notes
            .push(format!("density={} dataset_s={:.2}", density, t_data.elapsed().as_secs_f64()));
        let mut audits = AuditCache::new();

        for &metric in &spec.metrics {
            let t_build = Instant::now();
            let graph = match build_graph_rp(&mut data, metric, spec.k, spec.rp_dim) {
                Ok(g) => g,
                Err(e) => {
                    for &planner in &spec.planners {
                        report.cells.push(CellReport {
                            density,
                            metric,
                            planner,
                            outcome: CellOutcome::Failed { reason: e.to_string() },
                        });
                    }
                    continue;
                }
            };
            let mut ctx = CheckContext::new(
                &data.scene.robot,
                &data.scene.cameras,
                data.scene.background_intensities(),
                &masks,
            );
            ctx.epsilon = spec.epsilon_deg.to_radians();
            let pruned = prune_obstacle_nodes(&graph, &data, &masks)?;
            let edges_total = pruned.edge_count();
            let all_edges: Vec<(usize, usize)> =
                pruned.edges().into_iter().map(|(u, v, _)| (u, v)).collect();
            let t_audit = Instant::now();
            let fresh = audits.audit_edges(&all_edges, &data, &ctx)?;
            report.notes.push(format!(
                "density={} metric={} components={} free={} edges={} build_s={:.2} audited={} audit_s={:.2}",
                density,
                metric.id(),
                graph.components,
                pruned.free_count(),
                edges_total,
                t_build.elapsed().as_secs_f64(),
                fresh,
                t_audit.elapsed().as_secs_f64(),
            ));

            for &planner in &spec.planners {
                let t_cell = Instant::now();
                let outcome = match prune_unsafe_edges(&pruned, planner, &data, &ctx) {
                    Err(e) => CellOutcome::Failed { reason: e.to_string() },
                    Ok(vetted) => {
                        let surviving: HashSet<(usize, usize)> =
                            vetted.edges().into_iter().map(|(u, v, _)| (u, v)).collect();
                        let bad_edges =
                            surviving.iter().filter(|e| audits.is_bad(e)).count();
                        let bad_pct = if edges_total == 0 {
                            0.0
                        } else {
                            100.0 * bad_edges as f64 / edges_total as f64
                        };
                        CellOutcome::Done {
                            edges_total,
                            edges_pruned: edges_total - surviving.len(),
                            bad_edges,
                            bad_pct,
                            wall_time_s: t_cell.elapsed().as_secs_f64(),
                        }
                    }
                };
                report.cells.push(CellReport { density, metric, planner, outcome });
            }
        }
    }
    Ok(report)
}
