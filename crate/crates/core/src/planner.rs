//! Visual local planners certifying roadmap edges: interpolation on the
//! local tangent space (LTS) and its superimposition shortcut, ideal
//! tracked-point joins (ITP), joins of nearest Shi-Tomasi features (JNST),
//! and the joint-space gold standard used only for evaluation.
//!
//! Every check builds one or more test images estimating the swept volume of
//! the edge and passes the edge only when those images clear the obstacle in
//! at least one camera view. Degenerate inputs resolve conservatively.

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::features::LinkFeatureSet;
use crate::metrics::{sprite_diff_dot, TrackedPointSet};
use crate::pca::{center_gram, GramPca};
use crate::raster::{draw_line, SupportMask};
use crate::render::{SparseSprite, SpritePainter};
use crate::robot::{interpolate_configurations, Configuration, RobotModel};
use crate::scalar::Scalar;

/// Local planner selector as configured in experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlannerId {
    /// No edge checking at all.
    None,
    Lts,
    Itp,
    Jnst,
}

impl PlannerId {
    pub const ALL: [PlannerId; 4] = [PlannerId::None, PlannerId::Lts, PlannerId::Itp, PlannerId::Jnst];

    pub fn id(&self) -> &'static str {
        match self {
            PlannerId::None => "none",
            PlannerId::Lts => "lts",
            PlannerId::Itp => "itp",
            PlannerId::Jnst => "jnst",
        }
    }

    pub fn parse(s: &str) -> Result<PlannerId> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(PlannerId::None),
            "lts" => Ok(PlannerId::Lts),
            "itp" => Ok(PlannerId::Itp),
            "jnst" => Ok(PlannerId::Jnst),
            other => Err(Error::UnsupportedPlanner {
                planner: other.to_string(),
                reason: "unknown planner id".into(),
            }),
        }
    }
}

impl std::fmt::Display for PlannerId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

/// What a check actually evaluated, for the certificate log.
#[derive(Debug, Clone, PartialEq)]
pub enum CheckTrace<S> {
    /// Interpolation parameters of an LTS sweep.
    Alphas(Vec<S>),
    /// Member count of a superimposition shortcut.
    Superimpose { members: usize },
    /// Number of rasterized join segments (ITP / JNST).
    Joins { segments: usize },
    /// Number of rendered poses (gold standard).
    Poses { count: usize },
    /// Nothing was generated (planner `none` or an early degenerate exit).
    Empty,
}

/// Per-edge verdict of a local planner.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerCertificate<S> {
    pub planner: &'static str,
    pub edge: (usize, usize),
    pub safe: bool,
    /// Overlap pixel count at the worst generated check image (0 when safe).
    pub worst_overlap: usize,
    pub trace: CheckTrace<S>,
    /// The LTS chart had no usable variance and the edge was failed outright.
    pub degenerate: bool,
    /// All LTS reconstruction weights stayed non-negative over the grid.
    pub nonneg_weights: bool,
}

/// Read access to per-node pipeline data; implemented by the dataset and by
/// query-extended stores.
pub trait NodeStore<S: Scalar> {
    fn views(&self) -> usize;
    fn sprite(&self, node: usize, view: usize) -> &SparseSprite<S>;
    fn markers(&self, node: usize, view: usize) -> Option<&TrackedPointSet<S>>;
    fn features(&self, node: usize, view: usize) -> Option<&LinkFeatureSet<S>>;
    fn config(&self, node: usize) -> Option<&Configuration<S>>;
}

/// Shared immutable context for edge checks.
pub struct CheckContext<'a, S: Scalar> {
    pub model: &'a RobotModel<S>,
    pub cameras: &'a [Camera<S>],
    /// Flat background color as intensities.
    pub background: [S; 3],
    /// Obstacle support per view.
    pub obstacle_masks: &'a [SupportMask],
    /// Foreground threshold on reconstructed LTS images.
    pub lts_tau: S,
    /// Interior interpolation steps of the LTS grid.
    pub lts_steps: usize,
    /// Gold-standard joint interpolation resolution (radians).
    pub epsilon: S,
}

impl<'a, S: Scalar> CheckContext<'a, S> {
    pub fn new(
        model: &'a RobotModel<S>,
        cameras: &'a [Camera<S>],
        background: [S; 3],
        obstacle_masks: &'a [SupportMask],
    ) -> Self {
        Self {
            model,
            cameras,
            background,
            obstacle_masks,
            lts_tau: S::of_f64(0.1),
            lts_steps: 10,
            epsilon: S::of_f64(1f64.to_radians()),
        }
    }
}

// ---------------------------------------------------------------------------
// Local tangent space
// ---------------------------------------------------------------------------

/// Per-edge PCA chart over the images of the common neighborhood
/// `N(u) ∩ N(v) ∪ {u, v}`.
#[derive(Debug, Clone)]
pub struct LocalChart<S> {
    pub edge: (usize, usize),
    /// Node ids of the chart members; `u` and `v` are always present.
    pub member_ids: Vec<usize>,
    pub pca: GramPca,
    /// Index of `u` / `v` within `member_ids`.
    pub u_index: usize,
    pub v_index: usize,
    _marker: std::marker::PhantomData<S>,
}

impl<S: Scalar> LocalChart<S> {
    pub fn degenerate(&self) -> bool {
        self.pca.degenerate
    }

    pub fn rank_deficient(&self) -> bool {
        self.pca.rank_deficient
    }

    /// Chart coordinates of member `idx`.
    pub fn coords_of(&self, idx: usize) -> &[f64] {
        let d = self.pca.d;
        &self.pca.coords[idx * d..(idx + 1) * d]
    }

    /// Affine member weights reconstructing the image at chart point `y`:
    /// the reconstruction is `sum_i w_i * x_i` with `sum w_i = 1`.
    pub fn member_weights(&self, y: &[f64]) -> Vec<f64> {
        let m = self.pca.m;
        let d = self.pca.d;
        let mut beta = vec![0.0f64; m];
        let mut beta_sum = 0.0f64;
        for i in 0..m {
            let mut b = 0.0;
            for l in 0..d {
                b += self.pca.coeff[i * d + l] * y[l];
            }
            beta[i] = b;
            beta_sum += b;
        }
        let shift = (1.0 - beta_sum) / m as f64;
        for b in beta.iter_mut() {
            *b += shift;
        }
        beta
    }

    /// Residual of reconstructing member `idx` from the kept directions,
    /// predicted by the discarded eigenvalue mass: `||c_idx||^2` minus the
    /// kept coordinate energy.
    pub fn member_residual_sq(&self, idx: usize, self_dot_centered: f64) -> f64 {
        let d = self.pca.d;
        let kept: f64 = (0..d).map(|l| self.pca.coords[idx * d + l].powi(2)).sum();
        (self_dot_centered - kept).max(0.0)
    }
}

/// Build the local chart of an edge from the common-neighborhood member set.
/// `member_ids` must contain `u` and `v`; PCA targets the robot DOF.
pub fn build_chart<S: Scalar>(
    edge: (usize, usize),
    member_ids: Vec<usize>,
    store: &dyn NodeStore<S>,
    ctx: &CheckContext<'_, S>,
) -> Result<LocalChart<S>> {
    let m = member_ids.len();
    if m < 2 {
        return Err(Error::ChartTooSmall(m));
    }
    let u_index = member_ids.iter().position(|&i| i == edge.0).ok_or(Error::ChartTooSmall(0))?;
    let v_index = member_ids.iter().position(|&i| i == edge.1).ok_or(Error::ChartTooSmall(0))?;
    let views = store.views();
    let mut dots = vec![0.0f64; m * m];
    for a in 0..m {
        for b in a..m {
            let mut acc = 0.0f64;
            for view in 0..views {
                acc += sprite_diff_dot(
                    store.sprite(member_ids[a], view),
                    store.sprite(member_ids[b], view),
                    &ctx.background,
                );
            }
            dots[a * m + b] = acc;
            dots[b * m + a] = acc;
        }
    }
    let gram = center_gram(&dots, m);
    let d = ctx.model.dof();
    let pca = GramPca::compute(&gram, m, d);
    Ok(LocalChart { edge, member_ids, pca, u_index, v_index, _marker: std::marker::PhantomData })
}

/// Obstacle-relevant member pixel values for one view: only pixels where
/// some member paints inside the obstacle support can ever light up a
/// reconstruction, so the sweep works on this tiny set.
struct ObstacleSlice {
    /// (member index, channel diffs) lists grouped per obstacle pixel.
    groups: Vec<Vec<(usize, [f64; 3])>>,
}

fn obstacle_slice<S: Scalar>(
    member_ids: &[usize],
    view: usize,
    store: &dyn NodeStore<S>,
    ctx: &CheckContext<'_, S>,
) -> ObstacleSlice {
    let mask = &ctx.obstacle_masks[view];
    let bg = &ctx.background;
    let mut per_pixel: std::collections::BTreeMap<u32, Vec<(usize, [f64; 3])>> =
        std::collections::BTreeMap::new();
    for (mi, &node) in member_ids.iter().enumerate() {
        let sprite = store.sprite(node, view);
        for (&px, color) in sprite.pixels.iter().zip(&sprite.colors) {
            if mask.get(px as usize) {
                let diff = [
                    color[0].as_f64() - bg[0].as_f64(),
                    color[1].as_f64() - bg[1].as_f64(),
                    color[2].as_f64() - bg[2].as_f64(),
                ];
                per_pixel.entry(px).or_default().push((mi, diff));
            }
        }
    }
    ObstacleSlice { groups: per_pixel.into_values().collect() }
}

/// Overlap pixel count of the reconstruction at member weights `w` in one
/// view: pixels of the obstacle support where the reconstructed foreground
/// magnitude exceeds `tau` in some channel.
fn reconstruction_overlap(slice: &ObstacleSlice, w: &[f64], tau: f64) -> usize {
    let mut count = 0usize;
    for group in &slice.groups {
        let mut val = [0.0f64; 3];
        for &(mi, diff) in group {
            for ch in 0..3 {
                val[ch] += w[mi] * diff[ch];
            }
        }
        if val.iter().any(|v| v.abs() > tau) {
            count += 1;
        }
    }
    count
}

/// Overlap counts (one per view) of the LTS reconstruction at interpolation
/// parameter `alpha` (`alpha = 1` reconstructs node `u`).
pub fn lts_reconstruction_overlap<S: Scalar>(
    chart: &LocalChart<S>,
    store: &dyn NodeStore<S>,
    ctx: &CheckContext<'_, S>,
    alpha: f64,
) -> Vec<usize> {
    let d = chart.pca.d;
    let yu = chart.coords_of(chart.u_index).to_vec();
    let yv = chart.coords_of(chart.v_index).to_vec();
    let y: Vec<f64> = (0..d).map(|l| alpha * yu[l] + (1.0 - alpha) * yv[l]).collect();
    let w = chart.member_weights(&y);
    (0..store.views())
        .map(|view| {
            let slice = obstacle_slice(&chart.member_ids, view, store, ctx);
            reconstruction_overlap(&slice, &w, ctx.lts_tau.as_f64())
        })
        .collect()
}

/// LTS check: interpolate chart coordinates between the endpoints on a
/// uniform interior grid, reconstruct each image, and require every
/// reconstruction to clear the obstacle in at least one view.
pub fn lts_check<S: Scalar>(
    chart: &LocalChart<S>,
    store: &dyn NodeStore<S>,
    ctx: &CheckContext<'_, S>,
) -> PlannerCertificate<S> {
    assert!(ctx.lts_steps >= 1);
    if chart.degenerate() {
        return PlannerCertificate {
            planner: "lts",
            edge: chart.edge,
            safe: false,
            worst_overlap: 0,
            trace: CheckTrace::Empty,
            degenerate: true,
            nonneg_weights: true,
        };
    }
    let views = store.views();
    let slices: Vec<ObstacleSlice> =
        (0..views).map(|v| obstacle_slice(&chart.member_ids, v, store, ctx)).collect();
    let d = chart.pca.d;
    let yu = chart.coords_of(chart.u_index).to_vec();
    let yv = chart.coords_of(chart.v_index).to_vec();
    let tau = ctx.lts_tau.as_f64();
    let steps = ctx.lts_steps;
    let mut alphas = Vec::with_capacity(steps);
    let mut worst = 0usize;
    let mut safe = true;
    let mut nonneg = true;
    for i in 1..=steps {
        let alpha = i as f64 / (steps + 1) as f64;
        alphas.push(S::of_f64(alpha));
        let y: Vec<f64> = (0..d).map(|l| alpha * yu[l] + (1.0 - alpha) * yv[l]).collect();
        let w = chart.member_weights(&y);
        if w.iter().any(|&x| x < -1e-9) {
            nonneg = false;
        }
        // The pose passes when some view shows zero overlap.
        let overlap = (0..views)
            .map(|v| reconstruction_overlap(&slices[v], &w, tau))
            .min()
            .unwrap_or(0);
        if overlap > 0 {
            safe = false;
            worst = worst.max(overlap);
        }
    }
    PlannerCertificate {
        planner: "lts",
        edge: chart.edge,
        safe,
        worst_overlap: worst,
        trace: CheckTrace::Alphas(alphas),
        degenerate: false,
        nonneg_weights: nonneg,
    }
}

/// Superimposition shortcut: the union of the member supports bounds the
/// support of any LTS reconstruction, so zero overlap of the superimposed
/// image certifies the edge without any PCA.
pub fn lts_superimpose_check<S: Scalar>(
    edge: (usize, usize),
    member_ids: &[usize],
    store: &dyn NodeStore<S>,
    ctx: &CheckContext<'_, S>,
) -> PlannerCertificate<S> {
    let views = store.views();
    let mut best: Option<usize> = None;
    for view in 0..views {
        let mask = &ctx.obstacle_masks[view];
        let mut seen = std::collections::BTreeSet::new();
        for &node in member_ids {
            let sprite = store.sprite(node, view);
            for &px in &sprite.pixels {
                if mask.get(px as usize) {
                    seen.insert(px);
                }
            }
        }
        let count = seen.len();
        best = Some(best.map_or(count, |b: usize| b.min(count)));
        if count == 0 {
            break;
        }
    }
    let overlap = best.unwrap_or(0);
    PlannerCertificate {
        planner: "lts_sup",
        edge,
        safe: overlap == 0,
        worst_overlap: overlap,
        trace: CheckTrace::Superimpose { members: member_ids.len() },
        degenerate: false,
        nonneg_weights: true,
    }
}

// ---------------------------------------------------------------------------
// Join-based planners
// ---------------------------------------------------------------------------

/// Rasterize joins into a scratch mask and count obstacle overlap.
struct JoinRaster {
    scratch: SupportMask,
}

impl JoinRaster {
    fn new(rows: usize, cols: usize) -> Self {
        Self { scratch: SupportMask::new(rows, cols) }
    }

    fn count_overlap(
        &mut self,
        joins: &[((i64, i64), (i64, i64))],
        mask: &SupportMask,
    ) -> (usize, usize) {
        self.scratch.clear();
        let (rows, cols) = (self.scratch.rows, self.scratch.cols);
        let mut overlap = 0usize;
        let mut segments = 0usize;
        for &(a, b) in joins {
            segments += 1;
            let scratch = &mut self.scratch;
            draw_line(a, b, rows, cols, |r, c| {
                let px = r * cols + c;
                if !scratch.get(px) {
                    scratch.set(px);
                    if mask.get(px) {
                        overlap += 1;
                    }
                }
            });
        }
        (overlap, segments)
    }
}

fn round_px<S: Scalar>(p: &crate::geom::Point2<S>) -> (i64, i64) {
    (p.y.as_f64().round() as i64, p.x.as_f64().round() as i64)
}

/// ITP check: join each pair of corresponding tracked markers with a 1-px
/// line (endpoints included) and test the join image against the obstacle.
pub fn itp_check<S: Scalar>(
    edge: (usize, usize),
    tp_u: &[&TrackedPointSet<S>],
    tp_v: &[&TrackedPointSet<S>],
    ctx: &CheckContext<'_, S>,
) -> Result<PlannerCertificate<S>> {
    if tp_u.len() != tp_v.len() || tp_u.len() != ctx.cameras.len() {
        return Err(Error::GeometryMismatch("tracked point views".into()));
    }
    let mut best_overlap = usize::MAX;
    let mut total_segments = 0usize;
    for (view, (u, v)) in tp_u.iter().zip(tp_v).enumerate() {
        if u.points.len() != v.points.len() {
            return Err(Error::DimensionMismatch {
                expected: u.points.len(),
                got: v.points.len(),
            });
        }
        let cam = &ctx.cameras[view];
        let joins: Vec<_> = u
            .points
            .iter()
            .zip(&v.points)
            .map(|(a, b)| (round_px(a), round_px(b)))
            .collect();
        let mut raster = JoinRaster::new(cam.rows, cam.cols);
        let (overlap, segments) = raster.count_overlap(&joins, &ctx.obstacle_masks[view]);
        total_segments += segments;
        best_overlap = best_overlap.min(overlap);
        if overlap == 0 {
            break;
        }
    }
    let overlap = if best_overlap == usize::MAX { 0 } else { best_overlap };
    Ok(PlannerCertificate {
        planner: "itp",
        edge,
        safe: overlap == 0,
        worst_overlap: overlap,
        trace: CheckTrace::Joins { segments: total_segments },
        degenerate: false,
        nonneg_weights: true,
    })
}

/// JNST check: on each link, join every feature to its nearest feature in
/// the other pose's same link (both directions, ties by point order). A link
/// visible in only one of the two poses fails the view conservatively.
pub fn jnst_check<S: Scalar>(
    edge: (usize, usize),
    f_u: &[&LinkFeatureSet<S>],
    f_v: &[&LinkFeatureSet<S>],
    ctx: &CheckContext<'_, S>,
) -> Result<PlannerCertificate<S>> {
    if f_u.len() != f_v.len() || f_u.len() != ctx.cameras.len() {
        return Err(Error::GeometryMismatch("feature set views".into()));
    }
    let mut best_overlap = usize::MAX;
    let mut total_segments = 0usize;
    let mut any_view_usable = false;
    for (view, (fu, fv)) in f_u.iter().zip(f_v).enumerate() {
        if fu.links.len() != fv.links.len() {
            return Err(Error::DimensionMismatch {
                expected: fu.links.len(),
                got: fv.links.len(),
            });
        }
        // A link with features on one side only makes this view unusable.
        if fu
            .links
            .iter()
            .zip(&fv.links)
            .any(|(a, b)| a.is_empty() != b.is_empty())
        {
            continue;
        }
        any_view_usable = true;
        let cam = &ctx.cameras[view];
        let mut joins: Vec<((i64, i64), (i64, i64))> = Vec::new();
        for (la, lb) in fu.links.iter().zip(&fv.links) {
            let mut push_nearest = |from: &[crate::geom::Point2<S>], to: &[crate::geom::Point2<S>]| {
                for p in from {
                    let mut best = f64::INFINITY;
                    let mut bq = None;
                    for q in to {
                        let dx = p.x.as_f64() - q.x.as_f64();
                        let dy = p.y.as_f64() - q.y.as_f64();
                        let d = dx * dx + dy * dy;
                        if d < best {
                            best = d;
                            bq = Some(q);
                        }
                    }
                    if let Some(q) = bq {
                        joins.push((round_px(p), round_px(q)));
                    }
                }
            };
            push_nearest(la, lb);
            push_nearest(lb, la);
        }
        let mut raster = JoinRaster::new(cam.rows, cam.cols);
        let (overlap, segments) = raster.count_overlap(&joins, &ctx.obstacle_masks[view]);
        total_segments += segments;
        best_overlap = best_overlap.min(overlap);
        if overlap == 0 {
            break;
        }
    }
    let (safe, overlap) = if !any_view_usable {
        (false, 0)
    } else {
        let o = if best_overlap == usize::MAX { 0 } else { best_overlap };
        (o == 0, o)
    };
    Ok(PlannerCertificate {
        planner: "jnst",
        edge,
        safe,
        worst_overlap: overlap,
        trace: CheckTrace::Joins { segments: total_segments },
        degenerate: !any_view_usable,
        nonneg_weights: true,
    })
}

// ---------------------------------------------------------------------------
// Gold standard
// ---------------------------------------------------------------------------

/// Evaluation oracle: render every joint-space interpolant at resolution
/// `epsilon` and apply the node-level overlap test to each pose. Never used
/// inside the visual pipeline.
pub fn gold_standard_check<S: Scalar>(
    edge: (usize, usize),
    q_u: &Configuration<S>,
    q_v: &Configuration<S>,
    ctx: &CheckContext<'_, S>,
    painters: &mut [SpritePainter],
) -> Result<PlannerCertificate<S>> {
    let poses = interpolate_configurations(q_u, q_v, ctx.epsilon, ctx.model)?;
    let views = ctx.cameras.len();
    debug_assert_eq!(painters.len(), views);
    let mut safe = true;
    let mut worst = 0usize;
    for q in &poses {
        let mut pose_free = false;
        for view in 0..views {
            if !painters[view].overlaps(q, ctx.model, &ctx.cameras[view], &ctx.obstacle_masks[view])? {
                pose_free = true;
                break;
            }
        }
        if !pose_free {
            safe = false;
            // Count the actual overlap at the failing pose for the log.
            let mut pose_worst = usize::MAX;
            for view in 0..views {
                let sprite = painters[view].sprite(q, ctx.model, &ctx.cameras[view])?;
                pose_worst = pose_worst.min(sprite.overlap_count(&ctx.obstacle_masks[view]));
            }
            worst = worst.max(pose_worst);
        }
    }
    Ok(PlannerCertificate {
        planner: "gold",
        edge,
        safe,
        worst_overlap: worst,
        trace: CheckTrace::Poses { count: poses.len() },
        degenerate: false,
        nonneg_weights: true,
    })
}
