//! The visual roadmap: symmetrized k-NN graph over pose images, obstacle
//! node pruning, edge certification, start/goal insertion, shortest-path
//! search, intrinsic-dimension diagnostics, and visual inverse kinematics.

use rayon::prelude::*;
use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use crate::dataset::{Dataset, NodeData};
use crate::error::{Error, Result};
use crate::features::{link_features, LinkFeatureSet};
use crate::image::{background_subtract, RobotImage};
use crate::metrics::{
    config_geodesic, itp_l2, link_colors, st_hausdorff, sprite_diff_dot, sprite_l2,
    tracked_points, Metric, TrackedPointSet,
};
use crate::pca::{center_gram, GramPca};
use crate::planner::{
    build_chart, gold_standard_check, itp_check, jnst_check, lts_check, CheckContext, NodeStore,
    PlannerCertificate, PlannerId,
};
use crate::raster::SupportMask;
use crate::render::{SparseSprite, SpritePainter};
use crate::robot::Configuration;
use crate::scalar::Scalar;

/// Default number of Gaussian random unit vectors for the RP metric.
pub const DEFAULT_RP_DIM: usize = 2000;

/// Symmetrized k-nearest-neighbour graph over the dataset's pose images.
#[derive(Debug, Clone)]
pub struct VisualRoadmap<S> {
    pub metric: Metric,
    pub k: usize,
    /// Symmetric adjacency, each list sorted by neighbour id.
    pub adjacency: Vec<Vec<(usize, S)>>,
    /// Directed k-NN id lists (sorted by id). Local charts draw their member
    /// sets from these, collision nodes included.
    pub knn_ids: Vec<Vec<usize>>,
    /// 99th percentile of nearest-neighbour distances (out-of-manifold gate).
    pub nn_p99: S,
    /// Number of connected components (recorded, not asserted).
    pub components: usize,
}

impl<S: Scalar> VisualRoadmap<S> {
    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(|a| a.len()).sum::<usize>() / 2
    }

    /// Undirected edges with u < v.
    pub fn edges(&self) -> Vec<(usize, usize, S)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (u, adj) in self.adjacency.iter().enumerate() {
            for &(v, w) in adj {
                if u < v {
                    out.push((u, v, w));
                }
            }
        }
        out
    }
}

/// Metric distance between two dataset nodes (representation caches must be
/// prepared; `build_graph` does this automatically).
pub fn metric_distance<S: Scalar>(data: &Dataset<S>, metric: Metric, i: usize, j: usize) -> S {
    let bg = data.scene.background_intensities();
    match metric {
        Metric::ImgL2 => {
            let mut acc = 0.0f64;
            for v in 0..data.views() {
                let d = sprite_l2(&data.nodes[i].sprites[v], &data.nodes[j].sprites[v], &bg);
                acc += d.as_f64() * d.as_f64();
            }
            S::of_f64(acc.sqrt())
        }
        Metric::RpL2 => {
            let cache = data.projections.as_ref().expect("projections prepared");
            cache.projector.distance_f32(&cache.vectors[i], &cache.vectors[j])
        }
        Metric::ThetaG => {
            config_geodesic(&data.nodes[i].config, &data.nodes[j].config, &data.scene.robot)
                .expect("dataset configurations are consistent")
        }
        Metric::ItpL2 => {
            let markers = data.markers.as_ref().expect("markers prepared");
            let mut acc = 0.0f64;
            for v in 0..data.views() {
                let d = itp_l2(&markers[i][v], &markers[j][v]).expect("fixed marker count");
                acc += d.as_f64() * d.as_f64();
            }
            S::of_f64(acc.sqrt())
        }
        Metric::StH => {
            let features = data.features.as_ref().expect("features prepared");
            let mut acc = 0.0f64;
            for v in 0..data.views() {
                acc += st_hausdorff(&features[i][v], &features[j][v])
                    .expect("fixed link count")
                    .as_f64();
            }
            S::of_f64(acc)
        }
    }
}

fn prepare_metric<S: Scalar>(data: &mut Dataset<S>, metric: Metric, rp_dim: usize) -> Result<()> {
    match metric {
        Metric::ImgL2 => {}
        Metric::RpL2 => data.ensure_projections(rp_dim),
        Metric::ThetaG => {}
        Metric::ItpL2 => data.ensure_markers()?,
        Metric::StH => data.ensure_features(),
    }
    Ok(())
}

/// k-NN lists per node under `metric`: `(distance, id)` ascending, ties by id.
fn knn_rows<S: Scalar>(data: &Dataset<S>, metric: Metric, k: usize) -> Vec<Vec<(S, usize)>> {
    let n = data.len();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row: Vec<(S, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (metric_distance(data, metric, i, j), j))
                .collect();
            row.sort_unstable_by(|a, b| {
                a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1))
            });
            row.truncate(k);
            row
        })
        .collect()
}

/// Build the visual roadmap: an edge joins `i` and `j` whenever either is
/// among the other's k nearest neighbours; the weight is the metric distance.
pub fn build_graph<S: Scalar>(
    data: &mut Dataset<S>,
    metric: Metric,
    k: usize,
) -> Result<VisualRoadmap<S>> {
    build_graph_rp(data, metric, k, DEFAULT_RP_DIM)
}

/// [`build_graph`] with an explicit random-projection dimension.
pub fn build_graph_rp<S: Scalar>(
    data: &mut Dataset<S>,
    metric: Metric,
    k: usize,
    rp_dim: usize,
) -> Result<VisualRoadmap<S>> {
    let n = data.len();
    if n < k + 1 {
        return Err(Error::InsufficientNodes { needed: k + 1, got: n });
    }
    prepare_metric(data, metric, rp_dim)?;
    let rows = knn_rows(data, metric, k);

    let mut weights: BTreeMap<(usize, usize), S> = BTreeMap::new();
    for (i, row) in rows.iter().enumerate() {
        for &(d, j) in row {
            let key = (i.min(j), i.max(j));
            weights.entry(key).or_insert(d);
        }
    }
    let mut adjacency: Vec<Vec<(usize, S)>> = vec![Vec::new(); n];
    for (&(u, v), &w) in &weights {
        adjacency[u].push((v, w));
        adjacency[v].push((u, w));
    }
    for adj in &mut adjacency {
        adj.sort_unstable_by_key(|&(j, _)| j);
    }

    let mut nn: Vec<S> = rows.iter().map(|r| r.first().map_or(S::zero(), |&(d, _)| d)).collect();
    nn.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let nn_p99 = nn[((n - 1) as f64 * 0.99).floor() as usize];

    let knn_ids: Vec<Vec<usize>> = rows
        .iter()
        .map(|r| {
            let mut ids: Vec<usize> = r.iter().map(|&(_, j)| j).collect();
            ids.sort_unstable();
            ids
        })
        .collect();

    let components = count_components(&adjacency);
    Ok(VisualRoadmap { metric, k, adjacency, knn_ids, nn_p99, components })
}

fn count_components<S>(adjacency: &[Vec<(usize, S)>]) -> usize {
    let n = adjacency.len();
    let mut seen = vec![false; n];
    let mut components = 0;
    let mut stack = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(u) = stack.pop() {
            for &(v, _) in &adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
    }
    components
}

/// Roadmap after obstacle projection (and optionally edge certification).
#[derive(Debug, Clone)]
pub struct PrunedRoadmap<S> {
    pub metric: Metric,
    pub k: usize,
    /// Planner that vetted the surviving edges (`None` = unchecked).
    pub planner: PlannerId,
    pub is_free: Vec<bool>,
    /// Adjacency over free nodes only (plus inserted query nodes).
    pub adjacency: Vec<Vec<(usize, S)>>,
    /// Directed k-NN id lists of the *unpruned* graph: chart neighborhoods
    /// keep seeing collision nodes, which is what makes the superimposition
    /// and tangent-space checks conservative near obstacles.
    pub knn_ids: Vec<Vec<usize>>,
    pub removed_nodes: Vec<usize>,
    pub removed_edges: Vec<((usize, usize), String)>,
    pub certificates: BTreeMap<(usize, usize), PlannerCertificate<S>>,
    /// Node-level obstacle overlap tests performed (exactly one per node).
    pub overlap_tests: usize,
    pub nn_p99: S,
}

impl<S: Scalar> PrunedRoadmap<S> {
    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn free_count(&self) -> usize {
        self.is_free.iter().filter(|&&f| f).count()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(|a| a.len()).sum::<usize>() / 2
    }

    pub fn edges(&self) -> Vec<(usize, usize, S)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (u, adj) in self.adjacency.iter().enumerate() {
            for &(v, w) in adj {
                if u < v {
                    out.push((u, v, w));
                }
            }
        }
        out
    }
}

/// Remove every node whose foreground overlaps the obstacle image (in all
/// views) together with its incident edges. One overlap test per node.
pub fn prune_obstacle_nodes<S: Scalar>(
    graph: &VisualRoadmap<S>,
    data: &Dataset<S>,
    obstacle_masks: &[SupportMask],
) -> Result<PrunedRoadmap<S>> {
    if obstacle_masks.len() != data.views() {
        return Err(Error::GeometryMismatch(format!(
            "{} obstacle views vs {} cameras",
            obstacle_masks.len(),
            data.views()
        )));
    }
    for (mask, cam) in obstacle_masks.iter().zip(&data.scene.cameras) {
        if mask.rows != cam.rows || mask.cols != cam.cols {
            return Err(Error::GeometryMismatch("obstacle raster differs from dataset".into()));
        }
    }
    let n = graph.n();
    let mut is_free = vec![false; n];
    let mut removed_nodes = Vec::new();
    for (i, node) in data.nodes.iter().enumerate() {
        // Free when at least one view shows no overlap.
        let free = node
            .sprites
            .iter()
            .zip(obstacle_masks)
            .any(|(sprite, mask)| !sprite.overlaps_mask(mask));
        is_free[i] = free;
        if !free {
            removed_nodes.push(i);
        }
    }
    let mut adjacency: Vec<Vec<(usize, S)>> = vec![Vec::new(); n];
    for (u, adj) in graph.adjacency.iter().enumerate() {
        if !is_free[u] {
            continue;
        }
        adjacency[u] = adj.iter().filter(|&&(v, _)| is_free[v]).copied().collect();
    }
    Ok(PrunedRoadmap {
        metric: graph.metric,
        k: graph.k,
        planner: PlannerId::None,
        is_free,
        adjacency,
        knn_ids: graph.knn_ids.clone(),
        removed_nodes,
        removed_edges: Vec::new(),
        certificates: BTreeMap::new(),
        overlap_tests: n,
        nn_p99: graph.nn_p99,
    })
}

fn sorted_intersection(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Chart member set of an edge: common neighbours plus both endpoints,
/// sorted by node id.
fn chart_members(u: usize, v: usize, neighbors_u: &[usize], neighbors_v: &[usize]) -> Vec<usize> {
    let mut members = sorted_intersection(neighbors_u, neighbors_v);
    for id in [u, v] {
        if let Err(pos) = members.binary_search(&id) {
            members.insert(pos, id);
        }
    }
    members
}

/// Run one local planner on one edge. Returns `None` for [`PlannerId::None`].
pub fn check_edge<S: Scalar>(
    planner: PlannerId,
    u: usize,
    v: usize,
    neighbors_u: &[usize],
    neighbors_v: &[usize],
    store: &dyn NodeStore<S>,
    ctx: &CheckContext<'_, S>,
) -> Result<Option<PlannerCertificate<S>>> {
    match planner {
        PlannerId::None => Ok(None),
        PlannerId::Lts => {
            let members = chart_members(u, v, neighbors_u, neighbors_v);
            let chart = build_chart((u, v), members, store, ctx)?;
            Ok(Some(lts_check(&chart, store, ctx)))
        }
        PlannerId::Itp => {
            let views = store.views();
            let mut tp_u = Vec::with_capacity(views);
            let mut tp_v = Vec::with_capacity(views);
            for view in 0..views {
                tp_u.push(store.markers(u, view).ok_or_else(|| Error::UnsupportedPlanner {
                    planner: "itp".into(),
                    reason: format!("node {u} has no tracked points"),
                })?);
                tp_v.push(store.markers(v, view).ok_or_else(|| Error::UnsupportedPlanner {
                    planner: "itp".into(),
                    reason: format!("node {v} has no tracked points"),
                })?);
            }
            Ok(Some(itp_check((u, v), &tp_u, &tp_v, ctx)?))
        }
        PlannerId::Jnst => {
            let views = store.views();
            let mut f_u = Vec::with_capacity(views);
            let mut f_v = Vec::with_capacity(views);
            for view in 0..views {
                f_u.push(store.features(u, view).ok_or_else(|| Error::UnsupportedPlanner {
                    planner: "jnst".into(),
                    reason: format!("node {u} has no features"),
                })?);
                f_v.push(store.features(v, view).ok_or_else(|| Error::UnsupportedPlanner {
                    planner: "jnst".into(),
                    reason: format!("node {v} has no features"),
                })?);
            }
            Ok(Some(jnst_check((u, v), &f_u, &f_v, ctx)?))
        }
    }
}

/// Certify every edge with the chosen local planner and drop the unsafe
/// ones; every surviving edge carries its certificate.
pub fn prune_unsafe_edges<S: Scalar>(
    pruned: &PrunedRoadmap<S>,
    planner: PlannerId,
    data: &Dataset<S>,
    ctx: &CheckContext<'_, S>,
) -> Result<PrunedRoadmap<S>> {
    let mut out = pruned.clone();
    out.planner = planner;
    if planner == PlannerId::None {
        return Ok(out);
    }
    let edges = pruned.edges();
    let results: Vec<((usize, usize), PlannerCertificate<S>)> = edges
        .par_iter()
        .map(|&(u, v, _)| {
            let cert = check_edge(
                planner,
                u,
                v,
                &pruned.knn_ids[u],
                &pruned.knn_ids[v],
                data,
                ctx,
            )?
            .expect("planner is not none");
            Ok(((u, v), cert))
        })
        .collect::<Result<_>>()?;
    let mut unsafe_edges: Vec<(usize, usize)> = Vec::new();
    for ((u, v), cert) in results {
        if !cert.safe {
            unsafe_edges.push((u, v));
            out.removed_edges.push(((u, v), format!("{} unsafe", planner.id())));
        }
        out.certificates.insert((u, v), cert);
    }
    for (u, v) in unsafe_edges {
        out.adjacency[u].retain(|&(j, _)| j != v);
        out.adjacency[v].retain(|&(j, _)| j != u);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Query insertion
// ---------------------------------------------------------------------------

/// A start or goal pose presented to the planner as images.
pub struct QueryNode<S: Scalar> {
    pub label: String,
    pub sprites: Vec<SparseSprite<S>>,
    /// Diagnostics-only configuration (evaluation and baseline metrics).
    pub config: Option<Configuration<S>>,
    pub features: Option<Vec<LinkFeatureSet<S>>>,
    pub markers: Option<Vec<TrackedPointSet<S>>>,
    pub projection: Option<Vec<f32>>,
}

impl<S: Scalar> QueryNode<S> {
    /// Build a query by rendering a configuration through the scene cameras.
    pub fn from_config(label: &str, q: &Configuration<S>, data: &Dataset<S>) -> Result<Self> {
        let mut sprites = Vec::with_capacity(data.views());
        for cam in &data.scene.cameras {
            let mut painter = SpritePainter::new(cam.rows, cam.cols);
            sprites.push(painter.sprite(q, &data.scene.robot, cam)?);
        }
        let mut node = Self {
            label: label.to_string(),
            sprites,
            config: Some(q.clone()),
            features: None,
            markers: None,
            projection: None,
        };
        node.fill_features(data);
        node.markers = Some(
            data.scene
                .cameras
                .iter()
                .map(|cam| tracked_points(q, &data.scene.robot, cam))
                .collect::<Result<_>>()?,
        );
        Ok(node)
    }

    /// Build a query from raw pose images (one per view): subtract the
    /// dataset background and compute features. No configuration is known.
    pub fn from_images(label: &str, images: &[RobotImage<S>], data: &Dataset<S>) -> Result<Self> {
        if images.len() != data.views() {
            return Err(Error::GeometryMismatch(format!(
                "{} query images vs {} views",
                images.len(),
                data.views()
            )));
        }
        let bg = data.scene.background_image();
        let mut sprites = Vec::with_capacity(images.len());
        for img in images {
            let fg = background_subtract(img, &bg)?;
            sprites.push(crate::dataset::sprite_from_foreground(&fg));
        }
        let mut node = Self {
            label: label.to_string(),
            sprites,
            config: None,
            features: None,
            markers: None,
            projection: None,
        };
        node.fill_features(data);
        Ok(node)
    }

    fn fill_features(&mut self, data: &Dataset<S>) {
        let colors = link_colors(&data.scene.robot);
        self.features = Some(
            self.sprites
                .iter()
                .map(|s| link_features(s, &colors, &data.feature_params))
                .collect(),
        );
    }
}

/// Store adapter exposing dataset nodes plus trailing query nodes.
struct ExtendedStore<'a, S: Scalar> {
    data: &'a Dataset<S>,
    queries: &'a [QueryNode<S>],
}

impl<'a, S: Scalar> NodeStore<S> for ExtendedStore<'a, S> {
    fn views(&self) -> usize {
        self.data.views()
    }

    fn sprite(&self, node: usize, view: usize) -> &SparseSprite<S> {
        if node < self.data.len() {
            self.data.sprite(node, view)
        } else {
            &self.queries[node - self.data.len()].sprites[view]
        }
    }

    fn markers(&self, node: usize, view: usize) -> Option<&TrackedPointSet<S>> {
        if node < self.data.len() {
            self.data.markers(node, view)
        } else {
            self.queries[node - self.data.len()].markers.as_ref().map(|m| &m[view])
        }
    }

    fn features(&self, node: usize, view: usize) -> Option<&LinkFeatureSet<S>> {
        if node < self.data.len() {
            self.data.features(node, view)
        } else {
            self.queries[node - self.data.len()].features.as_ref().map(|f| &f[view])
        }
    }

    fn config(&self, node: usize) -> Option<&Configuration<S>> {
        if node < self.data.len() {
            self.data.config(node)
        } else {
            self.queries[node - self.data.len()].config.as_ref()
        }
    }
}

fn query_distance<S: Scalar>(
    data: &Dataset<S>,
    metric: Metric,
    query: &QueryNode<S>,
    j: usize,
) -> Result<S> {
    let bg = data.scene.background_intensities();
    match metric {
        Metric::ImgL2 => {
            let mut acc = 0.0f64;
            for v in 0..data.views() {
                let d = sprite_l2(&query.sprites[v], &data.nodes[j].sprites[v], &bg);
                acc += d.as_f64() * d.as_f64();
            }
            Ok(S::of_f64(acc.sqrt()))
        }
        Metric::RpL2 => {
            let cache = data.projections.as_ref().expect("projections prepared");
            let qp = query.projection.as_ref().expect("query projection prepared");
            Ok(cache.projector.distance_f32(qp, &cache.vectors[j]))
        }
        Metric::ThetaG => {
            let q = query.config.as_ref().ok_or_else(|| Error::UnsupportedMetric {
                metric: "theta_g".into(),
                reason: "query carries no configuration".into(),
            })?;
            config_geodesic(q, &data.nodes[j].config, &data.scene.robot)
        }
        Metric::ItpL2 => {
            let qm = query.markers.as_ref().ok_or_else(|| Error::UnsupportedMetric {
                metric: "itp_l2".into(),
                reason: "query carries no tracked points".into(),
            })?;
            let markers = data.markers.as_ref().expect("markers prepared");
            let mut acc = 0.0f64;
            for v in 0..data.views() {
                let d = itp_l2(&qm[v], &markers[j][v])?;
                acc += d.as_f64() * d.as_f64();
            }
            Ok(S::of_f64(acc.sqrt()))
        }
        Metric::StH => {
            let qf = query.features.as_ref().ok_or_else(|| Error::UnsupportedMetric {
                metric: "st_h".into(),
                reason: "query carries no features".into(),
            })?;
            let features = data.features.as_ref().expect("features prepared");
            let mut acc = 0.0f64;
            for v in 0..data.views() {
                acc += st_hausdorff(&qf[v], &features[j][v])?.as_f64();
            }
            Ok(S::of_f64(acc))
        }
    }
}

/// Bookkeeping of one query insertion.
#[derive(Debug, Clone, Copy, Default)]
pub struct QueryStats {
    /// Metric evaluations performed (one per query per surviving node).
    pub distance_computations: usize,
}

/// Insert query poses into a pruned roadmap: each query is first checked
/// against the obstacle at node level, then connected to its k nearest
/// surviving nodes with planner-vetted edges. Query ids follow the dataset
/// ids. The original graph is unmodified otherwise.
pub fn insert_query<S: Scalar>(
    pruned: &PrunedRoadmap<S>,
    data: &Dataset<S>,
    mut queries: Vec<QueryNode<S>>,
    k: usize,
    planner: PlannerId,
    ctx: &CheckContext<'_, S>,
) -> Result<(PrunedRoadmap<S>, QueryStats, Vec<usize>)> {
    let n = data.len();
    let mut stats = QueryStats::default();

    for q in &queries {
        let free = q
            .sprites
            .iter()
            .zip(ctx.obstacle_masks)
            .any(|(sprite, mask)| !sprite.overlaps_mask(mask));
        if !free {
            return Err(Error::QueryInCollision { which: q.label.clone() });
        }
    }
    if pruned.metric == Metric::RpL2 {
        let cache = data.projections.as_ref().expect("projections prepared");
        let bg = data.scene.background_intensities();
        let view_p = 3 * data.scene.rows * data.scene.cols;
        for q in &mut queries {
            let mut y = cache.background.clone();
            for (view, sprite) in q.sprites.iter().enumerate() {
                let offset = view * view_p;
                for (&px, color) in sprite.pixels.iter().zip(&sprite.colors) {
                    for ch in 0..3 {
                        let delta = (color[ch].as_f64() - bg[ch].as_f64()) as f32;
                        if delta == 0.0 {
                            continue;
                        }
                        let row_start = (offset + 3 * px as usize + ch) * cache.projector.k;
                        let row = &cache.projector.row_data()[row_start..row_start + cache.projector.k];
                        for (yj, &r) in y.iter_mut().zip(row) {
                            *yj += delta * r;
                        }
                    }
                }
            }
            q.projection = Some(y);
        }
    }

    let free_ids: Vec<usize> = (0..n).filter(|&i| pruned.is_free[i]).collect();
    let mut out = pruned.clone();
    let mut query_ids = Vec::with_capacity(queries.len());

    // Candidate neighbour lists first (distances are counted per query).
    let mut candidate_lists: Vec<Vec<(S, usize)>> = Vec::with_capacity(queries.len());
    for q in &queries {
        let mut ds: Vec<(S, usize)> = Vec::with_capacity(free_ids.len());
        for &j in &free_ids {
            ds.push((query_distance(data, pruned.metric, q, j)?, j));
        }
        stats.distance_computations += free_ids.len();
        ds.sort_unstable_by(|a, b| {
            a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1))
        });
        ds.truncate(k);
        candidate_lists.push(ds);
    }

    let store = ExtendedStore { data, queries: &queries };
    for (qi, (q, candidates)) in queries.iter().zip(&candidate_lists).enumerate() {
        let qid = n + qi;
        out.is_free.push(true);
        out.adjacency.push(Vec::new());
        let q_neighbor_ids: Vec<usize> = {
            let mut ids: Vec<usize> = candidates.iter().map(|&(_, j)| j).collect();
            ids.sort_unstable();
            ids
        };
        out.knn_ids.push(q_neighbor_ids.clone());
        let mut kept = 0usize;
        for &(d, j) in candidates {
            let cert =
                check_edge(planner, qid, j, &q_neighbor_ids, &out.knn_ids[j], &store, ctx)?;
            let safe = cert.as_ref().map_or(true, |c| c.safe);
            if let Some(c) = cert {
                out.certificates.insert((j.min(qid), j.max(qid)), c);
            }
            if safe {
                out.adjacency[qid].push((j, d));
                out.adjacency[j].push((qid, d));
                kept += 1;
            } else {
                out.removed_edges.push(((j.min(qid), j.max(qid)), format!("{} unsafe", planner.id())));
            }
        }
        if kept == 0 {
            return Err(Error::IsolatedQuery { which: q.label.clone() });
        }
        out.adjacency[qid].sort_unstable_by_key(|&(j, _)| j);
        query_ids.push(qid);
    }
    for adj in &mut out.adjacency {
        adj.sort_unstable_by_key(|&(j, _)| j);
    }
    Ok((out, stats, query_ids))
}

// ---------------------------------------------------------------------------
// Shortest path
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Default)]
pub struct SearchStats {
    /// Nodes settled by the search (at most one per node).
    pub settled_pops: usize,
    pub pushes: usize,
}

#[derive(Debug, Clone)]
pub struct PathResult<S> {
    /// Node ids from start to goal inclusive.
    pub nodes: Vec<usize>,
    pub total_weight: S,
}

#[derive(Debug, Clone)]
pub enum PathOutcome<S> {
    Found(PathResult<S>),
    /// Goal not reachable: a reported outcome, not an error.
    Unreachable,
}

struct HeapEntry {
    dist: f64,
    node: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.dist == other.dist && self.node == other.node
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap by distance, ties by node id for determinism.
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then(other.node.cmp(&self.node))
    }
}

/// Dijkstra with a lazy-deletion binary heap.
pub fn shortest_path<S: Scalar>(
    graph: &PrunedRoadmap<S>,
    s: usize,
    t: usize,
) -> Result<(PathOutcome<S>, SearchStats)> {
    let n = graph.n();
    if s >= n || t >= n {
        return Err(Error::InvalidSpec(format!("query node {} not in graph", s.max(t))));
    }
    if !graph.is_free[s] {
        return Err(Error::QueryInCollision { which: format!("node {s}") });
    }
    if !graph.is_free[t] {
        return Err(Error::QueryInCollision { which: format!("node {t}") });
    }
    let mut stats = SearchStats::default();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[s] = 0.0;
    heap.push(HeapEntry { dist: 0.0, node: s });
    stats.pushes += 1;
    while let Some(HeapEntry { dist: d, node: u }) = heap.pop() {
        if settled[u] || d > dist[u] {
            continue;
        }
        settled[u] = true;
        stats.settled_pops += 1;
        if u == t {
            break;
        }
        for &(v, w) in &graph.adjacency[u] {
            let nd = d + w.as_f64();
            if nd < dist[v] {
                dist[v] = nd;
                prev[v] = u;
                heap.push(HeapEntry { dist: nd, node: v });
                stats.pushes += 1;
            }
        }
    }
    if !settled[t] {
        return Ok((PathOutcome::Unreachable, stats));
    }
    let mut nodes = vec![t];
    let mut cur = t;
    while cur != s {
        cur = prev[cur];
        nodes.push(cur);
    }
    nodes.reverse();
    Ok((PathOutcome::Found(PathResult { nodes, total_weight: S::of_f64(dist[t]) }), stats))
}

// ---------------------------------------------------------------------------
// Intrinsic dimension
// ---------------------------------------------------------------------------

/// Residual-variance scree of local PCA over image-space neighborhoods.
#[derive(Debug, Clone)]
pub struct ScreeCurve<S> {
    /// `residuals[d-1]` = mean residual variance after keeping `d` components.
    pub residuals: Vec<S>,
    /// Nodes whose neighborhood had no variance at all (excluded from means).
    pub degenerate_nodes: Vec<usize>,
    pub k: usize,
}

/// Default smoothing radius of the scree's low-pass filter, in pixels.
pub const SCREE_BLUR_RADIUS: usize = 4;

/// Background-relative image of one node, low-pass filtered and kept sparse.
struct BlurredNode {
    idx: Vec<u32>,
    val: Vec<f32>,
}

/// Separable triangle blur (two box passes) of a sprite's deviation from the
/// background, concatenated over views.
fn blurred_diff<S: Scalar>(
    node: &NodeData<S>,
    rows: usize,
    cols: usize,
    bg: &[S; 3],
    radius: usize,
) -> BlurredNode {
    let view_p = 3 * rows * cols;
    let mut idx = Vec::new();
    let mut val = Vec::new();
    let mut dense = vec![0.0f32; view_p];
    let mut tmp = vec![0.0f32; view_p];
    for (view, sprite) in node.sprites.iter().enumerate() {
        dense.fill(0.0);
        for (&px, color) in sprite.pixels.iter().zip(&sprite.colors) {
            for ch in 0..3 {
                dense[3 * px as usize + ch] = (color[ch].as_f64() - bg[ch].as_f64()) as f32;
            }
        }
        if radius > 0 {
            let w = (2 * radius + 1) as f32;
            for _pass in 0..2 {
                // Horizontal box.
                for r in 0..rows {
                    for ch in 0..3 {
                        let mut acc = 0.0f32;
                        for c in 0..cols.min(radius) {
                            acc += dense[3 * (r * cols + c) + ch];
                        }
                        for c in 0..cols {
                            if c + radius < cols {
                                acc += dense[3 * (r * cols + c + radius) + ch];
                            }
                            tmp[3 * (r * cols + c) + ch] = acc / w;
                            if c >= radius {
                                acc -= dense[3 * (r * cols + c - radius) + ch];
                            }
                        }
                    }
                }
                // Vertical box.
                for c in 0..cols {
                    for ch in 0..3 {
                        let mut acc = 0.0f32;
                        for r in 0..rows.min(radius) {
                            acc += tmp[3 * (r * cols + c) + ch];
                        }
                        for r in 0..rows {
                            if r + radius < rows {
                                acc += tmp[3 * ((r + radius) * cols + c) + ch];
                            }
                            dense[3 * (r * cols + c) + ch] = acc / w;
                            if r >= radius {
                                acc -= tmp[3 * ((r - radius) * cols + c) + ch];
                            }
                        }
                    }
                }
            }
        }
        for (i, &v) in dense.iter().enumerate() {
            if v != 0.0 {
                idx.push((view * view_p + i) as u32);
                val.push(v);
            }
        }
    }
    BlurredNode { idx, val }
}

fn blurred_dot(a: &BlurredNode, b: &BlurredNode) -> f64 {
    let mut acc = 0.0f64;
    let (mut i, mut j) = (0usize, 0usize);
    while i < a.idx.len() && j < b.idx.len() {
        match a.idx[i].cmp(&b.idx[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                acc += (a.val[i] as f64) * (b.val[j] as f64);
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

/// Local-PCA intrinsic dimension estimate with an explicit smoothing radius.
///
/// Binary-coverage rasters embed the pose manifold non-smoothly (the image
/// moves like the square root of the pose change), which smears the local
/// spectrum across many directions. A small fixed low-pass filter restores
/// the smooth embedding a physical camera provides; the filter is linear, so
/// data that is exactly low-rank stays exactly low-rank.
pub fn intrinsic_dimension_with<S: Scalar>(
    data: &Dataset<S>,
    k: usize,
    d_max: usize,
    blur_radius: usize,
) -> Result<ScreeCurve<S>> {
    let n = data.len();
    if n < k + 1 {
        return Err(Error::InsufficientNodes { needed: k + 1, got: n });
    }
    let bg = data.scene.background_intensities();
    let (rows_px, cols_px) = (data.scene.rows, data.scene.cols);
    let blurred: Vec<BlurredNode> = data
        .nodes
        .par_iter()
        .map(|node| blurred_diff(node, rows_px, cols_px, &bg, blur_radius))
        .collect();
    // Neighborhoods are the roadmap's own image-space k-NN sets; only the
    // per-neighborhood PCA sees the smoothed images.
    let raw_rows = knn_rows(data, Metric::ImgL2, k);
    let neighbor_rows: Vec<Vec<usize>> =
        raw_rows.into_iter().map(|r| r.into_iter().map(|(_, j)| j).collect()).collect();
    let per_node: Vec<Option<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut members = vec![i];
            members.extend(neighbor_rows[i].iter().copied());
            let m = members.len();
            let mut dots = vec![0.0f64; m * m];
            for a in 0..m {
                for b in a..m {
                    let acc = blurred_dot(&blurred[members[a]], &blurred[members[b]]);
                    dots[a * m + b] = acc;
                    dots[b * m + a] = acc;
                }
            }
            let gram = center_gram(&dots, m);
            let pca = GramPca::compute(&gram, m, 1);
            if pca.degenerate {
                None
            } else {
                Some((1..=d_max).map(|d| pca.residual(d)).collect())
            }
        })
        .collect();
    let mut degenerate_nodes = Vec::new();
    let mut sums = vec![0.0f64; d_max];
    let mut count = 0usize;
    for (i, row) in per_node.iter().enumerate() {
        match row {
            None => degenerate_nodes.push(i),
            Some(res) => {
                count += 1;
                for (s, r) in sums.iter_mut().zip(res) {
                    *s += r;
                }
            }
        }
    }
    if count == 0 {
        return Err(Error::EmptyInput("all neighborhoods degenerate"));
    }
    let residuals = sums.iter().map(|&s| S::of_f64(s / count as f64)).collect();
    Ok(ScreeCurve { residuals, degenerate_nodes, k })
}

/// [`intrinsic_dimension_with`] at the default smoothing radius.
pub fn intrinsic_dimension<S: Scalar>(
    data: &Dataset<S>,
    k: usize,
    d_max: usize,
) -> Result<ScreeCurve<S>> {
    intrinsic_dimension_with(data, k, d_max, SCREE_BLUR_RADIUS)
}

// ---------------------------------------------------------------------------
// Inverse kinematics
// ---------------------------------------------------------------------------

/// Result of visual inverse kinematics for one query image.
#[derive(Debug, Clone)]
pub struct IkResult<S> {
    /// k nearest node ids, nearest first; this ranked sequence is the
    /// executable output for a replay controller.
    pub neighbor_ids: Vec<usize>,
    pub distances: Vec<S>,
    /// Affine weights over the neighbours reconstructing the query on the
    /// local chart (sum to 1).
    pub weights: Vec<S>,
    /// Reconstructed image per view.
    pub reconstructions: Vec<RobotImage<S>>,
    /// `||x - x_hat||` over all views.
    pub residual: S,
    /// Largest pairwise image distance among the neighbours.
    pub neighborhood_diameter: S,
    /// Nearest-node distance exceeded the dataset's 99th-percentile NN gap.
    pub out_of_manifold: bool,
}

/// Visual inverse kinematics: locate the query image on the roadmap by its
/// nearest images and interpolate on the local chart.
pub fn inverse_kinematics<S: Scalar>(
    query: &QueryNode<S>,
    data: &Dataset<S>,
    graph: &VisualRoadmap<S>,
    k: usize,
) -> Result<IkResult<S>> {
    let n = data.len();
    if n < k {
        return Err(Error::InsufficientNodes { needed: k, got: n });
    }
    let bg = data.scene.background_intensities();
    let dist_to = |j: usize| -> S {
        let mut acc = 0.0f64;
        for v in 0..data.views() {
            let d = sprite_l2(&query.sprites[v], &data.nodes[j].sprites[v], &bg);
            acc += d.as_f64() * d.as_f64();
        }
        S::of_f64(acc.sqrt())
    };
    let mut ds: Vec<(S, usize)> = (0..n).map(|j| (dist_to(j), j)).collect();
    ds.sort_unstable_by(|a, b| {
        a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1))
    });
    ds.truncate(k);
    let neighbor_ids: Vec<usize> = ds.iter().map(|&(_, j)| j).collect();
    let distances: Vec<S> = ds.iter().map(|&(d, _)| d).collect();
    let out_of_manifold = distances[0] > graph.nn_p99;

    let mut diameter = 0.0f64;
    for a in 0..neighbor_ids.len() {
        for b in (a + 1)..neighbor_ids.len() {
            let mut acc = 0.0f64;
            for v in 0..data.views() {
                let d = sprite_l2(
                    &data.nodes[neighbor_ids[a]].sprites[v],
                    &data.nodes[neighbor_ids[b]].sprites[v],
                    &bg,
                );
                acc += d.as_f64() * d.as_f64();
            }
            diameter = diameter.max(acc.sqrt());
        }
    }

    // Exact hit: weight 1 on the matching node, reconstruction = query.
    if distances[0] == S::zero() {
        let mut weights = vec![S::zero(); neighbor_ids.len()];
        weights[0] = S::one();
        let bg_img = data.scene.background_image();
        let reconstructions = query
            .sprites
            .iter()
            .map(|s| crate::dataset::sprite_to_image(s, &bg_img))
            .collect();
        return Ok(IkResult {
            neighbor_ids,
            distances,
            weights,
            reconstructions,
            residual: S::zero(),
            neighborhood_diameter: S::of_f64(diameter),
            out_of_manifold,
        });
    }

    // Local chart over the neighborhood, query projected onto it.
    let m = neighbor_ids.len();
    let mut dots = vec![0.0f64; m * m];
    for a in 0..m {
        for b in a..m {
            let mut acc = 0.0f64;
            for v in 0..data.views() {
                acc += sprite_diff_dot(
                    &data.nodes[neighbor_ids[a]].sprites[v],
                    &data.nodes[neighbor_ids[b]].sprites[v],
                    &bg,
                );
            }
            dots[a * m + b] = acc;
            dots[b * m + a] = acc;
        }
    }
    let row_means: Vec<f64> =
        (0..m).map(|i| (0..m).map(|j| dots[i * m + j]).sum::<f64>() / m as f64).collect();
    let total_mean = row_means.iter().sum::<f64>() / m as f64;
    let gram = center_gram(&dots, m);
    let d = data.scene.robot.dof();
    let pca = GramPca::compute(&gram, m, d);

    let mut q_dots = vec![0.0f64; m];
    for (a, &id) in neighbor_ids.iter().enumerate() {
        let mut acc = 0.0f64;
        for v in 0..data.views() {
            acc += sprite_diff_dot(&query.sprites[v], &data.nodes[id].sprites[v], &bg);
        }
        q_dots[a] = acc;
    }
    let q_mean = q_dots.iter().sum::<f64>() / m as f64;
    // <c_i, x - mu> from raw dots by the same double-centering.
    let centered_q: Vec<f64> =
        (0..m).map(|i| q_dots[i] - row_means[i] - q_mean + total_mean).collect();
    let mut y = vec![0.0f64; d];
    for l in 0..d {
        let mut acc = 0.0;
        for i in 0..m {
            acc += pca.coeff[i * d + l] * centered_q[i];
        }
        y[l] = acc;
    }
    // Affine member weights for the reconstruction.
    let mut beta = vec![0.0f64; m];
    let mut beta_sum = 0.0;
    for i in 0..m {
        let mut b = 0.0;
        for l in 0..d {
            b += pca.coeff[i * d + l] * y[l];
        }
        beta[i] = b;
        beta_sum += b;
    }
    let shift = (1.0 - beta_sum) / m as f64;
    let weights_f: Vec<f64> = beta.iter().map(|&b| b + shift).collect();

    // Dense reconstruction per view and residual against the query.
    let bg_img = data.scene.background_image();
    let mut reconstructions = Vec::with_capacity(data.views());
    let mut residual_sq = 0.0f64;
    for v in 0..data.views() {
        let mut img = bg_img.clone();
        for (i, &id) in neighbor_ids.iter().enumerate() {
            let w = weights_f[i];
            if w == 0.0 {
                continue;
            }
            let sprite = &data.nodes[id].sprites[v];
            for (&px, color) in sprite.pixels.iter().zip(&sprite.colors) {
                for ch in 0..3 {
                    let base = bg[ch].as_f64();
                    let cur = img.pixels[3 * px as usize + ch].as_f64();
                    img.pixels[3 * px as usize + ch] =
                        S::of_f64(cur + w * (color[ch].as_f64() - base));
                }
            }
        }
        // Residual over this view: query image minus reconstruction.
        let q_img = crate::dataset::sprite_to_image(&query.sprites[v], &bg_img);
        for (a, b) in q_img.pixels.iter().zip(&img.pixels) {
            let dd = a.as_f64() - b.as_f64();
            residual_sq += dd * dd;
        }
        reconstructions.push(img);
    }

    Ok(IkResult {
        neighbor_ids,
        distances,
        weights: weights_f.iter().map(|&w| S::of_f64(w)).collect(),
        reconstructions,
        residual: S::of_f64(residual_sq.sqrt()),
        neighborhood_diameter: S::of_f64(diameter),
        out_of_manifold,
    })
}

/// Gold-standard audit of one edge by node ids (diagnostic configurations
/// required). Used by the benchmark and path audits, never by planning.
pub fn gold_audit_edge<S: Scalar>(
    u: usize,
    v: usize,
    store: &dyn NodeStore<S>,
    ctx: &CheckContext<'_, S>,
    painters: &mut [SpritePainter],
) -> Result<PlannerCertificate<S>> {
    let qu = store.config(u).ok_or(Error::MissingConfiguration(u))?.clone();
    let qv = store.config(v).ok_or(Error::MissingConfiguration(v))?.clone();
    gold_standard_check((u, v), &qu, &qv, ctx, painters)
}

/// Extended store for gold audits over graphs with query nodes.
pub fn extended_store<'a, S: Scalar>(
    data: &'a Dataset<S>,
    queries: &'a [QueryNode<S>],
) -> impl NodeStore<S> + 'a {
    ExtendedStore { data, queries }
}
