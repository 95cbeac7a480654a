//! Two-camera pipeline: stitched distances, the at-least-one-view free
//! rule in node pruning, and multi-view planner checks.

use vrm_core::dataset::Dataset;
use vrm_core::metrics::{sprite_l2, Metric};
use vrm_core::planner::{CheckContext, PlannerId};
use vrm_core::roadmap::{build_graph_rp, metric_distance, prune_obstacle_nodes, prune_unsafe_edges};
use vrm_core::scene::Scene;
use vrm_core::Real;

const TWO_CAMERA_SCENE: &str = r#"
seed = 3

[image]
rows = 100
cols = 100

[background]
color = [0, 0, 0]

[[camera]]
mode = "orthographic"
pixels_per_unit = 21.0
center = [0.0, 0.0]

[[camera]]
mode = "perspective"
pixels_per_unit = 21.0
center = [0.4, 0.2]
height = 8.0

[robot]
kind = "arm"
link_lengths = [1.2, 0.9]
link_widths = [0.34, 0.26]
base = [0.0, 0.0]
link_colors = [[220, 60, 60], [60, 200, 80]]

[[obstacle]]
rect = [1.55, 0.3, 0.2, 0.4]
color = [230, 220, 70]
height = 0.5
"#;

fn two_view_dataset(n: usize) -> Dataset<Real> {
    let scene = Scene::<Real>::from_toml_str(TWO_CAMERA_SCENE).unwrap();
    Dataset::generate(scene, n, 5).unwrap()
}

#[test]
fn stitched_distance_is_pythagorean_over_views() {
    let mut data = two_view_dataset(40);
    let bg = data.scene.background_intensities();
    let _ = build_graph_rp(&mut data, Metric::ImgL2, 3, 64).unwrap();
    for (i, j) in [(0usize, 1usize), (3, 17), (20, 39)] {
        let d0 = sprite_l2(&data.nodes[i].sprites[0], &data.nodes[j].sprites[0], &bg);
        let d1 = sprite_l2(&data.nodes[i].sprites[1], &data.nodes[j].sprites[1], &bg);
        let stitched = metric_distance(&data, Metric::ImgL2, i, j);
        assert!(
            (stitched - (d0 * d0 + d1 * d1).sqrt()).abs() < 1e-9,
            "stitched L2 must decompose over view segments"
        );
    }
}

#[test]
fn pruning_uses_at_least_one_view_rule() {
    let mut data = two_view_dataset(120);
    let masks = data.obstacle_masks().unwrap();
    assert_eq!(masks.len(), 2);
    let g = build_graph_rp(&mut data, Metric::ImgL2, 4, 64).unwrap();
    let both = prune_obstacle_nodes(&g, &data, &masks).unwrap();
    // Single-view pruning with view 0 only.
    let single = prune_obstacle_nodes(&g, &data, &masks[..1].to_vec());
    // View-count mismatch must be rejected...
    assert!(single.is_err(), "view count mismatch should error");
    // ...and the rule itself: a node is free iff some view is overlap-free.
    for (i, node) in data.nodes.iter().enumerate() {
        let v0 = !node.sprites[0].overlaps_mask(&masks[0]);
        let v1 = !node.sprites[1].overlaps_mask(&masks[1]);
        assert_eq!(both.is_free[i], v0 || v1, "node {i}");
    }
    // Adding a view can only free nodes, never remove more: every node that
    // is overlap-free in view 0 alone must be free under both views.
    for (i, node) in data.nodes.iter().enumerate() {
        if !node.sprites[0].overlaps_mask(&masks[0]) {
            assert!(both.is_free[i]);
        }
    }
}

#[test]
fn planners_run_on_stitched_datasets() {
    let mut data = two_view_dataset(150);
    data.ensure_features();
    data.ensure_markers().unwrap();
    let masks = data.obstacle_masks().unwrap();
    for metric in [Metric::ImgL2, Metric::RpL2, Metric::StH, Metric::ItpL2] {
        let g = build_graph_rp(&mut data, metric, 4, 64).unwrap();
        let ctx = CheckContext::new(
            &data.scene.robot,
            &data.scene.cameras,
            data.scene.background_intensities(),
            &masks,
        );
        let pruned = prune_obstacle_nodes(&g, &data, &masks).unwrap();
        for planner in [PlannerId::Lts, PlannerId::Itp, PlannerId::Jnst] {
            let vetted = prune_unsafe_edges(&pruned, planner, &data, &ctx).unwrap();
            assert!(vetted.edge_count() <= pruned.edge_count());
            for (u, v, _) in vetted.edges() {
                assert!(vetted.certificates.get(&(u.min(v), u.max(v))).unwrap().safe);
            }
        }
    }
}
