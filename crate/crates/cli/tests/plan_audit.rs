//! End-to-end planning on the torus-topology scene: a path exists between
//! two poses separated by the wall, and every pose along it passes the
//! joint-space gold standard.

use vrm_cli::plan::PreparedPlanner;
use vrm_core::dataset::Dataset;
use vrm_core::metrics::Metric;
use vrm_core::planner::{CheckContext, PlannerId};
use vrm_core::render::SpritePainter;
use vrm_core::roadmap::QueryNode;
use vrm_core::robot::{interpolate_configurations, Configuration};
use vrm_core::scene::Scene;
use vrm_core::Real;

#[test]
fn torus_scene_path_exists_and_audits_clean() {
    let scene = Scene::<Real>::preset_arm2();
    let seed = scene.seed;
    let data = Dataset::generate(scene.clone(), 1500, seed).unwrap();
    let prepared =
        PreparedPlanner::from_dataset(data, Metric::StH, PlannerId::Jnst, 8, 1.0, 400).unwrap();

    // Two poses on either side of the wall (reachable only the long way
    // around or over the top; both are clearly free).
    let qs = Configuration::new(vec![0.9f64, 0.4], &scene.robot).unwrap();
    let qt = Configuration::new(vec![-0.9f64, -0.4], &scene.robot).unwrap();
    let start = QueryNode::from_config("start", &qs, &prepared.data).unwrap();
    let goal = QueryNode::from_config("goal", &qt, &prepared.data).unwrap();
    let run = prepared.plan(start, goal).unwrap();
    let nodes = run.path.as_ref().expect("a path exists in the torus scene");
    assert!(nodes.len() >= 2);
    assert!(run.total_weight > 0.0);

    // Gold-standard audit pose by pose: every interpolated pose along every
    // edge must clear the obstacle in the image test.
    let masks = &prepared.masks;
    let mut ctx = CheckContext::new(
        &prepared.data.scene.robot,
        &prepared.data.scene.cameras,
        prepared.data.scene.background_intensities(),
        masks,
    );
    ctx.epsilon = 1.0f64.to_radians();
    let mut painter = SpritePainter::new(scene.rows, scene.cols);
    for w in nodes.windows(2) {
        let ia = nodes.iter().position(|&x| x == w[0]).unwrap();
        let ib = nodes.iter().position(|&x| x == w[1]).unwrap();
        let qa = run.path_configs[ia].as_ref().unwrap();
        let qb = run.path_configs[ib].as_ref().unwrap();
        for q in interpolate_configurations(qa, qb, ctx.epsilon, &scene.robot).unwrap() {
            let overlap = painter
                .overlaps(&q, &scene.robot, &scene.cameras[0], &masks[0])
                .unwrap();
            assert!(!overlap, "path pose {:?} overlaps the obstacle", q.angles);
        }
    }
}
