//! Imaging pipeline checks: the one-sided collision guarantee of the image
//! overlap test, foreground exactness, and noise behaviour of background
//! subtraction.

use vrm_core::dataset::Dataset;
use vrm_core::image::{
    background_subtract, background_subtract_with, hadamard_overlap, superimpose,
};
use vrm_core::render::{render, render_obstacle_image, SpritePainter};
use vrm_core::robot::{geometric_collision, sample_configurations, ObstacleSet};
use vrm_core::scene::Scene;
use vrm_core::Real;

#[test]
fn overlap_clear_implies_geometrically_free() {
    // One-sided guarantee on random poses of the benchmark arm, with a 2 px
    // guard band: poses touching within 2 px workspace-equivalent are skipped.
    let scene = Scene::<Real>::preset_arm3();
    let ppu = scene.cameras[0].pixels_per_unit;
    let guard = 2.0 / ppu;
    let data = Dataset::generate(scene.clone(), 1, 1).unwrap();
    let masks = data.obstacle_masks().unwrap();
    let mut painter = SpritePainter::new(scene.rows, scene.cols);

    let shrunk: Vec<_> = scene
        .obstacles
        .obstacles
        .iter()
        .map(|o| o.polygon.shrink_convex(guard))
        .collect();
    let mut solid_collisions = 0;
    for q in sample_configurations(800, &scene.robot, 99) {
        let overlap = painter
            .overlaps(&q, &scene.robot, &scene.cameras[0], &masks[0])
            .unwrap();
        if overlap {
            continue;
        }
        // No image overlap: the pose must be free of every obstacle shrunk
        // by the rasterization guard.
        for (o, s) in scene.obstacles.obstacles.iter().zip(&shrunk) {
            if let Some(sp) = s {
                let single = ObstacleSet {
                    obstacles: vec![vrm_core::robot::Obstacle {
                        polygon: sp.clone(),
                        color: o.color,
                        height: 0.0,
                    }],
                };
                assert!(
                    !geometric_collision(&q, &scene.robot, &single).unwrap(),
                    "conservativeness violated at q = {:?}",
                    q.angles
                );
            }
        }
        solid_collisions += 1;
    }
    assert!(solid_collisions > 100, "too few overlap-free poses to be meaningful");
}

#[test]
fn overlap_test_matches_dense_recomputation_on_random_poses() {
    let scene = Scene::<Real>::preset_arm3();
    let bg = scene.background_image();
    let ob_imgs: Vec<_> = scene
        .cameras
        .iter()
        .map(|cam| render_obstacle_image(&scene.obstacles, cam, &bg).unwrap())
        .collect();
    let mut painter = SpritePainter::new(scene.rows, scene.cols);
    for q in sample_configurations(120, &scene.robot, 5) {
        let img = render(&q, &scene.robot, &ObstacleSet::empty(), &scene.cameras[0], &bg).unwrap();
        let fg = background_subtract(&img, &bg).unwrap();
        let slow = hadamard_overlap(&fg, &ob_imgs[0]).unwrap();
        let fast = painter
            .overlaps(&q, &scene.robot, &scene.cameras[0], ob_imgs[0].mask())
            .unwrap();
        assert_eq!(slow, fast);
    }
}

#[test]
fn injected_noise_survives_zero_threshold() {
    let scene = Scene::<Real>::preset_arm2();
    let bg = scene.background_image();
    let mut noisy = bg.clone();
    // Flip 1% of pixels by +/- 0.5 intensity in one channel.
    let total_px = scene.rows * scene.cols;
    let flipped: Vec<usize> = (0..total_px).step_by(100).collect();
    for &px in &flipped {
        let i = 3 * px;
        noisy.pixels[i] = (noisy.pixels[i] + 0.5).min(1.0);
    }
    let fg0 = background_subtract_with(&noisy, &bg, 0.0).unwrap();
    assert_eq!(fg0.support_size(), flipped.len());
    // The default threshold also keeps them (0.5 > 1/255), which is the
    // point of the example: tau only guards 8-bit quantization error.
    let fg = background_subtract(&noisy, &bg).unwrap();
    assert_eq!(fg.support_size(), flipped.len());
}

#[test]
fn superimpose_of_pose_foregrounds_unions_supports() {
    let scene = Scene::<Real>::preset_arm2();
    let data = Dataset::generate(scene, 4, 17).unwrap();
    let fgs: Vec<_> = data.nodes.iter().map(|n| n.sprites[0].to_foreground()).collect();
    let all = superimpose(&fgs).unwrap();
    let mut union = std::collections::BTreeSet::new();
    for n in &data.nodes {
        union.extend(n.sprites[0].pixels.iter().copied());
    }
    assert_eq!(all.support_mask().indices(), union.into_iter().collect::<Vec<_>>());
}
