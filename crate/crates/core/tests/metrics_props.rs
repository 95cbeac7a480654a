//! Metric axioms as property tests, random-projection fidelity at desk
//! scale, and the Shi-Tomasi brute-force oracle.

use proptest::prelude::*;
use vrm_core::features::{shi_tomasi_gray, ShiTomasiParams};
use vrm_core::geom::Point2;
use vrm_core::image::RobotImage;
use vrm_core::metrics::{hausdorff, image_l2, itp_l2, joint_geodesic, RandomProjector, TrackedPointSet};
use vrm_core::robot::Configuration;

fn small_image(vals: &[f64]) -> RobotImage<f64> {
    // 4x4 RGB image from 48 intensities.
    RobotImage { rows: 4, cols: 4, pixels: vals.to_vec(), config: None }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn image_l2_metric_axioms(
        a in prop::collection::vec(0.0f64..1.0, 48),
        b in prop::collection::vec(0.0f64..1.0, 48),
        c in prop::collection::vec(0.0f64..1.0, 48),
    ) {
        let (x, y, z) = (small_image(&a), small_image(&b), small_image(&c));
        let dxy = image_l2(&x, &y).unwrap();
        let dyx = image_l2(&y, &x).unwrap();
        prop_assert!((dxy - dyx).abs() < 1e-12);
        prop_assert_eq!(image_l2(&x, &x).unwrap(), 0.0);
        let dxz = image_l2(&x, &z).unwrap();
        let dyz = image_l2(&y, &z).unwrap();
        prop_assert!(dxz <= dxy + dyz + 1e-9);
    }

    #[test]
    fn joint_geodesic_metric_axioms(
        a in prop::collection::vec(0.0f64..std::f64::consts::TAU, 3),
        b in prop::collection::vec(0.0f64..std::f64::consts::TAU, 3),
        c in prop::collection::vec(0.0f64..std::f64::consts::TAU, 3),
    ) {
        let q = |v: &[f64]| Configuration::<f64> { angles: v.to_vec() };
        let (x, y, z) = (q(&a), q(&b), q(&c));
        prop_assert_eq!(joint_geodesic(&x, &x).unwrap(), 0.0);
        let dxy = joint_geodesic(&x, &y).unwrap();
        prop_assert!((dxy - joint_geodesic(&y, &x).unwrap()).abs() < 1e-12);
        let dxz = joint_geodesic(&x, &z).unwrap();
        let dyz = joint_geodesic(&y, &z).unwrap();
        prop_assert!(dxz <= dxy + dyz + 1e-9);
    }

    #[test]
    fn itp_metric_axioms(
        a in prop::collection::vec((0.0f64..100.0, 0.0f64..100.0), 6),
        b in prop::collection::vec((0.0f64..100.0, 0.0f64..100.0), 6),
        c in prop::collection::vec((0.0f64..100.0, 0.0f64..100.0), 6),
    ) {
        let tp = |v: &[(f64, f64)]| TrackedPointSet {
            points: v.iter().map(|&(x, y)| Point2::new(x, y)).collect(),
        };
        let (x, y, z) = (tp(&a), tp(&b), tp(&c));
        prop_assert_eq!(itp_l2(&x, &x).unwrap(), 0.0);
        let dxy = itp_l2(&x, &y).unwrap();
        prop_assert!((dxy - itp_l2(&y, &x).unwrap()).abs() < 1e-12);
        prop_assert!(itp_l2(&x, &z).unwrap() <= dxy + itp_l2(&y, &z).unwrap() + 1e-9);
    }

    #[test]
    fn hausdorff_metric_axioms(
        a in prop::collection::vec((0.0f64..50.0, 0.0f64..50.0), 1..8),
        b in prop::collection::vec((0.0f64..50.0, 0.0f64..50.0), 1..8),
        c in prop::collection::vec((0.0f64..50.0, 0.0f64..50.0), 1..8),
    ) {
        let ps = |v: &[(f64, f64)]| -> Vec<Point2<f64>> {
            v.iter().map(|&(x, y)| Point2::new(x, y)).collect()
        };
        let (x, y, z) = (ps(&a), ps(&b), ps(&c));
        prop_assert_eq!(hausdorff(&x, &x).unwrap(), 0.0);
        let dxy = hausdorff(&x, &y).unwrap();
        prop_assert!((dxy - hausdorff(&y, &x).unwrap()).abs() < 1e-12);
        // Triangle inequality on compact sets.
        let dxz = hausdorff(&x, &z).unwrap();
        let dyz = hausdorff(&y, &z).unwrap();
        prop_assert!(dxz <= dxy + dyz + 1e-9);
    }
}

#[test]
fn random_projection_preserves_distances_at_desk_scale() {
    // 12x12 images (p = 432) projected to k = 400: the JL estimate
    // sqrt(8 ln n / k) stays under 30% for this pair budget.
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let p = 3 * 12 * 12;
    let rp = RandomProjector::new(p, 400, 77);
    let mut ok = 0;
    let total = 60;
    for _ in 0..total {
        let a: Vec<f64> = (0..p).map(|_| rng.random_range(0.0..1.0)).collect();
        let b: Vec<f64> = (0..p).map(|_| rng.random_range(0.0..1.0)).collect();
        let ia = RobotImage { rows: 12, cols: 12, pixels: a, config: None };
        let ib = RobotImage { rows: 12, cols: 12, pixels: b, config: None };
        let exact = image_l2(&ia, &ib).unwrap();
        let approx = rp.rp_l2(&rp.project(&ia).unwrap(), &rp.project(&ib).unwrap()).unwrap();
        if (approx - exact).abs() / exact <= 0.3 {
            ok += 1;
        }
    }
    assert!(ok >= total - 1, "only {ok}/{total} pairs within 30%");
}

// ---------------------------------------------------------------------------
// Shi-Tomasi oracle
// ---------------------------------------------------------------------------

/// Brute-force detector written from scratch: dense Sobel maps, explicit
/// window sums, insertion-ordered greedy suppression.
fn brute_force_detector(gray: &[f64], rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let g = |r: i64, c: i64| -> f64 {
        if r < 0 || c < 0 || r >= rows as i64 || c >= cols as i64 {
            0.0
        } else {
            gray[r as usize * cols + c as usize]
        }
    };
    let mut gxm = vec![0.0; rows * cols];
    let mut gym = vec![0.0; rows * cols];
    for r in 0..rows as i64 {
        for c in 0..cols as i64 {
            gxm[r as usize * cols + c as usize] = g(r - 1, c + 1) - g(r - 1, c - 1)
                + 2.0 * (g(r, c + 1) - g(r, c - 1))
                + g(r + 1, c + 1)
                - g(r + 1, c - 1);
            gym[r as usize * cols + c as usize] = g(r + 1, c - 1) - g(r - 1, c - 1)
                + 2.0 * (g(r + 1, c) - g(r - 1, c))
                + g(r + 1, c + 1)
                - g(r - 1, c + 1);
        }
    }
    let gv = |m: &[f64], r: i64, c: i64| -> f64 {
        if r < 0 || c < 0 || r >= rows as i64 || c >= cols as i64 {
            0.0
        } else {
            m[r as usize * cols + c as usize]
        }
    };
    let mut resp = vec![0.0f64; rows * cols];
    let mut max_resp = 0.0f64;
    for r in 0..rows as i64 {
        for c in 0..cols as i64 {
            let (mut a, mut b, mut d) = (0.0, 0.0, 0.0);
            for dr in -1..=1i64 {
                for dc in -1..=1i64 {
                    let x = gv(&gxm, r + dr, c + dc);
                    let y = gv(&gym, r + dr, c + dc);
                    a += x * x;
                    b += x * y;
                    d += y * y;
                }
            }
            let l = 0.5 * (a + d - ((a - d) * (a - d) + 4.0 * b * b).sqrt());
            resp[r as usize * cols + c as usize] = l;
            if l > max_resp {
                max_resp = l;
            }
        }
    }
    if max_resp <= 0.0 {
        return Vec::new();
    }
    let mut cand: Vec<(usize, usize, f64)> = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let l = resp[r * cols + c];
            if l >= 0.05 * max_resp && l > 0.0 {
                cand.push((r, c, l));
            }
        }
    }
    cand.sort_by(|x, y| y.2.partial_cmp(&x.2).unwrap().then(x.0.cmp(&y.0)).then(x.1.cmp(&y.1)));
    let mut kept: Vec<(usize, usize)> = Vec::new();
    for (r, c, _) in cand {
        if kept.len() >= 25 {
            break;
        }
        if kept.iter().all(|&(kr, kc)| {
            let dr = kr as f64 - r as f64;
            let dc = kc as f64 - c as f64;
            dr * dr + dc * dc >= 9.0
        }) {
            kept.push((r, c));
        }
    }
    kept
}

#[test]
fn shi_tomasi_matches_brute_force_oracle() {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(404);
    let (rows, cols) = (48usize, 48usize);
    for case in 0..20 {
        let mut gray = vec![0.0f64; rows * cols];
        // One or two random solid rectangles.
        let n_rects = 1 + case % 2;
        for _ in 0..n_rects {
            let r0 = rng.random_range(4..20);
            let c0 = rng.random_range(4..20);
            let h = rng.random_range(8..24);
            let w = rng.random_range(8..24);
            let v = rng.random_range(0.4..1.0);
            for r in r0..(r0 + h).min(rows) {
                for c in c0..(c0 + w).min(cols) {
                    gray[r * cols + c] = v;
                }
            }
        }
        let ours = shi_tomasi_gray::<f64>(&gray, rows, cols, &ShiTomasiParams::default());
        let oracle = brute_force_detector(&gray, rows, cols);
        assert_eq!(ours.len(), oracle.len(), "case {case}: count mismatch");
        // Every detection within the NMS radius of an oracle detection and
        // vice versa.
        let near = |x: f64, y: f64, set: &[(usize, usize)]| {
            set.iter().any(|&(r, c)| {
                let d = (x - c as f64).powi(2) + (y - r as f64).powi(2);
                d.sqrt() <= 3.0
            })
        };
        for p in &ours {
            assert!(near(p.x, p.y, &oracle), "case {case}: {p:?} not near oracle");
        }
        let ours_px: Vec<(usize, usize)> =
            ours.iter().map(|p| (p.y as usize, p.x as usize)).collect();
        for &(r, c) in &oracle {
            let hit = ours_px.iter().any(|&(rr, cc)| {
                let d = (rr as f64 - r as f64).powi(2) + (cc as f64 - c as f64).powi(2);
                d.sqrt() <= 3.0
            });
            assert!(hit, "case {case}: oracle corner ({r},{c}) missed");
        }
    }
}
