//! The five configuration-space representations and their distances:
//! raw image L2, random-projection L2, joint-angle geodesic, ideal
//! tracked-point L2, and link-wise Shi-Tomasi Hausdorff.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::features::LinkFeatureSet;
use crate::geom::Point2;
use crate::image::RobotImage;
use crate::render::SparseSprite;
use crate::robot::{Configuration, JointKind, RobotModel};
use crate::scalar::Scalar;
use crate::{angles, Rgb};

/// Identifier of one representation + distance pairing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    /// Raw RGB image vectors under Euclidean distance.
    ImgL2,
    /// Random projections of image vectors under (calibrated) Euclidean distance.
    RpL2,
    /// Joint angle vectors under summed circular geodesic distance.
    ThetaG,
    /// Concatenated ideal tracked-point coordinates under Euclidean distance.
    ItpL2,
    /// Link-wise Shi-Tomasi feature sets under summed Hausdorff distance.
    StH,
}

impl Metric {
    pub const ALL: [Metric; 5] =
        [Metric::ImgL2, Metric::RpL2, Metric::ThetaG, Metric::ItpL2, Metric::StH];

    pub fn id(&self) -> &'static str {
        match self {
            Metric::ImgL2 => "img_l2",
            Metric::RpL2 => "rp_l2",
            Metric::ThetaG => "theta_g",
            Metric::ItpL2 => "itp_l2",
            Metric::StH => "st_h",
        }
    }

    pub fn parse(s: &str) -> Result<Metric> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "img_l2" | "img" => Ok(Metric::ImgL2),
            "rp_l2" | "rp" => Ok(Metric::RpL2),
            "theta_g" | "theta" => Ok(Metric::ThetaG),
            "itp_l2" | "itp" => Ok(Metric::ItpL2),
            "st_h" | "st" => Ok(Metric::StH),
            other => Err(Error::UnsupportedMetric {
                metric: other.to_string(),
                reason: "unknown metric id".into(),
            }),
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

// ---------------------------------------------------------------------------
// Image L2
// ---------------------------------------------------------------------------

/// Euclidean distance between flattened image vectors.
pub fn image_l2<S: Scalar>(x1: &RobotImage<S>, x2: &RobotImage<S>) -> Result<S> {
    if x1.p() != x2.p() || x1.rows != x2.rows || x1.cols != x2.cols {
        return Err(Error::GeometryMismatch(format!(
            "{}x{} vs {}x{}",
            x1.rows, x1.cols, x2.rows, x2.cols
        )));
    }
    let mut acc = 0.0f64;
    for (a, b) in x1.pixels.iter().zip(&x2.pixels) {
        let d = a.as_f64() - b.as_f64();
        acc += d * d;
    }
    Ok(S::of_f64(acc.sqrt()))
}

/// [`image_l2`] straight off two sprites over the same flat background:
/// identical value, but only the union of the painted supports is visited.
pub fn sprite_l2<S: Scalar>(a: &SparseSprite<S>, b: &SparseSprite<S>, bg: &[S; 3]) -> S {
    let bg64 = [bg[0].as_f64(), bg[1].as_f64(), bg[2].as_f64()];
    let mut acc = 0.0f64;
    let (mut i, mut j) = (0usize, 0usize);
    while i < a.pixels.len() || j < b.pixels.len() {
        let pa = a.pixels.get(i).copied().unwrap_or(u32::MAX);
        let pb = b.pixels.get(j).copied().unwrap_or(u32::MAX);
        if pa == pb {
            let ca = &a.colors[i];
            let cb = &b.colors[j];
            for ch in 0..3 {
                let d = ca[ch].as_f64() - cb[ch].as_f64();
                acc += d * d;
            }
            i += 1;
            j += 1;
        } else if pa < pb {
            let ca = &a.colors[i];
            for ch in 0..3 {
                let d = ca[ch].as_f64() - bg64[ch];
                acc += d * d;
            }
            i += 1;
        } else {
            let cb = &b.colors[j];
            for ch in 0..3 {
                let d = bg64[ch] - cb[ch].as_f64();
                acc += d * d;
            }
            j += 1;
        }
    }
    S::of_f64(acc.sqrt())
}

/// Dot product `<x_a - bg, x_b - bg>` of two background-relative sprites;
/// feeds the Gram matrices of the local tangent spaces.
pub fn sprite_diff_dot<S: Scalar>(a: &SparseSprite<S>, b: &SparseSprite<S>, bg: &[S; 3]) -> f64 {
    let bg64 = [bg[0].as_f64(), bg[1].as_f64(), bg[2].as_f64()];
    let mut acc = 0.0f64;
    let (mut i, mut j) = (0usize, 0usize);
    while i < a.pixels.len() && j < b.pixels.len() {
        let pa = a.pixels[i];
        let pb = b.pixels[j];
        if pa == pb {
            for ch in 0..3 {
                acc += (a.colors[i][ch].as_f64() - bg64[ch]) * (b.colors[j][ch].as_f64() - bg64[ch]);
            }
            i += 1;
            j += 1;
        } else if pa < pb {
            i += 1;
        } else {
            j += 1;
        }
    }
    acc
}

// ---------------------------------------------------------------------------
// Random projections
// ---------------------------------------------------------------------------

/// `k` Gaussian random unit vectors in `R^p`, deterministic for a fixed seed.
///
/// Stored row-major by input entry so that sparse inputs touch contiguous
/// memory; the matrix itself is kept in `f32` (it is by far the largest
/// object in the pipeline). Projected distances are calibrated by
/// `sqrt(p / k)` so they estimate the original L2 distance.
pub struct RandomProjector {
    pub p: usize,
    pub k: usize,
    pub seed: u64,
    data: Vec<f32>,
}

impl RandomProjector {
    pub fn new(p: usize, k: usize, seed: u64) -> Self {
        assert!(p > 0 && k > 0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = vec![0.0f32; p * k];
        for v in data.iter_mut() {
            let g: f64 = StandardNormal.sample(&mut rng);
            *v = g as f32;
        }
        let mut norms = vec![0.0f64; k];
        for row in data.chunks_exact(k) {
            for (j, &v) in row.iter().enumerate() {
                norms[j] += (v as f64) * (v as f64);
            }
        }
        let inv: Vec<f32> = norms.iter().map(|&n| (1.0 / n.sqrt()) as f32).collect();
        for row in data.chunks_exact_mut(k) {
            for (j, v) in row.iter_mut().enumerate() {
                *v *= inv[j];
            }
        }
        Self { p, k, seed, data }
    }

    fn calibration(&self) -> f64 {
        (self.p as f64 / self.k as f64).sqrt()
    }

    /// Raw row-major matrix (`p` rows of `k` entries); rows of sparse inputs
    /// touch contiguous memory.
    pub fn row_data(&self) -> &[f32] {
        &self.data
    }

    /// Column norm (should be 1 for every unit vector).
    pub fn column_norm(&self, j: usize) -> f64 {
        let mut acc = 0.0f64;
        for row in self.data.chunks_exact(self.k) {
            acc += (row[j] as f64) * (row[j] as f64);
        }
        acc.sqrt()
    }

    pub fn project_f32<S: Scalar>(&self, pixels: &[S]) -> Result<Vec<f32>> {
        if pixels.len() != self.p {
            return Err(Error::DimensionMismatch { expected: self.p, got: pixels.len() });
        }
        let mut y = vec![0.0f32; self.k];
        for (i, &x) in pixels.iter().enumerate() {
            let xv = x.as_f64() as f32;
            if xv == 0.0 {
                continue;
            }
            let row = &self.data[i * self.k..(i + 1) * self.k];
            for (yj, &r) in y.iter_mut().zip(row) {
                *yj += xv * r;
            }
        }
        Ok(y)
    }

    /// Linear projection of a flattened image to a `k`-vector.
    pub fn project<S: Scalar>(&self, x: &RobotImage<S>) -> Result<Vec<S>> {
        Ok(self.project_f32(&x.pixels)?.into_iter().map(|v| S::of_f64(v as f64)).collect())
    }

    /// Projection of the flat background image, computed once per dataset.
    pub fn background_projection<S: Scalar>(&self, rows: usize, cols: usize, bg: &[S; 3]) -> Vec<f32> {
        assert_eq!(self.p, 3 * rows * cols);
        // Sum projector rows per channel, then weight by the channel value.
        let mut per_ch = vec![0.0f64; 3 * self.k];
        for (i, row) in self.data.chunks_exact(self.k).enumerate() {
            let ch = i % 3;
            let dst = &mut per_ch[ch * self.k..(ch + 1) * self.k];
            for (d, &r) in dst.iter_mut().zip(row) {
                *d += r as f64;
            }
        }
        let mut y = vec![0.0f32; self.k];
        for ch in 0..3 {
            let w = bg[ch].as_f64();
            if w == 0.0 {
                continue;
            }
            for (j, yj) in y.iter_mut().enumerate() {
                *yj += (w * per_ch[ch * self.k + j]) as f32;
            }
        }
        y
    }

    /// Projection of a sprite's image: background projection plus the painted
    /// deviations.
    pub fn project_sprite<S: Scalar>(
        &self,
        sprite: &SparseSprite<S>,
        bg: &[S; 3],
        bg_projection: &[f32],
    ) -> Vec<f32> {
        let mut y = bg_projection.to_vec();
        for (&px, color) in sprite.pixels.iter().zip(&sprite.colors) {
            for ch in 0..3 {
                let delta = (color[ch].as_f64() - bg[ch].as_f64()) as f32;
                if delta == 0.0 {
                    continue;
                }
                let row_start = (3 * px as usize + ch) * self.k;
                let row = &self.data[row_start..row_start + self.k];
                for (yj, &r) in y.iter_mut().zip(row) {
                    *yj += delta * r;
                }
            }
        }
        y
    }

    /// Calibrated Euclidean distance between two projections; estimates the
    /// image-space L2 distance.
    pub fn rp_l2<S: Scalar>(&self, a: &[S], b: &[S]) -> Result<S> {
        if a.len() != self.k || b.len() != self.k {
            return Err(Error::DimensionMismatch { expected: self.k, got: a.len().max(b.len()) });
        }
        let mut acc = 0.0f64;
        for (x, y) in a.iter().zip(b) {
            let d = x.as_f64() - y.as_f64();
            acc += d * d;
        }
        Ok(S::of_f64(self.calibration() * acc.sqrt()))
    }

    /// `rp_l2` on the `f32` fast-path vectors.
    pub fn distance_f32<S: Scalar>(&self, a: &[f32], b: &[f32]) -> S {
        debug_assert_eq!(a.len(), self.k);
        let mut acc = 0.0f64;
        for (x, y) in a.iter().zip(b) {
            let d = (*x - *y) as f64;
            acc += d * d;
        }
        S::of_f64(self.calibration() * acc.sqrt())
    }
}

// ---------------------------------------------------------------------------
// Joint-space geodesic
// ---------------------------------------------------------------------------

/// Sum over joints of the shortest circular distance between the two angles.
pub fn joint_geodesic<S: Scalar>(q1: &Configuration<S>, q2: &Configuration<S>) -> Result<S> {
    if q1.dof() != q2.dof() {
        return Err(Error::DimensionMismatch { expected: q1.dof(), got: q2.dof() });
    }
    let mut acc = 0.0f64;
    for (a, b) in q1.angles.iter().zip(&q2.angles) {
        acc += angles::dist(a.as_f64(), b.as_f64());
    }
    Ok(S::of_f64(acc))
}

/// [`joint_geodesic`] with joint topology taken from the model: circular
/// joints use the circular distance, interval joints the plain difference.
pub fn config_geodesic<S: Scalar>(
    q1: &Configuration<S>,
    q2: &Configuration<S>,
    model: &RobotModel<S>,
) -> Result<S> {
    if q1.dof() != q2.dof() {
        return Err(Error::DimensionMismatch { expected: q1.dof(), got: q2.dof() });
    }
    let mut acc = 0.0f64;
    for (j, (a, b)) in q1.angles.iter().zip(&q2.angles).enumerate() {
        acc += match model.joint_kind(j) {
            JointKind::Circular => angles::dist(a.as_f64(), b.as_f64()),
            JointKind::Interval(_, _) => (a.as_f64() - b.as_f64()).abs(),
        };
    }
    Ok(S::of_f64(acc))
}

// ---------------------------------------------------------------------------
// Ideal tracked points
// ---------------------------------------------------------------------------

/// An ordered marker set with fixed correspondence across poses: point `j`
/// is the same physical marker in every pose.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackedPointSet<S> {
    pub points: Vec<Point2<S>>,
}

/// Image-plane positions of the robot's fixed markers, computed geometrically
/// from the model. Occluded markers are still reported (the tracking is
/// ideal), and positions may fall outside the raster.
pub fn tracked_points<S: Scalar>(
    q: &Configuration<S>,
    model: &RobotModel<S>,
    camera: &Camera<S>,
) -> Result<TrackedPointSet<S>> {
    let world = model.marker_points(q)?;
    let mut points = Vec::with_capacity(world.len());
    for w in world {
        let (x, y) = camera.world_to_pixel(w, S::zero()).ok_or(Error::DegenerateCamera)?;
        points.push(Point2::new(x, y));
    }
    Ok(TrackedPointSet { points })
}

/// Euclidean distance between concatenated marker coordinates.
pub fn itp_l2<S: Scalar>(a: &TrackedPointSet<S>, b: &TrackedPointSet<S>) -> Result<S> {
    if a.points.len() != b.points.len() {
        return Err(Error::DimensionMismatch { expected: a.points.len(), got: b.points.len() });
    }
    let mut acc = 0.0f64;
    for (p, q) in a.points.iter().zip(&b.points) {
        let dx = p.x.as_f64() - q.x.as_f64();
        let dy = p.y.as_f64() - q.y.as_f64();
        acc += dx * dx + dy * dy;
    }
    Ok(S::of_f64(acc.sqrt()))
}

// ---------------------------------------------------------------------------
// Hausdorff on feature sets
// ---------------------------------------------------------------------------

fn directed_sq<S: Scalar>(a: &[Point2<S>], b: &[Point2<S>]) -> f64 {
    let mut worst = 0.0f64;
    for p in a {
        let mut best = f64::INFINITY;
        for q in b {
            let dx = p.x.as_f64() - q.x.as_f64();
            let dy = p.y.as_f64() - q.y.as_f64();
            let d = dx * dx + dy * dy;
            if d < best {
                best = d;
            }
        }
        if best > worst {
            worst = best;
        }
    }
    worst
}

/// Exact symmetric Hausdorff distance between two non-empty point sets.
pub fn hausdorff<S: Scalar>(a: &[Point2<S>], b: &[Point2<S>]) -> Result<S> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("hausdorff of an empty point set"));
    }
    Ok(S::of_f64(directed_sq(a, b).max(directed_sq(b, a)).sqrt()))
}

/// Sum over links of the Hausdorff distance between feature sets. A link
/// with features in one pose and none in the other contributes the image
/// diagonal as penalty; empty-vs-empty contributes zero.
pub fn st_hausdorff<S: Scalar>(f1: &LinkFeatureSet<S>, f2: &LinkFeatureSet<S>) -> Result<S> {
    if f1.links.len() != f2.links.len() {
        return Err(Error::DimensionMismatch { expected: f1.links.len(), got: f2.links.len() });
    }
    if f1.rows != f2.rows || f1.cols != f2.cols {
        return Err(Error::GeometryMismatch(format!(
            "{}x{} vs {}x{}",
            f1.rows, f1.cols, f2.rows, f2.cols
        )));
    }
    let diag = ((f1.rows * f1.rows + f1.cols * f1.cols) as f64).sqrt();
    let mut acc = 0.0f64;
    for (a, b) in f1.links.iter().zip(&f2.links) {
        acc += match (a.is_empty(), b.is_empty()) {
            (true, true) => 0.0,
            (true, false) | (false, true) => diag,
            (false, false) => directed_sq(a, b).max(directed_sq(b, a)).sqrt(),
        };
    }
    Ok(S::of_f64(acc))
}

/// Tracked-point marker count for a model (fixed per dataset).
pub fn marker_count<S: Scalar>(model: &RobotModel<S>) -> usize {
    match model {
        RobotModel::Arm(a) => RobotModel::<S>::markers_per_link() * a.link_lengths.len(),
        RobotModel::Mobile(m) => 1 + m.body.vertices.len(),
    }
}

/// Link colors of a model in link order (the mobile body is one link).
pub fn link_colors<S: Scalar>(model: &RobotModel<S>) -> Vec<Rgb> {
    (0..model.link_count()).map(|l| model.link_color(l)).collect()
}
