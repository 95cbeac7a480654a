//! Planar robot models: n-link revolute arms and a rigid mobile body,
//! forward kinematics to workspace polygons, configuration sampling,
//! joint-space interpolation, and the exact geometric collision oracle.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::angles;
use crate::error::{Error, Result};
use crate::geom::{Point2, Polygon};
use crate::scalar::Scalar;
use crate::Rgb;

/// Planar arm made of chained rectangular links.
#[derive(Debug, Clone)]
pub struct ArmSpec<S> {
    /// Link lengths in workspace units, base to tip.
    pub link_lengths: Vec<S>,
    /// Full widths of the link rectangles.
    pub link_widths: Vec<S>,
    /// World position of joint 0.
    pub base: Point2<S>,
    /// Optional `[lo, hi)` limit per joint; `None` means a full circle.
    pub joint_limits: Vec<Option<(S, S)>>,
    /// Distinct solid fill color per link.
    pub link_colors: Vec<Rgb>,
}

/// Rigid translating (optionally rotating) body, e.g. a mobile robot seen
/// from above.
#[derive(Debug, Clone)]
pub struct MobileSpec<S> {
    /// Body outline in local coordinates (origin = reference point).
    pub body: Polygon<S>,
    /// Admissible x range `[lo, hi)`.
    pub x_range: (S, S),
    /// Admissible y range `[lo, hi)`.
    pub y_range: (S, S),
    /// Whether the body has a third, rotational degree of freedom.
    pub rotates: bool,
    pub color: Rgb,
}

/// Robot model used by the pipeline.
#[derive(Debug, Clone)]
pub enum RobotModel<S> {
    Arm(ArmSpec<S>),
    Mobile(MobileSpec<S>),
}

/// Topology of one generalized coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JointKind<S> {
    /// Full circle; values live on S¹ and wrap at 2π.
    Circular,
    /// Interval `[lo, hi)`; plain Euclidean coordinate.
    Interval(S, S),
}

/// A point in configuration space.
///
/// Circular coordinates are kept reduced to `[0, 2π)`; interval coordinates
/// keep their raw value. Build through [`Configuration::new`] so the
/// reduction and limit checks run.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration<S> {
    pub angles: Vec<S>,
}

/// One link's workspace footprint.
#[derive(Debug, Clone)]
pub struct LinkPolygon<S> {
    pub polygon: Polygon<S>,
    pub link: usize,
}

/// A workspace obstacle: a simple polygon with a fill color and an optional
/// height above the motion plane (only the perspective camera looks at it).
#[derive(Debug, Clone)]
pub struct Obstacle<S> {
    pub polygon: Polygon<S>,
    pub color: Rgb,
    pub height: S,
}

/// The static obstacles of a scene.
#[derive(Debug, Clone, Default)]
pub struct ObstacleSet<S> {
    pub obstacles: Vec<Obstacle<S>>,
}

impl<S: Scalar> ObstacleSet<S> {
    pub fn empty() -> Self {
        Self { obstacles: Vec::new() }
    }

    pub fn polygons(&self) -> impl Iterator<Item = &Polygon<S>> {
        self.obstacles.iter().map(|o| &o.polygon)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, o) in self.obstacles.iter().enumerate() {
            if !o.polygon.is_simple() {
                return Err(Error::InvalidSpec(format!("obstacle {i} is not a simple polygon")));
            }
            if o.height < S::zero() {
                return Err(Error::InvalidSpec(format!("obstacle {i} has negative height")));
            }
        }
        Ok(())
    }
}

impl<S: Scalar> RobotModel<S> {
    /// Number of degrees of freedom (length of a configuration vector).
    pub fn dof(&self) -> usize {
        match self {
            RobotModel::Arm(a) => a.link_lengths.len(),
            RobotModel::Mobile(m) => {
                if m.rotates {
                    3
                } else {
                    2
                }
            }
        }
    }

    /// Number of rendered links (1 for the mobile body).
    pub fn link_count(&self) -> usize {
        match self {
            RobotModel::Arm(a) => a.link_lengths.len(),
            RobotModel::Mobile(_) => 1,
        }
    }

    pub fn joint_kind(&self, j: usize) -> JointKind<S> {
        match self {
            RobotModel::Arm(a) => match a.joint_limits.get(j).copied().flatten() {
                Some((lo, hi)) => JointKind::Interval(lo, hi),
                None => JointKind::Circular,
            },
            RobotModel::Mobile(m) => match j {
                0 => JointKind::Interval(m.x_range.0, m.x_range.1),
                1 => JointKind::Interval(m.y_range.0, m.y_range.1),
                _ => JointKind::Circular,
            },
        }
    }

    pub fn link_color(&self, link: usize) -> Rgb {
        match self {
            RobotModel::Arm(a) => a.link_colors[link],
            RobotModel::Mobile(m) => m.color,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RobotModel::Arm(a) => {
                let d = a.link_lengths.len();
                if d == 0 {
                    return Err(Error::InvalidSpec("arm needs at least one link".into()));
                }
                if a.link_widths.len() != d || a.link_colors.len() != d || a.joint_limits.len() != d
                {
                    return Err(Error::InvalidSpec(
                        "link_lengths, link_widths, link_colors and joint_limits must have equal length".into(),
                    ));
                }
                if a.link_lengths.iter().any(|&l| !(l > S::zero())) {
                    return Err(Error::InvalidSpec("link lengths must be strictly positive".into()));
                }
                if a.link_widths.iter().any(|&w| !(w > S::zero())) {
                    return Err(Error::InvalidSpec("link widths must be strictly positive".into()));
                }
                for i in 0..d {
                    for j in (i + 1)..d {
                        if a.link_colors[i] == a.link_colors[j] {
                            return Err(Error::InvalidSpec(format!(
                                "links {i} and {j} share the same color"
                            )));
                        }
                    }
                }
                for (j, lim) in a.joint_limits.iter().enumerate() {
                    if let Some((lo, hi)) = lim {
                        if !(hi > lo) {
                            return Err(Error::InvalidSpec(format!(
                                "joint {j} has an empty limit interval"
                            )));
                        }
                    }
                }
                Ok(())
            }
            RobotModel::Mobile(m) => {
                if !m.body.is_simple() {
                    return Err(Error::InvalidSpec("mobile body must be a simple polygon".into()));
                }
                if !(m.x_range.1 > m.x_range.0) || !(m.y_range.1 > m.y_range.0) {
                    return Err(Error::InvalidSpec("mobile ranges must be non-empty".into()));
                }
                Ok(())
            }
        }
    }

    /// Ideal marker points on the robot body at configuration `q`, in world
    /// coordinates. Arms carry evenly spaced markers along each link axis
    /// (both rectangle ends included); the mobile body carries its centroid
    /// and vertices.
    pub fn marker_points(&self, q: &Configuration<S>) -> Result<Vec<Point2<S>>> {
        self.check_dim(q)?;
        match self {
            RobotModel::Arm(a) => {
                let per_link = Self::markers_per_link();
                let mut pts = Vec::with_capacity(per_link * a.link_lengths.len());
                let mut angle = S::zero();
                let mut pos = a.base;
                for (j, &len) in a.link_lengths.iter().enumerate() {
                    angle += q.angles[j];
                    let dir = Point2::new(angle.cos(), angle.sin());
                    let end = pos.add(dir.scale(len));
                    for t in 0..per_link {
                        let frac = S::from_usize(t).unwrap()
                            / S::from_usize(per_link - 1).unwrap();
                        pts.push(pos.add(dir.scale(len * frac)));
                    }
                    pos = end;
                }
                Ok(pts)
            }
            RobotModel::Mobile(m) => {
                let body = self.mobile_body_at(m, q);
                let n = body.vertices.len();
                let inv = S::one() / S::from_usize(n).unwrap();
                let centroid = body
                    .vertices
                    .iter()
                    .fold(Point2::new(S::zero(), S::zero()), |acc, v| acc.add(*v))
                    .scale(inv);
                let mut pts = vec![centroid];
                pts.extend(body.vertices.iter().copied());
                Ok(pts)
            }
        }
    }

    fn mobile_body_at(&self, m: &MobileSpec<S>, q: &Configuration<S>) -> Polygon<S> {
        let shifted = if m.rotates {
            m.body.rotated(q.angles[2])
        } else {
            m.body.clone()
        };
        shifted.translated(Point2::new(q.angles[0], q.angles[1]))
    }

    /// Number of evenly spaced tracked markers per arm link (both rectangle
    /// ends included).
    pub fn markers_per_link() -> usize {
        7
    }

    fn check_dim(&self, q: &Configuration<S>) -> Result<()> {
        if q.angles.len() != self.dof() {
            return Err(Error::DimensionMismatch { expected: self.dof(), got: q.angles.len() });
        }
        Ok(())
    }
}

impl<S: Scalar> Configuration<S> {
    /// Build a configuration for `model`, reducing circular coordinates to
    /// `[0, 2π)` and checking interval limits.
    pub fn new(values: Vec<S>, model: &RobotModel<S>) -> Result<Self> {
        if values.len() != model.dof() {
            return Err(Error::DimensionMismatch { expected: model.dof(), got: values.len() });
        }
        let mut angles = Vec::with_capacity(values.len());
        for (j, &v) in values.iter().enumerate() {
            match model.joint_kind(j) {
                JointKind::Circular => angles.push(angles::wrap(v)),
                JointKind::Interval(lo, hi) => {
                    if v < lo || v >= hi {
                        return Err(Error::InvalidSpec(format!(
                            "coordinate {j} = {v} outside joint limits [{lo}, {hi})"
                        )));
                    }
                    angles.push(v);
                }
            }
        }
        Ok(Self { angles })
    }

    pub fn dof(&self) -> usize {
        self.angles.len()
    }
}

/// Forward kinematics: the workspace footprint of every link.
///
/// Arm links are rectangles of the configured width chained from the base;
/// link `i` is rotated by the cumulative angle of joints `0..=i`. The mobile
/// body reduces to a rigid translation (plus rotation for the 3-DOF variant)
/// of its outline polygon.
pub fn forward_kinematics<S: Scalar>(
    q: &Configuration<S>,
    model: &RobotModel<S>,
) -> Result<Vec<LinkPolygon<S>>> {
    model.check_dim(q)?;
    match model {
        RobotModel::Arm(a) => {
            let half = S::of_f64(0.5);
            let mut out = Vec::with_capacity(a.link_lengths.len());
            let mut angle = S::zero();
            let mut pos = a.base;
            for (j, &len) in a.link_lengths.iter().enumerate() {
                angle += q.angles[j];
                let dir = Point2::new(angle.cos(), angle.sin());
                let end = pos.add(dir.scale(len));
                let n = Point2::new(-dir.y, dir.x).scale(a.link_widths[j] * half);
                out.push(LinkPolygon {
                    polygon: Polygon::new(vec![
                        pos.sub(n),
                        end.sub(n),
                        end.add(n),
                        pos.add(n),
                    ]),
                    link: j,
                });
                pos = end;
            }
            Ok(out)
        }
        RobotModel::Mobile(m) => Ok(vec![LinkPolygon {
            polygon: model.mobile_body_at(m, q),
            link: 0,
        }]),
    }
}

/// Draw `n` configurations uniformly over the admissible range of each
/// coordinate. Deterministic for a fixed seed.
pub fn sample_configurations<S: Scalar>(
    n: usize,
    model: &RobotModel<S>,
    seed: u64,
) -> Vec<Configuration<S>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = model.dof();
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut angles = Vec::with_capacity(d);
        for j in 0..d {
            let v = match model.joint_kind(j) {
                JointKind::Circular => rng.random_range(0.0..two_pi),
                JointKind::Interval(lo, hi) => rng.random_range(lo.as_f64()..hi.as_f64()),
            };
            angles.push(S::of_f64(v));
        }
        out.push(Configuration { angles });
    }
    out
}

/// Signed per-joint motion from `q_u` to `q_v`: the shortest circular arc for
/// circular joints, plain difference for interval joints.
pub fn joint_deltas<S: Scalar>(
    q_u: &Configuration<S>,
    q_v: &Configuration<S>,
    model: &RobotModel<S>,
) -> Result<Vec<S>> {
    model.check_dim(q_u)?;
    model.check_dim(q_v)?;
    Ok((0..q_u.angles.len())
        .map(|j| match model.joint_kind(j) {
            JointKind::Circular => angles::signed_diff(q_u.angles[j], q_v.angles[j]),
            JointKind::Interval(_, _) => q_v.angles[j] - q_u.angles[j],
        })
        .collect())
}

/// Interpolate from `q_u` to `q_v` along the per-joint shortest arc with at
/// most `epsilon` motion per joint per step. Both endpoints are included;
/// identical endpoints yield a single configuration.
pub fn interpolate_configurations<S: Scalar>(
    q_u: &Configuration<S>,
    q_v: &Configuration<S>,
    epsilon: S,
    model: &RobotModel<S>,
) -> Result<Vec<Configuration<S>>> {
    assert!(epsilon > S::zero(), "epsilon must be positive");
    let deltas = joint_deltas(q_u, q_v, model)?;
    let max_delta = deltas.iter().fold(S::zero(), |m, d| m.max(d.abs()));
    // Guard against ratios like 2.0000000000000004 creating a spurious step.
    let steps = ((max_delta / epsilon).as_f64() - 1e-9).ceil().max(0.0) as usize;
    if steps == 0 {
        return Ok(vec![q_u.clone()]);
    }
    let mut out = Vec::with_capacity(steps + 1);
    out.push(q_u.clone());
    for i in 1..steps {
        let t = S::from_usize(i).unwrap() / S::from_usize(steps).unwrap();
        let angles = (0..q_u.angles.len())
            .map(|j| {
                let v = q_u.angles[j] + deltas[j] * t;
                match model.joint_kind(j) {
                    JointKind::Circular => angles::wrap(v),
                    JointKind::Interval(_, _) => v,
                }
            })
            .collect();
        out.push(Configuration { angles });
    }
    // Endpoints are included exactly (no accumulated rounding on q_v).
    out.push(q_v.clone());
    Ok(out)
}

/// Ground-truth collision test: does any link polygon intersect any obstacle
/// polygon (touching and containment included)? Used only for evaluation,
/// never inside the visual pipeline.
pub fn geometric_collision<S: Scalar>(
    q: &Configuration<S>,
    model: &RobotModel<S>,
    obstacles: &ObstacleSet<S>,
) -> Result<bool> {
    let links = forward_kinematics(q, model)?;
    Ok(links
        .iter()
        .any(|l| obstacles.polygons().any(|o| l.polygon.intersects(o))))
}

/// Smallest distance between the robot footprint and any obstacle; zero when
/// colliding. Drives the rasterization guard in the conservativeness checks.
pub fn geometric_clearance<S: Scalar>(
    q: &Configuration<S>,
    model: &RobotModel<S>,
    obstacles: &ObstacleSet<S>,
) -> Result<S> {
    let links = forward_kinematics(q, model)?;
    let mut best = S::infinity();
    for l in &links {
        for o in obstacles.polygons() {
            best = best.min(l.polygon.distance(o));
        }
    }
    Ok(best)
}
