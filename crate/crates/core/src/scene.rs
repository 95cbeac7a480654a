//! Scene description files: the single source of truth for a simulated
//! setup (robot, obstacles, cameras, image size, seed).
//!
//! The file is TOML. Field reference:
//!
//! ```toml
//! seed = 42                      # root seed for dataset sampling
//!
//! [image]
//! rows = 100
//! cols = 100
//!
//! [background]
//! color = [0, 0, 0]              # 8-bit RGB
//!
//! [[camera]]                     # one table per camera view, fixed order
//! mode = "orthographic"          # or "perspective"
//! pixels_per_unit = 19.0
//! center = [0.0, 0.0]            # world point at the image center
//! # height = 6.0                 # perspective only: optical center height
//!
//! [robot]                        # articulated arm...
//! kind = "arm"
//! link_lengths = [1.0, 0.8, 0.7]
//! link_widths = [0.3, 0.2, 0.18]
//! base = [0.0, 0.0]
//! link_colors = [[205, 205, 210], [66, 66, 60], [60, 66, 66]]
//! # joint_limits = [[0.0, 3.1416], [], []]   # empty = full circle
//!
//! # ...or a rigid mobile body:
//! # kind = "mobile"
//! # body = [[-0.42, -0.28], [0.42, -0.28], [0.42, 0.28], [-0.42, 0.28]]
//! # x_range = [-1.7, 1.7]
//! # y_range = [-1.7, 1.7]
//! # rotates = false
//! # color = [220, 60, 60]
//!
//! [[obstacle]]
//! rect = [1.55, 1.0, 0.28, 0.22] # center x, center y, half w, half h
//! color = [230, 220, 70]
//! # height = 0.0                 # extruded height (perspective cameras)
//! # vertices = [[x, y], ...]     # arbitrary simple polygon instead of rect
//! ```
//!
//! Colors must differ from the background by at least two 8-bit steps in
//! some channel (so exact renders survive background subtraction), link
//! colors must be pairwise distinct, and obstacle colors must differ from
//! every link color.

use serde::Deserialize;
use std::path::Path;

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::geom::{Point2, Polygon};
use crate::image::RobotImage;
use crate::robot::{ArmSpec, MobileSpec, Obstacle, ObstacleSet, RobotModel};
use crate::scalar::Scalar;
use crate::Rgb;

#[derive(Debug, Clone)]
pub struct Scene<S> {
    pub seed: u64,
    pub rows: usize,
    pub cols: usize,
    pub background: Rgb,
    pub cameras: Vec<Camera<S>>,
    pub robot: RobotModel<S>,
    pub obstacles: ObstacleSet<S>,
}

#[derive(Deserialize)]
struct SceneFile {
    seed: u64,
    image: ImageSection,
    background: BackgroundSection,
    camera: Vec<CameraSection>,
    robot: RobotSection,
    #[serde(default)]
    obstacle: Vec<ObstacleSection>,
}

#[derive(Deserialize)]
struct ImageSection {
    rows: usize,
    cols: usize,
}

#[derive(Deserialize)]
struct BackgroundSection {
    color: [u8; 3],
}

#[derive(Deserialize)]
struct CameraSection {
    mode: String,
    pixels_per_unit: f64,
    center: [f64; 2],
    height: Option<f64>,
}

#[derive(Deserialize)]
struct RobotSection {
    kind: String,
    link_lengths: Option<Vec<f64>>,
    link_widths: Option<Vec<f64>>,
    base: Option<[f64; 2]>,
    link_colors: Option<Vec<[u8; 3]>>,
    joint_limits: Option<Vec<Vec<f64>>>,
    body: Option<Vec<[f64; 2]>>,
    x_range: Option<[f64; 2]>,
    y_range: Option<[f64; 2]>,
    rotates: Option<bool>,
    color: Option<[u8; 3]>,
}

#[derive(Deserialize)]
struct ObstacleSection {
    rect: Option<[f64; 4]>,
    vertices: Option<Vec<[f64; 2]>>,
    color: [u8; 3],
    height: Option<f64>,
}

fn missing(field: &str) -> Error {
    Error::SceneParse(format!("missing field '{field}'"))
}

impl<S: Scalar> Scene<S> {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: SceneFile =
            toml::from_str(text).map_err(|e| Error::SceneParse(e.to_string()))?;
        Self::from_file_struct(file)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    fn from_file_struct(file: SceneFile) -> Result<Self> {
        let rows = file.image.rows;
        let cols = file.image.cols;
        let mut cameras = Vec::new();
        for cam in &file.camera {
            let center = Point2::new(S::of_f64(cam.center[0]), S::of_f64(cam.center[1]));
            let ppu = S::of_f64(cam.pixels_per_unit);
            let camera = match cam.mode.as_str() {
                "orthographic" => Camera::orthographic(rows, cols, ppu, center),
                "perspective" => {
                    let h = cam.height.ok_or_else(|| missing("camera.height"))?;
                    Camera::perspective(rows, cols, ppu, center, S::of_f64(h))
                }
                other => {
                    return Err(Error::SceneParse(format!("unknown camera mode '{other}'")))
                }
            };
            cameras.push(camera);
        }
        if cameras.is_empty() {
            return Err(Error::SceneParse("at least one [[camera]] required".into()));
        }

        let robot = match file.robot.kind.as_str() {
            "arm" => {
                let lengths = file.robot.link_lengths.ok_or_else(|| missing("robot.link_lengths"))?;
                let widths = file.robot.link_widths.ok_or_else(|| missing("robot.link_widths"))?;
                let base = file.robot.base.ok_or_else(|| missing("robot.base"))?;
                let colors = file.robot.link_colors.ok_or_else(|| missing("robot.link_colors"))?;
                let d = lengths.len();
                let limits = match file.robot.joint_limits {
                    None => vec![None; d],
                    Some(raw) => {
                        let mut out = Vec::with_capacity(raw.len());
                        for (j, lim) in raw.iter().enumerate() {
                            out.push(match lim.len() {
                                0 => None,
                                2 => Some((S::of_f64(lim[0]), S::of_f64(lim[1]))),
                                n => {
                                    return Err(Error::SceneParse(format!(
                                        "joint_limits[{j}] must be empty or [lo, hi], got {n} values"
                                    )))
                                }
                            });
                        }
                        out
                    }
                };
                RobotModel::Arm(ArmSpec {
                    link_lengths: lengths.iter().map(|&v| S::of_f64(v)).collect(),
                    link_widths: widths.iter().map(|&v| S::of_f64(v)).collect(),
                    base: Point2::new(S::of_f64(base[0]), S::of_f64(base[1])),
                    joint_limits: limits,
                    link_colors: colors,
                })
            }
            "mobile" => {
                let body = file.robot.body.ok_or_else(|| missing("robot.body"))?;
                let x_range = file.robot.x_range.ok_or_else(|| missing("robot.x_range"))?;
                let y_range = file.robot.y_range.ok_or_else(|| missing("robot.y_range"))?;
                let color = file.robot.color.ok_or_else(|| missing("robot.color"))?;
                RobotModel::Mobile(MobileSpec {
                    body: Polygon::new(
                        body.iter().map(|v| Point2::new(S::of_f64(v[0]), S::of_f64(v[1]))).collect(),
                    ),
                    x_range: (S::of_f64(x_range[0]), S::of_f64(x_range[1])),
                    y_range: (S::of_f64(y_range[0]), S::of_f64(y_range[1])),
                    rotates: file.robot.rotates.unwrap_or(false),
                    color,
                })
            }
            other => return Err(Error::SceneParse(format!("unknown robot kind '{other}'"))),
        };

        let mut obstacles = Vec::new();
        for (i, ob) in file.obstacle.iter().enumerate() {
            let polygon = match (&ob.rect, &ob.vertices) {
                (Some(r), None) => Polygon::rect(
                    S::of_f64(r[0]),
                    S::of_f64(r[1]),
                    S::of_f64(r[2]),
                    S::of_f64(r[3]),
                ),
                (None, Some(vs)) => Polygon::new(
                    vs.iter().map(|v| Point2::new(S::of_f64(v[0]), S::of_f64(v[1]))).collect(),
                ),
                _ => {
                    return Err(Error::SceneParse(format!(
                        "obstacle {i}: give exactly one of 'rect' or 'vertices'"
                    )))
                }
            };
            obstacles.push(Obstacle {
                polygon,
                color: ob.color,
                height: S::of_f64(ob.height.unwrap_or(0.0)),
            });
        }

        let scene = Scene {
            seed: file.seed,
            rows,
            cols,
            background: file.background.color,
            cameras,
            robot,
            obstacles: ObstacleSet { obstacles },
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        self.robot.validate()?;
        self.obstacles.validate()?;
        for cam in &self.cameras {
            cam.validate()?;
            if cam.rows != self.rows || cam.cols != self.cols {
                return Err(Error::InvalidSpec("camera raster differs from scene image size".into()));
            }
        }
        // Two 8-bit steps guarantee the painted color survives background
        // subtraction at the default threshold even after a PNG round-trip.
        let sep = |a: Rgb, b: Rgb| (0..3).any(|i| (a[i] as i16 - b[i] as i16).abs() >= 2);
        let link_colors: Vec<Rgb> =
            (0..self.robot.link_count()).map(|l| self.robot.link_color(l)).collect();
        for (i, &c) in link_colors.iter().enumerate() {
            if !sep(c, self.background) {
                return Err(Error::InvalidSpec(format!(
                    "link {i} color {c:?} too close to background"
                )));
            }
        }
        for (i, ob) in self.obstacles.obstacles.iter().enumerate() {
            if !sep(ob.color, self.background) {
                return Err(Error::InvalidSpec(format!(
                    "obstacle {i} color too close to background"
                )));
            }
            if link_colors.contains(&ob.color) {
                return Err(Error::InvalidSpec(format!(
                    "obstacle {i} color equals a link color"
                )));
            }
        }
        Ok(())
    }

    /// Flat background image of this scene.
    pub fn background_image(&self) -> RobotImage<S> {
        RobotImage::flat(self.rows, self.cols, self.background)
    }

    pub fn background_intensities(&self) -> [S; 3] {
        crate::image::color_intensities(self.background)
    }

    /// Benchmark scene: planar 3-link arm with three axis-aligned rectangular
    /// obstacles scaled to the arm's reach, one overhead orthographic camera.
    pub fn preset_arm3() -> Self {
        Self::from_toml_str(PRESET_ARM3).expect("builtin scene must parse")
    }

    /// 2-link full-circle arm (torus configuration space) with a single wall
    /// obstacle; used for topology and scree checks.
    pub fn preset_arm2() -> Self {
        Self::from_toml_str(PRESET_ARM2).expect("builtin scene must parse")
    }

    /// Rigid translating body with two rectangular obstacles (Euclidean
    /// 2-DOF configuration space).
    pub fn preset_mobile() -> Self {
        Self::from_toml_str(PRESET_MOBILE).expect("builtin scene must parse")
    }
}

/// Source of the `scenes/arm3.toml` file shipped with the repository.
pub const PRESET_ARM3: &str = r#"
seed = 42

[image]
rows = 100
cols = 100

[background]
color = [0, 0, 0]

[[camera]]
mode = "orthographic"
pixels_per_unit = 19.0
center = [0.0, 0.0]

[robot]
kind = "arm"
link_lengths = [1.0, 0.8, 0.7]
link_widths = [0.3, 0.2, 0.18]
base = [0.0, 0.0]
link_colors = [[205, 205, 210], [66, 66, 60], [60, 66, 66]]

[[obstacle]]
rect = [1.55, 1.0, 0.28, 0.22]
color = [230, 220, 70]

[[obstacle]]
rect = [-1.5, 0.9, 0.25, 0.25]
color = [200, 80, 210]

[[obstacle]]
rect = [0.2, -1.65, 0.35, 0.2]
color = [70, 210, 215]
"#;

/// Source of the `scenes/arm2.toml` file shipped with the repository.
pub const PRESET_ARM2: &str = r#"
seed = 7

[image]
rows = 100
cols = 100

[background]
color = [0, 0, 0]

[[camera]]
mode = "orthographic"
pixels_per_unit = 21.0
center = [0.0, 0.0]

[robot]
kind = "arm"
link_lengths = [1.2, 0.9]
link_widths = [0.34, 0.26]
base = [0.0, 0.0]
link_colors = [[220, 60, 60], [60, 200, 80]]

[[obstacle]]
rect = [1.7, 0.0, 0.18, 0.55]
color = [230, 220, 70]
"#;

/// Source of the `scenes/mobile.toml` file shipped with the repository.
pub const PRESET_MOBILE: &str = r#"
seed = 13

[image]
rows = 100
cols = 100

[background]
color = [0, 0, 0]

[[camera]]
mode = "orthographic"
pixels_per_unit = 20.0
center = [0.0, 0.0]

[robot]
kind = "mobile"
body = [[-0.42, -0.28], [0.42, -0.28], [0.42, 0.28], [-0.42, 0.28]]
x_range = [-1.7, 1.7]
y_range = [-1.7, 1.7]
rotates = false
color = [220, 60, 60]

[[obstacle]]
rect = [0.8, 0.6, 0.3, 0.25]
color = [230, 220, 70]

[[obstacle]]
rect = [-0.9, -0.5, 0.28, 0.3]
color = [70, 210, 215]
"#;
