//! Software renderer: deterministic binary-coverage rasters of robot poses
//! and obstacles, plus the compact sprite representation the pipeline stores
//! per node.
//!
//! Paint order is painter's algorithm: background, then obstacles, then
//! links in index order, so a higher link index occludes a lower one.

use crate::camera::{Camera, Projection};
use crate::error::{Error, Result};
use crate::geom::{Point2, Polygon};
use crate::image::{color_intensities, ForegroundImage, ObstacleImage, RobotImage};
use crate::raster::{fill_polygon, SupportMask};
use crate::robot::{forward_kinematics, Configuration, ObstacleSet, RobotModel};
use crate::scalar::Scalar;
use crate::Rgb;

/// Final painted pixels of one pose against the fixed background, kept as a
/// sorted index list. Equivalent to the foreground image of the pose, minus
/// the sea of zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSprite<S> {
    pub rows: usize,
    pub cols: usize,
    /// Sorted pixel indices (`r * cols + c`).
    pub pixels: Vec<u32>,
    /// Painted RGB intensity per entry of `pixels`.
    pub colors: Vec<[S; 3]>,
}

impl<S: Scalar> SparseSprite<S> {
    pub fn support_len(&self) -> usize {
        self.pixels.len()
    }

    pub fn overlaps_mask(&self, mask: &SupportMask) -> bool {
        self.pixels.iter().any(|&px| mask.get(px as usize))
    }

    pub fn overlap_count(&self, mask: &SupportMask) -> usize {
        self.pixels.iter().filter(|&&px| mask.get(px as usize)).count()
    }

    /// Expand back to a dense foreground image.
    pub fn to_foreground(&self) -> ForegroundImage<S> {
        let mut fg = ForegroundImage::zero(self.rows, self.cols);
        for (&px, c) in self.pixels.iter().zip(&self.colors) {
            fg.pixels[3 * px as usize..3 * px as usize + 3].copy_from_slice(c);
        }
        fg
    }
}

/// Project a workspace polygon to pixel space; for elevated geometry under a
/// perspective camera the silhouette is the hull of the footprint and the
/// top-face projection.
fn projected_outline<S: Scalar>(
    poly: &Polygon<S>,
    height: S,
    camera: &Camera<S>,
) -> Result<Vec<(S, S)>> {
    let mut base = Vec::with_capacity(poly.vertices.len());
    for &v in &poly.vertices {
        let (x, y) =
            camera.world_to_pixel(v, S::zero()).ok_or(Error::DegenerateCamera)?;
        base.push((x, y));
    }
    let elevated = height > S::zero() && matches!(camera.projection, Projection::Perspective { .. });
    if !elevated {
        return Ok(base);
    }
    let mut pts: Vec<Point2<S>> = base.iter().map(|&(x, y)| Point2::new(x, y)).collect();
    for &v in &poly.vertices {
        let (x, y) = camera.world_to_pixel(v, height).ok_or(Error::DegenerateCamera)?;
        pts.push(Point2::new(x, y));
    }
    Ok(Polygon::convex_hull(&pts).vertices.into_iter().map(|p| (p.x, p.y)).collect())
}

fn outline_clips<S: Scalar>(outline: &[(S, S)], rows: usize, cols: usize) -> bool {
    outline.iter().any(|&(x, y)| {
        x < S::of_f64(-0.5)
            || y < S::of_f64(-0.5)
            || x > S::from_usize(cols).unwrap() - S::of_f64(0.5)
            || y > S::from_usize(rows).unwrap() - S::of_f64(0.5)
    })
}

/// Render a pose over the given background, obstacles included, and report
/// whether any painted geometry fell outside the raster.
pub fn render_clipped<S: Scalar>(
    q: &Configuration<S>,
    model: &RobotModel<S>,
    obstacles: &ObstacleSet<S>,
    camera: &Camera<S>,
    background: &RobotImage<S>,
) -> Result<(RobotImage<S>, bool)> {
    camera.validate()?;
    if background.rows != camera.rows || background.cols != camera.cols {
        return Err(Error::GeometryMismatch(format!(
            "background {}x{} vs camera {}x{}",
            background.rows, background.cols, camera.rows, camera.cols
        )));
    }
    let mut img = background.clone();
    let mut clipped = false;
    let paint = |outline: &[(S, S)], color: Rgb, img: &mut RobotImage<S>| {
        let c = color_intensities::<S>(color);
        fill_polygon(outline, camera.rows, camera.cols, |r, col| {
            let i = 3 * (r * camera.cols + col);
            img.pixels[i..i + 3].copy_from_slice(&c);
        });
    };
    for ob in &obstacles.obstacles {
        let outline = projected_outline(&ob.polygon, ob.height, camera)?;
        clipped |= outline_clips(&outline, camera.rows, camera.cols);
        paint(&outline, ob.color, &mut img);
    }
    for link in forward_kinematics(q, model)? {
        let outline = projected_outline(&link.polygon, S::zero(), camera)?;
        clipped |= outline_clips(&outline, camera.rows, camera.cols);
        paint(&outline, model.link_color(link.link), &mut img);
    }
    img.config = Some(q.clone());
    Ok((img, clipped))
}

/// Deterministic raster of a pose (see [`render_clipped`]).
pub fn render<S: Scalar>(
    q: &Configuration<S>,
    model: &RobotModel<S>,
    obstacles: &ObstacleSet<S>,
    camera: &Camera<S>,
    background: &RobotImage<S>,
) -> Result<RobotImage<S>> {
    Ok(render_clipped(q, model, obstacles, camera, background)?.0)
}

/// Obstacle image for one camera: render the obstacle-only scene and subtract
/// the background.
pub fn render_obstacle_image<S: Scalar>(
    obstacles: &ObstacleSet<S>,
    camera: &Camera<S>,
    background: &RobotImage<S>,
) -> Result<ObstacleImage<S>> {
    camera.validate()?;
    let mut fg = ForegroundImage::zero(camera.rows, camera.cols);
    for ob in &obstacles.obstacles {
        let outline = projected_outline(&ob.polygon, ob.height, camera)?;
        let c = color_intensities::<S>(ob.color);
        let bg0 = &background.pixels;
        fill_polygon(&outline, camera.rows, camera.cols, |r, col| {
            let i = 3 * (r * camera.cols + col);
            // Keep the painted value only where it differs from background,
            // mirroring background subtraction of an obstacle-only render.
            let differs = (0..3).any(|ch| {
                (c[ch] - bg0[i + ch]).abs() > S::of_f64(crate::image::TAU_BG)
            });
            if differs {
                fg.pixels[i..i + 3].copy_from_slice(&c);
            }
        });
    }
    Ok(ObstacleImage::from_foreground(fg))
}

/// Reusable pose painter with scratch buffers; produces sprites and runs
/// early-exit overlap tests without allocating per pose.
pub struct SpritePainter {
    rows: usize,
    cols: usize,
    epoch: u32,
    stamp: Vec<u32>,
    link_of: Vec<u16>,
    touched: Vec<u32>,
}

impl SpritePainter {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            epoch: 0,
            stamp: vec![0; rows * cols],
            link_of: vec![0; rows * cols],
            touched: Vec::with_capacity(4096),
        }
    }

    fn paint_links<S: Scalar>(
        &mut self,
        q: &Configuration<S>,
        model: &RobotModel<S>,
        camera: &Camera<S>,
    ) -> Result<()> {
        debug_assert!(camera.rows == self.rows && camera.cols == self.cols);
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
        self.touched.clear();
        let epoch = self.epoch;
        for link in forward_kinematics(q, model)? {
            let outline = projected_outline(&link.polygon, S::zero(), camera)?;
            let stamp = &mut self.stamp;
            let link_of = &mut self.link_of;
            let touched = &mut self.touched;
            let cols = self.cols;
            fill_polygon(&outline, self.rows, self.cols, |r, c| {
                let px = r * cols + c;
                if stamp[px] != epoch {
                    stamp[px] = epoch;
                    touched.push(px as u32);
                }
                link_of[px] = link.link as u16;
            });
        }
        Ok(())
    }

    /// Sprite of the pose: painted pixels with their final (occluded) colors.
    pub fn sprite<S: Scalar>(
        &mut self,
        q: &Configuration<S>,
        model: &RobotModel<S>,
        camera: &Camera<S>,
    ) -> Result<SparseSprite<S>> {
        self.paint_links(q, model, camera)?;
        let mut px: Vec<u32> = self.touched.clone();
        px.sort_unstable();
        let colors = px
            .iter()
            .map(|&p| color_intensities::<S>(model.link_color(self.link_of[p as usize] as usize)))
            .collect();
        Ok(SparseSprite { rows: self.rows, cols: self.cols, pixels: px, colors })
    }

    /// Does the pose's painted support intersect `mask`? Early-exits on the
    /// first overlapping pixel.
    pub fn overlaps<S: Scalar>(
        &mut self,
        q: &Configuration<S>,
        model: &RobotModel<S>,
        camera: &Camera<S>,
        mask: &SupportMask,
    ) -> Result<bool> {
        self.paint_links(q, model, camera)?;
        Ok(self.touched.iter().any(|&px| mask.get(px as usize)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::{background_subtract, hadamard_overlap};
    use crate::robot::{sample_configurations, ArmSpec, Obstacle};

    fn one_link() -> RobotModel<f64> {
        RobotModel::Arm(ArmSpec {
            link_lengths: vec![1.0],
            link_widths: vec![0.1],
            base: Point2::new(0.0, 0.0),
            joint_limits: vec![None],
            link_colors: vec![[255, 255, 255]],
        })
    }

    fn cam10() -> Camera<f64> {
        Camera::orthographic(100, 100, 10.0, Point2::new(0.05, 0.05))
    }

    #[test]
    fn render_is_deterministic() {
        let m = one_link();
        let cam = cam10();
        let bg = RobotImage::flat(100, 100, [0, 0, 0]);
        let q = Configuration::new(vec![0.7], &m).unwrap();
        let a = render(&q, &m, &ObstacleSet::empty(), &cam, &bg).unwrap();
        let b = render(&q, &m, &ObstacleSet::empty(), &cam, &bg).unwrap();
        assert_eq!(a.pixels, b.pixels);
    }

    #[test]
    fn foreground_pixel_count_matches_area() {
        // 1 x 0.1 link at 10 px/unit covers 10 px^2; exact alignment here.
        let m = one_link();
        let cam = Camera::orthographic(100, 100, 10.0, Point2::new(0.0, 0.0));
        let bg = RobotImage::flat(100, 100, [0, 0, 0]);
        let q = Configuration::new(vec![0.0], &m).unwrap();
        let img = render(&q, &m, &ObstacleSet::empty(), &cam, &bg).unwrap();
        let fg = background_subtract(&img, &bg).unwrap();
        let count = fg.support_size() as f64;
        assert!((count - 10.0).abs() / 10.0 <= 0.05, "painted {count} px");
    }

    #[test]
    fn foreground_is_exactly_the_painted_set() {
        let m = one_link();
        let cam = cam10();
        let bg = RobotImage::flat(100, 100, [12, 20, 8]);
        let q = Configuration::new(vec![2.1], &m).unwrap();
        let img = render(&q, &m, &ObstacleSet::empty(), &cam, &bg).unwrap();
        let fg = background_subtract(&img, &bg).unwrap();
        let mut painter = SpritePainter::new(100, 100);
        let sprite = painter.sprite(&q, &m, &cam).unwrap();
        assert_eq!(fg.support_mask().indices(), sprite.pixels);
        assert_eq!(sprite.to_foreground(), fg);
    }

    #[test]
    fn sprite_overlap_agrees_with_hadamard() {
        let m = one_link();
        let cam = cam10();
        let bg = RobotImage::flat(100, 100, [0, 0, 0]);
        let obstacles = ObstacleSet {
            obstacles: vec![Obstacle {
                polygon: Polygon::rect(0.8, 0.0, 0.15, 0.15),
                color: [60, 220, 220],
                height: 0.0,
            }],
        };
        let ob_img = render_obstacle_image(&obstacles, &cam, &bg).unwrap();
        let mut painter = SpritePainter::new(100, 100);
        for q in sample_configurations(60, &m, 5) {
            let img = render(&q, &m, &ObstacleSet::empty(), &cam, &bg).unwrap();
            let fg = background_subtract(&img, &bg).unwrap();
            let slow = hadamard_overlap(&fg, &ob_img).unwrap();
            let fast = painter.overlaps(&q, &m, &cam, ob_img.mask()).unwrap();
            assert_eq!(slow, fast);
        }
    }

    #[test]
    fn perspective_obstacle_shadow_is_larger() {
        let bg = RobotImage::flat(100, 100, [0, 0, 0]);
        let obstacles = ObstacleSet {
            obstacles: vec![Obstacle {
                polygon: Polygon::rect(1.0, 0.0, 0.2, 0.2),
                color: [60, 220, 220],
                height: 0.8,
            }],
        };
        let ortho = Camera::orthographic(100, 100, 10.0, Point2::new(0.0, 0.0));
        let low = Camera::perspective(100, 100, 10.0, Point2::new(0.0, 0.0), 2.0);
        let high = Camera::perspective(100, 100, 10.0, Point2::new(0.0, 0.0), 50.0);
        let flat = render_obstacle_image(&obstacles, &ortho, &bg).unwrap().support_size();
        let near = render_obstacle_image(&obstacles, &low, &bg).unwrap().support_size();
        let far = render_obstacle_image(&obstacles, &high, &bg).unwrap().support_size();
        assert!(near > far, "taller camera must tighten the silhouette");
        assert!(far >= flat);
        assert!(near > flat);
    }

    #[test]
    fn clipping_is_flagged() {
        let m = one_link();
        let cam = Camera::orthographic(8, 8, 10.0, Point2::new(0.0, 0.0));
        let bg = RobotImage::flat(8, 8, [0, 0, 0]);
        let q = Configuration::new(vec![0.0], &m).unwrap();
        let (_, clipped) = render_clipped(&q, &m, &ObstacleSet::empty(), &cam, &bg).unwrap();
        assert!(clipped);
    }
}
