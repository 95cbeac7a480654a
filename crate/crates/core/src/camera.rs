//! Cameras mapping the planar workspace onto the image raster.
//!
//! The orthographic camera is an invertible affine map from world to pixel
//! coordinates. The perspective camera is a straight-down pinhole above the
//! scene; geometry on the motion plane projects like the orthographic case,
//! while anything with height casts an enlarged silhouette, which is what
//! makes the image-overlap test strictly conservative for 3-D obstacles.

use crate::error::{Error, Result};
use crate::geom::Point2;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection<S> {
    Orthographic,
    /// Pinhole at `height` above the view center, looking straight down.
    Perspective { height: S },
}

#[derive(Debug, Clone)]
pub struct Camera<S> {
    pub rows: usize,
    pub cols: usize,
    /// Pixels per workspace unit.
    pub pixels_per_unit: S,
    /// World point that maps to the image center.
    pub center: Point2<S>,
    pub projection: Projection<S>,
}

impl<S: Scalar> Camera<S> {
    pub fn orthographic(rows: usize, cols: usize, pixels_per_unit: S, center: Point2<S>) -> Self {
        Self { rows, cols, pixels_per_unit, center, projection: Projection::Orthographic }
    }

    pub fn perspective(
        rows: usize,
        cols: usize,
        pixels_per_unit: S,
        center: Point2<S>,
        height: S,
    ) -> Self {
        Self { rows, cols, pixels_per_unit, center, projection: Projection::Perspective { height } }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows < 8 || self.cols < 8 {
            return Err(Error::InvalidSpec(format!(
                "image size {}x{} below the 8x8 minimum",
                self.rows, self.cols
            )));
        }
        if !(self.pixels_per_unit.is_finite() && self.pixels_per_unit != S::zero()) {
            return Err(Error::DegenerateCamera);
        }
        if let Projection::Perspective { height } = self.projection {
            if !(height > S::zero()) {
                return Err(Error::DegenerateCamera);
            }
        }
        Ok(())
    }

    /// Number of entries in the flattened RGB pixel vector.
    pub fn p(&self) -> usize {
        3 * self.rows * self.cols
    }

    fn pixel_center(&self) -> (S, S) {
        let half = S::of_f64(0.5);
        (
            (S::from_usize(self.cols).unwrap() - S::one()) * half,
            (S::from_usize(self.rows).unwrap() - S::one()) * half,
        )
    }

    /// Map a world point at elevation `z` to continuous pixel coordinates
    /// `(x = column, y = row)`. Pixel centers sit at integer coordinates.
    /// Returns `None` when the point is at or above a perspective camera.
    pub fn world_to_pixel(&self, p: Point2<S>, z: S) -> Option<(S, S)> {
        let (cx, cy) = self.pixel_center();
        let q = match self.projection {
            Projection::Orthographic => p,
            Projection::Perspective { height } => {
                if z >= height {
                    return None;
                }
                // Homothety about the optical axis: points above the plane
                // spread outward by height / (height - z).
                let m = height / (height - z);
                self.center.add(p.sub(self.center).scale(m))
            }
        };
        let x = cx + self.pixels_per_unit * (q.x - self.center.x);
        let y = cy - self.pixels_per_unit * (q.y - self.center.y);
        Some((x, y))
    }

    /// Inverse of `world_to_pixel` on the motion plane (z = 0).
    pub fn pixel_to_world(&self, x: S, y: S) -> Point2<S> {
        let (cx, cy) = self.pixel_center();
        Point2::new(
            self.center.x + (x - cx) / self.pixels_per_unit,
            self.center.y - (y - cy) / self.pixels_per_unit,
        )
    }
}
