//! Image vectors and the pixel-space operations of the planning pipeline:
//! background subtraction, superimposition, the Hadamard overlap test, and
//! multi-view stitching.
//!
//! An r x c RGB image is a flattened vector of `p = 3rc` intensities in
//! `[0, 1]`, pixel-major with interleaved channels: entry `3*(r*cols + c) + ch`.

use crate::error::{Error, Result};
use crate::raster::SupportMask;
use crate::robot::Configuration;
use crate::scalar::Scalar;
use crate::Rgb;

/// Background-subtraction threshold: one 8-bit quantization step. Synthetic
/// renders are exact; the threshold only absorbs 8-bit round-trips of stored
/// files.
pub const TAU_BG: f64 = 1.0 / 255.0;

/// A rendered RGB image of the robot (a point of the visual C-space).
#[derive(Debug, Clone, PartialEq)]
pub struct RobotImage<S> {
    pub rows: usize,
    pub cols: usize,
    /// `3 * rows * cols` intensities in `[0, 1]`.
    pub pixels: Vec<S>,
    /// Source configuration, carried for diagnostics and evaluation only;
    /// the visual pipeline never reads it.
    pub config: Option<Configuration<S>>,
}

/// Background-subtracted image: zero exactly on background pixels, original
/// intensities where the robot was painted.
#[derive(Debug, Clone, PartialEq)]
pub struct ForegroundImage<S> {
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<S>,
}

/// Obstacle-only image, non-zero exactly on obstacle pixels.
#[derive(Debug, Clone)]
pub struct ObstacleImage<S> {
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<S>,
    mask: SupportMask,
}

/// Fixed-order concatenation of synchronized camera views into one vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StitchedImage<S> {
    /// Concatenated pixel vector, length `sum of p_c` over views.
    pub pixels: Vec<S>,
    /// Per-view `(rows, cols, offset into pixels)`.
    pub segments: Vec<(usize, usize, usize)>,
}

pub fn intensity_from_u8<S: Scalar>(v: u8) -> S {
    S::of_f64(v as f64 / 255.0)
}

pub fn intensity_to_u8<S: Scalar>(v: S) -> u8 {
    (v.as_f64() * 255.0).round().clamp(0.0, 255.0) as u8
}

pub fn color_intensities<S: Scalar>(c: Rgb) -> [S; 3] {
    [intensity_from_u8(c[0]), intensity_from_u8(c[1]), intensity_from_u8(c[2])]
}

impl<S: Scalar> RobotImage<S> {
    /// Uniform single-color image (the usual fixed background).
    pub fn flat(rows: usize, cols: usize, color: Rgb) -> Self {
        let c = color_intensities::<S>(color);
        let mut pixels = Vec::with_capacity(3 * rows * cols);
        for _ in 0..rows * cols {
            pixels.extend_from_slice(&c);
        }
        Self { rows, cols, pixels, config: None }
    }

    pub fn p(&self) -> usize {
        self.pixels.len()
    }

    pub fn same_geometry(&self, other: &RobotImage<S>) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }
}

fn check_geometry(r1: usize, c1: usize, r2: usize, c2: usize) -> Result<()> {
    if r1 != r2 || c1 != c2 {
        return Err(Error::GeometryMismatch(format!("{r1}x{c1} vs {r2}x{c2}")));
    }
    Ok(())
}

impl<S: Scalar> ForegroundImage<S> {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Self { rows, cols, pixels: vec![S::zero(); 3 * rows * cols] }
    }

    /// True iff any channel of `pixel` is non-zero.
    #[inline]
    pub fn pixel_nonzero(&self, pixel: usize) -> bool {
        let i = 3 * pixel;
        self.pixels[i] != S::zero()
            || self.pixels[i + 1] != S::zero()
            || self.pixels[i + 2] != S::zero()
    }

    /// Pixel-granularity support bitmap.
    pub fn support_mask(&self) -> SupportMask {
        let mut m = SupportMask::new(self.rows, self.cols);
        for px in 0..self.rows * self.cols {
            if self.pixel_nonzero(px) {
                m.set(px);
            }
        }
        m
    }

    pub fn support_size(&self) -> usize {
        (0..self.rows * self.cols).filter(|&px| self.pixel_nonzero(px)).count()
    }
}

impl<S: Scalar> ObstacleImage<S> {
    /// Obstacle images are acquired exactly like robot foregrounds: render
    /// the obstacle-only scene and subtract the background.
    pub fn from_foreground(fg: ForegroundImage<S>) -> Self {
        let mask = fg.support_mask();
        Self { rows: fg.rows, cols: fg.cols, pixels: fg.pixels, mask }
    }

    pub fn mask(&self) -> &SupportMask {
        &self.mask
    }

    #[inline]
    pub fn pixel_nonzero(&self, pixel: usize) -> bool {
        self.mask.get(pixel)
    }

    pub fn support_size(&self) -> usize {
        self.mask.count()
    }
}

/// Remove the fixed background: a pixel keeps its original value where its
/// max-channel absolute difference from the background exceeds `tau`, and is
/// zeroed elsewhere.
pub fn background_subtract_with<S: Scalar>(
    x: &RobotImage<S>,
    background: &RobotImage<S>,
    tau: S,
) -> Result<ForegroundImage<S>> {
    check_geometry(x.rows, x.cols, background.rows, background.cols)?;
    let mut out = vec![S::zero(); x.pixels.len()];
    for px in 0..x.rows * x.cols {
        let i = 3 * px;
        let mut diff = S::zero();
        for ch in 0..3 {
            diff = diff.max((x.pixels[i + ch] - background.pixels[i + ch]).abs());
        }
        if diff > tau {
            out[i..i + 3].copy_from_slice(&x.pixels[i..i + 3]);
        }
    }
    Ok(ForegroundImage { rows: x.rows, cols: x.cols, pixels: out })
}

/// [`background_subtract_with`] at the default threshold [`TAU_BG`].
pub fn background_subtract<S: Scalar>(
    x: &RobotImage<S>,
    background: &RobotImage<S>,
) -> Result<ForegroundImage<S>> {
    background_subtract_with(x, background, S::of_f64(TAU_BG))
}

/// Membership test for `V_collision`: does the foreground share any pixel
/// with the obstacle image? Overlap is judged at pixel granularity (a pixel
/// is occupied when any of its channels is non-zero).
pub fn hadamard_overlap<S: Scalar>(
    fg: &ForegroundImage<S>,
    b: &ObstacleImage<S>,
) -> Result<bool> {
    check_geometry(fg.rows, fg.cols, b.rows, b.cols)?;
    Ok((0..fg.rows * fg.cols).any(|px| b.pixel_nonzero(px) && fg.pixel_nonzero(px)))
}

/// Number of overlapping pixels between a foreground and an obstacle image.
pub fn hadamard_overlap_count<S: Scalar>(
    fg: &ForegroundImage<S>,
    b: &ObstacleImage<S>,
) -> Result<usize> {
    check_geometry(fg.rows, fg.cols, b.rows, b.cols)?;
    Ok((0..fg.rows * fg.cols).filter(|&px| b.pixel_nonzero(px) && fg.pixel_nonzero(px)).count())
}

/// Pixel-wise maximum of foreground images; the support is the union of the
/// member supports.
pub fn superimpose<S: Scalar>(images: &[ForegroundImage<S>]) -> Result<ForegroundImage<S>> {
    let first = images.first().ok_or(Error::EmptyInput("superimpose of no images"))?;
    let mut out = first.clone();
    for img in &images[1..] {
        check_geometry(out.rows, out.cols, img.rows, img.cols)?;
        for (o, &v) in out.pixels.iter_mut().zip(&img.pixels) {
            *o = (*o).max(v);
        }
    }
    Ok(out)
}

/// Concatenate synchronized views into one long vector. The per-view segment
/// offsets are recorded so view geometry survives.
pub fn stitch_views<S: Scalar>(views: &[RobotImage<S>]) -> Result<StitchedImage<S>> {
    if views.is_empty() {
        return Err(Error::EmptyInput("stitch of no views"));
    }
    let mut pixels = Vec::with_capacity(views.iter().map(|v| v.p()).sum());
    let mut segments = Vec::with_capacity(views.len());
    for v in views {
        segments.push((v.rows, v.cols, pixels.len()));
        pixels.extend_from_slice(&v.pixels);
    }
    Ok(StitchedImage { pixels, segments })
}

/// The at-least-one-view rule: a pose is free when some camera sees no
/// overlap between robot foreground and obstacle image.
pub fn multi_view_free<S: Scalar>(
    fg_views: &[ForegroundImage<S>],
    b_views: &[ObstacleImage<S>],
) -> Result<bool> {
    if fg_views.is_empty() {
        return Err(Error::EmptyInput("multi_view_free of no views"));
    }
    if fg_views.len() != b_views.len() {
        return Err(Error::GeometryMismatch(format!(
            "{} foreground views vs {} obstacle views",
            fg_views.len(),
            b_views.len()
        )));
    }
    for (fg, b) in fg_views.iter().zip(b_views) {
        if !hadamard_overlap(fg, b)? {
            return Ok(true);
        }
    }
    Ok(false)
}
