//! Shi-Tomasi corner detection on per-link foregrounds.
//!
//! Links are segmented from the foreground by exact color match (each link is
//! painted a distinct solid color), and corners are detected per link from
//! the minimum eigenvalue of the 3x3-windowed gradient structure tensor with
//! Sobel gradients.

use crate::geom::Point2;
use crate::raster::SupportMask;
use crate::render::SparseSprite;
use crate::scalar::Scalar;
use crate::Rgb;

/// Detector parameters. The window is a fixed 3x3 box over Sobel gradients.
#[derive(Debug, Clone, Copy)]
pub struct ShiTomasiParams {
    /// Keep responses at or above `quality_level * max_response`.
    pub quality_level: f64,
    /// Non-maximum suppression radius in pixels.
    pub nms_radius: f64,
    /// Strongest-first cap on the number of reported features.
    pub max_features: usize,
}

impl Default for ShiTomasiParams {
    fn default() -> Self {
        Self { quality_level: 0.05, nms_radius: 3.0, max_features: 25 }
    }
}

/// Per-link Shi-Tomasi feature points of one pose image.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkFeatureSet<S> {
    pub rows: usize,
    pub cols: usize,
    /// One (possibly empty) unordered point list per link; coordinates are
    /// pixel `(x = column, y = row)`.
    pub links: Vec<Vec<Point2<S>>>,
}

/// Minimum-eigenvalue corner response map of a grayscale buffer.
///
/// Gradients are Sobel with zero padding; the structure tensor is summed
/// over a 3x3 box. Only pixels within `[r0, r1) x [c0, c1)` are evaluated.
fn response_map(
    gray: &[f64],
    rows: usize,
    cols: usize,
    (r0, r1): (usize, usize),
    (c0, c1): (usize, usize),
) -> Vec<(usize, usize, f64)> {
    let at = |r: i64, c: i64| -> f64 {
        if r < 0 || c < 0 || r >= rows as i64 || c >= cols as i64 {
            0.0
        } else {
            gray[r as usize * cols + c as usize]
        }
    };
    let gx = |r: i64, c: i64| -> f64 {
        at(r - 1, c + 1) + 2.0 * at(r, c + 1) + at(r + 1, c + 1)
            - at(r - 1, c - 1)
            - 2.0 * at(r, c - 1)
            - at(r + 1, c - 1)
    };
    let gy = |r: i64, c: i64| -> f64 {
        at(r + 1, c - 1) + 2.0 * at(r + 1, c) + at(r + 1, c + 1)
            - at(r - 1, c - 1)
            - 2.0 * at(r - 1, c)
            - at(r - 1, c + 1)
    };
    let mut out = Vec::new();
    for r in r0..r1 {
        for c in c0..c1 {
            let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
            for dr in -1i64..=1 {
                for dc in -1i64..=1 {
                    let x = gx(r as i64 + dr, c as i64 + dc);
                    let y = gy(r as i64 + dr, c as i64 + dc);
                    sxx += x * x;
                    sxy += x * y;
                    syy += y * y;
                }
            }
            let tr = sxx + syy;
            let det_term = ((sxx - syy).powi(2) + 4.0 * sxy * sxy).sqrt();
            let lambda_min = 0.5 * (tr - det_term);
            if lambda_min > 0.0 {
                out.push((r, c, lambda_min));
            }
        }
    }
    out
}

fn select_features<S: Scalar>(
    mut candidates: Vec<(usize, usize, f64)>,
    params: &ShiTomasiParams,
) -> Vec<Point2<S>> {
    let max_resp = candidates.iter().map(|&(_, _, v)| v).fold(0.0f64, f64::max);
    if max_resp <= 0.0 {
        return Vec::new();
    }
    let thresh = params.quality_level * max_resp;
    candidates.retain(|&(_, _, v)| v >= thresh);
    // Strongest first; ties broken by pixel order for determinism.
    candidates.sort_by(|a, b| {
        b.2.partial_cmp(&a.2).unwrap().then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1))
    });
    let r2 = params.nms_radius * params.nms_radius;
    let mut kept: Vec<(usize, usize)> = Vec::new();
    for (r, c, _) in candidates {
        if kept.len() >= params.max_features {
            break;
        }
        let suppressed = kept.iter().any(|&(kr, kc)| {
            let dr = kr as f64 - r as f64;
            let dc = kc as f64 - c as f64;
            dr * dr + dc * dc < r2
        });
        if !suppressed {
            kept.push((r, c));
        }
    }
    kept.into_iter()
        .map(|(r, c)| Point2::new(S::of_f64(c as f64), S::of_f64(r as f64)))
        .collect()
}

/// Shi-Tomasi corners of a grayscale buffer (whole image).
pub fn shi_tomasi_gray<S: Scalar>(
    gray: &[f64],
    rows: usize,
    cols: usize,
    params: &ShiTomasiParams,
) -> Vec<Point2<S>> {
    select_features(response_map(gray, rows, cols, (0, rows), (0, cols)), params)
}

/// Shi-Tomasi corners of a single-link foreground image. Intensity is the
/// channel mean; a uniform (or empty) input yields no features.
pub fn shi_tomasi<S: Scalar>(
    fg: &crate::image::ForegroundImage<S>,
    params: &ShiTomasiParams,
) -> Vec<Point2<S>> {
    let mut gray = vec![0.0f64; fg.rows * fg.cols];
    for px in 0..fg.rows * fg.cols {
        let i = 3 * px;
        gray[px] = (fg.pixels[i].as_f64() + fg.pixels[i + 1].as_f64() + fg.pixels[i + 2].as_f64())
            / 3.0;
    }
    shi_tomasi_gray(&gray, fg.rows, fg.cols, params)
}

/// Segment a sprite into per-link pixel sets by exact color match and detect
/// features on each link separately. Occluded pixels belong to the link that
/// won the painter's algorithm, i.e. the one actually visible.
pub fn link_features<S: Scalar>(
    sprite: &SparseSprite<S>,
    link_colors: &[Rgb],
    params: &ShiTomasiParams,
) -> LinkFeatureSet<S> {
    let (rows, cols) = (sprite.rows, sprite.cols);
    let mut per_link_px: Vec<Vec<u32>> = vec![Vec::new(); link_colors.len()];
    for (&px, c) in sprite.pixels.iter().zip(&sprite.colors) {
        let quant: Rgb = [
            crate::image::intensity_to_u8(c[0]),
            crate::image::intensity_to_u8(c[1]),
            crate::image::intensity_to_u8(c[2]),
        ];
        if let Some(link) = link_colors.iter().position(|&lc| lc == quant) {
            per_link_px[link].push(px);
        }
    }
    let mut gray = vec![0.0f64; rows * cols];
    let mut links = Vec::with_capacity(link_colors.len());
    for (link, pxs) in per_link_px.iter().enumerate() {
        if pxs.is_empty() {
            links.push(Vec::new());
            continue;
        }
        let lum = {
            let c = crate::image::color_intensities::<S>(link_colors[link]);
            (c[0].as_f64() + c[1].as_f64() + c[2].as_f64()) / 3.0
        };
        let (mut rmin, mut rmax, mut cmin, mut cmax) = (usize::MAX, 0usize, usize::MAX, 0usize);
        for &px in pxs {
            let (r, c) = (px as usize / cols, px as usize % cols);
            gray[px as usize] = lum;
            rmin = rmin.min(r);
            rmax = rmax.max(r);
            cmin = cmin.min(c);
            cmax = cmax.max(c);
        }
        // Responses live within 2 px of the link support (Sobel + box reach).
        let r0 = rmin.saturating_sub(2);
        let r1 = (rmax + 3).min(rows);
        let c0 = cmin.saturating_sub(2);
        let c1 = (cmax + 3).min(cols);
        let cands = response_map(&gray, rows, cols, (r0, r1), (c0, c1));
        links.push(select_features(cands, params));
        for &px in pxs {
            gray[px as usize] = 0.0;
        }
    }
    LinkFeatureSet { rows, cols, links }
}

/// Pixel mask of one link of a sprite (used by tests and diagnostics).
pub fn link_mask<S: Scalar>(sprite: &SparseSprite<S>, color: Rgb) -> SupportMask {
    let mut m = SupportMask::new(sprite.rows, sprite.cols);
    for (&px, c) in sprite.pixels.iter().zip(&sprite.colors) {
        let quant: Rgb = [
            crate::image::intensity_to_u8(c[0]),
            crate::image::intensity_to_u8(c[1]),
            crate::image::intensity_to_u8(c[2]),
        ];
        if quant == color {
            m.set(px as usize);
        }
    }
    m
}
