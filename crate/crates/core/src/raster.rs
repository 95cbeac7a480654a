//! Scanline polygon fill, integer line drawing, and pixel support masks.
//!
//! Coverage is binary: a pixel is painted iff its center lies inside the
//! polygon (even-odd rule, half-open `[x0, x1)` spans so shared edges never
//! double-paint). No anti-aliasing anywhere.

use crate::scalar::Scalar;

/// Bitset over the pixels of one raster.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportMask {
    pub rows: usize,
    pub cols: usize,
    words: Vec<u64>,
}

impl SupportMask {
    pub fn new(rows: usize, cols: usize) -> Self {
        let n = rows * cols;
        Self { rows, cols, words: vec![0u64; n.div_ceil(64)] }
    }

    #[inline]
    pub fn set(&mut self, pixel: usize) {
        self.words[pixel / 64] |= 1u64 << (pixel % 64);
    }

    #[inline]
    pub fn get(&self, pixel: usize) -> bool {
        (self.words[pixel / 64] >> (pixel % 64)) & 1 == 1
    }

    pub fn clear(&mut self) {
        self.words.fill(0);
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn intersects(&self, other: &SupportMask) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    pub fn indices(&self) -> Vec<u32> {
        let mut out = Vec::new();
        for (wi, &w) in self.words.iter().enumerate() {
            let mut bits = w;
            while bits != 0 {
                let b = bits.trailing_zeros();
                out.push((wi * 64) as u32 + b);
                bits &= bits - 1;
            }
        }
        out
    }
}

/// Fill a polygon given in continuous pixel coordinates; `plot(row, col)` is
/// called once per covered pixel, clipped to the raster.
pub fn fill_polygon<S: Scalar>(
    pts: &[(S, S)],
    rows: usize,
    cols: usize,
    mut plot: impl FnMut(usize, usize),
) {
    if pts.len() < 3 {
        return;
    }
    let mut min_y = S::infinity();
    let mut max_y = S::neg_infinity();
    for &(_, y) in pts {
        min_y = min_y.min(y);
        max_y = max_y.max(y);
    }
    if !min_y.is_finite() || !max_y.is_finite() {
        return;
    }
    let r_lo = min_y.as_f64().ceil().max(0.0) as usize;
    let r_hi = max_y.as_f64().floor().min((rows - 1) as f64);
    if r_hi < 0.0 {
        return;
    }
    let r_hi = r_hi as usize;
    let mut crossings: Vec<S> = Vec::with_capacity(8);
    for r in r_lo..=r_hi {
        let y = S::from_usize(r).unwrap();
        crossings.clear();
        let n = pts.len();
        for i in 0..n {
            let (x1, y1) = pts[i];
            let (x2, y2) = pts[(i + 1) % n];
            if (y1 > y) != (y2 > y) {
                let t = (y - y1) / (y2 - y1);
                crossings.push(x1 + t * (x2 - x1));
            }
        }
        crossings.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for pair in crossings.chunks_exact(2) {
            let c_lo = pair[0].as_f64().ceil().max(0.0) as i64;
            // Half-open span: pixel centers strictly left of the exit edge.
            let c_hi = (pair[1].as_f64().ceil() - 1.0).min((cols - 1) as f64) as i64;
            for c in c_lo..=c_hi {
                plot(r, c as usize);
            }
        }
    }
}

/// Bresenham line between integer pixels, both endpoints plotted. Pixels
/// outside the raster are skipped.
pub fn draw_line(
    (r0, c0): (i64, i64),
    (r1, c1): (i64, i64),
    rows: usize,
    cols: usize,
    mut plot: impl FnMut(usize, usize),
) {
    let dc = (c1 - c0).abs();
    let dr = -(r1 - r0).abs();
    let sc = if c0 < c1 { 1 } else { -1 };
    let sr = if r0 < r1 { 1 } else { -1 };
    let mut err = dc + dr;
    let (mut r, mut c) = (r0, c0);
    loop {
        if r >= 0 && c >= 0 && (r as usize) < rows && (c as usize) < cols {
            plot(r as usize, c as usize);
        }
        if r == r1 && c == c1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dr {
            err += dr;
            c += sc;
        }
        if e2 <= dc {
            err += dc;
            r += sr;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fill_unit_strip_exact_count() {
        // Rectangle spanning x in [50, 60), y in [49.5, 50.5): exactly row 50,
        // columns 50..=59.
        let pts = [(50.0f64, 49.5), (60.0, 49.5), (60.0, 50.5), (50.0, 50.5)];
        let mut px = Vec::new();
        fill_polygon(&pts, 100, 100, |r, c| px.push((r, c)));
        assert_eq!(px.len(), 10);
        assert!(px.iter().all(|&(r, _)| r == 50));
        assert_eq!(px.first(), Some(&(50, 50)));
        assert_eq!(px.last(), Some(&(50, 59)));
    }

    #[test]
    fn fill_clips_to_raster() {
        let pts = [(-10.0f64, -10.0), (5.0, -10.0), (5.0, 5.0), (-10.0, 5.0)];
        let mut count = 0usize;
        fill_polygon(&pts, 8, 8, |_, _| count += 1);
        // Rows 0..=4 x cols 0..=4: spans are half-open at the top and right
        // edges, so centers exactly on y = 5 or x = 5 stay out.
        assert_eq!(count, 5 * 5);
    }

    #[test]
    fn shared_edge_paints_once() {
        let left = [(0.0f64, 0.0), (4.0, 0.0), (4.0, 4.0), (0.0, 4.0)];
        let right = [(4.0f64, 0.0), (8.0, 0.0), (8.0, 4.0), (4.0, 4.0)];
        let mut mask = SupportMask::new(16, 16);
        let mut double = false;
        for poly in [&left, &right] {
            fill_polygon(poly, 16, 16, |r, c| {
                if mask.get(r * 16 + c) {
                    double = true;
                }
                mask.set(r * 16 + c);
            });
        }
        assert!(!double, "pixel painted by both polygons across shared edge");
    }

    #[test]
    fn line_endpoints_plotted() {
        let mut px = Vec::new();
        draw_line((2, 3), (5, 9), 20, 20, |r, c| px.push((r, c)));
        assert!(px.contains(&(2, 3)));
        assert!(px.contains(&(5, 9)));
        let mut single = Vec::new();
        draw_line((4, 4), (4, 4), 20, 20, |r, c| single.push((r, c)));
        assert_eq!(single, vec![(4, 4)]);
    }

    #[test]
    fn mask_ops() {
        let mut a = SupportMask::new(10, 10);
        let mut b = SupportMask::new(10, 10);
        a.set(5);
        a.set(77);
        b.set(77);
        assert!(a.intersects(&b));
        assert_eq!(a.count(), 2);
        assert_eq!(a.indices(), vec![5, 77]);
        b.clear();
        assert!(!a.intersects(&b));
    }
}
