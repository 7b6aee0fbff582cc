//! Summed-area tables for O(1) rectangular window sums.

/// Integral image with a zero top row and left column: entry `(x, y)` holds the
/// sum of all source values strictly above and to the left of `(x, y)`.
#[derive(Clone, Debug)]
pub struct SummedAreaTable {
    width: usize,
    height: usize,
    sums: Vec<f64>,
}

impl SummedAreaTable {
    pub fn new(values: &[f64], width: usize, height: usize) -> Self {
        assert_eq!(values.len(), width * height);
        let stride = width + 1;
        let mut sums = vec![0.0f64; stride * (height + 1)];
        for y in 0..height {
            let mut row = 0.0;
            for x in 0..width {
                row += values[y * width + x];
                sums[(y + 1) * stride + x + 1] = sums[y * stride + x + 1] + row;
            }
        }
        SummedAreaTable { width, height, sums }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Sum over the inclusive rectangle `[x0, x1] x [y0, y1]`.
    #[inline]
    pub fn sum(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
        debug_assert!(x0 <= x1 && x1 < self.width && y0 <= y1 && y1 < self.height);
        let s = self.width + 1;
        self.sums[(y1 + 1) * s + x1 + 1] - self.sums[y0 * s + x1 + 1] - self.sums[(y1 + 1) * s + x0]
            + self.sums[y0 * s + x0]
    }

    pub fn total(&self) -> f64 {
        self.sums[self.sums.len() - 1]
    }
}

/// Window `[c - r, c + r]` clipped to `[0, len)`.
#[inline]
pub(crate) fn clip_window(c: usize, r: usize, len: usize) -> (usize, usize) {
    (c.saturating_sub(r), (c + r).min(len - 1))
}
