//! Compressive rectangle features.
//!
//! A `w×h` window has `(wh)²` rectangle-filter responses: one per filter
//! scale `(rx, ry)` and anchor `(px, py)`, each summing the counts of the
//! box `[px, px+rx) × [py, py+ry)` clipped to the window. A very sparse random
//! matrix with entries `{+√s, 0, −√s}` (probabilities `1/2s, 1−1/s, 1/2s`,
//! `s = m/4`) compresses that space to `n` features. Only the nonzero entries
//! are stored, and each one costs a single integral-image lookup.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;
use core::ops::Deref;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::coding::SpikeCountFrame;
use crate::event::Geometry;

/// Axis-aligned rectangle in pixel units; `x, y` is the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub const fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    pub fn fits_in(&self, g: Geometry) -> bool {
        self.x as u64 + self.w as u64 <= g.width as u64 && self.y as u64 + self.h as u64 <= g.height as u64
    }
}

/// Summed-area table with a zero top row and left column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegralImage {
    width: u32,
    height: u32,
    stride: usize,
    cumulative: Vec<u64>,
}

impl IntegralImage {
    pub fn new(frame: &SpikeCountFrame) -> Self {
        let (w, h) = (frame.geometry.width as usize, frame.geometry.height as usize);
        let stride = w + 1;
        let mut cumulative = alloc::vec![0u64; stride * (h + 1)];
        for y in 0..h {
            let mut row_sum = 0u64;
            for x in 0..w {
                row_sum += frame.counts[y * w + x] as u64;
                cumulative[(y + 1) * stride + x + 1] = cumulative[y * stride + x + 1] + row_sum;
            }
        }
        Self {
            width: w as u32,
            height: h as u32,
            stride,
            cumulative,
        }
    }

    /// Geometry of the source frame (the table itself is one larger each way).
    pub fn source_geometry(&self) -> Geometry {
        Geometry::new(self.width, self.height)
    }

    /// Sum over source pixels with column `< i` and row `< j`.
    #[inline]
    pub fn at(&self, i: u32, j: u32) -> u64 {
        self.cumulative[j as usize * self.stride + i as usize]
    }

    /// Sum of counts inside `r`, which must lie within the source frame.
    #[inline]
    pub fn rect_sum(&self, r: Rect) -> u64 {
        debug_assert!(r.fits_in(self.source_geometry()));
        let (x0, y0) = (r.x as usize, r.y as usize);
        let (x1, y1) = (x0 + r.w as usize, y0 + r.h as usize);
        let s = self.stride;
        let c = &self.cumulative;
        (c[y1 * s + x1] + c[y0 * s + x0]) - (c[y0 * s + x1] + c[y1 * s + x0])
    }
}

/// Convenience alias for `IntegralImage::new`.
pub fn build_integral(frame: &SpikeCountFrame) -> IntegralImage {
    IntegralImage::new(frame)
}

/// One coordinate of the rectangle-filter feature space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FeatureIndex {
    /// Filter width, `1..=w`.
    pub rx: u32,
    /// Filter height, `1..=h`.
    pub ry: u32,
    /// Anchor column inside the window, `0..w`.
    pub px: u32,
    /// Anchor row inside the window, `0..h`.
    pub py: u32,
}

/// Bijection between flat indices `0..(wh)²` and filter coordinates.
///
/// Scales are enumerated row-major by `(ry, rx)`, positions row-major by
/// `(py, px)`, and the flat index is `scale · wh + position`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureIndexMap {
    pub w: u32,
    pub h: u32,
}

impl FeatureIndexMap {
    pub fn new(w: u32, h: u32) -> Self {
        Self { w, h }
    }

    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    /// Dimensionality `m = (wh)²` of the feature space.
    pub fn dim(&self) -> u64 {
        self.area() * self.area()
    }

    pub fn decode(&self, flat: u64) -> Option<FeatureIndex> {
        if flat >= self.dim() {
            return None;
        }
        let area = self.area();
        let (scale, pos) = (flat / area, flat % area);
        let w = self.w as u64;
        Some(FeatureIndex {
            rx: (scale % w) as u32 + 1,
            ry: (scale / w) as u32 + 1,
            px: (pos % w) as u32,
            py: (pos / w) as u32,
        })
    }

    pub fn encode(&self, f: FeatureIndex) -> Option<u64> {
        let valid = (1..=self.w).contains(&f.rx) && (1..=self.h).contains(&f.ry) && f.px < self.w && f.py < self.h;
        if !valid {
            return None;
        }
        let w = self.w as u64;
        let scale = (f.ry as u64 - 1) * w + (f.rx as u64 - 1);
        let pos = f.py as u64 * w + f.px as u64;
        Some(scale * self.area() + pos)
    }

    /// The filter's support inside the window, relative to the window origin.
    pub fn support(&self, f: FeatureIndex) -> Rect {
        Rect::new(f.px, f.py, f.rx.min(self.w - f.px), f.ry.min(self.h - f.py))
    }
}

/// A nonzero matrix entry: its feature coordinate, cached window-relative
/// support, and sign of the `±√s` weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatrixEntry {
    pub feature: FeatureIndex,
    pub support: Rect,
    pub sign: i8,
}

/// Window-placement failure for [`SparseMeasurementMatrix::project`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("window {w}x{h} at ({x}, {y}) does not fit in a {frame_w}x{frame_h} frame")]
pub struct PlacementError {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
    pub frame_w: u32,
    pub frame_h: u32,
}

/// Compressed feature vector `v = Mx`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl Deref for FeatureVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Very sparse `n × (wh)²` measurement matrix, stored row-wise as nonzeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMeasurementMatrix {
    map: FeatureIndexMap,
    s: f64,
    weight: f64,
    seed: u64,
    rows: Vec<Vec<MatrixEntry>>,
}

impl SparseMeasurementMatrix {
    /// Draws an `n`-row matrix for a `w×h` window.
    ///
    /// Each row's nonzero count is `Binomial(m, 1/s)`, which is the exact
    /// distribution of i.i.d. entries; an empty row is redrawn. Positions are
    /// then chosen uniformly without replacement, signs by a fair coin.
    ///
    /// # Panics
    /// If `n == 0` or `w·h < 2`.
    pub fn sample(n: usize, w: u32, h: u32, seed: u64) -> Self {
        assert!(n >= 1, "at least one compressed feature is required");
        let map = FeatureIndexMap::new(w, h);
        assert!(map.area() >= 2, "window must cover at least two pixels");
        let m = map.dim();
        let s = m as f64 / 4.0;
        let binomial = Binomial::new(m, 1.0 / s).expect("1/s lies in (0, 1]");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..n)
            .map(|_| {
                let k = loop {
                    let k = binomial.sample(&mut rng);
                    if k > 0 {
                        break k as usize;
                    }
                };
                let mut flats = index::sample(&mut rng, m as usize, k).into_vec();
                flats.sort_unstable();
                flats
                    .into_iter()
                    .map(|flat| {
                        let feature = map.decode(flat as u64).expect("index below m");
                        let sign = if rng.random::<bool>() { 1 } else { -1 };
                        MatrixEntry {
                            feature,
                            support: map.support(feature),
                            sign,
                        }
                    })
                    .collect()
            })
            .collect();
        Self {
            map,
            s,
            weight: libm::sqrt(s),
            seed,
            rows,
        }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn window(&self) -> (u32, u32) {
        (self.map.w, self.map.h)
    }

    pub fn index_map(&self) -> FeatureIndexMap {
        self.map
    }

    /// Sparsity parameter `s = m/4`.
    pub fn sparsity(&self) -> f64 {
        self.s
    }

    /// Magnitude `√s` of every nonzero entry.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rows(&self) -> &[Vec<MatrixEntry>] {
        &self.rows
    }

    pub fn nonzeros(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Projects the window whose top-left corner is `(x, y)`.
    pub fn project(&self, x: u32, y: u32, ii: &IntegralImage) -> Result<FeatureVector, PlacementError> {
        let g = ii.source_geometry();
        if !Rect::new(x, y, self.map.w, self.map.h).fits_in(g) {
            return Err(PlacementError {
                x,
                y,
                w: self.map.w,
                h: self.map.h,
                frame_w: g.width,
                frame_h: g.height,
            });
        }
        let mut v = alloc::vec![0.0; self.n()];
        self.project_into(x, y, ii, &mut v);
        Ok(FeatureVector(v))
    }

    /// Unchecked projection into a caller buffer of length `n`; the window
    /// must already be known to fit.
    pub fn project_into(&self, x: u32, y: u32, ii: &IntegralImage, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.n());
        for (slot, row) in out.iter_mut().zip(&self.rows) {
            let mut acc: i64 = 0;
            for e in row {
                let r = Rect::new(x + e.support.x, y + e.support.y, e.support.w, e.support.h);
                let sum = ii.rect_sum(r) as i64;
                acc += if e.sign > 0 { sum } else { -sum };
            }
            *slot = acc as f64 * self.weight;
        }
    }

    /// Text dump: a header line, then `i: (rx,ry,px,py,±1) …` per row.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# n={} w={} h={} s={} seed={}\n",
            self.n(),
            self.map.w,
            self.map.h,
            self.s,
            self.seed
        );
        for (i, row) in self.rows.iter().enumerate() {
            let _ = write!(out, "{i}:");
            for e in row {
                let f = e.feature;
                let sign = if e.sign > 0 { "+1" } else { "-1" };
                let _ = write!(out, " ({},{},{},{},{})", f.rx, f.ry, f.px, f.py, sign);
            }
            out.push('\n');
        }
        out
    }
}
