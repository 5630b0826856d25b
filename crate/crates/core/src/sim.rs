//! Behavioral DVS simulator.
//!
//! Scenes are rendered as linear intensity grids at a fixed sample period.
//! Each pixel keeps a reference log intensity and emits one event per
//! threshold `θ` crossed between samples; the uncrossed remainder carries
//! over to the next interval. Optional background activity is a homogeneous
//! Poisson process per pixel.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::coding::DEFAULT_BIN_US;
use crate::event::{Event, EventStream, Geometry, Polarity};

pub const DEFAULT_THETA: f64 = 0.1;
pub const DEFAULT_INTENSITY_FLOOR: f64 = 1e-6;
pub const DEFAULT_RENDER_PERIOD_US: u64 = 1_000;

// Slack when counting threshold crossings, so that an excursion of exactly
// kθ (up to rounding in ln) yields k events.
const CROSSING_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("invalid scene: {0}")]
    InvalidScene(&'static str),
    #[error("invalid sensor parameters: {0}")]
    InvalidParams(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorParams {
    /// Log-intensity change per event.
    pub theta: f64,
    /// Intensities are clamped to at least this before taking logarithms.
    pub intensity_floor: f64,
    /// Background events per pixel per second.
    pub noise_rate: f64,
    pub seed: u64,
}

impl Default for SensorParams {
    fn default() -> Self {
        Self {
            theta: DEFAULT_THETA,
            intensity_floor: DEFAULT_INTENSITY_FLOOR,
            noise_rate: 0.0,
            seed: 0,
        }
    }
}

impl SensorParams {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(SimError::InvalidParams("theta must be positive"));
        }
        if !(self.intensity_floor > 0.0 && self.intensity_floor.is_finite()) {
            return Err(SimError::InvalidParams("intensity floor must be positive"));
        }
        if !(self.noise_rate >= 0.0 && self.noise_rate.is_finite()) {
            return Err(SimError::InvalidParams("noise rate must be non-negative"));
        }
        Ok(())
    }
}

/// Anything that can produce intensity samples at a fixed period.
pub trait IntensitySource {
    fn geometry(&self) -> Geometry;
    fn sample_period_us(&self) -> u64;
    fn sample_count(&self) -> usize;
    /// Writes sample `k` (taken at `k · sample_period_us`) row-major into `out`.
    fn render_into(&self, k: usize, out: &mut [f64]);

    /// Time of the last sample.
    fn duration_us(&self) -> u64 {
        self.sample_period_us() * self.sample_count().saturating_sub(1) as u64
    }
}

/// Materialized sequence of intensity grids.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensitySequence {
    pub geometry: Geometry,
    pub sample_period_us: u64,
    pub samples: Vec<Vec<f64>>,
}

impl IntensitySequence {
    pub fn new(geometry: Geometry, sample_period_us: u64, samples: Vec<Vec<f64>>) -> Result<Self, SimError> {
        if samples.len() < 2 {
            return Err(SimError::InvalidScene("at least two intensity samples are required"));
        }
        if sample_period_us < 1 {
            return Err(SimError::InvalidScene("sample period must be at least 1 µs"));
        }
        for s in &samples {
            if s.len() != geometry.pixel_count() {
                return Err(SimError::InvalidScene("sample grid does not match geometry"));
            }
            if s.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
                return Err(SimError::InvalidScene("intensities must be finite and non-negative"));
            }
        }
        Ok(Self {
            geometry,
            sample_period_us,
            samples,
        })
    }

    /// Materializes any source.
    pub fn from_source<S: IntensitySource + ?Sized>(source: &S) -> Self {
        let n = source.geometry().pixel_count();
        let samples = (0..source.sample_count())
            .map(|k| {
                let mut grid = vec![0.0; n];
                source.render_into(k, &mut grid);
                grid
            })
            .collect();
        Self {
            geometry: source.geometry(),
            sample_period_us: source.sample_period_us(),
            samples,
        }
    }
}

impl IntensitySource for IntensitySequence {
    fn geometry(&self) -> Geometry {
        self.geometry
    }

    fn sample_period_us(&self) -> u64 {
        self.sample_period_us
    }

    fn sample_count(&self) -> usize {
        self.samples.len()
    }

    fn render_into(&self, k: usize, out: &mut [f64]) {
        out.copy_from_slice(&self.samples[k]);
    }
}

/// A straight path, optionally reflected back and forth inside per-axis bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    pub start: (f64, f64),
    /// Pixels per second.
    pub velocity: (f64, f64),
    /// `((x_lo, x_hi), (y_lo, y_hi))` reflection walls.
    pub bounds: Option<((f64, f64), (f64, f64))>,
}

impl Path {
    pub fn linear(start: (f64, f64), velocity: (f64, f64)) -> Self {
        Self {
            start,
            velocity,
            bounds: None,
        }
    }

    pub fn at(&self, t_us: u64) -> (f64, f64) {
        // v·t before dividing keeps integer-pixel displacements exact.
        let x = self.start.0 + self.velocity.0 * t_us as f64 / 1e6;
        let y = self.start.1 + self.velocity.1 * t_us as f64 / 1e6;
        match self.bounds {
            None => (x, y),
            Some((bx, by)) => (reflect(x, bx.0, bx.1), reflect(y, by.0, by.1)),
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        let finite = self.start.0.is_finite()
            && self.start.1.is_finite()
            && self.velocity.0.is_finite()
            && self.velocity.1.is_finite();
        if !finite {
            return Err(SimError::InvalidScene("path start and velocity must be finite"));
        }
        if let Some((bx, by)) = self.bounds {
            if !(bx.0 <= bx.1 && by.0 <= by.1) {
                return Err(SimError::InvalidScene("reflection bounds are inverted"));
            }
            let inside = (bx.0..=bx.1).contains(&self.start.0) && (by.0..=by.1).contains(&self.start.1);
            if !inside {
                return Err(SimError::InvalidScene("path starts outside its reflection bounds"));
            }
        }
        Ok(())
    }
}

fn reflect(p: f64, lo: f64, hi: f64) -> f64 {
    let span = hi - lo;
    if span <= 0.0 {
        return lo;
    }
    let period = 2.0 * span;
    let mut u = libm::fmod(p - lo, period);
    if u < 0.0 {
        u += period;
    }
    if u > span {
        u = period - u;
    }
    lo + u
}

/// Uniform disk moving over a uniform background.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallScene {
    /// Center path, in continuous pixel coordinates (pixel `(i, j)` covers
    /// `[i, i+1) × [j, j+1)`).
    pub path: Path,
    pub radius: f64,
    pub foreground: f64,
    pub background: f64,
}

/// Grayscale bitmap, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Bitmap {
    pub width: u32,
    pub height: u32,
    pub data: Vec<f64>,
}

impl Bitmap {
    pub fn filled(width: u32, height: u32, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width as usize * height as usize],
        }
    }

    #[inline]
    pub fn get(&self, x: i64, y: i64) -> Option<f64> {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return None;
        }
        Some(self.data[y as usize * self.width as usize + x as usize])
    }

    /// Fills the intersection of the rectangle with the bitmap.
    pub fn fill_rect(&mut self, x: i64, y: i64, w: u32, h: u32, value: f64) {
        let x0 = x.clamp(0, self.width as i64) as usize;
        let y0 = y.clamp(0, self.height as i64) as usize;
        let x1 = (x + w as i64).clamp(0, self.width as i64) as usize;
        let y1 = (y + h as i64).clamp(0, self.height as i64) as usize;
        for row in y0..y1 {
            let base = row * self.width as usize;
            self.data[base + x0..base + x1].fill(value);
        }
    }
}

// 5×7 glyph of the digit three.
const GLYPH_THREE: [&str; 7] = ["01110", "10001", "00001", "00110", "00001", "10001", "01110"];

/// A printed digit three on white paper surrounded by seeded rectangular
/// clutter. Returns the bitmap and the digit's bounding rectangle
/// `(x, y, w, h)` in bitmap pixels.
pub fn digit_on_clutter(
    width: u32,
    height: u32,
    cell: u32,
    clutter: usize,
    seed: u64,
) -> (Bitmap, (u32, u32, u32, u32)) {
    const PAPER: f64 = 1.0;
    const INK: f64 = 0.4;
    let mut bmp = Bitmap::filled(width, height, PAPER);
    let (dw, dh) = (5 * cell, 7 * cell);
    let (dx, dy) = ((width - dw) / 2, (height - dh) / 2);
    let keep_out = cell as i64 * 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut placed = 0;
    while placed < clutter {
        let w = rng.random_range(3..=12u32);
        let h = rng.random_range(3..=12u32);
        let x = rng.random_range(0..width as i64);
        let y = rng.random_range(0..height as i64);
        let overlaps = x < dx as i64 + dw as i64 + keep_out
            && x + w as i64 > dx as i64 - keep_out
            && y < dy as i64 + dh as i64 + keep_out
            && y + h as i64 > dy as i64 - keep_out;
        if overlaps {
            continue;
        }
        let shade = rng.random_range(0.55..0.9);
        bmp.fill_rect(x, y, w, h, shade);
        placed += 1;
    }
    for (row, line) in GLYPH_THREE.iter().enumerate() {
        for (col, c) in line.bytes().enumerate() {
            if c == b'1' {
                let x = dx as i64 + (col as u32 * cell) as i64;
                let y = dy as i64 + (row as u32 * cell) as i64;
                bmp.fill_rect(x, y, cell, cell, INK);
            }
        }
    }
    (bmp, (dx, dy, dw, dh))
}

/// Static bitmap seen by a panning sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct TexturePanScene {
    pub bitmap: Bitmap,
    /// Frame position of the bitmap's top-left corner over time.
    pub origin: Path,
    /// Intensity outside the bitmap.
    pub background: f64,
    /// Tracked object's center in bitmap coordinates, if any.
    pub target: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SceneKind {
    Ball(BallScene),
    TexturePan(TexturePanScene),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub geometry: Geometry,
    pub kind: SceneKind,
    pub duration_us: u64,
    pub render_period_us: u64,
}

impl SceneSpec {
    /// Bright 6 px ball bouncing diagonally at ~85 px/s for 6 s, tuned to
    /// roughly 500 events per 10 ms bin at θ = 0.1.
    pub fn bouncing_ball() -> Self {
        let margin = 10.0;
        Self {
            geometry: Geometry::DVS128,
            kind: SceneKind::Ball(BallScene {
                path: Path {
                    start: (40.0, 30.0),
                    velocity: (60.0, 60.0),
                    bounds: Some(((margin, 128.0 - margin), (margin, 128.0 - margin))),
                },
                radius: 6.0,
                foreground: 12.0,
                background: 1.0,
            }),
            duration_us: 6_000_000,
            render_period_us: DEFAULT_RENDER_PERIOD_US,
        }
    }

    /// Digit three on lightly cluttered paper, panned diagonally at ~85 px/s
    /// for 4 s, giving roughly 1000 events per 10 ms bin at θ = 0.1.
    pub fn digit_pan() -> Self {
        Self::digit_pan_with((60.0, 60.0), 4_000_000, 10, 3)
    }

    /// A 200×200 cluttered page with a 20×28 digit at its center, panned on
    /// a reflecting path that keeps the digit center within 64 ± 30 px of a
    /// 128×128 frame.
    pub fn digit_pan_with(velocity: (f64, f64), duration_us: u64, clutter: usize, texture_seed: u64) -> Self {
        let (bitmap, (dx, dy, dw, dh)) = digit_on_clutter(200, 200, 4, clutter, texture_seed);
        let target = (dx as f64 + dw as f64 / 2.0, dy as f64 + dh as f64 / 2.0);
        let lo = (34.0 - target.0, 34.0 - target.1);
        let hi = (94.0 - target.0, 94.0 - target.1);
        Self {
            geometry: Geometry::DVS128,
            kind: SceneKind::TexturePan(TexturePanScene {
                bitmap,
                origin: Path {
                    start: (lo.0 + 30.0, lo.1 + 14.0),
                    velocity,
                    bounds: Some(((lo.0, hi.0), (lo.1, hi.1))),
                },
                background: 1.0,
                target: Some(target),
            }),
            duration_us,
            render_period_us: DEFAULT_RENDER_PERIOD_US,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.render_period_us < 1 {
            return Err(SimError::InvalidScene("render period must be at least 1 µs"));
        }
        if self.duration_us < self.render_period_us {
            return Err(SimError::InvalidScene("duration is shorter than one render period"));
        }
        if self.geometry.width == 0 || self.geometry.height == 0 {
            return Err(SimError::InvalidScene("empty geometry"));
        }
        match &self.kind {
            SceneKind::Ball(b) => {
                b.path.validate()?;
                if !(b.radius > 0.0 && b.radius.is_finite()) {
                    return Err(SimError::InvalidScene("ball radius must be positive"));
                }
                let ok = |v: f64| v >= 0.0 && v.is_finite();
                if !ok(b.foreground) || !ok(b.background) {
                    return Err(SimError::InvalidScene("intensities must be finite and non-negative"));
                }
                let (x, y) = b.path.start;
                let (w, h) = (self.geometry.width as f64, self.geometry.height as f64);
                if !(0.0..=w).contains(&x) || !(0.0..=h).contains(&y) {
                    return Err(SimError::InvalidScene("ball starts outside the frame"));
                }
            }
            SceneKind::TexturePan(p) => {
                p.origin.validate()?;
                if p.bitmap.data.len() != p.bitmap.width as usize * p.bitmap.height as usize {
                    return Err(SimError::InvalidScene("bitmap size mismatch"));
                }
                if p.bitmap.data.iter().any(|&v| !(v >= 0.0 && v.is_finite()))
                    || !(p.background >= 0.0 && p.background.is_finite())
                {
                    return Err(SimError::InvalidScene("intensities must be finite and non-negative"));
                }
            }
        }
        Ok(())
    }

    /// Ground-truth center of the tracked object at time `t_us`.
    pub fn object_center(&self, t_us: u64) -> Option<(f64, f64)> {
        match &self.kind {
            SceneKind::Ball(b) => Some(b.path.at(t_us)),
            SceneKind::TexturePan(p) => {
                let (tx, ty) = p.target?;
                let (ox, oy) = p.origin.at(t_us);
                Some((ox + tx, oy + ty))
            }
        }
    }

    fn render_ball(&self, b: &BallScene, t_us: u64, out: &mut [f64]) {
        out.fill(b.background);
        let (cx, cy) = b.path.at(t_us);
        let r = b.radius;
        let (w, h) = (self.geometry.width as i64, self.geometry.height as i64);
        let x0 = (libm::floor(cx - r) as i64).max(0);
        let x1 = (libm::ceil(cx + r) as i64).min(w);
        let y0 = (libm::floor(cy - r) as i64).max(0);
        let y1 = (libm::ceil(cy + r) as i64).min(h);
        let r2 = r * r;
        for j in y0..y1 {
            for i in x0..x1 {
                let (px, py) = (i as f64, j as f64);
                // Nearest and farthest points of the pixel square from the center.
                let nx = cx.clamp(px, px + 1.0) - cx;
                let ny = cy.clamp(py, py + 1.0) - cy;
                if nx * nx + ny * ny >= r2 {
                    continue;
                }
                let fx = (cx - px).abs().max((cx - px - 1.0).abs());
                let fy = (cy - py).abs().max((cy - py - 1.0).abs());
                let coverage = if fx * fx + fy * fy <= r2 {
                    1.0
                } else {
                    let mut hits = 0;
                    for a in 0..4 {
                        for c in 0..4 {
                            let sx = px + (a as f64 + 0.5) / 4.0 - cx;
                            let sy = py + (c as f64 + 0.5) / 4.0 - cy;
                            if sx * sx + sy * sy <= r2 {
                                hits += 1;
                            }
                        }
                    }
                    hits as f64 / 16.0
                };
                out[j as usize * w as usize + i as usize] = b.background + coverage * (b.foreground - b.background);
            }
        }
    }

    fn render_pan(&self, p: &TexturePanScene, t_us: u64, out: &mut [f64]) {
        let (ox, oy) = p.origin.at(t_us);
        let w = self.geometry.width as usize;
        let sample = |x: i64, y: i64| p.bitmap.get(x, y).unwrap_or(p.background);
        for j in 0..self.geometry.height as usize {
            let v = j as f64 - oy;
            let v0 = libm::floor(v);
            let fv = v - v0;
            let v0 = v0 as i64;
            for i in 0..w {
                let u = i as f64 - ox;
                let u0 = libm::floor(u);
                let fu = u - u0;
                let u0 = u0 as i64;
                let mut acc = (1.0 - fu) * (1.0 - fv) * sample(u0, v0);
                if fu > 0.0 {
                    acc += fu * (1.0 - fv) * sample(u0 + 1, v0);
                }
                if fv > 0.0 {
                    acc += (1.0 - fu) * fv * sample(u0, v0 + 1);
                    if fu > 0.0 {
                        acc += fu * fv * sample(u0 + 1, v0 + 1);
                    }
                }
                out[j * w + i] = acc;
            }
        }
    }
}

impl IntensitySource for SceneSpec {
    fn geometry(&self) -> Geometry {
        self.geometry
    }

    fn sample_period_us(&self) -> u64 {
        self.render_period_us
    }

    fn sample_count(&self) -> usize {
        (self.duration_us / self.render_period_us) as usize + 1
    }

    fn render_into(&self, k: usize, out: &mut [f64]) {
        let t = k as u64 * self.render_period_us;
        match &self.kind {
            SceneKind::Ball(b) => self.render_ball(b, t, out),
            SceneKind::TexturePan(p) => self.render_pan(p, t, out),
        }
    }
}

/// Renders every sample of a validated scene.
pub fn render_scene(spec: &SceneSpec) -> Result<IntensitySequence, SimError> {
    spec.validate()?;
    Ok(IntensitySequence::from_source(spec))
}

/// Converts intensity samples into a time-sorted event stream whose declared
/// span is the source duration.
///
/// Within one sample interval a pixel's `k`-th crossing is timestamped at the
/// linearly interpolated instant it occurs, floored to the microsecond and
/// kept strictly after the pixel's previous event where the interval allows.
pub fn generate_events<S: IntensitySource + ?Sized>(
    source: &S,
    params: &SensorParams,
) -> Result<EventStream, SimError> {
    params.validate()?;
    let g = source.geometry();
    let count = source.sample_count();
    if count < 2 {
        return Err(SimError::InvalidScene("at least two intensity samples are required"));
    }
    let period = source.sample_period_us();
    if period < 1 {
        return Err(SimError::InvalidScene("sample period must be at least 1 µs"));
    }
    let duration = source.duration_us();
    let theta = params.theta;
    let floor = params.intensity_floor;
    let n = g.pixel_count();
    let width = g.width as usize;

    let mut intensity = vec![0.0; n];
    source.render_into(0, &mut intensity);
    let mut log_now: Vec<f64> = intensity.iter().map(|&v| libm::log(v.max(floor))).collect();
    // Reference level is base + net·θ, which avoids drift from repeated sums.
    let base = log_now.clone();
    let mut net = vec![0i64; n];
    let mut last_t: Vec<Option<u64>> = vec![None; n];
    let mut prev = intensity.clone();

    let mut events = Vec::new();
    let mut batch: Vec<(u64, usize, Polarity)> = Vec::new();
    for k in 1..count {
        source.render_into(k, &mut intensity);
        let t0 = (k as u64 - 1) * period;
        let t1 = t0 + period;
        let cap = t1.min(duration.saturating_sub(1));
        batch.clear();
        for px in 0..n {
            if intensity[px] != prev[px] {
                log_now[px] = libm::log(intensity[px].max(floor));
                prev[px] = intensity[px];
            }
            let reference = base[px] + net[px] as f64 * theta;
            let diff = log_now[px] - reference;
            let crossings = libm::floor(diff.abs() / theta + CROSSING_EPS) as i64;
            if crossings == 0 {
                continue;
            }
            let (sign, polarity) = if diff > 0.0 {
                (1, Polarity::On)
            } else {
                (-1, Polarity::Off)
            };
            for j in 1..=crossings {
                let frac = (j as f64 * theta / diff.abs()).min(1.0);
                let mut t = t0 + libm::floor(frac * period as f64) as u64;
                if let Some(lt) = last_t[px] {
                    t = t.max(lt + 1);
                }
                t = t.min(cap);
                last_t[px] = Some(t);
                batch.push((t, px, polarity));
            }
            net[px] += sign * crossings;
        }
        batch.sort_unstable_by_key(|&(t, px, _)| (t, px));
        events.extend(
            batch
                .iter()
                .map(|&(t, px, p)| Event::new((px % width) as u32, (px / width) as u32, t, p)),
        );
    }

    if params.noise_rate > 0.0 && duration > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let mean = params.noise_rate * duration as f64 / 1e6;
        let poisson = Poisson::new(mean).map_err(|_| SimError::InvalidParams("noise rate too large"))?;
        let mut noise = Vec::new();
        for px in 0..n {
            let k = poisson.sample(&mut rng) as u64;
            for _ in 0..k {
                let t = rng.random_range(0..duration);
                let p = if rng.random::<bool>() {
                    Polarity::On
                } else {
                    Polarity::Off
                };
                noise.push(Event::new((px % width) as u32, (px / width) as u32, t, p));
            }
        }
        noise.sort_by_key(|e| (e.t, e.y, e.x));
        events = merge_by_time(events, noise);
    }

    Ok(EventStream {
        geometry: g,
        events,
        span_us: Some(duration),
    })
}

fn merge_by_time(a: Vec<Event>, b: Vec<Event>) -> Vec<Event> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut ia, mut ib) = (a.into_iter().peekable(), b.into_iter().peekable());
    loop {
        let take_a = match (ia.peek(), ib.peek()) {
            (Some(x), Some(y)) => x.t <= y.t,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => break,
        };
        out.extend(if take_a { ia.next() } else { ib.next() });
    }
    out
}

/// Noiseless events per 10 ms bin for a source.
pub fn event_rate_estimate<S: IntensitySource + ?Sized>(source: &S, params: &SensorParams) -> Result<f64, SimError> {
    let quiet = SensorParams {
        noise_rate: 0.0,
        ..*params
    };
    let stream = generate_events(source, &quiet)?;
    let bins = source.duration_us() / DEFAULT_BIN_US;
    if bins == 0 {
        return Ok(0.0);
    }
    Ok(stream.events.len() as f64 / bins as f64)
}
